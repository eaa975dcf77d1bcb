use std::path::PathBuf;

use clap::Args;
use phasegate::masks::KSpaceFamily;
use phasegate::phase_space::Weighting;
use phasegate::selector::{ablation_sweep, AblationGrid};
use serde_json::json;

use crate::common::{load_kspace, parse_list};
use crate::error::CliResult;
use crate::output::{num, opt_num, Run, Table};

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct AblateArgs {
    /// Directory (or file) of multi-coil k-space samples.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated window sizes.
    #[arg(long, default_value = "12,24,48,96")]
    pub wins: String,
    /// Comma-separated sigma / win ratios.
    #[arg(long, default_value = "0.25,0.5")]
    pub sigma_ratios: String,
    /// Comma-separated hop / win ratios.
    #[arg(long, default_value = "0.25,0.5")]
    pub hop_ratios: String,
    /// Comma-separated line-mask families.
    #[arg(long, default_value = "periodic,random,poisson_gap")]
    pub families: String,
    /// Coefficients used when the families include `parametric`.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Comma-separated acceleration factors.
    #[arg(long, default_value = "4")]
    pub accels: String,
    #[arg(long, default_value_t = 24)]
    pub acs: usize,
    /// uniform or energy.
    #[arg(long, default_value = "uniform")]
    pub weighting: String,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: AblateArgs) -> CliResult<()> {
    let grid = AblationGrid {
        wins: parse_list(&a.wins, "window")?,
        sigma_ratios: parse_list(&a.sigma_ratios, "sigma ratio")?,
        hop_ratios: parse_list(&a.hop_ratios, "hop ratio")?,
        families: parse_list::<String>(&a.families, "family")?
            .iter()
            .map(|f| KSpaceFamily::parse(f, a.alpha, a.beta))
            .collect::<Result<_, _>>()?,
        accels: parse_list(&a.accels, "acceleration")?,
    };
    grid.validate()?;
    let weighting: Weighting = a.weighting.parse()?;
    let config = json!({
        "input": a.input.display().to_string(), "grid": grid, "acs": a.acs,
        "weighting": weighting, "out": a.out.display().to_string(),
    });
    let mut run = Run::new("ablate", config, a.seed);
    let (ids, samples) = load_kspace(&a.input, &mut run.inputs)?;
    let result = ablation_sweep(&samples, &grid, a.acs, weighting, a.seed)?;

    let mut rows = Table::new(&[
        "win",
        "sigma",
        "hop",
        "family",
        "accel",
        "sample",
        "abs_delta_s",
        "skipped",
    ]);
    for r in &result.rows {
        rows.push(vec![
            r.win.to_string(),
            num(r.sigma),
            r.hop.to_string(),
            r.family.clone(),
            num(r.accel),
            ids[r.sample].clone(),
            opt_num(r.abs_delta_s),
            r.skipped.to_string(),
        ]);
    }
    let mut cells = Table::new(&[
        "win",
        "sigma_ratio",
        "hop_ratio",
        "sigma",
        "hop",
        "family",
        "accel",
        "skipped",
        "n",
        "mean",
        "std",
        "min",
        "q25",
        "median",
        "q75",
        "max",
    ]);
    for c in &result.cells {
        let stat = |v: f64| if c.skipped { String::new() } else { num(v) };
        cells.push(vec![
            c.win.to_string(),
            num(c.sigma_ratio),
            num(c.hop_ratio),
            num(c.sigma),
            c.hop.to_string(),
            c.family.clone(),
            num(c.accel),
            c.skipped.to_string(),
            c.n.to_string(),
            stat(c.mean),
            stat(c.std),
            stat(c.min),
            stat(c.q25),
            stat(c.median),
            stat(c.q75),
            stat(c.max),
        ]);
    }
    let mut neighbours = Table::new(&["win_a", "win_b", "cells", "spearman"]);
    for n in &result.neighbours {
        neighbours.push(vec![
            n.win_a.to_string(),
            n.win_b.to_string(),
            n.cells.to_string(),
            opt_num(n.spearman),
        ]);
    }
    run.table(&a.out.join("sweep.csv"), &rows)?;
    run.table(&a.out.join("cells.csv"), &cells)?;
    run.table(&a.out.join("neighbours.csv"), &neighbours)?;
    run.finish(&a.out.join("manifest.json"))
}
