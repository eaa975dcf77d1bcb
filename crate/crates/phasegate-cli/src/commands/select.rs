use std::path::PathBuf;

use clap::Args;
use phasegate::mri::PSNR_CAP_DB;
use phasegate::selector::{
    select_mask_params, SelectionCriterion, StudySettings, DEFAULT_ALPHAS, DEFAULT_BETAS,
};
use serde_json::json;

use crate::common::{load_kspace, parse_list, HusimiArgs, Preset};
use crate::error::{param, CliResult};
use crate::output::{num, Run, Table};

fn joined(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SelectArgs {
    /// Directory (or file) of multi-coil k-space calibration samples.
    #[arg(long)]
    pub calibration: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    pub accel: f64,
    #[arg(long, default_value_t = 24)]
    pub acs: usize,
    /// Comma-separated alpha grid.
    #[arg(long, default_value_t = joined(&DEFAULT_ALPHAS))]
    pub alphas: String,
    /// Comma-separated beta grid.
    #[arg(long, default_value_t = joined(&DEFAULT_BETAS))]
    pub betas: String,
    /// min_abs_delta_s, min_kspace_l2 or max_zero_filled_psnr.
    #[arg(long, default_value = "min_abs_delta_s")]
    pub criterion: String,
    #[command(flatten)]
    pub husimi: HusimiArgs,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: SelectArgs) -> CliResult<()> {
    let h = a.husimi.resolve(Some(Preset::Mri))?;
    if h.multiscale {
        return param("selection uses single-scale parameters");
    }
    let alphas: Vec<f64> = parse_list(&a.alphas, "alpha")?;
    let betas: Vec<f64> = parse_list(&a.betas, "beta")?;
    let criterion: SelectionCriterion = a.criterion.parse()?;
    let settings = StudySettings {
        accel: a.accel,
        acs: a.acs,
        params: h.params.clone(),
        weighting: h.weighting,
        seed: a.seed,
    };
    let config = json!({
        "calibration": a.calibration.display().to_string(),
        "alphas": alphas, "betas": betas, "criterion": criterion.name(),
        "settings": settings,
        "out": a.out.display().to_string(),
    });
    let mut run = Run::new("select", config, a.seed);
    let (ids, samples) = load_kspace(&a.calibration, &mut run.inputs)?;
    let result = select_mask_params(&samples, &ids, &alphas, &betas, criterion, &settings)?;
    let cap = |v: f64| {
        if v.is_infinite() {
            v.signum() * PSNR_CAP_DB
        } else {
            v
        }
    };
    let mut table = Table::new(&["alpha", "beta", "n", "mean", "std", "min", "max"]);
    for r in &result.score_table {
        table.push(vec![
            num(r.alpha),
            num(r.beta),
            r.n.to_string(),
            num(cap(r.mean)),
            num(r.std),
            num(cap(r.min)),
            num(cap(r.max)),
        ]);
    }
    run.table(&a.out.join("scores.csv"), &table)?;
    run.json(&a.out.join("selection.json"), &result)?;
    run.finish(&a.out.join("manifest.json"))
}
