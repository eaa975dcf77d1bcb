use std::path::PathBuf;

use clap::{Args, ValueEnum};
use phasegate::arr1::Arr1;
use phasegate::masks::{
    AntennaAxis, AntennaMaskSpec, Geometry, KSpaceFamily, KSpaceMaskSpec, PatchMaskSpec,
};
use serde_json::json;

use crate::common::{MaskSpec, Sidecar};
use crate::error::{param, CliResult};
use crate::output::Run;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MaskKind {
    /// Phase-encoding lines with a central ACS block.
    Kspace,
    /// Square patches on an image grid.
    Patch,
    /// Deactivated antennas on a channel matrix.
    Antenna,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct MaskgenArgs {
    #[arg(value_enum)]
    pub kind: MaskKind,
    /// Phase-encoding lines (kspace).
    #[arg(long)]
    pub n_lines: Option<usize>,
    /// Readout samples per line (kspace, default n-lines).
    #[arg(long)]
    pub readout: Option<usize>,
    /// Fully sampled central lines (kspace).
    #[arg(long, default_value_t = 24)]
    pub acs: usize,
    /// Acceleration factor (kspace).
    #[arg(long, default_value_t = 4.0)]
    pub accel: f64,
    /// periodic, random, poisson_gap or parametric (kspace).
    #[arg(long, default_value = "random")]
    pub family: String,
    /// Parametric line-density coefficient on |k| (kspace).
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Parametric line-density exponent (kspace).
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Patches per side of a square patch grid (patch).
    #[arg(long)]
    pub patches: Option<usize>,
    /// Patch grid rows (patch, default patches).
    #[arg(long)]
    pub patch_rows: Option<usize>,
    /// Patch grid columns (patch, default patches).
    #[arg(long)]
    pub patch_cols: Option<usize>,
    /// Patch side in pixels (patch).
    #[arg(long, default_value_t = 16)]
    pub patch_px: usize,
    /// Keep interval of the periodic patch lattice (patch).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Kept patches (patch) or deactivated antennas per axis (antenna) for random geometry.
    #[arg(long)]
    pub budget: Option<usize>,
    /// periodic or random (patch, antenna).
    #[arg(long, default_value = "periodic")]
    pub geometry: String,
    #[arg(long, default_value_t = 16)]
    pub n_rx: usize,
    #[arg(long, default_value_t = 64)]
    pub n_tx: usize,
    /// Deactivation interval (antenna).
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// rx, tx or both (antenna).
    #[arg(long, default_value = "tx")]
    pub axis: String,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Mask file; the sidecar and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

fn spec_from(a: &MaskgenArgs) -> CliResult<MaskSpec> {
    Ok(match a.kind {
        MaskKind::Kspace => {
            let Some(n_lines) = a.n_lines else {
                return param("kspace masks need --n-lines");
            };
            MaskSpec::Kspace(KSpaceMaskSpec {
                n_lines,
                readout: a.readout.unwrap_or(n_lines),
                acs: a.acs,
                accel: a.accel,
                family: KSpaceFamily::parse(&a.family, a.alpha, a.beta)?,
                seed: a.seed,
            })
        }
        MaskKind::Patch => {
            let rows = a.patch_rows.or(a.patches);
            let cols = a.patch_cols.or(a.patches);
            let (Some(patch_rows), Some(patch_cols)) = (rows, cols) else {
                return param("patch masks need --patches or --patch-rows and --patch-cols");
            };
            MaskSpec::Patch(PatchMaskSpec {
                patch_rows,
                patch_cols,
                patch_px: a.patch_px,
                geometry: a.geometry.parse::<Geometry>()?,
                interval_k: a.k,
                budget: a.budget,
                seed: a.seed,
            })
        }
        MaskKind::Antenna => MaskSpec::Antenna(AntennaMaskSpec {
            n_rx: a.n_rx,
            n_tx: a.n_tx,
            geometry: a.geometry.parse::<Geometry>()?,
            interval_d: a.d,
            off_budget: a.budget,
            axis: a.axis.parse::<AntennaAxis>()?,
            seed: a.seed,
        }),
    })
}

pub fn run(a: MaskgenArgs) -> CliResult<()> {
    if a.out.extension().is_some_and(|x| x == "json") {
        return param("--out names the mask file; its sidecar gets the .json extension");
    }
    let spec = spec_from(&a)?;
    let mask = spec.build()?;
    let sidecar = Sidecar::describe(spec.clone(), &mask);
    let config = json!({"spec": spec, "out": a.out.display().to_string()});
    let mut run = Run::new("maskgen", config, a.seed);
    run.bytes(&a.out, &Arr1::from_mask(&mask).to_bytes())?;
    run.json(&a.out.with_extension("json"), &sidecar)?;
    let stem = a
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    run.finish(&a.out.with_file_name(format!("{stem}.manifest.json")))
}
