use std::path::PathBuf;

use clap::Args;
use phasegate::masks::{apply_mask, Geometry, KSpaceFamily, KSpaceMaskSpec, Mask, PatchMaskSpec};
use phasegate::mri::{kspace_l2, psnr, rss_reconstruct, ssim, zero_fill, PSNR_CAP_DB};
use phasegate::numerics::stats::{mean, std_dev};
use phasegate::numerics::{derive_seed, Grid2C};
use phasegate::phase_space::{
    default_scale_ladder, delta_s, multiscale_delta_s, DeltaSReport, HopRule,
};
use serde_json::json;

use crate::common::{load_fields, load_kspace, load_mask, HusimiArgs, MaskSpec, Preset, Resolved};
use crate::error::{param, CliResult};
use crate::output::{num, opt_num, Run, Table};

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct AuditArgs {
    /// ARR1 file or directory of `.arr` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Inputs are multi-coil k-space; the acquisition is the zero-filled reconstruction.
    #[arg(long)]
    pub kspace: bool,
    /// Mask as an ARR1 file or a maskgen JSON sidecar.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Inline line-mask family (k-space inputs).
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 4.0)]
    pub accel: f64,
    #[arg(long, default_value_t = 24)]
    pub acs: usize,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Inline patch mask with this patch side (image inputs).
    #[arg(long)]
    pub patch_px: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value = "periodic")]
    pub geometry: String,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Seed of inline masks; by default each sample derives its own from --seed.
    #[arg(long)]
    pub mask_seed: Option<u64>,
    #[command(flatten)]
    pub husimi: HusimiArgs,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

enum MaskSource {
    Fixed(Mask),
    Inline(MaskSpec),
}

impl MaskSource {
    fn for_sample(&self, shape: (usize, usize), seed: u64) -> CliResult<(Mask, Option<u64>)> {
        let m = match self {
            Self::Fixed(m) => return Ok((m.clone(), None)),
            Self::Inline(spec) => spec.with_seed(seed).build()?,
        };
        if m.shape() != shape {
            return param(format!(
                "mask shape {:?} does not match data shape {shape:?}",
                m.shape()
            ));
        }
        Ok((m, Some(seed)))
    }
}

fn inline_spec(a: &AuditArgs, shape: (usize, usize)) -> CliResult<Option<MaskSpec>> {
    let (rows, cols) = shape;
    match (&a.family, a.patch_px) {
        (Some(_), Some(_)) => param("give either --family or --patch-px, not both"),
        (Some(f), None) => {
            if !a.kspace {
                return param("--family masks apply to --kspace inputs");
            }
            Ok(Some(MaskSpec::Kspace(KSpaceMaskSpec {
                n_lines: cols,
                readout: rows,
                acs: a.acs,
                accel: a.accel,
                family: KSpaceFamily::parse(f, a.alpha, a.beta)?,
                seed: 0,
            })))
        }
        (None, Some(px)) => {
            if px == 0 || rows % px != 0 || cols % px != 0 {
                return param(format!(
                    "patch side {px} does not tile a {rows}x{cols} field"
                ));
            }
            Ok(Some(MaskSpec::Patch(PatchMaskSpec {
                patch_rows: rows / px,
                patch_cols: cols / px,
                patch_px: px,
                geometry: a.geometry.parse::<Geometry>()?,
                interval_k: a.k,
                budget: a.budget,
                seed: 0,
            })))
        }
        (None, None) => Ok(None),
    }
}

fn audit_pair(reference: &Grid2C, acquired: &Grid2C, h: &Resolved) -> CliResult<DeltaSReport> {
    if h.multiscale {
        let (rows, cols) = reference.shape();
        let ladder = default_scale_ladder(rows, cols);
        if ladder.is_empty() {
            return param(format!("no ladder window fits a {rows}x{cols} field"));
        }
        Ok(multiscale_delta_s(
            reference,
            acquired,
            &ladder,
            HopRule::NonOverlapping,
        )?)
    } else {
        Ok(delta_s(reference, acquired, &h.params, h.weighting)?)
    }
}

pub fn run(a: AuditArgs) -> CliResult<()> {
    let h = a.husimi.resolve(Some(if a.kspace {
        Preset::Mri
    } else {
        Preset::Vision
    }))?;
    let config = json!({
        "input": a.input.display().to_string(),
        "kspace": a.kspace,
        "mask": a.mask.as_ref().map(|p| p.display().to_string()),
        "family": a.family, "accel": a.accel, "acs": a.acs, "alpha": a.alpha, "beta": a.beta,
        "patch_px": a.patch_px, "k": a.k, "geometry": a.geometry, "budget": a.budget,
        "mask_seed": a.mask_seed,
        "husimi": h,
        "out": a.out.display().to_string(),
    });
    let mut run = Run::new("audit", config, a.seed);
    let fixed = match &a.mask {
        Some(p) => {
            if a.family.is_some() || a.patch_px.is_some() {
                return param("--mask excludes inline mask flags");
            }
            Some(load_mask(p, &mut run.inputs)?.0)
        }
        None => None,
    };

    let mut header = vec![
        "id",
        "mask_seed",
        "keep_fraction",
        "s_ref",
        "s_acq",
        "delta_s",
        "abs_delta_s",
    ];
    if a.kspace {
        header.extend(["psnr_db", "ssim", "kspace_l2"]);
    }
    let mut table = Table::new(&header);
    let mut scales = Table::new(&["id", "win", "sigma", "hop", "s_ref", "s_acq", "used"]);
    let mut deltas = Vec::new();
    let mut record =
        |id: &str, seed: Option<u64>, m: &Mask, r: &DeltaSReport, extra: Vec<String>| {
            let (rows, cols) = m.shape();
            let mut row = vec![
                id.to_string(),
                seed.map(|s| s.to_string()).unwrap_or_default(),
                num(m.keep_count() as f64 / (rows * cols) as f64),
                num(r.s_ref),
                num(r.s_acq),
                num(r.delta),
                num(r.abs_delta),
            ];
            row.extend(extra);
            table.push(row);
            for e in r.scales.iter().flatten() {
                scales.push(vec![
                    id.to_string(),
                    e.win.to_string(),
                    num(e.sigma),
                    e.hop.to_string(),
                    opt_num(e.s_ref),
                    opt_num(e.s_acq),
                    e.used.to_string(),
                ]);
            }
            deltas.push(r.delta);
        };

    if a.kspace {
        let (ids, samples) = load_kspace(&a.input, &mut run.inputs)?;
        for (i, (id, k)) in ids.iter().zip(&samples).enumerate() {
            let source = match (&fixed, inline_spec(&a, k.shape())?) {
                (Some(m), _) => MaskSource::Fixed(m.clone()),
                (None, Some(spec)) => MaskSource::Inline(spec),
                (None, None) => return param("give --mask, --family or --patch-px"),
            };
            let (m, seed) = source.for_sample(
                k.shape(),
                a.mask_seed.unwrap_or(derive_seed(a.seed, i as u64)),
            )?;
            let full = rss_reconstruct(k)?;
            let zf = zero_fill(k, &m, full.norm_factor)?;
            let r = audit_pair(&full.to_field(), &zf.to_field(), &h)?;
            let extra = vec![
                num(psnr(&full, &zf, 1.0)?.min(PSNR_CAP_DB)),
                num(ssim(&full, &zf)?),
                num(kspace_l2(k, &m)?),
            ];
            record(id, seed, &m, &r, extra);
        }
    } else {
        let (ids, fields) = load_fields(&a.input, &mut run.inputs)?;
        for (i, (id, f)) in ids.iter().zip(&fields).enumerate() {
            let source = match (&fixed, inline_spec(&a, f.shape())?) {
                (Some(m), _) => MaskSource::Fixed(m.clone()),
                (None, Some(spec)) => MaskSource::Inline(spec),
                (None, None) => return param("give --mask, --family or --patch-px"),
            };
            let (m, seed) = source.for_sample(
                f.shape(),
                a.mask_seed.unwrap_or(derive_seed(a.seed, i as u64)),
            )?;
            let acquired = apply_mask(f, &m)?;
            let r = audit_pair(f, &acquired, &h)?;
            record(id, seed, &m, &r, Vec::new());
        }
    }

    let abs: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
    run.table(&a.out.join("audit.csv"), &table)?;
    if h.multiscale {
        run.table(&a.out.join("scales.csv"), &scales)?;
    }
    run.json(
        &a.out.join("summary.json"),
        &json!({
            "n": deltas.len(),
            "mean_delta_s": mean(&deltas),
            "mean_abs_delta_s": mean(&abs),
            "std_abs_delta_s": std_dev(&abs),
        }),
    )?;
    run.finish(&a.out.join("manifest.json"))
}
