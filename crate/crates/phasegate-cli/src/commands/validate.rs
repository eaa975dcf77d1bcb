use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use phasegate::numerics::{derive_seed, dft1, Complex64, Rng};
use phasegate::oracle::{
    check_folding_identity, check_jensen_mixture, check_product_convolution,
    concentration_experiment, white_field, wigner1d,
};
use phasegate::phase_space::HusimiParams;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{num, Run, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Wigner marginals and the product-convolution identity.
    Wigner,
    /// Spectral folding under periodic decimation.
    Folding,
    /// Concavity of entropy under spectral mixing.
    Jensen,
    /// Decay of masked-spectrum distortion with the number of windows.
    Concentration,
    All,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ValidateArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Fewer trials and smaller grids.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of one contract.
#[derive(Serialize)]
struct Contract {
    suite: &'static str,
    check: &'static str,
    value: f64,
    tolerance: String,
    pass: bool,
}

const IDENTITY_TOL: f64 = 1e-9;
const SLOPE_RANGE: (f64, f64) = (-0.65, -0.35);

fn signal(n: usize, rng: &mut Rng) -> Vec<Complex64> {
    (0..n).map(|_| rng.complex_gauss(1.0)).collect()
}

fn wigner(run: &mut Run, out: &Path, quick: bool, seed: u64) -> CliResult<Vec<Contract>> {
    let max_n = if quick { 11 } else { 31 };
    let per_n = if quick { 4 } else { 16 };
    let mut t = Table::new(&[
        "n",
        "trial",
        "marginal_time_err",
        "marginal_freq_err",
        "max_imag",
        "product_conv_err",
    ]);
    let (mut worst_marg, mut worst_imag, mut worst_pc) = (0.0f64, 0.0f64, 0.0f64);
    for n in (3..=max_n).step_by(2) {
        for trial in 0..per_n {
            let mut rng = Rng::new(derive_seed(derive_seed(seed, n as u64), trial as u64));
            let s = signal(n, &mut rng);
            let mask = signal(n, &mut rng);
            let w = wigner1d(&s)?;
            let spec = dft1(&s, false);
            let scale = s.iter().map(|v| v.norm_sqr()).sum::<f64>().max(1.0);
            let mt = (0..n)
                .map(|x| {
                    ((0..n).map(|k| w.get(x, k)).sum::<f64>() / n as f64 - s[x].norm_sqr()).abs()
                })
                .fold(0.0, f64::max)
                / scale;
            let mf = (0..n)
                .map(|k| {
                    ((0..n).map(|x| w.get(x, k)).sum::<f64>() / n as f64 - spec[k].norm_sqr()).abs()
                })
                .fold(0.0, f64::max)
                / scale;
            let imag = w.max_imag / (n as f64 * scale);
            let pc_scale =
                mask.iter().map(|v| v.norm_sqr()).sum::<f64>().max(1.0) * scale * n as f64;
            let pc = check_product_convolution(&mask, &s)? / pc_scale;
            worst_marg = worst_marg.max(mt).max(mf);
            worst_imag = worst_imag.max(imag);
            worst_pc = worst_pc.max(pc);
            t.push(vec![
                n.to_string(),
                trial.to_string(),
                num(mt),
                num(mf),
                num(imag),
                num(pc),
            ]);
        }
    }
    run.table(&out.join("wigner.csv"), &t)?;
    let tol = format!("<= {IDENTITY_TOL:e} relative");
    Ok(vec![
        Contract {
            suite: "wigner",
            check: "marginals",
            value: worst_marg,
            tolerance: tol.clone(),
            pass: worst_marg <= IDENTITY_TOL,
        },
        Contract {
            suite: "wigner",
            check: "real_valued",
            value: worst_imag,
            tolerance: tol.clone(),
            pass: worst_imag <= IDENTITY_TOL,
        },
        Contract {
            suite: "wigner",
            check: "product_convolution",
            value: worst_pc,
            tolerance: tol,
            pass: worst_pc <= IDENTITY_TOL,
        },
    ])
}

fn folding(run: &mut Run, out: &Path, quick: bool, seed: u64) -> CliResult<Vec<Contract>> {
    let trials = if quick { 5 } else { 50 };
    let n = 64;
    let mut t = Table::new(&["q", "trial", "err"]);
    let mut worst = 0.0f64;
    for q in [2usize, 4, 8] {
        for trial in 0..trials {
            let mut rng = Rng::new(derive_seed(derive_seed(seed, q as u64), trial as u64));
            let s = signal(n, &mut rng);
            let scale = s.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
            let err = check_folding_identity(&s, q)? / scale;
            worst = worst.max(err);
            t.push(vec![q.to_string(), trial.to_string(), num(err)]);
        }
    }
    run.table(&out.join("folding.csv"), &t)?;
    Ok(vec![Contract {
        suite: "folding",
        check: "periodic_decimation",
        value: worst,
        tolerance: format!("<= {IDENTITY_TOL:e} relative"),
        pass: worst <= IDENTITY_TOL,
    }])
}

fn probability(len: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.uniform().powi(3)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn jensen(run: &mut Run, out: &Path, quick: bool, seed: u64) -> CliResult<Vec<Contract>> {
    let trials = if quick { 20 } else { 200 };
    let mut t = Table::new(&["trial", "components", "lhs", "rhs", "gap", "strict"]);
    let (mut violations, mut strict_flat) = (0usize, 0usize);
    for trial in 0..trials {
        let mut rng = Rng::new(derive_seed(seed, trial as u64));
        let m = 2 + (trial % 4);
        let spectra: Vec<Vec<f64>> = (0..m).map(|_| probability(16, &mut rng)).collect();
        let weights = probability(m, &mut rng);
        let c = check_jensen_mixture(&spectra, &weights)?;
        if !c.holds(1e-12) {
            violations += 1;
        }
        if c.strict && c.lhs - c.rhs <= 0.0 {
            strict_flat += 1;
        }
        t.push(vec![
            trial.to_string(),
            m.to_string(),
            num(c.lhs),
            num(c.rhs),
            num(c.lhs - c.rhs),
            c.strict.to_string(),
        ]);
    }
    run.table(&out.join("jensen.csv"), &t)?;
    Ok(vec![
        Contract {
            suite: "jensen",
            check: "mixture_entropy_dominates",
            value: violations as f64,
            tolerance: "0 violations at 1e-12".into(),
            pass: violations == 0,
        },
        Contract {
            suite: "jensen",
            check: "strict_when_spectra_differ",
            value: strict_flat as f64,
            tolerance: "0 non-strict cases".into(),
            pass: strict_flat == 0,
        },
    ])
}

fn concentration(run: &mut Run, out: &Path, quick: bool, seed: u64) -> CliResult<Vec<Contract>> {
    let p = HusimiParams::new(8, 8.0 / 6.0, 8)?;
    let (ns, trials): (&[usize], usize) = if quick {
        (&[64, 256, 1024], 16)
    } else {
        (&[64, 256, 1024, 4096], 64)
    };
    let curve = concentration_experiment(white_field, 0.5, &p, ns, trials, seed)?;
    let mut t = Table::new(&["n_windows", "grid_side", "l1_mean", "l1_std"]);
    for i in 0..curve.ns.len() {
        t.push(vec![
            curve.ns[i].to_string(),
            curve.grid_sides[i].to_string(),
            num(curve.l1_means[i]),
            num(curve.l1_stds[i]),
        ]);
    }
    run.table(&out.join("concentration.csv"), &t)?;
    run.json(&out.join("concentration_fit.json"), &curve.fit)?;
    let s = curve.fitted_slope;
    Ok(vec![Contract {
        suite: "concentration",
        check: "log_log_slope",
        value: s,
        tolerance: format!("in [{}, {}]", SLOPE_RANGE.0, SLOPE_RANGE.1),
        pass: (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s),
    }])
}

pub fn run(a: ValidateArgs) -> CliResult<()> {
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![
            Suite::Wigner,
            Suite::Folding,
            Suite::Jensen,
            Suite::Concentration,
        ],
        s => vec![s],
    };
    let names: Vec<String> = suites
        .iter()
        .map(|s| {
            s.to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default()
        })
        .collect();
    let config = json!({"suites": names, "quick": a.quick, "out": a.out.display().to_string()});
    let mut run = Run::new("validate", config, a.seed);
    let mut contracts = Vec::new();
    for s in &suites {
        let seed = derive_seed(a.seed, *s as u64);
        contracts.extend(match s {
            Suite::Wigner => wigner(&mut run, &a.out, a.quick, seed)?,
            Suite::Folding => folding(&mut run, &a.out, a.quick, seed)?,
            Suite::Jensen => jensen(&mut run, &a.out, a.quick, seed)?,
            Suite::Concentration => concentration(&mut run, &a.out, a.quick, seed)?,
            Suite::All => unreachable!(),
        });
    }
    let pass = contracts.iter().all(|c| c.pass);
    for c in &contracts {
        eprintln!(
            "{} {}.{}: {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.suite,
            c.check,
            num(c.value),
            c.tolerance
        );
    }
    run.json(
        &a.out.join("report.json"),
        &json!({"pass": pass, "contracts": contracts}),
    )?;
    run.finish(&a.out.join("manifest.json"))?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<String> = contracts
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}.{}", c.suite, c.check))
            .collect();
        Err(CliError::Validation(format!(
            "failed contracts: {}",
            failed.join(", ")
        )))
    }
}
