//! Small-sample statistics: OLS with Pearson r and a Fisher-z interval,
//! Spearman rank correlation, quantiles and a paired t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::sum::kahan_sum;
use crate::error::{Error, Result};

/// Least-squares line plus Pearson correlation with a 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub r_ci_low: f64,
    pub r_ci_high: f64,
    pub n: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    kahan_sum(xs.iter().copied()) / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (kahan_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64).sqrt()
}

/// Fits `y = slope * x + intercept` and reports Pearson r.
///
/// The interval is `tanh(atanh(r) -/+ 1.96 / sqrt(n - 3))`, widened to
/// `[-1, 1]` when `n <= 3`. Constant `ys` give `r = 0`.
pub fn ols_pearson(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::Param(format!(
            "length mismatch: {} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Degenerate("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite coordinate".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx = kahan_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let syy = kahan_sum(ys.iter().map(|y| (y - my) * (y - my)));
    let sxy = kahan_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("xs have zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r = if syy > 0.0 {
        (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let (lo, hi) = fisher_interval(r, n);
    Ok(FitResult {
        slope,
        intercept,
        pearson_r: r,
        r_ci_low: lo,
        r_ci_high: hi,
        n,
    })
}

/// 95% Fisher-z interval for a correlation from `n` pairs.
pub fn fisher_interval(r: f64, n: usize) -> (f64, f64) {
    if n <= 3 {
        return (-1.0, 1.0);
    }
    let z = r.atanh();
    let half = 1.96 / ((n - 3) as f64).sqrt();
    ((z - half).tanh().min(r), (z + half).tanh().max(r))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson r of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    Ok(ols_pearson(&average_ranks(xs), &average_ranks(ys))?.pearson_r)
}

/// Linearly interpolated quantile of already sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary plus mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    Summary {
        n: xs.len(),
        mean: mean(xs),
        std: std_dev(xs),
        min: s.first().copied().unwrap_or(f64::NAN),
        q25: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        max: s.last().copied().unwrap_or(f64::NAN),
    }
}

/// Paired t-test on differences `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    pub t: f64,
    /// One-sided p-value for a positive mean.
    pub p_greater: f64,
    pub p_two_sided: f64,
}

pub fn paired_t_test(d: &[f64]) -> Result<PairedTest> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Degenerate(
            "paired test needs at least two differences".into(),
        ));
    }
    let m = mean(d);
    let se = std_dev(d) / (n as f64).sqrt();
    let (t, p_greater, p_two) = if se > 0.0 {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| Error::Degenerate(e.to_string()))?;
        let upper = dist.sf(t);
        (t, upper, 2.0 * dist.sf(t.abs()))
    } else if m > 0.0 {
        (f64::INFINITY, 0.0, 0.0)
    } else if m < 0.0 {
        (f64::NEG_INFINITY, 1.0, 0.0)
    } else {
        (0.0, 0.5, 1.0)
    };
    Ok(PairedTest {
        n,
        mean: m,
        std_err: se,
        t,
        p_greater,
        p_two_sided: p_two,
    })
}
