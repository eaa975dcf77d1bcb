use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use phasegate::numerics::{ols_pearson, FitResult};
use serde_json::json;

use crate::error::{param, CliError, CliResult};
use crate::output::{num, Run, Table};

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct CorrelateArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Column used as x.
    #[arg(long)]
    pub x: String,
    /// Column used as y.
    #[arg(long)]
    pub y: String,
    /// Leave the generation time out of the SVG.
    #[arg(long)]
    pub no_timestamp: bool,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn column(headers: &csv::StringRecord, name: &str) -> CliResult<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        CliError::Param(format!(
            "no column '{name}' (have: {})",
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

/// Scatter plot with the fitted line, in a fixed 480x360 frame.
pub fn scatter_svg(
    xs: &[f64],
    ys: &[f64],
    fit: &FitResult,
    x_name: &str,
    y_name: &str,
    stamp: Option<u64>,
) -> String {
    let (w, h, m) = (480.0, 360.0, 48.0);
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    if let Some(t) = stamp {
        s += &format!("<!-- generated at unix time {t} -->\n");
    }
    s += &format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    );
    for (x, y) in xs.iter().zip(ys) {
        s += &format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            px(*x),
            py(*y)
        );
    }
    let (ya, yb) = (
        fit.slope * x0 + fit.intercept,
        fit.slope * x1 + fit.intercept,
    );
    s += &format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#d62728\"/>\n",
        px(x0),
        py(ya),
        px(x1),
        py(yb)
    );
    let esc = |t: &str| {
        t.replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;")
    };
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
        w / 2.0,
        h - 12.0,
        esc(x_name)
    );
    s += &format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        esc(y_name)
    );
    s += &format!(
        "<text x=\"{m}\" y=\"32\" font-size=\"12\">r = {:.3} [{:.3}, {:.3}], n = {}</text>\n",
        fit.pearson_r, fit.r_ci_low, fit.r_ci_high, fit.n
    );
    s += "</svg>\n";
    s
}

pub fn run(a: CorrelateArgs) -> CliResult<()> {
    let config = json!({
        "input": a.input.display().to_string(), "x": a.x, "y": a.y,
        "no_timestamp": a.no_timestamp, "out": a.out.display().to_string(),
    });
    let mut run = Run::new("correlate", config, a.seed);
    let bytes = run.inputs.read(&a.input)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let headers = rdr.headers()?.clone();
    let (ix, iy) = (column(&headers, &a.x)?, column(&headers, &a.y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Param(format!(
                        "row {} has no numeric value in column {}",
                        line + 2,
                        headers.get(i).unwrap_or("")
                    ))
                })
        };
        xs.push(get(ix)?);
        ys.push(get(iy)?);
    }
    if xs.len() < 3 {
        return param(format!("need at least three rows, found {}", xs.len()));
    }
    let fit = ols_pearson(&xs, &ys)?;
    let stamp = (!a.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let mut points = Table::new(&[a.x.as_str(), a.y.as_str()]);
    for (x, y) in xs.iter().zip(&ys) {
        points.push(vec![num(*x), num(*y)]);
    }
    run.json(
        &a.out.join("fit.json"),
        &json!({"x": a.x, "y": a.y, "fit": fit}),
    )?;
    run.table(&a.out.join("points.csv"), &points)?;
    run.bytes(
        &a.out.join("scatter.svg"),
        scatter_svg(&xs, &ys, &fit, &a.x, &a.y, stamp).as_bytes(),
    )?;
    run.finish(&a.out.join("manifest.json"))
}
