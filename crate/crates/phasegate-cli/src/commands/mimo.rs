use std::path::PathBuf;

use clap::Args;
use phasegate::arr1::Arr1;
use phasegate::masks::{AntennaAxis, Geometry};
use phasegate::mimo::{gen_channel, run_study, summarize_study, ChannelConfig, MimoStudy};
use phasegate::numerics::derive_seed;
use serde_json::json;

use crate::common::{parse_list, HusimiArgs, Preset};
use crate::error::{param, CliResult};
use crate::output::{num, Run, Table};

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct MimoArgs {
    #[arg(long, default_value_t = 16)]
    pub n_rx: usize,
    #[arg(long, default_value_t = 64)]
    pub n_tx: usize,
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    /// Paths per cluster.
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    /// Angular spread in degrees.
    #[arg(long, default_value_t = 7.5)]
    pub spread: f64,
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 200)]
    pub realizations: usize,
    /// Comma-separated deactivation intervals.
    #[arg(long, default_value = "2,3,4,6,8")]
    pub intervals: String,
    /// Comma-separated geometries.
    #[arg(long, default_value = "periodic,random")]
    pub geometries: String,
    /// rx, tx or both.
    #[arg(long, default_value = "tx")]
    pub axis: String,
    /// Rank of the completion baseline.
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Completion iterations.
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[command(flatten)]
    pub husimi: HusimiArgs,
    /// Also write the noiseless channel batch as `channels.arr`.
    #[arg(long)]
    pub save_channels: bool,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: MimoArgs) -> CliResult<()> {
    let h = a.husimi.resolve(Some(Preset::Mimo))?;
    if h.multiscale {
        return param("channel audits use single-scale parameters");
    }
    if a.realizations == 0 {
        return param("realizations must be >= 1");
    }
    let study = MimoStudy {
        channel: ChannelConfig {
            n_rx: a.n_rx,
            n_tx: a.n_tx,
            n_clusters: a.clusters,
            paths_per_cluster: a.paths,
            angular_spread_deg: a.spread,
            snr_db: a.snr,
            seed: a.seed,
        },
        realizations: a.realizations,
        intervals: parse_list(&a.intervals, "interval")?,
        geometries: parse_list::<String>(&a.geometries, "geometry")?
            .iter()
            .map(|g| g.parse::<Geometry>())
            .collect::<Result<_, _>>()?,
        axis: a.axis.parse::<AntennaAxis>()?,
        rank: a.rank,
        iters: a.iters,
        weighting: h.weighting,
    };
    let config = json!({"study": study, "husimi": h, "save_channels": a.save_channels, "out": a.out.display().to_string()});
    let mut run = Run::new("mimo", config, a.seed);
    let rows = run_study(&study, &h.params)?;

    let mut table = Table::new(&[
        "realization",
        "seed",
        "geometry",
        "d",
        "off_count",
        "delta_s",
        "abs_delta_s",
        "nmse",
    ]);
    for r in &rows {
        table.push(vec![
            r.realization.to_string(),
            r.seed.to_string(),
            r.geometry.to_string(),
            r.d.to_string(),
            r.off_count.to_string(),
            num(r.delta_s),
            num(r.abs_delta_s),
            num(r.nmse),
        ]);
    }
    let mut summary = Table::new(&["geometry", "d", "mean_delta_s", "mean_nmse"]);
    for (g, d, ds, e) in summarize_study(&rows) {
        summary.push(vec![g.to_string(), d.to_string(), num(ds), num(e)]);
    }
    run.table(&a.out.join("mimo.csv"), &table)?;
    run.table(&a.out.join("mimo_summary.csv"), &summary)?;
    if a.save_channels {
        let hs = (0..a.realizations)
            .map(|i| {
                let cfg = ChannelConfig {
                    seed: derive_seed(a.seed, i as u64),
                    ..study.channel.clone()
                };
                gen_channel(&cfg).map(|c| c.h)
            })
            .collect::<Result<Vec<_>, _>>()?;
        run.bytes(
            &a.out.join("channels.arr"),
            &Arr1::from_grids(&hs)?.to_bytes(),
        )?;
    }
    run.finish(&a.out.join("manifest.json"))
}
