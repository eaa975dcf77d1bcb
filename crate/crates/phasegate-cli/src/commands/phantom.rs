use std::path::PathBuf;

use clap::Args;
use phasegate::arr1::Arr1;
use phasegate::mri::phantom;
use phasegate::numerics::derive_seed;
use serde_json::json;

use crate::error::{param, CliResult};
use crate::output::Run;

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    pub rows: usize,
    #[arg(long, default_value_t = 256)]
    pub cols: usize,
    #[arg(long, default_value_t = 8)]
    pub coils: usize,
    /// Number of phantoms.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, env = "PHASEGATE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: PhantomArgs) -> CliResult<()> {
    if a.count == 0 {
        return param("count must be >= 1");
    }
    let config = json!({
        "rows": a.rows, "cols": a.cols, "coils": a.coils, "count": a.count, "out": a.out.display().to_string(),
    });
    let mut run = Run::new("phantom", config, a.seed);
    let mut samples = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let seed = derive_seed(a.seed, i as u64);
        let k = phantom(a.rows, a.cols, a.coils, seed)?;
        let name = format!("phantom_{i:03}.arr");
        run.bytes(&a.out.join(&name), &Arr1::from_grids(k.data())?.to_bytes())?;
        samples.push(json!({"file": name, "seed": seed, "coils": a.coils}));
    }
    run.set_details(json!({
        "layout": {"axes": ["coil", "readout", "phase_encode"], "centered": true, "dtype": "c128"},
        "samples": samples,
    }));
    run.finish(&a.out.join("manifest.json"))
}
