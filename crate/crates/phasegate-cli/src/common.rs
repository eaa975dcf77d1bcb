//! Arguments and loaders shared by several commands.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use phasegate::arr1::Arr1;
use phasegate::masks::{
    antenna_mask, kspace_mask, patch_mask, AntennaMaskSpec, KSpaceMaskSpec, Mask, PatchMaskSpec,
};
use phasegate::mri::MultiCoilKSpace;
use phasegate::numerics::Grid2C;
use phasegate::phase_space::{HusimiParams, Weighting};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{param, CliError, CliResult};
use crate::output::Inputs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Multi-scale ladder with energy weighting.
    Vision,
    /// Window 32, sigma 16, hop 10, uniform weighting.
    Mri,
    /// Window 4, sigma 1, hop 1, energy weighting.
    Mimo,
}

#[derive(Args, Clone, Debug)]
pub struct HusimiArgs {
    /// Parameter preset; explicit flags override its values.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Window side in samples.
    #[arg(long)]
    pub win: Option<usize>,
    /// Gaussian window width in samples (default win / 6).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Window stride (default win).
    #[arg(long)]
    pub hop: Option<usize>,
    /// Global entropy weighting: uniform or energy.
    #[arg(long)]
    pub weighting: Option<String>,
    /// Average energy-weighted entropies over the default window ladder.
    #[arg(long)]
    pub multiscale: bool,
}

/// Husimi settings after presets and overrides are applied.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub preset: Option<Preset>,
    pub params: HusimiParams,
    pub weighting: Weighting,
    pub multiscale: bool,
}

impl HusimiArgs {
    pub fn resolve(&self, fallback: Option<Preset>) -> CliResult<Resolved> {
        let preset = self.preset.or(fallback);
        let (base, weighting, multiscale) = match preset {
            Some(Preset::Vision) => (
                HusimiParams::new(32, 32.0 / 6.0, 32)?,
                Weighting::Energy,
                true,
            ),
            Some(Preset::Mri) => (HusimiParams::mri(), Weighting::Uniform, false),
            Some(Preset::Mimo) => (HusimiParams::mimo(), Weighting::Energy, false),
            None => {
                let Some(w) = self.win else {
                    return param("give --preset or --win");
                };
                (
                    HusimiParams::new(w, w as f64 / 6.0, w)?,
                    Weighting::Uniform,
                    false,
                )
            }
        };
        let win = self.win.unwrap_or(base.win);
        let (sigma, hop) = if self.win.is_some() && preset.is_none() {
            (
                self.sigma.unwrap_or(win as f64 / 6.0),
                self.hop.unwrap_or(win),
            )
        } else {
            (
                self.sigma.unwrap_or(base.sigma),
                self.hop.unwrap_or(base.hop),
            )
        };
        let weighting = match &self.weighting {
            Some(w) => w.parse::<Weighting>()?,
            None => weighting,
        };
        if self.multiscale && weighting != Weighting::Energy {
            return param("multi-scale audits use energy weighting");
        }
        Ok(Resolved {
            preset,
            params: HusimiParams::new(win, sigma, hop)?,
            weighting,
            multiscale: multiscale || self.multiscale,
        })
    }
}

/// `*.arr` files of a directory in name order, or the single file given.
pub fn list_arr(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::Io(format!("{} does not exist", path.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "arr"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Io(format!("no .arr files in {}", path.display())));
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Multi-coil k-space samples: one `[coils, rows, cols]` or `[rows, cols]` array per file.
pub fn load_kspace(
    path: &Path,
    inputs: &mut Inputs,
) -> CliResult<(Vec<String>, Vec<MultiCoilKSpace>)> {
    let mut ids = Vec::new();
    let mut samples = Vec::new();
    for f in list_arr(path)? {
        let arr = Arr1::from_bytes(&inputs.read(&f)?)?;
        samples.push(MultiCoilKSpace::new(arr.to_grids()?)?);
        ids.push(stem(&f));
    }
    Ok((ids, samples))
}

/// Image fields: 2D arrays are one sample, 3D arrays a batch along the first axis.
pub fn load_fields(path: &Path, inputs: &mut Inputs) -> CliResult<(Vec<String>, Vec<Grid2C>)> {
    let mut ids = Vec::new();
    let mut fields = Vec::new();
    for f in list_arr(path)? {
        let arr = Arr1::from_bytes(&inputs.read(&f)?)?;
        let grids = arr.to_grids()?;
        let batch = arr.shape().len() == 3;
        for (i, g) in grids.into_iter().enumerate() {
            ids.push(if batch {
                format!("{}#{i}", stem(&f))
            } else {
                stem(&f)
            });
            fields.push(g);
        }
    }
    Ok((ids, fields))
}

/// Mask generator description written next to every generated mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSpec {
    Kspace(KSpaceMaskSpec),
    Patch(PatchMaskSpec),
    Antenna(AntennaMaskSpec),
}

impl MaskSpec {
    pub fn build(&self) -> CliResult<Mask> {
        Ok(match self {
            Self::Kspace(s) => kspace_mask(s)?,
            Self::Patch(s) => patch_mask(s)?,
            Self::Antenna(s) => antenna_mask(s)?,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Kspace(s) => s.seed = seed,
            Self::Patch(s) => s.seed = seed,
            Self::Antenna(s) => s.seed = seed,
        }
        out
    }
}

/// Sidecar: the generator spec plus facts about the mask it produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: MaskSpec,
    pub shape: (usize, usize),
    pub keep_count: usize,
    pub keep_fraction: f64,
}

impl Sidecar {
    pub fn describe(spec: MaskSpec, m: &Mask) -> Self {
        let (r, c) = m.shape();
        Self {
            spec,
            shape: (r, c),
            keep_count: m.keep_count(),
            keep_fraction: m.keep_count() as f64 / (r * c) as f64,
        }
    }
}

/// Loads a mask from an ARR1 file or regenerates it from a JSON sidecar.
pub fn load_mask(path: &Path, inputs: &mut Inputs) -> CliResult<(Mask, serde_json::Value)> {
    let bytes = inputs.read(path)?;
    if path.extension().is_some_and(|x| x == "json") {
        let side: Sidecar = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Io(format!("{} is not a mask sidecar: {e}", path.display())))?;
        let m = side.spec.build()?;
        if m.shape() != side.shape || m.keep_count() != side.keep_count {
            return Err(CliError::Io(format!(
                "{} does not reproduce its recorded mask",
                path.display()
            )));
        }
        Ok((
            m,
            json!({"sidecar": path.display().to_string(), "spec": side.spec}),
        ))
    } else {
        let m = Arr1::from_bytes(&bytes)?.to_mask()?;
        Ok((m, json!({"file": path.display().to_string()})))
    }
}

/// Parses a comma-separated list of values.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| CliError::Param(format!("bad {what} value '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> HusimiArgs {
        HusimiArgs {
            preset: None,
            win: None,
            sigma: None,
            hop: None,
            weighting: None,
            multiscale: false,
        }
    }

    #[test]
    fn presets_resolve_to_documented_values() {
        let mri = HusimiArgs {
            preset: Some(Preset::Mri),
            ..args()
        }
        .resolve(None)
        .unwrap();
        assert_eq!(
            (mri.params.win, mri.params.sigma, mri.params.hop),
            (32, 16.0, 10)
        );
        assert_eq!(mri.weighting, Weighting::Uniform);
        let mimo = args().resolve(Some(Preset::Mimo)).unwrap();
        assert_eq!(
            (mimo.params.win, mimo.params.sigma, mimo.params.hop),
            (4, 1.0, 1)
        );
        assert_eq!(mimo.weighting, Weighting::Energy);
        let vision = HusimiArgs {
            preset: Some(Preset::Vision),
            ..args()
        }
        .resolve(None)
        .unwrap();
        assert!(vision.multiscale);
        assert_eq!(vision.weighting, Weighting::Energy);
    }

    #[test]
    fn overrides_beat_presets() {
        let r = HusimiArgs {
            preset: Some(Preset::Mri),
            win: Some(16),
            hop: Some(5),
            ..args()
        }
        .resolve(None)
        .unwrap();
        assert_eq!((r.params.win, r.params.sigma, r.params.hop), (16, 16.0, 5));
    }

    #[test]
    fn bare_window_gets_defaults() {
        let r = HusimiArgs {
            win: Some(12),
            ..args()
        }
        .resolve(None)
        .unwrap();
        assert_eq!((r.params.win, r.params.sigma, r.params.hop), (12, 2.0, 12));
        assert!(args().resolve(None).is_err());
    }

    #[test]
    fn sidecar_round_trips() {
        let spec = MaskSpec::Kspace(KSpaceMaskSpec {
            n_lines: 32,
            readout: 16,
            acs: 4,
            accel: 4.0,
            family: phasegate::masks::KSpaceFamily::Random,
            seed: 9,
        });
        let m = spec.build().unwrap();
        let side = Sidecar::describe(spec.clone(), &m);
        let back: Sidecar = serde_json::from_str(&serde_json::to_string(&side).unwrap()).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.spec.build().unwrap(), m);
    }
}
