//! Phase-space band-entropy audits for sampling and masking policies.
//!
//! The crate computes Gaussian-windowed local power spectra (Husimi densities)
//! of 2D fields, turns them into band-normalized Shannon entropies, and
//! reports how much a mask or undersampling pattern changes that entropy.
//! Around that core it provides mask generators for image patches, MRI
//! phase-encoding lines and antenna arrays, a multi-coil MRI emulator, a
//! clustered MIMO channel simulator, a mask-parameter selector, and a set of
//! brute-force checks of the underlying Wigner/folding identities.
//!
//! ```
//! use phasegate::numerics::{Grid2C, Rng};
//! use phasegate::phase_space::{delta_s, HusimiParams, Weighting};
//!
//! let mut rng = Rng::new(7);
//! let field = Grid2C::from_fn(32, 32, |_, _| rng.gauss().into()).unwrap();
//! let p = HusimiParams::new(8, 8.0 / 6.0, 8).unwrap();
//! let report = delta_s(&field, &field, &p, Weighting::Uniform).unwrap();
//! assert_eq!(report.delta, 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arr1;
pub mod error;
pub mod masks;
pub mod mimo;
pub mod mri;
pub mod numerics;
pub mod oracle;
pub mod phase_space;
pub mod selector;

pub use error::{Error, Result};
