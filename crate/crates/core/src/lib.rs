//! Structure-guided total variation reconstruction of undersampled MRI.
//!
//! The regularizers in [`priors`] (TV, weighted TV and directional TV) share
//! the form `sum_i |M_i (grad v)_i|` with a per-pixel linear map `M` derived
//! from a side-information image. [`prox`] evaluates their proximal operator
//! by fast gradient projection on the dual, and [`admm`] wraps it in a
//! double-split ADMM loop over the Fourier sampling model of [`mri`].

pub mod admm;
pub mod error;
pub mod format;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod mri;
pub mod phantom;
pub mod priors;
pub mod prox;
pub mod sampling;

pub use admm::{reconstruct, AdmmConfig, AdmmSolver, Diagnostics, IterationRecord};
pub use error::{Error, Result};
pub use grid::{AnisotropyField, GradientField, Image};
pub use mri::{ComplexImage, KSpaceData, MriOperator, SamplingPattern};
pub use priors::{make_anisotropy, EdgeParam, PriorKind};
pub use prox::{prox_structured_tv, Constraint, ProxProblem, ProxResult};
pub use sampling::{generate, LineAxis, PatternSpec, Scheme};
