//! Reduced-rank Gaussian-process regression built on random-projection
//! Nyström approximations of the covariance matrix.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense symmetric factorizations, norms, condition numbers and
//!   the diagonal-plus-low-rank (Woodbury) solver.
//! * [`kernels`]: the squared-exponential kernel, point sets and datasets.
//! * [`sketch`]: Johnson–Lindenstrauss sketches, the fixed-rank Nyström
//!   construction and the adaptive range finder.
//! * [`approx`]: subset-of-regressors / FITC knot approximations and the
//!   random-projection (RP) and bias-corrected (RM) approximations.
//! * [`infer`]: marginal likelihood, prediction, the Gibbs sampler for the
//!   kernel hyperparameters and chain diagnostics.
//! * [`diag`]: KL divergence, its bound, and the fixed-rank / target-error
//!   benchmark harnesses.
//! * [`cli`]: the command-line front end used by the `rpgp` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod approx;
pub mod cli;
pub mod diag;
mod error;
pub mod infer;
pub mod kernels;
pub mod linalg;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
