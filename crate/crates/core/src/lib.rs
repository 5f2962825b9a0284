//! Numerical laboratory for the damped extensible beam equation
//!
//! ```text
//! u_tt + Δ²u − M(‖∇u‖²)Δu − Δu_t + |u_t|^{r−1}u_t = |u|^{p−1}u,   M(s) = 1 + βs^γ
//! ```
//!
//! on clamped one- and two-dimensional rectangles. The crate discretizes the
//! problem with energy-consistent finite differences, estimates the spectral
//! and embedding constants of the discrete space, integrates the semi-discrete
//! system up to numerical blow-up, and evaluates the blow-up criteria and the
//! upper/lower blow-up-time bounds on the same discrete space.
//!
//! Modules, bottom-up:
//! - [`mesh`]: grid, fields, Laplacian and clamped biharmonic stencils, norms
//! - [`linsolve`]: preconditioned conjugate gradients for the SPD systems
//! - [`spectra`]: eigenvalues and best embedding constants, potential well depth
//! - [`functionals`]: model parameters, `J`, `I`, `E`, well classification
//! - [`dynamics`]: time stepping, adaptive step control, blow-up time estimation
//! - [`bounds`]: theorem hypotheses and blow-up time bound chains
//! - [`scenarios`]: initial data presets and arbitrary-energy construction
//! - [`harness`]: configuration, CSV/report output, runs, sweeps, verification

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod linsolve;
pub mod mesh;
pub mod scenarios;
pub mod spectra;

pub use error::{Error, Result};
pub use functionals::ModelParams;
pub use mesh::{Field, Grid};
