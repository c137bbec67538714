//! Numerical laboratory for finite-time blow-up of the reduced one-dimensional
//! Prandtl equation
//!
//! ```text
//! ξ_t − ξ_yy − ξ² + (∫₀^y ξ) ξ_y = 0,   ξ(t, 0) = 0
//! ```
//!
//! The crate is organised bottom-up: [`grid`] and [`quadrature`] are the
//! numerical substrate, [`profiles`] builds the compactly supported
//! self-similar profiles `G_k`, [`spectral`] holds the Hermite machinery of the
//! parabolic frame, [`solver`] integrates the equation up to blow-up,
//! [`modulation`] extracts the renormalisation parameters from snapshots and
//! [`nonlocal`] is the exactly solvable nonlocal toy model.
//!
//! Data-parallel kernels use rayon when the `parallel` feature is enabled
//! (the default); every kernel also has a sequential path selected through
//! [`Execution`].

pub mod error;
pub mod fit;
pub mod grid;
pub mod modulation;
pub mod nonlocal;
pub mod par;
pub mod profiles;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use par::Execution;
