//! Half-line Schrödinger scattering.
//!
//! Solves `-u'' + v u = ζ² u` on `[0, ∞)` for the regular and Jost solutions,
//! derives the Jost function, phase shift and bound states, and checks the
//! wave-operator formula `W₋ = 1 + φ(A)(S − 1) + K` together with its
//! topological Levinson theorem on a discretized `L²(ℝ₊)`.
//!
//! The crate is `no_std` and only needs `alloc`. The `std` feature switches
//! the float kernels to the platform math library and `parallel` spreads
//! independent spectral parameters over a rayon pool.
#![no_std]

extern crate alloc;

pub mod error;
pub mod kernelalg;
pub mod levinson;
pub mod linalg;
pub mod potentials;
pub mod quad;
pub mod scattering;
pub mod special;
pub mod volterra;
pub mod waveop;

mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use potentials::{DecayCertificate, Potential, PotentialKind, TailFunction};
pub use scattering::{Scattering, ScatteringData, Spectrum};
pub use volterra::{SolutionKind, VolterraSolver, WaveSolution, XGrid};
