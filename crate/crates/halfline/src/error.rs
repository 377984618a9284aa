//! Error type shared by every module.

use core::fmt;

use crate::C64;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A potential was evaluated at a negative abscissa.
    NegativeX(f64),
    /// The decay certificate `|v(x)| ≤ c(1+x)^{-ρ}` failed at `x`.
    CertificateViolation { x: f64, value: f64, bound: f64 },
    /// Certificate constants outside `c > 0`, `ρ > 2`.
    InvalidCertificate { c: f64, rho: f64 },
    /// Potential parameters that do not define a valid potential.
    InvalidPotential(&'static str),
    /// Spectral parameter in the open lower half-plane.
    LowerHalfPlane(C64),
    /// Successive approximation did not settle within the iteration cap.
    NonConvergence { zeta: C64, x: f64, iterations: usize },
    /// A NaN or infinity appeared in the named quantity.
    NonFinite(&'static str),
    /// Grid too coarse for the requested oscillation (`k_max·h ≥ π/4`).
    GridResolution { k_max: f64, h: f64 },
    /// Grid description that is structurally invalid.
    InvalidGrid(&'static str),
    /// Phase unwrap jumped by at least `π/2` between two samples.
    UnwrapStep { k_lo: f64, k_hi: f64, step: f64 },
    /// High-energy anchor `|arg w(k_max)| ≥ π/4`.
    PhaseAnchor { k_max: f64, arg: f64 },
    /// Requested window not covered by the available samples.
    Range { needed_lo: f64, needed_hi: f64, have_lo: f64, have_hi: f64 },
    /// A curve sample is too close to zero to carry a phase.
    SmallModulus { index: usize, modulus: f64 },
    /// Adjacent curve samples differ in phase by at least `π/2`.
    PhaseStep { index: usize, step: f64 },
    /// `w(k)` vanishes (numerically) at a positive `k`.
    NearZeroJost { k: f64 },
    /// A root of `κ ↦ w(iκ)` with vanishing slope.
    DoubleRoot { kappa: f64, slope: f64 },
    /// Operands built on different grids.
    GridMismatch(&'static str),
    /// Iterated-integral order beyond the supported range.
    OrderTooLarge { requested: usize, max: usize },
    /// A truncated tail exceeds its error budget.
    TruncationBudget { bound: f64, budget: f64 },
    /// Decay metadata missing or insufficient for the requested product.
    MissingDecay,
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeX(x) => write!(f, "potential evaluated at negative x = {x}"),
            Error::CertificateViolation { x, value, bound } => write!(
                f,
                "decay certificate violated at x = {x}: |v| = {value:e} > {bound:e}"
            ),
            Error::InvalidCertificate { c, rho } => {
                write!(f, "invalid decay certificate c = {c}, rho = {rho} (need c > 0, rho > 2)")
            }
            Error::InvalidPotential(msg) => write!(f, "invalid potential: {msg}"),
            Error::LowerHalfPlane(z) => write!(f, "spectral parameter {z} lies in the lower half-plane"),
            Error::NonConvergence { zeta, x, iterations } => write!(
                f,
                "successive approximation did not converge at x = {x} for zeta = {zeta} after {iterations} iterations"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::GridResolution { k_max, h } => write!(
                f,
                "grid too coarse: k_max*h = {} must be below pi/4 (k_max = {k_max}, h = {h})",
                k_max * h
            ),
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::UnwrapStep { k_lo, k_hi, step } => write!(
                f,
                "phase step {step} on [{k_lo}, {k_hi}] reaches pi/2; refine the k-grid there"
            ),
            Error::PhaseAnchor { k_max, arg } => write!(
                f,
                "|arg w(k_max)| = {} at k_max = {k_max} is not below pi/4; raise k_max",
                arg.abs()
            ),
            Error::Range { needed_lo, needed_hi, have_lo, have_hi } => write!(
                f,
                "need samples on [{needed_lo}, {needed_hi}] but only [{have_lo}, {have_hi}] is covered"
            ),
            Error::SmallModulus { index, modulus } => {
                write!(f, "curve sample {index} has modulus {modulus:e}, too small for a phase")
            }
            Error::PhaseStep { index, step } => write!(
                f,
                "phase step {step} after sample {index} reaches pi/2; refine the curve there"
            ),
            Error::NearZeroJost { k } => write!(f, "Jost function vanishes numerically at k = {k}"),
            Error::DoubleRoot { kappa, slope } => write!(
                f,
                "root of w(i kappa) at kappa = {kappa} has slope {slope:e}; zeros must be simple"
            ),
            Error::GridMismatch(what) => write!(f, "grid mismatch: {what}"),
            Error::OrderTooLarge { requested, max } => {
                write!(f, "order {requested} exceeds the supported maximum {max}")
            }
            Error::TruncationBudget { bound, budget } => {
                write!(f, "tail bound {bound:e} exceeds the truncation budget {budget:e}")
            }
            Error::MissingDecay => write!(f, "decay metadata missing or too weak for this product"),
        }
    }
}

impl core::error::Error for Error {}
