//! Boundary symbol of `W₋` on the square and its winding number.
//!
//! Edges are traversed clockwise with signs `(−, +, +, −)` on
//! `(Γ₁, Γ₂, Γ₃, Γ₄)`. Each finite window is closed analytically: the phase
//! between the last sample and the limit value at the corner is added to
//! the sampled winding.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::scattering::{Scattering, ScatteringData, Spectrum};
use crate::special::{phase_step, phi_symbol};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Samples `(parameter, value)` of one edge curve.
pub type Curve = Vec<(f64, C64)>;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundarySymbol {
    /// `β ↦ s(e^β)`.
    pub gamma1: Curve,
    /// `α ↦ Γ₂(α)`.
    pub gamma2: Curve,
    pub gamma3: Curve,
    pub gamma4: Curve,
    pub resonance: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindingReport {
    pub wn1: f64,
    pub wn2: f64,
    pub wn3: f64,
    pub wn4: f64,
    pub total: f64,
    pub expected_index: usize,
    /// Distance of `total` to the nearest half-integer.
    pub residual_to_half_integer: f64,
    /// `η(∞) − η(0) − π(N + δ)` when scattering data is supplied.
    pub classical_residual: Option<f64>,
    pub pass: bool,
}

/// `Γ₂(α) = tanh(πα) + i/cosh(πα)` for a zero-energy resonance.
pub fn gamma2_resonant(alpha: f64) -> C64 {
    C64::new((PI * alpha).tanh(), 1.0 / (PI * alpha).cosh())
}

/// `1 − 2φ(α)`, the same curve through the dilation symbol.
pub fn gamma2_via_phi(alpha: f64) -> C64 {
    ONE - phi_symbol(alpha) * 2.0
}

/// Assembles the four edge curves. `n_alpha` sets the sampling of `Γ₂`.
pub fn boundary_symbol(sd: &ScatteringData, alpha_range: (f64, f64), beta_range: (f64, f64), n_alpha: usize) -> Result<BoundarySymbol> {
    let (klo, khi) = (beta_range.0.exp(), beta_range.1.exp());
    let have = (sd.k[0], sd.k[sd.k.len() - 1]);
    if have.0 > klo * (1.0 + 1e-12) || have.1 < khi * (1.0 - 1e-12) {
        return Err(Error::Range { needed_lo: klo, needed_hi: khi, have_lo: have.0, have_hi: have.1 });
    }
    let gamma1: Curve = sd
        .k
        .iter()
        .zip(&sd.s)
        .filter(|(k, _)| **k >= klo * (1.0 - 1e-12) && **k <= khi * (1.0 + 1e-12))
        .map(|(k, s)| (k.ln(), *s))
        .collect();
    let n = n_alpha.max(2);
    let alphas = (0..n).map(|j| alpha_range.0 + (alpha_range.1 - alpha_range.0) * j as f64 / (n - 1) as f64);
    let gamma2: Curve = if sd.resonance {
        alphas.map(|a| (a, gamma2_resonant(a))).collect()
    } else {
        alphas.map(|a| (a, ONE)).collect()
    };
    let flat = |r: (f64, f64)| -> Curve { alloc::vec![(r.0, ONE), (r.1, ONE)] };
    Ok(BoundarySymbol { gamma1, gamma2, gamma3: flat(beta_range), gamma4: flat(alpha_range), resonance: sd.resonance })
}

/// `(1/2π) Σ arg(z_{j+1}/z_j)` over the samples.
pub fn winding_of_curve(curve: &[C64]) -> Result<f64> {
    for (index, z) in curve.iter().enumerate() {
        if z.norm() < 1e-12 {
            return Err(Error::SmallModulus { index, modulus: z.norm() });
        }
    }
    let mut total = 0.0;
    for (index, w) in curve.windows(2).enumerate() {
        let step = phase_step(w[0], w[1]);
        if step.abs() >= PI / 2.0 {
            return Err(Error::PhaseStep { index, step });
        }
        total += step;
    }
    Ok(total / (2.0 * PI))
}

/// Winding of an edge including the analytic closure to its corner limits.
pub fn edge_winding(curve: &Curve, start_limit: C64, end_limit: C64) -> Result<f64> {
    let vals: Vec<C64> = curve.iter().map(|c| c.1).collect();
    let body = winding_of_curve(&vals)?;
    let head = phase_step(start_limit, vals[0]) / (2.0 * PI);
    let tail = phase_step(vals[vals.len() - 1], end_limit) / (2.0 * PI);
    Ok(head + body + tail)
}

/// Winding contributions and the comparison with the bound-state count.
pub fn levinson_verify(sym: &BoundarySymbol, spec: &Spectrum, sd: Option<&ScatteringData>) -> Result<WindingReport> {
    // s(0⁺) = −1 at a resonance and +1 otherwise; s(∞) = 1
    let s0 = if sym.resonance { -ONE } else { ONE };
    let wn1 = edge_winding(&sym.gamma1, s0, ONE)?;
    let wn2 = if sym.resonance { edge_winding(&sym.gamma2, -ONE, ONE)? } else { edge_winding(&sym.gamma2, ONE, ONE)? };
    let wn3 = edge_winding(&sym.gamma3, ONE, ONE)?;
    let wn4 = edge_winding(&sym.gamma4, ONE, ONE)?;
    let total = -wn1 + wn2 + wn3 - wn4;
    let n = spec.count();
    let residual_to_half_integer = (total - (2.0 * total).round() / 2.0).abs();
    let classical_residual = sd.map(|d| d.levinson_phase() - PI * (n as f64 + d.delta));
    let pass = (total - n as f64).abs() < 5e-3;
    Ok(WindingReport { wn1, wn2, wn3, wn4, total, expected_index: n, residual_to_half_integer, classical_residual, pass })
}

/// Scattering data on a log-uniform `k` grid over `beta_range`, bisecting
/// intervals until consecutive phase steps of `s` stay below `π/4`.
pub fn symbol_scattering_data(sc: &Scattering, p: &Potential, beta_range: (f64, f64), n: usize) -> Result<ScatteringData> {
    let n = n.max(2);
    let mut ks: Vec<f64> = (0..n).map(|j| (beta_range.0 + (beta_range.1 - beta_range.0) * j as f64 / (n - 1) as f64).exp()).collect();
    for _ in 0..12 {
        let w = crate::par::map(&ks, |&k| sc.jost_function(p, C64::new(k, 0.0)));
        let w: Vec<C64> = w.into_iter().collect::<Result<_>>()?;
        let mut refined = Vec::with_capacity(ks.len());
        let mut changed = false;
        for j in 0..ks.len() {
            refined.push(ks[j]);
            if j + 1 < ks.len() {
                // s = w̄/w, so its phase moves twice as fast as that of w
                let step = 2.0 * phase_step(w[j], w[j + 1]);
                if step.abs() >= PI / 4.0 {
                    refined.push((ks[j] * ks[j + 1]).sqrt());
                    changed = true;
                }
            }
        }
        if !changed {
            return sc.smatrix_and_phase(p, &ks);
        }
        ks = refined;
    }
    sc.smatrix_and_phase(p, &ks)
}
