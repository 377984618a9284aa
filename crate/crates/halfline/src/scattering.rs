//! Jost function, scattering matrix, phase shift, bound states and the
//! zero-energy resonance test.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::quad::gauss_legendre;
use crate::special::phase_step;
use crate::volterra::{VolterraSolver, WaveSolution, XGrid};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-`k` scattering quantities with `w = A e^{iη}` and `s = e^{−2iη}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScatteringData {
    pub k: Vec<f64>,
    pub w: Vec<C64>,
    pub amplitude: Vec<f64>,
    pub eta: Vec<f64>,
    pub s: Vec<C64>,
    pub w0: C64,
    pub resonance: bool,
    pub delta: f64,
    /// `η(0⁺)`, continued from the smallest sample through `w(0)`.
    pub eta0: f64,
    /// Set when `|w|` comes close to zero near `k = 0`, making `η(0⁺)`
    /// ill-conditioned.
    pub eta0_uncertain: bool,
}

impl ScatteringData {
    /// `η(k)` by four-point Lagrange interpolation.
    pub fn eta_at(&self, k: f64) -> Result<f64> {
        interp4(&self.k, &self.eta, k)
    }

    /// `w(k)` by four-point Lagrange interpolation.
    pub fn w_at(&self, k: f64) -> Result<C64> {
        let re: Vec<f64> = self.w.iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.w.iter().map(|z| z.im).collect();
        Ok(C64::new(interp4(&self.k, &re, k)?, interp4(&self.k, &im, k)?))
    }

    /// `η(∞) − η(0⁺) = −η(0⁺)`.
    pub fn levinson_phase(&self) -> f64 {
        -self.eta0
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.s.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn interp4(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return Err(Error::Range {
            needed_lo: x,
            needed_hi: x,
            have_lo: xs.first().copied().unwrap_or(f64::NAN),
            have_hi: xs.last().copied().unwrap_or(f64::NAN),
        });
    }
    if n < 4 {
        let j = xs.partition_point(|v| *v <= x).clamp(1, n - 1);
        let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        return Ok(ys[j - 1] + t * (ys[j] - ys[j - 1]));
    }
    let j = xs.partition_point(|v| *v <= x).clamp(2, n - 2);
    let lo = j - 2;
    let mut acc = 0.0;
    for a in lo..lo + 4 {
        let mut l = 1.0;
        for b in lo..lo + 4 {
            if a != b {
                l *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += l * ys[a];
    }
    Ok(acc)
}

/// Bound states `−κ_j²`, `κ` descending.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Spectrum {
    pub kappa: Vec<f64>,
    pub energies: Vec<f64>,
    /// `‖θ(·, iκ_j)‖_{L²}`.
    pub norms: Vec<f64>,
    /// `|d w(iκ)/dκ|` at each root.
    pub slopes: Vec<f64>,
}

impl Spectrum {
    pub fn count(&self) -> usize {
        self.kappa.len()
    }
}

/// Resonance test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResonanceProbe {
    pub w0: C64,
    pub resonance: bool,
    pub delta: f64,
    pub tol_res: f64,
}

/// Scattering computations on top of a Volterra solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scattering {
    pub solver: VolterraSolver,
    /// Lower end of the decade used for the resonance threshold.
    pub k_min: f64,
}

impl Scattering {
    pub fn new(solver: VolterraSolver) -> Self {
        Scattering { solver, k_min: 0.01 }
    }

    /// `w(ζ) = θ(0, ζ)`.
    pub fn jost_function(&self, p: &Potential, zeta: C64) -> Result<C64> {
        Ok(self.solver.jost_at_origin(p, zeta)?.0)
    }

    /// `φ'θ − φθ'` along `g` and its largest relative deviation from `w(ζ)`.
    pub fn wronskian_check(&self, p: &Potential, zeta: C64, g: &XGrid) -> Result<(C64, f64)> {
        let reg = self.solver.solve_regular(p, zeta, g)?;
        let jost = self.solver.solve_jost(p, zeta, g)?;
        let w = jost.values[0];
        let mut worst: f64 = 0.0;
        for j in 0..g.points.len() {
            let wr = reg.derivs[j] * jost.values[j] - reg.values[j] * jost.derivs[j];
            worst = worst.max((wr - w).norm() / w.norm().max(1e-300));
        }
        Ok((w, worst))
    }

    /// `w(0)` with the threshold `1e−6·median |w|` over `[k_min, 10·k_min]`.
    pub fn resonance_probe(&self, p: &Potential) -> Result<ResonanceProbe> {
        let w0 = self.jost_function(p, C64::new(0.0, 0.0))?;
        let ks: Vec<f64> = (0..9).map(|j| self.k_min * 10f64.powf(j as f64 / 8.0)).collect();
        let ws = crate::par::map(&ks, |&k| self.jost_function(p, C64::new(k, 0.0)).map(|w| w.norm()));
        let mut mods: Vec<f64> = ws.into_iter().collect::<Result<_>>()?;
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol_res = 1e-6 * mods[mods.len() / 2];
        let resonance = w0.norm() < tol_res;
        Ok(ResonanceProbe { w0, resonance, delta: if resonance { 0.5 } else { 0.0 }, tol_res })
    }

    /// `w`, `s`, `A` and the continuous phase on an increasing positive
    /// `k` grid. The phase is anchored at the largest `k` and unwrapped
    /// downward.
    pub fn smatrix_and_phase(&self, p: &Potential, k_grid: &[f64]) -> Result<ScatteringData> {
        if k_grid.is_empty() || k_grid[0] <= 0.0 || k_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("k grid must be positive and strictly increasing"));
        }
        let ws = crate::par::map(k_grid, |&k| self.jost_function(p, C64::new(k, 0.0)));
        let w: Vec<C64> = ws.into_iter().collect::<Result<_>>()?;
        let probe = self.resonance_probe(p)?;
        let eta = unwrap_phase(k_grid, &w)?;
        let amplitude = w.iter().map(|z| z.norm()).collect();
        let s = w.iter().map(|z| z.conj() / z).collect();
        let (eta0, eta0_uncertain) = continue_to_zero(eta[0], w[0], probe.w0, probe.resonance, probe.tol_res);
        Ok(ScatteringData {
            k: k_grid.to_vec(),
            w,
            amplitude,
            eta,
            s,
            w0: probe.w0,
            resonance: probe.resonance,
            delta: probe.delta,
            eta0,
            eta0_uncertain,
        })
    }

    /// Zeros of `κ ↦ w(iκ)` on `(0, κ_max]`.
    ///
    /// The bracketing grid has spacing `min(0.01, 1/(4·x_ref))`; intervals
    /// where `|w|` dips without a sign change are resampled. Roots are
    /// bisected then polished by the secant method to `1e−10`.
    pub fn bound_states(&self, p: &Potential, kappa_max: f64, x_ref: f64) -> Result<Spectrum> {
        let w = |kappa: f64| -> Result<f64> { Ok(self.jost_function(p, C64::new(0.0, kappa))?.re) };
        let spacing = 0.01f64.min(1.0 / (4.0 * x_ref));
        let n = (kappa_max / spacing).ceil().max(1.0) as usize;
        let ks: Vec<f64> = (0..=n).map(|j| kappa_max * j as f64 / n as f64).collect();
        let vals = crate::par::map(&ks, |&k| w(k));
        let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
        let mut brackets = Vec::new();
        for j in 0..n {
            let (a, b) = (vals[j], vals[j + 1]);
            if j == 0 && a == 0.0 {
                // zero-energy resonance, not a bound state
                if b == 0.0 {
                    return Err(Error::DoubleRoot { kappa: 0.0, slope: 0.0 });
                }
                continue;
            }
            if b == 0.0 {
                brackets.push((ks[j + 1], ks[j + 1]));
            } else if a * b < 0.0 {
                brackets.push((ks[j], ks[j + 1]));
            } else if j > 0 && j + 1 < n {
                // local dip of |w|: look for a hidden pair of roots
                let (l, r) = (vals[j - 1].abs(), vals[j + 2].abs());
                if a.abs() < l && b.abs() < r {
                    let sub = 16;
                    let mut prev = (ks[j], a);
                    for m in 1..=sub {
                        let x = ks[j] + (ks[j + 1] - ks[j]) * m as f64 / sub as f64;
                        let y = if m == sub { b } else { w(x)? };
                        if prev.1 * y < 0.0 {
                            brackets.push((prev.0, x));
                        }
                        prev = (x, y);
                    }
                }
            }
        }
        let mut kappa = Vec::new();
        let mut slopes = Vec::new();
        for (mut lo, mut hi) in brackets {
            if lo != hi {
                let mut flo = w(lo)?;
                while hi - lo > 1e-3 * (hi + lo).max(1e-12) && hi - lo > 1e-14 {
                    let mid = 0.5 * (lo + hi);
                    let fm = w(mid)?;
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
            }
            let root = polish(&w, lo, hi)?;
            let h = 1e-6 * root.max(1e-6);
            let slope = ((w(root + h)? - w((root - h).max(0.0))?) / (root + h - (root - h).max(0.0))).abs();
            if slope < 1e-10 {
                return Err(Error::DoubleRoot { kappa: root, slope });
            }
            kappa.push(root);
            slopes.push(slope);
        }
        let mut order: Vec<usize> = (0..kappa.len()).collect();
        order.sort_by(|a, b| kappa[*b].partial_cmp(&kappa[*a]).unwrap());
        let kappa: Vec<f64> = order.iter().map(|&i| kappa[i]).collect();
        let slopes: Vec<f64> = order.iter().map(|&i| slopes[i]).collect();
        let norms = kappa.iter().map(|&k| self.bound_state_norm(p, k)).collect::<Result<Vec<_>>>()?;
        Ok(Spectrum { energies: kappa.iter().map(|k| -k * k).collect(), kappa, norms, slopes })
    }

    /// `‖θ(·, iκ)‖_{L²(ℝ₊)}`.
    pub fn bound_state_norm(&self, p: &Potential, kappa: f64) -> Result<f64> {
        let sol = self.solver.solve_jost(p, C64::new(0.0, kappa), &XGrid::from_points(vec![0.0, 1e-3])?)?;
        Ok(l2_norm_sq(&sol, p, kappa).sqrt())
    }

    /// `θ(·, iκ)/‖θ‖` on a grid, with the solution for residual checks.
    pub fn bound_state_vector(&self, p: &Potential, kappa: f64, g: &XGrid) -> Result<(Vec<f64>, WaveSolution)> {
        let sol = self.solver.solve_jost(p, C64::new(0.0, kappa), g)?;
        let norm = l2_norm_sq(&sol, p, kappa).sqrt();
        Ok((sol.values.iter().map(|z| z.re / norm).collect(), sol))
    }

    /// `max |φ − (θ(k)w(−k) − θ(−k)w(k))/(2ik)| / (1 + |φ|)` over the samples.
    pub fn consistency_regular_by_jost(&self, p: &Potential, x_list: &[f64], k_list: &[f64]) -> Result<f64> {
        let mut pts: Vec<f64> = x_list.to_vec();
        pts.push(0.0);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let g = XGrid::from_points(pts)?;
        let mut worst: f64 = 0.0;
        for &k in k_list {
            let fine = XGrid::from_points(densify(&g.points, 0.5 / k.abs().max(1e-3)))?;
            let reg = self.solver.solve_regular(p, C64::new(k, 0.0), &fine)?;
            let tp = self.solver.solve_jost(p, C64::new(k, 0.0), &fine)?;
            let tm = self.solver.solve_jost(p, C64::new(-k, 0.0), &fine)?;
            let (wp, wm) = (tp.values[0], tm.values[0]);
            for &x in x_list {
                let phi = reg.eval(x).0;
                let rhs = (tp.eval(x).0 * wm - tm.eval(x).0 * wp) / (I * 2.0 * k);
                worst = worst.max((phi - rhs).norm() / (1.0 + phi.norm()));
            }
        }
        Ok(worst)
    }
}

/// Adds points so no spacing exceeds `h`.
fn densify(points: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        for j in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / n as f64);
        }
    }
    out
}

/// Phase of `w` anchored by the principal argument at the largest `k`.
pub fn unwrap_phase(k: &[f64], w: &[C64]) -> Result<Vec<f64>> {
    let n = w.len();
    let mut eta = vec![0.0; n];
    let anchor = w[n - 1].arg();
    if anchor.abs() >= PI / 4.0 {
        return Err(Error::PhaseAnchor { k_max: k[n - 1], arg: anchor });
    }
    eta[n - 1] = anchor;
    for j in (0..n - 1).rev() {
        let step = phase_step(w[j + 1], w[j]);
        if step.abs() >= PI / 2.0 {
            return Err(Error::UnwrapStep { k_lo: k[j], k_hi: k[j + 1], step });
        }
        eta[j] = eta[j + 1] + step;
    }
    Ok(eta)
}

fn continue_to_zero(eta_min: f64, w_min: C64, w0: C64, resonance: bool, tol_res: f64) -> (f64, bool) {
    if resonance {
        // s(0⁺) = −1: η(0⁺) is an odd multiple of π/2
        let m = ((eta_min - PI / 2.0) / PI).round();
        return (PI / 2.0 + m * PI, true);
    }
    let step = phase_step(w_min, w0);
    let eta0 = eta_min + step;
    // w(0) is real, so η(0⁺) is a multiple of π
    let snapped = (eta0 / PI).round() * PI;
    let uncertain = w0.norm() < 1e3 * tol_res || step.abs() >= PI / 2.0;
    (snapped, uncertain)
}

/// `∫₀^∞ θ(x, iκ)²` on Gauss–Legendre pieces sized by the decay length.
fn l2_norm_sq(sol: &WaveSolution, p: &Potential, kappa: f64) -> f64 {
    let rule = gauss_legendre(24);
    let x_end = 20.0 / kappa;
    let mut cuts: Vec<f64> = p.breakpoints().iter().copied().filter(|b| *b < x_end).collect();
    cuts.push(x_end);
    let mut total = 0.0;
    let mut a = 0.0;
    for &stop in &cuts {
        while a < stop {
            let h = (0.5 / kappa).min(p.variation_scale(a)).min(0.5 + 0.25 * a);
            let b = (a + h).min(stop);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, w) in rule.0.iter().zip(&rule.1) {
                let u = sol.eval(mid + half * t).0;
                total += half * w * u.norm_sqr();
            }
            a = b;
        }
    }
    total
}

/// Secant refinement inside a bracket, falling back to bisection.
fn polish<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if lo == hi {
        return Ok(lo);
    }
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
        let mut x = hi - fhi * (hi - lo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        // guard against one-sided secant stagnation
        let m = 0.5 * (lo + hi);
        let fm = f(m)?;
        if flo * fm < 0.0 {
            hi = m;
            fhi = fm;
        } else if fm != 0.0 {
            lo = m;
            flo = fm;
        } else {
            return Ok(m);
        }
    }
    Ok(if flo.abs() < fhi.abs() { lo } else { hi })
}
