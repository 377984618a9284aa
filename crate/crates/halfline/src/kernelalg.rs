//! Kernel calculus for the remainder `K = F₂𝓕ₛ`: the kernels `F₁, F₂`, the
//! iterated terms `r_n` and `p_N`, the brackets `W[·]` and `U[·]`, the map
//! `𝔖_u`, and numerical checks of the identities between them.
//!
//! For a fixed `k` every kernel is a function of `x` stored on Chebyshev
//! panels over `[0, X]`, where `X` is the truncation point of
//! [`kernel_cut`]. `W` brackets are evaluated from the inside out,
//!
//! ```text
//! G_n(x) = ∫ₓ^X V_n e^{ikc_n y} dy,   G_j(x) = ∫ₓ^X V_j e^{ikc_j y} G_{j+1}(y) dy,
//! W(x)   = √(2/π) Im(e^{−iη} e^{ikc₀x} G₁(x)),
//! ```
//!
//! with `c_j = 2(−1)^{n−j}` and `c₀ = (−1)^n`. The substituted forms and the
//! `U` factorization use nested Gauss–Legendre quadrature instead, so each
//! identity compares two unrelated code paths.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::potentials::{star_product, Potential, PotentialKind, TailFunction, TailModel};
use crate::quad::{composite_gauss, gauss_legendre, ChebRule, NP};
use crate::scattering::{Scattering, ScatteringData};
use crate::volterra::WaveSolution;
use crate::waveop::WaveOperators;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn sq2pi() -> f64 {
    (2.0 / PI).sqrt()
}

/// Largest bracket length handled by [`KernelSpace::w_bracket`].
pub const MAX_BRACKET: usize = 3;
/// Largest order handled by [`KernelSpace::p_n`].
pub const MAX_PN: usize = 2;

/// Truncation point for kernel integrals: the support end for compactly
/// supported potentials, `e^{−μX} < e^{−36}` for exponentials and `1000`
/// otherwise. Integrals past it enter the error budget, not the value.
pub fn kernel_cut(p: &Potential) -> f64 {
    match p.kind() {
        PotentialKind::Zero => 1.0,
        PotentialKind::SquareWell { width, .. } => width,
        PotentialKind::Exponential { c, mu } => ((c.abs() / mu).max(1.0).ln() + 36.0) / mu,
        _ => p.support_end().unwrap_or(1000.0),
    }
}

/// Points where kernel integrands may have kinks.
pub fn kinks(p: &Potential) -> Vec<f64> {
    let mut out: Vec<f64> = p.breakpoints().to_vec();
    if let Some(a) = p.support_end() {
        out.push(a);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// The potential itself as an element of `𝕍₂` (sampled up to `x_end`).
pub fn potential_function(p: &Potential, x_end: f64) -> Result<TailFunction> {
    let layout = p.analysis_layout(x_end);
    let (tail, exponent) = match p.kind() {
        PotentialKind::Zero | PotentialKind::SquareWell { .. } => (TailModel::Zero, f64::INFINITY),
        PotentialKind::Power { c, rho } => (TailModel::Power { amp: c, exponent: rho }, rho),
        PotentialKind::Exponential { c, mu } => (TailModel::Exp { amp: c, rate: mu }, f64::INFINITY),
        PotentialKind::Custom => {
            if p.support_end().is_some() {
                (TailModel::Zero, f64::INFINITY)
            } else {
                let rho = p.certificate().rho;
                let xe = layout.last().map_or(0.0, |l| l.1);
                (TailModel::Power { amp: p.eval(xe) * (1.0 + xe).powf(rho), exponent: rho }, rho)
            }
        }
    };
    let q = p.clone();
    TailFunction::from_fn(move |x| q.eval(x), layout, tail, exponent)
}

/// `∫ₓ^∞ |V|` past the sampled range, from the tail model.
fn abs_tail(v: &TailFunction, x: f64) -> f64 {
    match v.tail_model() {
        TailModel::Zero => 0.0,
        TailModel::Power { amp, exponent } => {
            if exponent <= 1.0 {
                f64::INFINITY
            } else {
                amp.abs() * (1.0 + x).powf(1.0 - exponent) / (exponent - 1.0)
            }
        }
        TailModel::Exp { amp, rate } => amp.abs() * (-rate * x).exp() / rate,
    }
}

/// `∫₀^∞ |V|`.
fn l1_norm(v: &TailFunction, rule: &ChebRule) -> f64 {
    let mut s = 0.0;
    for &(a, b) in v.layout() {
        let nodes = rule.nodes(a, b);
        let half = 0.5 * (b - a);
        for j in 0..NP {
            s += half * rule.w[j] * v.eval(nodes[j]).abs();
        }
    }
    s + abs_tail(v, v.x_end())
}

/// A complex function of `x` on the panels of a [`KernelSpace`], zero past
/// the truncation point, with a bound on what the truncation dropped.
#[derive(Debug, Clone)]
pub struct PanelFn {
    layout: Arc<Vec<(f64, f64)>>,
    vals: Vec<[C64; NP]>,
    rule: Arc<ChebRule>,
    pub tail_bound: f64,
}

impl PanelFn {
    pub fn eval(&self, x: f64) -> C64 {
        let Some(last) = self.layout.last() else {
            return ZERO;
        };
        if x > last.1 || x < self.layout[0].0 {
            return ZERO;
        }
        let idx = self.layout.partition_point(|p| p.1 <= x).min(self.layout.len() - 1);
        let (a, b) = self.layout[idx];
        let s = (2.0 * (x - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        self.rule.interp(&self.vals[idx], s)
    }

    pub fn scale(&self, s: f64) -> PanelFn {
        let mut out = self.clone();
        out.vals.iter_mut().flatten().for_each(|z| *z *= s);
        out.tail_bound *= s.abs();
        out
    }

    pub fn add(&self, other: &PanelFn) -> Result<PanelFn> {
        if !Arc::ptr_eq(&self.layout, &other.layout) && self.layout != other.layout {
            return Err(Error::GridMismatch("panel functions from different kernel spaces"));
        }
        let mut out = self.clone();
        for (a, b) in out.vals.iter_mut().zip(&other.vals) {
            for j in 0..NP {
                a[j] += b[j];
            }
        }
        out.tail_bound += other.tail_bound;
        Ok(out)
    }

    fn last_abs(&self) -> f64 {
        self.vals.last().map_or(0.0, |v| v[NP - 1].norm())
    }
}

/// Panels for one wavenumber, aligned with the potential's breakpoints and
/// narrow enough to resolve `e^{2iky}`.
#[derive(Debug, Clone)]
pub struct KernelSpace {
    pub k: f64,
    pub eta: f64,
    pub x_end: f64,
    layout: Arc<Vec<(f64, f64)>>,
    rule: Arc<ChebRule>,
}

impl KernelSpace {
    pub fn new(p: &Potential, k: f64, eta: f64, x_end: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite() && eta.is_finite() && x_end > 0.0) {
            return Err(Error::InvalidGrid("kernel space needs k > 0, finite eta and a positive cut"));
        }
        let width = (1.5 / k).min(1.0);
        let mut layout = Vec::new();
        for (a, b) in p.analysis_layout(x_end) {
            let m = ((b - a) / width).ceil().max(1.0) as usize;
            for i in 0..m {
                let lo = a + (b - a) * i as f64 / m as f64;
                let hi = if i + 1 == m { b } else { a + (b - a) * (i + 1) as f64 / m as f64 };
                layout.push((lo, hi));
            }
        }
        if layout.is_empty() {
            layout.push((0.0, x_end));
        }
        Ok(KernelSpace { k, eta, x_end, layout: Arc::new(layout), rule: Arc::new(ChebRule::new()) })
    }

    pub fn panel_count(&self) -> usize {
        self.layout.len()
    }

    /// Samples `f`, one-sided at panel ends.
    pub fn sample<F: Fn(f64) -> C64>(&self, f: F) -> PanelFn {
        let vals = self
            .layout
            .iter()
            .map(|&(a, b)| {
                let nodes = self.rule.nodes(a, b);
                let eps = 1e-13 * (b - a);
                core::array::from_fn(|j| {
                    let x = if j == 0 { nodes[0] + eps } else if j == NP - 1 { nodes[NP - 1] - eps } else { nodes[j] };
                    f(x)
                })
            })
            .collect();
        PanelFn { layout: self.layout.clone(), vals, rule: self.rule.clone(), tail_bound: 0.0 }
    }

    fn zeros(&self) -> PanelFn {
        self.sample(|_| ZERO)
    }

    /// `x ↦ ∫ₓ^X g`.
    fn right_integral(&self, g: &PanelFn) -> PanelFn {
        let mut out = g.clone();
        let mut acc = ZERO;
        for (idx, &(a, b)) in self.layout.iter().enumerate().rev() {
            let half = 0.5 * (b - a);
            let v = &g.vals[idx];
            let mut col = [ZERO; NP];
            for i in 0..NP {
                let mut s = ZERO;
                for j in 0..NP {
                    s += v[j] * self.rule.right[i][j];
                }
                col[i] = acc + s * half;
            }
            acc = col[0];
            out.vals[idx] = col;
        }
        out
    }

    /// `[𝔖_u f](x) = ∫ₓ^∞ sin(k(y−x))/k · u(y) f(y) dy`.
    pub fn frak_s(&self, u: &TailFunction, f: &PanelFn) -> PanelFn {
        let k = self.k;
        let uf = self.sample(|x| f.eval(x) * u.eval(x));
        let mut plus = uf.clone();
        let mut minus = uf.clone();
        for (idx, &(a, b)) in self.layout.iter().enumerate() {
            let nodes = self.rule.nodes(a, b);
            for j in 0..NP {
                let e = C64::from_polar(1.0, k * nodes[j]);
                plus.vals[idx][j] *= e;
                minus.vals[idx][j] *= e.conj();
            }
        }
        let a = self.right_integral(&plus);
        let b = self.right_integral(&minus);
        let mut out = a.clone();
        for (idx, &(lo, hi)) in self.layout.iter().enumerate() {
            let nodes = self.rule.nodes(lo, hi);
            for j in 0..NP {
                let e = C64::from_polar(1.0, k * nodes[j]);
                out.vals[idx][j] = (e.conj() * a.vals[idx][j] - e * b.vals[idx][j]) / (I * 2.0 * k);
            }
        }
        let l1 = l1_norm(u, &self.rule);
        out.tail_bound = (l1 * f.tail_bound + abs_tail(u, self.x_end) * (f.last_abs() + f.tail_bound)) / k;
        out
    }

    /// `W[V₁, …, V_n](·, k)` for `1 ≤ n ≤ 3`, all entries in `𝕍₁`.
    pub fn w_bracket(&self, vs: &[&TailFunction]) -> Result<PanelFn> {
        let n = vs.len();
        if n == 0 || n > MAX_BRACKET {
            return Err(Error::OrderTooLarge { requested: n, max: MAX_BRACKET });
        }
        if vs.iter().any(|v| !v.in_v(1.0)) {
            return Err(Error::MissingDecay);
        }
        let k = self.k;
        let coef = |j: usize| if (n - j) % 2 == 0 { 2.0 } else { -2.0 };
        let mut g: Option<PanelFn> = None;
        for j in (1..=n).rev() {
            let c = coef(j);
            let v = vs[j - 1];
            let integrand = self.sample(|x| {
                let inner = g.as_ref().map_or(C64::new(1.0, 0.0), |h| h.eval(x));
                inner * C64::from_polar(v.eval(x), k * c * x)
            });
            g = Some(self.right_integral(&integrand));
        }
        let g1 = g.unwrap_or_else(|| self.zeros());
        let c0 = if n % 2 == 0 { 1.0 } else { -1.0 };
        let rot = C64::from_polar(1.0, -self.eta);
        let mut out = g1.clone();
        for (idx, &(a, b)) in self.layout.iter().enumerate() {
            let nodes = self.rule.nodes(a, b);
            for j in 0..NP {
                let z = rot * C64::from_polar(1.0, k * c0 * nodes[j]) * g1.vals[idx][j];
                out.vals[idx][j] = C64::new(sq2pi() * z.im, 0.0);
            }
        }
        // dropped region has x_n > X; innermost oscillatory tail bounded by |V_n(X)|/k
        let x = self.x_end;
        let inner = abs_tail(vs[n - 1], x).min(vs[n - 1].eval(x).abs() / k);
        let mut bound = inner;
        let mut outer_l1 = 1.0;
        for v in vs[..n - 1].iter().rev() {
            bound = l1_norm(v, &self.rule) * bound + abs_tail(v, x) * outer_l1;
            outer_l1 *= l1_norm(v, &self.rule);
        }
        out.tail_bound = sq2pi() * bound;
        Ok(out)
    }

    /// `r₁ = W[V_v]`.
    pub fn r1(&self, vv: &TailFunction) -> Result<PanelFn> {
        self.w_bracket(&[vv])
    }

    /// `r_{n+1} = 𝔖_v r_n`.
    pub fn iterate_rn(&self, v: &TailFunction, r_prev: &PanelFn) -> PanelFn {
        self.frak_s(v, r_prev)
    }

    /// `R_N = Σ_{n ≤ N} r_n`.
    pub fn r_sum(&self, v: &TailFunction, vv: &TailFunction, n: usize) -> Result<PanelFn> {
        let mut r = self.r1(vv)?;
        let mut total = r.clone();
        for _ in 1..n {
            r = self.iterate_rn(v, &r);
            total = total.add(&r)?;
        }
        Ok(total)
    }

    /// `p_N = √(2/π) 𝔖_v^N [Im(p e^{−iη})]` for `N ∈ {1, 2}`.
    pub fn p_n(&self, v: &TailFunction, jost: &WaveSolution, n: usize) -> Result<PanelFn> {
        if n == 0 || n > MAX_PN {
            return Err(Error::OrderTooLarge { requested: n, max: MAX_PN });
        }
        let rot = C64::from_polar(1.0, -self.eta);
        let mut f = self.sample(|x| C64::new((jost.p_value(x) * rot).im, 0.0));
        f.tail_bound = jost.p_value(self.x_end).norm();
        for _ in 0..n {
            f = self.frak_s(v, &f);
        }
        Ok(f.scale(sq2pi()))
    }
}

/// Jost solution and phase at one wavenumber, with `η` taken from `arg w`
/// on the branch closest to the interpolated phase of `sd`.
#[derive(Debug, Clone)]
pub struct KernelPoint {
    pub k: f64,
    pub eta: f64,
    pub s: C64,
    pub w: C64,
    /// `|η − η_interp|`, the interpolation error of `sd` at `k`.
    pub eta_interp_error: f64,
    pub jost: WaveSolution,
}

impl KernelPoint {
    pub fn new(sc: &Scattering, p: &Potential, sd: &ScatteringData, k: f64) -> Result<Self> {
        let jost = sc.solver.jost_solution(p, C64::new(k, 0.0))?;
        let w = jost.eval(0.0).0;
        if w.norm() < 1e-12 {
            return Err(Error::NearZeroJost { k });
        }
        let reference = sd.eta_at(k)?;
        let raw = w.arg();
        let eta = raw + 2.0 * PI * ((reference - raw) / (2.0 * PI)).round();
        Ok(KernelPoint { k, eta, s: w.conj() / w, w, eta_interp_error: (eta - reference).abs(), jost })
    }

    pub fn space(&self, p: &Potential) -> Result<KernelSpace> {
        KernelSpace::new(p, self.k, self.eta, kernel_cut(p))
    }
}

/// Complex samples on an `(x, k)` grid with declared decay exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    /// `values[i·len(k) + j] = K(x_i, k_j)`.
    pub values: Vec<C64>,
    /// Expected decay `(1+x)^{−e}` at fixed `k > 1`.
    pub x_exponent: Option<f64>,
    pub k_exponent: Option<f64>,
}

impl Kernel2D {
    pub fn from_fn<F: FnMut(f64, f64) -> C64>(x: &[f64], k: &[f64], mut f: F) -> Self {
        let mut values = Vec::with_capacity(x.len() * k.len());
        for &xi in x {
            for &kj in k {
                values.push(f(xi, kj));
            }
        }
        Kernel2D { x: x.to_vec(), k: k.to_vec(), values, x_exponent: None, k_exponent: None }
    }

    pub fn with_decay(mut self, x_exponent: Option<f64>, k_exponent: Option<f64>) -> Self {
        self.x_exponent = x_exponent;
        self.k_exponent = k_exponent;
        self
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.k.len() + j]
    }

    /// Whether the fitted envelope slope at `k_j` matches `−x_exponent`
    /// within the relative `margin`; `None` without metadata or a fit.
    pub fn decay_consistent(&self, j: usize, x_lo: f64, x_hi: f64, margin: f64) -> Option<bool> {
        let e = self.x_exponent?;
        let s = self.envelope_slope(j, x_lo, x_hi)?;
        Some((s + e).abs() <= margin * e)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_diff(&self, other: &Kernel2D) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Log-log slope of the envelope of `|K(·, k_j)|` on `[x_lo, x_hi]`,
    /// taking maxima over windows of one period `2π/k`.
    pub fn envelope_slope(&self, j: usize, x_lo: f64, x_hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .x
            .iter()
            .enumerate()
            .filter(|(_, x)| **x >= x_lo && **x <= x_hi)
            .map(|(i, x)| (*x, self.at(i, j).norm()))
            .collect();
        envelope_slope(&pts, 2.0 * PI / self.k[j])
    }
}

/// Fits `log env = a + b·log(1+x)` through window maxima and returns `b`.
pub fn envelope_slope(pts: &[(f64, f64)], window: f64) -> Option<f64> {
    if pts.len() < 4 {
        return None;
    }
    // interior local maxima, then the largest per window
    let local: Vec<(f64, f64)> = pts.windows(3).filter(|w| w[1].1 >= w[0].1 && w[1].1 >= w[2].1).map(|w| w[1]).collect();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in &local {
        match peaks.last_mut() {
            Some(last) if x < last.0 + 0.5 * window => {
                if y > last.1 {
                    *last = (x, y);
                }
            }
            _ => peaks.push((x, y)),
        }
    }
    let peaks: Vec<(f64, f64)> = peaks.into_iter().filter(|p| p.1 > 0.0).map(|(x, y)| ((1.0 + x).ln(), y.ln())).collect();
    if peaks.len() < 3 {
        return None;
    }
    let n = peaks.len() as f64;
    let mx = peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let my = peaks.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = peaks.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = peaks.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// `F₁` and both algebraic forms of `F₂` on an `(x, k)` panel.
#[derive(Debug, Clone)]
pub struct FKernels {
    pub f1: Kernel2D,
    /// `√(2/π)(1/2i)(p·s − p̄)`.
    pub f2: Kernel2D,
    /// `√(2/π) Im(p e^{−iη}) e^{−iη}`.
    pub f2_alt: Kernel2D,
    pub algebra_residual: f64,
}

/// `F₁(x,k) = √(2/π)(e^{ikx}/2i)(s − 1)` and `F₂` from sampled `p`, given
/// `s`, `η` per `k` and `p[j][i] = p(x_i, k_j)`.
pub fn f_kernels(x: &[f64], k: &[f64], s: &[C64], eta: &[f64], p: &[Vec<C64>]) -> Result<FKernels> {
    if s.len() != k.len() || eta.len() != k.len() || p.len() != k.len() || p.iter().any(|r| r.len() != x.len()) {
        return Err(Error::GridMismatch("F kernels need s, eta and p on the same grids"));
    }
    let c = sq2pi();
    let mut f1 = Kernel2D::from_fn(x, k, |_, _| ZERO);
    let mut f2 = f1.clone();
    let mut f2_alt = f1.clone();
    let nk = k.len();
    for i in 0..x.len() {
        for j in 0..nk {
            let e = C64::from_polar(1.0, k[j] * x[i]);
            f1.values[i * nk + j] = e * (s[j] - 1.0) / (I * 2.0) * c;
            let pv = p[j][i];
            f2.values[i * nk + j] = (pv * s[j] - pv.conj()) / (I * 2.0) * c;
            let rot = C64::from_polar(1.0, -eta[j]);
            f2_alt.values[i * nk + j] = rot * (pv * rot).im * c;
        }
    }
    let algebra_residual = f2.max_diff(&f2_alt);
    Ok(FKernels { f1, f2, f2_alt, algebra_residual })
}

/// [`f_kernels`] with `p`, `s` and `η` from Jost solutions at each `k`.
pub fn f_kernels_from_points(x: &[f64], pts: &[KernelPoint]) -> Result<FKernels> {
    let k: Vec<f64> = pts.iter().map(|p| p.k).collect();
    let s: Vec<C64> = pts.iter().map(|p| p.s).collect();
    let eta: Vec<f64> = pts.iter().map(|p| p.eta).collect();
    let p: Vec<Vec<C64>> = pts.iter().map(|pt| x.iter().map(|&xi| pt.jost.p_value(xi)).collect()).collect();
    f_kernels(x, &k, &s, &eta, &p)
}

fn gl16() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(16)
}

fn reflect(kinks: &[f64], about: f64, lo: f64, hi: f64) -> Vec<f64> {
    kinks.iter().map(|c| 2.0 * c - about).filter(|b| *b > lo && *b < hi).collect()
}

/// `r₁` from its defining single integral
/// `√(2/π)∫ₓ^X sin(k(y−x))/k · v(y) sin(ky − η) dy`.
pub fn r1_definition(p: &Potential, x0: f64, k: f64, eta: f64, x_end: f64) -> f64 {
    let rule = gl16();
    let h = (1.0 / k).min(1.0);
    let f = |y: f64| ((k * (y - x0)).sin() / k) * p.eval(y) * (k * y - eta).sin();
    sq2pi() * composite_gauss(&f, x0, x_end, &kinks(p), h, &rule)
}

/// `r₂` from its defining double integral.
pub fn r2_definition(p: &Potential, x0: f64, k: f64, eta: f64, x_end: f64) -> f64 {
    let rule = gl16();
    let h = (1.0 / k).min(1.0);
    let kk = kinks(p);
    let inner = |x1: f64| {
        let g = |x2: f64| ((k * (x2 - x1)).sin() / k) * p.eval(x2) * (k * x2 - eta).sin();
        composite_gauss(&g, x1, x_end, &kk, h, &rule)
    };
    let outer = |x1: f64| ((k * (x1 - x0)).sin() / k) * p.eval(x1) * inner(x1);
    sq2pi() * composite_gauss(&outer, x0, x_end, &kk, h, &rule)
}

/// The pre-substitution form `√(2/π)∫ₓ^X V(y) sin(k(2y − x) − η) dy`.
pub fn r1_presubstitution(v: &TailFunction, kk: &[f64], x0: f64, k: f64, eta: f64, x_end: f64) -> f64 {
    let rule = gl16();
    let h = (0.5 / k).min(1.0);
    let f = |y: f64| v.eval(y) * (k * (2.0 * y - x0) - eta).sin();
    sq2pi() * composite_gauss(&f, x0, x_end, kk, h, &rule)
}

/// The substituted `n`-fold integral with factors `V_j((y_j + y_{j−1})/2)`,
/// `1 ≤ n ≤ 3`, truncated where an argument exceeds `x_end`.
pub fn w_substituted(vs: &[&TailFunction], kk: &[f64], x0: f64, k: f64, eta: f64, x_end: f64) -> Result<f64> {
    let n = vs.len();
    if n == 0 || n > MAX_BRACKET {
        return Err(Error::OrderTooLarge { requested: n, max: MAX_BRACKET });
    }
    let rule = gl16();
    let h = (1.0 / k).min(1.0);
    let top = 2.0 * x_end;
    let s = |y: f64| (k * y - eta).sin();
    let val = match n {
        1 => {
            let f = |y1: f64| vs[0].eval(0.5 * (y1 + x0)) * s(y1);
            composite_gauss(&f, x0, top - x0, &reflect(kk, x0, x0, top - x0), h, &rule)
        }
        2 => {
            let f = |y1: f64| {
                let g = |y2: f64| vs[1].eval(0.5 * (y2 + y1)) * s(y2);
                vs[0].eval(0.5 * (y1 + x0)) * composite_gauss(&g, x0, top - y1, &reflect(kk, y1, x0, top - y1), h, &rule)
            };
            composite_gauss(&f, x0, top - x0, &reflect(kk, x0, x0, top - x0), h, &rule)
        }
        _ => {
            let f = |y1: f64| {
                let g = |y2: f64| {
                    let lo = y1;
                    let hi = top - y2;
                    if hi <= lo {
                        return 0.0;
                    }
                    let q = |y3: f64| vs[2].eval(0.5 * (y3 + y2)) * s(y3);
                    vs[1].eval(0.5 * (y2 + y1)) * composite_gauss(&q, lo, hi, &reflect(kk, y2, lo, hi), h, &rule)
                };
                vs[0].eval(0.5 * (y1 + x0)) * composite_gauss(&g, x0, top - y1, &reflect(kk, y1, x0, top - y1), h, &rule)
            };
            composite_gauss(&f, x0, top - x0, &reflect(kk, x0, x0, top - x0), h, &rule)
        }
    };
    Ok(sq2pi() * val / (1u32 << n) as f64)
}

/// `U[V₁, …, V_n](x, y)` for `n ∈ {1, 2}`; exactly zero for `y < x`.
pub fn u_kernel(vs: &[&TailFunction], kk: &[f64], x0: f64, y: f64, x_end: f64) -> Result<f64> {
    let n = vs.len();
    if n == 0 || n > 2 {
        return Err(Error::OrderTooLarge { requested: n, max: 2 });
    }
    if y < x0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(0.5 * vs[0].eval(0.5 * (x0 + y)));
    }
    let top = 2.0 * x_end;
    let hi = (top - x0).min(top - y);
    if hi <= x0 {
        return Ok(0.0);
    }
    let rule = gl16();
    let mut br = reflect(kk, x0, x0, hi);
    br.extend(reflect(kk, y, x0, hi));
    let f = |x1: f64| vs[0].eval(0.5 * (x1 + x0)) * vs[1].eval(0.5 * (y + x1));
    Ok(0.25 * composite_gauss(&f, x0, hi, &br, 1.0, &rule))
}

/// `∫ U(x, y) √(2/π) sin(ky − η) dy`, the right-hand side of `W = UΦ𝓕ₛ`.
pub fn u_factorized(vs: &[&TailFunction], kk: &[f64], x0: f64, k: f64, eta: f64, x_end: f64) -> Result<f64> {
    let n = vs.len();
    if n == 0 || n > 2 {
        return Err(Error::OrderTooLarge { requested: n, max: 2 });
    }
    let rule = gl16();
    let h = (1.0 / k).min(1.0);
    let top = 2.0 * x_end;
    let mut br = reflect(kk, x0, x0, top - x0);
    if n == 2 {
        for a in kk {
            for b in kk {
                let c = 2.0 * b - 2.0 * a + x0;
                if c > x0 && c < top - x0 {
                    br.push(c);
                }
            }
        }
    }
    let f = |y: f64| u_kernel(vs, kk, x0, y, x_end).unwrap_or(0.0) * (k * y - eta).sin();
    let val = composite_gauss(&f, x0, top - x0, &br, h, &rule);
    Ok(sq2pi() * val)
}

/// `‖U[V]‖_HS` by 2D quadrature over `(x+y)/2 ≤ X` plus the closed-form
/// tail, and the one-dimensional reduction `½∫ sV(s)² ds` as a check.
pub fn u_frobenius(v: &TailFunction, kk: &[f64], x_end: f64) -> (f64, f64) {
    let rule = gauss_legendre(24);
    let mut geo = Vec::new();
    let mut g = 0.5;
    while g < x_end {
        geo.push(g);
        g *= 1.5;
    }
    geo.extend(kk.iter().copied().filter(|c| *c < x_end));
    let tail = match v.tail_model() {
        TailModel::Zero => 0.0,
        TailModel::Power { amp, exponent: e } => {
            let b = 1.0 + x_end;
            0.5 * amp * amp * (b.powf(2.0 - 2.0 * e) / (2.0 * e - 2.0) - b.powf(1.0 - 2.0 * e) / (2.0 * e - 1.0))
        }
        TailModel::Exp { amp, rate } => 0.5 * amp * amp * (-2.0 * rate * x_end).exp() * (x_end / (2.0 * rate) + 1.0 / (4.0 * rate * rate)),
    };
    let inner = |x: f64| {
        let top = 2.0 * x_end - x;
        let mut br: Vec<f64> = geo.iter().map(|c| 2.0 * c - x).filter(|b| *b > x && *b < top).collect();
        br.extend(geo.iter().copied().filter(|b| *b > x && *b < top));
        let f = |y: f64| {
            let u = 0.5 * v.eval(0.5 * (x + y));
            u * u
        };
        composite_gauss(&f, x, top, &br, x_end, &rule)
    };
    let two_d = composite_gauss(&inner, 0.0, x_end, &geo, x_end, &rule) + tail;
    let one_d = composite_gauss(&|s: f64| 0.5 * s * v.eval(s).powi(2), 0.0, x_end, &geo, x_end, &rule) + tail;
    (two_d.sqrt(), one_d.sqrt())
}

/// Envelope `(1+x)^{−(1+ε)/2−(n−1)ε}(1+y)^{−(1+ε)/2}` of `U[V₁,…,V_n]`.
pub fn u_envelope(n: usize, eps: f64, x: f64, y: f64) -> f64 {
    (1.0 + x).powf(-(1.0 + eps) / 2.0 - (n as f64 - 1.0) * eps) * (1.0 + y).powf(-(1.0 + eps) / 2.0)
}

/// Fitted constant of [`u_envelope`] over the samples with `y ≥ x`, and for
/// `n = 1` the constant `½ sup (1+s)^{1+ε}|V(s)|` that the AM–GM step gives.
pub fn u_envelope_fit(vs: &[&TailFunction], kk: &[f64], eps: f64, xs: &[f64], ys: &[f64], x_end: f64) -> Result<(f64, Option<f64>)> {
    let mut c: f64 = 0.0;
    for &x in xs {
        for &y in ys.iter().filter(|y| **y >= x) {
            c = c.max(u_kernel(vs, kk, x, y, x_end)?.abs() / u_envelope(vs.len(), eps, x, y));
        }
    }
    let theory = (vs.len() == 1).then(|| 0.5 * vs[0].sup_constant(1.0 + eps));
    Ok((c, theory))
}

/// Least-squares slope of `log|f|` against `log(1+x)`.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let q: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 != 0.0).map(|p| ((1.0 + p.0).ln(), p.1.abs().ln())).collect();
    if q.len() < 2 {
        return None;
    }
    let n = q.len() as f64;
    let mx = q.iter().map(|p| p.0).sum::<f64>() / n;
    let my = q.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = q.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = q.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Decay exponent of `a⋆b` from bookkeeping (`e_a + e_b − 1`) and from a
/// log–log fit on `[x_lo, x_hi]`.
pub fn star_closure(a: &TailFunction, b: &TailFunction, x_lo: f64, x_hi: f64) -> Result<(f64, Option<f64>)> {
    let ab = star_product(a, b)?;
    let m = 200;
    let pts: Vec<(f64, f64)> = (0..=m)
        .map(|i| x_lo * (x_hi / x_lo).powf(i as f64 / m as f64))
        .map(|x| (x, ab.eval(x)))
        .collect();
    Ok((ab.exponent, loglog_slope(&pts).map(|s| -s)))
}

/// One identity evaluated at one sample point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub x: f64,
    pub k: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|, 1e−10)`.
    pub residual: f64,
    pub pass: bool,
}

impl IdentityCheck {
    pub fn new(identity: &'static str, x: f64, k: f64, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-10);
        IdentityCheck { identity, x, k, lhs, rhs, residual, pass: residual < tol }
    }
}

/// Elements of `𝕍₁`/`𝕍₂` used by the identity checks: `u = v`, `V = V_v`.
#[derive(Debug, Clone)]
pub struct Brackets {
    pub u: TailFunction,
    pub vu: TailFunction,
    pub v1: TailFunction,
    pub v2: TailFunction,
    pub x_end: f64,
}

impl Brackets {
    /// `u = v`, `V_u = ∫u`, `V₁ = V_v`, `V₂ = V_v ⋆ V_v`, each cut at
    /// [`kernel_cut`] so both sides of an identity see the same functions.
    pub fn new(p: &Potential) -> Result<Self> {
        let x_end = kernel_cut(p);
        let u = potential_function(p, x_end)?.truncated();
        let vu = u.integral()?;
        let v1 = p.tail_function(x_end)?.truncated();
        let v2 = star_product(&v1, &v1)?;
        Ok(Brackets { u, vu, v1, v2, x_end })
    }
}

/// Identity checks at the sample points `(x, k)`:
/// `𝔖_uW[V] = W[V_u,V] − W[V_u⋆V]`,
/// `𝔖_uW[V₁,V₂] = W[V_u,V₁,V₂] − 𝔖_{V_uV₁}W[V₂]`, and its expansion
/// `W[V_u,V₁,V₂] − W[V_u⋆V₁,V₂] + W[(V_u⋆V₁)⋆V₂]`. A fourth line applies
/// the other parenthesization `V_u⋆(V₁⋆V₂)`, which is not expected to hold.
pub fn identity_checks(p: &Potential, pts: &[KernelPoint], xs: &[f64], tol: f64) -> Result<Vec<IdentityCheck>> {
    let b = Brackets::new(p)?;
    let (u, vu, v1, v2) = (&b.u, &b.vu, &b.v1, &b.v2);
    let uv1 = vu.product(v1)?;
    let s_uv1 = star_product(vu, v1)?;
    let s_s = star_product(&s_uv1, v2)?;
    let wrong = star_product(vu, &star_product(v1, v2)?)?;
    let mut out = Vec::new();
    for (pt, &x) in pts.iter().zip(xs) {
        let sp = pt.space(p)?;
        let k = pt.k;
        let w_v = sp.w_bracket(&[v1])?;
        let lhs1 = sp.frak_s(u, &w_v).eval(x).re;
        let rhs1 = sp.w_bracket(&[vu, v1])?.eval(x).re - sp.w_bracket(&[&star_product(vu, v1)?])?.eval(x).re;
        out.push(IdentityCheck::new("for 1", x, k, lhs1, rhs1, tol));

        let w12 = sp.w_bracket(&[v1, v2])?;
        let lhs2 = sp.frak_s(u, &w12).eval(x).re;
        let w_u12 = sp.w_bracket(&[vu, v1, v2])?.eval(x).re;
        let w2 = sp.w_bracket(&[v2])?;
        let rhs2 = w_u12 - sp.frak_s(&uv1, &w2).eval(x).re;
        out.push(IdentityCheck::new("for n+1 (n=1)", x, k, lhs2, rhs2, tol));

        let t2 = sp.w_bracket(&[&s_uv1, v2])?.eval(x).re;
        let t3 = sp.w_bracket(&[&s_s])?.eval(x).re;
        out.push(IdentityCheck::new("for n (n=2)", x, k, lhs2, w_u12 - t2 + t3, tol));
        let t3w = sp.w_bracket(&[&wrong])?.eval(x).re;
        out.push(IdentityCheck::new("for n (n=2), right-nested star", x, k, lhs2, w_u12 - t2 + t3w, tol));
    }
    Ok(out)
}

/// `sup |(a⋆b)⋆c − a⋆(b⋆c)|` over the sampled nodes.
pub fn associator(a: &TailFunction, b: &TailFunction, c: &TailFunction) -> Result<f64> {
    let left = star_product(&star_product(a, b)?, c)?;
    let right = star_product(a, &star_product(b, c)?)?;
    let rule = ChebRule::new();
    let mut m: f64 = 0.0;
    for &(lo, hi) in left.layout() {
        for x in rule.nodes(lo, hi) {
            m = m.max((left.eval(x) - right.eval(x)).abs());
        }
    }
    Ok(m)
}

/// Fitted constant of the envelope `C·k^{-1}(1+x)^{−(ρ−1)}` (`k > 1`) or
/// `C·(1+x)^{−(ρ−2)}` (`k ≤ 1`) for `|F₂|` over a sample panel.
pub fn k2_envelope_constant(f2: &Kernel2D, rho: f64) -> f64 {
    let mut c: f64 = 0.0;
    for (i, &x) in f2.x.iter().enumerate() {
        for (j, &k) in f2.k.iter().enumerate() {
            let env = if k > 1.0 { (1.0 + x).powf(-(rho - 1.0)) / k } else { (1.0 + x).powf(-(rho - 2.0)) };
            c = c.max(f2.at(i, j).norm() / env);
        }
    }
    c
}

/// Smallest `C₀` with `Π|sin(k(x_j − x_{j−1}))/k · v(x_j)| ≤ C₀·bound` on a
/// sampled simplex `x₀ ≤ x₁ ≤ x₂`, and the bound `c^N` implied by the
/// certificate.
pub fn messy_estimate(p: &Potential, ks: &[f64], xs: &[f64]) -> (f64, f64) {
    let cert = p.certificate();
    let rho = cert.rho;
    let mut c0: f64 = 0.0;
    for &k in ks {
        for (a, &x0) in xs.iter().enumerate() {
            for (b, &x1) in xs.iter().enumerate().skip(a) {
                for &x2 in xs.iter().skip(b) {
                    let lhs = ((k * (x1 - x0)).sin() / k * p.eval(x1)).abs() * ((k * (x2 - x1)).sin() / k * p.eval(x2)).abs();
                    let rhs = if k > 1.0 {
                        k.powi(-2) * ((1.0 + x1) * (1.0 + x2)).powf(-rho)
                    } else {
                        ((1.0 + x1) * (1.0 + x2)).powf(-(rho - 1.0))
                    };
                    c0 = c0.max(lhs / rhs);
                }
            }
        }
    }
    (c0, cert.c * cert.c)
}

/// Kernel-built `F₂𝓕ₛ` on the operator grid: entries `√(hΔk)·F₂(x_j, k_i)`
/// from Jost solutions, as an x × k matrix comparable with
/// [`WaveOperators::remainder_matrix`].
pub fn f2_matrix(sc: &Scattering, p: &Potential, ops: &WaveOperators) -> Result<CMat> {
    let g = &ops.grid;
    let w = (g.h * g.dk).sqrt() * sq2pi();
    let cols = crate::par::map(&g.k, |&k| -> Result<Vec<C64>> {
        let jost = sc.solver.jost_solution(p, C64::new(k, 0.0))?;
        let w0 = jost.eval(0.0).0;
        let s = w0.conj() / w0;
        Ok(g.x.iter().map(|&x| {
            let pv = jost.p_value(x);
            (pv * s - pv.conj()) / (I * 2.0) * w
        }).collect())
    });
    let cols: Vec<Vec<C64>> = cols.into_iter().collect::<Result<_>>()?;
    Ok(CMat::from_fn(g.x.len(), g.k.len(), |j, i| cols[i][j]))
}

/// `{p_N + R_N}e^{−iη}` on the operator grid, weighted like [`f2_matrix`].
pub fn decomposition_matrix(sc: &Scattering, p: &Potential, ops: &WaveOperators, n: usize) -> Result<CMat> {
    let g = &ops.grid;
    let w = (g.h * g.dk).sqrt();
    let x_end = kernel_cut(p);
    let v = potential_function(p, x_end)?;
    let vv = p.tail_function(x_end)?;
    let cols = crate::par::map_range(g.k.len(), |i| -> Result<Vec<C64>> {
        let k = g.k[i];
        let eta = ops.sd.eta[i];
        let jost = sc.solver.jost_solution(p, C64::new(k, 0.0))?;
        let sp = KernelSpace::new(p, k, eta, x_end)?;
        let total = sp.p_n(&v, &jost, n)?.add(&sp.r_sum(&v, &vv, n)?)?;
        let rot = C64::from_polar(w, -eta);
        Ok(g.x.iter().map(|&x| total.eval(x) * rot).collect())
    });
    let cols: Vec<Vec<C64>> = cols.into_iter().collect::<Result<_>>()?;
    Ok(CMat::from_fn(g.x.len(), g.k.len(), |j, i| cols[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_space() -> KernelSpace {
        KernelSpace::new(&Potential::zero(), 1.0, 0.3, 1.0).unwrap()
    }

    #[test]
    fn right_integral_of_exponential() {
        let sp = KernelSpace::new(&Potential::exponential(-1.0, 1.0).unwrap(), 2.0, 0.0, 10.0).unwrap();
        let g = sp.sample(|x| C64::from_polar(1.0, 2.0 * x));
        let r = sp.right_integral(&g);
        for &x in &[0.0, 1.3, 7.9] {
            let exact = (C64::from_polar(1.0, 20.0) - C64::from_polar(1.0, 2.0 * x)) / (I * 2.0);
            assert!((r.eval(x) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn frak_s_against_closed_form() {
        // u ≡ 1 on [0, 1], f ≡ 1: ∫ₓ¹ sin(k(y−x))/k dy = (1 − cos(k(1−x)))/k²
        let p = Potential::square_well(1.0, 1.0).unwrap();
        let sp = KernelSpace::new(&p, 3.0, 0.0, 1.0).unwrap();
        let one = TailFunction::from_fn(|_| 1.0, p.analysis_layout(1.0), TailModel::Zero, f64::INFINITY).unwrap();
        let f = sp.sample(|_| C64::new(1.0, 0.0));
        let s = sp.frak_s(&one, &f);
        for &x in &[0.0, 0.4, 0.9] {
            let exact = (1.0 - (3.0 * (1.0 - x)).cos()) / 9.0;
            assert!((s.eval(x).re - exact).abs() < 1e-13);
        }
        let twice = sp.frak_s(&one, &f.add(&f).unwrap());
        assert!((twice.eval(0.2) - s.eval(0.2) * 2.0).norm() < 1e-13);
    }

    #[test]
    fn bracket_order_limits() {
        let sp = zero_space();
        let z = TailFunction::zero();
        assert!(matches!(sp.w_bracket(&[]), Err(Error::OrderTooLarge { .. })));
        assert!(matches!(sp.w_bracket(&[&z, &z, &z, &z]), Err(Error::OrderTooLarge { .. })));
        assert_eq!(sp.w_bracket(&[&z]).unwrap().eval(0.3), ZERO);
    }

    #[test]
    fn u_kernel_heaviside() {
        let p = Potential::square_well(4.0, 1.0).unwrap();
        let vv = p.tail_function(1.0).unwrap();
        let kk = kinks(&p);
        assert_eq!(u_kernel(&[&vv], &kk, 0.5, 0.49, 1.0).unwrap(), 0.0);
        assert_eq!(u_kernel(&[&vv, &vv], &kk, 0.5, 0.2, 1.0).unwrap(), 0.0);
        // U[V_v](0, 1) = ½V_v(½) = ½·(−4)(1 − ½)
        assert!((u_kernel(&[&vv], &kk, 0.0, 1.0, 1.0).unwrap() + 1.0).abs() < 1e-13);
    }

    #[test]
    fn envelope_slope_of_power() {
        let pts: Vec<(f64, f64)> = (0..400).map(|i| 5.0 + 0.1 * i as f64).map(|x| (x, (1.0 + x).powf(-2.5) * (3.0 * x).sin().abs())).collect();
        let s = envelope_slope(&pts, 2.0 * PI / 3.0).unwrap();
        assert!((s + 2.5).abs() < 0.1, "{s}");
    }
}
