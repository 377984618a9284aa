//! Discretized operators on `L²(ℝ₊)`: sine and cosine transforms, the
//! generalized Fourier transforms, `φ(A)`, and the remainder `K` of the
//! wave-operator formula `W₋ = 1 + φ(A)(S − 1) + K`.
//!
//! The grids are dual for the discrete sine transform: `x_j = jh`
//! (`1 ≤ j < M`, `Mh = X`) and `k_i = iπ/X` (`1 ≤ i ≤ M_k`). Vectors carry
//! `√h` and `√Δk` weights, so the sine-transform matrix `T` has orthonormal
//! rows and `TᵀT` is the projection onto the band `k ≤ k_max`. Operators
//! that are diagonal in `k` are kept in that factored form and everything is
//! restricted to the band.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, CMat};
use crate::potentials::Potential;
use crate::scattering::{Scattering, ScatteringData, Spectrum};
use crate::special::{phi_symbol, psi_symbol};
use crate::volterra::XGrid;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spatial and spectral grids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaveGrid {
    pub x_max: f64,
    pub h: f64,
    pub k_max: f64,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub dk: f64,
}

impl WaveGrid {
    /// Requires `k_max·h < π/4`.
    pub fn new(x_max: f64, h: f64, k_max: f64) -> Result<Self> {
        if !(x_max > 0.0 && h > 0.0 && k_max > 0.0) || !(x_max.is_finite() && k_max.is_finite()) {
            return Err(Error::InvalidGrid("wave grid needs positive X_max, h and k_max"));
        }
        let m = (x_max / h).round() as usize;
        if m < 4 {
            return Err(Error::InvalidGrid("wave grid needs at least four cells"));
        }
        let h = x_max / m as f64;
        if k_max * h >= PI / 4.0 {
            return Err(Error::GridResolution { k_max, h });
        }
        let dk = PI / x_max;
        let mk = ((k_max / dk).floor() as usize).min(m - 1);
        if mk == 0 {
            return Err(Error::InvalidGrid("k_max is below the first spectral point"));
        }
        Ok(WaveGrid {
            x_max,
            h,
            k_max,
            x: (1..m).map(|j| j as f64 * h).collect(),
            k: (1..=mk).map(|i| i as f64 * dk).collect(),
            dk,
        })
    }

    /// Twice the points on one and a half times the interval.
    pub fn refined(&self) -> Result<Self> {
        let m = self.x.len() + 1;
        let x_max = 1.5 * self.x_max;
        WaveGrid::new(x_max, x_max / (2 * m) as f64, self.k_max)
    }

    /// The spatial samples including both endpoints, for the solvers.
    pub fn x_grid(&self) -> Result<XGrid> {
        XGrid::uniform(self.x_max, self.h)
    }

    pub fn k_min(&self) -> f64 {
        self.k[0]
    }
}

/// Which space an operator index runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Space {
    X,
    K,
}

/// A weighted matrix between sample spaces.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub label: &'static str,
    pub rows: Space,
    pub cols: Space,
    pub matrix: CMat,
}

impl GridOperator {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(v)
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.adj_mul_vec(v)
    }
}

/// `Fs` (`T`, x → k) and `Fc` (`C`, x → k) with `√(2/π)·trig(k_i x_j)·√(hΔk)`.
pub fn build_transforms(g: &WaveGrid) -> (GridOperator, GridOperator) {
    let c = (2.0 / PI).sqrt() * (g.h * g.dk).sqrt();
    let sin = CMat::from_fn(g.k.len(), g.x.len(), |i, j| C64::new(c * (g.k[i] * g.x[j]).sin(), 0.0));
    let cos = CMat::from_fn(g.k.len(), g.x.len(), |i, j| C64::new(c * (g.k[i] * g.x[j]).cos(), 0.0));
    (
        GridOperator { label: "Fs", rows: Space::K, cols: Space::X, matrix: sin },
        GridOperator { label: "Fc", rows: Space::K, cols: Space::X, matrix: cos },
    )
}

/// Band-pass probe `2σ sin(k_c x) e^{−σ²x²/2}` whose sine transform is
/// `e^{−(k−k_c)²/2σ²} − e^{−(k+k_c)²/2σ²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Probe {
    pub sigma: f64,
    pub k_c: f64,
}

impl Probe {
    pub fn eval(&self, x: f64) -> f64 {
        2.0 * self.sigma * (self.k_c * x).sin() * (-0.5 * self.sigma * self.sigma * x * x).exp()
    }

    pub fn sine_transform(&self, k: f64) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        (-(k - self.k_c).powi(2) / s2).exp() - (-(k + self.k_c).powi(2) / s2).exp()
    }

    /// `√h`-weighted samples on the grid.
    pub fn samples(&self, g: &WaveGrid) -> Vec<C64> {
        let w = g.h.sqrt();
        g.x.iter().map(|&x| C64::new(w * self.eval(x), 0.0)).collect()
    }
}

/// Three packets at geometrically spaced widths with spectra inside
/// `[2k_min, 0.8k_max]` up to `e^{−32}` and spatial tails below `e^{−50}`
/// at `X_max`.
pub fn default_probes(g: &WaveGrid) -> Result<Vec<Probe>> {
    let s1 = 10.0 / g.x_max;
    let s3 = (0.8 * g.k_max - 2.0 * g.k_min()) / 17.0;
    if s3 <= s1 {
        return Err(Error::InvalidGrid("band too narrow for the probe set"));
    }
    let s2 = (s1 * s3).sqrt();
    Ok([s1, s2, s3].iter().map(|&sigma| Probe { sigma, k_c: 2.0 * g.k_min() + 8.5 * sigma }).collect())
}

/// `max(‖TᵀTf − f‖/‖f‖, M·u)` over the probes.
pub fn calibrate_eps(t: &GridOperator, g: &WaveGrid, probes: &[Probe]) -> f64 {
    let floor = g.x.len() as f64 * f64::EPSILON;
    let mut worst: f64 = 0.0;
    for p in probes {
        let f = p.samples(g);
        let back = t.apply_adjoint(&t.apply(&f));
        let d: Vec<C64> = back.iter().zip(&f).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&d) / norm2(&f));
    }
    worst.max(floor)
}

/// Generalized Fourier transforms `F⁻` (kernel `√(2/π)·conj ψ⁻`) and `F⁺`
/// (kernel `√(2/π)·ψ⁻`), with `ψ⁻(x, k) = k φ(x, k)/w(k)`. Regular solutions
/// are sampled from the solver on the grid.
pub fn build_generalized_fourier(sc: &Scattering, p: &Potential, g: &WaveGrid) -> Result<(GridOperator, GridOperator, ScatteringData)> {
    let sd = sc.smatrix_and_phase(p, &g.k)?;
    let xg = g.x_grid()?;
    let rows = crate::par::map(&g.k, |&k| -> Result<Vec<f64>> {
        let sol = sc.solver.solve_regular(p, C64::new(k, 0.0), &xg)?;
        Ok(sol.values[1..=g.x.len()].iter().map(|z| z.re).collect())
    });
    let phi: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let (fm, fp) = generalized_fourier_from(&sd, &phi, g)?;
    Ok((fm, fp, sd))
}

/// Same as [`build_generalized_fourier`] from precomputed `φ(x_j, k_i)`.
pub fn generalized_fourier_from(sd: &ScatteringData, phi: &[Vec<f64>], g: &WaveGrid) -> Result<(GridOperator, GridOperator)> {
    if sd.k.len() != g.k.len() || phi.len() != g.k.len() {
        return Err(Error::GridMismatch("scattering data and regular solutions must match the k grid"));
    }
    let c = (2.0 / PI).sqrt() * (g.h * g.dk).sqrt();
    for (i, w) in sd.w.iter().enumerate() {
        if w.norm() < 1e-12 {
            return Err(Error::NearZeroJost { k: g.k[i] });
        }
    }
    let fm = CMat::from_fn(g.k.len(), g.x.len(), |i, j| (C64::new(g.k[i] * phi[i][j], 0.0) / sd.w[i]).conj() * c);
    let fp = fm.conj();
    Ok((
        GridOperator { label: "F-", rows: Space::K, cols: Space::X, matrix: fm },
        GridOperator { label: "F+", rows: Space::K, cols: Space::X, matrix: fp },
    ))
}

/// `(1/2i)(Fc·Fs + i)` applied to weighted samples.
pub fn phi_a_via_transforms(t: &GridOperator, c: &GridOperator, f: &[C64]) -> Vec<C64> {
    let cf = c.apply_adjoint(&t.apply(f));
    cf.iter().zip(f).map(|(a, b)| (a + I * b) / (I * 2.0)).collect()
}

/// `φ(A)Tᵀ = (1/2i)(Cᵀ + iTᵀ)` as an x × k matrix.
fn phi_a_on_band(t: &GridOperator, c: &GridOperator) -> CMat {
    let (nk, nx) = (t.matrix.rows, t.matrix.cols);
    CMat::from_fn(nx, nk, |j, i| (c.matrix.at(i, j) + I * t.matrix.at(i, j)) / (I * 2.0))
}

/// Leading singular values and Frobenius norm of a kernel matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HsReport {
    pub frobenius: f64,
    pub singular_values: Vec<f64>,
    /// `Σ_{j>20} σ_j² / Σ σ_j²`.
    pub tail_fraction: f64,
    pub x_max: f64,
    pub h: f64,
    pub k_max: f64,
    pub refined_frobenius: Option<f64>,
}

impl HsReport {
    pub fn refinement_change(&self) -> Option<f64> {
        self.refined_frobenius.map(|r| (r - self.frobenius).abs() / self.frobenius.max(1e-300))
    }
}

/// Everything needed to check the wave-operator formula on one grid.
#[derive(Debug, Clone)]
pub struct WaveOperators {
    pub grid: WaveGrid,
    pub fs: GridOperator,
    pub fc: GridOperator,
    pub fminus: GridOperator,
    pub fplus: GridOperator,
    pub sd: ScatteringData,
    pub probes: Vec<Probe>,
    pub eps_disc: f64,
}

impl WaveOperators {
    pub fn build(sc: &Scattering, p: &Potential, grid: WaveGrid) -> Result<Self> {
        let (fs, fc) = build_transforms(&grid);
        let probes = default_probes(&grid)?;
        let eps_disc = calibrate_eps(&fs, &grid, &probes);
        let (fminus, fplus, sd) = build_generalized_fourier(sc, p, &grid)?;
        Ok(WaveOperators { grid, fs, fc, fminus, fplus, sd, probes, eps_disc })
    }

    /// `W₋f = F⁻*·Fs f`.
    pub fn wminus(&self, f: &[C64]) -> Vec<C64> {
        self.fminus.apply_adjoint(&self.fs.apply(f))
    }

    /// `W₊f = F⁺*·Fs f`.
    pub fn wplus(&self, f: &[C64]) -> Vec<C64> {
        self.fplus.apply_adjoint(&self.fs.apply(f))
    }

    /// `S f = Fs·diag(s)·Fs f` on the band.
    pub fn smatrix(&self, f: &[C64], adjoint: bool) -> Vec<C64> {
        let mut g = self.fs.apply(f);
        for (gi, s) in g.iter_mut().zip(&self.sd.s) {
            *gi *= if adjoint { s.conj() } else { *s };
        }
        self.fs.apply_adjoint(&g)
    }

    fn probe_vectors(&self) -> Vec<Vec<C64>> {
        self.probes.iter().map(|p| p.samples(&self.grid)).collect()
    }

    /// `max ‖(W₋*W₋ − 1)f‖/‖f‖` over the probes.
    pub fn isometry_defect(&self) -> f64 {
        self.probe_vectors()
            .iter()
            .map(|f| {
                let w = self.wminus(f);
                let back = self.fs.apply_adjoint(&self.fminus.apply(&w));
                rel_diff(&back, f)
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖(F⁻F⁻* − 1)g‖/‖g‖` over the probe spectra.
    pub fn coisometry_defect(&self) -> f64 {
        self.probe_vectors()
            .iter()
            .map(|f| {
                let g = self.fs.apply(f);
                let back = self.fminus.apply(&self.fminus.apply_adjoint(&g));
                rel_diff(&back, &g)
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖(S*S − 1)f‖/‖f‖` and `max ‖[S, H₀]f‖/‖H₀f‖` over the probes.
    pub fn smatrix_checks(&self) -> (f64, f64) {
        let mut unit: f64 = 0.0;
        let mut comm: f64 = 0.0;
        for f in self.probe_vectors() {
            let ss = self.smatrix(&self.smatrix(&f, false), true);
            unit = unit.max(rel_diff(&ss, &f));
            let a = self.smatrix(&self.h0(&f), false);
            let b = self.h0(&self.smatrix(&f, false));
            comm = comm.max(rel_diff(&a, &b));
        }
        (unit, comm)
    }

    /// `H₀ = Fs·diag(k²)·Fs`.
    pub fn h0(&self, f: &[C64]) -> Vec<C64> {
        let mut g = self.fs.apply(f);
        for (gi, k) in g.iter_mut().zip(&self.grid.k) {
            *gi *= k * k;
        }
        self.fs.apply_adjoint(&g)
    }

    /// `max ‖(Fs·H₀ − k²·Fs)f‖/‖H₀f‖`, and the relative deviation of the
    /// spectral `H₀` from `−f''` by centered differences with its own
    /// `O(h²k²)` budget.
    pub fn intertwining(&self) -> (f64, f64, f64) {
        let mut inter: f64 = 0.0;
        let mut fd: f64 = 0.0;
        let mut budget: f64 = 0.0;
        let h = self.grid.h;
        for (p, f) in self.probes.iter().zip(self.probe_vectors()) {
            let lhs = self.fs.apply(&self.h0(&f));
            let mut rhs = self.fs.apply(&f);
            for (r, k) in rhs.iter_mut().zip(&self.grid.k) {
                *r *= k * k;
            }
            inter = inter.max(rel_diff(&lhs, &rhs));
            let spectral = self.h0(&f);
            let n = f.len();
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..n {
                let left = if j == 0 { ZERO } else { f[j - 1] };
                let right = if j + 1 == n { ZERO } else { f[j + 1] };
                let d2 = -(left - f[j] * 2.0 + right) / (h * h);
                num += (d2 - spectral[j]).norm_sqr();
                den += spectral[j].norm_sqr();
            }
            fd = fd.max((num / den).sqrt());
            let kt = p.k_c + 4.0 * p.sigma;
            budget = budget.max(2.0 * h * h * kt * kt / 12.0);
        }
        (inter, fd, budget)
    }

    /// `max |𝓡₀(Fs·Bf)(β) − β·𝓡₀(Fs f)(β)|` with `B = ½ln H₀`, relative to
    /// `‖f‖`.
    pub fn dilation_b_check(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in self.probe_vectors() {
            let mut g = self.fs.apply(&f);
            let base = g.clone();
            for (gi, k) in g.iter_mut().zip(&self.grid.k) {
                *gi *= k.ln();
            }
            let bf = self.fs.apply_adjoint(&g);
            let lhs = self.fs.apply(&bf);
            for ((l, b), k) in lhs.iter().zip(&base).zip(&self.grid.k) {
                let beta = k.ln();
                let r0 = (0.5 * beta).exp();
                worst = worst.max((r0 * l - r0 * beta * b).norm() / norm2(&f));
            }
        }
        worst
    }

    /// `K·Tᵀ = F⁻* − Tᵀ − φ(A)Tᵀ·diag(s − 1)`, an x × k matrix.
    pub fn remainder_matrix(&self) -> CMat {
        let phi_t = phi_a_on_band(&self.fs, &self.fc);
        let nx = self.grid.x.len();
        let nk = self.grid.k.len();
        CMat::from_fn(nx, nk, |j, i| {
            self.fminus.matrix.at(i, j).conj() - self.fs.matrix.at(i, j) - phi_t.at(j, i) * (self.sd.s[i] - ONE)
        })
    }

    /// `K'·Tᵀ = W₊Tᵀ − Tᵀ − ψ(A)Tᵀ·diag(s̄ − 1)`.
    pub fn wplus_remainder_matrix(&self) -> CMat {
        let phi_t = phi_a_on_band(&self.fs, &self.fc);
        let nx = self.grid.x.len();
        let nk = self.grid.k.len();
        CMat::from_fn(nx, nk, |j, i| {
            let t = self.fs.matrix.at(i, j);
            let psi_t = t - phi_t.at(j, i);
            self.fplus.matrix.at(i, j).conj() - t - psi_t * (self.sd.s[i].conj() - ONE)
        })
    }

    /// `max ‖(W₊ − W₋S*)f‖/‖f‖` over the probes.
    pub fn wplus_identity(&self) -> f64 {
        self.probe_vectors()
            .iter()
            .map(|f| {
                let a = self.wplus(f);
                let b = self.wminus(&self.smatrix(f, true));
                rel_diff(&a, &b) * norm2(&a) / norm2(f)
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖(W₋ − 1 − φ(A)(S − 1) − K)f‖/‖f‖`, checking the assembled
    /// decomposition on the probes.
    pub fn formula_residual(&self, k_t: &CMat) -> f64 {
        let mut worst: f64 = 0.0;
        for f in self.probe_vectors() {
            let w = self.wminus(&f);
            let sf = self.smatrix(&f, false);
            let d: Vec<C64> = sf.iter().zip(&f).map(|(a, b)| a - b).collect();
            let phi = phi_a_via_transforms(&self.fs, &self.fc, &d);
            let kf = k_t.mul_vec(&self.fs.apply(&f));
            let r: Vec<C64> = (0..f.len()).map(|j| w[j] - f[j] - phi[j] - kf[j]).collect();
            worst = worst.max(norm2(&r) / norm2(&f));
        }
        worst
    }

    /// Eigenvalues of `W₋W₋*` compressed onto the span of the probes and
    /// the normalized bound states, and how many fall below `1/2`.
    pub fn rank_defect(&self, bound_states: &[Vec<f64>]) -> (usize, Vec<f64>) {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let sq = self.grid.h.sqrt();
        let mut cands = self.probe_vectors();
        for b in bound_states {
            cands.push(b.iter().map(|v| C64::new(sq * v, 0.0)).collect());
        }
        for mut v in cands {
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let n = norm2(&v);
            if n > 1e-8 {
                v.iter_mut().for_each(|z| *z /= n);
                basis.push(v);
            }
        }
        let fq: Vec<Vec<C64>> = basis.iter().map(|q| self.fminus.apply(q)).collect();
        let m = basis.len();
        let gram = CMat::from_fn(m, m, |a, b| dot(&fq[a], &fq[b]));
        let ev = gram.hermitian_eigenvalues();
        (ev.iter().filter(|e| **e < 0.5).count(), ev)
    }
}

fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(1e-300)
}

/// Frobenius norm, leading singular values and tail fraction of `K·Tᵀ`.
pub fn hs_report(k_t: &CMat, g: &WaveGrid) -> HsReport {
    let sv = k_t.singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let tail: f64 = sv.iter().skip(20).map(|s| s * s).sum();
    HsReport {
        frobenius: k_t.frobenius(),
        singular_values: sv.iter().take(20).copied().collect(),
        tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        x_max: g.x_max,
        h: g.h,
        k_max: g.k_max,
        refined_frobenius: None,
    }
}

/// Builds `K` on the grid and on its refinement and reports both norms.
pub fn remainder_extract(sc: &Scattering, p: &Potential, g: &WaveGrid) -> Result<(WaveOperators, CMat, HsReport)> {
    let ops = WaveOperators::build(sc, p, g.clone())?;
    let k_t = ops.remainder_matrix();
    let mut report = hs_report(&k_t, g);
    let fine = WaveOperators::build(sc, p, g.refined()?)?;
    report.refined_frobenius = Some(fine.remainder_matrix().frobenius());
    Ok((ops, k_t, report))
}

/// Bound-state vectors `θ(x_j, iκ)/‖θ‖` on the grid.
pub fn bound_state_vectors(sc: &Scattering, p: &Potential, spec: &Spectrum, g: &WaveGrid) -> Result<Vec<Vec<f64>>> {
    let xg = g.x_grid()?;
    spec.kappa
        .iter()
        .map(|&kappa| sc.bound_state_vector(p, kappa, &xg).map(|(v, _)| v[1..=g.x.len()].to_vec()))
        .collect()
}

/// The two dilation symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Symbol {
    Phi,
    Psi,
}

impl Symbol {
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            Symbol::Phi => phi_symbol(t),
            Symbol::Psi => psi_symbol(t),
        }
    }
}

/// `f ↦ symbol(A) f` through the Mellin picture: `u(β) = e^{β/2} f(e^β)`
/// turns `e^{−itA}` into translation by `t`, so `A` acts as `−D` with
/// `D = −i d/dβ` and the mode `e^{iξβ}` is multiplied by `symbol(−ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationMultiplier {
    pub symbol: Symbol,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub log2_n: u32,
}

impl DilationMultiplier {
    /// Window `[−60, ln X_max + 3]` with `2^19` points.
    pub fn new(symbol: Symbol, g: &WaveGrid) -> Result<Self> {
        Self::with_window(symbol, -60.0, g.x_max.ln() + 3.0, 19, g)
    }

    pub fn with_window(symbol: Symbol, beta_lo: f64, beta_hi: f64, log2_n: u32, g: &WaveGrid) -> Result<Self> {
        let x_lo = g.x[0];
        if beta_lo.exp() > x_lo || beta_hi.exp() < g.x_max || log2_n < 4 {
            return Err(Error::Range { needed_lo: x_lo, needed_hi: g.x_max, have_lo: beta_lo.exp(), have_hi: beta_hi.exp() });
        }
        Ok(DilationMultiplier { symbol, beta_lo, beta_hi, log2_n })
    }

    /// Applies the multiplier to the function `f` (evaluated on the log
    /// grid) and returns the result at the points `x`.
    #[cfg(feature = "std")]
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, x: &[f64]) -> Vec<C64> {
        use rustfft::FftPlanner;
        let n = 1usize << self.log2_n;
        let db = (self.beta_hi - self.beta_lo) / n as f64;
        let mut u: Vec<rustfft::num_complex::Complex<f64>> = (0..n)
            .map(|j| {
                let b = self.beta_lo + j as f64 * db;
                rustfft::num_complex::Complex::new((0.5 * b).exp() * f(b.exp()), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(n).process(&mut u);
        let span = n as f64 * db;
        for (m, z) in u.iter_mut().enumerate() {
            let signed = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
            let xi = 2.0 * PI * signed / span;
            let s = self.symbol.eval(-xi);
            *z = *z * rustfft::num_complex::Complex::new(s.re / n as f64, s.im / n as f64);
        }
        planner.plan_fft_inverse(n).process(&mut u);
        x.iter()
            .map(|&xv| {
                let b = xv.ln();
                let pos = (b - self.beta_lo) / db;
                let v = lagrange_uniform(&u, pos);
                v * (-0.5 * b).exp()
            })
            .collect()
    }
}

/// Ten-point Lagrange interpolation on unit-spaced samples.
#[cfg(feature = "std")]
fn lagrange_uniform(u: &[rustfft::num_complex::Complex<f64>], pos: f64) -> C64 {
    const P: usize = 10;
    let base = (pos.floor() as isize - (P as isize / 2 - 1)).clamp(0, (u.len() - P) as isize) as usize;
    let mut acc = ZERO;
    for a in 0..P {
        let mut l = 1.0;
        for b in 0..P {
            if a != b {
                l *= (pos - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
        let z = u[base + a];
        acc += C64::new(z.re, z.im) * l;
    }
    acc
}

/// `max ‖φ(A)f − (1/2i)(FcFs + i)f‖/‖f‖` over the probes, with `φ(A)`
/// from the Mellin route on `2^log2_n` log-grid points.
#[cfg(feature = "std")]
pub fn mellin_identity_check(ops: &WaveOperators, log2_n: u32) -> Result<f64> {
    let g = &ops.grid;
    let m = DilationMultiplier::with_window(Symbol::Phi, -60.0, g.x_max.ln() + 3.0, log2_n, g)?;
    let sq = ops.grid.h.sqrt();
    let mut worst: f64 = 0.0;
    for p in &ops.probes {
        let f = p.samples(&ops.grid);
        let via_t = phi_a_via_transforms(&ops.fs, &ops.fc, &f);
        let via_m: Vec<C64> = m.apply(|x| p.eval(x), &ops.grid.x).into_iter().map(|z| z * sq).collect();
        worst = worst.max(rel_diff(&via_m, &via_t) * norm2(&via_t) / norm2(&f));
    }
    Ok(worst)
}
