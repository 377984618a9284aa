//! Quadrature: Gauss–Legendre rules, Chebyshev–Lobatto panels with spectral
//! cumulative integration, and adaptive Simpson.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

/// Polynomial degree of a Chebyshev panel.
pub const CHEB_DEGREE: usize = 16;
/// Nodes per Chebyshev panel (endpoints included).
pub const NP: usize = CHEB_DEGREE + 1;

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes (increasing) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped onto `[a, b]`, appended to `xs`/`ws`.
pub fn push_gauss(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, xs: &mut Vec<f64>, ws: &mut Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (t, w) in rule.0.iter().zip(&rule.1) {
        xs.push(mid + half * t);
        ws.push(half * w);
    }
}

/// Reference Chebyshev–Lobatto panel on `[-1, 1]` with the linear maps
/// needed by the panel solvers.
#[derive(Debug, Clone)]
pub struct ChebRule {
    /// Nodes `t_j = −cos(jπ/n)`, increasing, endpoints included.
    pub t: [f64; NP],
    /// Clenshaw–Curtis weights.
    pub w: [f64; NP],
    /// Barycentric weights.
    pub bary: [f64; NP],
    /// `left[i][j] = ∫_{-1}^{t_i} ℓ_j`.
    pub left: [[f64; NP]; NP],
    /// `right[i][j] = ∫_{t_i}^{1} ℓ_j`.
    pub right: [[f64; NP]; NP],
    /// Spectral differentiation matrix.
    pub diff: [[f64; NP]; NP],
}

impl Default for ChebRule {
    fn default() -> Self {
        Self::new()
    }
}

impl ChebRule {
    /// Builds the degree-16 rule.
    pub fn new() -> Self {
        let n = CHEB_DEGREE;
        let mut t = [0.0; NP];
        for (j, tj) in t.iter_mut().enumerate() {
            *tj = -(PI * j as f64 / n as f64).cos();
        }
        t[n / 2] = 0.0;
        let mut bary = [0.0; NP];
        for (j, b) in bary.iter_mut().enumerate() {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            *b = if j == 0 || j == n { 0.5 * s } else { s };
        }
        let mut w = [0.0; NP];
        // Clenshaw–Curtis weights for even n.
        for (j, wj) in w.iter_mut().enumerate() {
            let theta = PI * j as f64 / n as f64;
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let bk = if k == n / 2 { 1.0 } else { 2.0 };
                s += bk / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
            }
            let cj = if j == 0 || j == n { 1.0 } else { 2.0 };
            *wj = cj / n as f64 * (1.0 - s);
        }
        let mut diff = [[0.0; NP]; NP];
        for i in 0..NP {
            let mut row = 0.0;
            for j in 0..NP {
                if i != j {
                    let d = (bary[j] / bary[i]) / (t[i] - t[j]);
                    diff[i][j] = d;
                    row += d;
                }
            }
            diff[i][i] = -row;
        }
        let gl = gauss_legendre(24);
        let mut left = [[0.0; NP]; NP];
        let mut right = [[0.0; NP]; NP];
        let mut basis = [0.0; NP];
        for i in 1..NP {
            let half = 0.5 * (t[i] + 1.0);
            let mid = 0.5 * (t[i] - 1.0);
            for (g, gw) in gl.0.iter().zip(&gl.1) {
                let s = mid + half * g;
                lagrange_basis(&t, &bary, s, &mut basis);
                for j in 0..NP {
                    left[i][j] += half * gw * basis[j];
                }
            }
        }
        for i in 0..NP {
            for j in 0..NP {
                right[i][j] = w[j] - left[i][j];
            }
        }
        for j in 0..NP {
            left[n][j] = w[j];
            right[n][j] = 0.0;
            right[0][j] = w[j];
        }
        ChebRule { t, w, bary, left, right, diff }
    }

    /// Nodes of the panel `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> [f64; NP] {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut x = [0.0; NP];
        for j in 0..NP {
            x[j] = mid + half * self.t[j];
        }
        x[0] = a;
        x[NP - 1] = b;
        x
    }

    /// Lagrange basis values at reference point `s ∈ [-1, 1]`.
    pub fn basis(&self, s: f64, out: &mut [f64; NP]) {
        lagrange_basis(&self.t, &self.bary, s, out);
    }

    /// Interpolates panel samples at reference point `s`.
    pub fn interp<T>(&self, vals: &[T; NP], s: f64) -> T
    where
        T: Copy + core::ops::Mul<f64, Output = T> + core::ops::Add<Output = T>,
    {
        let mut b = [0.0; NP];
        self.basis(s, &mut b);
        let mut acc = vals[0] * b[0];
        for j in 1..NP {
            acc = acc + vals[j] * b[j];
        }
        acc
    }
}

fn lagrange_basis(t: &[f64; NP], bary: &[f64; NP], s: f64, out: &mut [f64; NP]) {
    for j in 0..NP {
        if s == t[j] {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut den = 0.0;
    for j in 0..NP {
        let q = bary[j] / (s - t[j]);
        out[j] = q;
        den += q;
    }
    for o in out.iter_mut() {
        *o /= den;
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite Gauss–Legendre integration of `f` over `[a, b]` split at `breaks`
/// into pieces of width at most `h`.
pub fn composite_gauss<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    h: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let mut cuts = vec![a];
    for &c in breaks {
        if c > a && c < b {
            cuts.push(c);
        }
    }
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let pieces = ((hi - lo) / h).ceil().max(1.0) as usize;
        let step = (hi - lo) / pieces as f64;
        for p in 0..pieces {
            let pa = lo + step * p as f64;
            let pb = if p + 1 == pieces { hi } else { pa + step };
            let half = 0.5 * (pb - pa);
            let mid = 0.5 * (pa + pb);
            let mut s = 0.0;
            for (t, w) in rule.0.iter().zip(&rule.1) {
                s += w * f(mid + half * t);
            }
            total += half * s;
        }
    }
    total
}
