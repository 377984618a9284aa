//! Elementary kernels shared by the solvers: `sin(ζt)/ζ`, the bounded Jost
//! kernel `(e^{2iζt} − 1)/(2iζ)`, and the dilation symbols.

use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

/// Below this value of `|ζt|` the kernels switch to their Taylor series.
pub const SERIES_CUTOFF: f64 = 1e-4;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `e^z − 1` without cancellation for small `|z|`.
pub fn cexpm1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let half = 0.5 * z.im;
    let cm1 = -2.0 * half.sin() * half.sin();
    let ea = z.re.exp();
    C64::new(z.re.exp_m1() * c + cm1, ea * s)
}

/// `sin(ζt)/ζ`, continuous through `ζ = 0` where it equals `t`.
pub fn sin_over(zeta: C64, t: f64) -> C64 {
    let z = zeta * t;
    if z.norm() < SERIES_CUTOFF {
        let z2 = z * z;
        return (C64::new(1.0, 0.0) - z2 / 6.0 * (C64::new(1.0, 0.0) - z2 / 20.0 * (C64::new(1.0, 0.0) - z2 / 42.0))) * t;
    }
    z.sin() / zeta
}

/// `cos(ζt)`.
pub fn cos_of(zeta: C64, t: f64) -> C64 {
    (zeta * t).cos()
}

/// `(e^{2iζt} − 1)/(2iζ)`, bounded by `min(t, 1/|ζ|)` for `Im ζ ≥ 0`, `t ≥ 0`.
pub fn jost_kernel(zeta: C64, t: f64) -> C64 {
    let z = zeta * t;
    if z.norm() < SERIES_CUTOFF {
        // t · Σ (2iz)^n/(n+1)!
        let w = I * z * 2.0;
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..6 {
            term = term * w / (n as f64 + 1.0);
            sum += term;
        }
        return sum * t;
    }
    cexpm1(I * z * 2.0) / (I * zeta * 2.0)
}

/// The dilation symbol `φ(t) = 1/(i e^{πt} + 1)`.
pub fn phi_symbol(t: f64) -> C64 {
    if t > 0.0 {
        let e = (-PI * t).exp();
        C64::new(e, 0.0) / (I + e)
    } else {
        C64::new(1.0, 0.0) / (I * (PI * t).exp() + 1.0)
    }
}

/// The dilation symbol `ψ(t) = 1/(1 − i e^{−πt})`, equal to `1 − φ(t)`.
pub fn psi_symbol(t: f64) -> C64 {
    if t < 0.0 {
        let e = (PI * t).exp();
        C64::new(e, 0.0) / (e - I)
    } else {
        C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - I * (-PI * t).exp())
    }
}

/// Principal argument of `b/a` in `(−π, π]`.
pub fn phase_step(a: C64, b: C64) -> f64 {
    (b * a.conj()).arg()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_over_matches_limit_and_direct() {
        let z = C64::new(0.3, 0.2);
        let d = (z * 2.0).sin() / z;
        assert!((sin_over(z, 2.0) - d).norm() < 1e-15);
        assert_eq!(sin_over(C64::new(0.0, 0.0), 1.5), C64::new(1.5, 0.0));
        let tiny = C64::new(1e-9, 0.0);
        assert!((sin_over(tiny, 3.0).re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn jost_kernel_branches_agree() {
        for &zeta in &[C64::new(2.0, 0.0), C64::new(0.0, 1.5), C64::new(0.7, 0.4)] {
            let t = 0.8;
            let direct = ((I * zeta * 2.0 * t).exp() - 1.0) / (I * zeta * 2.0);
            assert!((jost_kernel(zeta, t) - direct).norm() < 1e-14);
        }
        // across the series cutoff
        let zeta = C64::new(1.0, 0.0);
        let t = 0.999_999 * SERIES_CUTOFF;
        let direct = cexpm1(I * zeta * 2.0 * t) / (I * zeta * 2.0);
        assert!((jost_kernel(zeta, t) - direct).norm() < 1e-15 * t);
    }

    #[test]
    fn symbols_are_complementary() {
        for &t in &[-20.0, -3.0, -0.2, 0.0, 0.4, 5.0, 20.0] {
            assert!((phi_symbol(t) + psi_symbol(t) - 1.0).norm() < 1e-15);
            assert!(phi_symbol(t).norm() <= 1.0 + 1e-15);
        }
        assert!((phi_symbol(0.0) - C64::new(0.5, -0.5)).norm() < 1e-16);
    }
}
