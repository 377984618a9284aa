//! Closed-form and independent-route oracles for potentials, solvers,
//! scattering data and the winding computation.

use std::f64::consts::PI;

use halfline::levinson::{boundary_symbol, levinson_verify, symbol_scattering_data};
use halfline::potentials::star_product;
use halfline::*;

fn sc() -> Scattering {
    Scattering::new(VolterraSolver::new())
}

/// `w(ζ) = e^{iζa}(cos qa − (iζ/q) sin qa)`, `q = √(ζ² + d)`.
fn well_jost(d: f64, a: f64, zeta: C64) -> C64 {
    let q = (zeta * zeta + d).sqrt();
    let i = C64::new(0.0, 1.0);
    (i * zeta * a).exp() * ((q * a).cos() - i * zeta / q * (q * a).sin())
}

/// Roots of `cos(qa) + (κ/q) sin(qa)`, `q = √(d − κ²)`, by bisection.
fn well_kappas(d: f64, a: f64) -> Vec<f64> {
    let f = |k: f64| {
        let q = (d - k * k).sqrt();
        (q * a).cos() + k / q * (q * a).sin()
    };
    let top = d.sqrt() * (1.0 - 1e-12);
    let n = 20_000;
    let mut out = Vec::new();
    for j in 0..n {
        let (mut lo, mut hi) = (top * j as f64 / n as f64, top * (j + 1) as f64 / n as f64);
        if lo == 0.0 {
            lo = 1e-12;
        }
        if f(lo) * f(hi) < 0.0 {
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if f(lo) * f(m) <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

#[test]
fn power_value_and_tail_functionals() {
    let p = Potential::power(1.0, 2.2).unwrap();
    assert!((p.eval(1.0) - 0.21763764082403103).abs() < 1e-14);
    let w = Potential::square_well(4.0, 1.0).unwrap();
    let t = w.tail_functionals(0.0).unwrap();
    assert!((t.vv + 4.0).abs() < 1e-12 && (t.abs_tail - 4.0).abs() < 1e-12 && (t.first_moment - 2.0).abs() < 1e-12);
    let z = Potential::zero().tail_functionals(2.5).unwrap();
    assert_eq!((z.vv, z.abs_tail, z.first_moment), (0.0, 0.0, 0.0));
}

#[test]
fn star_product_polynomial() {
    let w = Potential::square_well(4.0, 1.0).unwrap();
    let vv = w.tail_function(1.0).unwrap();
    let s = star_product(&vv, &vv).unwrap();
    assert!((s.eval(0.0) - 16.0 / 3.0).abs() < 1e-12);
    // ∫ₓ¹ 16(1−y)² dy = 16(1−x)³/3
    assert!((s.eval(0.4) - 16.0 * 0.6f64.powi(3) / 3.0).abs() < 1e-12);
    assert_eq!(star_product(&TailFunction::zero(), &vv).unwrap().eval(0.3), 0.0);
}

#[test]
fn square_well_jost_matches_closed_form() {
    let s = sc();
    let p = Potential::square_well(4.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..=200 {
        let k = 0.01 * 4000f64.powf(j as f64 / 200.0);
        let w = s.jost_function(&p, C64::new(k, 0.0)).unwrap();
        let exact = well_jost(4.0, 1.0, C64::new(k, 0.0));
        worst = worst.max((w - exact).norm() / exact.norm());
    }
    assert!(worst < 1e-8, "{worst:e}");
    let w0 = s.jost_function(&p, C64::new(0.0, 0.0)).unwrap();
    assert!((w0.re - 2f64.cos()).abs() < 1e-10 && w0.im.abs() < 1e-12);
}

#[test]
fn regular_solution_inside_well() {
    let p = Potential::square_well(4.0, 1.0).unwrap();
    let g = XGrid::uniform(1.0, 0.01).unwrap();
    let phi = VolterraSolver::new().solve_regular(&p, C64::new(1.0, 0.0), &g).unwrap();
    let q = 5f64.sqrt();
    for (x, u) in g.points.iter().zip(&phi.values) {
        assert!((u - C64::new((q * x).sin() / q, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn jost_origin_and_rk4_cross_check() {
    let solver = VolterraSolver::new();
    let p = Potential::square_well(4.0, 1.0).unwrap();
    let q = 5f64.sqrt();
    let i = C64::new(0.0, 1.0);
    let exact = i.exp() * (q.cos() - i / q * q.sin());
    let (w, _) = solver.jost_at_origin(&p, C64::new(1.0, 0.0)).unwrap();
    assert!((w - exact).norm() < 1e-10);
    // no closed form for the exponential well: compare with an RK4 march
    let e = Potential::exponential(-1.0, 1.0).unwrap();
    let g = XGrid::uniform(2.0, 0.05).unwrap();
    for &k in &[0.3, 1.0, 4.0] {
        let z = C64::new(k, 0.0);
        let volterra = solver.solve_jost(&e, z, &g).unwrap();
        let rk4 = solver.back_integrate_jost(&e, z, &g, 200.0).unwrap();
        for j in (0..g.points.len()).step_by(10) {
            assert!((volterra.values[j] - rk4[j].0).norm() < 1e-8, "k={k} x={}", g.points[j]);
        }
    }
}

#[test]
fn p_estimate_at_origin() {
    let solver = VolterraSolver::new();
    let p = Potential::square_well(4.0, 1.0).unwrap();
    let g = XGrid::uniform(1.5, 0.05).unwrap();
    let t = solver.p_kernel_and_estimates(&p, &[5.0], &g).unwrap();
    assert!(t.all_hold());
    let jost = solver.jost_solution(&p, C64::new(5.0, 0.0)).unwrap();
    let w5 = well_jost(4.0, 1.0, C64::new(5.0, 0.0));
    assert!((jost.p_value(0.0).norm() - (w5 - 1.0).norm()).abs() < 1e-10);
    assert!(jost.p_value(1.5).norm() < 1e-13);
}

#[test]
fn bound_states_match_matching_condition() {
    let s = sc();
    for (d, n) in [(4.0, 1), (25.0, 2)] {
        let p = Potential::square_well(d, 1.0).unwrap();
        let spec = s.bound_states(&p, d.sqrt(), 1.0).unwrap();
        let oracle = well_kappas(d, 1.0);
        assert_eq!(spec.count(), n);
        assert_eq!(oracle.len(), n);
        for (a, b) in spec.kappa.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "d={d}: {a} vs {b}");
        }
    }
    let spec = s.bound_states(&Potential::square_well(4.0, 1.0).unwrap(), 2.0, 1.0).unwrap();
    assert!((spec.kappa[0] - 0.6380450482852378).abs() < 1e-10);
}

#[test]
fn power_potential_spectrum_frozen() {
    let s = sc();
    let p = Potential::power(-3.0, 2.2).unwrap();
    let spec = s.bound_states(&p, 2.0, 40.0).unwrap();
    let frozen = [0.2051791967191589, 0.010577030514960757, 9.452738995354614e-5];
    assert_eq!(spec.count(), 3);
    for (k, f) in spec.kappa.iter().zip(frozen) {
        assert!((k - f).abs() < 1e-9 * f, "{k} vs {f}");
    }
    // the RK4 march sees the two deeper roots as sign changes of w(iκ)
    let solver = VolterraSolver::new();
    let g = XGrid::from_points(vec![0.0, 1e-3]).unwrap();
    for &k in &frozen[..2] {
        let w = |kappa: f64| solver.back_integrate_jost(&p, C64::new(0.0, kappa), &g, 50.0).unwrap()[0].0.re;
        assert!(w(k * (1.0 - 1e-6)) * w(k * (1.0 + 1e-6)) < 0.0, "{k}");
    }
}

#[test]
fn resonance_detection() {
    let s = sc();
    let r = s.resonance_probe(&Potential::square_well(PI * PI / 4.0, 1.0).unwrap()).unwrap();
    assert!(r.resonance && r.delta == 0.5 && r.w0.norm() < 1e-12);
    let r = s.resonance_probe(&Potential::square_well(4.0, 1.0).unwrap()).unwrap();
    assert!(!r.resonance && (r.w0.re - 2f64.cos()).abs() < 1e-10);
    let r = s.resonance_probe(&Potential::zero()).unwrap();
    assert_eq!((r.w0, r.resonance, r.delta), (C64::new(1.0, 0.0), false, 0.0));
}

#[test]
fn low_energy_limits() {
    let s = sc();
    let ks: Vec<f64> = (0..400).map(|j| 1e-3 * 40_000f64.powf(j as f64 / 399.0)).collect();
    let sd = s.smatrix_and_phase(&Potential::square_well(4.0, 1.0).unwrap(), &ks).unwrap();
    assert!((sd.eta0 + PI).abs() < 1e-6, "{}", sd.eta0);
    let sd = s.smatrix_and_phase(&Potential::square_well(PI * PI / 4.0, 1.0).unwrap(), &ks).unwrap();
    assert!((sd.s[0] + 1.0).norm() < 1e-2);
    assert!(sd.resonance);
}

#[test]
fn regular_by_jost_consistency() {
    let s = sc();
    let r = s.consistency_regular_by_jost(&Potential::square_well(4.0, 1.0).unwrap(), &[0.5], &[1.0]).unwrap();
    assert!(r < 1e-8, "{r:e}");
    let r = s.consistency_regular_by_jost(&Potential::square_well(25.0, 1.0).unwrap(), &[2.0], &[3.0]).unwrap();
    assert!(r < 1e-8, "{r:e}");
    let r = s.consistency_regular_by_jost(&Potential::zero(), &[0.3, 2.0], &[0.5, 4.0]).unwrap();
    assert!(r < 1e-14);
}

fn levinson_fixture(p: &Potential, n: usize, delta: f64) {
    let s = sc();
    let beta = (-9.0, 7.0);
    let sd = symbol_scattering_data(&s, p, beta, 400).unwrap();
    let spec = s.bound_states(p, 10.0, 40.0).unwrap();
    assert_eq!(spec.count(), n);
    assert_eq!(sd.delta, delta);
    assert!((sd.levinson_phase() - PI * (n as f64 + delta)).abs() < 5e-3 * PI);
    let sym = boundary_symbol(&sd, (-8.0, 8.0), beta, 1601).unwrap();
    let rep = levinson_verify(&sym, &spec, Some(&sd)).unwrap();
    assert!((rep.total - n as f64).abs() < 5e-3, "{rep:?}");
    assert!(rep.pass);
    if delta > 0.0 {
        assert!((rep.wn2 + 0.5).abs() < 1e-4);
        assert!((rep.wn1 + 0.5).abs() < 2e-3);
    }
}

#[test]
fn levinson_square_wells() {
    levinson_fixture(&Potential::square_well(4.0, 1.0).unwrap(), 1, 0.0);
    levinson_fixture(&Potential::square_well(25.0, 1.0).unwrap(), 2, 0.0);
    levinson_fixture(&Potential::square_well(PI * PI / 4.0, 1.0).unwrap(), 0, 0.5);
}

#[test]
fn levinson_exponential_and_zero() {
    levinson_fixture(&Potential::exponential(-1.0, 1.0).unwrap(), 0, 0.0);
    levinson_fixture(&Potential::zero(), 0, 0.0);
}

#[test]
fn square_well_gamma1_winding() {
    let s = sc();
    let p = Potential::square_well(4.0, 1.0).unwrap();
    let sd = symbol_scattering_data(&s, &p, (-9.0, 7.0), 400).unwrap();
    let sym = boundary_symbol(&sd, (-8.0, 8.0), (-9.0, 7.0), 200).unwrap();
    let spec = s.bound_states(&p, 2.0, 1.0).unwrap();
    let rep = levinson_verify(&sym, &spec, None).unwrap();
    assert!((rep.wn1 + 1.0).abs() < 2e-3);
    assert_eq!(rep.wn2, 0.0);
}
