//! Task execution: `phase` and `spectrum` first, then `levinson` beside
//! `waveop`, then `kernels` on top of the operators.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use halfline::kernelalg::{
    f2_matrix, f_kernels_from_points, identity_checks, kernel_cut, kinks, potential_function, u_factorized, KernelPoint,
};
use halfline::levinson::{boundary_symbol, levinson_verify, symbol_scattering_data, WindingReport};
use halfline::linalg::CMat;
use halfline::waveop::{bound_state_vectors, mellin_identity_check, remainder_extract, WaveOperators};
use halfline::{Potential, Scattering, ScatteringData, Spectrum, VolterraSolver, XGrid, C64};

use crate::artifacts::ArtifactDir;
use crate::config::{RunConfig, Task};
use crate::error::Result;
use crate::report::{Check, Meta, RunReport, Status, TaskReport};

/// Sample panel `(x, k)` of the kernel identities.
pub const IDENTITY_PANEL: [(f64, f64); 3] = [(0.0, 1.0), (0.5, 2.0), (1.0, 0.5)];

struct Ctx<'a> {
    cfg: &'a RunConfig,
    p: Potential,
    sc: Scattering,
    out: &'a ArtifactDir,
}

type Step<T> = std::result::Result<(TaskReport, T), String>;

/// Runs the requested tasks with their prerequisites, writes artifacts and
/// `report.json`/`report.txt` under the output directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let hash = cfg.hash();
    let out = ArtifactDir::create(&cfg.output.dir, cfg.output.gzip, &hash)?;
    let p = cfg.potential.build().expect("validated");
    let ctx = Ctx { cfg, p, sc: Scattering::new(VolterraSolver::new()), out: &out };

    let wanted = closure(&cfg.requested());
    let on = |t: Task| wanted.contains(&t);
    let mut seconds = BTreeMap::new();

    let ((phase, t_phase), (spectrum, t_spec)) = rayon::join(
        || timed(|| on(Task::Phase).then(|| phase_task(&ctx))),
        || timed(|| on(Task::Spectrum).then(|| spectrum_task(&ctx))),
    );
    seconds.insert("phase".to_string(), t_phase);
    seconds.insert("spectrum".to_string(), t_spec);

    let spec_ok = match &spectrum {
        Some(Ok((_, s))) => Some(s),
        _ => None,
    };
    let blocked = |t: Task, dep: Task| format!("{}: prerequisite {} did not complete", t.name(), dep.name());

    let ((levinson, t_lev), ((waveop, t_wave), (kernels, t_ker))) = rayon::join(
        || {
            timed(|| {
                on(Task::Levinson).then(|| match spec_ok {
                    Some(s) => levinson_task(&ctx, s),
                    None => Err(blocked(Task::Levinson, Task::Spectrum)),
                })
            })
        },
        || {
            let (waveop, t_wave) = timed(|| {
                on(Task::Waveop).then(|| match spec_ok {
                    Some(s) => waveop_task(&ctx, s),
                    None => Err(blocked(Task::Waveop, Task::Spectrum)),
                })
            });
            let ops = match &waveop {
                Some(Ok((_, o))) => Some(o),
                _ => None,
            };
            let kernels = timed(|| {
                on(Task::Kernels).then(|| match ops {
                    Some((o, kt)) => kernels_task(&ctx, o, kt),
                    None => Err(blocked(Task::Kernels, Task::Waveop)),
                })
            });
            ((waveop, t_wave), kernels)
        },
    );
    seconds.insert("levinson".to_string(), t_lev);
    seconds.insert("waveop".to_string(), t_wave);
    seconds.insert("kernels".to_string(), t_ker);

    let mut breakdown = false;
    let mut tasks = Vec::new();
    let mut collect = |t: Task, r: Option<std::result::Result<TaskReport, String>>| {
        tasks.push(match r {
            None => TaskReport::skipped(t.name(), "not requested"),
            Some(Ok(rep)) => rep,
            Some(Err(e)) => {
                let blocked = e.contains("prerequisite");
                breakdown |= !blocked;
                let mut rep = TaskReport::new(t.name());
                rep.status = if blocked { Status::Skipped } else { Status::Fail };
                rep.error = Some(e);
                rep
            }
        });
    };
    let eps_disc = match &waveop {
        Some(Ok((_, (o, _)))) => Some(o.eps_disc),
        _ => None,
    };
    let winding = match &levinson {
        Some(Ok((_, w))) => Some(w.clone()),
        _ => None,
    };
    let bound_states = spec_ok.map(|s| s.count());
    collect(Task::Phase, phase.map(|r| r.map(|x| x.0)));
    collect(Task::Spectrum, spectrum.map(|r| r.map(|x| x.0)));
    collect(Task::Levinson, levinson.map(|r| r.map(|x| x.0)));
    collect(Task::Waveop, waveop.map(|r| r.map(|x| x.0)));
    collect(Task::Kernels, kernels);

    let report = RunReport {
        config_hash: hash,
        config: cfg.clone(),
        potential: cfg.potential.to_string(),
        eps_disc,
        bound_states,
        winding,
        tasks,
        breakdown,
        meta: Meta { version: env!("CARGO_PKG_VERSION").to_string(), seconds },
    };
    out.text("report.json", &report.to_json())?;
    out.text("report.txt", &report.to_text())?;
    Ok(report)
}

/// Requested tasks plus everything they depend on.
pub fn closure(requested: &[Task]) -> Vec<Task> {
    let mut out: Vec<Task> = Vec::new();
    let mut stack = requested.to_vec();
    while let Some(t) = stack.pop() {
        if !out.contains(&t) {
            out.push(t);
            stack.extend_from_slice(t.prerequisites());
        }
    }
    out.sort();
    out
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed().as_secs_f64())
}

fn numerical<T>(task: Task, r: halfline::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{}: {e}", task.name()))
}

fn artifact(task: Task, r: Result<String>) -> std::result::Result<String, String> {
    r.map_err(|e| format!("{}: writing artifact: {e}", task.name()))
}

fn phase_task(ctx: &Ctx) -> Step<ScatteringData> {
    let t = Task::Phase;
    let g = &ctx.cfg.grid;
    let tol = &ctx.cfg.tolerances;
    let sd = numerical(t, symbol_scattering_data(&ctx.sc, &ctx.p, (g.k_min.ln(), g.k_max.ln()), g.phase_points))?;
    let mut rep = TaskReport::new(t.name());
    rep.check(Check::below("unitarity", sd.max_unitarity_defect(), tol.unitarity));
    let rel = sd.s.iter().zip(&sd.eta).map(|(s, e)| (s - C64::from_polar(1.0, -2.0 * e)).norm()).fold(0.0, f64::max);
    rep.check(Check::below("s_vs_phase", rel, tol.unitarity));
    rep.check(Check::below("eta_at_k_max", sd.eta.last().copied().unwrap_or(0.0).abs(), PI / 4.0));

    let ks = [0.5, 1.0, 2.0, 4.0, 8.0];
    let xg = numerical(t, XGrid::uniform(5.0, 0.05))?;
    let pt = numerical(t, ctx.sc.solver.p_kernel_and_estimates(&ctx.p, &ks, &xg))?;
    let count = |e: &Vec<Vec<bool>>| e.iter().flatten().filter(|b| !**b).count() as f64;
    rep.check(Check::equal("estimate1_violations", count(&pt.estimate1), 0.0));
    rep.check(Check::equal("estimate2_violations", count(&pt.estimate2), 0.0));
    rep.value("estimate1_c_fit", pt.c1_fit);
    rep.value("estimate1_c_theory", pt.c1_theory);
    rep.value("estimate2_c_fit", pt.c2_fit);
    rep.value("estimate2_c_theory", pt.c2_theory);

    rep.value("w0_re", sd.w0.re);
    rep.value("w0_im", sd.w0.im);
    rep.value("resonance", if sd.resonance { 1.0 } else { 0.0 });
    rep.value("levinson_phase", sd.levinson_phase());
    rep.value("samples", sd.k.len() as f64);
    let rows = (0..sd.k.len()).map(|j| [sd.k[j], sd.w[j].re, sd.w[j].im, sd.amplitude[j], sd.eta[j], sd.s[j].re, sd.s[j].im]);
    rep.artifacts.push(artifact(t, ctx.out.csv("phase", &["k", "w_re", "w_im", "amplitude", "eta", "s_re", "s_im"], rows))?);
    Ok((rep.finish(), sd))
}

fn spectrum_task(ctx: &Ctx) -> Step<Spectrum> {
    let t = Task::Spectrum;
    let g = &ctx.cfg.grid;
    let spec = numerical(t, ctx.sc.bound_states(&ctx.p, g.kappa_max, g.kappa_x_ref))?;
    let mut rep = TaskReport::new(t.name());
    let mut worst: f64 = 0.0;
    for &kappa in &spec.kappa {
        let w = numerical(t, ctx.sc.jost_function(&ctx.p, C64::new(0.0, kappa)))?;
        worst = worst.max(w.norm());
    }
    rep.check(Check::below("jost_at_roots", worst, ctx.cfg.tolerances.bound_state_root));
    let probe = numerical(t, ctx.sc.resonance_probe(&ctx.p))?;
    rep.value("bound_states", spec.count() as f64);
    rep.value("resonance", if probe.resonance { 1.0 } else { 0.0 });
    rep.value("delta", probe.delta);
    let rows = (0..spec.count()).map(|j| [spec.kappa[j], spec.energies[j], spec.norms[j], spec.slopes[j]]);
    rep.artifacts.push(artifact(t, ctx.out.csv("spectrum", &["kappa", "energy", "norm", "slope"], rows))?);
    Ok((rep.finish(), spec))
}

fn levinson_task(ctx: &Ctx, spec: &Spectrum) -> Step<WindingReport> {
    let t = Task::Levinson;
    let g = &ctx.cfg.grid;
    let tol = &ctx.cfg.tolerances;
    let beta = (g.beta_range[0], g.beta_range[1]);
    let sd = numerical(t, symbol_scattering_data(&ctx.sc, &ctx.p, beta, g.phase_points))?;
    let sym = numerical(t, boundary_symbol(&sd, (g.alpha_range[0], g.alpha_range[1]), beta, g.alpha_points))?;
    let w = numerical(t, levinson_verify(&sym, spec, Some(&sd)))?;
    let mut rep = TaskReport::new(t.name());
    if let Some(c) = w.classical_residual {
        rep.check(Check::below("classical", c.abs(), tol.levinson_classical));
    }
    rep.value("classical_at_k_min", (-sd.eta[0] - PI * (spec.count() as f64 + sd.delta)).abs());
    rep.check(Check::below("winding_total", (w.total - w.expected_index as f64).abs(), tol.winding));
    if sd.resonance {
        rep.check(Check::below("resonant_edge", (w.wn2 + 0.5).abs(), tol.resonance_edge));
    }
    let edges = [&sym.gamma1, &sym.gamma2, &sym.gamma3, &sym.gamma4];
    let rows = edges
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |(t, z)| [(i + 1) as f64, *t, z.re, z.im]));
    rep.artifacts.push(artifact(t, ctx.out.csv("levinson_edges", &["edge", "param", "re", "im"], rows))?);
    Ok((rep.finish(), w))
}

fn waveop_task(ctx: &Ctx, spec: &Spectrum) -> Step<(WaveOperators, CMat)> {
    let t = Task::Waveop;
    let tol = &ctx.cfg.tolerances;
    let grid = numerical(t, ctx.cfg.wave_grid())?;
    let (ops, kt, hs) = numerical(t, remainder_extract(&ctx.sc, &ctx.p, &grid))?;
    let band = tol.disc_factor * ops.eps_disc;
    let iso = tol.isometry.unwrap_or(band);
    let mut rep = TaskReport::new(t.name());
    rep.value("eps_disc", ops.eps_disc);
    let (unit, comm) = ops.smatrix_checks();
    rep.check(Check::below("s_unitary", unit, band));
    rep.check(Check::below("s_commutes_h0", comm, band));
    rep.check(Check::below("isometry", ops.isometry_defect(), iso));
    rep.check(Check::below("coisometry", ops.coisometry_defect(), iso));
    rep.check(Check::below("wplus_identity", ops.wplus_identity(), band));
    rep.check(Check::below("dilation_b", ops.dilation_b_check(), band));
    let (inter, fd, budget) = ops.intertwining();
    rep.check(Check::below("intertwining", inter, band));
    rep.check(Check::below("intertwining_fd", fd, budget));
    rep.check(Check::below("formula", ops.formula_residual(&kt), band));
    let mellin = numerical(t, mellin_identity_check(&ops, ctx.cfg.grid.mellin_log2))?;
    rep.check(Check::below("mellin_phi_a", mellin, band));

    let bv = numerical(t, bound_state_vectors(&ctx.sc, &ctx.p, spec, &grid))?;
    let (rank, _) = ops.rank_defect(&bv);
    rep.check(Check::equal("rank_defect", rank as f64, spec.count() as f64));

    rep.value("k_frobenius", hs.frobenius);
    rep.value("k_tail_fraction", hs.tail_fraction);
    if let Some(r) = hs.refined_frobenius {
        rep.value("k_frobenius_refined", r);
    }
    // both norms at the noise floor count as stable
    let change = if hs.frobenius.max(hs.refined_frobenius.unwrap_or(0.0)) < band {
        0.0
    } else {
        hs.refinement_change().unwrap_or(f64::INFINITY)
    };
    rep.check(Check::below("refinement_change", change, tol.refinement));
    let rows = hs.singular_values.iter().enumerate().map(|(i, s)| [i as f64, *s]);
    rep.artifacts.push(artifact(t, ctx.out.csv("k_singular_values", &["index", "sigma"], rows))?);
    Ok((rep.finish(), (ops, kt)))
}

fn kernels_task(ctx: &Ctx, ops: &WaveOperators, kt: &CMat) -> std::result::Result<TaskReport, String> {
    let t = Task::Kernels;
    let tol = &ctx.cfg.tolerances;
    let p = &ctx.p;
    let mut rep = TaskReport::new(t.name());

    let dense: Vec<f64> = (0..800).map(|i| 0.05 + 0.0125 * i as f64).collect();
    let sd = numerical(t, ctx.sc.smatrix_and_phase(p, &dense))?;
    let pts: Vec<KernelPoint> = IDENTITY_PANEL
        .iter()
        .map(|&(_, k)| KernelPoint::new(&ctx.sc, p, &sd, k))
        .collect::<halfline::Result<_>>()
        .map_err(|e| format!("kernels: {e}"))?;
    let xs: Vec<f64> = IDENTITY_PANEL.iter().map(|s| s.0).collect();

    let checks = numerical(t, identity_checks(p, &pts, &xs, tol.identity))?;
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for c in &checks {
        let e = worst.entry(c.identity).or_insert(0.0);
        *e = e.max(c.residual);
    }
    for (name, r) in &worst {
        if name.contains("right-nested") {
            rep.value("right_nested_star_residual", *r);
        } else {
            rep.check(Check::below(&format!("identity {name}"), *r, tol.identity));
        }
    }
    rep.artifacts.push(artifact(t, ctx.out.json("identities", &checks))?);

    let x_end = kernel_cut(p);
    let kk = kinks(p);
    let v = numerical(t, potential_function(p, x_end))?;
    let vv = numerical(t, p.tail_function(x_end))?;
    let (mut fact, mut dec, mut dec_budget): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (pt, &x) in pts.iter().zip(&xs) {
        let sp = numerical(t, pt.space(p))?;
        let w1 = numerical(t, sp.w_bracket(&[&vv]))?.eval(x).re;
        fact = fact.max((numerical(t, u_factorized(&[&vv], &kk, x, pt.k, pt.eta, x_end))? - w1).abs());

        let total = numerical(t, sp.p_n(&v, &pt.jost, 1).and_then(|a| sp.r_sum(&v, &vv, 1).and_then(|b| a.add(&b))))?;
        let pv = pt.jost.p_value(x);
        let f2 = (pv * pt.s - pv.conj()) / C64::new(0.0, 2.0) * (2.0 / PI).sqrt();
        dec = dec.max((total.eval(x) * C64::from_polar(1.0, -pt.eta) - f2).norm());
        dec_budget = dec_budget.max(total.tail_bound);
    }
    rep.check(Check::below("u_factorization_n1", fact, tol.factorization));
    rep.check(Check::below("decomposition_n1", dec, tol.decomposition + dec_budget));
    rep.value("decomposition_tail_bound", dec_budget);

    let f2 = numerical(t, f2_matrix(&ctx.sc, p, ops))?;
    rep.check(Check::below("f2_vs_operator_k", f2.sub(kt).frobenius(), ctx.cfg.tolerances.disc_factor * ops.eps_disc));

    let px: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    let fk = numerical(t, f_kernels_from_points(&px, &pts))?;
    rep.value("f_algebra_residual", fk.algebra_residual);
    if let Some(rho) = ctx.cfg.potential.rho() {
        rep.value("k2_envelope_constant", halfline::kernelalg::k2_envelope_constant(&fk.f2, rho));
    }
    let rows = px.iter().enumerate().flat_map(|(i, &x)| {
        let f2 = &fk.f2;
        pts.iter().enumerate().map(move |(j, pt)| [x, pt.k, f2.at(i, j).re, f2.at(i, j).im])
    });
    rep.artifacts.push(artifact(t, ctx.out.csv("kernel_f2", &["x", "k", "re", "im"], rows))?);
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_adds_prerequisites_in_order() {
        assert_eq!(closure(&[Task::Kernels]), vec![Task::Spectrum, Task::Waveop, Task::Kernels]);
        assert_eq!(closure(&[Task::Phase]), vec![Task::Phase]);
        assert_eq!(closure(&[Task::Levinson, Task::Phase]), vec![Task::Phase, Task::Spectrum, Task::Levinson]);
    }
}
