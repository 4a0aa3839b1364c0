//! One runner per job kind. Each fills a [`RunReport`] and may return a
//! surface for export.

use nalgebra::{Matrix2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solsurf::backlund::{
    auto_bt, bt_psi, eliminant_residual, fit_kink, sg_residual, transformed_residual, vacuum_kink_seed, SGSolution,
    SgForm,
};
use solsurf::frames::{
    kdv_cocycle, mc_cocycle_residual, sg_cocycle, sl2_decompose, zero_curvature_residual, Orientation, SolutionJet,
};
use solsurf::geometry::{check_pseudospherical, fundamental_forms, mainardi_codazzi_residual, Immersion3};
use solsurf::numerics::{interior_mask, Field, Grid2, Quadrature, ResidualReport, C64};
use solsurf::soliton::{euler_characteristic, sg_surface, sym_cross_check, CrossCheckOptions, SGLaxData, SymmetryField};
use solsurf::weierstrass::{
    conservation_residual, current_from_rho, default_exclusion, gw_residual, induce_surface, ll_residual,
    metric_check, p_equation_residual, path_spot_checks, quartic_fit, rho_to_spinors, sigma_residual,
    InduceOptions, Inducing, ManufacturedPair, MeanCurvatureField, PoleConfig,
};

use crate::config::{
    BacklundJob, ClassicalJob, ClassicalSurface, CocycleJob, CocycleSystem, Job, JobConfig, SeedSolution, SolitonJob,
    WeierstrassJob,
};
use crate::report::RunReport;
use crate::tolerances::Tolerances;

type JobResult = Result<Option<Immersion3>, String>;

fn named(mut r: ResidualReport, name: &str) -> ResidualReport {
    r.name = name.to_string();
    r
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Runs the configured job; errors inside a job become a failing entry so
/// the partial report is still produced.
pub fn execute(cfg: &JobConfig, report: &mut RunReport) -> Option<Immersion3> {
    let tol = cfg.tolerances().expect("validated config");
    let grid = cfg.grid().expect("validated config");
    let res = match &cfg.job {
        Job::Weierstrass(w) => weierstrass(w, grid, &tol, cfg.seed, report),
        Job::SolitonSurface(s) => soliton(s, grid, &tol, report),
        Job::Backlund(b) => backlund(b, grid, &tol, report),
        Job::ClassicalCheck(c) => classical(c, grid, &tol, report),
        Job::CocycleCheck(c) => cocycle(c, grid, &tol, cfg.seed, report),
    };
    match res {
        Ok(s) => s,
        Err(msg) => {
            report.failure(cfg.job.kind().name(), msg);
            None
        }
    }
}

fn weierstrass(w: &WeierstrassJob, grid: Grid2, tol: &Tolerances, seed: u64, rep: &mut RunReport) -> JobResult {
    let forced = w.manufactured.is_some();
    let (sigma, h, mask, poles) = match w.manufactured {
        Some(m) => {
            let pair = ManufacturedPair { kappa: m.kappa, d: m.d, c: m.c };
            (pair.sigma(grid).map_err(err)?, pair.h(grid).map_err(err)?, interior_mask(&grid, 2), None)
        }
        None => {
            let pc = PoleConfig::new(w.poles.iter().map(|p| C64::new(p[0], p[1])).collect()).map_err(err)?;
            let r = w.exclusion_radius.unwrap_or_else(|| default_exclusion(&grid));
            let mask = pc.keep_mask(&grid, r, 2);
            (pc.sigma(grid).map_err(err)?, MeanCurvatureField::constant(grid, w.h).map_err(err)?, mask, Some(pc))
        }
    };
    if !sigma.branch_points.is_empty() {
        rep.warnings.push(format!("{} square-root branch points on the grid", sigma.branch_points.len()));
    }
    let sig_tol = tol.get(if forced { "sigma-forced" } else { "sigma" });
    for r in sigma_residual(&sigma, Some(&h), &mask, sig_tol).map_err(err)? {
        rep.check(r);
    }
    let s = rho_to_spinors(&sigma, &h).map_err(err)?;
    for r in gw_residual(&s, &h, &mask, tol.get("gw")).map_err(err)? {
        rep.check(r);
    }
    let [c1, c2, c3, cj] = conservation_residual(&s, &h, &mask, tol.get("conservation")).map_err(err)?;
    for r in [c1, c2, c3] {
        rep.check(r);
    }
    rep.check(cj.retol(tol.get("current")));
    rep.check(p_equation_residual(&s, &h, &mask, tol.get("p-equation")).map_err(err)?);

    let jr = current_from_rho(&sigma, &h);
    let jf = s.current().map_err(err)?;
    let jd: Vec<f64> = (0..grid.len()).map(|k| (jf.data[k] - jr.data[k]).norm()).collect();
    rep.check(ResidualReport::from_values("j-identity", &jd, Some(&mask), tol.get("j-identity")));
    if let Some(pc) = &poles {
        // Closed forms p = |F|/(2H), J = F²/(4H) of the product solution.
        let (p0, j0) = pc.closed_p_and_j(grid);
        let p = s.p();
        let dp: Vec<f64> = (0..grid.len()).map(|k| p.data[k] - p0.data[k] / w.h).collect();
        let dj: Vec<f64> = (0..grid.len()).map(|k| (jr.data[k] - j0.data[k] / w.h).norm()).collect();
        rep.check(ResidualReport::from_values("closed-form-p", &dp, Some(&mask), tol.get("closed-form")));
        rep.check(ResidualReport::from_values("closed-form-j", &dj, Some(&mask), tol.get("closed-form")));
    }

    let ll_tol = tol.get(if forced { "landau-lifshitz-forced" } else { "landau-lifshitz" });
    let ll = ll_residual(&sigma, Some(&h), &mask, ll_tol).map_err(err)?;
    rep.check(ll.residual);
    rep.check(ll.algebraic.retol(tol.get("spin-algebra")));
    rep.diagnostic("spin-commutator-closed-form-max", ll.closed_form.max);

    let opts = InduceOptions {
        normalization: w.normalization,
        base: (w.base[0], w.base[1]),
        quadrature: Quadrature::EndCorrected,
    };
    let surf = induce_surface(&s, &opts).map_err(err)?;
    rep.warnings.extend(surf.warnings.iter().cloned());
    rep.diagnostic("printed-second-integral-gap", surf.printed_second_integral_gap);
    let spots = path_spot_checks(&s, &opts, &mask, w.spot_checks, seed, tol.get("path-independence")).map_err(err)?;
    if spots.notes.iter().any(|n| n == "inexact closure") {
        rep.warnings.push("inexact closure".into());
    }
    rep.check(spots);

    if w.normalization == Inducing::Generalized {
        let m = metric_check(&surf.immersion, &s, &mask, tol.get("mean-curvature-std")).map_err(err)?;
        rep.diagnostic("mean-curvature-mesh-average", m.mean_h);
        if forced {
            let forms = fundamental_forms(&surf.immersion, 1.0).map_err(err)?;
            let dev: Vec<f64> = (0..grid.len()).map(|k| (forms.H.data[k].abs() - h.h.data[k]).abs() / h.h.data[k]).collect();
            let r = ResidualReport::from_values("mesh-h-vs-h", &dev, Some(&mask), f64::INFINITY);
            rep.diagnostic("mesh-h-relative-deviation-max", r.max);
        } else {
            rep.check(m.h_rel_std);
        }
        rep.check(m.off_diagonal.retol(tol.get("conformal")));
        rep.check(m.isotropy.retol(tol.get("conformal")));
        rep.check(m.gaussian.retol(tol.get("gaussian-vs-p")));

        if let Some(pc) = poles.as_ref().filter(|pc| pc.poles.len() == 1 && pc.poles[0].im == 0.0) {
            let a = w.a_param.unwrap_or(pc.poles[0].re);
            let reference = w.quartic_reference.map_or((grid.nu / 2, grid.nv / 2), |r| (r[0], r[1]));
            let q_tol = tol.get("quartic");
            let frac = tol.get("quartic-fraction");
            let fit = quartic_fit(&surf.immersion, a, reference, &mask, q_tol, frac);
            let r = ResidualReport::scalar("quartic", 1.0 - fit.fraction, 1.0 - frac).with_note(format!(
                "value is the fraction of nodes with |LHS| > {q_tol}; max |LHS| = {:e}, median = {:e}",
                fit.max_abs, fit.median_abs
            ));
            rep.check(if fit.pass { r } else { ResidualReport { pass: false, ..r } });
            rep.diagnostic("quartic-fit", &fit);
        }
    }
    Ok(Some(surf.immersion))
}

fn soliton(s: &SolitonJob, grid: Grid2, tol: &Tolerances, rep: &mut RunReport) -> JobResult {
    let data = SGLaxData::kink(grid, s.a, s.lambda).map_err(err)?;
    let sym = SymmetryField::theta_v(&data).map_err(err)?.scaled(s.scale);
    let (u, v) = data.lax_pair().map_err(err)?;
    let (zc, _) = zero_curvature_residual(&u, &v, Orientation::Standard, 1, tol.get("zero-curvature")).map_err(err)?;
    rep.check(zc);
    let surf = sg_surface(&data, &sym).map_err(err)?;
    rep.warnings.extend(surf.warnings.iter().cloned());
    rep.warnings.extend(surf.frame.warnings.iter().cloned());
    rep.check(named(surf.frame.group.clone().retol(tol.get("frame-group")), "frame-group"));
    rep.check(named(surf.frame.cross_order.clone().retol(tol.get("cross-order")), "frame-cross-order"));
    rep.check(surf.immersion_cross_order.clone().retol(tol.get("cross-order")));
    let cc = sym_cross_check(&data, &surf, &CrossCheckOptions::default(), tol.get("forms-relative"), tol.get("area-integrand"))
        .map_err(err)?;
    for r in [cc.first_form, cc.second_form, cc.gaussian, cc.mean, cc.integrand] {
        rep.check(r);
    }
    rep.diagnostic("euler", euler_characteristic(&data, &sym, &surf).map_err(err)?);
    Ok(Some(surf.immersion))
}

fn backlund(b: &BacklundJob, grid: Grid2, tol: &Tolerances, rep: &mut RunReport) -> JobResult {
    let (base, default_seed) = match b.seed_solution {
        SeedSolution::Vacuum => (SGSolution::vacuum(grid), vacuum_kink_seed(&grid, b.a_param)),
        SeedSolution::Kink { a, c } => (SGSolution::kink(grid, a, c).map_err(err)?, std::f64::consts::PI),
    };
    let r = auto_bt(&base, b.a_param, b.seed.unwrap_or(default_seed)).map_err(err)?;
    rep.warnings.extend(r.warnings.iter().cloned());
    if r.degenerate {
        rep.warnings.push("degenerate transform: the result equals the seed solution".into());
    }
    let u = &r.solution.u;
    rep.check(sg_residual(u, SgForm::LightCone, 1, tol.get("sine-gordon")).map_err(err)?);
    rep.check(named(r.cross_order.clone().retol(tol.get("cross-order")), "transform-cross-order"));
    if b.seed_solution == SeedSolution::Vacuum {
        let (c, fit) = fit_kink(u, b.a_param, tol.get("kink-fit"));
        rep.check(fit);
        rep.diagnostic("kink-shift", c);
    }
    let psi = bt_psi(&r.solution, b.psi0).map_err(err)?;
    rep.warnings.extend(psi.warnings.iter().cloned());
    rep.diagnostic("psi-cross-order-max", psi.cross_order.max);
    rep.check(transformed_residual(&psi.psi, 1, tol.get("transformed-equation")).map_err(err)?);
    rep.check(eliminant_residual(&psi.psi, 0.05, 1, tol.get("eliminant")).map_err(err)?);
    let points = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            Vector3::new(grid.u(i), grid.v(j), u.data[k])
        })
        .collect();
    Ok(Some(Immersion3 { grid, points }))
}

fn classical(c: &ClassicalJob, grid: Grid2, tol: &Tolerances, rep: &mut RunReport) -> JobResult {
    let ct = tol.get("curvature");
    let surface = match c.surface {
        ClassicalSurface::Sphere => Immersion3::from_fn(grid, |t, p| {
            Vector3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
        }),
        ClassicalSurface::Plane => Immersion3::from_fn(grid, |u, v| Vector3::new(u + 0.5 * v, v, 0.3 * u - 0.2 * v)),
        ClassicalSurface::Tractroid => Immersion3::from_fn(grid, |u, v| {
            Vector3::new(v.cos() / u.cosh(), v.sin() / u.cosh(), u - u.tanh())
        }),
        ClassicalSurface::Pseudospherical => {
            let omega = Field::from_fn(grid, |u, v| 4.0 * (u + v).exp().atan());
            let p = check_pseudospherical(&omega, 1.0, tol.get("pseudospherical")).map_err(err)?;
            for r in p.codazzi {
                rep.check(r.retol(tol.get("mainardi-codazzi")));
            }
            rep.check(p.gauss);
            rep.check(p.sine_gordon);
            return Ok(None);
        }
    };
    // The inward normal gives the unit sphere H = +1.
    let sign = if c.surface == ClassicalSurface::Sphere { -1.0 } else { 1.0 };
    let forms = fundamental_forms(&surface, sign).map_err(err)?;
    let keep = forms.keep_mask(2);
    let (k_ref, h_ref) = match c.surface {
        ClassicalSurface::Sphere => (Some(1.0), Some(1.0)),
        ClassicalSurface::Plane => (Some(0.0), Some(0.0)),
        _ => (Some(-1.0), None),
    };
    if let Some(k0) = k_ref {
        let d: Vec<f64> = forms.K.data.iter().map(|k| k - k0).collect();
        rep.check(ResidualReport::from_values("gaussian-curvature", &d, Some(&keep), ct));
    }
    if let Some(h0) = h_ref {
        let d: Vec<f64> = forms.H.data.iter().map(|h| h - h0).collect();
        rep.check(ResidualReport::from_values("mean-curvature", &d, Some(&keep), ct));
    }
    for r in mainardi_codazzi_residual(&forms, 2, tol.get("mainardi-codazzi")).map_err(err)? {
        rep.check(r);
    }
    Ok(Some(surface))
}

fn cocycle(c: &CocycleJob, grid: Grid2, tol: &Tolerances, seed: u64, rep: &mut RunReport) -> JobResult {
    let id_tol = tol.get("cocycle-identity");
    let on_tol = tol.get("cocycle-on-shell");
    match c.system {
        CocycleSystem::SineGordon => {
            let jet = SolutionJet::from_fn(grid, |x, t| {
                let s = x + t;
                let (u, ux) = (4.0 * s.exp().atan(), 2.0 / s.cosh());
                let uxt = -2.0 * s.tanh() / s.cosh();
                [u, ux, ux, uxt, uxt, 0.0]
            });
            let r = mc_cocycle_residual(&sg_cocycle(&jet), 0, id_tol).map_err(err)?;
            let [r1, r2, r3] = r.reports;
            rep.check(r1);
            rep.check(r2);
            rep.check(r3.retol(on_tol));
            let d: Vec<f64> = (0..grid.len())
                .map(|k| r.fields[2].data[k] - (jet.u.data[k].sin() - jet.u_xt.data[k]))
                .collect();
            rep.check(ResidualReport::from_values("maurer-cartan-3-minus-sine-gordon", &d, None, id_tol));
        }
        CocycleSystem::Kdv => {
            let speed = c.speed;
            let k = speed.sqrt() / 2.0;
            let jet = SolutionJet::from_fn(grid, |x, t| {
                let s = k * (x - speed * t);
                let (th, sh2) = (s.tanh(), 1.0 / s.cosh().powi(2));
                let ux = speed * k * sh2 * th;
                let uxx = speed * k * k * (sh2 * sh2 - 2.0 * sh2 * th * th);
                let uxxx = speed * k.powi(3) * (4.0 * sh2 * th.powi(3) - 8.0 * sh2 * sh2 * th);
                [-(speed / 2.0) * sh2, ux, -speed * ux, uxx, -speed * uxx, uxxx]
            });
            let r = mc_cocycle_residual(&kdv_cocycle(&jet), 0, on_tol).map_err(err)?;
            for x in r.reports {
                rep.check(x);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::with_capacity(c.sl2_samples);
    while errs.len() < c.sl2_samples {
        let (a, b, cc) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if f64::abs(a) < 0.1 {
            continue;
        }
        let x = Matrix2::new(a, b, cc, (1.0 + b * cc) / a);
        let d = sl2_decompose(&x).map_err(err)?;
        errs.push((d.reconstruct() - x).amax());
    }
    rep.check(ResidualReport::from_values("sl2-round-trip", &errs, None, tol.get("sl2")));
    Ok(None)
}
