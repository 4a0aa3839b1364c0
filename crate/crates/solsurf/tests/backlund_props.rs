use proptest::prelude::*;
use solsurf::backlund::*;
use solsurf::numerics::{Field, Grid2, Plane};

fn square(l: f64, n: usize) -> Grid2 {
    Grid2::square(l, n, Plane::Real).unwrap()
}

#[test]
fn vacuum_transform_is_the_kink() {
    let g = square(4.0, 201);
    let r = auto_bt(&SGSolution::vacuum(g), 1.0, vacuum_kink_seed(&g, 1.0)).unwrap();
    assert!(!r.degenerate);
    let (c, fit) = fit_kink(&r.solution.u, 1.0, 1e-5);
    assert!(c.abs() < 1e-12, "{c}");
    assert!(fit.pass, "{}", fit.max);
    assert!(r.cross_order.pass);
}

#[test]
fn vacuum_transform_solves_sine_gordon_on_a_fine_patch() {
    let g = square(0.25, 2001);
    let r = auto_bt(&SGSolution::vacuum(g), 1.0, vacuum_kink_seed(&g, 1.0)).unwrap();
    let res = sg_residual(&r.solution.u, SgForm::LightCone, 1, 1e-7).unwrap();
    assert!(res.pass, "{}", res.max);
}

#[test]
fn vacuum_transform_is_monotone_with_full_range() {
    let g = square(6.0, 241);
    let u = auto_bt(&SGSolution::vacuum(g), 1.0, vacuum_kink_seed(&g, 1.0)).unwrap().solution.u;
    for j in 0..g.nv {
        for i in 1..g.nu {
            assert!(u.at(i, j) >= u.at(i - 1, j));
        }
    }
    let (lo, hi) = u.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo > 0.0 && lo < 1e-4 && hi < 2.0 * std::f64::consts::PI && hi > 2.0 * std::f64::consts::PI - 1e-4);
}

#[test]
fn parameter_scales_the_kink() {
    let g = square(2.0, 201);
    for a in [0.5, 2.0] {
        let r = auto_bt(&SGSolution::vacuum(g), a, vacuum_kink_seed(&g, a)).unwrap();
        let (_, fit) = fit_kink(&r.solution.u, a, 1e-5);
        assert!(fit.pass, "{a}: {}", fit.max);
    }
}

#[test]
fn second_transform_stays_on_shell() {
    let g = square(0.5, 1001);
    let kink = SGSolution::kink(g, 1.0, 0.0).unwrap();
    let r = auto_bt(&kink, 1.5, 0.5).unwrap();
    assert!(!r.degenerate);
    let res = sg_residual(&r.solution.u, SgForm::LightCone, 1, 1e-5).unwrap();
    assert!(res.pass, "{}", res.max);
}

#[test]
fn psi_satisfies_the_transformed_equation_and_eliminant() {
    let g = square(0.5, 2001);
    let kink = SGSolution::kink(g, 1.0, 0.0).unwrap();
    let r = bt_psi(&kink, 0.0).unwrap();
    let t = transformed_residual(&r.psi, 1, 1e-6).unwrap();
    assert!(t.pass, "{}", t.max);
    let e = eliminant_residual(&r.psi, 0.05, 1, 1e-5).unwrap();
    assert!(e.pass, "{}", e.max);
    assert!(e.evaluated > g.len() / 2);
    // sin u is recovered pointwise as well.
    let (s, _) = reconstruct_u(&r.psi).unwrap();
    let mask = solsurf::numerics::interior_mask(&g, 1);
    for k in 0..g.len() {
        if mask[k] {
            assert!((s.data[k] - kink.u.data[k].sin()).abs() < 1e-5);
        }
    }
}

#[test]
fn vacuum_psi_depends_on_x_plus_t_only() {
    let g = square(1.0, 101);
    let psi = bt_psi(&SGSolution::vacuum(g), 0.3).unwrap().psi;
    for j in 1..g.nv {
        for i in 0..g.nu - 1 {
            assert!((psi.at(i, j) - psi.at(i + 1, j - 1)).abs() <= 1e-8);
        }
    }
}

#[test]
fn cross_order_witnesses_compatibility() {
    let g = square(1.0, 201);
    let on = bt_psi(&SGSolution::kink(g, 1.0, 0.0).unwrap(), 0.2).unwrap().cross_order.max;
    let off_u = Field::from_fn(g, |x, t| 4.0 * (x + t).exp().atan() + 0.1 * (x * t).sin());
    let off = bt_psi(&SGSolution::new(off_u).unwrap(), 0.2).unwrap().cross_order.max;
    assert!(on < 1e-6, "{on}");
    assert!(off > 1e-2, "{off}");
    let mut last = on;
    for eps in [0.01, 0.05, 0.1] {
        let u = Field::from_fn(g, |x, t| 4.0 * (x + t).exp().atan() + eps * (x * t).sin());
        let d = bt_psi(&SGSolution::new(u).unwrap(), 0.2).unwrap().cross_order.max;
        assert!(d > last, "{eps}: {d} {last}");
        last = d;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn kink_fit_recovers_the_shift(c in -2.0..2.0f64, a in 0.5..2.0f64) {
        let g = square(2.0, 41);
        let k = SGSolution::kink(g, a, c).unwrap();
        let (fitted, rep) = fit_kink(&k.u, a, 1e-10);
        prop_assert!((fitted - c).abs() < 1e-9);
        prop_assert!(rep.pass);
    }
}
