use colombeau_wave::asymptotics::{
    classify_moderate, classify_negligible, fit_order, ginf_report, l1g_limit, weak_limit, FitOutcome, OrderOutcome,
};
use colombeau_wave::kernel::family::Provenance;
use colombeau_wave::mollify::{imbed, DataExpr, DistributionSpec, LineGeometry, Mollifier, SmoothFn, DEFAULT_SAMPLES_PER_UNIT};
use colombeau_wave::wave::{solve_family, PicardSettings};
use colombeau_wave::{
    EpsilonLadder, Family1, Grid1, Interval, MultiIndex, Nonlinearity, RepresentativeFamily, Sampled, TestFunction,
    Trapezoid,
};

fn moll() -> Mollifier {
    Mollifier::build(2, DEFAULT_SAMPLES_PER_UNIT).unwrap()
}

fn ladder() -> EpsilonLadder {
    EpsilonLadder::geometric(0.125, 0.5, 6).unwrap()
}

fn geometry() -> LineGeometry {
    LineGeometry { half_width: 2.0, points_per_eps: 8 }
}

fn family(expr: &DataExpr) -> Family1 {
    imbed(expr, &ladder(), &moll(), geometry()).unwrap()
}

/// Members `g(ε, x)` on the same lattices as `like`.
fn synthetic(like: &Family1, g: impl Fn(f64, f64) -> f64 + Sync) -> Family1 {
    let members = like
        .iter()
        .map(|(eps, u)| Grid1::from_fn(u.h(), u.origin_index(), u.len(), |x| g(eps, x)).unwrap())
        .collect();
    RepresentativeFamily::new(like.ladder().clone(), members, Provenance::Derived).unwrap()
}

fn catalog() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::Zero,
        Nonlinearity::Linear { k: -1.5 },
        Nonlinearity::Sine { amplitude: 0.7 },
        Nonlinearity::Squash { limit: 2.0 },
        Nonlinearity::OddSquash { scale: 1.0 },
    ]
}

fn heaviside() -> DataExpr {
    DistributionSpec::Heaviside { x0: 0.0 }.into()
}

fn inner() -> Interval {
    Interval::new(-1.0, 1.0).unwrap()
}

#[test]
fn delta_orders_are_one_plus_derivative_order() {
    let p = moll();
    let u = family(&DataExpr::delta(0.0));
    let rows = classify_moderate(&u, &inner(), 3).unwrap();
    // Sup of the profile from a dense sample, independent of the grid members.
    let dense_sup = (0..=200_000).map(|i| p.eval(-10.0 + i as f64 * 1e-4).abs()).fold(0.0f64, f64::max);
    for r in &rows {
        let want = 1.0 + r.alpha.dx as f64;
        let order = r.order().unwrap();
        assert!((order - want).abs() < 0.1, "alpha {:?}: order {order}", r.alpha);
        assert!(r.r2().unwrap() >= 0.999);
        if r.alpha == MultiIndex::ZERO {
            for (eps, n) in ladder().values().iter().zip(&r.norms) {
                assert!((n * eps / dense_sup - 1.0).abs() < 1e-3, "eps {eps}: {n}");
            }
        }
    }
}

#[test]
fn imbedded_sine_has_bounded_derivatives() {
    let sin: DataExpr = DistributionSpec::Smooth { function: SmoothFn::sin() }.into();
    let rows = classify_moderate(&family(&sin), &inner(), 3).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!(r.order().unwrap().abs() < 0.1, "alpha {:?}: {:?}", r.alpha, r.order());
    }
}

#[test]
fn fifth_power_family_is_negligible_only_up_to_order_five() {
    let base = family(&DataExpr::Zero);
    let u = synthetic(&base, |eps, x| eps.powi(5) * x.sin());
    assert!(classify_negligible(&u, &inner(), 3, 4.0).unwrap().negligible);
    assert!(!classify_negligible(&u, &inner(), 3, 6.0).unwrap().negligible);
    assert!(classify_negligible(&u, &inner(), 3, 2.0).is_err());
}

#[test]
fn delta_vanishes_away_from_its_support() {
    let p = moll();
    let far = Interval::new(1.5, 1.9).unwrap();
    assert!(p.cutoff_radius() * ladder().eps_max() < 1.5);
    let u = family(&DataExpr::delta(0.0));
    let v = classify_negligible(&u, &far, 3, 5.0).unwrap();
    assert!(v.negligible);
    for r in &v.rows {
        assert!(r.norms.iter().all(|&n| n == 0.0));
        assert!(matches!(r.outcome, OrderOutcome::Vanishing));
    }
    assert!(matches!(fit_order(ladder().values(), &v.rows[0].norms).unwrap(), FitOutcome::IdenticallyZero));
}

#[test]
fn delta_pairs_to_point_value() {
    let psi = TestFunction::Bump1 { center: 0.1, radius: 0.5 };
    let v = weak_limit(&family(&DataExpr::delta(0.0)), &[psi]).unwrap();
    assert!(v.converged());
    let want = psi.eval1(0.0).unwrap();
    assert!((v.entries[0].limit.unwrap() - want).abs() < 1e-6);
}

#[test]
fn delta_squared_pairings_grow_like_inverse_eps() {
    let p = moll();
    let psi = TestFunction::Bump1 { center: 0.0, radius: 0.5 };
    let v = weak_limit(&family(&DataExpr::delta_squared(0.0)), &[psi]).unwrap();
    let e = &v.entries[0];
    assert!(!e.converged && e.limit.is_none());
    for (eps, pairing) in ladder().values().iter().zip(&e.pairings) {
        // ψ(0) = 1 and ψ is flat to second order at the origin.
        let want = p.l2_squared() / eps;
        assert!((pairing / want - 1.0).abs() < 1e-2, "eps {eps}: {pairing} vs {want}");
    }
    let FitOutcome::Fit(f) = fit_order(&v.eps, &e.pairings).unwrap() else { panic!() };
    assert!((f.order - 1.0).abs() < 0.1);
}

#[test]
fn negligible_perturbation_keeps_weak_limits() {
    let tests = [
        TestFunction::Bump1 { center: 0.0, radius: 0.5 },
        TestFunction::Bump1 { center: -0.3, radius: 0.8 },
    ];
    let u = family(&heaviside());
    let n = synthetic(&u, |eps, x| eps.powi(6) * (3.0 * x).cos());
    assert!(classify_negligible(&n, &inner(), 3, 5.0).unwrap().negligible);
    let a = weak_limit(&u, &tests).unwrap();
    let b = weak_limit(&u.add(&n).unwrap(), &tests).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert!(x.converged && y.converged);
        assert!((x.limit.unwrap() - y.limit.unwrap()).abs() <= 1e-8);
    }
}

#[test]
fn heaviside_converges_in_l1_and_delta_does_not() {
    let h = l1g_limit(&family(&heaviside()), &inner()).unwrap();
    assert!(h.converged);
    assert!((h.fit.as_ref().unwrap().decay() - 1.0).abs() < 0.1);

    let p = moll();
    let u = family(&DataExpr::delta(0.0));
    let d = l1g_limit(&u, &inner()).unwrap();
    assert!(!d.converged);
    // ∫|φ_ε - φ_{ε/2}| = ∫|φ(y) - 2φ(2y)| dy for every ε.
    let dy = 1e-4;
    let r = p.cutoff_radius();
    let n = (2.0 * r / dy) as usize;
    let c: f64 = (0..n)
        .map(|i| {
            let y = -r + (i as f64 + 0.5) * dy;
            (p.eval(y) - 2.0 * p.eval(2.0 * y)).abs() * dy
        })
        .sum();
    for &(e0, _, dist) in &d.cauchy {
        assert!((dist / c - 1.0).abs() < 2e-2, "eps {e0}: {dist} vs {c}");
    }

    let sin: DataExpr = DistributionSpec::Smooth { function: SmoothFn::sin() }.into();
    assert!(l1g_limit(&family(&sin), &inner()).unwrap().converged);
}

#[test]
fn lipschitz_images_of_convergent_families_converge() {
    let u = family(&heaviside());
    let base = l1g_limit(&u, &inner()).unwrap();
    assert!(base.converged);
    let limit = &base.limit;
    let step = Grid1::from_fn(limit.h(), limit.origin_index(), limit.len(), |x| if x >= 0.0 { 1.0 } else { 0.0 }).unwrap();
    let to_step = limit.zip_with(&step, |a, b| a - b).unwrap().l1_on(&inner()).unwrap();
    for f in catalog() {
        let fu = u.pointwise_apply(&f);
        let r = l1g_limit(&fu, &inner()).unwrap();
        assert!(r.converged || f == Nonlinearity::Zero, "{}", f.label());
        let fstep = step.map(|v| f.eval(v));
        let gap = r.limit.zip_with(&fstep, |a, b| a - b).unwrap().l1_on(&inner()).unwrap();
        assert!(gap <= f.lipschitz() * to_step + 1e-14, "{}: {gap} vs {to_step}", f.label());
        // Members are resampled nodewise onto the finer lattice, so the chain
        // holds for each Cauchy distance.
        for (a, b) in r.cauchy.iter().zip(&base.cauchy) {
            assert!(a.2 <= f.lipschitz() * b.2 * (1.0 + 1e-9) + 1e-14, "{}: {} vs {}", f.label(), a.2, b.2);
        }
    }
}

#[test]
fn singular_verdicts_persist_under_cell_refinement() {
    let ladder = EpsilonLadder::geometric(1.0 / 64.0, std::f64::consts::FRAC_1_SQRT_2, 6).unwrap();
    let region = Trapezoid::new(1.0, 0.75).unwrap();
    let geom = LineGeometry { half_width: 1.0, points_per_eps: 8 };
    let p = moll();
    let a = imbed(&DataExpr::Zero, &ladder, &p, geom).unwrap();
    let b = imbed(&DistributionSpec::DeltaDerivative { x0: 0.0, order: 1 }.into(), &ladder, &p, geom).unwrap();
    let (u, _) = solve_family(&a, &b, None, Nonlinearity::Zero, &region, &PicardSettings::default()).unwrap();
    let coarse = ginf_report(&u, &region, 0.25, 3, 5.0).unwrap();
    let fine = ginf_report(&u, &region, 0.125, 3, 5.0).unwrap();
    let mut witnessed = 0;
    for c in coarse.singular_cells() {
        for s in &fine.cells {
            let inside = s.cell.x_lo >= c.cell.x_lo - 1e-12
                && s.cell.x_hi <= c.cell.x_hi + 1e-12
                && s.cell.t_lo >= c.cell.t_lo - 1e-12
                && s.cell.t_hi <= c.cell.t_hi + 1e-12;
            // Sub-cells whose sampled interior still meets the cone carry the witness.
            if inside && s.interior.cone_distance() == 0.0 {
                witnessed += 1;
                assert!(s.verdict.is_singular(), "{:?} improved to {}", s.cell, s.verdict.label());
            }
        }
    }
    assert!(witnessed > 0);
}
