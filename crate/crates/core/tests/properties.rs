use colombeau_wave::asymptotics::{fit_order, weak_limit, FitOutcome};
use colombeau_wave::kernel::{Cell, Provenance};
use colombeau_wave::mollify::{imbed, DataExpr, DistributionSpec, LineGeometry, Mollifier, DEFAULT_SAMPLES_PER_UNIT};
use colombeau_wave::wave::{integral_equation_residual, picard_semilinear, solution_lattice, PicardSettings, WaveProblem};
use colombeau_wave::{
    EpsilonLadder, Grid1, Grid2, MultiIndex, Nonlinearity, Region2, RepresentativeFamily, Sampled, TestFunction,
    Trapezoid,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

fn nonlinearity() -> impl Strategy<Value = Nonlinearity> {
    prop_oneof![
        Just(Nonlinearity::Zero),
        (-2.0..2.0f64).prop_map(|k| Nonlinearity::Linear { k }),
        (-2.0..2.0f64).prop_map(|amplitude| Nonlinearity::Sine { amplitude }),
        (-3.0..3.0f64).prop_map(|limit| Nonlinearity::Squash { limit }),
        (-3.0..3.0f64).prop_map(|scale| Nonlinearity::OddSquash { scale }),
    ]
}

/// Random values on the lattice `h = 1/16`, `x ∈ [-1, 1]`, `t ∈ [0, 1]`.
fn grid2() -> impl Strategy<Value = Grid2> {
    prop::collection::vec(-10.0..10.0f64, 33 * 17)
        .prop_map(|v| Grid2::new(1.0 / 16.0, -16, 0, 33, 17, v).unwrap())
}

fn cell() -> impl Strategy<Value = Region2> {
    (-1.0..0.0f64, 0.1..1.0f64, 0.0..0.5f64, 0.1..0.5f64)
        .prop_map(|(x, w, t, d)| Region2::Cell(Cell::new(x, x + w, t, t + d).unwrap()))
}

fn rel_close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1e-300)
}

fn line(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Grid1 {
    Grid1::symmetric(h, n, f).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn norms_obey_triangle_inequality(f in grid2(), g in grid2(), k in cell()) {
        let s = f.zip_with(&g, |a, b| a + b).unwrap();
        let slack = 1e-12 * (f.sup_on(&k).unwrap() + g.sup_on(&k).unwrap());
        prop_assert!(s.sup_on(&k).unwrap() <= f.sup_on(&k).unwrap() + g.sup_on(&k).unwrap() + slack);
        prop_assert!(s.l1_on(&k).unwrap() <= f.l1_on(&k).unwrap() + g.l1_on(&k).unwrap() + slack);
    }

    #[test]
    fn finite_differences_are_linear(f in grid2(), g in grid2(), c1 in -5.0..5.0f64, c2 in -5.0..5.0f64,
                                     dx in 0usize..3, dt in 0usize..3) {
        let alpha = MultiIndex::new(dx, dt);
        let combo = f.zip_with(&g, |a, b| c1 * a + c2 * b).unwrap().fd_derivative(alpha).unwrap();
        let (df, dg) = (f.fd_derivative(alpha).unwrap(), g.fd_derivative(alpha).unwrap());
        for ((c, a), b) in combo.values().iter().zip(df.values()).zip(dg.values()) {
            let want = c1 * a + c2 * b;
            prop_assert!(rel_close(*c, want, (c1 * a).abs() + (c2 * b).abs(), 1e-12));
        }
    }

    #[test]
    fn catalog_entries_respect_lipschitz_bound(f in nonlinearity(), a in -50.0..50.0f64, b in -50.0..50.0f64) {
        prop_assert_eq!(f.eval(0.0), 0.0);
        let lhs = (f.eval(a) - f.eval(b)).abs();
        prop_assert!(lhs <= f.lipschitz() * (a - b).abs() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn sup_grows_with_time_horizon(f in grid2(), s in 0.05..1.0f64, extra in 0.0..1.0f64) {
        let t = (s + extra).min(1.0);
        let small = Region2::Trapezoid(Trapezoid::new(1.0, s).unwrap());
        let large = Region2::Trapezoid(Trapezoid::new(1.0, t).unwrap());
        prop_assert!(f.sup_on(&small).unwrap() <= f.sup_on(&large).unwrap());
    }

    #[test]
    fn imbedding_is_linear(c1 in -3.0..3.0f64, c2 in -3.0..3.0f64, x0 in -1.0..1.0f64, x1 in -1.0..1.0f64) {
        let p = Mollifier::build(2, DEFAULT_SAMPLES_PER_UNIT).unwrap();
        let ladder = EpsilonLadder::geometric(0.25, 0.5, 4).unwrap();
        let geom = LineGeometry { half_width: 2.0, points_per_eps: 8 };
        let d1 = DataExpr::delta(x0);
        let d2: DataExpr = DistributionSpec::Heaviside { x0: x1 }.into();
        let sum = DataExpr::Sum { terms: vec![
            DataExpr::Scaled { factor: c1, expr: Box::new(d1.clone()) },
            DataExpr::Scaled { factor: c2, expr: Box::new(d2.clone()) },
        ] };
        let (u, u1, u2) = (imbed(&sum, &ladder, &p, geom).unwrap(), imbed(&d1, &ladder, &p, geom).unwrap(), imbed(&d2, &ladder, &p, geom).unwrap());
        for k in 0..ladder.len() {
            for ((s, a), b) in u.member(k).values().iter().zip(u1.member(k).values()).zip(u2.member(k).values()) {
                let want = c1 * a + c2 * b;
                prop_assert!(rel_close(*s, want, (c1 * a).abs() + (c2 * b).abs(), 1e-12));
            }
        }
    }

    #[test]
    fn scaled_profile_keeps_unit_mass(eps in 0.01..0.5f64, m in 0usize..4) {
        let p = Mollifier::build(m, DEFAULT_SAMPLES_PER_UNIT).unwrap();
        let h = eps / 16.0;
        let n = ((p.cutoff_radius() * eps + 0.5) / h).ceil() as usize;
        let s = p.scaled(eps, 0.0, h, -(n as i64), 2 * n + 1).unwrap();
        prop_assert!((s.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_is_invariant_under_rescaling(norms in prop::collection::vec(1e-6..1e6f64, 6), c in 1e-3..1e3f64) {
        let eps: Vec<f64> = (0..6).map(|k| 0.25 * 0.5f64.powi(k)).collect();
        let scaled: Vec<f64> = norms.iter().map(|n| c * n).collect();
        let (FitOutcome::Fit(a), FitOutcome::Fit(b)) = (fit_order(&eps, &norms).unwrap(), fit_order(&eps, &scaled).unwrap()) else {
            return Err(TestCaseError::fail("positive norms must fit"));
        };
        prop_assert!((a.order - b.order).abs() <= 1e-9 * a.order.abs().max(1.0));
        prop_assert!((b.intercept - a.intercept - c.ln()).abs() <= 1e-9 * a.intercept.abs().max(1.0));
        prop_assert!((a.r2 - b.r2).abs() <= 1e-9);
    }

    #[test]
    fn solutions_propagate_at_unit_speed(f in nonlinearity(), k in -8i64..8, rho in 0.5..1.0f64, amp in 0.1..3.0f64) {
        let h = 1.0 / 32.0;
        let x0 = k as f64 * h;
        let quiet = |x: f64| (x - x0).abs() <= rho;
        let a = line(h, 64, |x| if quiet(x) { 0.0 } else { amp * (3.0 * x).sin() });
        let b = line(h, 64, |x| if quiet(x) { 0.0 } else { amp * x });
        let region = Trapezoid::new(2.0, 1.0).unwrap();
        let p = WaveProblem { a: &a, b: &b, h: None, f, region };
        let (u, _) = picard_semilinear(&p, &PicardSettings::default()).unwrap();
        let lat = solution_lattice(&a, &region).unwrap();
        let i = (k - lat.origin_index().0) as usize;
        for j in 0..u.nt() {
            if u.t(j) < rho - h {
                prop_assert_eq!(u.at(i, j), 0.0);
            }
        }
    }

    #[test]
    fn lower_half_plane_mirrors_upper(f in nonlinearity(), c1 in -2.0..2.0f64, c2 in -2.0..2.0f64, w in 0.5..4.0f64) {
        let h = 1.0 / 32.0;
        let a = line(h, 48, |x| c1 * (w * x).sin());
        let b = line(h, 48, |x| c2 * (w * x).cos());
        let nb = b.map(|v| -v);
        let up = Trapezoid::new(1.5, 1.0).unwrap();
        let settings = PicardSettings::default();
        let (u, _) = picard_semilinear(&WaveProblem { a: &a, b: &b, h: None, f, region: up }, &settings).unwrap();
        let (v, _) = picard_semilinear(&WaveProblem { a: &a, b: &nb, h: None, f, region: up.lower() }, &settings).unwrap();
        prop_assert_eq!(v.mirrored_in_time(), u);
    }

    #[test]
    fn picard_solutions_satisfy_integral_equation(f in nonlinearity(), c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        let h = 1.0 / 32.0;
        let a = line(h, 64, |x| c1 * (-x * x).exp());
        let b = line(h, 64, |x| c2 * x.cos());
        let p = WaveProblem { a: &a, b: &b, h: None, f, region: Trapezoid::new(2.0, 1.5).unwrap() };
        let settings = PicardSettings::default();
        let (u, _) = picard_semilinear(&p, &settings).unwrap();
        let scale = u.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let r = integral_equation_residual(&p, &u).unwrap();
        prop_assert!(r <= 100.0 * settings.tol * scale, "residual {r}");
    }

    #[test]
    fn negligible_families_leave_weak_limits(center in -0.3..0.3f64, radius in 0.5..0.8f64, amp in -10.0..10.0f64) {
        let p = Mollifier::build(2, DEFAULT_SAMPLES_PER_UNIT).unwrap();
        let ladder = EpsilonLadder::geometric(0.125, 0.5, 5).unwrap();
        let geom = LineGeometry { half_width: 2.0, points_per_eps: 8 };
        let u = imbed(&DataExpr::delta(0.0), &ladder, &p, geom).unwrap();
        let members = u.iter().map(|(eps, m)| {
            Grid1::from_fn(m.h(), m.origin_index(), m.len(), |x| amp * eps.powi(7) * x.sin()).unwrap()
        }).collect();
        let n = RepresentativeFamily::new(ladder.clone(), members, Provenance::Derived).unwrap();
        let tests = [TestFunction::Bump1 { center, radius }];
        let a = weak_limit(&u, &tests).unwrap();
        let b = weak_limit(&u.add(&n).unwrap(), &tests).unwrap();
        // The support of ψ contains the point mass with margin, so both converge.
        prop_assert!(a.converged() && b.converged());
        prop_assert!((a.entries[0].limit.unwrap() - b.entries[0].limit.unwrap()).abs() <= 1e-8);
    }
}
