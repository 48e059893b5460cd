use colombeau_wave::kernel::{GridFunction1D, Nonlinearity, Sampled, Trapezoid};
use colombeau_wave::mollify::{Mollifier, DEFAULT_SAMPLES_PER_UNIT};
use colombeau_wave::wave::{
    dalembert_linear, integral_equation_residual, picard_semilinear, solution_lattice,
    solve_reference_w, InteriorSource, PicardSettings, Plateau, WaveProblem,
};

fn line(h: f64, n: usize, f: impl Fn(f64) -> f64) -> GridFunction1D<f64> {
    GridFunction1D::symmetric(h, n, f).unwrap()
}

fn sup_error(
    u: &colombeau_wave::Grid2,
    region: &Trapezoid,
    exact: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mut e = 0.0f64;
    for j in 0..u.nt() {
        for i in 0..u.nx() {
            let (x, t) = (u.x(i), u.t(j));
            if region.contains(x, t, 1e-9 * u.h()) {
                e = e.max((u.at(i, j) - exact(x, t)).abs());
            }
        }
    }
    e
}

#[test]
fn sine_data_gives_standing_wave() {
    let r = Trapezoid::new(std::f64::consts::PI, 1.0).unwrap();
    for n in [64, 128, 256] {
        let h = std::f64::consts::PI / n as f64;
        let a = line(h, n, f64::sin);
        let b = line(h, n, |_| 0.0);
        let u = dalembert_linear(&a, &b, None, &r).unwrap();
        let e = sup_error(&u, &r, |x, t| x.sin() * t.cos());
        println!("n = {n}: {e:e}");
        assert!(e <= h * h);
    }
}

#[test]
fn linear_minus_one_matches_ansatz() {
    let r = Trapezoid::new(std::f64::consts::PI, 1.0).unwrap();
    let mut prev = f64::NAN;
    for n in [64, 128, 256] {
        let h = std::f64::consts::PI / n as f64;
        let a = line(h, n, f64::sin);
        let b = line(h, n, |_| 0.0);
        let p = WaveProblem {
            a: &a,
            b: &b,
            h: None,
            f: Nonlinearity::Linear { k: -1.0 },
            region: r,
        };
        let (u, log) = picard_semilinear(&p, &PicardSettings::default()).unwrap();
        let e = sup_error(&u, &r, |x, t| x.sin() * (2f64.sqrt() * t).cos());
        println!(
            "n = {n}: {e:e} ratio {:.3} sweeps {}",
            prev / e,
            log.sweeps()
        );
        prev = e;
        assert!(e <= h * h);
    }
}

fn settings() -> PicardSettings {
    PicardSettings::default()
}

#[test]
fn zero_nonlinearity_is_bit_identical_to_linear_solver() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 64.0;
    let a = line(h, 128, |x| (-(x * x)).exp());
    let b = line(h, 128, |x| x.cos());
    let lin = dalembert_linear(&a, &b, None, &r).unwrap();
    let p = WaveProblem {
        a: &a,
        b: &b,
        h: None,
        f: Nonlinearity::Zero,
        region: r,
    };
    let (u, log) = picard_semilinear(&p, &settings()).unwrap();
    assert_eq!(u, lin);
    assert_eq!(log.sweeps(), 1);
}

#[test]
fn contraction_per_sweep_respects_slab_estimate() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 128.0;
    let a = line(h, 256, |x| 2.0 * (-(x * x)).exp());
    let b = line(h, 256, |x| x.sin());
    let f = Nonlinearity::OddSquash { scale: 1.0 };
    let p = WaveProblem {
        a: &a,
        b: &b,
        h: None,
        f,
        region: r,
    };
    let (u, log) = picard_semilinear(&p, &settings()).unwrap();
    assert!(log.slabs.len() > 1);
    for slab in &log.slabs {
        assert!(slab.contraction_bound <= 0.5 + 1e-12);
        assert!(slab.distances.len() <= 50);
        for q in slab.ratios() {
            assert!(q <= 0.55, "ratio {q} on slab starting at {}", slab.t_start);
        }
    }
    let res = integral_equation_residual(&p, &u).unwrap();
    assert!(res <= 1e-10, "residual {res}");
}

#[test]
fn explicit_slab_height_matches_automatic_marching() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 64.0;
    let a = line(h, 128, |x| (-(x * x)).exp());
    let b = line(h, 128, |_| 0.0);
    let f = Nonlinearity::Sine { amplitude: 1.0 };
    let p = WaveProblem {
        a: &a,
        b: &b,
        h: None,
        f,
        region: r,
    };
    let (u1, _) = picard_semilinear(&p, &settings()).unwrap();
    let s = PicardSettings {
        slab_height: Some(0.25),
        ..settings()
    };
    let (u2, log) = picard_semilinear(&p, &s).unwrap();
    assert_eq!(log.slabs.len(), 6);
    let d = u1
        .values()
        .iter()
        .zip(u2.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(d <= 1e-11, "{d}");
}

#[test]
fn limit_mode_reference_matches_triangle_area() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 128.0;
    let zero = line(h, 256, |_| 0.0);
    let l = 0.8;
    let (w, _) = solve_reference_w(
        &zero,
        &zero,
        &InteriorSource::Limit {
            value: l,
            apex: 0.0,
        },
        Nonlinearity::Squash { limit: l },
        &r,
        &settings(),
    )
    .unwrap();
    let e = sup_error(&w, &r, |x, t| 0.25 * l * (t * t - x * x).max(0.0));
    assert!(e <= 2.0 * h, "{e}");
}

#[test]
fn plateau_reference_vanishes_for_zero_height() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 64.0;
    let zero = line(h, 128, |_| 0.0);
    let (w, _) = solve_reference_w(
        &zero,
        &zero,
        &InteriorSource::Plateau {
            plateau: Plateau::single(0.0, 0.0),
        },
        Nonlinearity::OddSquash { scale: 1.0 },
        &r,
        &settings(),
    )
    .unwrap();
    assert!(w.values().iter().all(|&v| v == 0.0));
}

#[test]
fn plateau_reference_obeys_sup_bound() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let h = 1.0 / 64.0;
    let zero = line(h, 128, |_| 0.0);
    for f in [
        Nonlinearity::OddSquash { scale: 1.0 },
        Nonlinearity::Squash { limit: 1.0 },
        Nonlinearity::Sine { amplitude: 0.7 },
    ] {
        let (w, _) = solve_reference_w(
            &zero,
            &zero,
            &InteriorSource::Plateau {
                plateau: Plateau::single(0.0, 0.5),
            },
            f,
            &r,
            &settings(),
        )
        .unwrap();
        let bound = f.meta().sup_bound.unwrap() * r.t_max * r.t_max;
        assert!(w.sup_on(&colombeau_wave::Region2::Trapezoid(r)).unwrap() <= bound);
    }
}

#[test]
fn plateau_reference_rejects_unbounded_f() {
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let zero = line(1.0 / 32.0, 64, |_| 0.0);
    let e = solve_reference_w(
        &zero,
        &zero,
        &InteriorSource::Plateau {
            plateau: Plateau::single(0.0, 0.5),
        },
        Nonlinearity::Linear { k: 1.0 },
        &r,
        &settings(),
    )
    .unwrap_err();
    assert!(matches!(e, colombeau_wave::Error::Hypothesis(_)));
}

#[test]
fn delta_velocity_gives_half_plateau() {
    let moll = Mollifier::build(2, DEFAULT_SAMPLES_PER_UNIT).unwrap();
    let r = Trapezoid::new(2.0, 1.5).unwrap();
    let eps = 1.0 / 32.0;
    let h = eps / 8.0;
    let n = (2.0 / h) as usize;
    let b = moll.scaled(eps, 0.0, h, -(n as i64), 2 * n + 1).unwrap();
    let a = b.zeros_like();
    let v = dalembert_linear(&a, &b, None, &r).unwrap();
    let band = moll.cutoff_radius() * eps + h;
    for j in 0..v.nt() {
        for i in 0..v.nx() {
            let (x, t) = (v.x(i), v.t(j));
            if !r.contains(x, t, 1e-9 * h) {
                continue;
            }
            if x.abs() < t - band {
                assert!((v.at(i, j) - 0.5).abs() <= 1e-10);
            } else if x.abs() > t + band {
                assert!(v.at(i, j).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn finite_speed_of_propagation() {
    let r = Trapezoid::new(2.0, 1.0).unwrap();
    let h = 1.0 / 64.0;
    // Data vanish on [-1, 1]; the backward cone of (0, t) for t < 1 sees none.
    let a = line(h, 128, |x| {
        if x.abs() > 1.0 {
            (x.abs() - 1.0).powi(2)
        } else {
            0.0
        }
    });
    let b = line(h, 128, |x| if x.abs() > 1.0 { x } else { 0.0 });
    let p = WaveProblem {
        a: &a,
        b: &b,
        h: None,
        f: Nonlinearity::Sine { amplitude: 1.0 },
        region: r,
    };
    let (u, _) = picard_semilinear(&p, &settings()).unwrap();
    let lat = solution_lattice(&a, &r).unwrap();
    let i0 = (-lat.origin_index().0) as usize;
    for j in 0..u.nt() - 1 {
        assert_eq!(u.at(i0, j), 0.0, "level {j}");
    }
}
