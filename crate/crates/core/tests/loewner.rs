use num_complex::Complex64;
use slelab::grid::{self, DomainSpec};
use slelab::harmonic;
use slelab::loewner::{
    self, DrivingKind, DrivingPath, IntegratorOptions, LoewnerError,
};
use slelab::stats;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn driving_constant_and_custom() {
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 1.0, 0.01, 7).unwrap();
    assert!(d.xi.iter().all(|&x| x == 0.0));
    assert_eq!(d.chi_at(0.37), c(1.0, 0.0));

    let d = DrivingPath::from_samples(0.0, vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
    assert!((d.angle_at(0.25) - 0.5).abs() < 1e-15, "piecewise linear interpolation");
    assert!(DrivingPath::from_samples(0.0, vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
}

#[test]
fn driving_increment_variance() {
    let kappa = 2.0;
    let dt = 1e-3;
    let d = DrivingPath::sample(DrivingKind::Annulus, kappa, 100.0, dt, 42).unwrap();
    let incs: Vec<f64> = d.xi.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(incs.len() >= 100_000);
    let v = stats::variance(&incs);
    // chi-square sampling noise: sd of the sample variance ~ var * sqrt(2/n)
    let se = kappa * dt * (2.0 / incs.len() as f64).sqrt();
    assert!((v - kappa * dt).abs() < 3.0 * se, "variance {v} vs {}", kappa * dt);
    let m = stats::mean(&incs);
    assert!(m.abs() < 3.0 * (kappa * dt / incs.len() as f64).sqrt());
}

#[test]
fn driving_disc_initial_angle_uniform() {
    let angles: Vec<f64> = (0..4000)
        .map(|s| {
            DrivingPath::sample(DrivingKind::Disc, 6.0, 0.1, 0.01, 1000 + s).unwrap().initial_angle
        })
        .collect();
    let tau = 2.0 * std::f64::consts::PI;
    let (_, p) = stats::ks_one_sample(&angles, |x| (x / tau).clamp(0.0, 1.0));
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn driving_deterministic_in_seed() {
    let a = DrivingPath::sample(DrivingKind::Annulus, 2.0, 1.0, 0.01, 5).unwrap();
    let b = DrivingPath::sample(DrivingKind::Annulus, 2.0, 1.0, 0.01, 5).unwrap();
    assert_eq!(a.xi, b.xi);
}

#[test]
fn annulus_identity_at_time_zero() {
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 0.5, 0.01, 0).unwrap();
    let seeds = [c(0.5, 0.1), c(-0.3, 0.4), c(0.4, 0.0)];
    let states =
        loewner::evolve_annulus(1.0, &d, &seeds, &IntegratorOptions::default(), &[0.0]).unwrap();
    for (s, z) in states[0].points.iter().zip(&seeds) {
        assert_eq!(s.current(), *z);
    }
}

#[test]
fn annulus_inner_circle_stays_on_shrinking_circle() {
    let p = 1.0f64;
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 0.55, 1e-3, 0).unwrap();
    let seed = c((-p).exp(), 0.0);
    let cps: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let states =
        loewner::evolve_annulus(p, &d, &[seed], &IntegratorOptions::default(), &cps).unwrap();
    for st in &states {
        let z = st.points[0].current();
        let want = (st.t - p).exp();
        assert!(
            (z.norm() - want).abs() < 1e-6,
            "t = {}: |phi| = {} vs {}",
            st.t,
            z.norm(),
            want
        );
    }
    // also for a rough sampled driving
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.55, 1e-3, 3).unwrap();
    let seed = c(0.0, -(-p).exp());
    let states =
        loewner::evolve_annulus(p, &d, &[seed], &IntegratorOptions::default(), &cps).unwrap();
    for st in &states {
        let z = st.points[0].current();
        assert!((z.norm() - (st.t - p).exp()).abs() < 1e-6);
    }
}

#[test]
fn annulus_drift_adjusted_pins_inner_marked_point() {
    let p = 1.0f64;
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.5, 1e-3, 11).unwrap();
    let seed = c((-p).exp(), 0.0);
    let cps = [0.1, 0.25, 0.5];
    let states =
        loewner::evolve_annulus_adjusted(p, &d, &[seed], &IntegratorOptions::default(), &cps)
            .unwrap();
    for st in &states {
        let z = st.points[0].current();
        let want = (st.t - p).exp();
        assert!((z - c(want, 0.0)).norm() < 1e-6, "t = {}: {} vs {}", st.t, z, want);
    }
}

#[test]
fn annulus_interior_log_abs_nondecreasing_and_confined() {
    let p = 1.0;
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.5, 1e-3, 21).unwrap();
    let seeds = [c(0.5, 0.3), c(-0.4, -0.2), c(0.0, 0.55)];
    let cps: Vec<f64> = (1..=20).map(|k| 0.025 * k as f64).collect();
    let states =
        loewner::evolve_annulus(p, &d, &seeds, &IntegratorOptions::default(), &cps).unwrap();
    for i in 0..seeds.len() {
        let mut prev = seeds[i].norm().ln();
        for st in &states {
            let pt = st.points[i];
            if pt.swallowed {
                break;
            }
            let cur = pt.current().norm().ln();
            assert!(cur >= prev - 1e-9, "log|phi| decreased: {cur} < {prev}");
            assert!(pt.current().norm() <= 1.0 + 1e-6);
            assert!(pt.current().norm() >= (st.t - p).exp() - 1e-6);
            prev = cur;
        }
    }
}

#[test]
fn annulus_determinism_and_swallow_monotonicity() {
    let p = 0.8;
    let d = DrivingPath::sample(DrivingKind::Annulus, 6.0, 0.4, 1e-3, 9).unwrap();
    // boundary seeds near the start point get swallowed quickly at kappa = 6
    let seeds: Vec<Complex64> =
        (0..12).map(|k| Complex64::from_polar(0.999, 0.15 * (k as f64 - 6.0))).collect();
    let cps: Vec<f64> = (1..=8).map(|k| 0.05 * k as f64).collect();
    let opts = IntegratorOptions::default();
    let a = loewner::evolve_annulus(p, &d, &seeds, &opts, &cps).unwrap();
    let b = loewner::evolve_annulus(p, &d, &seeds, &opts, &cps).unwrap();
    let mut any_swallowed = false;
    for (sa, sb) in a.iter().zip(&b) {
        for (pa, pb) in sa.points.iter().zip(&sb.points) {
            assert_eq!(pa.current(), pb.current(), "bitwise determinism");
            assert_eq!(pa.swallow_time, pb.swallow_time);
        }
    }
    for i in 0..seeds.len() {
        let mut was = false;
        let mut time: Option<f64> = None;
        for st in &a {
            let pt = st.points[i];
            if was {
                assert!(pt.swallowed, "swallow flag must persist");
                assert_eq!(pt.swallow_time, time, "swallow time recorded once");
            }
            if pt.swallowed {
                any_swallowed = true;
                was = true;
                time = pt.swallow_time;
                assert!(time.is_some());
            }
        }
    }
    assert!(any_swallowed, "test should exercise swallowing");
}

#[test]
fn annulus_rejects_bad_input() {
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 1.5, 1e-2, 0).unwrap();
    let e = loewner::evolve_annulus(1.0, &d, &[c(0.5, 0.0)], &IntegratorOptions::default(), &[1.2]);
    assert!(matches!(e, Err(LoewnerError::HorizonExceedsModulus { .. })));
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.5, 1e-2, 0).unwrap();
    let e = loewner::evolve_annulus(1.0, &d, &[c(0.1, 0.0)], &IntegratorOptions::default(), &[0.4]);
    assert!(matches!(e, Err(LoewnerError::SeedOutsideDomain { .. })));
}

#[test]
fn radial_identity_constant_slit_and_derivative() {
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 1.0, 1e-2, 0).unwrap();
    let states =
        loewner::evolve_radial(&d, &[c(-1.0, 0.0)], &IntegratorOptions::default(), &[0.0]).unwrap();
    assert_eq!(states[0].points[0].current(), c(-1.0, 0.0));

    // constant driving grows a slit along the positive axis; the boundary
    // antipode -1 is a fixed point, and interior points on the negative axis
    // flow outward towards it
    let cps = [0.2, 0.4, 0.8];
    let states = loewner::evolve_radial(
        &d,
        &[c(-1.0, 0.0), c(-0.5, 0.0)],
        &IntegratorOptions::default(),
        &cps,
    )
    .unwrap();
    let mut prev = 0.5;
    for st in &states {
        let fixed = st.points[0].current();
        assert!((fixed - c(-1.0, 0.0)).norm() < 1e-8, "antipode is fixed: {fixed}");
        let z = st.points[1].current();
        assert!(z.im.abs() < 1e-9, "stays real: {z}");
        assert!(z.re < 0.0 && z.re > -1.0, "confined to (-1, 0): {z}");
        assert!(z.re.abs() > prev, "|phi(-0.5)| increasing");
        prev = z.re.abs();
    }

    // |phi_t'(0)| = e^t via the companion log-derivative
    let d = DrivingPath::sample(DrivingKind::Radial, 2.0, 1.0, 1e-3, 5).unwrap();
    let y = loewner::radial_origin_log_deriv(&d, &IntegratorOptions::default(), 1.0).unwrap();
    assert!((y.exp().norm() - 1.0f64.exp()).abs() < 1e-8, "log-derivative {y}");
}

#[test]
fn radial_annulus_consistency_at_large_modulus() {
    // for large p and small t the annulus kernel degenerates to the radial one
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.2, 1e-3, 13).unwrap();
    let seeds = [c(0.5, 0.2), c(-0.6, 0.1)];
    let cps = [0.1, 0.2];
    let a = loewner::evolve_annulus(10.0, &d, &seeds, &IntegratorOptions::default(), &cps).unwrap();
    let r = loewner::evolve_radial(&d, &seeds, &IntegratorOptions::default(), &cps).unwrap();
    for (sa, sr) in a.iter().zip(&r) {
        for (pa, pr) in sa.points.iter().zip(&sr.points) {
            assert!(
                (pa.current() - pr.current()).norm() < 1e-4,
                "{} vs {}",
                pa.current(),
                pr.current()
            );
        }
    }
}

#[test]
fn disc_identity_and_truncation_stability() {
    let opts = IntegratorOptions::default();
    // identity at the start time
    let d = DrivingPath::sample(DrivingKind::Disc, 6.0, 4.0, 1e-2, 3).unwrap();
    let seeds = [c(0.5, 0.1)];
    let states = loewner::evolve_disc(-4.0, &d, &seeds, &opts, &[-4.0]).unwrap();
    assert_eq!(states[0].points[0].current(), seeds[0]);
    assert!(matches!(
        loewner::evolve_disc(-4.0, &d, &[c(0.1, 0.0)], &opts, &[-1.0]),
        Err(LoewnerError::SeedTooCentral { .. })
    ));

    // truncation start barely matters: compare the annulus flows from
    // moduli 10 and 12 on common reflected seeds; the discrepancy is
    // bounded by the tail of the reflected kernel
    let horizon = 5.0;
    let d10 = DrivingPath::sample(DrivingKind::Constant, 0.0, horizon, 1e-2, 0).unwrap();
    let d12 = DrivingPath::from_samples(
        0.0,
        d10.times.clone(),
        d10.xi.clone(),
    )
    .unwrap();
    // hatted seeds z_hat in [12 e^{-5}, 1); raw seeds are e^{-p}/z_hat
    let zh = [c(0.5, 0.2), c(-0.4, 0.4), Complex64::from_polar(0.05, 1.0)];
    let raw10: Vec<Complex64> = zh.iter().map(|z| (-10.0f64).exp() / z).collect();
    let raw12: Vec<Complex64> = zh.iter().map(|z| (-12.0f64).exp() / z).collect();
    // run modulus-10 flow to time 5 (= disc time -5 when starting at -10) and
    // modulus-12 flow to time 7 (same disc time)
    let a10 = loewner::evolve_annulus(10.0, &d10, &raw10, &opts, &[5.0]).unwrap();
    let d12b = DrivingPath::from_samples(0.0, (0..=700).map(|k| k as f64 * 0.01).collect(), vec![0.0; 701]).unwrap();
    let a12 = loewner::evolve_annulus(12.0, &d12b, &raw12, &opts, &[7.0]).unwrap();
    let _ = d12;
    let bound = 8.0 * (-10.0f64).exp() + 8.0 * (-12.0f64).exp();
    for (pa, pb) in a10[0].points.iter().zip(&a12[0].points) {
        // reflected coordinate at disc time -5: e^{-5}/phi
        let ha = (-5.0f64).exp() / pa.current();
        let hb = (-5.0f64).exp() / pb.current();
        assert!(
            (ha - hb).norm() < bound,
            "truncation discrepancy {} vs bound {bound}",
            (ha - hb).norm()
        );
    }
}

#[test]
fn disc_flow_composes() {
    let opts = IntegratorOptions::default();
    let dt = 0.01;
    let d = DrivingPath::sample(DrivingKind::Disc, 6.0, 3.5, dt, 17).unwrap();
    let seeds = [c(0.6, 0.1), c(-0.2, -0.5)];
    // flow from -4 straight to -0.5
    let direct = loewner::evolve_disc(-4.0, &d, &seeds, &opts, &[-3.0, -0.5]).unwrap();
    // restart at -3 with the tail of the same driving
    let cut = (1.0 / dt).round() as usize;
    let times: Vec<f64> = d.times[cut..].iter().map(|t| t - d.times[cut]).collect();
    let xi: Vec<f64> = d.xi[cut..].to_vec();
    let d_tail = DrivingPath::from_samples(6.0, times, xi).unwrap();
    let mid: Vec<Complex64> = direct[0].points.iter().map(|p| p.current()).collect();
    let resumed = loewner::evolve_disc(-3.0, &d_tail, &mid, &opts, &[-0.5]).unwrap();
    for (pa, pb) in direct[1].points.iter().zip(&resumed[0].points) {
        assert!(
            (pa.current() - pb.current()).norm() < 1e-7,
            "composition: {} vs {}",
            pa.current(),
            pb.current()
        );
    }
}

#[test]
fn trace_constant_driving_is_radial() {
    let p = 1.0;
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 0.5, 1e-2, 0).unwrap();
    let times = [0.02, 0.1, 0.2, 0.3];
    let tr = loewner::trace_annulus(p, &d, &times, &IntegratorOptions::default()).unwrap();
    let mut prev = 1.0;
    for i in 0..times.len() {
        let b = tr.point(i);
        assert!(b.im.abs() < 1e-6, "radial slit must be real: {b}");
        assert!(b.re < prev && b.re > (-p).exp(), "decreasing along the axis");
        prev = b.re;
    }
    // t -> 0 approaches the starting prime end
    let tr0 = loewner::trace_annulus(p, &d, &[1e-4], &IntegratorOptions::default()).unwrap();
    assert!((tr0.point(0) - c(1.0, 0.0)).norm() < 0.05);
}

#[test]
fn trace_kappa_two_is_simple() {
    let p = 1.0;
    let d = DrivingPath::sample(DrivingKind::Annulus, 2.0, 0.5, 1e-3, 29).unwrap();
    let times: Vec<f64> = (1..=25).map(|k| 0.02 * k as f64).collect();
    let tr = loewner::trace_annulus(p, &d, &times, &IntegratorOptions::default()).unwrap();
    for i in 0..times.len() {
        for j in (i + 3)..times.len() {
            let d = (tr.point(i) - tr.point(j)).norm();
            assert!(d > 1e-3, "trace self-intersects: |b({}) - b({})| = {d}", times[i], times[j]);
        }
    }
}

#[test]
fn capacity_clock_against_modulus_estimator() {
    // constant driving: the hull is the radial slit [beta(t), 1]; rasterize it
    // and check the remaining modulus
    let p = 1.0;
    let t = 0.3;
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, t + 0.02, 1e-3, 0).unwrap();
    let tr = loewner::trace_annulus(p, &d, &[t], &IntegratorOptions::default()).unwrap();
    let x_t = tr.point(0).re;

    let delta = 0.02;
    let dom = grid::prune_reachable(&grid::build_lattice(&DomainSpec::annulus(p), delta).unwrap())
        .unwrap();
    let pts: Vec<[f64; 2]> = (0..200)
        .map(|k| [x_t + (1.0 - x_t) * k as f64 / 199.0, 0.0])
        .collect();
    let slit = dom.snap_polyline(&pts);
    assert!(!slit.is_empty());
    let cut = dom.with_slit(&slit);
    let m = harmonic::estimate_modulus(&cut, &cut.start_set(), &cut.target_set()).unwrap();
    assert!(
        (m - (p - t)).abs() / (p - t) < 0.05,
        "capacity clock: modulus {m} vs {}",
        p - t
    );
}

#[test]
fn trajectory_csv_has_header() {
    let d = DrivingPath::sample(DrivingKind::Constant, 0.0, 0.2, 1e-2, 0).unwrap();
    let states =
        loewner::evolve_annulus(1.0, &d, &[c(0.5, 0.0)], &IntegratorOptions::default(), &[0.1])
            .unwrap();
    let csv = loewner::trajectory_csv(&states);
    assert!(csv.starts_with("time,point_id,re,im,swallowed\n"));
    assert!(csv.lines().count() == 2);
}
