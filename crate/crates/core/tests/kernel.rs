use num_complex::Complex64;
use slelab::kernel::{self, KernelContext, KernelError, Method};

fn ctx(r: f64, method: Method) -> KernelContext {
    KernelContext::new(r, 1e-12, method).unwrap()
}

/// Literal symmetric partial sums of the defining series, as an independent
/// oracle (no regrouping, no tail bound). N is capped so e^{2Nr} stays finite;
/// beyond that the +-k terms cancel to machine precision anyway.
fn brute_schwarz(r: f64, z: Complex64, n: i64) -> Complex64 {
    // keep e^{4kr} finite: complex division squares the denominator
    let n = n.min((150.0 / r) as i64);
    let mut s = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let e = (2.0 * k as f64 * r).exp();
        s += (Complex64::new(e, 0.0) + z) / (Complex64::new(e, 0.0) - z);
    }
    s
}

/// Weierstrass zeta with periods (2 pi, 2ir) via its Lambert-type q-series,
/// used to confirm that the covering kernel equals 2 zeta(z) - (2/pi) zeta(pi) z.
fn weierstrass_zeta(r: f64, z: Complex64) -> Complex64 {
    // zeta(z) = (eta1/pi) z + (1/2) cot(z/2) + 2 sum_n sin(nz)/(e^{2nr}-1)
    // with eta1 determined by the Legendre-type normalization; the eta1 parts
    // cancel in the combination below, so set eta1 = 0 here and test only the
    // combination.
    let mut s = 0.5 * (0.5 * z).cos() / (0.5 * z).sin();
    for n in 1..800 {
        let e = 2.0 * n as f64 * r;
        if e > 500.0 {
            break;
        }
        s += 2.0 * ((n as f64) * z).sin() / (e.exp() - 1.0);
    }
    s
}

#[test]
fn boundary_values_on_inner_and_outer_circle() {
    for method in [Method::Series, Method::Theta] {
        let c = ctx(1.0, method);
        let s = kernel::schwarz(&c, Complex64::new((-1.0f64).exp(), 0.0)).unwrap();
        assert!((s.re - 1.0).abs() < 1e-10, "Re on C_r: {s}");
        let s = kernel::schwarz(&c, Complex64::new(0.0, 1.0)).unwrap();
        assert!(s.re.abs() < 1e-10, "Re on C_0: {s}");
        // a few more points on each circle
        for ang in [0.3, 1.2, 2.5, -2.0] {
            let zr = Complex64::from_polar((-1.0f64).exp(), ang);
            assert!((kernel::schwarz(&c, zr).unwrap().re - 1.0).abs() < 1e-10);
            let z0 = Complex64::from_polar(1.0, ang);
            assert!(kernel::schwarz(&c, z0).unwrap().re.abs() < 1e-10);
        }
    }
}

#[test]
fn large_modulus_limit_matches_moebius() {
    let c = ctx(10.0, Method::Series);
    let s = kernel::schwarz(&c, Complex64::new(0.5, 0.0)).unwrap();
    assert!((s - Complex64::new(3.0, 0.0)).norm() < 1e-6, "got {s}");
    let brute = brute_schwarz(10.0, Complex64::new(0.5, 0.0), 40);
    assert!((s - brute).norm() < 1e-10);
}

#[test]
fn matches_brute_force_partial_sums() {
    for r in [0.5, 1.0, 2.0, 3.0] {
        let c = ctx(r, Method::Series);
        for z in [
            Complex64::new(0.5, 0.2),
            Complex64::new(-0.3, 0.6),
            Complex64::from_polar(0.9, 2.0),
            Complex64::from_polar((-0.9 * r).exp(), -1.0),
        ] {
            let s = kernel::schwarz(&c, z).unwrap();
            let b = brute_schwarz(r, z, 2000);
            assert!((s - b).norm() < 1e-9, "r={r} z={z}: {s} vs {b}");
        }
    }
}

#[test]
fn conjugate_symmetry() {
    let c = ctx(1.0, Method::Series);
    let z = Complex64::new(0.5, 0.2);
    let a = kernel::schwarz(&c, z).unwrap();
    let b = kernel::schwarz(&c, z.conj()).unwrap();
    assert!((a - b.conj()).norm() < 1e-12);
}

#[test]
fn series_and_theta_methods_agree() {
    for r in [0.35, 0.7, 1.5, 4.0] {
        let cs = ctx(r, Method::Series);
        let ct = ctx(r, Method::Theta);
        for z in [
            Complex64::new(0.6, 0.1),
            Complex64::from_polar(((-0.5) * r).exp(), 1.1),
            Complex64::new(-0.4, -0.3),
        ] {
            let a = kernel::schwarz(&cs, z).unwrap();
            let b = kernel::schwarz(&ct, z).unwrap();
            assert!((a - b).norm() < 1e-11, "r={r} z={z}: {a} vs {b}");
        }
    }
}

#[test]
fn theta_method_reaches_small_moduli() {
    // the direct series is refused here, the modular theta form is not
    let c = ctx(0.05, Method::Theta);
    let z = Complex64::from_polar((-0.02f64).exp(), 0.4);
    let s = kernel::schwarz(&c, z).unwrap();
    assert!(s.re.is_finite());
    // boundary value still holds at tiny modulus
    let zi = Complex64::from_polar((-0.05f64).exp(), 0.9);
    assert!((kernel::schwarz(&c, zi).unwrap().re - 1.0).abs() < 1e-9);
    let cs = ctx(0.002, Method::Series);
    assert!(matches!(
        kernel::schwarz(&cs, z),
        Err(KernelError::NonConvergence { .. })
    ));
}

#[test]
fn interior_positivity_sample() {
    let c = ctx(1.2, Method::Series);
    for k in 0..40 {
        let rho = (-1.2 * (0.05 + 0.9 * (k % 8) as f64 / 8.0)).exp();
        let ang = 0.13 + 6.0 * (k as f64) / 40.0;
        let z = Complex64::from_polar(rho, ang);
        let s = kernel::schwarz(&c, z).unwrap();
        assert!(s.re > 0.0, "Re S <= 0 at {z}: {s}");
    }
}

#[test]
fn real_axis_is_real() {
    let c = ctx(1.0, Method::Series);
    for x in [0.2, 0.5, 0.9, -0.7, -0.2] {
        let s = kernel::schwarz(&c, Complex64::new(x, 0.0)).unwrap();
        assert!(s.im.abs() < 1e-11, "Im S at {x}: {}", s.im);
    }
}

#[test]
fn pole_guard_fires() {
    let c = ctx(1.0, Method::Series);
    assert!(matches!(
        kernel::schwarz(&c, Complex64::new(1.0 + 1e-9, 0.0)),
        Err(KernelError::PoleProximity { .. })
    ));
    assert!(matches!(
        kernel::schwarz(&c, Complex64::new(0.0, 0.0)),
        Err(KernelError::PoleProximity { .. })
    ));
}

#[test]
fn reflected_kernel_values_and_bound() {
    let c = ctx(2.0, Method::Series);
    // S_r(e^{-r}) = 1 exactly, so the reflected kernel vanishes at z = 1
    let v = kernel::reflected(&c, Complex64::new(1.0, 0.0)).unwrap();
    assert!(v.norm() < 1e-10, "got {v}");

    // |1 - S_p(e^{-p}/z)| <= 8 e^{-p} / |z| on 4e^{-p} <= |z| <= 1
    let c3 = ctx(3.0, Method::Series);
    let bound_scale = 8.0 * (-3.0f64).exp();
    for i in 0..20 {
        for j in 0..16 {
            let lo = 4.0 * (-3.0f64).exp();
            let rho = lo + (1.0 - lo) * (i as f64 + 0.5) / 20.0;
            let ang = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 16.0;
            let z = Complex64::from_polar(rho, ang);
            let v = kernel::reflected(&c3, z).unwrap();
            assert!(v.norm() <= bound_scale / rho + 1e-12, "bound violated at {z}: {v}");
        }
    }

    // the reflected kernel maps the inner circle onto boundary values Re = 1
    let z = Complex64::from_polar((-2.0f64).exp(), 1.3);
    let v = kernel::reflected(&c, z).unwrap();
    assert!((v.re - 1.0).abs() < 1e-10);
}

#[test]
fn covering_is_odd_and_periodic() {
    for method in [Method::Series, Method::Theta] {
        let c = ctx(1.0, method);
        let a = kernel::covering(&c, Complex64::new(0.3, 0.0), 0).unwrap();
        let b = kernel::covering(&c, Complex64::new(-0.3, 0.0), 0).unwrap();
        assert!((a + b).norm() < 1e-11);
        let z = Complex64::new(0.4, 0.5);
        let p = kernel::covering(&c, z + Complex64::new(2.0 * std::f64::consts::PI, 0.0), 0).unwrap();
        let q = kernel::covering(&c, z, 0).unwrap();
        assert!((p - q).norm() < 1e-11);
    }
}

#[test]
fn covering_boundary_imaginary_part() {
    let c = ctx(1.0, Method::Series);
    let v = kernel::covering(&c, Complex64::new(0.7, 1.0), 0).unwrap();
    assert!((v.im + 1.0).abs() < 1e-10, "Im on the lifted inner line: {v}");
}

#[test]
fn covering_principal_part() {
    let c = ctx(1.0, Method::Series);
    let z = Complex64::new(1e-4, 0.0);
    let v = kernel::covering(&c, z, 0).unwrap();
    assert!((z * v - Complex64::new(2.0, 0.0)).norm() < 1e-6);
}

#[test]
fn covering_matches_zeta_combination() {
    let c = ctx(1.0, Method::Series);
    let z = Complex64::new(0.9, 0.4);
    let v = kernel::covering(&c, z, 0).unwrap();
    let zeta = weierstrass_zeta(1.0, z);
    // 2 zeta(z) (with the linear part dropped) differs from St by the linear
    // term; check the difference is exactly linear in z by sampling twice
    let z2 = Complex64::new(-0.5, 0.7);
    let v2 = kernel::covering(&c, z2, 0).unwrap();
    let zeta2 = weierstrass_zeta(1.0, z2);
    let lin1 = (2.0 * zeta - v) / z;
    let lin2 = (2.0 * zeta2 - v2) / z2;
    assert!((lin1 - lin2).norm() < 1e-9, "{lin1} vs {lin2}");
}

#[test]
fn covering_methods_agree_with_derivatives() {
    for r in [0.5, 1.0, 2.5] {
        let cs = ctx(r, Method::Series);
        let ct = ctx(r, Method::Theta);
        for order in 0..=3 {
            for z in [Complex64::new(0.8, 0.3 * r), Complex64::new(-1.2, 0.6 * r)] {
                let a = kernel::covering(&cs, z, order).unwrap();
                let b = kernel::covering(&ct, z, order).unwrap();
                assert!(
                    (a - b).norm() < 1e-9 * (1.0 + a.norm()),
                    "r={r} order={order} z={z}: {a} vs {b}"
                );
            }
        }
        let z = Complex64::new(0.4, 0.45 * r);
        let a = kernel::covering_dr(&cs, z).unwrap();
        let b = kernel::covering_dr(&ct, z).unwrap();
        assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "dr r={r}: {a} vs {b}");
    }
}

#[test]
fn covering_derivative_matches_finite_difference() {
    let c = ctx(0.8, Method::Series);
    let z = Complex64::new(0.4, 0.5);
    let h = 1e-5;
    for order in 0..3usize {
        let up = kernel::covering(&c, z + Complex64::new(h, 0.0), order).unwrap();
        let dn = kernel::covering(&c, z - Complex64::new(h, 0.0), order).unwrap();
        let fd = (up - dn) / (2.0 * h);
        let an = kernel::covering(&c, z, order + 1).unwrap();
        assert!((fd - an).norm() / an.norm() < 1e-6, "order {order}: {fd} vs {an}");
    }
}

#[test]
fn covering_dr_matches_finite_difference_and_is_real_on_axis() {
    let z = Complex64::new(1.0, 0.7);
    let r = 1.5;
    let h = 1e-5;
    let up = kernel::covering(&ctx(r + h, Method::Series), z, 0).unwrap();
    let dn = kernel::covering(&ctx(r - h, Method::Series), z, 0).unwrap();
    let fd = (up - dn) / (2.0 * h);
    let an = kernel::covering_dr(&ctx(r, Method::Series), z).unwrap();
    assert!((fd - an).norm() / an.norm().max(1e-12) < 1e-6, "{fd} vs {an}");

    let v = kernel::covering_dr(&ctx(1.0, Method::Series), Complex64::new(0.3, 0.0)).unwrap();
    assert!(v.im.abs() < 1e-11);
}

#[test]
fn heat_identity_residual() {
    // d_r St = St St' + St'' on a sweep of (r, z)
    for method in [Method::Series, Method::Theta] {
        for i in 0..20 {
            let r = 0.3 + (5.0 - 0.3) * i as f64 / 19.0;
            for jx in 0..10 {
                for jy in 0..5 {
                    let x = -3.0 + 6.0 * (jx as f64 + 0.5) / 10.0;
                    let y = r * (0.15 + 0.7 * (jy as f64 + 0.5) / 5.0);
                    let z = Complex64::new(x, y);
                    let c = ctx(r, method);
                    let s0 = kernel::covering(&c, z, 0).unwrap();
                    let s1 = kernel::covering(&c, z, 1).unwrap();
                    let s2 = kernel::covering(&c, z, 2).unwrap();
                    let dr = kernel::covering_dr(&c, z).unwrap();
                    let res = (dr - s0 * s1 - s2).norm();
                    assert!(res < 1e-8, "residual {res} at r={r} z={z} ({method:?})");
                }
            }
        }
    }
}

#[test]
fn covering_dr_identity_at_spec_point() {
    let c = ctx(1.0, Method::Series);
    let z = Complex64::new(0.5, 0.4);
    let s0 = kernel::covering(&c, z, 0).unwrap();
    let s1 = kernel::covering(&c, z, 1).unwrap();
    let s2 = kernel::covering(&c, z, 2).unwrap();
    let dr = kernel::covering_dr(&c, z).unwrap();
    assert!((dr - (s0 * s1 + s2)).norm() < 1e-8);
}

#[test]
fn radial_kernel_basics() {
    let one = Complex64::new(1.0, 0.0);
    assert_eq!(kernel::radial(Complex64::new(0.0, 0.0), one).unwrap(), one);
    // Moebius image of the circle is the imaginary axis
    let chi = Complex64::from_polar(1.0, 0.4);
    let w = kernel::radial(Complex64::from_polar(1.0, 1.7), chi).unwrap();
    assert!(w.re.abs() < 1e-12);
    // large-modulus annulus kernel degenerates to the radial kernel
    let c = ctx(10.0, Method::Series);
    let a = kernel::schwarz(&c, Complex64::new(0.5, 0.0)).unwrap();
    let b = kernel::radial(Complex64::new(0.5, 0.0), one).unwrap();
    assert!((a - b).norm() < 1e-6);
    assert!(matches!(
        kernel::radial(chi, chi),
        Err(KernelError::PoleProximity { .. })
    ));
}
