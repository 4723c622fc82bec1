use proptest::prelude::*;
use topofreq::drive::*;

fn fd<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t + h) - f(t - h)) / (2.0 * h)
}

#[test]
fn derivatives_match_finite_differences() {
    let p = DriveParams::with_m(0.7);
    for k in 1..50 {
        let t = k as f64 * 0.37e-6;
        let (d1, d2) = field_derivatives(t, &p);
        let h = 1e-9;
        let num = |sel: fn(&(FieldVector, FieldVector)) -> f64| fd(|s| sel(&field_vectors(s, &p)), t, h);
        let scale = p.eta * p.omega2;
        assert!((d1.hx - num(|v| v.0.hx)).abs() < 1e-6 * scale);
        assert!((d1.hz - num(|v| v.0.hz)).abs() < 1e-6 * scale);
        assert!((d2.hy - num(|v| v.1.hy)).abs() < 1e-6 * scale);
        assert!((d2.hz - num(|v| v.1.hz)).abs() < 1e-6 * scale);
        assert_eq!(d1.hy, 0.0);
        assert_eq!(d2.hx, 0.0);
    }
}

/// Literal form of ω′(t), fine away from t = 0.
fn omega_prime_literal(t: f64, p: &DriveParams) -> f64 {
    2.0 * p.eta * p.m
        - 2.0 * p.eta / (p.omega1 * t) * ((p.omega1 * t + p.phi01).sin() - p.phi01.sin())
        - 2.0 * p.eta / (p.omega2 * t) * ((p.omega2 * t + p.phi02).sin() - p.phi02.sin())
}

#[test]
fn carrier_phase_matches_literal_formula() {
    let p = DriveParams::with_m(0.9);
    for k in 1..200 {
        let t = k as f64 * 1.3e-6;
        let a = omega_prime(t, &p).unwrap();
        let b = omega_prime_literal(t, &p);
        assert!((a - b).abs() < 1e-9 * p.eta, "t={t}: {a} vs {b}");
    }
}

#[test]
fn carrier_phase_is_continuous_at_origin() {
    let p = DriveParams::with_m(0.9);
    let limit = 2.0 * p.eta * (p.m - p.phi01.cos() - p.phi02.cos());
    assert!((omega_prime(0.0, &p).unwrap() - limit).abs() < 1e-6);
    assert!((omega_prime(1e-15, &p).unwrap() - limit).abs() < 1e-3);
}

#[test]
fn frame_angle_derivative_is_static_coefficient() {
    let lab = LabFrameParams::new(DEFAULT_LAB_OMEGA0, DriveParams::with_m(0.4));
    let p = lab.drive;
    for k in 1..40 {
        let t = k as f64 * 2.1e-6;
        let num = fd(|s| theta(s, &lab).unwrap(), t, 1e-10);
        let c = 0.5 * lab.omega0 - p.eta * (p.m - (p.omega1 * t + p.phi01).cos() - (p.omega2 * t + p.phi02).cos());
        assert!((num - c).abs() < 1e-5 * lab.omega0, "t={t}");
        let th = theta(t, &lab).unwrap();
        let via_carrier = 0.5 * (lab.omega0 - omega_prime(t, &p).unwrap()) * t;
        assert!((th - via_carrier).abs() < 1e-9 * th.abs().max(1.0));
    }
}

proptest! {
    #[test]
    fn primed_flips_drive_but_keeps_noise(t in 0.0..1e-3f64, m in -3.0..3.0f64, delta in -1e7..1e7f64) {
        let p = DriveParams::with_m(m);
        let a = hamiltonian_primed(t, &p, delta);
        let b = hamiltonian_rot(t, &p, 0.0).conjugate_by_x();
        prop_assert!((a.ax - b.ax).abs() < 1e-6 && (a.ay - b.ay).abs() < 1e-6);
        prop_assert!((a.az - (b.az + delta)).abs() < 1e-6);
    }

    #[test]
    fn field_norm_is_bounded(t in 0.0..1e-2f64, m in -3.0..3.0f64) {
        let p = DriveParams::with_m(m);
        let (h1, h2) = field_vectors(t, &p);
        let bound = p.eta * ((1.0 + (m / 2.0).abs()) * 2.0f64.sqrt());
        prop_assert!(h1.norm() <= bound + 1e-6 && h2.norm() <= bound + 1e-6);
        let h = hamiltonian_rot(t, &p, 0.0);
        prop_assert!((h.ax - (h1 + h2).hx).abs() < 1e-9 && (h.az - (h1 + h2).hz).abs() < 1e-9);
    }
}
