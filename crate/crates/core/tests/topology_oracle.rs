mod common;

use proptest::prelude::*;
use topofreq::algebra::Band;
use topofreq::drive::DriveParams;
use topofreq::topology::{analytic_chern, chern_fhs, min_gap, zone_hamiltonian, FloquetZoneGrid, TorusMesh};

#[test]
fn lattice_chern_is_minus_continuum_berry_flux() {
    for m in [-2.7, -1.5, -0.9, -0.3, 0.3, 0.9, 1.5, 2.7, 3.5] {
        let flux = common::berry_flux_lower(m, 200);
        assert!((flux - flux.round()).abs() < 0.02, "m={m}: flux {flux}");
        let c = chern_fhs(&DriveParams::with_m(m), &FloquetZoneGrid::default(), Band::Lower).unwrap();
        assert_eq!(c, -(flux.round() as i32), "m={m}");
    }
}

#[test]
fn bands_carry_opposite_charge() {
    for m in [-1.2, -0.5, 0.5, 1.2, 2.5] {
        let p = DriveParams::with_m(m);
        let g = FloquetZoneGrid::default();
        let lo = chern_fhs(&p, &g, Band::Lower).unwrap();
        let up = chern_fhs(&p, &g, Band::Upper).unwrap();
        assert_eq!(lo + up, 0);
    }
}

#[test]
fn minimum_gap_matches_grid_search() {
    for m in [0.3, 0.9, 1.4, 1.8, 2.6, -1.1] {
        let p = DriveParams::with_m(m);
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let q1 = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let q2 = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                best = best.min(zone_hamiltonian(q1, q2, &p).vector_norm());
            }
        }
        let g = min_gap(m, 1.0);
        assert!(g <= best + 1e-12 && best - g < 1e-3, "m={m}: {g} vs {best}");
    }
}

#[test]
fn origin_enclosure_tracks_chern_number() {
    for m in [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5] {
        let p = DriveParams::with_m(m);
        let inside = TorusMesh::from_drive(&p, 96).unwrap().contains_origin();
        assert_eq!(inside, analytic_chern(m).unwrap() != 0, "m={m}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lattice_matches_analytic(m in -4.0..4.0f64, o1 in 0.0..0.2f64, o2 in 0.0..0.2f64) {
        prop_assume!([-2.0f64, 0.0, 2.0].iter().all(|c| (m - c).abs() > 0.1));
        let grid = FloquetZoneGrid::default().with_offsets(o1, o2);
        let c = chern_fhs(&DriveParams::with_m(m), &grid, Band::Lower).unwrap();
        prop_assert_eq!(c, analytic_chern(m).unwrap());
    }

    #[test]
    fn drive_phases_do_not_change_chern(m in 0.2..1.8f64, p1 in 0.0..std::f64::consts::TAU, p2 in 0.0..std::f64::consts::TAU) {
        let p = DriveParams { phi01: p1, phi02: p2, ..DriveParams::with_m(m) };
        prop_assert_eq!(chern_fhs(&p, &FloquetZoneGrid::default(), Band::Lower).unwrap(), 1);
    }
}

#[test]
fn invariant_list_and_grid_convergence() {
    for m in [-3.0, -2.2, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 1.8, 2.2, 3.0] {
        let p = DriveParams::with_m(m);
        let a = chern_fhs(&p, &FloquetZoneGrid::new(16).unwrap(), Band::Lower).unwrap();
        let b = chern_fhs(&p, &FloquetZoneGrid::new(32).unwrap(), Band::Lower).unwrap();
        assert_eq!(a, b, "m={m}");
        assert_eq!(a, analytic_chern(m).unwrap(), "m={m}");
    }
}

#[test]
fn noisy_field_scatters_by_sigma() {
    use topofreq::noise::{NoiseParams, NoiseTrace};
    use topofreq::topology::h_trajectory_sample;
    let p = DriveParams::with_m(1.0);
    let np = NoiseParams::from_t2star(0.1e-6, 20e-9, 3).unwrap();
    let dt = 5e-9;
    let tr = NoiseTrace::generate(&np, dt, 200_000).unwrap();
    let clean = h_trajectory_sample(&p, dt, 1e-3, 10, None).unwrap();
    let noisy = h_trajectory_sample(&p, dt, 1e-3, 10, Some(&tr)).unwrap();
    let dz: Vec<f64> = clean.iter().zip(&noisy).map(|(a, b)| b.h.hz - a.h.hz).collect();
    let var = dz.iter().map(|x| x * x).sum::<f64>() / dz.len() as f64;
    assert!((var.sqrt() / np.sigma() - 1.0).abs() < 0.05);
}
