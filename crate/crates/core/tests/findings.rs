//! States that lie below the stitched surface. Each is a valid density matrix
//! whose overlap is confirmed by two independent integrators; the margins are
//! far outside any numerical error budget, so these document where the
//! extremal families stop being minimal.

// entries are copied verbatim from the run that produced them
#![allow(clippy::excessive_precision)]

use ngbound::metrics::{gaussian_overlap_numeric, summarize};
use ngbound::region2::{pure_min_overlap, total_bound_at};
use ngbound::wigner::{GaussianWigner, PhaseSpaceIntegrator};
use ngbound::FockDensityMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Overlap from the trapezoid phase-space integrator, independent of the
/// Gauss–Hermite rule used by `summarize`.
fn grid_overlap(rho: &FockDensityMatrix) -> f64 {
    let g = GaussianWigner::new(rho.moments().d, &rho.covariance()).unwrap();
    PhaseSpaceIntegrator::new(rho).unwrap().overlap_with(&g).unwrap().value
}

#[test]
fn rank2_mixture_on_three_levels() {
    let r01 = c(5.1298686685246914e-04, -1.5442958084694581e-02);
    let r02 = c(2.3219531950319677e-01, 2.7638385916492807e-02);
    let r12 = c(-8.8695650530469294e-02, 1.1595781391232839e-01);
    let data = vec![
        c(1.0160361857513013e-01, 0.0),
        r01,
        r02,
        r01.conj(),
        c(4.6394844335131587e-02, 0.0),
        r12,
        r02.conj(),
        r12.conj(),
        c(8.5200153708973836e-01, 0.0),
    ];
    let rho = FockDensityMatrix::from_raw(3, data).unwrap().padded(6);
    assert!(rho.validate().is_valid());
    let s = summarize(&rho).unwrap();
    assert!((s.mu_g - 0.228736830741).abs() < 1e-9);
    assert!((s.mu - 0.890843251923).abs() < 1e-9);
    assert!((s.overlap - 0.184288956603).abs() < 1e-9);
    assert!((grid_overlap(&rho) - s.overlap).abs() < 1e-9);

    let b = total_bound_at(s.mu_g, s.mu).unwrap().unwrap();
    assert_eq!(b.family.label(), "rho_3");
    assert!((b.overlap - 0.187299516796).abs() < 1e-8);
    assert!(s.overlap - b.overlap < -2.9e-3);
}

#[test]
fn displaced_pure_state_below_pure_bound() {
    let v = [
        c(0.0, 0.0),
        c(0.9270552384993453, 0.9196957806145183),
        c(-0.012763890387640142, 0.6355997756005265),
        c(0.8515930011338626, -0.5528666654676351),
        c(-0.2601530749726919, -0.07861776588662339),
        c(0.0, 0.0),
        c(0.0, 0.0),
    ];
    let rho = FockDensityMatrix::from_pure(&v).unwrap();
    let s = summarize(&rho).unwrap();
    assert!((s.mu_g - 0.2326637706220852).abs() < 1e-12);
    // position-wavefunction Wigner integral, computed separately
    assert!((s.overlap - 0.18859613415365817).abs() < 1e-11);
    assert!((grid_overlap(&rho) - s.overlap).abs() < 1e-9);

    let (t, d) = pure_min_overlap(s.mu_g).unwrap();
    assert_eq!(d.family.label(), "psi_a");
    assert!((t - 0.19641802168390604).abs() < 1e-12);
    assert!(s.overlap - t < -7.5e-3);
}

#[test]
fn diagonal_rank3_state_above_rank2_edge() {
    let rho = FockDensityMatrix::from_diagonal(&[0.06, 0.01, 0.93]).unwrap();
    let s = summarize(&rho).unwrap();
    assert!((s.mu_g - 1.0 / 4.74).abs() < 1e-14);
    assert!((s.mu - 0.8686).abs() < 1e-14);
    assert!((gaussian_overlap_numeric(&rho).unwrap() - s.overlap).abs() < 1e-10);

    let edge = ngbound::region1::rank2_point(s.mu_g).unwrap();
    assert!(s.mu > edge.mu);
    let b = total_bound_at(s.mu_g, s.mu).unwrap().unwrap();
    assert!(s.overlap - b.overlap < -3.4e-4, "{} vs {}", s.overlap, b.overlap);
}
