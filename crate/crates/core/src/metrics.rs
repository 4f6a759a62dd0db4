//! Coordinates of a state in the `{μ, μ_G, T}` space: purity, reference
//! Gaussian purity `μ_G = 1/√det γ`, overlap `T = Tr(ρ ρ_G)` with the Gaussian
//! sharing the state's first and second moments, and `δ = (μ_G + μ − 2T)/(2μ)`.

use serde::Serialize;

use crate::error::{NgbError, Result};
use crate::fock::{det2, Covariance, FockDensityMatrix};
use crate::wigner::{overlap_gauss_hermite, GaussianWigner};

/// Threshold on |d|, |γ11 − γ22| and |γ12| for the closed-form path.
pub const SYMMETRIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMethod {
    Thermal,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub mu: f64,
    #[serde(rename = "mu_g")]
    pub mu_g: f64,
    pub overlap: f64,
    pub delta: f64,
    pub gamma: Covariance,
    pub d: [f64; 2],
    pub method: OverlapMethod,
    #[serde(skip)]
    pub symmetric: bool,
}

pub fn reference_purity(gamma: &Covariance) -> Result<f64> {
    let det = det2(gamma);
    if !(det > 0.0) || !det.is_finite() {
        return Err(NgbError::InvalidInput(format!("covariance determinant {det:e} is not positive")));
    }
    Ok(1.0 / det.sqrt())
}

/// `t_n = ⟨n|ρ_G|n⟩ = 2μ_G (1−μ_G)^n / (1+μ_G)^{n+1}` for the thermal state.
#[inline]
pub fn thermal_weight(mu_g: f64, n: f64) -> f64 {
    let q = (1.0 - mu_g) / (1.0 + mu_g);
    2.0 * mu_g / (1.0 + mu_g) * q.powf(n)
}

pub fn thermal_weights(mu_g: f64, len: usize) -> Vec<f64> {
    let q = (1.0 - mu_g) / (1.0 + mu_g);
    let mut t = 2.0 * mu_g / (1.0 + mu_g);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(t);
        t *= q;
    }
    out
}

/// Thermal state truncated where the remaining tail is below `1e−18`.
pub fn thermal_state(mu_g: f64) -> Result<FockDensityMatrix> {
    if !(mu_g > 0.0 && mu_g <= 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1]")));
    }
    if mu_g == 1.0 {
        return FockDensityMatrix::from_diagonal(&[1.0, 0.0, 0.0]);
    }
    let q = (1.0 - mu_g) / (1.0 + mu_g);
    let len = ((1e-18f64).ln() / q.ln()).ceil() as usize + 3;
    FockDensityMatrix::from_diagonal(&thermal_weights(mu_g, len))
}

/// `T = Σ ρ_n t_n` for a phase-symmetric state with reference purity `mu_g`.
pub fn thermal_overlap(weights: &[f64], mu_g: f64) -> Result<f64> {
    if !(mu_g > 0.0 && mu_g <= 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1]")));
    }
    Ok(weights.iter().zip(thermal_weights(mu_g, weights.len())).map(|(w, t)| w * t).sum())
}

/// `2π ∬ W W_G` with the Gaussian built from the state's own moments,
/// integrated by a Gauss–Hermite rule adapted to that Gaussian.
pub fn gaussian_overlap_numeric(rho: &FockDensityMatrix) -> Result<f64> {
    let m = rho.moments();
    let g = GaussianWigner::new(m.d, &rho.covariance())?;
    Ok(overlap_gauss_hermite(rho, &g)?.value)
}

pub fn non_gaussianity(mu: f64, mu_g: f64, overlap: f64) -> f64 {
    (mu_g + mu - 2.0 * overlap) / (2.0 * mu)
}

/// `Tr((ρ − ρ_G)²)/(2μ)` with ρ_G realised as a Fock-basis thermal matrix.
/// Only meaningful for phase-symmetric states.
pub fn non_gaussianity_direct(rho: &FockDensityMatrix, mu_g: f64) -> Result<f64> {
    let th = thermal_state(mu_g)?;
    let dim = rho.dim().max(th.dim());
    let (a, b) = (rho.padded(dim), th.padded(dim));
    let mut s = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            s += (a.get(m, n) - b.get(m, n)).norm_sqr();
        }
    }
    Ok(s / (2.0 * rho.purity()))
}

pub fn is_symmetric(d: [f64; 2], gamma: &Covariance) -> bool {
    d[0].abs() < SYMMETRIC_TOL
        && d[1].abs() < SYMMETRIC_TOL
        && (gamma[0][0] - gamma[1][1]).abs() < SYMMETRIC_TOL
        && gamma[0][1].abs() < SYMMETRIC_TOL
}

/// All coordinates of a state; the thermal closed form is used for
/// phase-symmetric states and Wigner quadrature otherwise.
pub fn summarize(rho: &FockDensityMatrix) -> Result<StateSummary> {
    let m = rho.moments();
    let gamma = rho.covariance();
    let mu_g = reference_purity(&gamma)?;
    let mu = rho.purity();
    let symmetric = is_symmetric(m.d, &gamma);
    let (overlap, method) = if symmetric {
        (thermal_overlap(&rho.diagonal(), mu_g.min(1.0))?, OverlapMethod::Thermal)
    } else {
        (gaussian_overlap_numeric(rho)?, OverlapMethod::Quadrature)
    };
    Ok(StateSummary { mu, mu_g, overlap, delta: non_gaussianity(mu, mu_g, overlap), gamma, d: m.d, method, symmetric })
}
