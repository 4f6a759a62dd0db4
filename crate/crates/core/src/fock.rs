//! Truncated Fock-space density matrices and ladder-operator observables.
//!
//! Quadratures follow `x = (a + a†)/√2`, `p = (a − a†)/(i√2)` with ħ = 1, so the
//! vacuum has covariance `γ = I`. Covariances carry the anticommutator
//! convention `γ_ij = ⟨{Δr_i, Δr_j}⟩`, i.e. twice the centred second moments.
//!
//! Moments are computed from the stored entries with exact ladder identities
//! (`⟨a⟩ = Σ √n ρ_{n,n−1}`, `⟨a²⟩ = Σ √(n(n−1)) ρ_{n,n−2}`), so a state with
//! finite support needs no padding to get exact first and second moments.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NgbError, Result};

pub const EPS_HERMITIAN: f64 = 1e-12;
pub const EPS_TRACE: f64 = 1e-10;
pub const EPS_PSD: f64 = 1e-10;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const DEFAULT_DIM: usize = 64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Density matrix in the number basis `|0⟩ … |dim−1⟩`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

/// First and second moments of the quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    /// Displacement `(⟨x⟩, ⟨p⟩)`.
    pub d: [f64; 2],
    pub xx: f64,
    pub pp: f64,
    /// Symmetrised `⟨xp + px⟩/2`.
    pub xp: f64,
    pub n_mean: f64,
}

pub type Covariance = [[f64; 2]; 2];

/// Report-only validation; the oracle studies near-boundary states with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub trace_defect: f64,
    pub tail_mass: f64,
    pub hermitian: bool,
    pub psd: bool,
    pub unit_trace: bool,
    pub converged: bool,
}

impl ValidationReport {
    /// Physical validity (tail convergence is reported separately).
    pub fn is_valid(&self) -> bool {
        self.hermitian && self.psd && self.unit_trace
    }
}

impl FockDensityMatrix {
    /// Wraps a row-major matrix without any physical checks.
    pub fn from_raw(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(NgbError::InvalidInput("dim must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(NgbError::InvalidInput(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NgbError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { dim, data })
    }

    /// Mixture of number states with the given (unnormalised) weights.
    pub fn from_diagonal(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(NgbError::InvalidInput("empty weight list".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < -EPS_PSD) {
            return Err(NgbError::InvalidInput("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if total <= 0.0 {
            return Err(NgbError::InvalidInput("all weights are zero".into()));
        }
        let dim = weights.len();
        let mut data = vec![ZERO; dim * dim];
        for (n, w) in weights.iter().enumerate() {
            data[n * dim + n] = Complex64::new(w.max(0.0) / total, 0.0);
        }
        Ok(Self { dim, data })
    }

    /// Projector onto the normalised vector `Σ ψ_n |n⟩`.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if amplitudes.is_empty() || !norm2.is_finite() || norm2 == 0.0 {
            return Err(NgbError::InvalidInput("zero state vector".into()));
        }
        let s = 1.0 / norm2.sqrt();
        let psi: Vec<Complex64> = amplitudes.iter().map(|z| z * s).collect();
        let dim = psi.len();
        let mut data = vec![ZERO; dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                data[m * dim + n] = psi[m] * psi[n].conj();
            }
        }
        Ok(Self { dim, data })
    }

    /// Convex combination `Σ p_j ρ_j`; all parts are padded to the largest dim.
    pub fn mixture(parts: &[(f64, &FockDensityMatrix)]) -> Result<Self> {
        let dim =
            parts.iter().map(|(_, r)| r.dim).max().ok_or_else(|| NgbError::InvalidInput("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(p, _)| *p).sum();
        if parts.iter().any(|(p, _)| *p < 0.0) || total <= 0.0 {
            return Err(NgbError::InvalidInput("mixture weights must be non-negative".into()));
        }
        let mut data = vec![ZERO; dim * dim];
        for (p, r) in parts {
            for m in 0..r.dim {
                for n in 0..r.dim {
                    data[m * dim + n] += r.get(m, n) * (*p / total);
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    /// Embeds the state in a larger basis with empty top levels.
    pub fn padded(&self, dim: usize) -> Self {
        if dim <= self.dim {
            return self.clone();
        }
        let mut data = vec![ZERO; dim * dim];
        for m in 0..self.dim {
            for n in 0..self.dim {
                data[m * dim + n] = self.get(m, n);
            }
        }
        Self { dim, data }
    }

    /// Projects onto the first `dim` levels without renormalising.
    pub fn truncated(&self, dim: usize) -> Self {
        if dim >= self.dim || dim == 0 {
            return self.clone();
        }
        let mut data = vec![ZERO; dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                data[m * dim + n] = self.get(m, n);
            }
        }
        Self { dim, data }
    }

    /// Highest level touched by a non-zero entry.
    pub fn top_level(&self) -> usize {
        let mut top = 0;
        for m in 0..self.dim {
            for n in m..self.dim {
                if self.get(m, n) != ZERO {
                    top = top.max(n);
                }
            }
        }
        top
    }

    pub fn is_diagonal(&self) -> bool {
        for m in 0..self.dim {
            for n in 0..self.dim {
                if m != n && self.get(m, n) != ZERO {
                    return false;
                }
            }
        }
        true
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|n| self.get(n, n)).sum()
    }

    /// Mass on the two highest basis levels.
    pub fn tail_mass(&self) -> f64 {
        let d = self.dim;
        let mut t = self.get(d - 1, d - 1).re;
        if d >= 2 {
            t += self.get(d - 2, d - 2).re;
        }
        t.abs()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.dim {
            for n in m..self.dim {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let a = DMatrix::from_fn(self.dim, self.dim, |m, n| 0.5 * (self.get(m, n) + self.get(n, m).conj()));
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with_tail(DEFAULT_TAIL_TOL)
    }

    pub fn validate_with_tail(&self, tail_tol: f64) -> ValidationReport {
        let hermiticity_defect = self.hermiticity_defect();
        let min_eigenvalue = self.eigenvalues().first().copied().unwrap_or(0.0);
        let tr = self.trace();
        let trace_defect = (tr - Complex64::new(1.0, 0.0)).norm();
        let tail_mass = self.tail_mass();
        ValidationReport {
            hermiticity_defect,
            min_eigenvalue,
            trace_defect,
            tail_mass,
            hermitian: hermiticity_defect <= EPS_HERMITIAN,
            psd: min_eigenvalue >= -EPS_PSD,
            unit_trace: trace_defect <= EPS_TRACE,
            converged: tail_mass < tail_tol,
        }
    }

    /// Fails unless the state is physical.
    pub fn require_valid(&self) -> Result<()> {
        let r = self.validate();
        if !r.hermitian {
            return Err(NgbError::InvalidInput(format!("not Hermitian (defect {:.3e})", r.hermiticity_defect)));
        }
        if !r.unit_trace {
            return Err(NgbError::InvalidInput(format!("trace defect {:.3e}", r.trace_defect)));
        }
        if !r.psd {
            return Err(NgbError::InvalidInput(format!(
                "not positive semidefinite (min eigenvalue {:.3e})",
                r.min_eigenvalue
            )));
        }
        Ok(())
    }

    /// Fails when the top two levels carry more than `tol` of the mass.
    pub fn require_converged(&self, tol: f64) -> Result<()> {
        let tail = self.tail_mass();
        if tail >= tol {
            return Err(NgbError::CutoffTooSmall { dim: self.dim, tail, tol });
        }
        Ok(())
    }

    /// `Tr ρ² = Σ |ρ_mn|²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨a⟩`, `⟨a²⟩` and `⟨a†a⟩` from the band structure of the ladder operators.
    pub fn ladder_expectations(&self) -> (Complex64, Complex64, f64) {
        let mut a1 = ZERO;
        let mut a2 = ZERO;
        let mut n_mean = 0.0;
        for n in 0..self.dim {
            let nf = n as f64;
            n_mean += nf * self.get(n, n).re;
            if n >= 1 {
                a1 += self.get(n, n - 1) * nf.sqrt();
            }
            if n >= 2 {
                a2 += self.get(n, n - 2) * (nf * (nf - 1.0)).sqrt();
            }
        }
        (a1, a2, n_mean)
    }

    pub fn moments(&self) -> Moments {
        let (a1, a2, n_mean) = self.ladder_expectations();
        let s2 = std::f64::consts::SQRT_2;
        Moments { d: [s2 * a1.re, s2 * a1.im], xx: a2.re + n_mean + 0.5, pp: -a2.re + n_mean + 0.5, xp: a2.im, n_mean }
    }

    pub fn covariance(&self) -> Covariance {
        covariance_from_moments(&self.moments())
    }

    /// Phase averaging over `e^{iθn}ρe^{−iθn}`: keeps the diagonal only.
    pub fn phase_average(&self) -> Self {
        let mut data = vec![ZERO; self.dim * self.dim];
        for n in 0..self.dim {
            data[n * self.dim + n] = Complex64::new(self.get(n, n).re, 0.0);
        }
        Self { dim: self.dim, data }
    }

    /// `Tr(ρ σ)` for two states (padded to a common basis).
    pub fn trace_product(&self, other: &FockDensityMatrix) -> f64 {
        let d = self.dim.min(other.dim);
        let mut s = ZERO;
        for m in 0..d {
            for n in 0..d {
                s += self.get(m, n) * other.get(n, m);
            }
        }
        s.re
    }
}

pub fn covariance_from_moments(mo: &Moments) -> Covariance {
    let [x, p] = mo.d;
    let g11 = 2.0 * (mo.xx - x * x);
    let g22 = 2.0 * (mo.pp - p * p);
    let g12 = 2.0 * (mo.xp - x * p);
    [[g11, g12], [g12, g22]]
}

pub fn det2(g: &Covariance) -> f64 {
    g[0][0] * g[1][1] - g[0][1] * g[1][0]
}

/// On-disk state description; exactly one of the payload keys must be set.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl StateJson {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NgbError::InvalidInput(format!("state json: {e}")))
    }

    /// Builds the state; diagonal and pure payloads are normalised, matrices are taken as is.
    pub fn to_state(&self) -> Result<FockDensityMatrix> {
        let keys = [self.diagonal.is_some(), self.pure.is_some(), self.matrix.is_some()];
        if keys.iter().filter(|k| **k).count() != 1 {
            return Err(NgbError::InvalidInput("exactly one of diagonal, pure, matrix must be present".into()));
        }
        let dim = self.dim;
        if dim == 0 {
            return Err(NgbError::InvalidInput("dim must be positive".into()));
        }
        if let Some(w) = &self.diagonal {
            if w.len() > dim {
                return Err(NgbError::InvalidInput("diagonal longer than dim".into()));
            }
            return Ok(FockDensityMatrix::from_diagonal(w)?.padded(dim));
        }
        if let Some(p) = &self.pure {
            if p.len() > dim {
                return Err(NgbError::InvalidInput("amplitude list longer than dim".into()));
            }
            let amps: Vec<Complex64> = p.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            return Ok(FockDensityMatrix::from_pure(&amps)?.padded(dim));
        }
        let rows = self.matrix.as_ref().expect("checked above");
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(NgbError::InvalidInput(format!("matrix must be {dim}×{dim}")));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|[re, im]| Complex64::new(*re, *im))).collect();
        FockDensityMatrix::from_raw(dim, data)
    }

    pub fn from_state(rho: &FockDensityMatrix) -> Self {
        let dim = rho.dim();
        if rho.is_diagonal() {
            return Self { dim, diagonal: Some(rho.diagonal()), pure: None, matrix: None };
        }
        let matrix = (0..dim).map(|m| (0..dim).map(|n| [rho.get(m, n).re, rho.get(m, n).im]).collect()).collect();
        Self { dim, diagonal: None, pure: None, matrix: Some(matrix) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_constructors() {
        let v = FockDensityMatrix::from_diagonal(&[1.0]).unwrap();
        assert_eq!(v.get(0, 0), c(1.0, 0.0));
        let m = FockDensityMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert_eq!(m.diagonal(), vec![0.5, 0.5]);
        assert!((m.trace().re - 1.0).abs() < 1e-15);
        assert!(FockDensityMatrix::from_diagonal(&[0.0, 0.0]).is_err());
        assert!(FockDensityMatrix::from_diagonal(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn pure_constructors() {
        let one = FockDensityMatrix::from_pure(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(one.diagonal(), vec![0.0, 1.0]);
        let s = 0.5f64.sqrt();
        let p = FockDensityMatrix::from_pure(&[c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)]).unwrap();
        assert!((p.get(0, 3).re - 0.5).abs() < 1e-15);
        let v = FockDensityMatrix::from_pure(&[c(2., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!((v.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!(FockDensityMatrix::from_pure(&[c(0., 0.)]).is_err());
    }

    #[test]
    fn validation_flags() {
        let v = FockDensityMatrix::from_diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert!(v.validate().is_valid() && v.validate().converged);
        let bad = FockDensityMatrix::from_raw(2, vec![c(0.5, 0.), c(1., 0.), c(0., 0.), c(0.5, 0.)]).unwrap();
        assert!(!bad.validate().hermitian);
        let neg = FockDensityMatrix::from_raw(2, vec![c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]).unwrap();
        let r = neg.validate();
        assert!(r.hermitian && r.unit_trace && !r.psd);
    }

    #[test]
    fn purity_examples() {
        assert!((FockDensityMatrix::from_diagonal(&[1.0]).unwrap().purity() - 1.0).abs() < 1e-15);
        assert!((FockDensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap().purity() - 0.5).abs() < 1e-15);
        // two-level state with coherence b: a² + (1−a)² + 2b²
        let rho = FockDensityMatrix::from_raw(2, vec![c(0.5, 0.), c(0.3, 0.), c(0.3, 0.), c(0.5, 0.)]).unwrap();
        assert!((rho.purity() - 0.68).abs() < 1e-15);
    }

    #[test]
    fn number_state_moments() {
        for n in 0..6 {
            let mut w = vec![0.0; n + 1];
            w[n] = 1.0;
            let rho = FockDensityMatrix::from_diagonal(&w).unwrap();
            let m = rho.moments();
            assert_eq!(m.d, [0.0, 0.0]);
            assert_eq!(m.n_mean, n as f64);
            let g = rho.covariance();
            let e = 2.0 * n as f64 + 1.0;
            assert!((g[0][0] - e).abs() < 1e-14 && (g[1][1] - e).abs() < 1e-14 && g[0][1] == 0.0);
        }
    }

    #[test]
    fn superposition_displacement() {
        let s = 0.5f64.sqrt();
        let rho = FockDensityMatrix::from_pure(&[c(s, 0.), c(s, 0.)]).unwrap();
        let m = rho.moments();
        assert!((m.d[0] - s).abs() < 1e-15 && m.d[1].abs() < 1e-15);
        // imaginary coherence moves the p quadrature: ρ_01 = i/2 gives ⟨p⟩ = −1/√2
        let r2 = FockDensityMatrix::from_raw(2, vec![c(0.5, 0.), c(0., 0.5), c(0., -0.5), c(0.5, 0.)]).unwrap();
        let m2 = r2.moments();
        assert!(m2.d[0].abs() < 1e-15 && (m2.d[1] + s).abs() < 1e-15);
    }

    #[test]
    fn thermal_covariance() {
        let mg: f64 = 0.5;
        let q = (1.0 - mg) / (1.0 + mg);
        let w: Vec<f64> = (0..200).map(|n| 2.0 * mg / (1.0 + mg) * q.powi(n)).collect();
        let g = FockDensityMatrix::from_diagonal(&w).unwrap().covariance();
        assert!((g[0][0] - 2.0).abs() < 1e-12 && (g[1][1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn phase_average_examples() {
        let d = FockDensityMatrix::from_diagonal(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(d.phase_average(), d);
        let s = 0.5f64.sqrt();
        let p = FockDensityMatrix::from_pure(&[c(s, 0.), c(s, 0.)]).unwrap();
        let pa = p.phase_average();
        assert!(pa.is_diagonal());
        assert!((pa.diagonal()[0] - 0.5).abs() < 1e-15 && (pa.diagonal()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_check() {
        let one = FockDensityMatrix::from_diagonal(&[0.0, 1.0]).unwrap();
        assert!(matches!(one.require_converged(1e-8), Err(NgbError::CutoffTooSmall { .. })));
        assert!(one.padded(4).require_converged(1e-8).is_ok());
    }

    #[test]
    fn state_json_roundtrip_and_key_rules() {
        let j = StateJson::parse(r#"{"dim":3,"pure":[[0,0],[1,0]]}"#).unwrap();
        let rho = j.to_state().unwrap();
        assert_eq!(rho.dim(), 3);
        assert!((rho.get(1, 1).re - 1.0).abs() < 1e-15);
        assert!(StateJson::parse(r#"{"dim":2,"diagonal":[1],"pure":[[1,0]]}"#).unwrap().to_state().is_err());
        assert!(StateJson::parse(r#"{"dim":2}"#).unwrap().to_state().is_err());
        assert!(StateJson::parse(r#"{"dim":2,"extra":1,"diagonal":[1]}"#).is_err());
        let back = StateJson::from_state(&rho).to_state().unwrap();
        assert_eq!(back, rho);
    }

    fn arb_state() -> impl Strategy<Value = FockDensityMatrix> {
        (1usize..4, 2usize..8)
            .prop_flat_map(|(rank, dim)| {
                (
                    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rank * dim),
                    prop::collection::vec(0.05f64..1.0, rank),
                    Just(dim),
                )
            })
            .prop_map(|(amps, ps, dim)| {
                let parts: Vec<FockDensityMatrix> = amps
                    .chunks(dim)
                    .map(|ch| {
                        let mut v: Vec<Complex64> = ch.iter().map(|(a, b)| c(*a, *b)).collect();
                        v[0] += c(0.1, 0.0);
                        FockDensityMatrix::from_pure(&v).unwrap()
                    })
                    .collect();
                let refs: Vec<(f64, &FockDensityMatrix)> = ps.iter().copied().zip(parts.iter()).collect();
                FockDensityMatrix::mixture(&refs).unwrap()
            })
    }

    proptest! {
        #[test]
        fn pure_states_have_unit_purity(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..10)) {
            let mut amps: Vec<Complex64> = v.iter().map(|(a, b)| c(*a, *b)).collect();
            amps[0] += c(0.05, 0.0);
            let rho = FockDensityMatrix::from_pure(&amps).unwrap();
            prop_assert!((rho.purity() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn phase_average_properties(rho in arb_state()) {
            let pa = rho.phase_average();
            prop_assert_eq!(pa.phase_average(), pa.clone());
            prop_assert!((pa.trace() - rho.trace()).norm() < 1e-15);
            prop_assert!((pa.moments().n_mean - rho.moments().n_mean).abs() < 1e-14);
            prop_assert!(pa.purity() <= rho.purity() + 1e-15);
            prop_assert!(pa.validate().is_valid());
        }

        #[test]
        fn covariance_obeys_uncertainty(rho in arb_state()) {
            let g = rho.covariance();
            prop_assert!(g[0][0] > 0.0 && g[1][1] > 0.0);
            prop_assert!(det2(&g) >= 1.0 - 1e-9);
        }
    }
}
