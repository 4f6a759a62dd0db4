//! Wigner functions of truncated Fock states, Gaussian Wigner functions,
//! phase-space quadrature and positivity certification.
//!
//! The evaluator sums bands `k = n − m` of the density matrix:
//!
//! `W = (1/π) Σ_m (−1)^m ρ_mm g_m⁰(z) + (2/π) Σ_{k≥1} Σ_m (−1)^m Re(ρ_{m,m+k} e^{ikθ}) g_m^k(z)`
//!
//! with `z = 2r²` and the normalised Laguerre functions
//! `g_m^k(z) = √(m!/(m+k)!) z^{k/2} e^{−z/2} L_m^k(z)`, which obey a three-term
//! recurrence that stays bounded for every order up to the stability ceiling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{NgbError, Result};
use crate::fock::{Covariance, FockDensityMatrix};
use crate::roots::golden_min;

/// Largest supported basis size (levels 0..=200).
pub const MAX_DIM: usize = 201;
/// Nonnegativity threshold for classification.
pub const EPS_W: f64 = 1e-9;
/// Accepted quadrature error estimate for overlaps and norms.
pub const QUAD_TOL: f64 = 1e-9;

/// Phase-space sampling grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Cartesian { x_min: f64, x_max: f64, p_min: f64, p_max: f64, steps_x: usize, steps_p: usize },
    Polar { r_max: f64, r_steps: usize, phi_steps: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Cartesian { x_min: -6.0, x_max: 6.0, p_min: -6.0, p_max: 6.0, steps_x: 201, steps_p: 201 }
    }
}

impl GridSpec {
    pub fn default_polar() -> Self {
        GridSpec::Polar { r_max: 6.0, r_steps: 400, phi_steps: 64 }
    }

    /// Square grid centred on the origin: `steps` points per axis over `[−half, half]`.
    pub fn square(half: f64, steps: usize) -> Self {
        GridSpec::Cartesian { x_min: -half, x_max: half, p_min: -half, p_max: half, steps_x: steps, steps_p: steps }
    }

    /// Grid adapted to the highest occupied level of a state.
    pub fn auto_for(rho: &FockDensityMatrix) -> Self {
        let (half, h) = auto_extent(rho.top_level());
        let n = (half / h).ceil() as usize;
        Self::square(n as f64 * h, 2 * n + 1)
    }

    /// Same region with twice the resolution.
    pub fn refined(&self) -> Self {
        match *self {
            GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x, steps_p } => {
                GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x: 2 * steps_x - 1, steps_p: 2 * steps_p - 1 }
            }
            GridSpec::Polar { r_max, r_steps, phi_steps } => {
                GridSpec::Polar { r_max, r_steps: 2 * r_steps, phi_steps: 2 * phi_steps }
            }
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            GridSpec::Cartesian { steps_x, steps_p, .. } => steps_x * steps_p,
            GridSpec::Polar { r_steps, phi_steps, .. } => (r_steps + 1) * phi_steps,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x, steps_p } => {
                x_max > x_min && p_max > p_min && steps_x >= 2 && steps_p >= 2
            }
            GridSpec::Polar { r_max, r_steps, phi_steps } => r_max > 0.0 && r_steps >= 1 && phi_steps >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(NgbError::InvalidInput(format!("bad grid {self:?}")))
        }
    }

    /// Points in storage order (Cartesian: x fastest; polar: φ fastest).
    pub fn points(&self) -> Vec<(f64, f64)> {
        match *self {
            GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x, steps_p } => {
                let hx = (x_max - x_min) / (steps_x - 1) as f64;
                let hp = (p_max - p_min) / (steps_p - 1) as f64;
                let mut v = Vec::with_capacity(steps_x * steps_p);
                for j in 0..steps_p {
                    for i in 0..steps_x {
                        v.push((x_min + i as f64 * hx, p_min + j as f64 * hp));
                    }
                }
                v
            }
            GridSpec::Polar { r_max, r_steps, phi_steps } => {
                let hr = r_max / r_steps as f64;
                let mut v = Vec::with_capacity((r_steps + 1) * phi_steps);
                for j in 0..=r_steps {
                    let r = j as f64 * hr;
                    for k in 0..phi_steps {
                        let phi = 2.0 * PI * k as f64 / phi_steps as f64;
                        v.push((r * phi.cos(), r * phi.sin()));
                    }
                }
                v
            }
        }
    }

    /// Area weights matching `points()`: trapezoid on Cartesian grids,
    /// Simpson (even `r_steps`) or trapezoid in r times uniform φ on polar ones.
    pub fn weights(&self) -> Vec<f64> {
        match *self {
            GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x, steps_p } => {
                let hx = (x_max - x_min) / (steps_x - 1) as f64;
                let hp = (p_max - p_min) / (steps_p - 1) as f64;
                let mut v = Vec::with_capacity(steps_x * steps_p);
                for j in 0..steps_p {
                    let wp = if j == 0 || j == steps_p - 1 { 0.5 } else { 1.0 };
                    for i in 0..steps_x {
                        let wx = if i == 0 || i == steps_x - 1 { 0.5 } else { 1.0 };
                        v.push(wx * wp * hx * hp);
                    }
                }
                v
            }
            GridSpec::Polar { r_max, r_steps, phi_steps } => {
                let hr = r_max / r_steps as f64;
                let dphi = 2.0 * PI / phi_steps as f64;
                // Simpson in r when the step count allows it: the r·W(r) integrand
                // has a kink-free start at 0, so this is O(h⁴) instead of O(h²).
                let simpson = r_steps % 2 == 0;
                let mut v = Vec::with_capacity((r_steps + 1) * phi_steps);
                for j in 0..=r_steps {
                    let wr = match (simpson, j) {
                        (_, 0) => 0.0,
                        (true, j) if j == r_steps => 1.0 / 3.0,
                        (true, j) if j % 2 == 1 => 4.0 / 3.0,
                        (true, _) => 2.0 / 3.0,
                        (false, j) if j == r_steps => 0.5,
                        (false, _) => 1.0,
                    };
                    let r = j as f64 * hr;
                    for _ in 0..phi_steps {
                        v.push(wr * r * hr * dphi);
                    }
                }
                v
            }
        }
    }

    /// Nominal spacing used by the local minimum refinement.
    fn spacing(&self) -> f64 {
        match *self {
            GridSpec::Cartesian { x_min, x_max, p_min, p_max, steps_x, steps_p } => {
                ((x_max - x_min) / (steps_x - 1) as f64).max((p_max - p_min) / (steps_p - 1) as f64)
            }
            GridSpec::Polar { r_max, r_steps, phi_steps } => {
                (r_max / r_steps as f64).max(r_max * 2.0 * PI / phi_steps as f64)
            }
        }
    }
}

/// Half-width and step of the adaptive square grid for a top level `n`.
fn auto_extent(n_top: usize) -> (f64, f64) {
    let s = (2.0 * n_top as f64 + 1.0).sqrt();
    let half = (s + 5.5).max(6.0);
    let h = (0.8 / s).min(0.2);
    (half, h)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// Precomputed band structure of a state for repeated Wigner evaluation.
#[derive(Clone, Debug)]
pub struct WignerEvaluator {
    /// `(k, entries (−1)^m ρ_{m,m+k}, −½ ln k!)` for every non-zero band.
    bands: Vec<(usize, Vec<Complex64>, f64)>,
}

impl WignerEvaluator {
    pub fn new(rho: &FockDensityMatrix) -> Result<Self> {
        let top = rho.top_level();
        if top + 1 > MAX_DIM {
            return Err(NgbError::UnsupportedRange(format!(
                "Wigner evaluation supports levels up to {}, state reaches {top}",
                MAX_DIM - 1
            )));
        }
        let d = top + 1;
        let mut bands = Vec::new();
        for k in 0..d {
            let entries: Vec<Complex64> = (0..d - k)
                .map(|m| {
                    let z = rho.get(m, m + k);
                    if m % 2 == 0 {
                        z
                    } else {
                        -z
                    }
                })
                .collect();
            if entries.iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                bands.push((k, entries, -0.5 * ln_factorial(k)));
            }
        }
        Ok(Self { bands })
    }

    /// `W(x, p)`.
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let r2 = x * x + p * p;
        let z = 2.0 * r2;
        let r = r2.sqrt();
        let unit = if r > 0.0 { Complex64::new(x / r, p / r) } else { Complex64::new(1.0, 0.0) };
        let ez = (-0.5 * z).exp();
        let lnz = z.ln();
        let mut acc = 0.0;
        for (k, entries, half_ln_kfact) in &self.bands {
            let k = *k;
            let kf = k as f64;
            let g0 = if k == 0 {
                ez
            } else if z == 0.0 {
                0.0
            } else {
                (0.5 * kf * lnz - 0.5 * z + half_ln_kfact).exp()
            };
            let mut s = entries[0] * g0;
            if entries.len() > 1 {
                let mut gm1 = g0;
                let mut gm = (1.0 + kf - z) * g0 / (kf + 1.0).sqrt();
                s += entries[1] * gm;
                for (m, e) in entries.iter().enumerate().skip(2) {
                    let mf = (m - 1) as f64;
                    let next = ((2.0 * mf + 1.0 + kf - z) * gm - (mf * (mf + kf)).sqrt() * gm1)
                        / ((mf + 1.0) * (mf + kf + 1.0)).sqrt();
                    gm1 = gm;
                    gm = next;
                    s += e * gm;
                }
            }
            if k == 0 {
                acc += s.re;
            } else {
                acc += 2.0 * (s * unit.powi(k as i32)).re;
            }
        }
        acc / PI
    }

    pub fn eval_many(&self, points: &[(f64, f64)]) -> Vec<f64> {
        points.par_iter().map(|&(x, p)| self.eval(x, p)).collect()
    }
}

/// Wigner function at the given points.
pub fn wigner_eval(rho: &FockDensityMatrix, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    Ok(WignerEvaluator::new(rho)?.eval_many(points))
}

/// Thermal (centred, isotropic) Gaussian Wigner function.
pub fn thermal_wigner(mu_g: f64, r: f64) -> Result<f64> {
    if !(mu_g > 0.0 && mu_g <= 1.0) || r < 0.0 {
        return Err(NgbError::InvalidInput(format!("thermal_wigner range: mu_g={mu_g}, r={r}")));
    }
    Ok(mu_g / PI * (-r * r * mu_g).exp())
}

/// Gaussian Wigner function with mean `d` and covariance `γ/2`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianWigner {
    d: [f64; 2],
    inv: [[f64; 2]; 2],
    norm: f64,
}

impl GaussianWigner {
    pub fn new(d: [f64; 2], gamma: &Covariance) -> Result<Self> {
        let s = [[gamma[0][0] / 2.0, gamma[0][1] / 2.0], [gamma[1][0] / 2.0, gamma[1][1] / 2.0]];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if !(det > 0.0) || !det.is_finite() {
            return Err(NgbError::InvalidInput(format!("singular covariance (det γ/2 = {det:e})")));
        }
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        Ok(Self { d, inv, norm: 1.0 / (2.0 * PI * det.sqrt()) })
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let u = x - self.d[0];
        let v = p - self.d[1];
        let q = self.inv[0][0] * u * u + 2.0 * self.inv[0][1] * u * v + self.inv[1][1] * v * v;
        self.norm * (-0.5 * q).exp()
    }
}

pub fn gaussian_wigner(d: [f64; 2], gamma: &Covariance, point: (f64, f64)) -> Result<f64> {
    Ok(GaussianWigner::new(d, gamma)?.eval(point.0, point.1))
}

/// Sampled Wigner function with its minimum.
#[derive(Clone, Debug, Serialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub points: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub min_location: (f64, f64),
}

impl WignerGrid {
    pub fn sample(rho: &FockDensityMatrix, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let points = spec.points();
        let values = wigner_eval(rho, &points)?;
        let (i, min_value) =
            values.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty grid");
        Ok(Self { spec, min_location: points[i], points, values, min_value })
    }

    /// `Σ w W`, the trapezoid estimate of `∬ W`.
    pub fn normalization(&self) -> f64 {
        self.spec.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "p", "W"])?;
        for ((x, p), v) in self.points.iter().zip(&self.values) {
            wtr.write_record([fmt(*x), fmt(*p), fmt(*v)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// `2π ∬ W_a W_b` on a shared grid.
pub fn overlap_quadrature(values_a: &[f64], values_b: &[f64], spec: &GridSpec) -> Result<f64> {
    let n = spec.len();
    if values_a.len() != n || values_b.len() != n {
        return Err(NgbError::GridMismatch(format!(
            "grid has {n} points, got {} and {}",
            values_a.len(),
            values_b.len()
        )));
    }
    let w = spec.weights();
    Ok(2.0 * PI * (0..n).map(|i| w[i] * values_a[i] * values_b[i]).sum::<f64>())
}

/// Integrals over the plane of products of the state's Wigner function with
/// itself, a constant or another function, on an adaptive square grid.
///
/// The grid has an odd number of points per axis so the every-other-point
/// subgrid gives a free coarse estimate; if the two disagree beyond `tol` the
/// step is halved (at most twice).
pub struct PhaseSpaceIntegrator {
    eval: WignerEvaluator,
    half: f64,
    h: f64,
}

/// Result of an adaptive phase-space integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub points_per_axis: usize,
}

impl PhaseSpaceIntegrator {
    pub fn new(rho: &FockDensityMatrix) -> Result<Self> {
        let (half, h) = auto_extent(rho.top_level());
        Ok(Self { eval: WignerEvaluator::new(rho)?, half, h })
    }

    pub fn evaluator(&self) -> &WignerEvaluator {
        &self.eval
    }

    /// `∬ F(W(x,p), x, p) dx dp` with `F` supplied by the caller.
    pub fn integrate<F>(&self, f: F, tol: f64) -> Result<Integral>
    where
        F: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let mut h = self.h;
        let mut last = None;
        for _ in 0..3 {
            let n = (self.half / h).ceil() as i64;
            let step = h;
            let rows: Vec<(f64, f64)> = (-n..=n)
                .into_par_iter()
                .map(|j| {
                    let p = j as f64 * step;
                    let mut fine = 0.0;
                    let mut coarse = 0.0;
                    for i in -n..=n {
                        let x = i as f64 * step;
                        let v = f(self.eval.eval(x, p), x, p);
                        fine += v;
                        if i % 2 == 0 && j % 2 == 0 {
                            coarse += v;
                        }
                    }
                    (fine, coarse)
                })
                .collect();
            let fine: f64 = rows.iter().map(|r| r.0).sum::<f64>() * step * step;
            let coarse: f64 = rows.iter().map(|r| r.1).sum::<f64>() * 4.0 * step * step;
            let est = (fine - coarse).abs();
            let res = Integral { value: fine, error_estimate: est, points_per_axis: (2 * n + 1) as usize };
            if est <= tol {
                return Ok(res);
            }
            last = Some(res);
            h *= 0.5;
        }
        let r = last.expect("loop ran");
        Err(NgbError::GridUnderresolved { estimate: r.error_estimate, tol })
    }

    /// `∬ W`.
    pub fn normalization(&self) -> Result<Integral> {
        self.integrate(|w, _, _| w, QUAD_TOL)
    }

    /// `2π ∬ W²`.
    pub fn purity(&self) -> Result<Integral> {
        self.integrate(|w, _, _| 2.0 * PI * w * w, QUAD_TOL)
    }

    /// `2π ∬ W W_G`.
    pub fn overlap_with(&self, g: &GaussianWigner) -> Result<Integral> {
        self.integrate(|w, x, p| 2.0 * PI * w * g.eval(x, p), QUAD_TOL)
    }
}

/// Refined minimum of a Wigner function and its classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WignerMin {
    pub value: f64,
    pub location: (f64, f64),
    pub nonnegative: bool,
}

/// Grid minimum followed by alternating golden-section line searches along
/// x and p inside the best cell's neighbourhood.
pub fn min_wigner(rho: &FockDensityMatrix, spec: &GridSpec) -> Result<WignerMin> {
    spec.validate()?;
    let ev = WignerEvaluator::new(rho)?;
    let pts = spec.points();
    let vals = ev.eval_many(&pts);
    let (i, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
    let (mut x, mut p) = pts[i];
    let mut best = vals[i];
    let mut span = spec.spacing();
    for _ in 0..6 {
        let (nx, vx) = golden_min(|t| ev.eval(t, p), x - span, x + span, 1e-12);
        if vx < best {
            best = vx;
            x = nx;
        }
        let (np, vp) = golden_min(|t| ev.eval(x, t), p - span, p + span, 1e-12);
        if vp < best {
            best = vp;
            p = np;
        }
        span *= 0.5;
    }
    Ok(WignerMin { value: best, location: (x, p), nonnegative: best >= -EPS_W })
}

/// Gauss–Hermite nodes and weights for `∫ f(u) e^{−u²} du` with `n` points
/// (Newton iteration on the orthonormal recurrence).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// `2π ∬ W W_G` by a product Gauss–Hermite rule centred on the combined
/// Gaussian `e^{−r²} W_G`. The remaining factor is a polynomial of degree
/// `2·top_level`, so the rule is exact once it has `top_level + 1` nodes per
/// axis; the error estimate compares two orders above that.
pub fn overlap_gauss_hermite(rho: &FockDensityMatrix, g: &GaussianWigner) -> Result<Integral> {
    let eval = WignerEvaluator::new(rho)?;
    let s_inv = g.inv;
    let a = [[2.0 + s_inv[0][0], s_inv[0][1]], [s_inv[1][0], 2.0 + s_inv[1][1]]];
    let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let a_inv = [[a[1][1] / det_a, -a[0][1] / det_a], [-a[1][0] / det_a, a[0][0] / det_a]];
    let sd = [s_inv[0][0] * g.d[0] + s_inv[0][1] * g.d[1], s_inv[1][0] * g.d[0] + s_inv[1][1] * g.d[1]];
    let m = [a_inv[0][0] * sd[0] + a_inv[0][1] * sd[1], a_inv[1][0] * sd[0] + a_inv[1][1] * sd[1]];
    // B Bᵀ = 2 A⁻¹ (lower Cholesky factor)
    let c = [[2.0 * a_inv[0][0], 2.0 * a_inv[0][1]], [2.0 * a_inv[1][0], 2.0 * a_inv[1][1]]];
    let b00 = c[0][0].sqrt();
    let b10 = c[1][0] / b00;
    let b11 = (c[1][1] - b10 * b10).sqrt();
    let jac = b00 * b11;
    let rule = |n: usize| -> f64 {
        let (u, wu) = gauss_hermite(n);
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    let x = m[0] + b00 * u[i];
                    let p = m[1] + b10 * u[i] + b11 * u[j];
                    let e = (u[i] * u[i] + u[j] * u[j]).exp();
                    acc += wu[j] * eval.eval(x, p) * g.eval(x, p) * e;
                }
                wu[i] * acc
            })
            .collect();
        2.0 * PI * jac * rows.iter().sum::<f64>()
    };
    let n = rho.top_level() + 3;
    let lo = rule(n);
    let hi = rule(n + 6);
    let est = (hi - lo).abs();
    if est > QUAD_TOL {
        return Err(NgbError::GridUnderresolved { estimate: est, tol: QUAD_TOL });
    }
    Ok(Integral { value: hi, error_estimate: est, points_per_axis: n + 6 })
}
