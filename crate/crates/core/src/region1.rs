//! Minimum-purity sheet of the bound.
//!
//! At fixed `μ_G` and overlap `T` the least pure state is Fock-diagonal with
//! weights `f(n) = A1 + A2·n + A3·t_n/2` on a window `n_min..=⌊x2⌋`, where `x2`
//! is the continuous upper root of `f` and `t_n` the thermal weights. The three
//! coefficients follow from `f(x2) = 0`, normalisation and `Σ f(n)(2n+1) = 1/μ_G`.
//!
//! Along a fixed-`μ_G` sheet, increasing `x2` raises `T` from the rank-2 edge
//! towards `μ_G`. The purity first falls to the Dodonov–Man'ko minimum
//! (where `A3` changes sign and `f` becomes linear) and then rises towards
//! the thermal value. Only the falling part bounds `T` from below at fixed `μ`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{BoundPoint, Family, Linspace, Region};
use crate::dd::Dd;
use crate::error::{NgbError, Result};
use crate::fock::FockDensityMatrix;
use crate::metrics::thermal_weight;
use crate::roots::bisect;

/// Smallest accepted |det| of the 3×3 coefficient system.
pub const DET_TOL: f64 = 1e-13;
/// Weights above `−WEIGHT_TOL` count as non-negative.
pub const WEIGHT_TOL: f64 = 1e-12;
/// x2 step used when tracing a sheet.
const SCAN_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Region1Params {
    pub mu_g: f64,
    pub x2: f64,
    pub n_min: usize,
}

/// Coefficients, closed-form coordinates and explicit weights of one sheet point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region1Solution {
    pub params: Region1Params,
    pub n_max: usize,
    /// `[A1, A2, A3]`.
    pub coeffs: [f64; 3],
    /// Overlap from the closed form.
    pub overlap: f64,
    /// Purity from the closed form.
    pub mu: f64,
    /// `f(n)` for `n = n_min..=n_max`.
    pub weights: Vec<f64>,
    #[serde(skip)]
    coeffs_dd: [Dd; 3],
}

impl Region1Solution {
    /// `f(n)` continued to real `n`.
    pub fn f(&self, n: f64) -> f64 {
        let [a1, a2, a3] = self.coeffs_dd;
        let r = self.params.mu_g;
        let q = ratio_dd(r);
        let qn = if n >= 0.0 && n.fract() == 0.0 { q.powi(n as u64) } else { Dd::from(q.to_f64().powf(n)) };
        (a1 + a2 * n + a3 * (Dd::from(r) / (1.0 + Dd::from(r))) * qn).to_f64()
    }

    /// Number of strictly positive weights.
    pub fn rank(&self) -> usize {
        self.weights.iter().filter(|w| **w > WEIGHT_TOL).count()
    }

    /// Explicit diagonal state, with two empty levels above `n_max`.
    pub fn state(&self) -> Result<FockDensityMatrix> {
        let mut w = vec![0.0; self.n_max + 3];
        for (i, v) in self.weights.iter().enumerate() {
            w[self.params.n_min + i] = v.max(0.0);
        }
        FockDensityMatrix::from_diagonal(&w)
    }

    pub fn point(&self) -> BoundPoint {
        let [a1, a2, a3] = self.coeffs;
        let mut p =
            BoundPoint::new(self.params.mu_g, self.mu, self.overlap, Region::I, Family::Region1Exact, self.rank())
                .with_param("A1", a1)
                .with_param("A2", a2)
                .with_param("A3", a3);
        p.n_min = Some(self.params.n_min);
        p.x2 = Some(self.params.x2);
        p
    }

    /// Feasibility as a density matrix with `n_min` as the true lower edge.
    pub fn check_feasible(&self) -> std::result::Result<(), String> {
        let n_min = self.params.n_min;
        if let Some((i, w)) = self.weights.iter().enumerate().find(|(_, w)| **w < -WEIGHT_TOL) {
            return Err(format!("negative weight {w:e} at n={}", n_min + i));
        }
        if !(self.f(n_min as f64) > -WEIGHT_TOL) {
            return Err(format!("f(n_min={n_min}) is not positive"));
        }
        if n_min > 0 && !(self.f(n_min as f64 - 1.0) < WEIGHT_TOL) {
            return Err(format!("f(n_min-1) is not negative, n_min={n_min} is not the lower edge"));
        }
        Ok(())
    }
}

fn ratio_dd(mu_g: f64) -> Dd {
    let r = Dd::from(mu_g);
    (1.0 - r) / (1.0 + r)
}

fn check_mu_g_open(mu_g: f64) -> Result<()> {
    if mu_g > 0.0 && mu_g < 1.0 {
        Ok(())
    } else {
        Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1)")))
    }
}

/// Solve the coefficient system and evaluate the closed forms without any
/// feasibility check. Outside the feasible window this is the algebraic
/// continuation of the sheet.
///
/// The coefficients grow without bound as `x2 → n_min + 1` and as `μ_G → 0`,
/// and the closed forms cancel them back to O(1). Everything past the
/// singularity check is therefore carried in double-double, with two rounds of
/// residual refinement on the coefficients.
pub fn solve_parametric(mu_g: f64, x2: f64, n_min: usize) -> Result<Region1Solution> {
    check_mu_g_open(mu_g)?;
    if !(x2 > n_min as f64 + 1.0) || !x2.is_finite() {
        return Err(NgbError::InvalidInput(format!("need x2 > n_min + 1, got x2={x2}, n_min={n_min}")));
    }
    let r = Dd::from(mu_g);
    let q = ratio_dd(mu_g);
    let nm = n_min as f64;
    let big_n = x2.floor();
    let n_max = big_n as usize;
    let qm = q.powi(n_min as u64);
    let qn = q.powi(n_max as u64);
    let qn1 = qn * q;
    let qx = qn * q.to_f64().powf(x2 - big_n);
    let rows: [[Dd; 3]; 3] = [
        [Dd::ONE, Dd::from(x2), r * qx / (r + 1.0)],
        [Dd::from(big_n - nm + 1.0), Dd::from(((1.0 - nm) * nm + big_n * (big_n + 1.0)) / 2.0), (qm - qn1) / 2.0],
        [
            Dd::from(big_n * big_n + 2.0 * big_n + 1.0 - nm * nm),
            Dd::from(-4.0 * nm.powi(3) + 3.0 * nm * nm + nm + big_n * (4.0 * big_n * big_n + 9.0 * big_n + 5.0)) / 6.0,
            (qm * (2.0 * nm * r + 1.0) - qn1 * (2.0 * (big_n + 1.0) * r + 1.0)) / (2.0 * r),
        ],
    ];
    let rhs = [Dd::from(0.0), Dd::ONE, 1.0 / r];
    let m = Matrix3::from_fn(|i, j| rows[i][j].to_f64());
    let det = m.determinant();
    if !(det.abs() >= DET_TOL) {
        return Err(NgbError::Degenerate(format!("coefficient system determinant {det:e}")));
    }
    let lu = m.lu();
    let solve = |b: [f64; 3]| lu.solve(&Vector3::new(b[0], b[1], b[2]));
    let first =
        solve([0.0, 1.0, 1.0 / mu_g]).ok_or_else(|| NgbError::Degenerate("coefficient system is singular".into()))?;
    let mut a = [Dd::from(first[0]), Dd::from(first[1]), Dd::from(first[2])];
    for _ in 0..2 {
        let mut res = [0.0; 3];
        for i in 0..3 {
            res[i] = (rhs[i] - (rows[i][0] * a[0] + rows[i][1] * a[1] + rows[i][2] * a[2])).to_f64();
        }
        if let Some(d) = solve(res) {
            for k in 0..3 {
                a[k] = a[k] + d[k];
            }
        }
    }
    let [a1, a2, a3] = a;

    let bn = Dd::from(big_n);
    let nmd = Dd::from(nm);
    let s = (1.0 - r) / ((r + 1.0) * (r + 1.0));
    let overlap = 0.5
        * ((1.0 / r) * qm * (2.0 * a1 * r + 2.0 * a2 * nmd * r - a2 * r + a2 + a3 * r * r * qm)
            + (1.0 / r)
                * s
                * qn
                * (r * (a3 * (r - 1.0) * r * qn - 2.0 * a1 * (r + 1.0)) - a2 * (r + 1.0) * (2.0 * bn * r + r + 1.0)));
    let mu = -(nm - big_n - 1.0)
        * (6.0 * a1 * a1
            + 6.0 * a1 * a2 * (nm + big_n)
            + a2 * a2 * (2.0 * nm * big_n + nm * (2.0 * nm - 1.0) + 2.0 * big_n * big_n + big_n))
        / 6.0
        + a3 / (4.0 * r) * qm * (r * (4.0 * a1 + a3 * r * qm) + a2 * ((4.0 * nm - 2.0) * r + 2.0))
        - a3 * (r - 1.0) / (4.0 * r * (r + 1.0) * (r + 1.0))
            * qn
            * (r * (a3 * (r - 1.0) * r * qn - 4.0 * a1 * (r + 1.0)) - 2.0 * a2 * (r + 1.0) * (2.0 * bn * r + r + 1.0));

    let h = r / (1.0 + r);
    let mut weights = Vec::with_capacity(n_max + 1 - n_min);
    let mut qp = qm;
    for n in n_min..=n_max {
        weights.push((a1 + a2 * n as f64 + a3 * h * qp).to_f64());
        qp = qp * q;
    }
    Ok(Region1Solution {
        params: Region1Params { mu_g, x2, n_min },
        n_max,
        coeffs: [a1.to_f64(), a2.to_f64(), a3.to_f64()],
        overlap: overlap.to_f64(),
        mu: mu.to_f64(),
        weights,
        coeffs_dd: a,
    })
}

/// Coefficients and closed-form `(T, μ)` for a given window; errors if the
/// resulting weights do not form a state with `n_min` as the lower edge.
pub fn region1_exact(mu_g: f64, x2: f64, n_min: usize) -> Result<Region1Solution> {
    let s = solve_parametric(mu_g, x2, n_min)?;
    s.check_feasible().map_err(NgbError::Infeasible)?;
    Ok(s)
}

pub fn region1_state(mu_g: f64, x2: f64, n_min: usize) -> Result<FockDensityMatrix> {
    region1_exact(mu_g, x2, n_min)?.state()
}

/// Smallest feasible `n_min` for `(μ_G, x2)`.
pub fn region1_auto(mu_g: f64, x2: f64) -> Result<Region1Solution> {
    auto_from(mu_g, x2, 0)
}

/// Search outward from `hint`, then walk down to the smallest feasible window.
fn auto_from(mu_g: f64, x2: f64, hint: usize) -> Result<Region1Solution> {
    check_mu_g_open(mu_g)?;
    if !(x2 > 1.0) {
        return Err(NgbError::InvalidInput(format!("x2={x2} must exceed 1")));
    }
    let top = (x2 - 1.0).ceil() as usize - 1; // largest n_min with x2 > n_min + 1
    let hint = hint.min(top);
    let try_at = |k: usize| solve_parametric(mu_g, x2, k).ok().filter(|s| s.check_feasible().is_ok());
    let mut found = None;
    for step in 0..=top {
        let up = hint + step;
        if up <= top {
            if let Some(s) = try_at(up) {
                found = Some(s);
                break;
            }
        }
        if step > 0 && step <= hint {
            if let Some(s) = try_at(hint - step) {
                found = Some(s);
                break;
            }
        }
        if hint + step >= top && step >= hint {
            break;
        }
    }
    let mut best = found.ok_or_else(|| NgbError::Infeasible(format!("no feasible n_min at mu_g={mu_g}, x2={x2}")))?;
    while best.params.n_min > 0 {
        match try_at(best.params.n_min - 1) {
            Some(s) => best = s,
            None => break,
        }
    }
    Ok(best)
}

/// Closed-form sheet with `n_min = 0`, written with `y = (1−μ_G)/(1+μ_G)`.
/// Exact at integer `x2`; an approximation in between. Returns `(μ, T)`.
pub fn region1_approx(mu_g: f64, x2: f64) -> Result<(f64, f64)> {
    check_mu_g_open(mu_g)?;
    if !(x2 >= 2.0) {
        return Err(NgbError::InvalidInput(format!("x2={x2} below 2")));
    }
    let (m, xx) = (mu_g, x2);
    let y = (1.0 - m) / (1.0 + m);
    let yx = y.powf(xx);
    let y2x = yx * yx;
    let c = 2.0 * xx * m + m - 3.0;
    let d = yx * ((2.0 * xx * xx + 2.0 * xx - 1.0) * m * m + (4.0 * xx + 2.0) * m + 3.0) + (m + 1.0) * c;
    let quartic = -(2.0 * xx + 1.0).powi(2) * m.powi(4)
        + 4.0 * (4.0 * xx.powi(3) + 6.0 * xx * xx - 1.0) * m.powi(3)
        + 18.0 * (2.0 * xx * xx + 2.0 * xx + 1.0) * m * m
        + 12.0 * (2.0 * xx + 1.0) * m
        - 9.0;
    let mu =
        m * (8.0 * (2.0 * xx + 1.0) * m * (m + 1.0) * yx * c + y2x * quartic + (m + 1.0).powi(2) * c * c) / (d * d);
    let t = -m * (-4.0 * (2.0 * xx + 1.0) * m * yx + (m - 1.0) * y2x * (2.0 * xx * m + m + 3.0) - (m + 1.0) * c) / d;
    Ok((mu, t))
}

/// `(μ_approx − μ, T_approx − T)` against the exact sheet point.
pub fn approx_deviation(mu_g: f64, x2: f64) -> Result<(f64, f64)> {
    let (mu, t) = region1_approx(mu_g, x2)?;
    let s = region1_auto(mu_g, x2)?;
    Ok((mu - s.mu, t - s.overlap))
}

/// Parametric Dodonov–Man'ko curve: states with linear weights `∝ (y − n)`.
/// Returns `(μ_G, μ)`.
pub fn purity_bound_curve(y: f64) -> Result<(f64, f64)> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(NgbError::InvalidInput(format!("y={y} below 1")));
    }
    let n = y.floor();
    let mu_g = 3.0 * (n - 2.0 * y) / (n * (5.0 + 4.0 * n) - 6.0 * (1.0 + n) * y);
    let mu = 2.0 * (n + 2.0 * n * n - 6.0 * n * y + 6.0 * y * y) / (3.0 * (1.0 + n) * (n - 2.0 * y).powi(2));
    Ok((mu_g, mu))
}

/// Weights `P_n = c (y − n)` for `n = 0..=⌊y⌋`, normalised.
pub fn linear_weights(y: f64) -> Result<Vec<f64>> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(NgbError::InvalidInput(format!("y={y} below 1")));
    }
    let n = y.floor() as usize;
    let raw: Vec<f64> = (0..=n).map(|k| y - k as f64).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Piecewise closed form of the minimal purity at given `μ_G`: an
/// approximation below `μ_G = 3/5`, exact above.
pub fn purity_bound_approx(mu_g: f64) -> Result<f64> {
    if !(mu_g > 0.0 && mu_g <= 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1]")));
    }
    Ok(if mu_g <= 0.6 {
        8.0 * mu_g / (9.0 - mu_g * mu_g)
    } else {
        (1.0 - 4.0 * mu_g + 5.0 * mu_g * mu_g) / (2.0 * mu_g * mu_g)
    })
}

/// `a|n⟩⟨n| + (1−a)|n+1⟩⟨n+1|`, the upper edge of the sheet.
pub fn rank2_boundary(n: usize, a: f64) -> Result<BoundPoint> {
    if !(0.0..=1.0).contains(&a) {
        return Err(NgbError::InvalidInput(format!("a={a} outside [0,1]")));
    }
    let nf = n as f64;
    let mu_g = 1.0 / (2.0 * nf + 3.0 - 2.0 * a);
    let mu = a * a + (1.0 - a) * (1.0 - a);
    let t = a * thermal_weight(mu_g, nf) + (1.0 - a) * thermal_weight(mu_g, nf + 1.0);
    let rank = if a == 0.0 || a == 1.0 { 1 } else { 2 };
    Ok(BoundPoint::new(mu_g, mu, t, Region::I, Family::Rank2, rank).with_param("n", nf).with_param("a", a))
}

/// `(n, a)` of the rank-2 edge state with the given `μ_G`.
pub fn rank2_location(mu_g: f64) -> Result<(usize, f64)> {
    if !(mu_g > 0.0 && mu_g <= 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1]")));
    }
    let s = 1.0 / mu_g;
    let n = ((s - 1.0) / 2.0).floor().max(0.0) as usize;
    let a = ((2.0 * n as f64 + 3.0 - s) / 2.0).clamp(0.0, 1.0);
    Ok((n, a))
}

pub fn rank2_point(mu_g: f64) -> Result<BoundPoint> {
    let (n, a) = rank2_location(mu_g)?;
    let mut p = rank2_boundary(n, a)?;
    p.mu_g = mu_g;
    Ok(p)
}

/// Sheet points from the rank-2 plateau (`x2` just above `n + 1`, where the
/// window `{n, n+1}` carries the edge state) onwards, stepping until `stop`
/// holds (inclusive) or a generous cap is reached.
fn trace<F: Fn(&Region1Solution) -> bool>(mu_g: f64, grow: bool, stop: F) -> Result<Vec<Region1Solution>> {
    let (n0, _) = rank2_location(mu_g)?;
    let start = n0 as f64 + 1.0 + 1e-6;
    let cap = start + 40.0 / mu_g + 200.0;
    let mut out: Vec<Region1Solution> = Vec::new();
    let mut x = start;
    let mut hint = n0;
    while x <= cap {
        let s = auto_from(mu_g, x, hint)?;
        hint = s.params.n_min;
        let done = stop(&s);
        out.push(s);
        if done {
            return Ok(out);
        }
        let step = if grow { SCAN_STEP.max(0.02 * (x - n0 as f64)) } else { SCAN_STEP };
        x += step;
    }
    Err(NgbError::Inconsistency(format!("sheet trace at mu_g={mu_g} did not terminate by x2={cap}")))
}

fn sheet_at(mu_g: f64, x2: f64, hint: usize) -> Result<Region1Solution> {
    auto_from(mu_g, x2, hint)
}

/// Falling part of the sheet: samples from the plateau end down to the purity
/// minimum, which is the last element.
pub fn decreasing_branch(mu_g: f64) -> Result<Vec<Region1Solution>> {
    check_mu_g_open(mu_g)?;
    let mut pts = trace(mu_g, false, |s| s.coeffs[2] > 0.0)?;
    let last = pts.len() - 1;
    if last == 0 {
        return Ok(pts);
    }
    let (lo, hi) = (&pts[last - 1], &pts[last]);
    let hint = lo.params.n_min;
    let xm =
        bisect(|x| sheet_at(mu_g, x, hint).map(|s| s.coeffs[2]).unwrap_or(f64::NAN), lo.params.x2, hi.params.x2, 1e-13)
            .ok_or_else(|| NgbError::Inconsistency(format!("A3 sign change not bracketed at mu_g={mu_g}")))?;
    pts[last] = sheet_at(mu_g, xm, hint)?;
    Ok(pts)
}

/// Least pure state at fixed `μ_G` (the point where `A3 = 0`).
pub fn min_purity_point(mu_g: f64) -> Result<Region1Solution> {
    Ok(decreasing_branch(mu_g)?.pop().expect("branch is non-empty"))
}

/// Sheet point with purity `mu` on the falling branch, i.e. the smallest
/// overlap a state with `(μ_G, μ)` can have within the sheet's purity range.
/// `None` when `mu` lies above the rank-2 edge or below the purity minimum.
pub fn sheet_at_purity(mu_g: f64, mu: f64) -> Result<Option<Region1Solution>> {
    let branch = decreasing_branch(mu_g)?;
    sheet_at_purity_on(&branch, mu)
}

/// As [`sheet_at_purity`] on a precomputed branch.
pub fn sheet_at_purity_on(branch: &[Region1Solution], mu: f64) -> Result<Option<Region1Solution>> {
    let first = &branch[0];
    let last = branch.last().expect("non-empty branch");
    let mu_g = first.params.mu_g;
    if mu > first.mu + 1e-12 || mu < last.mu - 1e-12 {
        return Ok(None);
    }
    if mu >= first.mu {
        return Ok(Some(first.clone()));
    }
    if mu <= last.mu {
        return Ok(Some(last.clone()));
    }
    let k = branch.windows(2).position(|w| w[0].mu >= mu && mu >= w[1].mu).ok_or_else(|| {
        NgbError::Inconsistency(format!("purity {mu} not bracketed on the falling sheet at mu_g={mu_g}"))
    })?;
    let hint = branch[k].params.n_min;
    let x = bisect(
        |x| sheet_at(mu_g, x, hint).map(|s| s.mu - mu).unwrap_or(f64::NAN),
        branch[k].params.x2,
        branch[k + 1].params.x2,
        1e-13,
    )
    .ok_or_else(|| NgbError::Inconsistency("purity bisection failed".into()))?;
    Ok(Some(sheet_at(mu_g, x, hint)?))
}

/// Sheet point with overlap `t`; `t` must lie in `[T_rank2, μ_G)`.
pub fn sheet_at_overlap(mu_g: f64, t: f64) -> Result<Region1Solution> {
    check_mu_g_open(mu_g)?;
    let edge = rank2_point(mu_g)?;
    if t < edge.overlap - 1e-12 || t >= mu_g {
        return Err(NgbError::Infeasible(format!(
            "overlap {t} outside the sheet range [{}, {mu_g}) at mu_g={mu_g}",
            edge.overlap
        )));
    }
    let pts = trace(mu_g, true, |s| s.overlap >= t)?;
    let last = pts.len() - 1;
    if last == 0 {
        return Ok(pts[0].clone());
    }
    let hint = pts[last - 1].params.n_min;
    let x = bisect(
        |x| sheet_at(mu_g, x, hint).map(|s| s.overlap - t).unwrap_or(f64::NAN),
        pts[last - 1].params.x2,
        pts[last].params.x2,
        1e-13,
    )
    .ok_or_else(|| NgbError::Inconsistency("overlap bisection failed".into()))?;
    sheet_at(mu_g, x, hint)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub mu_g: Linspace,
    pub x2: Linspace,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedCell {
    pub mu_g: f64,
    pub x2: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepOutput {
    pub points: Vec<BoundPoint>,
    pub skipped: Vec<SkippedCell>,
}

/// Dense sheet sampling with automatic `n_min`; infeasible cells are skipped
/// and recorded. Rows (one per `μ_G`) run in parallel; output is row-major.
pub fn region1_sweep(spec: &SweepSpec) -> SweepOutput {
    let xs = spec.x2.values();
    let rows: Vec<SweepOutput> = spec
        .mu_g
        .values()
        .into_par_iter()
        .map(|mu_g| {
            let mut row = SweepOutput::default();
            let mut hint = 0;
            for &x2 in &xs {
                match auto_from(mu_g, x2, hint) {
                    Ok(s) => {
                        hint = s.params.n_min;
                        row.points.push(s.point());
                    }
                    Err(e) => row.skipped.push(SkippedCell { mu_g, x2, reason: e.to_string() }),
                }
            }
            row
        })
        .collect();
    let mut out = SweepOutput::default();
    for r in rows {
        out.points.extend(r.points);
        out.skipped.extend(r.skipped);
    }
    out
}
