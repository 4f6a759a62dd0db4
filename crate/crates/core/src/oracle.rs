//! Brute-force checks of the bound, independent of the closed forms.
//!
//! * [`min_purity_qp`] minimises `Σ p_n²` over Fock weights under the three
//!   linear constraints by enumerating active supports.
//! * [`sample_and_check`], [`rank3_spot_check`] and [`lemma_suite`] draw
//!   seeded random states and measure their signed distance to the surface.
//! * [`pure_min_overlap_search`] searches two- and three-term superpositions.
//! * [`positivity_scan`] classifies the states realising the surface by the
//!   sign of their Wigner function.
//!
//! Every random draw comes from ChaCha8 seeded with the caller's seed, with
//! the trial index as the stream number, so reports do not depend on thread
//! count or scheduling.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{BoundPoint, Family};
use crate::error::{NgbError, Result};
use crate::fock::{FockDensityMatrix, StateJson};
use crate::metrics::{summarize, thermal_weight, StateSummary};
use crate::region1::{min_purity_point, rank2_point, sheet_at_overlap, sheet_at_purity};
use crate::region2::{mixed_family_i, total_bound_at, total_bound_with_state, SurfaceSpec};
use crate::wigner::{min_wigner, GridSpec, WignerMin};

/// Signed margin below which a sampled state counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-6;
/// Largest Fock level the purity QP accepts.
pub const QP_MAX_LEVEL: usize = 40;
const WEIGHT_TOL: f64 = 1e-12;
/// Minimum distance from zero for a Wigner sign to count under refinement.
const SIGN_MARGIN: f64 = 1e-7;

// ---------------------------------------------------------------------------
// purity QP

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QpOptions {
    pub max_level: usize,
    /// Non-contiguous supports up to this size are enumerated besides windows.
    pub subset_limit: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self { max_level: QP_MAX_LEVEL, subset_limit: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QpResult {
    pub mu: f64,
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
    pub supports_checked: usize,
}

struct QpRows {
    one: Vec<f64>,
    mean: Vec<f64>,
    ovl: Vec<f64>,
    b: Vector3<f64>,
}

impl QpRows {
    fn new(mu_g: f64, t: f64, max_level: usize) -> Self {
        // rows scaled to O(1): 1, (2n+1)/(2L+1), t_n/t_0
        let scale = 2.0 * max_level as f64 + 1.0;
        let t0 = thermal_weight(mu_g, 0.0);
        let levels = 0..=max_level;
        Self {
            one: levels.clone().map(|_| 1.0).collect(),
            mean: levels.clone().map(|n| (2.0 * n as f64 + 1.0) / scale).collect(),
            ovl: levels.map(|n| thermal_weight(mu_g, n as f64) / t0).collect(),
            b: Vector3::new(1.0, 1.0 / mu_g / scale, t / t0),
        }
    }

    fn col(&self, n: usize) -> Vector3<f64> {
        Vector3::new(self.one[n], self.mean[n], self.ovl[n])
    }

    /// Least-norm solution of the constraints restricted to `support`, if it
    /// exists and is nonnegative.
    fn solve(&self, support: &[usize]) -> Option<Vec<f64>> {
        let cols: Vec<Vector3<f64>> = support.iter().map(|&n| self.col(n)).collect();
        let p = match cols.len() {
            0 => return None,
            1 => {
                let r = cols[0] - self.b;
                if r.amax() > WEIGHT_TOL {
                    return None;
                }
                vec![1.0]
            }
            2 => {
                // the first two constraints fix the weights; the third must hold
                let (c0, c1) = (cols[0], cols[1]);
                let det = c0[1] - c1[1];
                if det.abs() < 1e-15 {
                    return None;
                }
                let w0 = (self.b[1] - c1[1]) / det;
                let p = vec![w0, 1.0 - w0];
                if (w0 * c0[2] + (1.0 - w0) * c1[2] - self.b[2]).abs() > WEIGHT_TOL {
                    return None;
                }
                p
            }
            _ => {
                let mut g = Matrix3::zeros();
                for c in &cols {
                    g += c * c.transpose();
                }
                let lu = g.lu();
                let mut y = lu.solve(&self.b)?;
                let apply = |y: &Vector3<f64>| cols.iter().map(|c| c.dot(y)).collect::<Vec<f64>>();
                let mut p = apply(&y);
                for _ in 0..2 {
                    let mut r = self.b;
                    for (c, w) in cols.iter().zip(&p) {
                        r -= c * *w;
                    }
                    y += lu.solve(&r)?;
                    p = apply(&y);
                }
                let mut r = self.b;
                for (c, w) in cols.iter().zip(&p) {
                    r -= c * *w;
                }
                if r.amax() > 1e-10 {
                    return None;
                }
                p
            }
        };
        if p.iter().all(|w| *w >= -WEIGHT_TOL) {
            Some(p)
        } else {
            None
        }
    }
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

fn is_window(s: &[usize]) -> bool {
    s.windows(2).all(|w| w[1] == w[0] + 1)
}

/// Least purity of a Fock-diagonal state with reference purity `mu_g` and
/// overlap `t`, on levels `0..=max_level`.
pub fn min_purity_qp(mu_g: f64, t: f64, max_level: usize) -> Result<QpResult> {
    min_purity_qp_with(mu_g, t, &QpOptions { max_level, ..QpOptions::default() })
}

/// As [`min_purity_qp`] with an explicit support budget. Supports of size ≤ 3
/// are always enumerated, so an empty result is a complete infeasibility
/// certificate: any feasible point has a basic feasible solution on at most
/// three levels.
pub fn min_purity_qp_with(mu_g: f64, t: f64, opts: &QpOptions) -> Result<QpResult> {
    if !(mu_g > 0.0 && mu_g < 1.0) || !(t > 0.0 && t <= 1.0) {
        return Err(NgbError::InvalidInput(format!("(mu_g, T)=({mu_g}, {t}) out of range")));
    }
    if opts.max_level > QP_MAX_LEVEL {
        return Err(NgbError::UnsupportedRange(format!("max_level {} > {QP_MAX_LEVEL}", opts.max_level)));
    }
    let rows = QpRows::new(mu_g, t, opts.max_level);
    let n = opts.max_level + 1;
    let mut supports: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            supports.push((i..=j).collect());
        }
    }
    for k in 1..=opts.subset_limit.max(3) {
        for_each_subset(n, k, &mut |s| {
            if !is_window(s) {
                supports.push(s.to_vec());
            }
        });
    }
    let checked = supports.len();
    let best = supports
        .par_iter()
        .filter_map(|s| rows.solve(s).map(|p| (p.iter().map(|w| w * w).sum::<f64>(), s, p)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    match best {
        Some((mu, s, p)) => {
            let mut weights = vec![0.0; n];
            for (&lvl, w) in s.iter().zip(&p) {
                weights[lvl] = *w;
            }
            Ok(QpResult { mu, weights, support: s.clone(), supports_checked: checked })
        }
        None => {
            // the achievable T at fixed mean lies between the lower hull of the
            // points (2n+1, t_n) (the rank-2 edge) and the chord from 0 to max_level
            let lo = rank2_point(mu_g)?.overlap;
            let top = opts.max_level as f64;
            let w = (2.0 * top + 1.0 - 1.0 / mu_g) / (2.0 * top);
            let hi = w * thermal_weight(mu_g, 0.0) + (1.0 - w) * thermal_weight(mu_g, top);
            let side = if t < lo {
                format!("below the rank-2 edge {lo:.12}")
            } else if t > hi || w < 0.0 {
                format!("above the extreme chord {hi:.12}")
            } else {
                "inside [edge, chord]: numerically degenerate".to_string()
            };
            Err(NgbError::Infeasible(format!(
                "(mu_g, T)=({mu_g}, {t}) has no basic feasible solution among all supports of size ≤ 3 on \
                 levels 0..={}; T is {side}",
                opts.max_level
            )))
        }
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Offender {
    pub state: StateJson,
    pub summary: StateSummary,
    /// Surface overlap at the state's `(μ_G, μ)`, absent if no family reaches it.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub scenario: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest signed distance to the bound; negative means below it.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Worst trial, reported when it is a violation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offender: Option<Offender>,
    pub runtime_secs: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Same report with the timing removed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { runtime_secs: 0.0, ..self.clone() }
    }
}

struct Trial {
    margin: f64,
    violation: bool,
    state: FockDensityMatrix,
    summary: StateSummary,
    bound: Option<f64>,
}

fn finish(scenario: &str, seed: u64, tolerance: f64, trials: Vec<Trial>, start: Instant) -> OracleReport {
    let violations = trials.iter().filter(|t| t.violation).count();
    let worst = trials.iter().min_by(|a, b| a.margin.total_cmp(&b.margin));
    let offender = worst.filter(|t| t.violation).map(|t| Offender {
        state: StateJson::from_state(&t.state),
        summary: t.summary,
        bound: t.bound,
    });
    OracleReport {
        scenario: scenario.to_string(),
        trials: trials.len(),
        violations,
        worst_margin: worst.map(|t| t.margin).unwrap_or(f64::INFINITY),
        tolerance,
        seed,
        offender,
        runtime_secs: start.elapsed().as_secs_f64(),
    }
}

fn check_against_surface(state: FockDensityMatrix) -> Result<Trial> {
    let summary = summarize(&state)?;
    let mu_g = summary.mu_g.min(1.0);
    let bound = total_bound_at(mu_g, summary.mu.min(1.0))?.map(|p| p.overlap);
    let (margin, violation) = match bound {
        Some(b) => (summary.overlap - b, summary.overlap - b < -VIOLATION_TOL),
        // every physical (μ_G, μ) should be reachable by some family
        None => (f64::NEG_INFINITY, true),
    };
    Ok(Trial { margin, violation, state, summary, bound })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

// ---------------------------------------------------------------------------
// random states

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Fock-diagonal states with Gamma-distributed weights on a random window.
    Diagonal,
    /// Mixtures of up to four random superpositions.
    LowRank,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Diagonal => "diagonal",
            Scenario::LowRank => "rank_le_4",
        }
    }
}

fn gamma_weights<R: Rng>(rng: &mut R, len: usize, shape: f64) -> Vec<f64> {
    let g = Gamma::new(shape, 1.0).expect("positive shape");
    loop {
        let w: Vec<f64> = (0..len).map(|_| g.sample(rng)).collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

fn random_window<R: Rng>(rng: &mut R, top: usize) -> (usize, usize) {
    let a = rng.random_range(0..=top);
    let b = rng.random_range(0..=top);
    (a.min(b), a.max(b))
}

/// Concentration parameter drawn log-uniformly from `[0.05, 5]`.
fn random_shape<R: Rng>(rng: &mut R) -> f64 {
    (rng.random_range(0.05f64.ln()..5f64.ln())).exp()
}

pub fn random_diagonal_state<R: Rng>(rng: &mut R, dim: usize) -> Result<FockDensityMatrix> {
    let (lo, hi) = random_window(rng, dim - 1);
    let shape = random_shape(rng);
    let w = gamma_weights(rng, hi - lo + 1, shape);
    let mut full = vec![0.0; dim];
    full[lo..=hi].copy_from_slice(&w);
    FockDensityMatrix::from_diagonal(&full)
}

fn random_vector<R: Rng>(rng: &mut R, dim: usize, lo: usize, hi: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        for z in v.iter_mut().take(hi + 1).skip(lo) {
            *z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        if v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-12 {
            return v;
        }
    }
}

/// Mixture of `rank ∈ {1..4}` random superpositions. The two highest levels
/// of the basis stay empty so that `a²` moments are exact in the truncation.
pub fn random_low_rank_state<R: Rng>(rng: &mut R, dim: usize) -> Result<FockDensityMatrix> {
    if dim < 3 {
        return Err(NgbError::InvalidInput(format!("dim {dim} too small for low-rank sampling")));
    }
    let rank = rng.random_range(1..=4usize);
    let shape = random_shape(rng);
    let probs = gamma_weights(rng, rank, shape);
    let mut parts = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (lo, hi) = random_window(rng, dim - 3);
        parts.push(FockDensityMatrix::from_pure(&random_vector(rng, dim, lo, hi))?);
    }
    let refs: Vec<(f64, &FockDensityMatrix)> = probs.iter().copied().zip(parts.iter()).collect();
    FockDensityMatrix::mixture(&refs)
}

/// Mixture of up to three superpositions, each supported on a single residue
/// class mod 3, so that `⟨a⟩ = ⟨a²⟩ = 0`.
pub fn random_symmetric_class_state<R: Rng>(rng: &mut R, dim: usize) -> Result<FockDensityMatrix> {
    let rank = rng.random_range(1..=3usize);
    let probs = gamma_weights(rng, rank, 1.0);
    let mut parts = Vec::with_capacity(rank);
    for _ in 0..rank {
        let class = rng.random_range(0..3usize);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        loop {
            for n in (class..dim).step_by(3) {
                v[n] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            if v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-12 {
                break;
            }
        }
        parts.push(FockDensityMatrix::from_pure(&v)?);
    }
    let refs: Vec<(f64, &FockDensityMatrix)> = probs.iter().copied().zip(parts.iter()).collect();
    FockDensityMatrix::mixture(&refs)
}

/// Draws `count` random states and measures `T − bound(μ_G, μ)` for each.
pub fn sample_and_check(scenario: Scenario, count: usize, dim: usize, seed: u64) -> Result<OracleReport> {
    if dim < 3 {
        return Err(NgbError::InvalidInput(format!("dim {dim} too small")));
    }
    let start = Instant::now();
    let trials = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let rho = match scenario {
                Scenario::Diagonal => random_diagonal_state(&mut rng, dim)?,
                Scenario::LowRank => random_low_rank_state(&mut rng, dim)?,
            };
            check_against_surface(rho)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(scenario.label(), seed, VIOLATION_TOL, trials, start))
}

// ---------------------------------------------------------------------------
// rank-3 candidates

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rank3Spec {
    /// Lower level of the ρ_i superposition.
    pub n: usize,
    /// Extra Fock level mixed in.
    pub m: usize,
    pub samples: usize,
    /// Largest weight given to the extra level.
    pub max_extra: f64,
}

/// `(1−ε) ρ_i + ε |m⟩⟨m|` for random `(i, p, amp, ε)`: adding a third level
/// to the rank-2 minimisers must not undercut the surface.
pub fn rank3_spot_check(spec: &Rank3Spec, seed: u64) -> Result<OracleReport> {
    let start = Instant::now();
    let trials = (0..spec.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let i = rng.random_range(1..=2usize);
            let p = rng.random_range(0.5..=1.0);
            let amp = rng.random::<f64>();
            let eps = rng.random_range(0.0..=spec.max_extra);
            let base = mixed_family_i(spec.n, i, p, amp)?.state;
            let dim = base.dim().max(spec.m + 3);
            let base = base.padded(dim);
            let mut w = vec![0.0; dim];
            w[spec.m] = 1.0;
            let extra = FockDensityMatrix::from_diagonal(&w)?;
            check_against_surface(FockDensityMatrix::mixture(&[(1.0 - eps, &base), (eps, &extra)])?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(&format!("rank3_n{}_m{}", spec.n, spec.m), seed, VIOLATION_TOL, trials, start))
}

// ---------------------------------------------------------------------------
// phase averaging

/// Phase averaging keeps `μ_G` and `T` of symmetric-class states and never
/// raises the purity. The margin is `μ(ρ) − μ(ρ̄)`; a trial fails if it is
/// below `−1e−12` or either coordinate moves by more than `1e−9`.
pub fn lemma_suite(count: usize, dim: usize, seed: u64) -> Result<OracleReport> {
    let start = Instant::now();
    let trials = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let rho = random_symmetric_class_state(&mut rng, dim)?;
            let s = summarize(&rho)?;
            let sa = summarize(&rho.phase_average())?;
            let margin = s.mu - sa.mu;
            let drift = (s.mu_g - sa.mu_g).abs().max((s.overlap - sa.overlap).abs());
            Ok(Trial { margin, violation: margin < -1e-12 || drift > 1e-9, state: rho, summary: s, bound: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("lemma", seed, 1e-12, trials, start))
}

// ---------------------------------------------------------------------------
// pure states

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureSearch {
    pub mu_g: f64,
    /// Least overlap over two-term superpositions with gap ≥ 3.
    pub overlap: f64,
    /// Levels of the best pair (equal when a number state is optimal).
    pub levels: (usize, usize),
    /// Least overlap over pairs with gap ≥ 4.
    pub gap4_overlap: f64,
    /// Least overlap over three-term superpositions with pairwise gaps ≥ 3.
    pub three_term_overlap: f64,
}

/// `(w, 1−w)` on levels `(i, j)` with `w(2i+1) + (1−w)(2j+1) = 1/μ_G`.
fn pair_overlap(mu_g: f64, i: usize, j: usize) -> Option<f64> {
    let (a, b) = (2.0 * i as f64 + 1.0, 2.0 * j as f64 + 1.0);
    let w = (b - 1.0 / mu_g) / (b - a);
    (-1e-12..=1.0 + 1e-12).contains(&w).then(|| {
        let w = w.clamp(0.0, 1.0);
        w * thermal_weight(mu_g, i as f64) + (1.0 - w) * thermal_weight(mu_g, j as f64)
    })
}

/// Phase-symmetric pure states (all level gaps ≥ 3 keep `⟨a⟩ = ⟨a²⟩ = 0`)
/// searched exhaustively up to `max_level`.
pub fn pure_min_overlap_search(mu_g: f64, max_level: usize) -> Result<PureSearch> {
    if !(mu_g > 0.0 && mu_g < 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1)")));
    }
    let mut best = (f64::INFINITY, (0, 0));
    let mut gap4 = f64::INFINITY;
    let exact = (1.0 / mu_g - 1.0) / 2.0;
    if (exact - exact.round()).abs() < 1e-12 && exact.round() as usize <= max_level {
        let n = exact.round() as usize;
        best = (thermal_weight(mu_g, n as f64), (n, n));
    }
    for i in 0..=max_level {
        for j in i + 3..=max_level {
            if let Some(t) = pair_overlap(mu_g, i, j) {
                if t < best.0 {
                    best = (t, (i, j));
                }
                if j - i >= 4 {
                    gap4 = gap4.min(t);
                }
            }
        }
    }
    // three levels leave one free weight after the two constraints; scan it
    let inv = 1.0 / mu_g;
    let mut three = f64::INFINITY;
    let steps = 64;
    for i in 0..=max_level {
        for j in i + 3..=max_level {
            for k in j + 3..=max_level {
                let (a, b, c) = (2.0 * i as f64 + 1.0, 2.0 * j as f64 + 1.0, 2.0 * k as f64 + 1.0);
                for s in 0..=steps {
                    let wj = s as f64 / steps as f64;
                    // wi + wk = 1 − wj,  a wi + c wk = inv − b wj
                    let wi = ((1.0 - wj) * c - (inv - b * wj)) / (c - a);
                    let wk = 1.0 - wj - wi;
                    if wi < 0.0 || wk < 0.0 {
                        continue;
                    }
                    let t = wi * thermal_weight(mu_g, i as f64)
                        + wj * thermal_weight(mu_g, j as f64)
                        + wk * thermal_weight(mu_g, k as f64);
                    three = three.min(t);
                }
            }
        }
    }
    Ok(PureSearch { mu_g, overlap: best.0, levels: best.1, gap4_overlap: gap4, three_term_overlap: three })
}

// ---------------------------------------------------------------------------
// Wigner positivity

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityPoint {
    pub point: BoundPoint,
    pub min_wigner: f64,
    pub min_wigner_refined: f64,
    pub location: (f64, f64),
    pub nonnegative: bool,
    /// Classification unchanged under 2× refinement (or both minima within
    /// `1e−7` of zero).
    pub stable: bool,
}

/// Minimum of `W` on the automatic grid and on its 2× refinement.
pub fn classify_state(rho: &FockDensityMatrix) -> Result<(WignerMin, WignerMin)> {
    let grid = GridSpec::auto_for(rho);
    Ok((min_wigner(rho, &grid)?, min_wigner(rho, &grid.refined())?))
}

/// Classify the state realising `point`.
pub fn positivity_point(point: BoundPoint, rho: &FockDensityMatrix) -> Result<PositivityPoint> {
    let (coarse, fine) = classify_state(rho)?;
    let stable = coarse.nonnegative == fine.nonnegative
        || (coarse.value.abs() <= SIGN_MARGIN && fine.value.abs() <= SIGN_MARGIN);
    Ok(PositivityPoint {
        point,
        min_wigner: coarse.value,
        min_wigner_refined: fine.value,
        location: fine.location,
        nonnegative: fine.nonnegative,
        stable,
    })
}

/// Sign classification of the states realising each surface cell.
pub fn positivity_scan(spec: &SurfaceSpec) -> Result<Vec<PositivityPoint>> {
    let gs = spec.mu_g.values();
    let ms = spec.mu.values();
    let cells: Vec<(f64, f64)> = gs.iter().flat_map(|&g| ms.iter().map(move |&m| (g, m))).collect();
    let out = cells
        .par_iter()
        .map(|&(g, m)| match total_bound_with_state(g, m)? {
            Some((p, rho)) => positivity_point(p, &rho).map(Some),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Sign classification of the least-pure state at each `μ_G`.
pub fn region1_minimizer_positivity(mu_g: &[f64]) -> Result<Vec<PositivityPoint>> {
    mu_g.par_iter()
        .map(|&g| {
            let s = min_purity_point(g)?;
            positivity_point(s.point(), &s.state()?)
        })
        .collect()
}

/// Sign classification of number states `|n⟩` on the surface.
pub fn number_state_positivity(levels: &[usize]) -> Result<Vec<PositivityPoint>> {
    levels
        .iter()
        .map(|&n| {
            let mut w = vec![0.0; n + 1];
            w[n] = 1.0;
            let rho = FockDensityMatrix::from_diagonal(&w)?;
            let mu_g = 1.0 / (2.0 * n as f64 + 1.0);
            let mut p = rank2_point(mu_g)?;
            p.family = Family::Rank2;
            positivity_point(p, &rho)
        })
        .collect()
}

/// QP minimum against the sheet on a `steps × steps` grid of `μ_G ∈ [0.2, 0.9]`
/// and overlaps between the rank-2 edge and the Gaussian value. The margin
/// of each cell is `−|μ_QP − μ_sheet|`.
pub fn qp_grid_check(steps: usize) -> Result<OracleReport> {
    let start = Instant::now();
    let cells: Vec<(f64, f64)> = (0..steps)
        .flat_map(|i| (0..steps).map(move |j| (i, j)))
        .map(|(i, j)| {
            let s = steps.saturating_sub(1).max(1) as f64;
            (0.2 + 0.7 * i as f64 / s, 0.02 + 0.93 * j as f64 / s)
        })
        .collect();
    let trials = cells
        .par_iter()
        .map(|&(g, f)| {
            let edge = rank2_point(g)?.overlap;
            let t = edge + f * (g - edge);
            let sheet = sheet_at_overlap(g, t)?;
            let qp = min_purity_qp(g, t, QP_MAX_LEVEL)?;
            let margin = -(qp.mu - sheet.mu).abs();
            let state = sheet.state()?;
            Ok(Trial { margin, violation: margin < -VIOLATION_TOL, summary: summarize(&state)?, state, bound: Some(t) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("qp_grid", 0, VIOLATION_TOL, trials, start))
}

/// Expected Wigner signs: the least-pure sheet states at each `μ_G` (and the
/// sheet points 5% above them in purity) are non-negative, number states
/// `|n⟩`, `n ≥ 1`, are not. The margin is the refined minimum for the former
/// and its negation for the latter, both offset by the classification
/// threshold; unstable classifications count as violations.
pub fn positivity_suite(mu_g: &[f64], levels: &[usize]) -> Result<OracleReport> {
    let start = Instant::now();
    let mut cases: Vec<(FockDensityMatrix, BoundPoint, bool)> = Vec::new();
    for &g in mu_g {
        let s = min_purity_point(g)?;
        cases.push((s.state()?, s.point(), true));
        if let Some(s) = sheet_at_purity(g, 1.05 * s.mu)? {
            cases.push((s.state()?, s.point(), true));
        }
    }
    for &n in levels {
        let mut w = vec![0.0; n + 1];
        w[n] = 1.0;
        let mu_g = 1.0 / (2.0 * n as f64 + 1.0);
        cases.push((FockDensityMatrix::from_diagonal(&w)?, rank2_point(mu_g)?, false));
    }
    let trials = cases
        .into_par_iter()
        .map(|(state, point, positive)| {
            let p = positivity_point(point, &state)?;
            let margin = if positive {
                p.min_wigner_refined + crate::wigner::EPS_W
            } else {
                -p.min_wigner_refined - crate::wigner::EPS_W
            };
            let violation = p.nonnegative != positive || !p.stable;
            Ok(Trial { margin, violation, summary: summarize(&state)?, state, bound: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("positivity", 0, crate::wigner::EPS_W, trials, start))
}
