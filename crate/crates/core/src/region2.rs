//! Maximum-purity sheet of the bound and the stitched surface.
//!
//! Pure states with the least overlap at given `μ_G` are two-term
//! superpositions `ψ_n|n⟩ + ψ_{n+3}|n+3⟩` (the gap of 3 keeps the state
//! phase-symmetric up to second order). Inside the segment
//! `1/(2n+3) ≤ μ_G ≤ 1/(2n+1)` the minimiser switches at the quartic root
//! `r_n` between the pair `(n, n+3)` ("ψ_a") and `(n−2, n+1)` ("ψ_b"). For
//! `n ≤ 1` the displaced superpositions `√α|n⟩ + √(1−α)|n+1⟩` ("β") take over.
//!
//! Below `μ = 1` the minimisers are rank-2 mixtures: `ρ_i` (a ψ_a-type pure
//! state plus one Fock level `n+i`) and `ρ_3` (a 2×2 block on `{n, n+1}`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{BoundPoint, Family, Linspace, Region};
use crate::error::{NgbError, Result};
use crate::fock::{FockDensityMatrix, StateJson};
use crate::metrics::thermal_weight;
use crate::region1::{decreasing_branch, rank2_location, rank2_point, sheet_at_purity_on, Region1Solution};
use crate::roots::{bisect, scan_roots};

/// Cells used to locate roots of `μ_G(a)` in the `ρ_3` and β families.
const FAMILY_SCAN: usize = 2000;
/// Slack on the positivity constraint `|b|² ≤ a(1−a)`.
const PSD_TOL: f64 = 1e-12;

/// A realised member of one of the extremal families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalStateDescriptor {
    pub family: Family,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    pub params: Vec<(String, f64)>,
    /// False for the displaced families (β, ρ_3).
    pub symmetric: bool,
    #[serde(serialize_with = "as_state_json")]
    pub state: FockDensityMatrix,
}

fn as_state_json<S: serde::Serializer>(rho: &FockDensityMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    StateJson::from_state(rho).serialize(s)
}

/// Closed-form coordinates of a family member and its realised state.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPoint {
    pub mu: f64,
    pub mu_g: f64,
    pub overlap: f64,
    pub state: FockDensityMatrix,
}

fn quartic(n: usize, x: f64) -> f64 {
    let c = 1.0 + n as f64;
    x.powi(4) - 2.0 * c * x.powi(3) - 4.0 * x * x - 6.0 * c * x + 3.0
}

/// Switching point `r_n` between ψ_b (below) and ψ_a (above) inside segment `n`.
pub fn quartic_root(n: usize) -> Result<f64> {
    let (lo, hi) = (1.0 / (2.0 * n as f64 + 3.0), 1.0 / (2.0 * n as f64 + 1.0));
    let (flo, fhi) = (quartic(n, lo), quartic(n, hi));
    if flo.signum() == fhi.signum() {
        return Err(NgbError::Inconsistency(format!(
            "quartic for n={n} has no sign change on [{lo}, {hi}] ({flo:e}, {fhi:e})"
        )));
    }
    bisect(|x| quartic(n, x), lo, hi, 1e-16)
        .ok_or_else(|| NgbError::Inconsistency(format!("quartic bisection failed for n={n}")))
}

/// Segment index with `1/(2n+3) < μ_G ≤ 1/(2n+1)`.
pub fn segment(mu_g: f64) -> Result<usize> {
    Ok(rank2_location(mu_g)?.0)
}

fn ratio(m: f64) -> f64 {
    (1.0 - m) / (1.0 + m)
}

/// Overlap of the `(n, n+3)` superposition with reference purity `m`.
pub fn psi_a_overlap(m: f64, n: usize) -> f64 {
    let q = ratio(m);
    let nf = n as f64;
    ((7.0 * m + 2.0 * nf * m - 1.0) * q.powf(nf) + (1.0 - m - 2.0 * nf * m) * q.powf(nf + 3.0)) / (3.0 * (1.0 + m))
}

/// Overlap of the `(n−2, n+1)` superposition; requires `n ≥ 2`.
pub fn psi_b_overlap(m: f64, n: usize) -> f64 {
    let q = ratio(m);
    let nf = n as f64;
    ((1.0 + 3.0 * m - 2.0 * nf * m) * q.powf(nf + 1.0) + (-1.0 + 3.0 * m + 2.0 * nf * m) * q.powf(nf - 2.0))
        / (3.0 * (1.0 + m))
}

/// Weight on the lower level of a gap-3 pair `(lo, lo+3)` with `2⟨n⟩+1 = 1/μ_G`.
fn gap3_weight(mu_g: f64, lo: usize) -> f64 {
    (2.0 * lo as f64 + 7.0 - 1.0 / mu_g) / 6.0
}

fn real_superposition(levels: &[(usize, f64)], pad: usize) -> Result<FockDensityMatrix> {
    let top = levels.iter().map(|(n, _)| *n).max().unwrap_or(0);
    let mut v = vec![Complex64::new(0.0, 0.0); top + 1 + pad];
    for (n, w) in levels {
        v[*n] = Complex64::new(w.max(0.0).sqrt(), 0.0);
    }
    FockDensityMatrix::from_pure(&v)
}

/// `μ_G` of the β state `√α|n⟩ + √(1−α)|n+1⟩`, `n ∈ {0, 1}`.
pub fn beta_mu_g(n: usize, a: f64) -> f64 {
    match n {
        0 => 1.0 / ((3.0 - 2.0 * a) * (3.0 - 2.0 * a - 4.0 * (1.0 - a) * a)).sqrt(),
        _ => 1.0 / ((5.0 - 2.0 * a) * (5.0 - 2.0 * a - 8.0 * (1.0 - a) * a)).sqrt(),
    }
}

/// Overlap of the β state with its (displaced) reference Gaussian.
pub fn beta_overlap(n: usize, a: f64) -> f64 {
    match n {
        0 => {
            let d = 2.0 * a * a - 3.0 * a + 2.0;
            -((a - 1.0) * a / d).exp()
                * (-2.0 * a.powi(5) + 8.0 * a.powi(4) - 12.0 * a.powi(3) + 5.0 * a * a + 4.0 * a - 4.0)
                / ((2.0 - a).powf(1.5) * d.powf(2.5))
        }
        _ => {
            let d = 4.0 * a * a - 5.0 * a + 3.0;
            let poly = 64.0 * a.powi(10) - 560.0 * a.powi(9) + 2156.0 * a.powi(8) - 4668.0 * a.powi(7)
                + 6004.0 * a.powi(6)
                - 4211.0 * a.powi(5)
                + 494.0 * a.powi(4)
                + 1938.0 * a.powi(3)
                - 1908.0 * a * a
                + 837.0 * a
                - 162.0;
            -2.0 * (2.0 * (a - 1.0) * a / d).exp() / ((3.0 - a).powf(2.5) * d.powf(4.5)) * poly
        }
    }
}

fn check_low_n(n: usize) -> Result<()> {
    if n > 1 {
        return Err(NgbError::InvalidInput(format!("family defined for n in {{0,1}}, got {n}")));
    }
    Ok(())
}

/// β family member with `α = |ψ_n|²`. Returns `(μ_G, T, state)`.
pub fn beta_family(n: usize, alpha: f64) -> Result<(f64, f64, FockDensityMatrix)> {
    check_low_n(n)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(NgbError::InvalidInput(format!("alpha={alpha} outside [0,1]")));
    }
    let state = real_superposition(&[(n, alpha), (n + 1, 1.0 - alpha)], 2)?;
    Ok((beta_mu_g(n, alpha), beta_overlap(n, alpha), state))
}

/// `ρ_i = p|ψ⟩⟨ψ| + (1−p)|n+i⟩⟨n+i|` with `ψ = √amp|n⟩ + √(1−amp)|n+3⟩`.
pub fn mixed_family_i(n: usize, i: usize, p: f64, amp: f64) -> Result<FamilyPoint> {
    if !(i == 1 || i == 2) {
        return Err(NgbError::InvalidInput(format!("i must be 1 or 2, got {i}")));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&amp) {
        return Err(NgbError::InvalidInput(format!("p={p}, amp={amp} must lie in [0,1]")));
    }
    let nf = n as f64;
    let inv = p * (amp * (2.0 * nf + 1.0) + (1.0 - amp) * (2.0 * nf + 7.0)) + (1.0 - p) * (2.0 * (nf + i as f64) + 1.0);
    let mu_g = 1.0 / inv;
    let overlap = p * (amp * thermal_weight(mu_g, nf) + (1.0 - amp) * thermal_weight(mu_g, nf + 3.0))
        + (1.0 - p) * thermal_weight(mu_g, nf + i as f64);
    let mu = p * p + (1.0 - p) * (1.0 - p);
    let psi = real_superposition(&[(n, amp), (n + 3, 1.0 - amp)], 2)?;
    let mut w = vec![0.0; psi.dim()];
    w[n + i] = 1.0;
    let fock = FockDensityMatrix::from_diagonal(&w)?;
    let state = if p == 1.0 {
        psi
    } else if p == 0.0 {
        fock
    } else {
        FockDensityMatrix::mixture(&[(p, &psi), (1.0 - p, &fock)])?
    };
    Ok(FamilyPoint { mu, mu_g, overlap, state })
}

/// `μ_G` of the `ρ_3` block with `|b|² = b2`.
pub fn assy_mu_g(n: usize, a: f64, b2: f64) -> f64 {
    let nf = n as f64;
    1.0 / ((2.0 * a - 2.0 * nf - 3.0) * (2.0 * a + 4.0 * b2 * (nf + 1.0) - 2.0 * nf - 3.0)).sqrt()
}

/// Overlap of the `ρ_3` block with its reference Gaussian.
pub fn assy_overlap(n: usize, a: f64, b2: f64) -> f64 {
    match n {
        0 => {
            (b2 / (a + 2.0 * b2 - 2.0)).exp()
                * (2.0 * (a - 1.0) * b2 * b2 + 2.0 * (a - 2.0) * a * b2 + (a - 2.0).powi(2))
                / ((2.0 - a).powf(1.5) * (-a - 2.0 * b2 + 2.0).powf(2.5))
        }
        _ => {
            let poly = 16.0 * (4.0 * a * a - 15.0 * a + 15.0) * b2.powi(4)
                + 2.0 * (a - 3.0).powi(2) * (10.0 * a * a - 9.0 * a - 25.0) * b2 * b2
                + 2.0 * (a - 3.0).powi(3) * (a * a + 3.0 * a - 10.0) * b2
                + (a - 3.0).powi(4) * (a - 2.0)
                + 8.0 * (8.0 * a.powi(3) - 45.0 * a * a + 70.0 * a - 21.0) * b2.powi(3);
            -(2.0 * b2 / (a + 4.0 * b2 - 3.0)).exp() / ((3.0 - a).powf(2.5) * (-a - 4.0 * b2 + 3.0).powf(4.5))
                * 2.0
                * poly
        }
    }
}

/// `ρ_3 = a|n⟩⟨n| + (1−a)|n+1⟩⟨n+1| + b|n⟩⟨n+1| + b*|n+1⟩⟨n|`.
pub fn assy_family(n: usize, a: f64, b: Complex64) -> Result<FamilyPoint> {
    check_low_n(n)?;
    if !(0.0..=1.0).contains(&a) {
        return Err(NgbError::InvalidInput(format!("a={a} outside [0,1]")));
    }
    let b2 = b.norm_sqr();
    if b2 > a * (1.0 - a) + PSD_TOL {
        return Err(NgbError::InvalidInput(format!("|b|²={b2} exceeds a(1−a)={}", a * (1.0 - a))));
    }
    let dim = n + 4;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    data[n * dim + n] = Complex64::new(a, 0.0);
    data[(n + 1) * dim + n + 1] = Complex64::new(1.0 - a, 0.0);
    data[n * dim + n + 1] = b;
    data[(n + 1) * dim + n] = b.conj();
    let state = FockDensityMatrix::from_raw(dim, data)?;
    Ok(FamilyPoint {
        mu: a * a + (1.0 - a) * (1.0 - a) + 2.0 * b2,
        mu_g: assy_mu_g(n, a, b2),
        overlap: assy_overlap(n, a, b2),
        state,
    })
}

/// Least overlap of a pure state with reference purity `μ_G`, with the
/// realising state.
pub fn pure_min_overlap(mu_g: f64) -> Result<(f64, ExtremalStateDescriptor)> {
    if !(mu_g > 0.0 && mu_g <= 1.0) {
        return Err(NgbError::InvalidInput(format!("mu_g={mu_g} outside (0,1]")));
    }
    let n = segment(mu_g)?;
    let mut best: Option<(f64, ExtremalStateDescriptor)> = None;
    let mut offer = |t: f64, d: ExtremalStateDescriptor| {
        if best.as_ref().is_none_or(|(bt, _)| t < *bt) {
            best = Some((t, d));
        }
    };
    let use_a = n <= 1 || mu_g >= quartic_root(n)?;
    if use_a {
        let amp = gap3_weight(mu_g, n).clamp(0.0, 1.0);
        offer(
            psi_a_overlap(mu_g, n),
            ExtremalStateDescriptor {
                family: Family::PsiA,
                n,
                i: None,
                params: vec![("amp".into(), amp)],
                symmetric: true,
                state: real_superposition(&[(n, amp), (n + 3, 1.0 - amp)], 2)?,
            },
        );
    } else {
        let amp = gap3_weight(mu_g, n - 2).clamp(0.0, 1.0);
        offer(
            psi_b_overlap(mu_g, n),
            ExtremalStateDescriptor {
                family: Family::PsiB,
                n,
                i: None,
                params: vec![("amp".into(), amp)],
                symmetric: true,
                state: real_superposition(&[(n - 2, amp), (n + 1, 1.0 - amp)], 2)?,
            },
        );
    }
    if n <= 1 {
        for alpha in scan_roots(|a| beta_mu_g(n, a) - mu_g, 0.0, 1.0, FAMILY_SCAN, 1e-15) {
            let (_, t, state) = beta_family(n, alpha)?;
            offer(
                t,
                ExtremalStateDescriptor {
                    family: Family::Beta,
                    n,
                    i: None,
                    params: vec![("alpha".into(), alpha)],
                    symmetric: false,
                    state,
                },
            );
        }
    }
    best.ok_or_else(|| NgbError::Inconsistency(format!("no pure family covers mu_g={mu_g}")))
}

/// Least overlap over the mixed families `ρ_1, ρ_2, ρ_3` (and the pure
/// families at `μ = 1`) at fixed `(μ_G, μ)`.
pub fn region2_min(mu_g: f64, mu: f64) -> Result<Option<(BoundPoint, ExtremalStateDescriptor)>> {
    if !(mu_g > 0.0 && mu_g <= 1.0) || !(mu > 0.0 && mu <= 1.0 + 1e-12) {
        return Err(NgbError::InvalidInput(format!("(mu_g, mu)=({mu_g}, {mu}) out of range")));
    }
    let mut best: Option<(BoundPoint, ExtremalStateDescriptor)> = None;
    let mut offer = |p: BoundPoint, d: ExtremalStateDescriptor| {
        if best.as_ref().is_none_or(|(b, _)| p.overlap < b.overlap) {
            best = Some((p, d));
        }
    };

    if mu >= 1.0 - 1e-12 {
        let (t, d) = pure_min_overlap(mu_g)?;
        let mut p = BoundPoint::new(mu_g, 1.0, t, Region::II, d.family, 1);
        p.params = d.params.clone();
        p = p.with_param("n", d.n as f64);
        offer(p, d);
    }

    if mu >= 0.5 {
        let s = (2.0 * mu - 1.0).max(0.0).sqrt();
        let inv = 1.0 / mu_g;
        let n_top = inv.ceil() as usize + 1;
        for p in [0.5 * (1.0 + s), 0.5 * (1.0 - s)] {
            if p <= 0.0 {
                continue;
            }
            for n in 0..=n_top {
                for i in [1usize, 2] {
                    let nf = n as f64;
                    let amp = (p * (2.0 * nf + 7.0) + (1.0 - p) * (2.0 * (nf + i as f64) + 1.0) - inv) / (6.0 * p);
                    if !(-1e-12..=1.0 + 1e-12).contains(&amp) {
                        continue;
                    }
                    let amp = amp.clamp(0.0, 1.0);
                    let fp = mixed_family_i(n, i, p, amp)?;
                    let family = if i == 1 { Family::Rho1 } else { Family::Rho2 };
                    let rank = if p >= 1.0 { 1 } else { 2 };
                    let point = BoundPoint::new(mu_g, mu, fp.overlap, Region::II, family, rank)
                        .with_param("n", nf)
                        .with_param("p", p)
                        .with_param("amp", amp);
                    let d = ExtremalStateDescriptor {
                        family,
                        n,
                        i: Some(i),
                        params: vec![("p".into(), p), ("amp".into(), amp)],
                        symmetric: true,
                        state: fp.state,
                    };
                    offer(point, d);
                }
            }
        }
    }

    for n in [0usize, 1] {
        for (a, b2) in assy_solutions(n, mu_g, mu) {
            let fp = assy_family(n, a, Complex64::new(b2.sqrt(), 0.0))?;
            let rank = if (b2 - a * (1.0 - a)).abs() < 1e-12 { 1 } else { 2 };
            let point = BoundPoint::new(mu_g, mu, fp.overlap, Region::II, Family::Rho3, rank)
                .with_param("n", n as f64)
                .with_param("a", a)
                .with_param("b2", b2);
            let d = ExtremalStateDescriptor {
                family: Family::Rho3,
                n,
                i: None,
                params: vec![("a".into(), a), ("b2".into(), b2)],
                symmetric: false,
                state: fp.state,
            };
            offer(point, d);
        }
    }
    Ok(best)
}

/// All `(a, |b|²)` with `μ(a, b) = mu` and `μ_G3(a, b) = mu_g` inside the PSD range.
fn assy_solutions(n: usize, mu_g: f64, mu: f64) -> Vec<(f64, f64)> {
    // |b|² ≥ 0 exactly on [(1−s)/2, (1+s)/2]; |b|² ≤ a(1−a) holds for μ ≤ 1.
    // Scanning that interval keeps roots at its ends (b → 0, the rank-2 edge).
    if mu < 0.5 {
        return Vec::new();
    }
    let s = (2.0 * mu - 1.0).max(0.0).sqrt().min(1.0);
    let (lo, hi) = (0.5 * (1.0 - s), 0.5 * (1.0 + s));
    let b2_of = |a: f64| (0.5 * (mu - a * a - (1.0 - a) * (1.0 - a))).clamp(0.0, a * (1.0 - a));
    let g = |a: f64| assy_mu_g(n, a, b2_of(a)) - mu_g;
    if hi <= lo {
        return if g(lo).abs() < 1e-12 { vec![(lo, b2_of(lo))] } else { Vec::new() };
    }
    scan_roots(g, lo, hi, FAMILY_SCAN, 1e-16).into_iter().map(|a| (a, b2_of(a))).collect()
}

/// Surface value at `(μ_G, μ)`: the least overlap over the minimum-purity sheet
/// and every maximum-purity family. `None` if no family reaches the cell.
pub fn total_bound_at(mu_g: f64, mu: f64) -> Result<Option<BoundPoint>> {
    let branch = if mu_g < 1.0 { Some(decreasing_branch(mu_g)?) } else { None };
    Ok(least_on(mu_g, mu, branch.as_deref())?.map(|(p, _)| p))
}

/// As [`total_bound_at`], also returning the realising state.
pub fn total_bound_with_state(mu_g: f64, mu: f64) -> Result<Option<(BoundPoint, FockDensityMatrix)>> {
    let branch = if mu_g < 1.0 { Some(decreasing_branch(mu_g)?) } else { None };
    Ok(match least_on(mu_g, mu, branch.as_deref())? {
        Some((p, Candidate::Sheet(s))) => Some((p, s.state()?)),
        Some((p, Candidate::Family(d))) => Some((p, d.state)),
        None => None,
    })
}

enum Candidate {
    Sheet(Region1Solution),
    Family(ExtremalStateDescriptor),
}

/// Least overlap at one cell given the falling branch of its `μ_G` column.
fn least_on(mu_g: f64, mu: f64, branch: Option<&[Region1Solution]>) -> Result<Option<(BoundPoint, Candidate)>> {
    let mut best: Option<(BoundPoint, Candidate)> = None;
    if let Some(branch) = branch {
        if let Some(s) = sheet_at_purity_on(branch, mu)? {
            let mut p = s.point();
            p.mu = mu;
            p.delta = crate::metrics::non_gaussianity(mu, mu_g, p.overlap);
            best = Some((p, Candidate::Sheet(s)));
        }
    }
    if let Some((p, d)) = region2_min(mu_g, mu)? {
        if best.as_ref().is_none_or(|(b, _)| p.overlap < b.overlap) {
            best = Some((p, Candidate::Family(d)));
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceSpec {
    pub mu_g: Linspace,
    pub mu: Linspace,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedSurfaceCell {
    pub mu_g: f64,
    pub mu: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundSurface {
    pub points: Vec<BoundPoint>,
    pub skipped: Vec<SkippedSurfaceCell>,
    /// Rank-2 edge between the two sheets, one point per `μ_G` column.
    pub boundary: Vec<BoundPoint>,
}

/// Surface over a `(μ_G, μ)` grid. Cells are evaluated in parallel and
/// emitted in grid order (μ_G outer).
pub fn total_bound(spec: &SurfaceSpec) -> BoundSurface {
    let gs = spec.mu_g.values();
    let ms = spec.mu.values();
    // the falling branch depends only on μ_G, so trace it once per column
    let branches: Vec<Result<Option<Vec<Region1Solution>>>> =
        gs.par_iter().map(|&g| if g < 1.0 { decreasing_branch(g).map(Some) } else { Ok(None) }).collect();
    let cells: Vec<(usize, f64)> = (0..gs.len()).flat_map(|i| ms.iter().map(move |&m| (i, m))).collect();
    let results: Vec<std::result::Result<BoundPoint, String>> = cells
        .par_iter()
        .map(|&(i, m)| {
            let branch = branches[i].as_ref().map_err(|e| e.to_string())?;
            match least_on(gs[i], m, branch.as_deref()) {
                Ok(Some((p, _))) => Ok(p),
                Ok(None) => Err("unreachable: no family attains this (mu_g, mu)".to_string()),
                Err(e) => Err(e.to_string()),
            }
        })
        .collect();
    let mut out = BoundSurface::default();
    for ((i, m), r) in cells.into_iter().zip(results) {
        match r {
            Ok(p) => out.points.push(p),
            Err(reason) => out.skipped.push(SkippedSurfaceCell { mu_g: gs[i], mu: m, reason }),
        }
    }
    out.boundary = gs.iter().filter_map(|&g| rank2_point(g).ok()).collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{summarize, thermal_overlap};
    use proptest::prelude::*;

    #[test]
    fn quartic_roots() {
        let r0 = quartic_root(0).unwrap();
        assert!((r0 - 0.38550672070794).abs() < 1e-12 && r0 > 1.0 / 3.0);
        let r1 = quartic_root(1).unwrap();
        assert!(r1 > 0.2 && r1 < 1.0 / 3.0 && (r1 - 0.22878837636719).abs() < 1e-12);
        for n in 0..40 {
            let r = quartic_root(n).unwrap();
            assert!(quartic(n, r).abs() < 1e-10);
        }
    }

    #[test]
    fn switch_is_continuous() {
        for n in 2..30 {
            let r = quartic_root(n).unwrap();
            assert!((psi_a_overlap(r, n) - psi_b_overlap(r, n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn closed_forms_match_thermal_sums() {
        for (m, n) in [(0.5, 0usize), (0.25, 1), (0.16, 2), (0.09, 5)] {
            let amp = gap3_weight(m, n);
            let mut w = vec![0.0; n + 4];
            w[n] = amp;
            w[n + 3] = 1.0 - amp;
            assert!((psi_a_overlap(m, n) - thermal_overlap(&w, m).unwrap()).abs() < 1e-14);
        }
        for (m, n) in [(0.16, 2usize), (0.1, 4)] {
            let amp = gap3_weight(m, n - 2);
            let mut w = vec![0.0; n + 2];
            w[n - 2] = amp;
            w[n + 1] = 1.0 - amp;
            assert!((psi_b_overlap(m, n) - thermal_overlap(&w, m).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn number_states_on_pure_bound() {
        assert!((pure_min_overlap(1.0).unwrap().0 - 1.0).abs() < 1e-14);
        let (t, _) = pure_min_overlap(1.0 / 3.0).unwrap();
        assert!((t - 0.25).abs() < 1e-10);
        for n in 2..10 {
            let m = 1.0 / (2.0 * n as f64 + 1.0);
            let (t, _) = pure_min_overlap(m).unwrap();
            assert!((t - thermal_weight(m, n as f64)).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn pure_bound_is_continuous() {
        let mut prev = pure_min_overlap(0.02).unwrap().0;
        let steps = 20000;
        for k in 1..=steps {
            let m = 0.02 + 0.98 * k as f64 / steps as f64;
            let t = pure_min_overlap(m).unwrap().0;
            assert!((t - prev).abs() < 2e-4, "jump at {m}: {prev} -> {t}");
            prev = t;
        }
    }

    #[test]
    fn beta_endpoints() {
        let (g, t, _) = beta_family(0, 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-15 && (t - 1.0).abs() < 1e-14);
        let (g, t, _) = beta_family(0, 0.0).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15 && (t - 0.25).abs() < 1e-14);
        let (g, _, _) = beta_family(1, 1.0).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15);
        assert!(beta_family(2, 0.5).is_err());
    }

    #[test]
    fn beta_mu_g_matches_moments() {
        for n in [0, 1] {
            for a in [0.25, 0.5, 0.75] {
                let (g, _, rho) = beta_family(n, a).unwrap();
                let s = summarize(&rho).unwrap();
                assert!((s.mu_g - g).abs() < 1e-12 && !s.symmetric);
            }
        }
    }

    #[test]
    fn displaced_closed_forms_match_quadrature() {
        for n in [0, 1] {
            for a in [0.25, 0.5, 0.75] {
                let (_, t, rho) = beta_family(n, a).unwrap();
                let num = crate::metrics::gaussian_overlap_numeric(&rho).unwrap();
                assert!((num - t).abs() < 1e-9, "beta n={n} a={a}: {num} vs {t}");
            }
            let fp = assy_family(n, 0.6, Complex64::new(0.3, 0.0)).unwrap();
            let s = summarize(&fp.state).unwrap();
            assert_eq!(s.method, crate::metrics::OverlapMethod::Quadrature);
            assert!(((s.overlap - fp.overlap) / fp.overlap).abs() < 1e-9);
        }
    }

    #[test]
    fn rho_i_limits() {
        let n = 1;
        let m = 0.2;
        let amp = gap3_weight(m, n);
        let fp = mixed_family_i(n, 1, 1.0, amp).unwrap();
        assert!((fp.mu_g - m).abs() < 1e-14 && (fp.overlap - psi_a_overlap(m, n)).abs() < 1e-14);
        // amp = 0, i = 2: mixture of |n+3⟩ and |n+2⟩, a rank-2 edge state
        let fp = mixed_family_i(0, 2, 0.3, 0.0).unwrap();
        let edge = crate::region1::rank2_boundary(2, 0.7).unwrap();
        assert!((fp.mu_g - edge.mu_g).abs() < 1e-14 && (fp.overlap - edge.overlap).abs() < 1e-14);
        let s = summarize(&fp.state).unwrap();
        assert!((s.overlap - fp.overlap).abs() < 1e-12 && (s.mu - fp.mu).abs() < 1e-12);
        assert!(mixed_family_i(0, 3, 0.5, 0.5).is_err());
    }

    #[test]
    fn rho_i_states_are_symmetric() {
        for (n, i, p, amp) in [(0, 1, 0.7, 0.4), (2, 2, 0.55, 0.9), (4, 1, 0.9, 0.1)] {
            let fp = mixed_family_i(n, i, p, amp).unwrap();
            let s = summarize(&fp.state).unwrap();
            assert!(s.symmetric && s.d == [0.0, 0.0]);
            assert!((s.mu_g - fp.mu_g).abs() < 1e-12 && (s.overlap - fp.overlap).abs() < 1e-12);
            assert!((s.mu - fp.mu).abs() < 1e-12);
        }
    }

    #[test]
    fn assy_limits() {
        for a in [0.1, 0.4, 0.8] {
            let fp = assy_family(0, a, Complex64::new(0.0, 0.0)).unwrap();
            assert!((fp.overlap - 1.0 / (2.0 - a).powi(2)).abs() < 1e-10);
            let th = thermal_overlap(&[a, 1.0 - a], fp.mu_g).unwrap();
            assert!((fp.overlap - th).abs() < 1e-10);
            let fp1 = assy_family(1, a, Complex64::new(0.0, 0.0)).unwrap();
            let th1 = thermal_overlap(&[0.0, a, 1.0 - a], fp1.mu_g).unwrap();
            assert!((fp1.overlap - th1).abs() < 1e-10);
        }
        for n in [0, 1] {
            for a in [0.3f64, 0.5, 0.9] {
                let b = Complex64::new((a * (1.0 - a)).sqrt(), 0.0);
                let fp = assy_family(n, a, b).unwrap();
                let (g, t, _) = beta_family(n, a).unwrap();
                assert!((fp.mu_g - g).abs() < 1e-8 && (fp.overlap - t).abs() < 1e-8);
                assert!((fp.mu - 1.0).abs() < 1e-12);
            }
        }
        assert!(assy_family(0, 0.5, Complex64::new(0.6, 0.0)).is_err());
    }

    #[test]
    fn assy_phase_of_b_is_irrelevant() {
        let a = assy_family(1, 0.6, Complex64::new(0.3, 0.0)).unwrap();
        let b = assy_family(1, 0.6, Complex64::new(0.0, 0.3)).unwrap();
        assert_eq!(a.mu_g, b.mu_g);
        let sa = summarize(&a.state).unwrap();
        let sb = summarize(&b.state).unwrap();
        assert!((sa.overlap - sb.overlap).abs() < 1e-9 && (sa.mu_g - sb.mu_g).abs() < 1e-12);
    }

    #[test]
    fn pure_slice_of_surface() {
        for m in [0.12, 0.3, 0.45, 0.8] {
            let p = total_bound_at(m, 1.0).unwrap().unwrap();
            let (t, _) = pure_min_overlap(m).unwrap();
            assert!(p.overlap <= t + 1e-12);
            assert!((p.overlap - t).abs() < 1e-9, "m={m}: {} vs {t}", p.overlap);
        }
    }

    #[test]
    fn gaussian_cells_inside_bound() {
        // thermal states: δ = 0 with T = μ = μ_G
        for m in [0.2, 0.5, 0.8] {
            if let Some(p) = total_bound_at(m, m).unwrap() {
                assert!(p.overlap <= m + 1e-9);
            }
        }
    }

    #[test]
    fn surface_grid_order_and_skips() {
        let spec = SurfaceSpec { mu_g: Linspace::new(0.2, 0.8, 4), mu: Linspace::new(0.05, 1.0, 6) };
        let s = total_bound(&spec);
        assert_eq!(s.points.len() + s.skipped.len(), 24);
        assert!(!s.skipped.is_empty());
        assert_eq!(s.boundary.len(), 4);
        for w in s.points.windows(2) {
            assert!(w[0].mu_g < w[1].mu_g || (w[0].mu_g == w[1].mu_g && w[0].mu < w[1].mu));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rho_3_closed_forms_match_moments(a in 0.05f64..0.95, f in 0.0f64..1.0, n in 0usize..2) {
            let b = (f * a * (1.0 - a)).sqrt();
            let fp = assy_family(n, a, Complex64::new(b, 0.0)).unwrap();
            let s = summarize(&fp.state).unwrap();
            prop_assert!((s.mu_g - fp.mu_g).abs() < 1e-10);
            prop_assert!((s.mu - fp.mu).abs() < 1e-12);
        }
    }
}
