use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ngbound::bound::{write_json, write_surface_csv, Linspace};
use ngbound::fock::{ValidationReport, DEFAULT_DIM, DEFAULT_TAIL_TOL};
use ngbound::oracle::{
    lemma_suite, positivity_suite, qp_grid_check, rank3_spot_check, sample_and_check, Rank3Spec, VIOLATION_TOL,
};
use ngbound::region1::purity_bound_curve;
use ngbound::region2::{pure_min_overlap, quartic_root, total_bound, total_bound_at};
use ngbound::wigner::{min_wigner, GridSpec, WignerGrid};
use ngbound::{BoundPoint, FockDensityMatrix, OracleReport, Region, Scenario, StateJson, StateSummary, WignerMin};
use serde::Serialize;

use crate::output::{write_rows, write_with_manifest, Failure, Format, Manifest};

// ---------------------------------------------------------------------------
// purity-bound

#[derive(Args, Debug, Serialize)]
pub struct PurityBoundArgs {
    /// Number of points on the curve.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Largest curve parameter; points are spaced geometrically in [1, y_max].
    #[arg(long, default_value_t = 1000.0)]
    pub y_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct CurveRow {
    y: f64,
    mu_g: f64,
    mu: f64,
}

pub fn purity_bound(args: &PurityBoundArgs) -> Result<(), Failure> {
    if args.samples < 2 || args.y_max.is_nan() || args.y_max <= 1.0 {
        return Err(Failure::Other("need --samples ≥ 2 and --y-max > 1".into()));
    }
    let rows = (0..args.samples)
        .map(|k| {
            let y = args.y_max.powf(k as f64 / (args.samples - 1) as f64);
            let (mu_g, mu) = purity_bound_curve(y)?;
            Ok(CurveRow { y, mu_g, mu })
        })
        .collect::<ngbound::Result<Vec<_>>>()?;
    write_with_manifest("purity-bound", args, &args.out, |w| write_rows(&rows, args.format, w))?;
    println!("{} points, mu_g from {} to {:.6e}", rows.len(), rows[0].mu_g, rows[rows.len() - 1].mu_g);
    Ok(())
}

// ---------------------------------------------------------------------------
// surface

#[derive(Args, Debug, Serialize)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 201)]
    pub mug_steps: usize,
    #[arg(long, default_value_t = 201)]
    pub mu_steps: usize,
    #[arg(long, default_value_t = 0.01)]
    pub mug_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mug_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

pub fn surface(args: &SurfaceArgs) -> Result<(), Failure> {
    let in_unit = |a: f64, b: f64| a > 0.0 && a <= b && b <= 1.0;
    if !in_unit(args.mug_min, args.mug_max) || !in_unit(args.mu_min, args.mu_max) {
        return Err(Failure::Other("ranges must satisfy 0 < min ≤ max ≤ 1".into()));
    }
    let spec = ngbound::SurfaceSpec {
        mu_g: Linspace::new(args.mug_min, args.mug_max, args.mug_steps),
        mu: Linspace::new(args.mu_min, args.mu_max, args.mu_steps),
    };
    let s = total_bound(&spec);
    write_with_manifest("surface", args, &args.out, |w| match args.format {
        Format::Csv => write_surface_csv(&s.points, w),
        Format::Json => write_json(&s, w),
    })?;
    let region1 = s.points.iter().filter(|p| p.region == Region::I).count();
    println!(
        "cells {}, computed {}, skipped {}, region I {}, region II {}",
        args.mug_steps * args.mu_steps,
        s.points.len(),
        s.skipped.len(),
        region1,
        s.points.len() - region1
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pure

#[derive(Args, Debug, Serialize)]
pub struct PureArgs {
    /// Points `k / samples`, `k = 1..=samples`; number-state and switch points are added.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct PureRow {
    mu_g: f64,
    overlap: f64,
    family: String,
    n: usize,
    /// `number_state`, `switch` or empty.
    marker: &'static str,
}

pub fn pure(args: &PureArgs) -> Result<(), Failure> {
    if args.samples == 0 {
        return Err(Failure::Other("--samples must be positive".into()));
    }
    let lo = 1.0 / args.samples as f64;
    let mut xs: Vec<(f64, &'static str)> = (1..=args.samples).map(|k| (k as f64 / args.samples as f64, "")).collect();
    for n in 0.. {
        let m = 1.0 / (2.0 * n as f64 + 1.0);
        if m < lo {
            break;
        }
        xs.push((m, "number_state"));
        if n >= 2 {
            let r = quartic_root(n)?;
            println!("switch r_{n} = {r:.14}");
            xs.push((r, "switch"));
        }
    }
    xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.len().cmp(&a.1.len())));
    xs.dedup_by(|b, a| (a.0 - b.0).abs() < 1e-15);
    let rows = xs
        .into_iter()
        .map(|(g, marker)| {
            let (t, d) = pure_min_overlap(g)?;
            Ok(PureRow { mu_g: g, overlap: t, family: d.family.to_string(), n: d.n, marker })
        })
        .collect::<ngbound::Result<Vec<_>>>()?;
    write_with_manifest("pure", args, &args.out, |w| write_rows(&rows, args.format, w))?;
    let marked = rows.iter().filter(|r| r.marker == "number_state").count();
    println!("{} points, {marked} number states", rows.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// check / wigner

fn load_state(path: &Path) -> Result<FockDensityMatrix, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::InvalidState(format!("{}: {e}", path.display())))?;
    let rho = StateJson::parse(&text)
        .and_then(|j| j.to_state())
        .map_err(|e| Failure::InvalidState(format!("{}: {e}", path.display())))?;
    rho.require_valid().map_err(|e| Failure::InvalidState(format!("{}: {e}", path.display())))?;
    Ok(rho)
}

/// Truncates to `cutoff` levels; the discarded and top-level mass must stay
/// below `tail_tol`.
fn apply_cutoff(rho: FockDensityMatrix, cutoff: usize, tail_tol: f64) -> Result<FockDensityMatrix, Failure> {
    if rho.dim() <= cutoff {
        return Ok(rho);
    }
    let cut = rho.truncated(cutoff);
    let lost = 1.0 - cut.trace().re;
    if lost > tail_tol {
        return Err(Failure::InvalidState(format!("cutoff {cutoff} discards mass {lost:.3e}")));
    }
    cut.require_converged(tail_tol).map_err(|e| Failure::InvalidState(e.to_string()))?;
    Ok(cut)
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    /// State JSON: `{"dim": D, "diagonal" | "pure" | "matrix": ...}`.
    #[arg(long)]
    pub state: PathBuf,
    /// Basis size; larger states are truncated after a tail-mass check.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub cutoff: usize,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    /// Wigner grid points per axis.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Also write the report (and a manifest) to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct WignerVerdict {
    min: WignerMin,
    refined_min: f64,
    stable: bool,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    manifest: Manifest<'a, CheckArgs>,
    dim: usize,
    validation: ValidationReport,
    summary: StateSummary,
    bound: Option<BoundPoint>,
    /// `T − bound`; negative below the surface.
    margin: Option<f64>,
    verdict: &'static str,
    wigner: WignerVerdict,
}

fn sized_grid(rho: &FockDensityMatrix, steps: usize) -> GridSpec {
    let half = match GridSpec::auto_for(rho) {
        GridSpec::Cartesian { x_max, .. } => x_max,
        GridSpec::Polar { r_max, .. } => r_max,
    };
    GridSpec::square(half, steps)
}

pub fn check(args: &CheckArgs) -> Result<(), Failure> {
    let rho = apply_cutoff(load_state(&args.state)?, args.cutoff, args.tail_tol)?;
    let summary = ngbound::summarize(&rho).map_err(|e| Failure::InvalidState(e.to_string()))?;
    let bound = total_bound_at(summary.mu_g.min(1.0), summary.mu.min(1.0))?;
    let margin = bound.as_ref().map(|b| summary.overlap - b.overlap);
    let verdict = match margin {
        Some(m) if m >= -VIOLATION_TOL => "on_or_above",
        Some(_) => "violation",
        None => "unreachable",
    };
    let grid = sized_grid(&rho, args.grid);
    let coarse = min_wigner(&rho, &grid)?;
    let fine = min_wigner(&rho, &grid.refined())?;
    let outs: Vec<&Path> = args.out.iter().map(|p| p.as_path()).collect();
    let report = CheckReport {
        manifest: Manifest::new("check", args, &outs),
        dim: rho.dim(),
        validation: rho.validate(),
        summary,
        bound,
        margin,
        verdict,
        wigner: WignerVerdict { min: coarse, refined_min: fine.value, stable: coarse.nonnegative == fine.nonnegative },
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Other(e.to_string()))?;
    println!("{text}");
    if let Some(out) = &args.out {
        crate::output::write_file(out, |w| write_json(&report, w))?;
    }
    if verdict != "on_or_above" {
        return Err(Failure::Violation(format!("state lies below the bound: margin {margin:?}")));
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct WignerArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Points per axis (radial intervals with --polar).
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Half-width of the square (or radius); sized from the state if omitted.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Polar grid with this many angles instead of a square grid.
    #[arg(long)]
    pub polar: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub cutoff: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

pub fn wigner(args: &WignerArgs) -> Result<(), Failure> {
    let rho = apply_cutoff(load_state(&args.state)?, args.cutoff, DEFAULT_TAIL_TOL)?;
    let square = sized_grid(&rho, args.grid);
    let half = args.extent.unwrap_or(match square {
        GridSpec::Cartesian { x_max, .. } => x_max,
        GridSpec::Polar { r_max, .. } => r_max,
    });
    let spec = match args.polar {
        Some(phi_steps) => GridSpec::Polar { r_max: half, r_steps: args.grid, phi_steps },
        None => GridSpec::square(half, args.grid),
    };
    let grid = WignerGrid::sample(&rho, spec)?;
    let m = min_wigner(&rho, &spec)?;
    write_with_manifest("wigner", args, &args.out, |w| match args.format {
        Format::Csv => grid.write_csv(w),
        Format::Json => write_json(&grid, w),
    })?;
    println!(
        "{} points, integral {:.9}, min {:.6e} at ({:.4}, {:.4}), {}",
        grid.values.len(),
        grid.normalization(),
        m.value,
        m.location.0,
        m.location.1,
        if m.nonnegative { "nonnegative" } else { "negative" }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Region1,
    Region2,
    Lemma,
    Positivity,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Basis size of sampled states.
    #[arg(long, default_value_t = 24)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000)]
    pub diagonal_trials: usize,
    #[arg(long, default_value_t = 1_000)]
    pub rank_trials: usize,
    #[arg(long, default_value_t = 100)]
    pub lemma_trials: usize,
    /// QP grid is `qp_steps × qp_steps`.
    #[arg(long, default_value_t = 20)]
    pub qp_steps: usize,
    /// Report path; printed to stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    manifest: Manifest<'a, VerifyArgs>,
    passed: bool,
    reports: Vec<OracleReport>,
}

pub fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let wants = |s: Suite| args.suite == Suite::All || args.suite == s;
    let mut reports = Vec::new();
    if wants(Suite::Region1) {
        reports.push(qp_grid_check(args.qp_steps)?);
    }
    if wants(Suite::Region2) {
        reports.push(sample_and_check(Scenario::Diagonal, args.diagonal_trials, args.dim, args.seed)?);
        reports.push(sample_and_check(Scenario::LowRank, args.rank_trials, args.dim, args.seed)?);
        let spec = Rank3Spec { n: 0, m: 5, samples: args.rank_trials, max_extra: 0.1 };
        reports.push(rank3_spot_check(&spec, args.seed)?);
    }
    if wants(Suite::Lemma) {
        reports.push(lemma_suite(args.lemma_trials, args.dim, args.seed)?);
    }
    if wants(Suite::Positivity) {
        let gs: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).collect();
        let levels: Vec<usize> = (1..=10).collect();
        reports.push(positivity_suite(&gs, &levels)?);
    }
    for r in &reports {
        eprintln!(
            "{} {}: {} trials, {} violations, worst margin {:.3e} ({:.1} s)",
            if r.passed() { "ok  " } else { "FAIL" },
            r.scenario,
            r.trials,
            r.violations,
            r.worst_margin,
            r.runtime_secs
        );
    }
    let passed = reports.iter().all(|r| r.passed());
    let outs: Vec<&Path> = args.out.iter().map(|p| p.as_path()).collect();
    let output = VerifyOutput { manifest: Manifest::new("verify", args, &outs), passed, reports };
    match &args.out {
        Some(out) => crate::output::write_file(out, |w| write_json(&output, w))?,
        None => println!("{}", serde_json::to_string_pretty(&output).map_err(|e| Failure::Other(e.to_string()))?),
    }
    if !passed {
        let failed: Vec<&str> = output.reports.iter().filter(|r| !r.passed()).map(|r| r.scenario.as_str()).collect();
        return Err(Failure::Suite(format!("violations in {}", failed.join(", "))));
    }
    Ok(())
}
