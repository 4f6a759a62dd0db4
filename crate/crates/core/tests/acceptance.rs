//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Failing criteria are reported,
//! not hidden; pass `-- --strict` to turn any FAIL into a non-zero exit.

use std::f64::consts::PI;
use std::time::Instant;

use ngbound::metrics::{gaussian_overlap_numeric, summarize, thermal_overlap};
use ngbound::oracle::{
    lemma_suite, min_purity_qp, number_state_positivity, positivity_point, pure_min_overlap_search,
    region1_minimizer_positivity, sample_and_check, PositivityPoint, Scenario, QP_MAX_LEVEL,
};
use ngbound::region1::{
    min_purity_point, purity_bound_approx, purity_bound_curve, rank2_location, rank2_point, region1_approx,
    region1_auto, region1_state, sheet_at_overlap, sheet_at_purity, solve_parametric,
};
use ngbound::region2::{
    assy_family, beta_family, mixed_family_i, pure_min_overlap, quartic_root, total_bound_with_state,
};
use ngbound::wigner::{GaussianWigner, PhaseSpaceIntegrator};
use ngbound::{FockDensityMatrix, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn c1() -> Result<Outcome> {
    let (g, m) = purity_bound_curve(1.0)?;
    let end = (g - 1.0).abs().max((m - 1.0).abs());
    let mut worst = f64::NEG_INFINITY;
    let count = 10_000;
    for k in 0..count {
        let y = 1.0 + 999.0 * k as f64 / (count - 1) as f64;
        let (g, m) = purity_bound_curve(y)?;
        // both sides of 1 ≤ 1/μ_G ≤ 1/μ as excess over the allowed slack
        worst = worst.max(1.0 - 1.0 / g).max(1.0 / g - 1.0 / m - 1e-9);
    }
    outcome(
        end < 1e-12 && worst <= 0.0,
        format!("endpoint error {end:.1e}, worst confinement excess {worst:.2e} over {count} points"),
    )
}

fn c2() -> Result<Outcome> {
    let g = 0.6f64;
    let low = 8.0 * g / (9.0 - g * g);
    let high = (1.0 - 4.0 * g + 5.0 * g * g) / (2.0 * g * g);
    let f = purity_bound_approx(g)?;
    let dev = (low - 5.0 / 9.0).abs().max((high - 5.0 / 9.0).abs()).max((f - 5.0 / 9.0).abs());
    outcome(dev < 1e-12, format!("branches at 3/5: {low:.15} / {high:.15}, |Δ| = {dev:.1e}"))
}

fn c3() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for x2 in 2..=10 {
        for k in 1..=9 {
            let g = k as f64 / 10.0;
            let s = solve_parametric(g, x2 as f64, 0)?;
            let (mu, t) = region1_approx(g, x2 as f64)?;
            worst = worst.max((mu - s.mu).abs()).max((t - s.overlap).abs());
        }
    }
    outcome(worst < 1e-9, format!("81 cells, max |Δμ|,|ΔT| = {worst:.2e}"))
}

fn c4() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut n_min_seen = [0usize; 4];
    for _ in 0..200 {
        let g = rng.random_range(0.05..0.95);
        let (n0, _) = rank2_location(g)?;
        let x2 = n0 as f64 + 1.0 + rng.random_range(0.01..12.0);
        let s = region1_auto(g, x2)?;
        n_min_seen[s.params.n_min.min(3)] += 1;
        let rho = region1_state(g, x2, s.params.n_min)?;
        let sum = summarize(&rho)?;
        worst = worst.max((sum.mu - s.mu).abs()).max((sum.overlap - s.overlap).abs()).max((sum.mu_g - g).abs());
    }
    outcome(worst < 1e-8, format!("200 triples (n_min 0/1/2/3+: {n_min_seen:?}), max deviation {worst:.2e}"))
}

fn c5() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for i in 0..20 {
        let g = 0.2 + 0.7 * i as f64 / 19.0;
        let edge = rank2_point(g)?.overlap;
        for j in 0..20 {
            let f = 0.02 + 0.93 * j as f64 / 19.0;
            let t = edge + f * (g - edge);
            let sheet = sheet_at_overlap(g, t)?;
            let qp = min_purity_qp(g, t, QP_MAX_LEVEL)?;
            worst = worst.max((qp.mu - sheet.mu).abs());
            cells += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-6 && secs < 120.0, format!("{cells} cells, max |Δμ| = {worst:.2e}, {secs:.1} s"))
}

fn c6() -> Result<Outcome> {
    let r = lemma_suite(100, 24, 0)?;
    outcome(
        r.passed(),
        format!("{} trials, {} violations, least purity drop {:.3e}", r.trials, r.violations, r.worst_margin),
    )
}

fn c7() -> Result<Outcome> {
    let one = FockDensityMatrix::from_diagonal(&[0.0, 1.0])?;
    let s = summarize(&one)?;
    let (t, _) = pure_min_overlap(1.0 / 3.0)?;
    let number = (s.mu_g - 1.0 / 3.0).abs().max((s.overlap - 0.25).abs()).max((t - 0.25).abs());
    let mut jump: f64 = 0.0;
    for n in 2..=12 {
        let r = quartic_root(n)?;
        let a = pure_min_overlap(r * (1.0 + 1e-12))?.0;
        let b = pure_min_overlap(r * (1.0 - 1e-12))?.0;
        jump = jump.max((a - b).abs());
    }
    let mut undercut = f64::NEG_INFINITY;
    for k in 0..50 {
        let g = 0.02 + 0.96 * k as f64 / 49.0;
        let search = pure_min_overlap_search(g, 40)?;
        let (t, _) = pure_min_overlap(g)?;
        undercut = undercut.max(t - search.overlap).max(t - search.gap4_overlap).max(t - search.three_term_overlap);
    }
    outcome(
        number < 1e-10 && jump < 1e-8 && undercut <= 1e-7,
        format!("|1⟩ deviation {number:.1e}, max switch jump {jump:.1e}, max undercut {undercut:.2e} at 50 μ_G"),
    )
}

fn c8() -> Result<Outcome> {
    let mut flat: f64 = 0.0;
    let mut top: f64 = 0.0;
    let mut quad: f64 = 0.0;
    for n in [0usize, 1] {
        for k in 1..10 {
            let a = k as f64 / 10.0;
            let p = assy_family(n, a, Complex64::new(0.0, 0.0))?;
            let mut w = vec![0.0; n + 2];
            w[n] = a;
            w[n + 1] = 1.0 - a;
            let th = thermal_overlap(&w, p.mu_g)?;
            flat = flat.max((p.overlap - th).abs());
            if n == 0 {
                flat = flat.max((p.overlap - 1.0 / (2.0 - a).powi(2)).abs());
            }
            let p = assy_family(n, a, Complex64::from_polar((a * (1.0 - a)).sqrt(), 0.7))?;
            let (g, t, rho) = beta_family(n, a)?;
            top = top.max((p.mu_g - g).abs()).max((p.overlap - t).abs());
            let gw = GaussianWigner::new(rho.moments().d, &rho.covariance())?;
            let grid = PhaseSpaceIntegrator::new(&rho)?.overlap_with(&gw)?.value;
            quad = quad.max(((grid - t) / t).abs());
        }
    }
    outcome(
        flat < 1e-10 && top < 1e-8 && quad < 1e-5,
        format!("b=0 vs thermal {flat:.1e}, |b| max vs β {top:.1e}, β vs quadrature (rel) {quad:.1e}"),
    )
}

fn c9() -> Result<Outcome> {
    let d = sample_and_check(Scenario::Diagonal, 10_000, 24, 0)?;
    let l = sample_and_check(Scenario::LowRank, 1_000, 24, 0)?;
    let detail = format!(
        "diagonal: {} / {} violations (worst margin {:.3e}, {:.0} s); rank ≤ 4: {} / {} (worst {:.3e}, {:.0} s)",
        d.violations, d.trials, d.worst_margin, d.runtime_secs, l.violations, l.trials, l.worst_margin, l.runtime_secs
    );
    outcome(d.passed() && l.passed(), detail)
}

fn c10() -> Result<Outcome> {
    let gs: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).collect();
    let mut low: Vec<PositivityPoint> = region1_minimizer_positivity(&gs)?;
    // the neighbourhood of each minimum on its sheet
    for &g in &gs {
        let m = min_purity_point(g)?.mu;
        if let Some(s) = sheet_at_purity(g, 1.05 * m)? {
            low.push(positivity_point(s.point(), &s.state()?)?);
        }
    }
    let numbers = number_state_positivity(&(1..=10).collect::<Vec<_>>())?;
    let low_ok = low.iter().all(|p| p.nonnegative);
    let num_ok = numbers.iter().all(|p| !p.nonnegative);
    let one = (numbers[0].min_wigner_refined + 1.0 / PI).abs();
    let stable = low.iter().chain(&numbers).all(|p| p.stable);
    let least = low.iter().map(|p| p.min_wigner_refined).fold(f64::INFINITY, f64::min);
    outcome(
        low_ok && num_ok && one < 1e-9 && stable,
        format!(
            "{} low-purity points, least W {least:.2e}; {} number states negative, |1⟩ off −1/π by {one:.1e}; stable: {stable}",
            low.len(),
            numbers.iter().filter(|p| !p.nonnegative).count()
        ),
    )
}

fn c11() -> Result<Outcome> {
    let mut states: Vec<FockDensityMatrix> = Vec::new();
    for k in 0..6 {
        let g = 0.15 + 0.14 * k as f64;
        for j in 0..5 {
            let mu = 0.3 + 0.175 * j as f64;
            if let Some((_, rho)) = total_bound_with_state(g, mu)? {
                states.push(rho);
            }
        }
        states.push(pure_min_overlap(g)?.1.state);
    }
    states.push(mixed_family_i(3, 2, 0.7, 0.4)?.state);
    states.push(assy_family(1, 0.35, Complex64::from_polar(0.3, 1.1))?.state);
    states.retain(|s| s.top_level() < 32);
    let mut norm: f64 = 0.0;
    let mut purity: f64 = 0.0;
    for rho in &states {
        let q = PhaseSpaceIntegrator::new(rho)?;
        norm = norm.max((q.normalization()?.value - 1.0).abs());
        purity = purity.max((q.purity()?.value - rho.purity()).abs());
    }
    // the fast rule used elsewhere must agree with the grid on the same states
    let mut cross: f64 = 0.0;
    for rho in states.iter().take(6) {
        let g = GaussianWigner::new(rho.moments().d, &rho.covariance())?;
        let grid = PhaseSpaceIntegrator::new(rho)?.overlap_with(&g)?.value;
        cross = cross.max((gaussian_overlap_numeric(rho)? - grid).abs());
    }
    outcome(
        norm < 1e-6 && purity < 1e-6,
        format!(
            "{} states: max |∬W − 1| {norm:.1e}, max |2π∬W² − μ| {purity:.1e} (overlap rules agree to {cross:.1e})",
            states.len()
        ),
    )
}

fn main() {
    let strict = std::env::args().any(|a| a == "--strict");
    let criteria: [Criterion; 11] = [
        ("purity-bound endpoints and confinement", c1),
        ("branch continuity at 3/5", c2),
        ("exact sheet vs closed form at integer x2", c3),
        ("closed form vs matrix arithmetic", c4),
        ("QP oracle extremality", c5),
        ("phase-averaging lemma", c6),
        ("pure-state bound", c7),
        ("family identities", c8),
        ("no-violation sampling", c9),
        ("Wigner positivity program", c10),
        ("Wigner self-consistency", c11),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {detail} [{:.1} s]", k + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
