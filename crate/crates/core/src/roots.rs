//! Scalar root finding and line minimisation.

/// Bisection on a bracket whose end points have opposite signs (or touch zero).
/// Returns `None` when the bracket has no sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> Option<f64> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// All roots of `f` on `[a, b]` located by a uniform scan with `steps` cells,
/// each refined by bisection.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, steps: usize, xtol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let h = (b - a) / steps as f64;
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=steps {
        let x1 = if i == steps { b } else { a + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() && f1 != 0.0 {
            if let Some(r) = bisect(&f, x0, x1, xtol) {
                out.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        out.push(b);
    }
    out
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let mut best = (x, fx);
    for (xi, fi) in [(c, fc), (d, fd)] {
        if fi < best.1 {
            best = (xi, fi);
        }
    }
    best
}
