//! One-dimensional maximizers used by the per-SU solvers.

/// Result of a bounded 1-D maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub theta: f64,
    /// False when the maximum sits on one of the (guarded) end points.
    pub interior: bool,
    pub iterations: usize,
}

/// Maximizes a concave function on `[lo, hi]` given its first and second
/// derivative, `slope(x) = (f'(x), f''(x))`.
///
/// Safeguarded Newton on `f' = 0`: a bracket `[a, b]` with `f'(a) > 0 > f'(b)`
/// is kept and any Newton step that leaves it (or fails to halve it fast
/// enough) is replaced by bisection.
pub fn maximize_concave_1d<F>(lo: f64, hi: f64, init: Option<f64>, slope: F) -> Maximum
where
    F: Fn(f64) -> (f64, f64),
{
    let (d_lo, _) = slope(lo);
    if d_lo <= 0.0 {
        return Maximum {
            theta: lo,
            interior: false,
            iterations: 1,
        };
    }
    let (d_hi, _) = slope(hi);
    if d_hi >= 0.0 {
        return Maximum {
            theta: hi,
            interior: false,
            iterations: 2,
        };
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = match init {
        Some(x0) if x0 > a && x0 < b => x0,
        _ => 0.5 * (a + b),
    };
    let mut last_step = b - a;
    let mut iterations = 2;
    while iterations < 300 {
        iterations += 1;
        let (g, gp) = slope(x);
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - g / gp;
        let step_ok = gp < 0.0 && newton > a && newton < b && (g / gp).abs() < 0.5 * last_step;
        let next = if step_ok { newton } else { 0.5 * (a + b) };
        last_step = (next - x).abs();
        x = next;
        if last_step <= 2.0 * f64::EPSILON * x.abs() || b - a <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    Maximum {
        theta: x,
        interior: true,
        iterations,
    }
}

/// Derivative-free fallback: dense scan over `points` samples followed by
/// golden-section refinement between the neighbours of the best sample.
pub fn scan_and_refine<F>(lo: f64, hi: f64, points: usize, refine: usize, f: F) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let points = points.max(3);
    let h = (hi - lo) / (points - 1) as f64;
    let at = |k: usize| if k + 1 == points { hi } else { lo + k as f64 * h };
    let mut best = (0, f(lo));
    for k in 1..points {
        let v = f(at(k));
        if v > best.1 {
            best = (k, v);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(points - 1)));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..refine {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut theta = 0.5 * (a + b);
    if best.1 > f(theta) {
        theta = at(best.0);
    }
    Maximum {
        theta,
        interior: theta > lo && theta < hi,
        iterations: points + refine,
    }
}
