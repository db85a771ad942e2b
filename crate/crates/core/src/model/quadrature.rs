//! Adaptive Simpson quadrature with a global relative tolerance and a hard
//! cap on the number of subintervals.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpsonConfig {
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Panels used to seed the global magnitude estimate.
    pub initial_panels: usize,
}

impl Default for SimpsonConfig {
    fn default() -> Self {
        SimpsonConfig {
            rel_tol: 1e-8,
            max_intervals: 1 << 20,
            initial_panels: 8,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` (requires `a <= b`).
///
/// Each segment is accepted once `|S_left + S_right − S| ≤ 15·tol·w/(b−a)`,
/// where `tol = rel_tol·|Î|` and `Î` is a composite-Simpson estimate over
/// `initial_panels` panels. Accepted segments get the Richardson correction.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, cfg: &SimpsonConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain("quadrature bounds", format!("[{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let span = b - a;
    let panels = cfg.initial_panels.max(1);
    let h = span / panels as f64;

    let mut stack = Vec::with_capacity(64);
    let mut estimate = 0.0;
    let mut fa = f(a);
    for p in 0..panels {
        let pa = a + p as f64 * h;
        let pb = if p + 1 == panels { b } else { pa + h };
        let fm = f(0.5 * (pa + pb));
        let fb = f(pb);
        let whole = simpson(pa, pb, fa, fm, fb);
        estimate += whole;
        stack.push(Segment {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole,
        });
        fa = fb;
    }

    let tol = (cfg.rel_tol * estimate.abs()).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut intervals = panels;

    while let Some(seg) = stack.pop() {
        let m = 0.5 * (seg.a + seg.b);
        let lm = 0.5 * (seg.a + m);
        let rm = 0.5 * (m + seg.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(seg.a, m, seg.fa, flm, seg.fm);
        let right = simpson(m, seg.b, seg.fm, frm, seg.fb);
        let delta = left + right - seg.whole;
        let local_tol = tol * (seg.b - seg.a) / span;
        if delta.abs() <= 15.0 * local_tol || m <= seg.a || m >= seg.b {
            total += left + right + delta / 15.0;
            err_total += delta.abs() / 15.0;
            continue;
        }
        intervals += 1;
        if intervals > cfg.max_intervals {
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                intervals,
                estimate: total + left + right,
                error_estimate: err_total + delta.abs(),
            });
        }
        stack.push(Segment {
            a: m,
            b: seg.b,
            fa: seg.fm,
            fm: frm,
            fb: seg.fb,
            whole: right,
        });
        stack.push(Segment {
            a: seg.a,
            b: m,
            fa: seg.fa,
            fm: flm,
            fb: seg.fm,
            whole: left,
        });
    }
    Ok(total)
}
