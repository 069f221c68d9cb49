//! Small scalar solvers shared by the analysis modules.

/// Grid size for bracketing extrema before refinement.
pub(crate) const GRID: usize = 4096;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Newton's method kept inside a sign-changing bracket; falls back to bisection
/// whenever a Newton step would leave it or fails to shrink it.
pub(crate) fn safeguarded_newton(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let rising = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < tol || hi - lo < tol {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Global maximum of `f` on `[lo, hi]`: best of a uniform grid, refined by
/// golden-section search between its neighbours.
pub(crate) fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = GRID;
    let at = |k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..n {
        let y = f(at(k));
        if y > best.1 {
            best = (k, y);
        }
    }
    let (k, y) = best;
    let a = at(k.saturating_sub(1));
    let b = at((k + 1).min(n - 1));
    let (x, fy) = golden_max(&f, a, b, tol);
    if fy > y {
        (x, fy)
    } else {
        (at(k), y)
    }
}

pub(crate) fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, y) = grid_max(|h| -f(h), lo, hi, tol);
    (x, -y)
}
