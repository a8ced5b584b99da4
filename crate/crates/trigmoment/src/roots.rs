//! One-dimensional root finding: Brent's method, geometric bracket expansion
//! and a bracketed (safeguarded) Newton iteration.

use crate::error::{Error, Result};

/// Outcome of a root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Abscissa of the root.
    pub x: f64,
    /// Function value at `x`.
    pub fx: f64,
    /// Number of function evaluations.
    pub iterations: usize,
}

/// Brent's method on a bracket [a, b] with f(a)·f(b) ≤ 0.
///
/// Stops when the bracket is narrower than `xtol·max(1, |x|)` or f hits zero.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<Root> {
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Estimation { message: "root function is NaN at bracket ends".into(), residual: f64::NAN });
    }
    if fa * fb > 0.0 {
        return Err(Error::Estimation {
            message: format!("root not bracketed on [{a}, {b}]"),
            residual: fa.abs().min(fb.abs()),
        });
    }
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol * b.abs().max(1.0);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Estimation { message: format!("root function is NaN at {b}"), residual: f64::NAN });
        }
    }
    Err(Error::Estimation {
        message: format!("Brent iteration did not converge in {max_iter} steps"),
        residual: fb.abs(),
    })
}

/// Finds a sign change of `f` on the positive half line, starting from the
/// bracket [x0/factor, x0·factor] and widening it geometrically within
/// [lo_limit, hi_limit]. Returns (a, b, f(a), f(b)).
pub fn expand_positive_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    factor: f64,
    lo_limit: f64,
    hi_limit: f64,
) -> Result<(f64, f64, f64, f64)> {
    let x0 = x0.clamp(lo_limit, hi_limit);
    let mut a = (x0 / factor).max(lo_limit);
    let mut b = (x0 * factor).min(hi_limit);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if fa.is_finite() && fb.is_finite() && fa * fb <= 0.0 {
            return Ok((a, b, fa, fb));
        }
        let can_lo = a > lo_limit;
        let can_hi = b < hi_limit;
        if !can_lo && !can_hi {
            break;
        }
        // Move the end whose value is smaller in magnitude (closer to a root),
        // or whichever end can still move.
        let move_lo = can_lo && (!can_hi || !fa.is_finite() || (fb.is_finite() && fa.abs() < fb.abs()));
        if move_lo {
            b = a;
            fb = fa;
            a = (a / factor).max(lo_limit);
            fa = f(a);
        } else {
            a = b;
            fa = fb;
            b = (b * factor).min(hi_limit);
            fb = f(b);
        }
    }
    Err(Error::Estimation {
        message: format!("no sign change found in [{lo_limit}, {hi_limit}]"),
        residual: if fa.is_finite() { fa.abs() } else { f64::INFINITY },
    })
}

/// Safeguarded Newton iteration for an increasing function g on the bracket
/// (lo, hi) with g(lo) ≤ 0 ≤ g(hi). `gd` returns (g(x), g'(x)). Steps that
/// leave the bracket are replaced by bisection (geometric when the bracket
/// spans orders of magnitude on the positive axis).
pub fn newton_increasing<G: FnMut(f64) -> (f64, f64)>(
    mut gd: G,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    rtol: f64,
    max_iter: usize,
) -> Result<Root> {
    let mut x = if x0 > lo && x0 < hi { x0 } else { bisect_point(lo, hi) };
    for iter in 1..=max_iter {
        let (g, dg) = gd(x);
        if g.is_nan() {
            return Err(Error::Sampling(format!("inversion function is NaN at {x}")));
        }
        if g == 0.0 {
            return Ok(Root { x, fx: g, iterations: iter });
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dg > 0.0 && dg.is_finite() { x - g / dg } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            bisect_point(lo, hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= rtol * x.abs() || (hi - lo) <= rtol * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(Root { x, fx: g, iterations: iter });
        }
    }
    Err(Error::Sampling(format!("Newton inversion did not converge near {x}")))
}

fn bisect_point(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi.is_finite() && hi / lo > 16.0 {
        (lo * hi).sqrt()
    } else if lo >= 0.0 && hi.is_infinite() {
        if lo == 0.0 {
            1.0
        } else {
            2.0 * lo
        }
    } else if lo.is_infinite() && hi.is_finite() {
        if hi > 0.0 {
            0.0
        } else if hi == 0.0 {
            -1.0
        } else {
            2.0 * hi
        }
    } else if lo.is_infinite() && hi.is_infinite() {
        0.0
    } else if lo == 0.0 && hi > 0.0 {
        // Geometric steps towards zero keep relative resolution.
        0.1 * hi
    } else {
        0.5 * (lo + hi)
    }
}
