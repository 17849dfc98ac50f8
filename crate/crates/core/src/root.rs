//! Bracketed scalar root finding.

use crate::error::{EsnError, Result};

const MAX_ITER: usize = 200;

/// Expands `[lo, hi]` geometrically around its midpoint until `f` changes sign.
pub(crate) fn expand_bracket<F: FnMut(f64) -> f64>(f: &mut F, mut lo: f64, mut hi: f64) -> Result<(f64, f64, f64, f64)> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut width = hi - lo;
    for _ in 0..60 {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi, flo, fhi));
        }
        width *= 2.0;
        // grow toward the side whose value is closer to the root
        if flo.abs() < fhi.abs() {
            lo -= width;
            flo = f(lo);
        } else {
            hi += width;
            fhi = f(hi);
        }
        if !flo.is_finite() && !fhi.is_finite() {
            break;
        }
    }
    Err(EsnError::NoConvergence(format!("could not bracket a root in [{lo}, {hi}]")))
}

/// Brent's method on a sign-changing bracket. Stops when the bracket is below
/// `xtol` or `|f| <= ftol`.
pub(crate) fn brent<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    flo: f64,
    fhi: f64,
    xtol: f64,
    ftol: f64,
) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, flo, fhi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(EsnError::NoConvergence("bracket does not straddle a root".into()));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(EsnError::NoConvergence(format!("Brent iteration cap reached near x = {b}")))
}
