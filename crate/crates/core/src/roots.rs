//! Bracketed scalar root finding: bisection safeguarded secant steps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 400;

/// Find x in [a, b] with |f(x)| <= `ftol`, given a sign change on the bracket.
///
/// Each iteration tries a secant step through the bracket ends and falls back
/// to bisection whenever the step leaves the bracket or the bracket fails to
/// shrink by half within two iterations.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, ftol: f64) -> Result<Root> {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::Root(format!("non-finite value at bracket ends: f({lo}) = {flo}, f({hi}) = {fhi}")));
    }
    if flo.abs() <= ftol {
        return Ok(Root { x: lo, fx: flo, iterations: 0 });
    }
    if fhi.abs() <= ftol {
        return Ok(Root { x: hi, fx: fhi, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Root(format!("no sign change on [{lo}, {hi}]: f = {flo:e}, {fhi:e}")));
    }

    let mut width_two_ago = f64::INFINITY;
    let mut width_prev = hi - lo;
    for it in 1..=MAX_ITER {
        let width = hi - lo;
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        let use_bisection = !(secant > lo && secant < hi) || width > 0.5 * width_two_ago;
        let x = if use_bisection { 0.5 * (lo + hi) } else { secant };
        width_two_ago = width_prev;
        width_prev = width;

        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Root(format!("non-finite value f({x}) = {fx}")));
        }
        if fx.abs() <= ftol {
            return Ok(Root { x, fx, iterations: it });
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            let (x, fx) = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
            return Ok(Root { x, fx, iterations: it });
        }
    }
    Err(Error::Root(format!("no convergence after {MAX_ITER} iterations on [{lo}, {hi}]")))
}

/// Scan `[a, b]` on `samples` uniform subintervals and return every bracket
/// with a sign change.
pub fn sign_changes<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, samples: usize) -> Vec<(f64, f64)> {
    let n = samples.max(1);
    let mut out = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 || (f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum()) {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}
