//! Bracketed root finding for nondecreasing functions: Newton steps
//! safeguarded by bisection.

use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootSettings<T> {
    /// Accepted residual `|g(t) - target|`.
    pub tolerance: T,
    pub max_iter: usize,
}

impl<T: Real> Default for RootSettings<T> {
    fn default() -> Self {
        Self { tolerance: T::lit(1e-12).max(T::epsilon() * T::lit(16.0)), max_iter: 200 }
    }
}

/// Solves `g(t) = target` on `[lo, hi]` for nondecreasing `g` with known
/// endpoint values. `eval` returns `(g(t), g'(t))`.
///
/// Targets at or beyond the endpoint values return the endpoint; targets
/// outside `[g_lo - tol, g_hi + tol]` are reported as not bracketed.
#[allow(clippy::too_many_arguments)]
pub fn solve_increasing<T, F>(
    mut eval: F,
    target: T,
    (lo, hi): (T, T),
    (g_lo, g_hi): (T, T),
    guess: Option<T>,
    settings: &RootSettings<T>,
) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let tol = settings.tolerance;
    if !target.is_finite() || target < g_lo - tol || target > g_hi + tol || !(g_hi >= g_lo) {
        return Err(Error::NotBracketed { target: target.as_f64(), lo_value: g_lo.as_f64(), hi_value: g_hi.as_f64() });
    }
    if target <= g_lo {
        return Ok(lo);
    }
    if target >= g_hi {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    let mut t = guess
        .filter(|g| *g > lo && *g < hi)
        .unwrap_or_else(|| lo + (hi - lo) * (target - g_lo) / (g_hi - g_lo));
    let two = T::lit(2.0);
    for _ in 0..settings.max_iter {
        let (v, dv) = eval(t)?;
        let r = v - target;
        if r.abs() <= tol {
            // One free Newton correction sharpens the root well below `tol`.
            if dv > T::zero() {
                let polished = t - r / dv;
                if polished >= a && polished <= b {
                    return Ok(polished);
                }
            }
            return Ok(t);
        }
        if r < T::zero() {
            a = t;
        } else {
            b = t;
        }
        let newton = t - r / dv;
        let next = if dv > T::zero() && newton > a && newton < b { newton } else { (a + b) / two };
        if b - a <= T::epsilon() * (a.abs() + b.abs() + T::min_positive_value()) {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::NoConvergence(settings.max_iter))
}
