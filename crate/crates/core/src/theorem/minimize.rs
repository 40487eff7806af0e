use serde::{Deserialize, Serialize};

use super::objective::Objective1D;
use crate::error::{Error, Result};

/// Stationarity tolerance on `Y'(w) = L'(w) + lambda * w`.
pub const GRAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMinResult {
    pub lambda: f64,
    pub omega_star: f64,
    /// `Y(w*) = L(w*) + lambda/2 * w*^2`.
    pub value: f64,
    pub converged: bool,
}

struct Penalized<'a> {
    obj: &'a dyn Objective1D,
    lambda: f64,
}

impl Penalized<'_> {
    fn value(&self, w: f64) -> f64 {
        self.obj.value(w) + 0.5 * self.lambda * w * w
    }
    fn grad(&self, w: f64) -> f64 {
        self.obj.d1(w) + self.lambda * w
    }
    fn hess(&self, w: f64) -> f64 {
        self.obj.d2(w) + self.lambda
    }
}

/// Local minimum of `L(w) + lambda/2 * w^2` reached by walking downhill
/// from `w_init`.
///
/// The minimum is first bracketed by steps of doubling length in the
/// downhill direction (starting from the Newton distance when the
/// curvature is positive), then refined by Newton steps that fall back to
/// bisection whenever they leave the bracket.
pub fn minimize(obj: &dyn Objective1D, lambda: f64, w_init: f64) -> Result<LocalMinResult> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let (lo, hi) = obj.domain();
    if !(lo..=hi).contains(&w_init) {
        return Err(Error::InvalidArgument(format!("start {w_init} outside domain [{lo}, {hi}]")));
    }
    let y = Penalized { obj, lambda };
    let done = |w: f64| LocalMinResult {
        lambda,
        omega_star: w,
        value: y.value(w),
        converged: y.grad(w).abs() < GRAD_TOL && y.hess(w) > 0.0,
    };
    let g0 = y.grad(w_init);
    // A stationary start that is not a strict minimum falls through and is
    // nudged off below.
    if g0.abs() < GRAD_TOL && y.hess(w_init) > 0.0 {
        return Ok(done(w_init));
    }

    // Bracket [a, b] with g(a) pointing downhill towards b and g(b) not.
    let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
    let h0 = y.hess(w_init);
    let mut step = if h0 > 0.0 && g0 != 0.0 {
        2.0 * g0.abs() / h0
    } else {
        1e-2 * w_init.abs().max(1.0)
    };
    step = step.max(1e-12 * w_init.abs().max(1.0));
    let mut a = w_init;
    let mut b;
    loop {
        b = a + dir * step;
        if b < lo || b > hi {
            return Err(Error::NoMinimum(format!(
                "{}: downhill walk from {w_init} left the domain at lambda {lambda}",
                obj.tag()
            )));
        }
        if y.grad(b) * dir >= 0.0 {
            break;
        }
        a = b;
        step *= 2.0;
    }

    // In direction-normalised coordinates g(a)*dir < 0 <= g(b)*dir.
    let (mut left, mut right) = if a < b { (a, b) } else { (b, a) };
    let mut w = 0.5 * (left + right);
    for _ in 0..200 {
        let g = y.grad(w);
        if g.abs() < GRAD_TOL && y.hess(w) > 0.0 {
            return Ok(done(w));
        }
        // Keep the sign pattern: g < 0 on the left end, g > 0 on the right.
        if g < 0.0 {
            left = w;
        } else {
            right = w;
        }
        let h = y.hess(w);
        let newton = w - g / h;
        w = if h > 0.0 && newton > left && newton < right {
            newton
        } else {
            0.5 * (left + right)
        };
        if right - left <= f64::EPSILON * w.abs().max(1e-300) {
            break;
        }
    }
    let r = done(w);
    if r.converged {
        Ok(r)
    } else {
        // Bracket collapsed without meeting the tolerance; report as is.
        Ok(LocalMinResult { converged: false, ..r })
    }
}
