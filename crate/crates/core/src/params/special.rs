//! Special functions and root finding used by the solvers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    MinusOne,
}

const INV_E: f64 = 0.36787944117144233;

/// Lambert W on the requested real branch, refined by Halley iteration.
pub fn lambert_w(branch: Branch, x: f64) -> Result<f64> {
    let dom = |m: &str| Err(Error::DomainError(format!("W{m} undefined at {x}")));
    if !x.is_finite() {
        return dom(match branch {
            Branch::Principal => "0",
            Branch::MinusOne => "-1",
        });
    }
    let q = x + INV_E;
    if q < -1e-15 {
        return dom(if branch == Branch::Principal { "0" } else { "-1" });
    }
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let p = (2.0 * std::f64::consts::E * x + 2.0).max(0.0).sqrt();
    let mut w = match branch {
        Branch::Principal => {
            if x == 0.0 {
                return Ok(0.0);
            }
            if x < -0.25 {
                -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
            } else if x < 3.0 {
                (1.0 + x).ln()
            } else {
                let l = x.ln();
                l - l.ln()
            }
        }
        Branch::MinusOne => {
            if x >= 0.0 {
                return dom("-1");
            }
            if x < -0.25 {
                -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
            } else {
                let l = (-x).ln();
                l - (-l).ln()
            }
        }
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(match branch {
        Branch::Principal => w.max(-1.0),
        Branch::MinusOne => w.min(-1.0),
    })
}

/// W₋₁(−e^{−s}) for s ≥ 1, solved in log space so large `s` does not underflow.
pub fn lambert_w_minus_one_neg_exp(s: f64) -> Result<f64> {
    if s.is_nan() || s < 1.0 {
        return Err(Error::DomainError(format!("W-1(-exp(-{s})) undefined")));
    }
    if s < 600.0 {
        return lambert_w(Branch::MinusOne, -(-s).exp());
    }
    // w + ln(−w) + s = 0
    let mut w = -s - s.ln();
    for _ in 0..100 {
        let g = w + (-w).ln() + s;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    Ok(w)
}

pub fn harmonic(d: u64) -> f64 {
    (1..=d).map(|i| 1.0 / i as f64).sum()
}

/// ∏_{ℓ=1}^{k} (1 − z/ℓ).
pub fn rho_product(z: f64, k: u64) -> f64 {
    (1..=k).map(|l| 1.0 - z / l as f64).product()
}

/// Smallest point of `[lo, hi]` where a monotone predicate turns true,
/// to within `tol`. Requires `pred(hi)`.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    debug_assert!(pred(hi));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
