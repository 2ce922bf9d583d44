//! Parameter selection for FLB.
//!
//! Each solver fixes (γ, η) by a closed-form rule and then takes the smallest
//! β ≥ e satisfying the matching capacity-feasibility condition. The returned
//! `ratio_bound` is the certified competitive-ratio objective at that point.

pub mod special;

use std::f64::consts::E;
use std::fmt;

use crate::engine::{
    check_feasibility_condition_integer, check_feasibility_condition_real, feasibility_rhs_real, Verdict,
};
use crate::error::{Error, Result};
use crate::model::CMin;
use crate::policies::{FlbParams, Gamma};
use special::{bisect, lambert_w_minus_one_neg_exp, rho_product};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    LargeCapCaseI,
    LargeCapCaseII,
    FiniteCap,
    FixedRewardInt,
    FixedRewardReal,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::LargeCapCaseI => "large_cap_case_i",
            Regime::LargeCapCaseII => "large_cap_case_ii",
            Regime::FiniteCap => "finite_cap",
            Regime::FixedRewardInt => "fixed_reward_int",
            Regime::FixedRewardReal => "fixed_reward_real",
        })
    }
}

/// How β was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    ClosedForm,
    LambertW,
    /// Smallest fixed point of β ↦ exp(RHS(β)), found from below.
    FixedPoint,
    /// Large-capacity values, re-checked at the finite capacity.
    LargeCapFallback,
}

impl fmt::Display for SolvePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolvePath::ClosedForm => "closed_form",
            SolvePath::LambertW => "lambert_w",
            SolvePath::FixedPoint => "fixed_point",
            SolvePath::LargeCapFallback => "large_cap_fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvedParams {
    pub gamma: Gamma,
    pub eta: f64,
    pub beta: f64,
    pub ratio_bound: f64,
    pub regime: Regime,
    pub path: SolvePath,
}

impl SolvedParams {
    pub fn flb(&self) -> FlbParams {
        FlbParams { gamma: self.gamma, eta: self.eta, beta: self.beta }
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "gamma={}\neta={}\nbeta={}\nratio_bound={}\nregime={}\npath={}\n",
            self.gamma, self.eta, self.beta, self.ratio_bound, self.regime, self.path
        )
    }
}

/// β^{1/c} − 1, zero in the large-capacity limit.
fn capacity_excess(beta: f64, c_min: CMin) -> f64 {
    (beta.ln() * c_min.recip()).exp_m1()
}

/// ln β · (1 + η(1 + β(β^{1/c_min} − 1))).
pub fn objective_int(eta: f64, beta: f64, c_min: CMin) -> f64 {
    beta.ln() * (1.0 + eta * (1.0 + beta * capacity_excess(beta, c_min)))
}

/// (γ/(γ−1)) · ln β · (1 + γη(1 + β(β^{1/c_min} − 1))).
pub fn objective_real(gamma: u32, eta: f64, beta: f64, c_min: CMin) -> f64 {
    let g = gamma as f64;
    g / (g - 1.0) * beta.ln() * (1.0 + g * eta * (1.0 + beta * capacity_excess(beta, c_min)))
}

/// Per-assignment dual-increment ratio: the integer objective with η replaced by γη.
pub fn step_ratio(params: &FlbParams, c_min: CMin) -> f64 {
    let g = match params.gamma {
        Gamma::Finite(g) => g as f64,
        Gamma::Infinite => f64::INFINITY,
    };
    objective_int(g * params.eta, params.beta, c_min)
}

fn check_bounds(r: f64, d: f64) -> Result<()> {
    if !(r >= 1.0 && d >= 1.0 && r.is_finite() && d.is_finite()) {
        return Err(Error::InvalidParams(format!("need finite R, D >= 1, got R={r}, D={d}")));
    }
    Ok(())
}

/// Smallest y ≥ y0 with y ≥ rhs(y), for rhs nondecreasing in y; None when the
/// iteration leaves the domain or fails to settle.
fn smallest_fixed_point(y0: f64, rhs: impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let mut y = y0;
    for _ in 0..1_000_000 {
        let next = rhs(y)?;
        if next <= y {
            return Some(y);
        }
        if next - y < 1e-13 * (1.0 + y) {
            return Some(next + 1e-13 * (1.0 + y));
        }
        if !next.is_finite() || next > 700.0 {
            return None;
        }
        y = next;
    }
    None
}

pub fn solve_flbopt_int(r: f64, d: u64, c_min: CMin) -> Result<SolvedParams> {
    check_bounds(r, d as f64)?;
    let l = r.max(d as f64).ln();
    let case_i = l >= E - 1.0;
    let (eta, regime) = if case_i { (1.0 / l, Regime::LargeCapCaseI) } else { (r / (E - 1.0), Regime::LargeCapCaseII) };
    let p = rho_product(r / (r + eta), d);
    let beta_inf = (-p.ln()).exp().max(E);
    let verified = |beta: f64| check_feasibility_condition_integer(r, d, c_min, eta, beta) == Verdict::Feasible;
    let done = |beta: f64, regime, path| SolvedParams {
        gamma: Gamma::Finite(1),
        eta,
        beta,
        ratio_bound: objective_int(eta, beta, c_min),
        regime,
        path,
    };
    let CMin::Finite(c) = c_min else {
        return if verified(beta_inf) {
            Ok(done(beta_inf, regime, SolvePath::ClosedForm))
        } else {
            Err(Error::InvalidParams(format!("closed form failed feasibility at R={r}, D={d}")))
        };
    };
    // e^{−y} = P − A·y with y = ln β; 1/β = −A·W₋₁(−1/(A e^{P/A})).
    let a = (r + eta) / (r * c as f64);
    let s = p / a + a.ln();
    if let Ok(w) = lambert_w_minus_one_neg_exp(s) {
        let beta = (1.0 / (-a * w)).max(E);
        if verified(beta) {
            return Ok(done(beta, Regime::FiniteCap, SolvePath::LambertW));
        }
        // rounding at the binding point: nudge up within a relative 1e-10
        let nudged = beta * (1.0 + 1e-10);
        if verified(nudged) {
            return Ok(done(nudged, Regime::FiniteCap, SolvePath::LambertW));
        }
    }
    if verified(beta_inf) {
        return Ok(done(beta_inf, regime, SolvePath::LargeCapFallback));
    }
    Err(Error::CapacityTooSmall(format!(
        "no feasible beta for R={r}, D={d} at c_min={c} (Lambert-W argument below -1/e)"
    )))
}

/// ln(R∨D) at which the real-duration solver switches to the growing-γ
/// regime; below it the fixed γ = 2, η = R/(e−1) choice certifies a smaller ratio.
pub const REAL_REGIME_THRESHOLD: f64 = 1.0;

pub fn solve_flbopt_real(r: f64, d: f64, c_min: CMin) -> Result<SolvedParams> {
    check_bounds(r, d)?;
    if d == 1.0 {
        return solve_flbopt_int(r, 1, c_min);
    }
    let l = r.max(d).ln();
    let regime_i = l >= REAL_REGIME_THRESHOLD;
    let (gamma, eta, regime) = if regime_i {
        (((l - 1e-9).ceil() as u32).max(2), 1.0 / (l * l), Regime::LargeCapCaseI)
    } else {
        (2, r / (E - 1.0), Regime::LargeCapCaseII)
    };
    let rhs = |c: CMin| move |y: f64| feasibility_rhs_real(r, d, c, gamma, eta, y.exp());
    let too_small = || Error::CapacityTooSmall(format!("no feasible beta for R={r}, D={d} at c_min={c_min}"));
    let y_inf = rhs(CMin::Infinite)(1.0).ok_or_else(too_small)?.max(1.0);
    let (y, regime, path) = match c_min {
        CMin::Infinite => (y_inf, regime, SolvePath::ClosedForm),
        CMin::Finite(_) => {
            let y = smallest_fixed_point(y_inf, rhs(c_min)).ok_or_else(too_small)?;
            (y, Regime::FiniteCap, SolvePath::FixedPoint)
        }
    };
    let mut beta = y.exp();
    let feasible = |b: f64| check_feasibility_condition_real(r, d, c_min, gamma, eta, b) == Verdict::Feasible;
    if !feasible(beta) {
        beta *= 1.0 + 1e-10;
        if !feasible(beta) {
            return Err(too_small());
        }
    }
    Ok(SolvedParams {
        gamma: Gamma::Finite(gamma),
        eta,
        beta,
        ratio_bound: objective_real(gamma, eta, beta, c_min),
        regime,
        path,
    })
}

/// η solving ∏_{k≤D}(1 − 1/(k(1+η))) = 1/e, with β = e and γ = 1.
pub fn solve_fixed_reward_int(d: u64) -> Result<SolvedParams> {
    if d == 0 {
        return Err(Error::InvalidParams("D must be at least 1".into()));
    }
    let target = (-1.0f64).exp();
    let reaches = |eta: f64| rho_product(1.0 / (1.0 + eta), d) >= target;
    let mut hi = 1.0;
    while !reaches(hi) {
        hi *= 2.0;
    }
    let eta = bisect(0.0, hi, 1e-13, reaches);
    Ok(SolvedParams {
        gamma: Gamma::Finite(1),
        eta,
        beta: E,
        ratio_bound: objective_int(eta, E, CMin::Infinite),
        regime: Regime::FixedRewardInt,
        path: SolvePath::ClosedForm,
    })
}

/// −ln(1 − e^{η/(1+η)}/(1+η)) + ln(D)/(1+η); the continuous-inspection choice needs this ≤ 1.
pub fn fixed_reward_real_lhs(d: f64, eta: f64) -> Option<f64> {
    let arg = 1.0 - (eta / (1.0 + eta)).exp() / (1.0 + eta);
    (arg > 0.0).then(|| -arg.ln() + d.ln() / (1.0 + eta))
}

pub fn solve_fixed_reward_real(d: f64) -> Result<SolvedParams> {
    check_bounds(1.0, d)?;
    let eta = d.ln() + 3.0;
    match fixed_reward_real_lhs(d, eta) {
        Some(v) if v <= 1.0 => Ok(SolvedParams {
            gamma: Gamma::Infinite,
            eta,
            beta: E,
            ratio_bound: 1.0 + eta,
            regime: Regime::FixedRewardReal,
            path: SolvePath::ClosedForm,
        }),
        _ => Err(Error::InvalidParams(format!("continuous-inspection condition fails at D={d}"))),
    }
}

/// Raises β until Ψ(0) ≥ R·D, so a full server always scores nonpositive at
/// its first inspection time. Safe at any capacity for finite γ.
pub fn with_saturation_guard(params: FlbParams, r: f64, d: f64) -> FlbParams {
    let need = 1.0 + r * d / params.eta;
    FlbParams { beta: params.beta.max(need * (1.0 + 1e-12)), ..params }
}
