//! Online assignment policies.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AvailabilityTimeline, JobArrival};

/// Inspection frequency: a positive integer, or continuous inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma {
    Finite(u32),
    Infinite,
}

impl Gamma {
    pub fn as_f64(self) -> f64 {
        match self {
            Gamma::Finite(g) => g as f64,
            Gamma::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" => Ok(Gamma::Infinite),
            v => v
                .parse::<u32>()
                .ok()
                .filter(|&g| g >= 1)
                .map(Gamma::Finite)
                .ok_or_else(|| Error::InvalidParams(format!("gamma must be a positive integer or inf, got {v:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlbParams {
    pub gamma: Gamma,
    pub eta: f64,
    pub beta: f64,
}

impl FlbParams {
    pub fn new(gamma: Gamma, eta: f64, beta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParams(format!("eta must be finite and >= 0, got {eta}")));
        }
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be finite and >= 1, got {beta}")));
        }
        Ok(FlbParams { gamma, eta, beta })
    }

    /// Ψ(x) = η(β^(1−x) − 1).
    pub fn penalty(&self, x: f64) -> f64 {
        penalty(self.eta, self.beta, x)
    }
}

pub fn penalty(eta: f64, beta: f64, x: f64) -> f64 {
    eta * (beta.powf(1.0 - x) - 1.0)
}

/// t + ℓ/γ for every ℓ ≥ 0 with t + ℓ/γ < t + d.
pub fn inspection_times(t: f64, d: f64, gamma: u32) -> Vec<f64> {
    let g = gamma as f64;
    (0u64..)
        .take_while(|&l| (l as f64) < g * d)
        .map(|l| t + l as f64 / g)
        .collect()
}

pub fn reduced_reward_discrete(params: &FlbParams, r: f64, d: f64, tl: &AvailabilityTimeline, t: f64) -> f64 {
    let Gamma::Finite(g) = params.gamma else {
        panic!("discrete reduced reward needs finite gamma");
    };
    let penalties: f64 = inspection_times(t, d, g)
        .into_iter()
        .map(|tau| params.penalty(tl.projected_availability(tau)))
        .sum();
    r * d - penalties
}

/// Constant-availability pieces [start, end) of [t, t+d).
pub fn availability_segments(tl: &AvailabilityTimeline, t: f64, d: f64) -> Vec<(f64, f64, f64)> {
    let end = t + d;
    let mut cuts = vec![t];
    cuts.extend(tl.busy_until().iter().copied().filter(|&e| e > t && e < end));
    cuts.dedup();
    cuts.push(end);
    cuts.windows(2)
        .map(|w| (w[0], w[1], tl.projected_availability(w[0])))
        .collect()
}

pub fn reduced_reward_continuous(params: &FlbParams, r: f64, d: f64, tl: &AvailabilityTimeline, t: f64) -> f64 {
    let integral: f64 = availability_segments(tl, t, d)
        .into_iter()
        .map(|(a, b, alpha)| (b - a) * params.penalty(alpha))
        .sum();
    r * d - integral
}

pub fn reduced_reward(params: &FlbParams, r: f64, d: f64, tl: &AvailabilityTimeline, t: f64) -> f64 {
    match params.gamma {
        Gamma::Finite(_) => reduced_reward_discrete(params, r, d, tl, t),
        Gamma::Infinite => reduced_reward_continuous(params, r, d, tl, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Flb(FlbParams),
    /// Classic BALANCE with Ψ_B(x) = (RD/(e−1))(e^{1−x} − 1) on current availability.
    Balance { r_max: f64, d_max: f64 },
    Greedy,
}

impl Policy {
    /// Parses `flb:gamma=1,eta=0.58,beta=2.72`, `balance` or `greedy`.
    /// BALANCE takes its R and D from the arguments unless given as `balance:R=..,D=..`.
    pub fn parse(s: &str, r_max: f64, d_max: f64) -> Result<Policy> {
        let bad = |m: String| Error::InvalidParams(m);
        let (name, args) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut kv = Vec::new();
        for pair in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {pair:?}")))?;
            kv.push((k.trim().to_string(), v.trim().to_string()));
        }
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
        match name {
            "flb" => {
                let (mut gamma, mut eta, mut beta) = (Gamma::Finite(1), None, None);
                for (k, v) in &kv {
                    match k.as_str() {
                        "gamma" => gamma = v.parse()?,
                        "eta" => eta = Some(num(v)?),
                        "beta" => beta = Some(num(v)?),
                        _ => return Err(bad(format!("unknown flb key {k:?}"))),
                    }
                }
                let eta = eta.ok_or_else(|| bad("flb needs eta".into()))?;
                let beta = beta.ok_or_else(|| bad("flb needs beta".into()))?;
                Ok(Policy::Flb(FlbParams::new(gamma, eta, beta)?))
            }
            "balance" => {
                let (mut r, mut d) = (r_max, d_max);
                for (k, v) in &kv {
                    match k.as_str() {
                        "R" | "r_max" => r = num(v)?,
                        "D" | "d_max" => d = num(v)?,
                        _ => return Err(bad(format!("unknown balance key {k:?}"))),
                    }
                }
                Ok(Policy::Balance { r_max: r, d_max: d })
            }
            "greedy" if kv.is_empty() => Ok(Policy::Greedy),
            _ => Err(bad(format!("unknown policy {s:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Flb(_) => "flb",
            Policy::Balance { .. } => "balance",
            Policy::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Flb(p) => write!(f, "flb:gamma={},eta={},beta={}", p.gamma, p.eta, p.beta),
            Policy::Balance { r_max, d_max } => write!(f, "balance:R={r_max},D={d_max}"),
            Policy::Greedy => f.write_str("greedy"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub chosen: Option<usize>,
    pub scores: Vec<(usize, f64)>,
}

/// Lowest-index argmax among strictly positive scores.
fn pick(scores: &[(usize, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(i, s) in scores {
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn decide(policy: &Policy, job: &JobArrival, state: &[AvailabilityTimeline]) -> Decision {
    let t = job.arrival_time;
    let scores: Vec<(usize, f64)> = match policy {
        Policy::Flb(p) => job
            .offers
            .iter()
            .map(|o| (o.server, reduced_reward(p, o.reward, o.duration, &state[o.server], t)))
            .collect(),
        Policy::Balance { r_max, d_max } => {
            let eta = r_max * d_max / (std::f64::consts::E - 1.0);
            job.offers
                .iter()
                .filter(|o| state[o.server].has_free_unit(t))
                .map(|o| {
                    let alpha = state[o.server].projected_availability(t);
                    (o.server, o.value() - penalty(eta, std::f64::consts::E, alpha))
                })
                .collect()
        }
        Policy::Greedy => job
            .offers
            .iter()
            .filter(|o| state[o.server].has_free_unit(t))
            .map(|o| (o.server, o.value()))
            .collect(),
    };
    Decision { chosen: pick(&scores), scores }
}
