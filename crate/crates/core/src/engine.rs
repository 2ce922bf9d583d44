//! Simulation loop, trace export and capacity-feasibility checks.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::{CMin, CommitMode, DecisionRecord, DurationMode, Instance, Trace};
use crate::params::special::rho_product;
use crate::policies::{availability_segments, decide, inspection_times, FlbParams, Gamma, Policy};

/// Absolute slack allowed when comparing the two sides of a feasibility condition.
pub const FEASIBILITY_TOL: f64 = 1e-12;

pub fn run(instance: &Instance, policy: &Policy, mode: CommitMode) -> Result<Trace> {
    let mut state = instance.empty_timelines();
    let mut trace = Trace::default();
    for (j, job) in instance.jobs().iter().enumerate() {
        let t = job.arrival_time;
        let decision = decide(policy, job, &state);
        let mut reward = 0.0;
        let mut snapshots = Vec::new();
        if let Some(i) = decision.chosen {
            let offer = job.offer(i).expect("chosen server is compatible");
            let tl = &state[i];
            snapshots = match policy {
                Policy::Flb(FlbParams { gamma: Gamma::Finite(g), .. }) => inspection_times(t, offer.duration, *g)
                    .into_iter()
                    .map(|tau| (tau, tl.projected_availability(tau)))
                    .collect(),
                Policy::Flb(_) => availability_segments(tl, t, offer.duration)
                    .into_iter()
                    .map(|(a, _, alpha)| (a, alpha))
                    .collect(),
                _ => vec![(t, tl.projected_availability(t))],
            };
            state[i]
                .commit(t, t + offer.duration, mode)
                .map_err(|_| Error::CapacityViolation { job: j, server: i })?;
            reward = offer.value();
            trace.total_reward += reward;
        }
        let min_availability_after = state
            .iter()
            .map(|tl| tl.projected_availability(t))
            .fold(f64::INFINITY, f64::min);
        trace.decisions.push(DecisionRecord {
            job: j,
            time: t,
            chosen: decision.chosen,
            scores: decision.scores,
            snapshots,
            reward,
            min_availability_after,
        });
    }
    Ok(trace)
}

/// CSV with one row per arrival. Jobs and servers are zero-based.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("job,t,server_or_reject,score_chosen,reward_collected,min_availability_after\n");
    for d in &trace.decisions {
        let server = d.chosen.map_or("reject".to_string(), |i| i.to_string());
        let score = d.chosen_score().map_or(String::new(), |s| s.to_string());
        writeln!(out, "{},{},{},{},{},{}", d.job, d.time, server, score, d.reward, d.min_availability_after).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
    /// A logarithm argument was nonpositive.
    Undefined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Undefined => "undefined",
        })
    }
}

/// (R+η)·ln β / (R·c_min), the finite-capacity correction.
fn capacity_term(r: f64, eta: f64, ln_beta: f64, c_min: CMin) -> f64 {
    (r + eta) * ln_beta / r * c_min.recip()
}

/// −ln(∏_{k≤d}(1 − R/(k(R+η))) − (R+η)ln β/(R c_min)), or None when the argument is nonpositive.
pub fn invariant_rhs(r: f64, eta: f64, beta: f64, c_min: CMin, d: u64) -> Option<f64> {
    let arg = rho_product(r / (r + eta), d) - capacity_term(r, eta, beta.ln(), c_min);
    (arg > 0.0).then(|| -arg.ln())
}

pub fn check_feasibility_condition_integer(r: f64, d: u64, c_min: CMin, eta: f64, beta: f64) -> Verdict {
    match invariant_rhs(r, eta, beta, c_min, d) {
        None => Verdict::Undefined,
        Some(rhs) if beta.ln() + FEASIBILITY_TOL >= rhs => Verdict::Feasible,
        Some(_) => Verdict::Infeasible,
    }
}

/// Right-hand side of the real-duration feasibility condition, term by term as printed.
pub fn feasibility_rhs_real(r: f64, d: f64, c_min: CMin, gamma: u32, eta: f64, beta: f64) -> Option<f64> {
    let g = gamma as f64;
    let z = r / (r + g * eta);
    let eps = (eta * g + r) * beta.ln() / r * c_min.recip();
    let inspections = (g * d).ceil() as u64;
    let head = rho_product(z, inspections);
    let mid = 1.0 + (g + r / eta) * (1.0 - eps) - (r / eta) * (1.0 + eta / (r + g * eta)).powi(gamma as i32);
    let tail = rho_product(z, gamma as u64 + 1);
    if head <= 0.0 || mid <= 0.0 || tail <= 0.0 {
        return None;
    }
    Some(-head.ln() - mid.ln() + ((g + 1.0) * (r + g * eta) / (g * eta)).ln() + tail.ln())
}

pub fn check_feasibility_condition_real(r: f64, d: f64, c_min: CMin, gamma: u32, eta: f64, beta: f64) -> Verdict {
    match feasibility_rhs_real(r, d, c_min, gamma, eta, beta) {
        None => Verdict::Undefined,
        Some(rhs) if beta.ln() + FEASIBILITY_TOL >= rhs => Verdict::Feasible,
        Some(_) => Verdict::Infeasible,
    }
}

/// A point at which the availability invariant is evaluated: the state
/// seen by job `job` (all earlier assignments), horizon τ = t_job + `offset`,
/// and window length `d`. `job` equal to the job count means the final state,
/// read at the last arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub server: usize,
    pub job: usize,
    pub offset: u64,
    pub d: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantViolation {
    pub triple: Triple,
    pub lhs: f64,
    pub rhs: f64,
}

/// Every server × state × offset in 1..=D × d in 0..=D.
pub fn invariant_grid(instance: &Instance) -> Vec<Triple> {
    let dm = instance.d_max().ceil() as u64;
    let mut out = Vec::new();
    for server in 0..instance.servers().len() {
        for job in 0..=instance.jobs().len() {
            for offset in 1..=dm {
                for d in 0..=dm {
                    out.push(Triple { server, job, offset, d });
                }
            }
        }
    }
    out
}

fn state_time(instance: &Instance, job: usize) -> f64 {
    let jobs = instance.jobs();
    jobs.get(job).or(jobs.last()).map_or(0.0, |j| j.arrival_time)
}

/// Hypothetical timelines before each job, replayed from the trace.
fn replay_states(instance: &Instance, trace: &Trace) -> Vec<Vec<crate::model::AvailabilityTimeline>> {
    let mut state = instance.empty_timelines();
    let mut out = Vec::with_capacity(instance.jobs().len() + 1);
    out.push(state.clone());
    for d in &trace.decisions {
        if let Some(i) = d.chosen {
            let o = instance.jobs()[d.job].offer(i).expect("compatible");
            let _ = state[i].commit(d.time, d.time + o.duration, CommitMode::Hypothetical);
        }
        out.push(state.clone());
    }
    out
}

/// Checks (α_{t→τ+d} − α_{t→τ})·ln β ≤ −ln(∏_{k≤d}(1 − R/(k(R+η))) − (R+η)ln β/(R c_min))
/// at every requested triple.
pub fn check_invariant_integer(
    instance: &Instance,
    trace: &Trace,
    params: &FlbParams,
    r: f64,
    c_min: CMin,
    triples: &[Triple],
) -> Result<Vec<InvariantViolation>> {
    if params.gamma != Gamma::Finite(1) {
        return Err(Error::PreconditionViolated("invariant check needs gamma = 1".into()));
    }
    if instance.duration_mode() != DurationMode::Integer {
        return Err(Error::PreconditionViolated("invariant check needs integer durations".into()));
    }
    let ln_beta = params.beta.ln();
    let max_d = triples.iter().map(|t| t.d).max().unwrap_or(0);
    let rhs: Vec<f64> = (0..=max_d)
        .map(|d| {
            invariant_rhs(r, params.eta, params.beta, c_min, d).ok_or_else(|| {
                Error::PreconditionViolated(format!("log argument nonpositive at d = {d}"))
            })
        })
        .collect::<Result<_>>()?;
    let states = replay_states(instance, trace);
    let mut violations = Vec::new();
    for &tr in triples {
        let tl = &states[tr.job][tr.server];
        let tau = state_time(instance, tr.job) + tr.offset as f64;
        let lhs = (tl.projected_availability(tau + tr.d as f64) - tl.projected_availability(tau)) * ln_beta;
        let bound = rhs[tr.d as usize];
        if lhs > bound + FEASIBILITY_TOL {
            violations.push(InvariantViolation { triple: tr, lhs, rhs: bound });
        }
    }
    Ok(violations)
}

/// 1 + ln(∏_{k≤D}(1 − R/(k(R+η))) − (R+η)ln β/(R c_min))/ln β.
pub fn availability_floor(r: f64, d: u64, eta: f64, beta: f64, c_min: CMin) -> Option<f64> {
    invariant_rhs(r, eta, beta, c_min, d).map(|rhs| 1.0 - rhs / beta.ln())
}

/// Arrivals (job, server, availability) where current availability drops below the availability floor.
pub fn check_availability_floor(
    instance: &Instance,
    trace: &Trace,
    params: &FlbParams,
    r: f64,
    d: u64,
    c_min: CMin,
) -> Result<Vec<(usize, usize, f64)>> {
    let bound = availability_floor(r, d, params.eta, params.beta, c_min)
        .ok_or_else(|| Error::PreconditionViolated("log argument nonpositive".into()))?;
    let states = replay_states(instance, trace);
    let mut out = Vec::new();
    for (j, state) in states.iter().enumerate() {
        let t = state_time(instance, j);
        for (i, tl) in state.iter().enumerate() {
            let a = tl.projected_availability(t);
            if a < bound - FEASIBILITY_TOL {
                out.push((j, i, a));
            }
        }
    }
    Ok(out)
}
