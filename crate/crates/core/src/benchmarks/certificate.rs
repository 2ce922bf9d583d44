//! Dual solutions built alongside an FLB run, and their verification.

use crate::error::{Error, Result};
use crate::model::{CMin, CommitMode, Instance, Trace};
use crate::params::{objective_int, objective_real, step_ratio};
use crate::policies::{inspection_times, FlbParams, Gamma};

use super::configurations::enumerate_configurations;
use super::opt::opt_exact;

/// Relative tolerance for certificate comparisons.
pub const CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DualStep {
    pub job: usize,
    pub server: usize,
    pub reward: f64,
    /// λ(j) + c_i·Δθ(i).
    pub delta_dual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub steps: Vec<DualStep>,
}

/// Replays the trace, setting λ(j) to the reduced reward of each assignment
/// and raising θ(i) by Σ_τ (Ψ(α − 1/c_i) − Ψ(α)) over its inspection times.
pub fn construct_dual(trace: &Trace, params: &FlbParams, inst: &Instance) -> Result<DualSolution> {
    let Gamma::Finite(g) = params.gamma else {
        return Err(Error::PreconditionViolated("dual construction needs finite gamma".into()));
    };
    let mut state = inst.empty_timelines();
    let mut lambda = vec![0.0; inst.jobs().len()];
    let mut theta = vec![0.0; inst.servers().len()];
    let mut steps = Vec::new();
    for d in &trace.decisions {
        let Some(i) = d.chosen else { continue };
        let o = inst.jobs()[d.job].offer(i).expect("compatible");
        let t = d.time;
        let tl = &state[i];
        if !tl.has_free_unit(t) {
            return Err(Error::NegativeAvailability { job: d.job, server: i });
        }
        let unit = 1.0 / tl.capacity() as f64;
        let (mut pen, mut dtheta) = (0.0, 0.0);
        for tau in inspection_times(t, o.duration, g) {
            let a = tl.projected_availability(tau);
            pen += params.penalty(a);
            dtheta += params.penalty(a - unit) - params.penalty(a);
        }
        lambda[d.job] = o.value() - pen;
        theta[i] += dtheta;
        steps.push(DualStep {
            job: d.job,
            server: i,
            reward: o.value(),
            delta_dual: lambda[d.job] + tl.capacity() as f64 * dtheta,
        });
        state[i]
            .commit(t, t + o.duration, CommitMode::Enforcing)
            .map_err(|_| Error::NegativeAvailability { job: d.job, server: i })?;
    }
    let objective = lambda.iter().sum::<f64>()
        + theta.iter().zip(inst.servers()).map(|(th, &c)| th * c as f64).sum::<f64>();
    Ok(DualSolution { lambda, theta, objective, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertMode {
    Int,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub alg_reward: f64,
    pub opt: Option<f64>,
    pub dual_objective: f64,
    /// Per-step bound Γ used for the increment check.
    pub step_bound: f64,
    /// Certified competitive-ratio bound at this instance's c_min.
    pub ratio_bound: f64,
    pub max_step_ratio: f64,
    /// min over nonempty configurations of slack·(Σλ_S + θ_i) − Σ_S r·d.
    pub worst_config_slack: f64,
    pub step_violations: usize,
    pub config_violations: usize,
    pub weak_duality_ok: bool,
    pub ratio_ok: bool,
}

impl CertificateReport {
    pub fn violations(&self) -> usize {
        self.step_violations + self.config_violations + usize::from(!self.weak_duality_ok) + usize::from(!self.ratio_ok)
    }
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + CERT_TOL * (1.0 + a.abs().max(b.abs()))
}

pub fn verify_certificate(
    dual: &DualSolution,
    trace: &Trace,
    inst: &Instance,
    params: &FlbParams,
    mode: CertMode,
) -> Result<CertificateReport> {
    let c_min = CMin::Finite(inst.c_min() as u64);
    let g = match params.gamma {
        Gamma::Finite(g) => g,
        Gamma::Infinite => return Err(Error::PreconditionViolated("certificate needs finite gamma".into())),
    };
    let (slack, ratio_bound) = match mode {
        CertMode::Int => (1.0, objective_int(params.eta, params.beta, c_min)),
        CertMode::Real if g >= 2 => {
            (g as f64 / (g as f64 - 1.0), objective_real(g, params.eta, params.beta, c_min))
        }
        CertMode::Real => return Err(Error::PreconditionViolated("real-mode certificate needs gamma >= 2".into())),
    };
    let step_bound = step_ratio(params, c_min);

    let mut max_step_ratio: f64 = 0.0;
    let mut step_violations = 0;
    for s in &dual.steps {
        max_step_ratio = max_step_ratio.max(s.delta_dual / s.reward);
        if !leq(s.delta_dual, step_bound * s.reward) {
            step_violations += 1;
        }
    }

    let mut worst_config_slack = f64::INFINITY;
    let mut config_violations = 0;
    for i in 0..inst.servers().len() {
        for cfg in enumerate_configurations(inst, i)? {
            if cfg.jobs.is_empty() {
                continue;
            }
            let lam: f64 = cfg.jobs.iter().map(|&j| dual.lambda[j]).sum();
            let val: f64 = cfg
                .jobs
                .iter()
                .map(|&j| inst.jobs()[j].offer(i).expect("compatible").value())
                .sum();
            let lhs = slack * (lam + dual.theta[i]);
            worst_config_slack = worst_config_slack.min(lhs - val);
            if !leq(val, lhs) {
                config_violations += 1;
            }
        }
    }
    if worst_config_slack.is_infinite() {
        worst_config_slack = 0.0;
    }

    let opt = opt_exact(inst).ok();
    let alg_reward = trace.total_reward;
    let (weak_duality_ok, ratio_ok) = match opt {
        Some(o) => (leq(o, slack * dual.objective), leq(o, ratio_bound * alg_reward)),
        None => (true, true),
    };
    Ok(CertificateReport {
        alg_reward,
        opt,
        dual_objective: dual.objective,
        step_bound,
        ratio_bound,
        max_step_ratio,
        worst_config_slack,
        step_violations,
        config_violations,
        weak_duality_ok,
        ratio_ok,
    })
}

/// CSV header matching [`certificate_csv_row`].
pub const CERTIFICATE_CSV_HEADER: &str = "instance_id,alg_reward,opt,dual_objective,max_step_ratio,worst_config_slack";

pub fn certificate_csv_row(id: &str, r: &CertificateReport) -> String {
    let opt = r.opt.map_or(String::new(), |o| o.to_string());
    format!(
        "{id},{},{opt},{},{},{}",
        r.alg_reward, r.dual_objective, r.max_step_ratio, r.worst_config_slack
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::model::JobArrival;
    use crate::policies::Policy;
    use std::f64::consts::E;

    #[test]
    fn single_job_dual() {
        let inst = Instance::infer(vec![1], vec![JobArrival::uniform(0.0, [0], 1.0, 1.0)]).unwrap();
        let p = FlbParams::new(Gamma::Finite(1), 1.0 / (E - 1.0), E).unwrap();
        let tr = run(&inst, &Policy::Flb(p), CommitMode::Enforcing).unwrap();
        let dual = construct_dual(&tr, &p, &inst).unwrap();
        assert_eq!(dual.lambda, vec![1.0]);
        assert!((dual.theta[0] - 1.0).abs() < 1e-15);
        assert!((dual.objective - 2.0).abs() < 1e-15);
        let rep = verify_certificate(&dual, &tr, &inst, &p, CertMode::Int).unwrap();
        let gamma = 1.0 + (1.0 / (E - 1.0)) * (1.0 + E * (E - 1.0));
        assert!((rep.step_bound - gamma).abs() < 1e-12);
        assert!((rep.step_bound - 4.300).abs() < 1e-3);
        assert!((rep.max_step_ratio - 2.0).abs() < 1e-12);
        assert_eq!(rep.violations(), 0);
        assert_eq!(rep.opt, Some(1.0));
    }

    #[test]
    fn empty_trace_dual_is_zero() {
        let inst = Instance::infer(vec![2], vec![]).unwrap();
        let p = FlbParams::new(Gamma::Finite(1), 1.0, E).unwrap();
        let dual = construct_dual(&Trace::default(), &p, &inst).unwrap();
        assert_eq!(dual.objective, 0.0);
        assert!(dual.theta.iter().all(|&t| t == 0.0));
        let rep = verify_certificate(&dual, &Trace::default(), &inst, &p, CertMode::Int).unwrap();
        assert_eq!(certificate_csv_row("empty", &rep), "empty,0,0,0,0,0");
    }

    #[test]
    fn over_assigned_trace_is_rejected() {
        let jobs = vec![JobArrival::uniform(0.0, [0], 1.0, 2.0), JobArrival::uniform(0.5, [0], 1.0, 2.0)];
        let inst = Instance::infer(vec![1], jobs).unwrap();
        let p = FlbParams::new(Gamma::Finite(1), 0.01, 1.01).unwrap();
        let tr = run(&inst, &Policy::Flb(p), CommitMode::Hypothetical).unwrap();
        assert_eq!(construct_dual(&tr, &p, &inst), Err(Error::NegativeAvailability { job: 1, server: 0 }));
    }
}
