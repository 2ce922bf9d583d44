//! Experiment drivers. Each returns its artifacts in memory; the caller writes them.

use std::f64::consts::E;

use anyhow::{bail, Context, Result};
use flb_core::benchmarks::{
    certificate_csv_row, construct_dual, opt_exact, verify_certificate, CertMode, CertificateReport,
    CERTIFICATE_CSV_HEADER,
};
use flb_core::engine::run;
use flb_core::generators::{gen_random_poisson, gen_worstcase_geometric, rng, RNG_ALGORITHM};
use flb_core::params::{solve_flbopt_int, solve_flbopt_real, with_saturation_guard};
use flb_core::{CMin, CommitMode, DurationMode, FlbParams, Gamma, Instance, JobArrival, Offer, Policy};
use rand::Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::svg::{Chart, Series};

pub enum Kind {
    Csv,
    Svg,
}

pub struct Artifact {
    pub name: String,
    pub kind: Kind,
    pub contents: String,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
    pub violations: usize,
}

fn csv(name: &str, contents: String) -> Artifact {
    Artifact { name: name.into(), kind: Kind::Csv, contents }
}

fn svg(name: &str, contents: String) -> Artifact {
    Artifact { name: name.into(), kind: Kind::Svg, contents }
}

fn metadata(experiment: &str, cfg: &Config) -> String {
    format!("# experiment={experiment} rng={RNG_ALGORITHM} {}\n", cfg.summary())
}

/// FLB parameters for capacity `c_min`: the finite-capacity solution when one
/// exists, else the large-capacity one raised until a full server still scores
/// every job nonpositive.
pub fn auto_flb(r: f64, d: f64, c_min: CMin, mode: DurationMode) -> Result<FlbParams> {
    let solve = |c| match mode {
        DurationMode::Integer => solve_flbopt_int(r, d.ceil() as u64, c),
        DurationMode::Real => solve_flbopt_real(r, d, c),
    };
    match solve(c_min) {
        Ok(s) => Ok(s.flb()),
        Err(_) => Ok(with_saturation_guard(solve(CMin::Infinite)?.flb(), r, d)),
    }
}

/// A bare `flb` resolves through [`auto_flb`]; anything else goes to the policy parser.
pub fn resolve_policy(spec: &str, r: f64, d: f64, c_min: CMin, mode: DurationMode) -> Result<Policy> {
    if spec.trim() == "flb" {
        return Ok(Policy::Flb(auto_flb(r, d, c_min, mode)?));
    }
    Policy::parse(spec, r, d).with_context(|| format!("policy {spec:?}"))
}

pub fn worstcase(cfg: &Config) -> Result<Outcome> {
    let m: usize = cfg.get("M")?;
    let (r, d): (f64, f64) = (cfg.get("R")?, cfg.get("D")?);
    let c: u32 = cfg.get("c")?;
    let names = cfg.words("policies")?;
    let inst = gen_worstcase_geometric(m, r, d, c, m)?;
    let policies: Vec<Policy> = names
        .iter()
        .map(|s| resolve_policy(s, r, d, CMin::Finite(c as u64), DurationMode::Integer))
        .collect::<Result<_>>()?;
    // Decisions on job j see only jobs before it, so one run yields every truncation.
    let prefixes: Vec<Vec<f64>> = policies
        .iter()
        .map(|p| run(&inst, p, CommitMode::Enforcing).map(|t| t.prefix_rewards()))
        .collect::<flb_core::Result<_>>()?;
    let opts: Vec<f64> = (1..=m).into_par_iter().map(|k| opt_exact(&inst.truncated(k))).collect::<flb_core::Result<_>>()?;

    let mut out = metadata("worstcase", cfg);
    out.push_str("m,policy,reward,opt,ratio\n");
    let mut series: Vec<Series> =
        names.iter().map(|n| Series { label: n.clone(), points: Vec::with_capacity(m), band: vec![] }).collect();
    let mut worst = vec![(f64::INFINITY, 0usize); policies.len()];
    for k in 1..=m {
        for (i, p) in policies.iter().enumerate() {
            let (reward, opt) = (prefixes[i][k - 1], opts[k - 1]);
            let ratio = reward / opt;
            out.push_str(&format!("{k},{},{reward},{opt},{ratio}\n", p.name()));
            series[i].points.push((k as f64, ratio));
            if ratio < worst[i].0 {
                worst[i] = (ratio, k);
            }
        }
    }
    let reference = 1.0 / (r * d).ln();
    let chart = Chart {
        title: format!("Worst-case family: M={m}, R={r}, D={d}, c={c}"),
        x_label: "truncation m".into(),
        y_label: "ratio to OPT".into(),
        series,
        reference: Some((format!("1/ln(RD) = {reference:.3}"), reference)),
    };
    let summary = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let (w, k) = worst[i];
            format!("{n}: min ratio {w:.4} at m={k}, at m={m} {:.4}", prefixes[i][m - 1] / opts[m - 1])
        })
        .collect();
    Ok(Outcome {
        artifacts: vec![csv("worstcase.csv", out), svg("worstcase.svg", chart.render())],
        summary,
        violations: 0,
    })
}

/// Seed for one (rate, trial) cell; shared across capacities so capacity
/// levels see the same arrival streams.
pub fn cell_seed(base: u64, rate_index: usize, trial: usize) -> u64 {
    let mut z = base ^ ((rate_index as u64) << 32) ^ trial as u64;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct Interval {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Normal-approximation 95% interval for the mean.
pub fn interval(xs: &[f64]) -> Interval {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let half = 1.96 * sd / n.sqrt();
    Interval { mean, sd, lo: mean - half, hi: mean + half }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() { sorted[i] + frac * (sorted[i + 1] - sorted[i]) } else { sorted[i] }
}

fn parse_box_pairs(cfg: &Config) -> Result<Vec<(u32, f64)>> {
    if cfg.raw("box_pairs").is_none() {
        return Ok(vec![]);
    }
    cfg.words("box_pairs")?
        .iter()
        .map(|w| {
            let (c, r) = w.split_once('/').with_context(|| format!("box pair {w:?} is not c/rate"))?;
            Ok((c.parse()?, r.parse()?))
        })
        .collect()
}

pub fn random(cfg: &Config) -> Result<Outcome> {
    let n: usize = cfg.get("n")?;
    let m: usize = cfg.get("m")?;
    let caps: Vec<u32> = cfg.list("c")?;
    let rates: Vec<f64> = cfg.list("rates")?;
    let trials: usize = cfg.get("trials")?;
    let seed: u64 = cfg.get("seed")?;
    let (mu, sigma): (f64, f64) = (cfg.get_or("mu", 2.0)?, cfg.get_or("sigma", 3.0)?);
    let names = cfg.words("policies")?;
    let boxes = parse_box_pairs(cfg)?;
    if trials == 0 || caps.is_empty() || rates.is_empty() {
        bail!("random experiment needs trials > 0 and nonempty c and rates");
    }
    let (r, d) = (10.0, 10.0);

    let mut cells = Vec::new();
    for &c in &caps {
        let policies: Vec<Policy> = names
            .iter()
            .map(|s| resolve_policy(s, r, d, CMin::Finite(c as u64), DurationMode::Integer))
            .collect::<Result<_>>()?;
        for (ri, &rate) in rates.iter().enumerate() {
            for trial in 0..trials {
                cells.push((c, ri, rate, trial, policies.clone()));
            }
        }
    }
    let ratios: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|(c, ri, rate, trial, policies)| {
            let inst = gen_random_poisson(n, *c, m, *rate, mu, sigma, cell_seed(seed, *ri, *trial))?;
            let opt = opt_exact(&inst)?;
            policies
                .iter()
                .map(|p| run(&inst, p, CommitMode::Enforcing).map(|t| if opt > 0.0 { t.total_reward / opt } else { 1.0 }))
                .collect()
        })
        .collect::<flb_core::Result<_>>()?;

    let mut out = metadata("random", cfg);
    out.push_str("c,rate,policy,trials,mean,sd,ci_low,ci_high\n");
    let mut box_raw = metadata("random_box", cfg);
    box_raw.push_str("c,rate,trial,policy,ratio\n");
    let mut box_summary = metadata("random_box_summary", cfg);
    box_summary.push_str("c,rate,policy,min,q1,median,q3,max\n");
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for (ci, &c) in caps.iter().enumerate() {
        let mut series: Vec<Series> =
            names.iter().map(|n| Series { label: n.clone(), points: vec![], band: vec![] }).collect();
        for (ri, &rate) in rates.iter().enumerate() {
            let base = (ci * rates.len() + ri) * trials;
            let block = &ratios[base..base + trials];
            let is_box = boxes.iter().any(|&(bc, br)| bc == c && br == rate);
            for (pi, name) in names.iter().enumerate() {
                let xs: Vec<f64> = block.iter().map(|row| row[pi]).collect();
                let iv = interval(&xs);
                out.push_str(&format!("{c},{rate},{name},{trials},{},{},{},{}\n", iv.mean, iv.sd, iv.lo, iv.hi));
                series[pi].points.push((rate, iv.mean));
                series[pi].band.push((rate, iv.lo, iv.hi));
                if is_box {
                    for (t, x) in xs.iter().enumerate() {
                        box_raw.push_str(&format!("{c},{rate},{t},{name},{x}\n"));
                    }
                    let mut s = xs.clone();
                    s.sort_by(f64::total_cmp);
                    box_summary.push_str(&format!(
                        "{c},{rate},{name},{},{},{},{},{}\n",
                        s[0],
                        quantile(&s, 0.25),
                        quantile(&s, 0.5),
                        quantile(&s, 0.75),
                        s[s.len() - 1]
                    ));
                }
            }
        }
        for s in &series {
            let best = s.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            summary.push(format!("c={c} {}: lowest mean ratio {best:.4}", s.label));
        }
        let chart = Chart {
            title: format!("Random instances: n={n}, c={c}, m={m}, {trials} trials"),
            x_label: "arrival rate".into(),
            y_label: "mean ratio to OPT (95% CI)".into(),
            series,
            reference: None,
        };
        artifacts.push(svg(&format!("random_c{c}.svg"), chart.render()));
    }
    artifacts.insert(0, csv("random.csv", out));
    if !boxes.is_empty() {
        artifacts.insert(1, csv("random_box.csv", box_raw));
        artifacts.insert(2, csv("random_box_summary.csv", box_summary));
    }
    Ok(Outcome { artifacts, summary, violations: 0 })
}

/// Small instance for the certificate suite: integer durations, rewards on a 1/4 grid.
pub fn small_instance(rng: &mut impl Rng, max_servers: usize, max_capacity: u32, max_jobs: usize, r_max: f64, d_max: u32) -> Instance {
    let n = rng.random_range(1..=max_servers);
    let servers: Vec<u32> = (0..n).map(|_| rng.random_range(1..=max_capacity)).collect();
    let jobs = rng.random_range(1..=max_jobs);
    let steps = ((r_max - 1.0) * 4.0).floor() as u32;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        t += rng.random_range(0..=4) as f64 / 4.0;
        let mut offers = Vec::new();
        for server in 0..n {
            if rng.random_bool(0.7) {
                let reward = 1.0 + rng.random_range(0..=steps) as f64 / 4.0;
                let duration = rng.random_range(1..=d_max) as f64;
                offers.push(Offer { server, reward, duration });
            }
        }
        out.push(JobArrival::new(t, offers));
    }
    Instance::new(servers, out, r_max, d_max as f64, DurationMode::Integer).expect("generated instance is valid")
}

pub fn certify(inst: &Instance, params: &FlbParams, mode: CertMode) -> Result<CertificateReport> {
    let trace = run(inst, &Policy::Flb(*params), CommitMode::Enforcing)?;
    let dual = construct_dual(&trace, params, inst)?;
    Ok(verify_certificate(&dual, &trace, inst, params, mode)?)
}

fn fixed_examples() -> Result<Vec<(&'static str, Instance)>> {
    Ok(vec![
        ("single_job", Instance::new(vec![1], vec![JobArrival::uniform(0.0, [0], 1.0, 1.0)], 1.0, 1.0, DurationMode::Integer)?),
        (
            "disjoint_pair",
            Instance::new(
                vec![1],
                vec![JobArrival::uniform(0.0, [0], 1.0, 1.0), JobArrival::uniform(1.0, [0], 1.0, 1.0)],
                1.0,
                1.0,
                DurationMode::Integer,
            )?,
        ),
        ("empty", Instance::new(vec![1], vec![], 1.0, 1.0, DurationMode::Integer)?),
    ])
}

pub fn certificates(cfg: &Config) -> Result<Outcome> {
    let count: usize = cfg.get("instances")?;
    let seed: u64 = cfg.get("seed")?;
    let max_jobs: usize = cfg.get_or("max_jobs", 10)?;
    let max_servers: usize = cfg.get_or("max_servers", 2)?;
    let max_capacity: u32 = cfg.get_or("max_capacity", 3)?;
    let d_choices: Vec<u32> = cfg.list("d_max")?;
    let r_choices: Vec<f64> = cfg.list("r_max")?;

    let unit = FlbParams::new(Gamma::Finite(1), 1.0 / (E - 1.0), E)?;
    let mut rows = Vec::new();
    for (id, inst) in fixed_examples()? {
        rows.push((id.to_string(), certify(&inst, &unit, CertMode::Int)?));
    }
    let mut g = rng(seed);
    let mut jobs = Vec::with_capacity(count);
    for k in 0..count {
        let r = r_choices[g.random_range(0..r_choices.len())];
        let d = d_choices[g.random_range(0..d_choices.len())];
        let inst = small_instance(&mut g, max_servers, max_capacity, max_jobs, r, d);
        jobs.push((k, r, d, inst));
    }
    let random_rows: Vec<(String, CertificateReport)> = jobs
        .par_iter()
        .map(|(k, r, d, inst)| {
            let c_min = CMin::Finite(inst.c_min() as u64);
            // Odd instances exercise the real-duration certificate, which needs gamma >= 2.
            let (params, mode) = if k % 2 == 1 {
                (auto_flb(*r, (*d as f64).max(2.0), c_min, DurationMode::Real)?, CertMode::Real)
            } else {
                (auto_flb(*r, *d as f64, c_min, DurationMode::Integer)?, CertMode::Int)
            };
            Ok((format!("random_{k:04}"), certify(inst, &params, mode)?))
        })
        .collect::<Result<_>>()?;
    rows.extend(random_rows);

    let mut out = metadata("certificates", cfg);
    out.push_str(CERTIFICATE_CSV_HEADER);
    out.push('\n');
    let mut violations = 0;
    let mut worst_ratio = f64::INFINITY;
    for (id, rep) in &rows {
        out.push_str(&certificate_csv_row(id, rep));
        out.push('\n');
        violations += rep.violations();
        if let Some(o) = rep.opt.filter(|&o| o > 0.0) {
            worst_ratio = worst_ratio.min(rep.alg_reward * rep.ratio_bound / o);
        }
    }
    let summary = vec![
        format!("{} instances, {violations} violations", rows.len()),
        format!("minimum alg·bound/opt {worst_ratio:.4} (at least 1 when the ratio guarantee holds)"),
    ];
    Ok(Outcome { artifacts: vec![csv("certificates.csv", out)], summary, violations })
}
