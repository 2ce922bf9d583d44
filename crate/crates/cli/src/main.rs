//! `flb`: simulate, solve parameters, generate instances and run experiments.

mod config;
mod experiments;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flb_core::engine::{
    check_feasibility_condition_integer, check_feasibility_condition_real, check_invariant_integer, invariant_grid,
    run, trace_csv, Verdict,
};
use flb_core::format::{parse, render};
use flb_core::generators::{gen_batch_homogeneous, gen_lowerbound_distribution, gen_random_poisson, gen_worstcase_geometric};
use flb_core::params::{solve_fixed_reward_int, solve_fixed_reward_real, solve_flbopt_int, solve_flbopt_real};
use flb_core::{CMin, CommitMode, Gamma, Instance, Policy};

use config::Config;
use experiments::{Artifact, Kind};

#[derive(Parser)]
#[command(name = "flb", version, about = "Online assignment of reusable resources: policies, benchmarks, experiments")]
struct Cli {
    /// Overrides the seed of configs and random generators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write outputs here instead of stdout (experiments default to `results`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Restrict experiment artifacts to one kind; both are written by default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Run a policy over an instance file and print the decision trace as CSV.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        /// `flb:gamma=..,eta=..,beta=..`, `flb` (solved), `balance` or `greedy`.
        #[arg(long)]
        policy: String,
        /// Keep assigning past full capacity instead of failing.
        #[arg(long)]
        hypothetical: bool,
    },
    /// Solve for FLB parameters and print them as key=value lines.
    SolveParams {
        #[arg(long = "R", default_value_t = 1.0)]
        r: f64,
        #[arg(long = "D")]
        d: f64,
        #[arg(long, default_value = "inf")]
        cmin: CMin,
        #[arg(long, value_enum, default_value = "int")]
        mode: SolveMode,
    },
    /// Write a generated instance in the text format.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run an experiment from a key=value config.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
        /// Defaults to `experiments/<name>.conf`.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Feasibility condition or availability-invariant checks.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Int,
    Real,
    FixedInt,
    FixedReal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    Worstcase,
    Random,
    Certificates,
}

impl ExperimentName {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Worstcase => "worstcase",
            ExperimentName::Random => "random",
            ExperimentName::Certificates => "certificates",
        }
    }
}

#[derive(Subcommand)]
enum GenCommand {
    /// Geometric worst-case family, truncated after `truncate` jobs.
    Worstcase {
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long = "R", default_value_t = 10.0)]
        r: f64,
        #[arg(long = "D", default_value_t = 10.0)]
        d: f64,
        #[arg(long, default_value_t = 200)]
        c: u32,
        #[arg(long)]
        truncate: Option<usize>,
    },
    /// Instance `k` of the single-unit lower-bound distribution.
    Lowerbound {
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long = "R", default_value_t = 10.0)]
        r: f64,
        #[arg(long = "D", default_value_t = 10.0)]
        d: f64,
        #[arg(long)]
        k: usize,
    },
    /// Unit-reward batches of durations 1..=D.
    Batch {
        #[arg(long = "D")]
        d: u32,
        #[arg(long)]
        batch_size: usize,
        #[arg(long)]
        c: u32,
        #[arg(long)]
        truncate: Option<u32>,
    },
    /// Poisson arrivals on identical servers.
    Poisson {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        c: u32,
        #[arg(long, default_value_t = 500)]
        m: usize,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value = "1")]
    gamma: Gamma,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    beta: f64,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Verdict of the capacity-feasibility condition for explicit parameters.
    Feasibility {
        #[arg(long = "R")]
        r: f64,
        #[arg(long = "D")]
        d: f64,
        #[arg(long, default_value = "inf")]
        cmin: CMin,
        #[arg(long, value_enum, default_value = "int")]
        mode: DurationKind,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Replays FLB without capacity enforcement and checks the availability invariant on the full grid.
    Invariant {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: String,
        /// Defaults to the instance's reward bound.
        #[arg(long = "R")]
        r: Option<f64>,
        /// Defaults to the instance's smallest capacity.
        #[arg(long)]
        cmin: Option<CMin>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DurationKind {
    Int,
    Real,
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn instance_policy(spec: &str, inst: &Instance) -> Result<Policy> {
    experiments::resolve_policy(spec, inst.r_max(), inst.d_max(), CMin::Finite(inst.c_min() as u64), inst.duration_mode())
}

/// Prints to stdout, or writes `name` under `--out-dir` when given.
fn emit(out_dir: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact], format: Option<Format>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for a in artifacts {
        let keep = matches!(
            (format, &a.kind),
            (None, _) | (Some(Format::Csv), Kind::Csv) | (Some(Format::Svg), Kind::Svg)
        );
        if keep {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Returns the number of violations found.
fn execute(cli: Cli) -> Result<usize> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Simulate { instance, policy, hypothetical } => {
            let inst = read_instance(&instance)?;
            let policy = instance_policy(&policy, &inst)?;
            let mode = if hypothetical { CommitMode::Hypothetical } else { CommitMode::Enforcing };
            let trace = run(&inst, &policy, mode)?;
            emit(out_dir, "trace.csv", &trace_csv(&trace))?;
            eprintln!("policy {policy}: total reward {}", trace.total_reward);
            Ok(0)
        }
        Command::SolveParams { r, d, cmin, mode } => {
            let whole = || {
                if d.fract() != 0.0 {
                    bail!("--D must be an integer in integer modes");
                }
                Ok(d as u64)
            };
            let s = match mode {
                SolveMode::Int => solve_flbopt_int(r, whole()?, cmin)?,
                SolveMode::Real => solve_flbopt_real(r, d, cmin)?,
                SolveMode::FixedInt => solve_fixed_reward_int(whole()?)?,
                SolveMode::FixedReal => solve_fixed_reward_real(d)?,
            };
            emit(out_dir, "params.txt", &s.to_kv())?;
            Ok(0)
        }
        Command::Gen(g) => {
            let (name, text) = match g {
                GenCommand::Worstcase { m, r, d, c, truncate } => {
                    let k = truncate.unwrap_or(m);
                    (format!("worstcase_m{k}.txt"), render(&gen_worstcase_geometric(m, r, d, c, k)?))
                }
                GenCommand::Lowerbound { m, r, d, k } => {
                    let all = gen_lowerbound_distribution(m, r, d)?;
                    let Some((inst, p)) = k.checked_sub(1).and_then(|i| all.get(i)) else {
                        bail!("--k must lie in 1..={m}");
                    };
                    (format!("lowerbound_k{k}.txt"), format!("# probability={p}\n{}", render(inst)))
                }
                GenCommand::Batch { d, batch_size, c, truncate } => {
                    let k = truncate.unwrap_or(d);
                    (format!("batch_k{k}.txt"), render(&gen_batch_homogeneous(d, batch_size, c, k)?))
                }
                GenCommand::Poisson { n, c, m, rate, mu, sigma } => {
                    let seed = cli.seed.unwrap_or(0);
                    let inst = gen_random_poisson(n, c, m, rate, mu, sigma, seed)?;
                    (format!("poisson_seed{seed}.txt"), render(&inst))
                }
            };
            emit(out_dir, &name, &text)?;
            Ok(0)
        }
        Command::Experiment { name, config } => {
            let path = config.unwrap_or_else(|| PathBuf::from(format!("experiments/{}.conf", name.as_str())));
            let mut cfg = Config::load(&path)?;
            if let Some(seed) = cli.seed {
                cfg.set("seed", seed);
            }
            let outcome = match name {
                ExperimentName::Worstcase => experiments::worstcase(&cfg)?,
                ExperimentName::Random => experiments::random(&cfg)?,
                ExperimentName::Certificates => experiments::certificates(&cfg)?,
            };
            write_artifacts(out_dir.unwrap_or(Path::new("results")), &outcome.artifacts, cli.format)?;
            for line in &outcome.summary {
                println!("{line}");
            }
            Ok(outcome.violations)
        }
        Command::Check(CheckCommand::Feasibility { r, d, cmin, mode, params }) => {
            let verdict = match (mode, params.gamma) {
                (DurationKind::Int, _) => {
                    if d.fract() != 0.0 {
                        bail!("--D must be an integer in integer mode");
                    }
                    check_feasibility_condition_integer(r, d as u64, cmin, params.eta, params.beta)
                }
                (DurationKind::Real, Gamma::Finite(g)) => {
                    check_feasibility_condition_real(r, d, cmin, g, params.eta, params.beta)
                }
                (DurationKind::Real, Gamma::Infinite) => bail!("real-mode feasibility needs a finite gamma"),
            };
            println!("{verdict}");
            Ok(usize::from(verdict != Verdict::Feasible))
        }
        Command::Check(CheckCommand::Invariant { instance, policy, r, cmin }) => {
            let inst = read_instance(&instance)?;
            let Policy::Flb(params) = instance_policy(&policy, &inst)? else {
                bail!("the invariant is defined for FLB policies only");
            };
            let trace = run(&inst, &Policy::Flb(params), CommitMode::Hypothetical)?;
            let grid = invariant_grid(&inst);
            let cmin = cmin.unwrap_or(CMin::Finite(inst.c_min() as u64));
            let violations = check_invariant_integer(&inst, &trace, &params, r.unwrap_or(inst.r_max()), cmin, &grid)?;
            for v in &violations {
                println!(
                    "violation server={} job={} offset={} d={} lhs={} rhs={}",
                    v.triple.server, v.triple.job, v.triple.offset, v.triple.d, v.lhs, v.rhs
                );
            }
            println!("{} triples checked, {} violations", grid.len(), violations.len());
            Ok(violations.len())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
