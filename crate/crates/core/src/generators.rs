//! Instance families: adversarial geometric, lower-bound mixture, batched
//! homogeneous, and Poisson random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::model::{DurationMode, Instance, JobArrival};

/// Identifier of the generator behind [`gen_random_poisson`], for experiment metadata.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Gap between consecutive batch arrivals.
pub const BATCH_EPSILON: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Single server of capacity `c`; job j (1-based) arrives at (j−1)/M with
/// reward R^{t_j} and duration max(1, ⌊D^{t_j}⌋).
pub fn gen_worstcase_geometric(m: usize, r: f64, d: f64, c: u32, truncate_at: usize) -> Result<Instance> {
    if !(1..=m).contains(&truncate_at) {
        return Err(Error::InvalidParams(format!("truncate_at {truncate_at} outside [1, {m}]")));
    }
    let jobs = (0..truncate_at)
        .map(|k| {
            let t = k as f64 / m as f64;
            JobArrival::uniform(t, [0], r.powf(t), d.powf(t).floor().max(1.0))
        })
        .collect();
    Instance::new(vec![c], jobs, r, d, DurationMode::Integer)
}

/// The M-instance mixture on one unit-capacity server. In instance k, job j
/// arrives at j/M and is compatible only when j ≤ k, with reward R^{j/M} and
/// duration ⌊D^{j/M}⌋. Probabilities telescope to one.
pub fn gen_lowerbound_distribution(m: usize, r: f64, d: f64) -> Result<Vec<(Instance, f64)>> {
    if m == 0 {
        return Err(Error::InvalidParams("M must be at least 1".into()));
    }
    let value = |j: usize| {
        let x = j as f64 / m as f64;
        (r.powf(x), d.powf(x).floor().max(1.0))
    };
    let v: Vec<f64> = (1..=m).map(|j| {
        let (rr, dd) = value(j);
        rr * dd
    }).collect();
    let base = v[0];
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let p = if k < m { base / v[k - 1] - base / v[k] } else { base / v[m - 1] };
        let jobs = (1..=m)
            .map(|j| {
                let t = j as f64 / m as f64;
                if j <= k {
                    let (rr, dd) = value(j);
                    JobArrival::uniform(t, [0], rr, dd)
                } else {
                    JobArrival::new(t, vec![])
                }
            })
            .collect();
        out.push((Instance::new(vec![1], jobs, r, d, DurationMode::Integer)?, p));
    }
    let total: f64 = out.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 || out.iter().any(|(_, p)| *p <= 0.0) {
        return Err(Error::InvalidParams(format!("probabilities sum to {total}")));
    }
    Ok(out)
}

/// Batches 1..=truncate_batch of `batch_size` unit-reward jobs on one server;
/// batch d arrives at (d−1)·ε and has duration d.
pub fn gen_batch_homogeneous(d: u32, batch_size: usize, c: u32, truncate_batch: u32) -> Result<Instance> {
    if !(1..=d).contains(&truncate_batch) {
        return Err(Error::InvalidParams(format!("truncate_batch {truncate_batch} outside [1, {d}]")));
    }
    if batch_size <= c as usize {
        return Err(Error::InvalidParams("batch_size must exceed c".into()));
    }
    let jobs = (1..=truncate_batch)
        .flat_map(|b| {
            let t = (b - 1) as f64 * BATCH_EPSILON;
            (0..batch_size).map(move |_| JobArrival::uniform(t, [0], 1.0, b as f64))
        })
        .collect();
    Instance::new(vec![c], jobs, 1.0, d as f64, DurationMode::Integer)
}

/// Upper end of the truncated-normal support and of R and D.
pub const RANDOM_SUPPORT: f64 = 10.0;

/// Rejection sample from N(μ, σ) restricted to [0, 10].
pub fn sample_truncated_normal(rng: &mut impl Rng, normal: &Normal<f64>) -> f64 {
    loop {
        let x = normal.sample(rng);
        if (0.0..=RANDOM_SUPPORT).contains(&x) {
            return x;
        }
    }
}

/// `n` servers of capacity `c`, `m` jobs with exponential(rate) gaps. Each
/// job has one (r, d) shared by all servers: r = max(1, X), d = clamp(⌈Y⌉, 1, 10)
/// for independent X, Y from N(μ, σ) truncated to [0, 10].
pub fn gen_random_poisson(n: usize, c: u32, m: usize, rate: f64, mu: f64, sigma: f64, seed: u64) -> Result<Instance> {
    if n == 0 || c == 0 || rate.is_nan() || rate <= 0.0 || sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidParams("n, c, rate and sigma must be positive".into()));
    }
    let gaps = Exp::new(rate).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = rng(seed);
    let mut t = 0.0;
    let mut jobs = Vec::with_capacity(m);
    for _ in 0..m {
        t += gaps.sample(&mut rng);
        let r = sample_truncated_normal(&mut rng, &normal).max(1.0);
        let d = sample_truncated_normal(&mut rng, &normal).ceil().clamp(1.0, RANDOM_SUPPORT);
        jobs.push(JobArrival::uniform(t, 0..n, r, d));
    }
    Instance::new(vec![c; n], jobs, RANDOM_SUPPORT, RANDOM_SUPPORT, DurationMode::Integer)
}
