#![allow(dead_code)]

use flb_core::{DurationMode, Instance, JobArrival, Offer};
use rand::seq::SliceRandom;
use rand::Rng;

/// A multiple of 1/4 in [1, r_max].
pub fn quarter_reward(rng: &mut impl Rng, r_max: f64) -> f64 {
    let steps = ((r_max - 1.0) * 4.0).floor() as u32;
    1.0 + rng.random_range(0..=steps) as f64 / 4.0
}

pub struct RandomSpec {
    pub servers: Vec<u32>,
    pub jobs: usize,
    pub r_max: f64,
    pub d_max: f64,
    pub mode: DurationMode,
    /// Mean gap between arrivals.
    pub gap: f64,
    /// Same (r, d) on every compatible server.
    pub uniform: bool,
    /// Every job compatible with every server.
    pub full_compat: bool,
}

pub fn random_instance(rng: &mut impl Rng, spec: &RandomSpec) -> Instance {
    let n = spec.servers.len();
    let mut t = 0.0;
    let mut jobs = Vec::with_capacity(spec.jobs);
    for _ in 0..spec.jobs {
        if rng.random_bool(0.8) {
            t += rng.random_range(0.0..2.0 * spec.gap);
            t = (t * 8.0).round() / 8.0;
        }
        let mut servers: Vec<usize> = (0..n).collect();
        if !spec.full_compat {
            servers.shuffle(rng);
            servers.truncate(rng.random_range(1..=n));
            servers.sort();
        }
        let draw_d = |rng: &mut _| match spec.mode {
            DurationMode::Integer => rng_int(rng, 1, spec.d_max as u32) as f64,
            DurationMode::Real => rng_real(rng, 1.0, spec.d_max),
        };
        let offers = if spec.uniform {
            let (r, d) = (quarter_reward(rng, spec.r_max), draw_d(rng));
            servers.iter().map(|&server| Offer { server, reward: r, duration: d }).collect()
        } else {
            servers
                .iter()
                .map(|&server| Offer { server, reward: quarter_reward(rng, spec.r_max), duration: draw_d(rng) })
                .collect()
        };
        jobs.push(JobArrival::new(t, offers));
    }
    Instance::new(spec.servers.clone(), jobs, spec.r_max, spec.d_max, spec.mode).expect("valid random instance")
}

fn rng_int<R: Rng>(rng: &mut R, lo: u32, hi: u32) -> u32 {
    rng.random_range(lo..=hi.max(lo))
}

fn rng_real<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}
