//! Instances, availability timelines and run traces.

use std::fmt;

use crate::error::{Error, Result};

/// One compatible (server, reward, duration) triple of a job.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offer {
    pub server: usize,
    pub reward: f64,
    pub duration: f64,
}

impl Offer {
    pub fn value(&self) -> f64 {
        self.reward * self.duration
    }
}

/// A job arrival. Its index is its position in [`Instance::jobs`].
#[derive(Debug, Clone, PartialEq)]
pub struct JobArrival {
    pub arrival_time: f64,
    /// Sorted by server, one entry per compatible server.
    pub offers: Vec<Offer>,
}

impl JobArrival {
    pub fn new(arrival_time: f64, mut offers: Vec<Offer>) -> Self {
        offers.sort_by_key(|o| o.server);
        JobArrival { arrival_time, offers }
    }

    /// The same reward and duration on every listed server.
    pub fn uniform(arrival_time: f64, servers: impl IntoIterator<Item = usize>, reward: f64, duration: f64) -> Self {
        let offers = servers
            .into_iter()
            .map(|server| Offer { server, reward, duration })
            .collect();
        Self::new(arrival_time, offers)
    }

    pub fn compat(&self) -> impl Iterator<Item = usize> + '_ {
        self.offers.iter().map(|o| o.server)
    }

    pub fn offer(&self, server: usize) -> Option<&Offer> {
        self.offers
            .binary_search_by_key(&server, |o| o.server)
            .ok()
            .map(|k| &self.offers[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationMode {
    Integer,
    Real,
}

/// Minimum server capacity, possibly taken to the large-capacity limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CMin {
    Finite(u64),
    Infinite,
}

impl CMin {
    /// 1/c_min, zero in the limit.
    pub fn recip(self) -> f64 {
        match self {
            CMin::Finite(c) => 1.0 / c as f64,
            CMin::Infinite => 0.0,
        }
    }
}

impl fmt::Display for CMin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CMin::Finite(c) => write!(f, "{c}"),
            CMin::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for CMin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "INF" => Ok(CMin::Infinite),
            v => v
                .parse::<u64>()
                .ok()
                .filter(|&c| c >= 1)
                .map(CMin::Finite)
                .ok_or_else(|| Error::InvalidParams(format!("bad c_min {v:?}"))),
        }
    }
}

/// A validated problem instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    servers: Vec<u32>,
    jobs: Vec<JobArrival>,
    r_max: f64,
    d_max: f64,
    duration_mode: DurationMode,
}

impl Instance {
    pub fn new(
        servers: Vec<u32>,
        jobs: Vec<JobArrival>,
        r_max: f64,
        d_max: f64,
        duration_mode: DurationMode,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if servers.is_empty() {
            return bad("no servers".into());
        }
        if servers.contains(&0) {
            return bad("server capacity must be at least 1".into());
        }
        if !(r_max >= 1.0 && r_max.is_finite() && d_max >= 1.0 && d_max.is_finite()) {
            return bad(format!("bounds R={r_max}, D={d_max} must be finite and >= 1"));
        }
        let mut last = 0.0;
        for (j, job) in jobs.iter().enumerate() {
            let t = job.arrival_time;
            if !(t.is_finite() && t >= last) {
                return bad(format!("job {j}: arrival time {t} not finite, nonnegative and nondecreasing"));
            }
            last = t;
            for w in job.offers.windows(2) {
                if w[0].server >= w[1].server {
                    return bad(format!("job {j}: offers not sorted by distinct server"));
                }
            }
            for o in &job.offers {
                if o.server >= servers.len() {
                    return bad(format!("job {j}: unknown server {}", o.server));
                }
                if !(1.0..=r_max).contains(&o.reward) {
                    return bad(format!("job {j}: reward {} outside [1, {r_max}]", o.reward));
                }
                if !(1.0..=d_max).contains(&o.duration) {
                    return bad(format!("job {j}: duration {} outside [1, {d_max}]", o.duration));
                }
                if duration_mode == DurationMode::Integer && o.duration.fract() != 0.0 {
                    return bad(format!("job {j}: duration {} not integral", o.duration));
                }
            }
        }
        Ok(Instance { servers, jobs, r_max, d_max, duration_mode })
    }

    /// Builds an instance with R, D and the duration mode read off the entries.
    pub fn infer(servers: Vec<u32>, jobs: Vec<JobArrival>) -> Result<Self> {
        let offers = || jobs.iter().flat_map(|j| j.offers.iter());
        let r_max = offers().map(|o| o.reward).fold(1.0, f64::max);
        let d_max = offers().map(|o| o.duration).fold(1.0, f64::max);
        let mode = if offers().all(|o| o.duration.fract() == 0.0) {
            DurationMode::Integer
        } else {
            DurationMode::Real
        };
        Self::new(servers, jobs, r_max, d_max, mode)
    }

    pub fn servers(&self) -> &[u32] {
        &self.servers
    }

    pub fn jobs(&self) -> &[JobArrival] {
        &self.jobs
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn duration_mode(&self) -> DurationMode {
        self.duration_mode
    }

    pub fn c_min(&self) -> u32 {
        *self.servers.iter().min().expect("nonempty")
    }

    pub fn total_capacity(&self) -> u64 {
        self.servers.iter().map(|&c| c as u64).sum()
    }

    /// The first `m` jobs, with the same bounds and mode.
    pub fn truncated(&self, m: usize) -> Instance {
        Instance {
            jobs: self.jobs[..m.min(self.jobs.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn empty_timelines(&self) -> Vec<AvailabilityTimeline> {
        self.servers.iter().map(|&c| AvailabilityTimeline::new(c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitMode {
    /// Refuse to start a job on a server with no free unit.
    Enforcing,
    /// Accept every commit; availability may go negative.
    Hypothetical,
}

/// Returned by an enforcing commit on a saturated server.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("no free unit at time {at}")]
pub struct Saturated {
    pub at: f64,
}

/// Busy-until times of one server's active assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityTimeline {
    capacity: u32,
    busy_until: Vec<f64>,
}

impl AvailabilityTimeline {
    pub fn new(capacity: u32) -> Self {
        assert!(capacity >= 1, "capacity must be positive");
        AvailabilityTimeline { capacity, busy_until: Vec::new() }
    }

    pub fn with_busy(capacity: u32, busy: impl IntoIterator<Item = f64>) -> Self {
        let mut tl = Self::new(capacity);
        tl.busy_until.extend(busy);
        tl.busy_until.sort_by(f64::total_cmp);
        tl
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Sorted ascending.
    pub fn busy_until(&self) -> &[f64] {
        &self.busy_until
    }

    /// Units still held strictly after `tau`.
    pub fn busy_after(&self, tau: f64) -> usize {
        self.busy_until.len() - self.busy_until.partition_point(|&e| e <= tau)
    }

    /// α at `tau`: one minus the held fraction, with release at exactly the end time.
    pub fn projected_availability(&self, tau: f64) -> f64 {
        1.0 - self.busy_after(tau) as f64 / self.capacity as f64
    }

    pub fn has_free_unit(&self, at: f64) -> bool {
        self.busy_after(at) < self.capacity as usize
    }

    pub fn commit(&mut self, start: f64, end: f64, mode: CommitMode) -> std::result::Result<(), Saturated> {
        debug_assert!(end >= start);
        if mode == CommitMode::Enforcing && !self.has_free_unit(start) {
            return Err(Saturated { at: start });
        }
        let k = self.busy_until.partition_point(|&e| e <= end);
        self.busy_until.insert(k, end);
        Ok(())
    }
}

/// One arrival's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    /// Zero-based job position.
    pub job: usize,
    pub time: f64,
    pub chosen: Option<usize>,
    /// Score of every considered server, in server order.
    pub scores: Vec<(usize, f64)>,
    /// (τ, α) on the chosen server before the commit: inspection times for
    /// discrete FLB, segment starts for continuous FLB, the arrival otherwise.
    pub snapshots: Vec<(f64, f64)>,
    pub reward: f64,
    /// Smallest current availability over all servers after the decision.
    pub min_availability_after: f64,
}

impl DecisionRecord {
    pub fn chosen_score(&self) -> Option<f64> {
        let i = self.chosen?;
        self.scores.iter().find(|(s, _)| *s == i).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub decisions: Vec<DecisionRecord>,
    pub total_reward: f64,
}

impl Trace {
    pub fn assigned(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.decisions.iter().filter_map(|d| d.chosen.map(|i| (d.job, i)))
    }

    /// Reward collected by the first `m` decisions.
    pub fn prefix_rewards(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.decisions
            .iter()
            .map(|d| {
                acc += d.reward;
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_timeline_is_fully_available() {
        let tl = AvailabilityTimeline::new(3);
        for tau in [0.0, 1.5, 1e9] {
            assert_eq!(tl.projected_availability(tau), 1.0);
        }
    }

    #[test]
    fn release_at_end_time() {
        let tl = AvailabilityTimeline::with_busy(4, [4.8, 5.0]);
        assert_eq!(tl.projected_availability(5.0), 1.0);
        assert_eq!(tl.projected_availability(4.9), 0.75);
        let tl = AvailabilityTimeline::with_busy(4, [5.2, 6.3]);
        assert_eq!(tl.projected_availability(5.0), 0.5);
    }

    #[test]
    fn commit_modes() {
        let mut tl = AvailabilityTimeline::new(1);
        tl.commit(0.0, 2.0, CommitMode::Enforcing).unwrap();
        assert_eq!(tl.busy_until(), &[2.0]);
        assert_eq!(tl.commit(1.0, 3.0, CommitMode::Enforcing), Err(Saturated { at: 1.0 }));
        tl.commit(1.0, 3.0, CommitMode::Hypothetical).unwrap();
        assert_eq!(tl.busy_until(), &[2.0, 3.0]);
        assert_eq!(tl.projected_availability(1.5), -1.0);
    }

    #[test]
    fn validation_rejects_bad_entries() {
        let job = |t, r, d| JobArrival::uniform(t, [0], r, d);
        let inst = |jobs| Instance::new(vec![1], jobs, 2.0, 2.0, DurationMode::Integer);
        assert!(inst(vec![job(0.0, 1.0, 1.0)]).is_ok());
        assert!(inst(vec![job(0.0, 3.0, 1.0)]).is_err());
        assert!(inst(vec![job(0.0, 1.0, 1.5)]).is_err());
        assert!(inst(vec![job(1.0, 1.0, 1.0), job(0.5, 1.0, 1.0)]).is_err());
        assert!(inst(vec![JobArrival::uniform(0.0, [1], 1.0, 1.0)]).is_err());
        assert!(Instance::new(vec![0], vec![], 1.0, 1.0, DurationMode::Real).is_err());
    }

    #[test]
    fn infer_reads_bounds() {
        let inst = Instance::infer(vec![2, 3], vec![JobArrival::uniform(0.0, [0, 1], 2.5, 1.5)]).unwrap();
        assert_eq!((inst.r_max(), inst.d_max()), (2.5, 1.5));
        assert_eq!(inst.duration_mode(), DurationMode::Real);
        assert_eq!(inst.c_min(), 2);
    }
}
