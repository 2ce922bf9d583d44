//! Sets of jobs that can share a single capacity unit.

use crate::error::{Error, Result};
use crate::model::Instance;

pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub server: usize,
    /// Job positions in arrival order; occupancy intervals pairwise disjoint.
    pub jobs: Vec<usize>,
}

/// All feasible configurations on `server`, including the empty one.
pub fn enumerate_configurations(inst: &Instance, server: usize) -> Result<Vec<Configuration>> {
    let cand: Vec<(usize, f64, f64)> = inst
        .jobs()
        .iter()
        .enumerate()
        .filter_map(|(j, job)| job.offer(server).map(|o| (j, job.arrival_time, job.arrival_time + o.duration)))
        .collect();
    if cand.len() > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "{} compatible jobs on server {server} exceed {ENUMERATION_LIMIT}",
            cand.len()
        )));
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    // Arrival order means a set is disjoint iff each start is at or after the previous end.
    fn go(k: usize, free_from: f64, cand: &[(usize, f64, f64)], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cand.len() {
            out.push(cur.clone());
            return;
        }
        let (j, s, e) = cand[k];
        go(k + 1, free_from, cand, cur, out);
        if s >= free_from {
            cur.push(j);
            go(k + 1, e, cand, cur, out);
            cur.pop();
        }
    }
    go(0, f64::NEG_INFINITY, &cand, &mut cur, &mut out);
    Ok(out.into_iter().map(|jobs| Configuration { server, jobs }).collect())
}
