//! Offline optimum.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{CommitMode, Instance, Offer};

/// Largest instance (jobs with a compatible server) handled by branch and bound.
pub const BRANCH_AND_BOUND_LIMIT: usize = 14;

/// Maximum total r·d over capacity-feasible assignments.
///
/// Uses a min-cost flow when every job offers the same (r, d) on all servers,
/// otherwise branch and bound on up to [`BRANCH_AND_BOUND_LIMIT`] jobs.
pub fn opt_exact(inst: &Instance) -> Result<f64> {
    if let Some(jobs) = pooled_jobs(inst) {
        if let Some(v) = common_point_opt(&jobs, inst.total_capacity()) {
            return Ok(v);
        }
        return Ok(flow_opt(&jobs, inst.total_capacity()));
    }
    let live = inst.jobs().iter().filter(|j| !j.offers.is_empty()).count();
    if live <= BRANCH_AND_BOUND_LIMIT {
        return Ok(branch_and_bound_opt(inst));
    }
    Err(Error::TooLarge(format!(
        "{live} jobs with heterogeneous offers exceed the branch-and-bound limit of {BRANCH_AND_BOUND_LIMIT}"
    )))
}

/// Min-cost-flow optimum; `TooLarge` unless servers are interchangeable.
pub fn opt_flow(inst: &Instance) -> Result<f64> {
    let jobs = pooled_jobs(inst)
        .ok_or_else(|| Error::TooLarge("offers differ across servers; flow model does not apply".into()))?;
    Ok(flow_opt(&jobs, inst.total_capacity()))
}

/// Branch-and-bound optimum; `TooLarge` beyond the job limit.
pub fn opt_branch_and_bound(inst: &Instance) -> Result<f64> {
    let live = inst.jobs().iter().filter(|j| !j.offers.is_empty()).count();
    if live > BRANCH_AND_BOUND_LIMIT {
        return Err(Error::TooLarge(format!("{live} jobs exceed {BRANCH_AND_BOUND_LIMIT}")));
    }
    Ok(branch_and_bound_opt(inst))
}

/// (start, end, value) per job when all servers are interchangeable, else None.
fn pooled_jobs(inst: &Instance) -> Option<Vec<(f64, f64, f64)>> {
    let n = inst.servers().len();
    let mut out = Vec::new();
    for job in inst.jobs() {
        let Some(first) = job.offers.first() else { continue };
        let same = |o: &Offer| o.reward == first.reward && o.duration == first.duration;
        if job.offers.len() != n || !job.offers.iter().all(same) {
            return None;
        }
        out.push((job.arrival_time, job.arrival_time + first.duration, first.value()));
    }
    Some(out)
}

/// When every interval contains a common point only `cap` jobs fit at once,
/// so the best `cap` values are optimal.
fn common_point_opt(jobs: &[(f64, f64, f64)], cap: u64) -> Option<f64> {
    if jobs.is_empty() {
        return None;
    }
    let last_start = jobs.iter().map(|j| j.0).fold(f64::NEG_INFINITY, f64::max);
    let first_end = jobs.iter().map(|j| j.1).fold(f64::INFINITY, f64::min);
    if last_start >= first_end {
        return None;
    }
    let mut vals: Vec<f64> = jobs.iter().map(|j| j.2).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Some(vals.iter().take(cap as usize).sum())
}

struct Arc {
    to: usize,
    cap: u64,
    cost: f64,
}

/// Successive shortest paths with potentials on the event-time DAG.
fn flow_opt(jobs: &[(f64, f64, f64)], cap: u64) -> f64 {
    if jobs.is_empty() {
        return 0.0;
    }
    let mut times: Vec<f64> = jobs.iter().flat_map(|j| [j.0, j.1]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let node = |t: f64| times.binary_search_by(|x| x.total_cmp(&t)).expect("event time");
    let n = times.len();
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, u: usize, v: usize, c: u64, w: f64| {
        adj[u].push(arcs.len());
        arcs.push(Arc { to: v, cap: c, cost: w });
        adj[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -w });
    };
    for k in 0..n - 1 {
        add(&mut arcs, &mut adj, k, k + 1, cap, 0.0);
    }
    for &(s, e, v) in jobs {
        add(&mut arcs, &mut adj, node(s), node(e), 1, -v);
    }
    // Initial potentials: forward arcs only go up in time, so one sweep suffices.
    let mut pot = vec![f64::INFINITY; n];
    pot[0] = 0.0;
    for u in 0..n {
        if pot[u].is_infinite() {
            continue;
        }
        for &a in &adj[u] {
            let arc = &arcs[a];
            if arc.cap > 0 && pot[u] + arc.cost < pot[arc.to] {
                pot[arc.to] = pot[u] + arc.cost;
            }
        }
    }
    let (src, sink) = (0, n - 1);
    let mut sent = 0u64;
    let mut total = 0.0;
    while sent < cap {
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Reverse((Key(0.0), src)));
        while let Some(Reverse((Key(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &a in &adj[u] {
                let arc = &arcs[a];
                if arc.cap == 0 {
                    continue;
                }
                let reduced = (arc.cost + pot[u] - pot[arc.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[arc.to] {
                    dist[arc.to] = nd;
                    prev[arc.to] = a;
                    heap.push(Reverse((Key(nd), arc.to)));
                }
            }
        }
        if dist[sink].is_infinite() {
            break;
        }
        for u in 0..n {
            if dist[u].is_finite() {
                pot[u] += dist[u];
            }
        }
        let path_cost = pot[sink] - pot[src];
        if path_cost >= 0.0 {
            break;
        }
        let mut push = cap - sent;
        let mut v = sink;
        while v != src {
            let a = prev[v];
            push = push.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = sink;
        let mut cost = 0.0;
        while v != src {
            let a = prev[v];
            arcs[a].cap -= push;
            arcs[a ^ 1].cap += push;
            cost += arcs[a].cost;
            v = arcs[a ^ 1].to;
        }
        total += cost * push as f64;
        sent += push;
    }
    0.0 - total
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn branch_and_bound_opt(inst: &Instance) -> f64 {
    let jobs: Vec<_> = inst.jobs().iter().filter(|j| !j.offers.is_empty()).collect();
    let best_val: Vec<f64> = jobs
        .iter()
        .map(|j| j.offers.iter().map(Offer::value).fold(0.0, f64::max))
        .collect();
    let mut remaining = vec![0.0; jobs.len() + 1];
    for k in (0..jobs.len()).rev() {
        remaining[k] = remaining[k + 1] + best_val[k];
    }
    let mut state = inst.empty_timelines();
    let mut best = 0.0;
    fn go(
        k: usize,
        acc: f64,
        jobs: &[&crate::model::JobArrival],
        remaining: &[f64],
        state: &mut Vec<crate::model::AvailabilityTimeline>,
        best: &mut f64,
    ) {
        if acc > *best {
            *best = acc;
        }
        if k == jobs.len() || acc + remaining[k] <= *best {
            return;
        }
        let job = jobs[k];
        let t = job.arrival_time;
        let mut offers: Vec<&Offer> = job.offers.iter().collect();
        offers.sort_by(|a, b| b.value().total_cmp(&a.value()));
        for o in offers {
            if state[o.server].has_free_unit(t) {
                let saved = state[o.server].clone();
                state[o.server]
                    .commit(t, t + o.duration, CommitMode::Enforcing)
                    .expect("free unit checked");
                go(k + 1, acc + o.value(), jobs, remaining, state, best);
                state[o.server] = saved;
            }
        }
        go(k + 1, acc, jobs, remaining, state, best);
    }
    go(0, 0.0, &jobs, &remaining, &mut state, &mut best);
    best
}
