//! Line-oriented instance text format.
//!
//! ```text
//! # comment
//! servers: 4 4
//! r_max: 10          (optional, inferred when absent)
//! d_max: 10          (optional)
//! durations: integer (optional: integer | real)
//! 0 ; 0:1:2 ; 1:1.1:2
//! 0.5
//! ```
//!
//! Each job line is the arrival time followed by `server:reward:duration`
//! offers. Servers are zero-based. A bare time is a job with no compatible
//! server. Floats are written in shortest round-trip form.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::{DurationMode, Instance, JobArrival, Offer};

pub fn render(inst: &Instance) -> String {
    let mut out = String::new();
    let caps: Vec<String> = inst.servers().iter().map(|c| c.to_string()).collect();
    writeln!(out, "servers: {}", caps.join(" ")).unwrap();
    writeln!(out, "r_max: {}", inst.r_max()).unwrap();
    writeln!(out, "d_max: {}", inst.d_max()).unwrap();
    let mode = match inst.duration_mode() {
        DurationMode::Integer => "integer",
        DurationMode::Real => "real",
    };
    writeln!(out, "durations: {mode}").unwrap();
    for job in inst.jobs() {
        write!(out, "{}", job.arrival_time).unwrap();
        for o in &job.offers {
            write!(out, " ; {}:{}:{}", o.server, o.reward, o.duration).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<Instance> {
    let mut servers = None;
    let mut r_max = None;
    let mut d_max = None;
    let mut mode = None;
    let mut jobs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        if let Some((key, val)) = line.split_once(':').filter(|(k, _)| k.trim().chars().all(|c| c.is_ascii_alphabetic() || c == '_')) {
            match key.trim() {
                "servers" => {
                    let caps = val
                        .split_whitespace()
                        .map(|c| c.parse::<u32>().map_err(|_| err(format!("bad capacity {c:?}"))))
                        .collect::<Result<Vec<_>>>()?;
                    servers = Some(caps);
                }
                "r_max" => r_max = Some(num(val)?),
                "d_max" => d_max = Some(num(val)?),
                "durations" => {
                    mode = Some(match val.trim() {
                        "integer" => DurationMode::Integer,
                        "real" => DurationMode::Real,
                        v => return Err(err(format!("unknown duration mode {v:?}"))),
                    })
                }
                other => return Err(err(format!("unknown header {other:?}"))),
            }
            continue;
        }
        let mut fields = line.split(';');
        let t = num(fields.next().unwrap_or(""))?;
        let mut offers = Vec::new();
        for f in fields {
            let parts: Vec<&str> = f.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(err(format!("offer {f:?} is not server:reward:duration")));
            }
            let server = parts[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| err(format!("bad server {:?}", parts[0])))?;
            offers.push(Offer { server, reward: num(parts[1])?, duration: num(parts[2])? });
        }
        jobs.push(JobArrival::new(t, offers));
    }
    let servers = servers.ok_or(Error::Parse { line: 0, msg: "missing servers header".into() })?;
    let inferred = Instance::infer(servers.clone(), jobs.clone());
    match (r_max, d_max, mode) {
        (None, None, None) => inferred,
        _ => {
            let base = inferred.ok();
            let r = r_max.or(base.as_ref().map(|b| b.r_max())).unwrap_or(1.0);
            let d = d_max.or(base.as_ref().map(|b| b.d_max())).unwrap_or(1.0);
            let m = mode.or(base.as_ref().map(|b| b.duration_mode())).unwrap_or(DurationMode::Real);
            Instance::new(servers, jobs, r, d, m)
        }
    }
}
