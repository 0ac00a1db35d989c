//! Line-oriented plan log.
//!
//! ```text
//! waiterplan-plan-log 1
//! scenario desk tray
//! seed 0
//! joints 3
//! iter 0 feasible constraints=60 max=-0.0012 q0=0,0.3,-0.3 v0=0,0,0 a0=0,0,0 waypoint=0.1,0.3,-0.3 k=1,0,0
//! iter 1 braking constraints=60 max=0.04 q0=... v0=... a0=... waypoint=...
//! outcome safe_stop
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a written log parses
//! back to identical values. Lines starting with `#` and blank lines are ignored.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::traj::InitialCondition;

pub const PLAN_LOG_HEADER: &str = "waiterplan-plan-log 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationStatus {
    Feasible,
    Braking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    GoalReached,
    SafeStop,
    IterationCap,
}

impl Outcome {
    fn as_str(self) -> &'static str {
        match self {
            Outcome::GoalReached => "goal_reached",
            Outcome::SafeStop => "safe_stop",
            Outcome::IterationCap => "iteration_cap",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationEntry {
    pub iteration: usize,
    pub status: IterationStatus,
    pub ic: InitialCondition,
    pub waypoint: Vec<f64>,
    /// Present exactly for feasible iterations.
    pub k: Option<Vec<f64>>,
    pub max_constraint: f64,
    pub n_constraints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanLog {
    pub scenario: String,
    pub seed: u64,
    pub n_q: usize,
    pub entries: Vec<IterationEntry>,
    pub outcome: Outcome,
}

fn join(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{x}").expect("string write");
    }
    s
}

impl PlanLog {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{PLAN_LOG_HEADER}");
        let _ = writeln!(s, "scenario {}", self.scenario.replace('\n', " "));
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "joints {}", self.n_q);
        for e in &self.entries {
            let status = match e.status {
                IterationStatus::Feasible => "feasible",
                IterationStatus::Braking => "braking",
            };
            let _ = write!(
                s,
                "iter {} {status} constraints={} max={} q0={} v0={} a0={} waypoint={}",
                e.iteration,
                e.n_constraints,
                e.max_constraint,
                join(&e.ic.q0),
                join(&e.ic.v0),
                join(&e.ic.a0),
                join(&e.waypoint)
            );
            if let Some(k) = &e.k {
                let _ = write!(s, " k={}", join(k));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "outcome {}", self.outcome);
        s
    }

    pub fn parse(text: &str) -> Result<PlanLog> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: String| Error::PlanLog { line, message };
        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty plan log".into()))?;
        if header.trim() != PLAN_LOG_HEADER {
            return Err(err(ln, format!("expected header `{PLAN_LOG_HEADER}`")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, format!("missing `{key}` line")))?;
            match l.split_once(' ') {
                Some((k, v)) if k == key => Ok((ln, v.to_string())),
                None if l == key => Ok((ln, String::new())),
                _ => Err(err(ln, format!("expected `{key} ...`"))),
            }
        };
        let (_, scenario) = field("scenario")?;
        let (ln_seed, seed) = field("seed")?;
        let seed = seed.trim().parse::<u64>().map_err(|e| err(ln_seed, format!("bad seed: {e}")))?;
        let (ln_j, joints) = field("joints")?;
        let n_q = joints.trim().parse::<usize>().map_err(|e| err(ln_j, format!("bad joint count: {e}")))?;
        if n_q == 0 || n_q > 64 {
            return Err(err(ln_j, format!("joint count {n_q} out of range")));
        }
        let mut entries = Vec::new();
        let mut outcome = None;
        for (ln, l) in lines {
            if outcome.is_some() {
                return Err(err(ln, "content after the outcome line".into()));
            }
            let mut tok = l.split_whitespace();
            match tok.next() {
                Some("iter") => entries.push(parse_entry(&mut tok, n_q, entries.len()).map_err(|m| err(ln, m))?),
                Some("outcome") => {
                    outcome = Some(match (tok.next(), tok.next()) {
                        (Some("goal_reached"), None) => Outcome::GoalReached,
                        (Some("safe_stop"), None) => Outcome::SafeStop,
                        (Some("iteration_cap"), None) => Outcome::IterationCap,
                        _ => return Err(err(ln, "unknown outcome".into())),
                    })
                }
                _ => return Err(err(ln, format!("unexpected line `{l}`"))),
            }
        }
        let outcome = outcome.ok_or_else(|| err(text.lines().count().max(1), "missing outcome line".into()))?;
        Ok(PlanLog { scenario, seed, n_q, entries, outcome })
    }
}

fn parse_vec(v: &str, n: usize, key: &str) -> std::result::Result<Vec<f64>, String> {
    let out = v
        .split(',')
        .map(|x| x.parse::<f64>().map_err(|e| format!("{key}: bad number `{x}`: {e}")))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if out.len() != n {
        return Err(format!("{key}: {} entries for {n} joints", out.len()));
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(format!("{key}: entries must be finite"));
    }
    Ok(out)
}

fn parse_entry<'a>(
    tok: &mut impl Iterator<Item = &'a str>,
    n: usize,
    expected: usize,
) -> std::result::Result<IterationEntry, String> {
    let iteration: usize =
        tok.next().ok_or("missing iteration index")?.parse().map_err(|e| format!("bad iteration index: {e}"))?;
    if iteration != expected {
        return Err(format!("iteration {iteration} out of order (expected {expected})"));
    }
    let status = match tok.next() {
        Some("feasible") => IterationStatus::Feasible,
        Some("braking") => IterationStatus::Braking,
        other => return Err(format!("unknown status {other:?}")),
    };
    let (mut n_constraints, mut max, mut q0, mut v0, mut a0, mut waypoint, mut k) = (None, None, None, None, None, None, None);
    for t in tok {
        let (key, val) = t.split_once('=').ok_or_else(|| format!("expected key=value, got `{t}`"))?;
        let dup = match key {
            "constraints" => n_constraints.replace(val.parse::<usize>().map_err(|e| format!("constraints: {e}"))?).is_some(),
            "max" => max.replace(val.parse::<f64>().map_err(|e| format!("max: {e}"))?).is_some(),
            "q0" => q0.replace(parse_vec(val, n, key)?).is_some(),
            "v0" => v0.replace(parse_vec(val, n, key)?).is_some(),
            "a0" => a0.replace(parse_vec(val, n, key)?).is_some(),
            "waypoint" => waypoint.replace(parse_vec(val, n, key)?).is_some(),
            "k" => k.replace(parse_vec(val, n, key)?).is_some(),
            _ => return Err(format!("unknown key `{key}`")),
        };
        if dup {
            return Err(format!("duplicate key `{key}`"));
        }
    }
    let missing = |name: &str| format!("missing `{name}`");
    if let Some(k) = &k {
        if k.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err("k outside [-1, 1]".into());
        }
    }
    match (status, &k) {
        (IterationStatus::Feasible, None) => return Err("feasible iteration without k".into()),
        (IterationStatus::Braking, Some(_)) => return Err("braking iteration with k".into()),
        _ => {}
    }
    Ok(IterationEntry {
        iteration,
        status,
        ic: InitialCondition {
            q0: q0.ok_or_else(|| missing("q0"))?,
            v0: v0.ok_or_else(|| missing("v0"))?,
            a0: a0.ok_or_else(|| missing("a0"))?,
        },
        waypoint: waypoint.ok_or_else(|| missing("waypoint"))?,
        k,
        max_constraint: max.ok_or_else(|| missing("max"))?,
        n_constraints: n_constraints.ok_or_else(|| missing("constraints"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PlanLog {
        PlanLog {
            scenario: "desk tray".into(),
            seed: 42,
            n_q: 2,
            entries: vec![
                IterationEntry {
                    iteration: 0,
                    status: IterationStatus::Feasible,
                    ic: InitialCondition::at_rest(vec![0.1, -0.2]),
                    waypoint: vec![0.2, -0.2],
                    k: Some(vec![1.0, -0.123456789012345]),
                    max_constraint: -1.5e-3,
                    n_constraints: 60,
                },
                IterationEntry {
                    iteration: 1,
                    status: IterationStatus::Braking,
                    ic: InitialCondition { q0: vec![0.15, -0.2], v0: vec![0.01, 0.0], a0: vec![1e-17, -0.0] },
                    waypoint: vec![0.2, -0.2],
                    k: None,
                    max_constraint: 3.0,
                    n_constraints: 60,
                },
            ],
            outcome: Outcome::SafeStop,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let log = sample();
        let text = log.to_text();
        assert_eq!(PlanLog::parse(&text).unwrap(), log);
        assert_eq!(PlanLog::parse(&text).unwrap().to_text(), text);
    }

    #[test]
    fn malformed_logs_name_the_line() {
        let text = sample().to_text();
        let bad = text.replace("k=1,", "k=2,");
        assert!(matches!(PlanLog::parse(&bad), Err(Error::PlanLog { line: 5, .. })));
        let bad = text.replace("iter 1", "iter 3");
        assert!(matches!(PlanLog::parse(&bad), Err(Error::PlanLog { line: 6, .. })));
        let bad = text.replace("outcome safe_stop\n", "");
        assert!(PlanLog::parse(&bad).is_err());
        assert!(PlanLog::parse("").is_err());
        assert!(PlanLog::parse("waiterplan-plan-log 2\n").is_err());
        let bad = text.replace("v0=0,0", "v0=0,0,0");
        assert!(PlanLog::parse(&bad).is_err());
    }
}
