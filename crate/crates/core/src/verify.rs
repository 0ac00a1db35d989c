//! Brute-force oracles: containment sampling of every set-valued stage,
//! closed-loop simulation under the robust controller, and auditing of
//! executed plans.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contact::residuals;
use crate::controller::{control_step, tracking_bounds};
use crate::dynamics::{mass_matrix, rnea};
use crate::error::{Error, Result};
use crate::kinematics::{fk, zonotopes_intersect, InertialParams, PARAMS_PER_LINK};
use crate::kinematics::{occupancy, Obstacle};
use crate::planlog::{IterationStatus, PlanLog};
use crate::planner::{
    build_iteration, desired_at, executed_segments, plan_trajectory, reach_sets, total_duration, tracking_inflation, Segment,
};
use crate::scenario::Scenario;
use crate::setops::{IndeterminateId, IntervalArray, PolyZonotope};
use crate::traj::{DesiredState, InitialCondition};

/// Default slack of the containment comparisons.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: String,
    /// Seed reproducing the offending sample.
    pub seed: u64,
    pub detail: String,
    /// Amount by which the check failed.
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckStats {
    pub samples: usize,
    pub violations: usize,
    /// Smallest margin seen (negative when violated).
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<(String, CheckStats)>,
    /// First violations, capped to keep reports small.
    pub violations: Vec<Violation>,
    pub elapsed: Duration,
}

const MAX_LISTED: usize = 50;

impl VerificationReport {
    fn stats(&mut self, check: &str) -> &mut CheckStats {
        if let Some(i) = self.checks.iter().position(|(c, _)| c == check) {
            return &mut self.checks[i].1;
        }
        self.checks.push((check.to_string(), CheckStats { samples: 0, violations: 0, worst_margin: f64::INFINITY }));
        &mut self.checks.last_mut().expect("just pushed").1
    }

    /// Records one comparison; `margin < 0` is a violation.
    pub fn record(&mut self, check: &str, margin: f64, seed: u64, detail: impl FnOnce() -> String) {
        let st = self.stats(check);
        st.samples += 1;
        st.worst_margin = st.worst_margin.min(margin);
        if margin < 0.0 || margin.is_nan() {
            st.violations += 1;
            if self.violations.len() < MAX_LISTED {
                self.violations.push(Violation { check: check.to_string(), seed, detail: detail(), excess: -margin });
            }
        }
    }

    pub fn samples(&self) -> usize {
        self.checks.iter().map(|(_, s)| s.samples).sum()
    }

    pub fn violation_count(&self) -> usize {
        self.checks.iter().map(|(_, s)| s.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckStats> {
        self.checks.iter().find(|(c, _)| c == name).map(|(_, s)| s)
    }

    /// Additive merge of counts; worst margins take the minimum.
    pub fn merge(&mut self, other: VerificationReport) {
        for (name, s) in other.checks {
            let st = self.stats(&name);
            st.samples += s.samples;
            st.violations += s.violations;
            st.worst_margin = st.worst_margin.min(s.worst_margin);
        }
        for v in other.violations {
            if self.violations.len() < MAX_LISTED {
                self.violations.push(v);
            }
        }
        self.elapsed += other.elapsed;
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in &self.checks {
            writeln!(
                f,
                "{name:<24} samples={:<8} violations={:<6} worst_margin={:.3e}",
                s.samples, s.violations, s.worst_margin
            )?;
        }
        for v in &self.violations {
            writeln!(f, "violation {} seed={} excess={:.3e}: {}", v.check, v.seed, v.excess, v.detail)?;
        }
        Ok(())
    }
}

/// Summary of several reports; empty input gives an empty summary.
pub fn audit_report(reports: &[VerificationReport]) -> String {
    if reports.is_empty() {
        return String::new();
    }
    let mut total = VerificationReport::default();
    for r in reports {
        total.merge(r.clone());
    }
    let mut s = total.to_string();
    let _ = writeln!(s, "total samples={} violations={}", total.samples(), total.violation_count());
    s
}

/// Process exit code for a set of reports: 0 clean, 3 with violations.
pub fn exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.violation_count() > 0) {
        3
    } else {
        0
    }
}

fn sample_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step: decorrelates consecutive sample indices
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pipeline stages compared by [`containment_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Trajectory,
    Kinematics,
    Occupancy,
    Wrench,
    Contact,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Trajectory, Stage::Kinematics, Stage::Occupancy, Stage::Wrench, Stage::Contact];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Trajectory => "trajectory",
            Stage::Kinematics => "kinematics",
            Stage::Occupancy => "occupancy",
            Stage::Wrench => "wrench",
            Stage::Contact => "contact",
        }
    }
}

fn margin_of(b: &IntervalArray, v: &[f64], slack: f64) -> f64 {
    b.data.iter().zip(v).map(|(iv, x)| (x - iv.lo + slack).min(iv.hi + slack - x)).fold(f64::INFINITY, f64::min)
}

/// Initial conditions audited: at rest at the start configuration and a
/// moving state derived from `seed`.
pub fn audit_initial_conditions(scn: &Scenario, seed: u64) -> Vec<InitialCondition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scn.n_q();
    let moving = InitialCondition {
        q0: scn.q_start.iter().map(|q| q + rng.gen_range(-0.2..0.2)).collect(),
        v0: (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect(),
        a0: (0..n).map(|_| rng.gen_range(-0.05..0.05)).collect(),
    };
    vec![InitialCondition::at_rest(scn.q_start.clone()), moving]
}

/// Compares the scalar pipeline (trajectory -> fk -> rnea -> contact) at random
/// `(ic, i, t, k, tracking error, inertial parameters)` against the sliced set
/// bounds of every requested stage.
pub fn containment_audit(
    scn: &Scenario,
    stages: &[Stage],
    ics: &[InitialCondition],
    n_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if n_samples == 0 {
        return Err(Error::Config("containment audit needs at least one sample".into()));
    }
    if ics.is_empty() {
        return Err(Error::Config("containment audit needs an initial condition".into()));
    }
    let start = Instant::now();
    let inflation = tracking_inflation(scn)?;
    let n_t = scn.partition.n_t;
    let sets = ics
        .iter()
        .map(|ic| (0..n_t).into_par_iter().map(|i| reach_sets(scn, ic, &inflation, i)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let n = scn.n_q();
    let model = &scn.model;
    let partial = (0..n_samples)
        .into_par_iter()
        .map(|s| -> Result<VerificationReport> {
            let sseed = sample_seed(seed, s as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(sseed);
            let mut rep = VerificationReport::default();
            let which = rng.gen_range(0..ics.len());
            let ic = &ics[which];
            let i = rng.gen_range(0..n_t);
            let reach = &sets[which][i];
            let xt: f64 = rng.gen_range(-1.0..=1.0);
            let t = (scn.partition.center(i) + scn.partition.dt / 2.0 * xt).clamp(0.0, scn.partition.t_fin);
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let up: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let uv: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let units: Vec<[f64; PARAMS_PER_LINK]> = model
                .links
                .iter()
                .map(|_| {
                    let mut u = [0.0; PARAMS_PER_LINK];
                    u.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..=1.0));
                    u
                })
                .collect();
            let params: Vec<InertialParams> = model.links.iter().zip(&units).map(|(l, u)| l.bounds.at_unit(u)).collect();

            let mut a: HashMap<IndeterminateId, f64> = HashMap::new();
            a.insert(IndeterminateId::time(i), xt);
            for j in 0..n {
                a.insert(IndeterminateId::parameter(j), k[j]);
                a.insert(IndeterminateId::position_error(j), up[j]);
                a.insert(IndeterminateId::velocity_error(j), uv[j]);
            }
            for (l, u) in units.iter().enumerate() {
                for (e, x) in u.iter().enumerate() {
                    a.insert(IndeterminateId::inertial(l * PARAMS_PER_LINK + e), *x);
                }
            }
            // scalar pipeline
            let des = plan_trajectory(scn, ic, &k)?.eval(t)?;
            let q: Vec<f64> = (0..n).map(|j| des.q[j] + inflation.eps_p[j] * up[j]).collect();
            let qd: Vec<f64> = (0..n).map(|j| des.qd[j] + inflation.eps_v * uv[j]).collect();
            let qd_a: Vec<f64> = (0..n).map(|j| des.qd[j] - inflation.k_r[j] * inflation.eps_p[j] * up[j]).collect();
            let qdd_a: Vec<f64> = (0..n).map(|j| des.qdd[j] - inflation.k_r[j] * inflation.eps_v * uv[j]).collect();
            let bound = |p: &PolyZonotope| -> Result<IntervalArray> { Ok(p.slice_many(&a)?.bounds()) };
            let detail = || format!("ic={which} i={i} t={t} k={k:?}");
            let check = |rep: &mut VerificationReport, name: &str, p: &PolyZonotope, v: &[f64]| -> Result<()> {
                let m = margin_of(&bound(p)?, v, CONTAINMENT_SLACK);
                rep.record(name, m, sseed, detail);
                Ok(())
            };
            for stage in stages {
                match stage {
                    Stage::Trajectory => {
                        for j in 0..n {
                            check(&mut rep, "trajectory.q_d", &reach.desired.q[j], &[des.q[j]])?;
                            check(&mut rep, "trajectory.qd_d", &reach.desired.qd[j], &[des.qd[j]])?;
                            check(&mut rep, "trajectory.qdd_d", &reach.desired.qdd[j], &[des.qdd[j]])?;
                            check(&mut rep, "trajectory.q", &reach.state.q[j], &[q[j]])?;
                            check(&mut rep, "trajectory.qd", &reach.state.qd[j], &[qd[j]])?;
                            check(&mut rep, "trajectory.qd_aux", &reach.state.qd_aux[j], &[qd_a[j]])?;
                            check(&mut rep, "trajectory.qdd_aux", &reach.state.qdd_aux[j], &[qdd_a[j]])?;
                        }
                    }
                    Stage::Kinematics => {
                        for (pose, pz) in fk(model, &q)?.iter().zip(&reach.poses) {
                            let r: Vec<f64> =
                                (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| pose.r[(r, c)]).collect();
                            check(&mut rep, "kinematics.rotation", &pz.r, &r)?;
                            check(&mut rep, "kinematics.position", &pz.p, pose.p.as_slice())?;
                        }
                    }
                    Stage::Occupancy => {
                        for ((pose, link), fo) in fk(model, &q)?.iter().zip(&model.links).zip(&reach.fo) {
                            let beta: Vec<f64> = link.volume.generators.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
                            let local = link.volume.point_at(&beta)?;
                            let p = pose.p + pose.r * Vector3::new(local[0], local[1], local[2]);
                            check(&mut rep, "occupancy", fo, p.as_slice())?;
                        }
                    }
                    Stage::Wrench => {
                        let out = rnea(model, &q, &qd, &qd_a, &qdd_a, &params, true)?;
                        for (w, wp) in out.wrenches.iter().zip(&reach.rnea.wrenches) {
                            check(&mut rep, "wrench.force", &wp.f, w.f.as_slice())?;
                            check(&mut rep, "wrench.moment", &wp.n, w.n.as_slice())?;
                        }
                        for (tau, tp) in out.tau.iter().zip(&reach.rnea.tau) {
                            check(&mut rep, "wrench.torque", tp, &[*tau])?;
                        }
                    }
                    Stage::Contact => {
                        let out = rnea(model, &q, &qd, &qd_a, &qdd_a, &params, true)?;
                        let r = residuals(&out.contact(), &scn.contact);
                        for (name, p, v) in [
                            ("contact.separation", &reach.contact.sep, r.sep),
                            ("contact.slip", &reach.contact.slip, r.slip),
                            ("contact.tip", &reach.contact.tip, r.tip),
                        ] {
                            // only the upper bound certifies safety
                            let sup = bound(p)?.data[0].hi;
                            rep.record(name, sup + CONTAINMENT_SLACK - v, sseed, detail);
                        }
                    }
                }
            }
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::default();
    for p in partial {
        report.merge(p);
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Settings of [`closed_loop_sim`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub gravity: bool,
    /// Simulated time beyond the end of the executed plan.
    pub settle: f64,
    /// Keep every `record_every`-th step in the trace (0 disables the trace).
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 1e-3, gravity: true, settle: 0.0, record_every: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub e: Vec<f64>,
    pub ed: Vec<f64>,
    pub r_norm: f64,
    pub residuals: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub steps: usize,
    pub max_abs_e: Vec<f64>,
    pub max_abs_ed: Vec<f64>,
    pub max_r_norm: f64,
    /// Largest separation/slip/tip residual of the actual motion.
    pub max_residuals: [f64; 3],
    pub final_q: Vec<f64>,
    pub final_qd: Vec<f64>,
    pub trace: Vec<TracePoint>,
    pub report: VerificationReport,
}

impl SimResult {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("t");
        let n = self.max_abs_e.len();
        for j in 0..n {
            let _ = write!(s, ",q{j},e{j},ed{j}");
        }
        s.push_str(",r_norm,h_sep,h_slip,h_tip\n");
        for p in &self.trace {
            let _ = write!(s, "{}", p.t);
            for j in 0..n {
                let _ = write!(s, ",{},{},{}", p.q[j], p.e[j], p.ed[j]);
            }
            let _ = writeln!(s, ",{},{},{},{}", p.r_norm, p.residuals[0], p.residuals[1], p.residuals[2]);
        }
        s
    }
}

/// Joint acceleration from `M qdd = u - rnea(q, qd, qd, 0)` (Cholesky solve).
pub fn forward_dynamics(
    model: &crate::kinematics::ExtendedArmModel,
    params: &[InertialParams],
    q: &[f64],
    qd: &[f64],
    u: &[f64],
    gravity: bool,
) -> Result<Vec<f64>> {
    let n = q.len();
    let m = mass_matrix(model, q, params)?;
    let eig = m.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > 1e12 {
        return Err(Error::Simulation(format!("mass matrix near singular (eigenvalues {lo:.3e}..{hi:.3e})")));
    }
    let bias = rnea(model, q, qd, qd, &vec![0.0; n], params, gravity)?.tau;
    let rhs = DVector::from_iterator(n, u.iter().zip(&bias).map(|(a, b)| a - b));
    let chol = m.cholesky().ok_or_else(|| Error::Simulation("mass matrix not positive definite".into()))?;
    Ok(chol.solve(&rhs).as_slice().to_vec())
}

/// One classical RK4 step of the arm under a held input `u`.
pub fn rk4_step(
    model: &crate::kinematics::ExtendedArmModel,
    params: &[InertialParams],
    q: &[f64],
    qd: &[f64],
    u: &[f64],
    dt: f64,
    gravity: bool,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = q.len();
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(x, y)| x + a * y).collect() };
    let k1v = qd.to_vec();
    let k1a = forward_dynamics(model, params, q, qd, u, gravity)?;
    let (q2, v2) = (axpy(q, dt / 2.0, &k1v), axpy(qd, dt / 2.0, &k1a));
    let k2a = forward_dynamics(model, params, &q2, &v2, u, gravity)?;
    let (q3, v3) = (axpy(q, dt / 2.0, &v2), axpy(qd, dt / 2.0, &k2a));
    let k3a = forward_dynamics(model, params, &q3, &v3, u, gravity)?;
    let (q4, v4) = (axpy(q, dt, &v3), axpy(qd, dt, &k3a));
    let k4a = forward_dynamics(model, params, &q4, &v4, u, gravity)?;
    let qn = (0..n).map(|j| q[j] + dt / 6.0 * (k1v[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j])).collect();
    let vn = (0..n).map(|j| qd[j] + dt / 6.0 * (k1a[j] + 2.0 * k2a[j] + 2.0 * k3a[j] + k4a[j])).collect();
    Ok((qn, vn, k1a))
}

/// Simulates the arm with true parameters `params` tracking `desired(t)` under
/// the robust controller (zero-order hold at the simulation step), starting
/// from `(q0, qd0)`. Flags tracking-bound and contact-residual violations.
pub fn simulate(
    scn: &Scenario,
    desired: &dyn Fn(f64) -> Result<DesiredState>,
    duration: f64,
    params: &[InertialParams],
    q0: &[f64],
    qd0: &[f64],
    cfg: &SimConfig,
) -> Result<SimResult> {
    if !(cfg.dt > 0.0) {
        return Err(Error::Config(format!("simulation step {} must be positive", cfg.dt)));
    }
    let start = Instant::now();
    let model = &scn.model;
    let n = scn.n_q();
    let bounds = tracking_bounds(&scn.controller)?;
    let steps = ((duration + cfg.settle) / cfg.dt).round() as usize;
    let (mut q, mut qd) = (q0.to_vec(), qd0.to_vec());
    let mut res = SimResult {
        steps,
        max_abs_e: vec![0.0; n],
        max_abs_ed: vec![0.0; n],
        max_r_norm: 0.0,
        max_residuals: [f64::NEG_INFINITY; 3],
        final_q: Vec::new(),
        final_qd: Vec::new(),
        trace: Vec::new(),
        report: VerificationReport::default(),
    };
    let mut rep = VerificationReport::default();
    for step in 0..=steps {
        let t = step as f64 * cfg.dt;
        let des = desired(t)?;
        let e: Vec<f64> = (0..n).map(|j| des.q[j] - q[j]).collect();
        let ed: Vec<f64> = (0..n).map(|j| des.qd[j] - qd[j]).collect();
        for j in 0..n {
            res.max_abs_e[j] = res.max_abs_e[j].max(e[j].abs());
            res.max_abs_ed[j] = res.max_abs_ed[j].max(ed[j].abs());
            rep.record("closed_loop.position", bounds.eps_p[j] - e[j].abs(), step as u64, || {
                format!("t={t} joint {j} e={}", e[j])
            });
            rep.record("closed_loop.velocity", bounds.eps_v - ed[j].abs(), step as u64, || {
                format!("t={t} joint {j} ed={}", ed[j])
            });
        }
        if step == steps {
            break;
        }
        let ctrl = control_step(model, &scn.controller, &q, &qd, &des, cfg.gravity, &scn.pz)?;
        let r_norm = ctrl.r.iter().map(|v| v * v).sum::<f64>().sqrt();
        res.max_r_norm = res.max_r_norm.max(r_norm);
        let (qn, qdn, qdd) = rk4_step(model, params, &q, &qd, &ctrl.u, cfg.dt, cfg.gravity)?;
        // contact wrench of the actual motion at the start of the step
        let w = rnea(model, &q, &qd, &qd, &qdd, params, cfg.gravity)?.contact();
        let h = residuals(&w, &scn.contact).as_array();
        for (m, v) in res.max_residuals.iter_mut().zip(h) {
            *m = m.max(v);
        }
        rep.record("closed_loop.contact", -h.iter().copied().fold(f64::NEG_INFINITY, f64::max), step as u64, || {
            format!("t={t} residuals={h:?}")
        });
        if cfg.record_every > 0 && step % cfg.record_every == 0 {
            res.trace.push(TracePoint { t, q: q.clone(), e, ed, r_norm, residuals: h });
        }
        q = qn;
        qd = qdn;
        if q.iter().chain(&qd).any(|v| !v.is_finite()) {
            return Err(Error::Simulation(format!("state diverged at t = {t}")));
        }
    }
    res.final_q = q;
    res.final_qd = qd;
    rep.elapsed = start.elapsed();
    res.report = rep;
    Ok(res)
}

/// Closed-loop execution of a logged plan with true parameters `params`,
/// starting exactly on the desired trajectory.
pub fn closed_loop_sim(scn: &Scenario, log: &PlanLog, params: &[InertialParams], cfg: &SimConfig) -> Result<SimResult> {
    for (l, p) in scn.model.links.iter().zip(params) {
        if !l.bounds.contains(p) {
            return Err(Error::Config("true inertial parameters lie outside their bounds".into()));
        }
    }
    let segments = executed_segments(scn, log)?;
    let d0 = desired_at(&segments, &scn.q_start, 0.0)?;
    let desired = |t: f64| desired_at(&segments, &scn.q_start, t);
    simulate(scn, &desired, total_duration(&segments), params, &d0.q, &d0.qd, cfg)
}

/// Samples true inertial parameters uniformly inside the scenario bounds.
pub fn sample_params(scn: &Scenario, seed: u64) -> Vec<InertialParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scn.model.links.iter().map(|l| l.bounds.sample(&mut rng)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Audits a plan log: chaining of initial conditions, exact re-evaluation of
/// every committed plan's constraints, and dense sampling of contact
/// residuals and collisions along every committed segment.
pub fn verify_plan(scn: &Scenario, log: &PlanLog, n_samples: usize, seed: u64) -> Result<VerificationReport> {
    if n_samples == 0 {
        return Err(Error::Config("plan verification needs at least one sample".into()));
    }
    let start = Instant::now();
    let n = scn.n_q();
    if log.n_q != n {
        return Err(Error::Config(format!("plan log is for {} joints, scenario has {n}", log.n_q)));
    }
    let mut rep = VerificationReport::default();
    // chaining
    let mut expected = InitialCondition::at_rest(scn.q_start.clone());
    for (idx, e) in log.entries.iter().enumerate() {
        let gap = max_abs_diff(&e.ic.q0, &expected.q0)
            .max(max_abs_diff(&e.ic.v0, &expected.v0))
            .max(max_abs_diff(&e.ic.a0, &expected.a0));
        rep.record("chain", 1e-9 - gap, e.iteration as u64, || {
            format!("iteration {} starts {gap:.3e} away from the previous plan", e.iteration)
        });
        match (&e.status, &e.k) {
            (IterationStatus::Feasible, Some(k)) => {
                expected = plan_trajectory(scn, &e.ic, k)?.eval(scn.partition.t_p)?.as_initial_condition();
            }
            _ => {
                let last = idx + 1 == log.entries.len();
                rep.record("chain", if last { 0.0 } else { -1.0 }, e.iteration as u64, || {
                    "planning continued after a braking iteration".into()
                });
            }
        }
    }
    // certificates
    let segments = executed_segments(scn, log)?;
    let certs = segments
        .par_iter()
        .map(|seg| -> Result<(usize, f64, String)> {
            let obstacles = scn.obstacles_at(seg.iteration);
            let problem = build_iteration(scn, &seg.ic, &scn.q_goal, &obstacles)?;
            let (mut worst, mut which) = (f64::NEG_INFINITY, String::new());
            for c in &problem.constraints {
                let v = c.form.value(&seg.k);
                if v > worst {
                    worst = v;
                    which = format!("interval {} {}", c.interval, c.kind);
                }
            }
            Ok((seg.iteration, worst, which))
        })
        .collect::<Result<Vec<_>>>()?;
    for (it, worst, which) in certs {
        rep.record("certificate", -worst, it as u64, || format!("iteration {it}: {which} = {worst:.3e}"));
    }
    // dense sampling
    if !segments.is_empty() {
        let inflation = tracking_inflation(scn)?;
        let per = n_samples.div_ceil(segments.len());
        let partial = segments
            .par_iter()
            .map(|seg| sample_segment(scn, seg, &inflation, per, sample_seed(seed, seg.iteration as u64)))
            .collect::<Result<Vec<_>>>()?;
        for p in partial {
            rep.merge(p);
        }
    }
    rep.elapsed = start.elapsed();
    Ok(rep)
}

fn sample_segment(
    scn: &Scenario,
    seg: &Segment,
    inflation: &crate::traj::TrackingInflation,
    n_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rep = VerificationReport::default();
    let n = scn.n_q();
    let model = &scn.model;
    let obstacles: Vec<Obstacle> = scn.obstacles_at(seg.iteration);
    let nominal = model.nominal_params();
    let traj = plan_trajectory(scn, &seg.ic, &seg.k)?;
    for s in 0..n_samples {
        let sseed = sample_seed(seed, s as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sseed);
        // every fourth sample on a uniform grid with zero error and nominal parameters
        let grid = s % 4 == 0;
        let t = if grid {
            seg.duration * (s / 4) as f64 / (n_samples.div_ceil(4).max(2) - 1) as f64
        } else {
            rng.gen_range(0.0..=seg.duration)
        };
        let t = t.min(seg.duration);
        let des = traj.eval(t)?;
        let (up, uv): (Vec<f64>, Vec<f64>) = if grid {
            (vec![0.0; n], vec![0.0; n])
        } else {
            ((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(), (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        };
        let params = if grid { nominal.clone() } else { model.links.iter().map(|l| l.bounds.sample(&mut rng)).collect() };
        let q: Vec<f64> = (0..n).map(|j| des.q[j] + inflation.eps_p[j] * up[j]).collect();
        let qd: Vec<f64> = (0..n).map(|j| des.qd[j] + inflation.eps_v * uv[j]).collect();
        let qd_a: Vec<f64> = (0..n).map(|j| des.qd[j] - inflation.k_r[j] * inflation.eps_p[j] * up[j]).collect();
        let qdd_a: Vec<f64> = (0..n).map(|j| des.qdd[j] - inflation.k_r[j] * inflation.eps_v * uv[j]).collect();
        let w = rnea(model, &q, &qd, &qd_a, &qdd_a, &params, true)?.contact();
        let h = residuals(&w, &scn.contact);
        let it = seg.iteration;
        for (name, v) in [("segment.separation", h.sep), ("segment.slip", h.slip), ("segment.tip", h.tip)] {
            rep.record(name, -v, sseed, || format!("iteration {it} t={t}: {v:.3e}"));
        }
        if !obstacles.is_empty() {
            let poses = fk(model, &q)?;
            let mut clearance = true;
            for (pose, link) in poses.iter().zip(&model.links) {
                let fo = occupancy(pose, &link.volume);
                for o in &obstacles {
                    if zonotopes_intersect(&fo, &o.zonotope)? {
                        clearance = false;
                    }
                }
            }
            rep.record("segment.collision", if clearance { 0.0 } else { -1.0 }, sseed, || {
                format!("iteration {it} t={t}: link/obstacle overlap")
            });
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::GRAVITY;
    use crate::kinematics::InertialBounds;
    use crate::planner::receding_horizon;
    use crate::scenario::tests::desk;

    fn kinetic_energy(scn: &Scenario, params: &[InertialParams], q: &[f64], qd: &[f64]) -> f64 {
        let m = mass_matrix(&scn.model, q, params).unwrap();
        let v = DVector::from_column_slice(qd);
        0.5 * (v.transpose() * m * v)[(0, 0)]
    }

    #[test]
    fn report_merging_is_additive() {
        assert_eq!(audit_report(&[]), "");
        let mut a = VerificationReport::default();
        a.record("x", 1.0, 0, String::new);
        let mut b = VerificationReport::default();
        b.record("x", -0.5, 7, || "bad".into());
        b.record("y", 2.0, 1, String::new);
        assert_eq!(exit_code(&[a.clone()]), 0);
        assert_eq!(exit_code(&[a.clone(), b.clone()]), 3);
        a.merge(b);
        assert_eq!(a.samples(), 3);
        assert_eq!(a.violation_count(), 1);
        assert_eq!(a.check("x").unwrap().worst_margin, -0.5);
        assert_eq!(a.violations[0].seed, 7);
    }

    #[test]
    fn free_motion_conserves_energy() {
        let s = desk();
        let p = s.model.nominal_params();
        let (mut q, mut qd) = (vec![0.1, 0.4, -0.7], vec![0.8, -0.5, 0.6]);
        let e0 = kinetic_energy(&s, &p, &q, &qd);
        for _ in 0..1000 {
            let (qn, vn, _) = rk4_step(&s.model, &p, &q, &qd, &[0.0; 3], 1e-3, false).unwrap();
            q = qn;
            qd = vn;
        }
        let e1 = kinetic_energy(&s, &p, &q, &qd);
        assert!((e1 - e0).abs() < 1e-6, "drift {}", e1 - e0);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let s = desk();
        let p = s.model.nominal_params();
        let run = |dt: f64| {
            let (mut q, mut qd) = (vec![0.1, 0.4, -0.7], vec![0.0; 3]);
            for _ in 0..(0.5 / dt).round() as usize {
                let (qn, vn, _) = rk4_step(&s.model, &p, &q, &qd, &[0.0; 3], dt, true).unwrap();
                q = qn;
                qd = vn;
            }
            q
        };
        let (a, b, c) = (run(0.02), run(0.01), run(0.005));
        let ratio = max_abs_diff(&a, &b) / max_abs_diff(&b, &c);
        assert!(ratio > 16.0 / 4.0, "ratio {ratio}");
    }

    #[test]
    fn static_regulation_is_exact() {
        let s = desk();
        let q0 = s.q_start.clone();
        let des = DesiredState { q: q0.clone(), qd: vec![0.0; 3], qdd: vec![0.0; 3] };
        let desired = |_t: f64| Ok(des.clone());
        let r = simulate(&s, &desired, 2.0, &s.model.nominal_params(), &q0, &[0.0; 3], &SimConfig::default()).unwrap();
        assert!(r.max_abs_e.iter().all(|e| *e < 1e-6), "{:?}", r.max_abs_e);
        assert!(r.max_residuals[0] < 0.0);
        let _ = GRAVITY;
    }

    #[test]
    fn singular_mass_matrix_is_reported() {
        let mut s = desk();
        for l in &mut s.model.links {
            l.nominal.mass = 0.0;
            l.nominal.inertia = nalgebra::Matrix3::zeros();
            l.bounds = InertialBounds::point(&l.nominal);
        }
        let p = s.model.nominal_params();
        assert!(matches!(forward_dynamics(&s.model, &p, &[0.0; 3], &[0.0; 3], &[0.0; 3], true), Err(Error::Simulation(_))));
    }

    #[test]
    fn degenerate_sets_agree_with_scalar_pipeline() {
        let mut s = desk();
        s.controller.v_m = 0.0;
        for l in &mut s.model.links {
            l.bounds = InertialBounds::point(&l.nominal);
        }
        s.partition = crate::traj::TimePartition::new(1e-4, 1.0, 2.0).unwrap();
        s.pz.taylor_degree = 10;
        let ic = InitialCondition::at_rest(s.q_start.clone());
        let inf = tracking_inflation(&s).unwrap();
        let k = [0.3, -0.4, 0.8];
        let a: HashMap<_, _> = (0..3).map(|j| (IndeterminateId::parameter(j), k[j])).collect();
        for i in [0usize, 7000, 19999] {
            let sets = reach_sets(&s, &ic, &inf, i).unwrap();
            let t = s.partition.center(i);
            let d = plan_trajectory(&s, &ic, &k).unwrap().eval(t).unwrap();
            let out = rnea(&s.model, &d.q, &d.qd, &d.qd, &d.qdd, &s.model.nominal_params(), true).unwrap();
            let w = out.contact();
            let f = sets.rnea.contact().f.slice_many(&a).unwrap().bounds();
            for c in 0..3 {
                assert!((f.data[c].mid() - w.f[c]).abs() < 1e-6, "{:?} vs {}", f.data[c], w.f[c]);
                assert!(f.data[c].contains_with_slack(w.f[c], 1e-9));
            }
        }
    }

    #[test]
    fn audit_finds_no_violations_on_desk_scenario() {
        let s = desk();
        let ics = audit_initial_conditions(&s, 3);
        let r = containment_audit(&s, &Stage::ALL, &ics, 500, 3).unwrap();
        assert!(r.samples() > 500 * 20);
        assert_eq!(r.violation_count(), 0, "{r}");
        let again = containment_audit(&s, &Stage::ALL, &ics, 500, 3).unwrap();
        assert_eq!(r.checks, again.checks);
    }

    #[test]
    fn executed_plan_verifies_and_tracks() {
        let s = desk();
        let run = receding_horizon(&s).unwrap();
        let rep = verify_plan(&s, &run.log, 400, 1).unwrap();
        assert_eq!(rep.violation_count(), 0, "{rep}");
        let params = sample_params(&s, 5);
        let sim = closed_loop_sim(&s, &run.log, &params, &SimConfig::default()).unwrap();
        assert_eq!(sim.report.check("closed_loop.position").unwrap().violations, 0, "{}", sim.report);
        assert_eq!(sim.report.check("closed_loop.velocity").unwrap().violations, 0, "{}", sim.report);
        // corrupting k breaks chaining and the certificate
        let mut bad = run.log.clone();
        bad.entries[0].k = Some(vec![-1.0, 1.0, 1.0]);
        let rep = verify_plan(&s, &bad, 100, 1).unwrap();
        assert!(rep.violation_count() > 0);
    }
}
