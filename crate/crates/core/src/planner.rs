//! Per-iteration constraint construction, the trajectory-parameter search and
//! the receding-horizon loop with its braking fallback.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::contact::{pz_contact_constraints, ContactPz};
use crate::controller::tracking_bounds;
use crate::dynamics::{interval_pz, pz_rnea, RneaPzInputs, RneaPzOutput};
use crate::error::{Error, Result};
use crate::kinematics::{pz_relative_rotations, pzfk_from_relative, pzfo, Obstacle, PosePz};
use crate::planlog::{IterationEntry, IterationStatus, Outcome, PlanLog};
use crate::scenario::Scenario;
use crate::setops::{Monomial, PolyZonotope, Tag};
use crate::traj::{
    bernstein_from_ic, inflate_tracking_error, pz_desired, ArmStatePz, BernsteinTrajectory, DesiredPz, DesiredState,
    InitialCondition, TrackingInflation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub seed: u64,
    /// Receding-horizon iteration cap.
    pub max_iters: usize,
    /// Augmented-Lagrangian multiplier updates per start.
    pub outer_iters: usize,
    /// Projected-gradient steps per multiplier update.
    pub inner_iters: usize,
    pub penalty: f64,
    pub penalty_growth: f64,
    /// Random starts tried after the cost minimizer and the origin.
    pub restarts: usize,
    /// Optional wall-clock budget per solve (s); `None` keeps runs deterministic.
    pub time_budget: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            seed: 0,
            max_iters: 100,
            outer_iters: 25,
            inner_iters: 60,
            penalty: 10.0,
            penalty_growth: 5.0,
            restarts: 4,
            time_budget: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::Config("solver iteration counts must be positive".into()));
        }
        if !(self.penalty > 0.0) || !(self.penalty_growth >= 1.0) {
            return Err(Error::Config("penalty must be positive and its growth at least 1".into()));
        }
        if let Some(b) = self.time_budget {
            if !(b >= 0.0) {
                return Err(Error::Config("time budget must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Straight-line waypoint `q_cur + min(step / |dq|, 1) dq`.
pub fn hlp_waypoint(q_cur: &[f64], q_goal: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Config(format!("waypoint step {step} must be positive")));
    }
    if q_cur.len() != q_goal.len() {
        return Err(Error::Dimension("waypoint endpoints differ in length".into()));
    }
    let dist = q_cur.iter().zip(q_goal).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    if dist == 0.0 {
        return Ok(q_goal.to_vec());
    }
    let s = (step / dist).min(1.0);
    Ok(q_cur.iter().zip(q_goal).map(|(a, b)| a + s * (b - a)).collect())
}

pub fn tracking_inflation(scn: &Scenario) -> Result<TrackingInflation> {
    let b = tracking_bounds(&scn.controller)?;
    Ok(TrackingInflation { eps_p: b.eps_p, eps_v: b.eps_v, k_r: scn.controller.k_r.clone() })
}

/// Every set computed for one time subinterval.
#[derive(Debug, Clone)]
pub struct ReachSets {
    pub desired: DesiredPz,
    pub state: ArmStatePz,
    pub poses: Vec<PosePz>,
    pub fo: Vec<PolyZonotope>,
    pub rnea: RneaPzOutput,
    pub contact: ContactPz,
}

/// Runs trajectory -> kinematics -> dynamics -> contact for subinterval `i`
/// of the plan starting at `ic` (final-position offset `eta2 = ic.q0`).
pub fn reach_sets(scn: &Scenario, ic: &InitialCondition, inflation: &TrackingInflation, i: usize) -> Result<ReachSets> {
    if i >= scn.partition.n_t {
        return Err(Error::Config(format!("interval {i} out of range (n_t = {})", scn.partition.n_t)));
    }
    let opts = &scn.pz;
    let desired = pz_desired(ic, &scn.eta1, &ic.q0, &scn.partition, i)?;
    let state = inflate_tracking_error(&desired, inflation)?;
    let rel = pz_relative_rotations(&scn.model, &state.q, opts)?;
    let poses = pzfk_from_relative(&scn.model, &rel, opts)?;
    let fo = pzfo(&scn.model, &poses, opts)?;
    let inputs = RneaPzInputs { q: &state.q, qd: &state.qd, qd_aux: &state.qd_aux, qdd_aux: &state.qdd_aux };
    let rnea = pz_rnea(&scn.model, &inputs, Some(&rel), &interval_pz(&scn.model), true, opts)?;
    let contact = pz_contact_constraints(rnea.contact(), &scn.contact)?;
    Ok(ReachSets { desired, state, poses, fo, rnea, contact })
}

type KMono = SmallVec<[(u16, u16); 3]>;

/// Polynomial in the trajectory parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KPoly {
    terms: Vec<(KMono, f64)>,
}

impl KPoly {
    fn value(&self, k: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.iter().map(|&(j, e)| k[j as usize].powi(e as i32)).product::<f64>()).sum()
    }

    fn add_grad(&self, k: &[f64], scale: f64, grad: &mut [f64]) {
        for (m, c) in &self.terms {
            for (pos, &(j, e)) in m.iter().enumerate() {
                let mut d = c * e as f64 * k[j as usize].powi(e as i32 - 1);
                for (other, &(jj, ee)) in m.iter().enumerate() {
                    if other != pos {
                        d *= k[jj as usize].powi(ee as i32);
                    }
                }
                grad[j as usize] += scale * d;
            }
        }
    }

    fn is_constant(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_empty())
    }
}

/// Upper bound of a scalar set as a function of `k`:
/// `center(k) + sum_g |g(k)| + abs_const`, where each `g` collects the
/// coefficients of one monomial in the non-parameter indeterminates.
#[derive(Debug, Clone, PartialEq)]
pub struct SupForm {
    center: KPoly,
    abs: Vec<KPoly>,
    abs_const: f64,
}

impl SupForm {
    pub fn compile(p: &PolyZonotope) -> SupForm {
        assert_eq!(p.size(), 1, "sup form of a non-scalar set");
        let mut groups: BTreeMap<Monomial, KPoly> = BTreeMap::new();
        for (m, c) in p.terms() {
            let mut rest = Monomial::new();
            let mut km = KMono::new();
            for &(id, e) in m {
                if id.tag() == Tag::Parameter {
                    km.push((id.index() as u16, e));
                } else {
                    rest.push((id, e));
                }
            }
            groups.entry(rest).or_default().terms.push((km, c[0]));
        }
        let mut out = SupForm { center: KPoly::default(), abs: Vec::new(), abs_const: 0.0 };
        for (rest, poly) in groups {
            if rest.is_empty() {
                out.center = poly;
            } else if poly.is_constant() {
                out.abs_const += poly.terms.iter().map(|(_, c)| c).sum::<f64>().abs();
            } else {
                out.abs.push(poly);
            }
        }
        out
    }

    pub fn value(&self, k: &[f64]) -> f64 {
        self.center.value(k) + self.abs.iter().map(|g| g.value(k).abs()).sum::<f64>() + self.abs_const
    }

    /// Value and a subgradient (`sign(g) grad g` for the absolute terms, 0 at `g = 0`).
    pub fn value_grad(&self, k: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.center.add_grad(k, 1.0, grad);
        let mut v = self.center.value(k) + self.abs_const;
        for g in &self.abs {
            let gv = g.value(k);
            v += gv.abs();
            if gv != 0.0 {
                g.add_grad(k, gv.signum(), grad);
            }
        }
        v
    }

    /// Estimated distance in `k` to the nearest zero of an absolute term,
    /// `min |g(k)| / |grad g(k)|_1`; the form is smooth within that radius.
    pub fn kink_distance(&self, k: &[f64]) -> f64 {
        let mut grad = vec![0.0; k.len()];
        self.abs
            .iter()
            .map(|g| {
                grad.iter_mut().for_each(|v| *v = 0.0);
                g.add_grad(k, 1.0, &mut grad);
                let slope: f64 = grad.iter().map(|v| v.abs()).sum();
                if slope == 0.0 {
                    f64::INFINITY
                } else {
                    g.value(k).abs() / slope
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Scalar constraint `value(k) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintForm {
    Sup(SupForm),
    /// Minimum over the rows of an obstacle's halfspace representation.
    MinOf(Vec<SupForm>),
}

impl ConstraintForm {
    pub fn value(&self, k: &[f64]) -> f64 {
        match self {
            ConstraintForm::Sup(s) => s.value(k),
            ConstraintForm::MinOf(rows) => rows.iter().map(|r| r.value(k)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Value and subgradient; for `MinOf` the gradient of the lowest-index active row.
    pub fn value_grad(&self, k: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            ConstraintForm::Sup(s) => s.value_grad(k, grad),
            ConstraintForm::MinOf(rows) => {
                let mut best = (f64::INFINITY, 0);
                for (r, row) in rows.iter().enumerate() {
                    let v = row.value(k);
                    if v < best.0 {
                        best = (v, r);
                    }
                }
                rows[best.1].value_grad(k, grad)
            }
        }
    }

    /// Estimated distance in `k` to the nonsmooth set: absolute-term zeros and
    /// switches of the active row.
    pub fn kink_distance(&self, k: &[f64]) -> f64 {
        match self {
            ConstraintForm::Sup(s) => s.kink_distance(k),
            ConstraintForm::MinOf(rows) => {
                let n = k.len();
                let mut vals: Vec<(f64, Vec<f64>)> = rows
                    .iter()
                    .map(|r| {
                        let mut g = vec![0.0; n];
                        let v = r.value_grad(k, &mut g);
                        (v, g)
                    })
                    .collect();
                let own = rows.iter().map(|r| r.kink_distance(k)).fold(f64::INFINITY, f64::min);
                vals.sort_by(|a, b| a.0.total_cmp(&b.0));
                let switch = match vals.as_slice() {
                    [a, b, ..] => {
                        let slope: f64 = a.1.iter().zip(&b.1).map(|(x, y)| (x - y).abs()).sum();
                        if slope == 0.0 {
                            f64::INFINITY
                        } else {
                            (b.0 - a.0) / slope
                        }
                    }
                    _ => f64::INFINITY,
                };
                own.min(switch)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Separation,
    Slip,
    Tip,
    Collision { link: usize, obstacle: usize },
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Separation => write!(f, "separation"),
            ConstraintKind::Slip => write!(f, "slip"),
            ConstraintKind::Tip => write!(f, "tip"),
            ConstraintKind::Collision { link, obstacle } => write!(f, "collision(link {link}, obstacle {obstacle})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub interval: usize,
    pub kind: ConstraintKind,
    pub form: ConstraintForm,
}

/// `|q_d(t_p; k) - waypoint|^2` with `q_d(t_p; k) = base + slope * k` per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub base: Vec<f64>,
    pub slope: Vec<f64>,
    pub waypoint: Vec<f64>,
}

impl CostModel {
    pub fn new(scn: &Scenario, ic: &InitialCondition, waypoint: &[f64]) -> Result<CostModel> {
        let n = ic.n_q();
        let at = |k: f64| -> Result<Vec<f64>> {
            let traj = bernstein_from_ic(ic, &vec![k; n], &scn.eta1, &ic.q0, scn.partition.t_fin)?;
            Ok(traj.eval(scn.partition.t_p)?.q)
        };
        let (lo, hi) = (at(-1.0)?, at(1.0)?);
        Ok(CostModel {
            base: lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            slope: lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect(),
            waypoint: waypoint.to_vec(),
        })
    }

    pub fn value(&self, k: &[f64]) -> f64 {
        (0..k.len()).map(|j| (self.base[j] + self.slope[j] * k[j] - self.waypoint[j]).powi(2)).sum()
    }

    pub fn value_grad(&self, k: &[f64], grad: &mut [f64]) -> f64 {
        let mut v = 0.0;
        for j in 0..k.len() {
            let r = self.base[j] + self.slope[j] * k[j] - self.waypoint[j];
            v += r * r;
            grad[j] = 2.0 * r * self.slope[j];
        }
        v
    }

    /// Box-clamped minimizer (the cost is separable).
    pub fn minimizer(&self) -> Vec<f64> {
        (0..self.base.len())
            .map(
                |j| {
                    if self.slope[j] == 0.0 {
                        0.0
                    } else {
                        ((self.waypoint[j] - self.base[j]) / self.slope[j]).clamp(-1.0, 1.0)
                    }
                },
            )
            .collect()
    }

    fn scale(&self) -> f64 {
        self.slope.iter().map(|s| s * s).sum::<f64>().max(1e-12)
    }
}

#[derive(Debug, Clone)]
pub struct IterationProblem {
    pub n_q: usize,
    pub ic: InitialCondition,
    pub cost: CostModel,
    pub constraints: Vec<Constraint>,
}

impl IterationProblem {
    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }
}

fn compile_interval(
    scn: &Scenario,
    ic: &InitialCondition,
    inflation: &TrackingInflation,
    obstacles: &[Obstacle],
    i: usize,
) -> Result<Vec<Constraint>> {
    let sets = reach_sets(scn, ic, inflation, i)?;
    let mut out = Vec::with_capacity(3 + sets.fo.len() * obstacles.len());
    for (kind, p) in
        [ConstraintKind::Separation, ConstraintKind::Slip, ConstraintKind::Tip].into_iter().zip(sets.contact.as_array())
    {
        out.push(Constraint { interval: i, kind, form: ConstraintForm::Sup(SupForm::compile(p)) });
    }
    for (o, obs) in obstacles.iter().enumerate() {
        for (l, fo) in sets.fo.iter().enumerate() {
            // sup(b_r - a_r . FO) <= 0 for some row r puts FO outside the obstacle
            let rows = obs
                .a
                .iter()
                .zip(&obs.b)
                .map(|(a, b)| {
                    let proj = PolyZonotope::from_vector3(a).dot(fo)?;
                    Ok(SupForm::compile(&PolyZonotope::scalar(*b).sub(&proj)?))
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(Constraint {
                interval: i,
                kind: ConstraintKind::Collision { link: l, obstacle: o },
                form: ConstraintForm::MinOf(rows),
            });
        }
    }
    Ok(out)
}

/// Builds the constraint set of one planning iteration, in parallel over subintervals.
pub fn build_iteration(
    scn: &Scenario,
    ic: &InitialCondition,
    waypoint: &[f64],
    obstacles: &[Obstacle],
) -> Result<IterationProblem> {
    if ic.n_q() != scn.n_q() || waypoint.len() != scn.n_q() {
        return Err(Error::Dimension("initial condition or waypoint does not match the arm".into()));
    }
    let inflation = tracking_inflation(scn)?;
    let per_interval = (0..scn.partition.n_t)
        .into_par_iter()
        .map(|i| compile_interval(scn, ic, &inflation, obstacles, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(IterationProblem {
        n_q: scn.n_q(),
        ic: ic.clone(),
        cost: CostModel::new(scn, ic, waypoint)?,
        constraints: per_interval.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: f64,
    pub cost_grad: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
}

pub fn eval_k(problem: &IterationProblem, k: &[f64]) -> Evaluation {
    let n = problem.n_q;
    let mut cost_grad = vec![0.0; n];
    let cost = problem.cost.value_grad(k, &mut cost_grad);
    let (values, grads) = problem
        .constraints
        .iter()
        .map(|c| {
            let mut g = vec![0.0; n];
            let v = c.form.value_grad(k, &mut g);
            (v, g)
        })
        .unzip();
    Evaluation { cost, cost_grad, values, grads }
}

fn max_constraint(problem: &IterationProblem, k: &[f64]) -> (Vec<f64>, f64) {
    let values: Vec<f64> = problem.constraints.iter().map(|c| c.form.value(k)).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (values, max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Feasible,
    Braking,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Returned parameter (feasible) or the least-violating iterate seen (braking).
    pub k: Vec<f64>,
    pub cost: f64,
    pub constraint_values: Vec<f64>,
    pub max_constraint: f64,
    pub elapsed: Duration,
    /// The optional time budget was exceeded.
    pub overrun: bool,
    pub evaluations: usize,
}

impl PlanResult {
    pub fn feasible_k(&self) -> Option<&[f64]> {
        (self.status == PlanStatus::Feasible).then_some(&self.k[..])
    }
}

/// Margin the solver aims for inside each (scaled) constraint.
const SOLVER_MARGIN: f64 = 1e-6;

struct Lagrangian<'a> {
    problem: &'a IterationProblem,
    scales: Vec<f64>,
    cost_scale: f64,
    lambda: Vec<f64>,
    rho: f64,
}

impl Lagrangian<'_> {
    fn shifted(&self, i: usize, v: f64) -> f64 {
        self.scales[i] * v + SOLVER_MARGIN
    }

    fn value(&self, k: &[f64]) -> f64 {
        let mut l = self.problem.cost.value(k) / self.cost_scale;
        for (i, c) in self.problem.constraints.iter().enumerate() {
            let g = self.shifted(i, c.form.value(k));
            let t = (self.lambda[i] + self.rho * g).max(0.0);
            l += (t * t - self.lambda[i] * self.lambda[i]) / (2.0 * self.rho);
        }
        l
    }

    fn value_grad(&self, k: &[f64], grad: &mut [f64]) -> f64 {
        let n = k.len();
        let mut l = self.problem.cost.value_grad(k, grad) / self.cost_scale;
        grad.iter_mut().for_each(|g| *g /= self.cost_scale);
        let mut cg = vec![0.0; n];
        for (i, c) in self.problem.constraints.iter().enumerate() {
            let g = self.shifted(i, c.form.value_grad(k, &mut cg));
            let t = (self.lambda[i] + self.rho * g).max(0.0);
            l += (t * t - self.lambda[i] * self.lambda[i]) / (2.0 * self.rho);
            if t > 0.0 {
                for j in 0..n {
                    grad[j] += t * self.scales[i] * cg[j];
                }
            }
        }
        l
    }
}

fn project(k: &mut [f64]) {
    k.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
}

/// Projected gradient with Armijo backtracking on the k-box.
fn minimize_box(lag: &Lagrangian, k: &mut Vec<f64>, iters: usize, evals: &mut usize) {
    let n = k.len();
    let mut grad = vec![0.0; n];
    let mut alpha = 1.0;
    for _ in 0..iters {
        let l = lag.value_grad(k, &mut grad);
        *evals += 1;
        let mut accepted = false;
        while alpha > 1e-14 {
            let mut trial: Vec<f64> = k.iter().zip(&grad).map(|(x, g)| x - alpha * g).collect();
            project(&mut trial);
            let d2: f64 = trial.iter().zip(k.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < 1e-24 {
                return;
            }
            let lt = lag.value(&trial);
            *evals += 1;
            if lt <= l - 1e-4 * d2 / alpha {
                *k = trial;
                alpha = (alpha * 2.0).min(1e6);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}

/// Augmented-Lagrangian search over `k in [-1, 1]^n`. Only parameters whose
/// exact constraint values are all nonpositive are ever reported feasible.
pub fn solve(problem: &IterationProblem, params: &SolverParams) -> PlanResult {
    let start = Instant::now();
    let n = problem.n_q;
    let m = problem.constraints.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut evals = 0usize;

    let minimizer = problem.cost.minimizer();
    let (_, at_min) = max_constraint(problem, &minimizer);
    evals += 1;
    // best feasible (cost, k) and least-violating (max, k)
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut least = (at_min, minimizer.clone());
    if at_min <= 0.0 {
        best = Some((problem.cost.value(&minimizer), minimizer.clone()));
    }

    let zero_vals: Vec<f64> = problem.constraints.iter().map(|c| c.form.value(&vec![0.0; n])).collect();
    let scales: Vec<f64> = zero_vals.iter().map(|v| 1.0 / v.abs().max(1e-3)).collect();
    let mut starts = vec![minimizer, vec![0.0; n]];
    for _ in 0..params.restarts {
        starts.push((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    }
    let mut overrun = false;
    if best.is_none() {
        'starts: for k0 in starts {
            let mut lag = Lagrangian {
                problem,
                scales: scales.clone(),
                cost_scale: problem.cost.scale(),
                lambda: vec![0.0; m],
                rho: params.penalty,
            };
            let mut k = k0;
            let mut prev_viol = f64::INFINITY;
            for _ in 0..params.outer_iters {
                let before = k.clone();
                minimize_box(&lag, &mut k, params.inner_iters, &mut evals);
                let (values, max) = max_constraint(problem, &k);
                evals += 1;
                if max <= 0.0 {
                    let c = problem.cost.value(&k);
                    if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                        best = Some((c, k.clone()));
                    }
                }
                if max < least.0 {
                    least = (max, k.clone());
                }
                let mut viol: f64 = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let g = lag.shifted(i, *v);
                    viol = viol.max(g);
                    lag.lambda[i] = (lag.lambda[i] + lag.rho * g).max(0.0);
                }
                if viol > 0.25 * prev_viol {
                    lag.rho = (lag.rho * params.penalty_growth).min(1e9);
                }
                prev_viol = viol;
                if let Some(b) = params.time_budget {
                    if start.elapsed().as_secs_f64() > b {
                        overrun = true;
                        break 'starts;
                    }
                }
                let step = k.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if viol <= 0.0 && step < 1e-9 {
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
    }

    // exact re-verification guard
    let (status, k) = match best {
        Some((_, k)) => {
            let (_, max) = max_constraint(problem, &k);
            if max <= 0.0 {
                (PlanStatus::Feasible, k)
            } else {
                (PlanStatus::Braking, k)
            }
        }
        None => (PlanStatus::Braking, least.1),
    };
    let (constraint_values, max) = max_constraint(problem, &k);
    PlanResult {
        status,
        cost: problem.cost.value(&k),
        k,
        constraint_values,
        max_constraint: max,
        elapsed: start.elapsed(),
        overrun,
        evaluations: evals,
    }
}

/// Desired trajectory of an iteration.
pub fn plan_trajectory(scn: &Scenario, ic: &InitialCondition, k: &[f64]) -> Result<BernsteinTrajectory> {
    bernstein_from_ic(ic, k, &scn.eta1, &ic.q0, scn.partition.t_fin)
}

/// One receding-horizon run: the structured log plus per-iteration solver details.
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub log: PlanLog,
    pub results: Vec<PlanResult>,
    pub build_times: Vec<Duration>,
}

/// Plans from rest at the start configuration until the goal, a safe stop or
/// the iteration cap. Each feasible plan commits `[0, t_p]` and hands its
/// desired state at `t_p` to the next iteration; when no feasible plan is
/// found the previous plan runs to its end, where it is at rest.
pub fn receding_horizon(scn: &Scenario) -> Result<PlanRun> {
    let n = scn.n_q();
    let mut ic = InitialCondition::at_rest(scn.q_start.clone());
    let mut entries = Vec::new();
    let mut results = Vec::new();
    let mut build_times = Vec::new();
    let mut outcome = Outcome::IterationCap;
    for it in 0..scn.solver.max_iters {
        let waypoint = hlp_waypoint(&ic.q0, &scn.q_goal, scn.hlp_step)?;
        let t0 = Instant::now();
        let problem = build_iteration(scn, &ic, &waypoint, &scn.obstacles_at(it))?;
        build_times.push(t0.elapsed());
        let params = SolverParams { seed: scn.solver.seed.wrapping_add(it as u64), ..scn.solver.clone() };
        let res = solve(&problem, &params);
        log::debug!(
            "iteration {it}: {:?} max constraint {:.3e}, build {:?}, solve {:?}",
            res.status,
            res.max_constraint,
            build_times[it],
            res.elapsed
        );
        let status = match res.status {
            PlanStatus::Feasible => IterationStatus::Feasible,
            PlanStatus::Braking => IterationStatus::Braking,
        };
        entries.push(IterationEntry {
            iteration: it,
            status,
            ic: ic.clone(),
            waypoint,
            k: res.feasible_k().map(<[f64]>::to_vec),
            max_constraint: res.max_constraint,
            n_constraints: problem.n_constraints(),
        });
        let feasible = res.feasible_k().map(<[f64]>::to_vec);
        results.push(res);
        let Some(k) = feasible else {
            outcome = Outcome::SafeStop;
            break;
        };
        let traj = plan_trajectory(scn, &ic, &k)?;
        let end = traj.eval(scn.partition.t_fin)?;
        if (0..n).all(|j| (end.q[j] - scn.q_goal[j]).abs() <= scn.goal_tolerance) {
            outcome = Outcome::GoalReached;
            break;
        }
        ic = traj.eval(scn.partition.t_p)?.as_initial_condition();
    }
    let log = PlanLog { scenario: scn.name.clone(), seed: scn.solver.seed, n_q: n, entries, outcome };
    Ok(PlanRun { log, results, build_times })
}

/// Part of one plan that the arm actually executes.
#[derive(Debug, Clone)]
pub struct Segment {
    pub iteration: usize,
    pub ic: InitialCondition,
    pub k: Vec<f64>,
    pub traj: BernsteinTrajectory,
    /// Global start time of the segment.
    pub t_start: f64,
    pub duration: f64,
}

/// Committed segments of a run: every feasible plan runs for `t_p` except the
/// last one, which runs to its end (goal, braking or iteration cap).
pub fn executed_segments(scn: &Scenario, log: &PlanLog) -> Result<Vec<Segment>> {
    let feasible: Vec<&IterationEntry> = log.entries.iter().filter(|e| e.status == IterationStatus::Feasible).collect();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(feasible.len());
    for (idx, e) in feasible.iter().enumerate() {
        let k = e.k.clone().ok_or_else(|| Error::Config(format!("feasible iteration {} has no k", e.iteration)))?;
        let traj = plan_trajectory(scn, &e.ic, &k)?;
        let duration = if idx + 1 == feasible.len() { scn.partition.t_fin } else { scn.partition.t_p };
        out.push(Segment { iteration: e.iteration, ic: e.ic.clone(), k, traj, t_start: t, duration });
        t += duration;
    }
    Ok(out)
}

/// Desired state at global time `t`; at rest at `q_rest` when nothing was executed.
pub fn desired_at(segments: &[Segment], q_rest: &[f64], t: f64) -> Result<DesiredState> {
    let Some(last) = segments.last() else {
        let n = q_rest.len();
        return Ok(DesiredState { q: q_rest.to_vec(), qd: vec![0.0; n], qdd: vec![0.0; n] });
    };
    let seg = segments.iter().find(|s| t < s.t_start + s.duration).unwrap_or(last);
    let local = (t - seg.t_start).clamp(0.0, seg.duration);
    seg.traj.eval(local)
}

pub fn total_duration(segments: &[Segment]) -> f64 {
    segments.last().map_or(0.0, |s| s.t_start + s.duration)
}
