//! Degree-5 Bernstein desired trajectories and their set-valued counterparts.
//!
//! The basis lives on the normalized horizon `s = t / t_fin`; time derivatives
//! pick up factors of `1/t_fin` and `1/t_fin^2`. The first three coefficients
//! are pinned by the initial condition, and the last three are all equal to
//! `eta1 * k + eta2`, which makes the terminal velocity and acceleration vanish
//! for every `k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setops::{IndeterminateId, PolyZonotope};

/// Default `eta1`: `pi / 72` rad of reachable final position either side of `eta2`.
pub const DEFAULT_ETA1: f64 = PI / 72.0;

const BINOM5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub q0: Vec<f64>,
    pub v0: Vec<f64>,
    pub a0: Vec<f64>,
}

impl InitialCondition {
    pub fn at_rest(q0: Vec<f64>) -> Self {
        let n = q0.len();
        InitialCondition { q0, v0: vec![0.0; n], a0: vec![0.0; n] }
    }

    pub fn n_q(&self) -> usize {
        self.q0.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_q();
        if self.v0.len() != n || self.a0.len() != n {
            return Err(Error::Dimension("initial condition vectors differ in length".into()));
        }
        if self.q0.iter().chain(&self.v0).chain(&self.a0).any(|v| !v.is_finite()) {
            return Err(Error::Config("initial condition is not finite".into()));
        }
        Ok(())
    }
}

/// Position, velocity and acceleration of the desired trajectory at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
}

impl DesiredState {
    pub fn as_initial_condition(&self) -> InitialCondition {
        InitialCondition { q0: self.q.clone(), v0: self.qd.clone(), a0: self.qdd.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinTrajectory {
    /// `beta[j][l]` on the normalized horizon.
    pub beta: Vec<[f64; 6]>,
    pub t_fin: f64,
}

/// Coefficients `beta_0..beta_2` fixed by the initial condition of one joint.
fn leading_coefficients(q0: f64, v0: f64, a0: f64, t_fin: f64) -> [f64; 3] {
    let b0 = q0;
    let b1 = b0 + v0 * t_fin / 5.0;
    let b2 = a0 * t_fin * t_fin / 20.0 + 2.0 * b1 - b0;
    [b0, b1, b2]
}

pub fn bernstein_from_ic(
    ic: &InitialCondition,
    k: &[f64],
    eta1: &[f64],
    eta2: &[f64],
    t_fin: f64,
) -> Result<BernsteinTrajectory> {
    ic.validate()?;
    let n = ic.n_q();
    if k.len() != n || eta1.len() != n || eta2.len() != n {
        return Err(Error::Dimension(format!("trajectory for {n} joints given mismatched k/eta")));
    }
    if let Some(&bad) = k.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(Error::Domain { value: bad, domain: "[-1, 1]" });
    }
    if !(t_fin > 0.0) {
        return Err(Error::Config(format!("horizon t_fin = {t_fin} must be positive")));
    }
    let beta = (0..n)
        .map(|j| {
            let [b0, b1, b2] = leading_coefficients(ic.q0[j], ic.v0[j], ic.a0[j], t_fin);
            let end = eta1[j] * k[j] + eta2[j];
            [b0, b1, b2, end, end, end]
        })
        .collect();
    Ok(BernsteinTrajectory { beta, t_fin })
}

fn de_casteljau(coefs: &[f64], s: f64) -> f64 {
    let mut c: [f64; 6] = [0.0; 6];
    let n = coefs.len();
    c[..n].copy_from_slice(coefs);
    for r in 1..n {
        for i in 0..n - r {
            c[i] = (1.0 - s) * c[i] + s * c[i + 1];
        }
    }
    c[0]
}

impl BernsteinTrajectory {
    pub fn n_q(&self) -> usize {
        self.beta.len()
    }

    /// Exact evaluation of the desired state at `t` in `[0, t_fin]`.
    pub fn eval(&self, t: f64) -> Result<DesiredState> {
        if !(0.0..=self.t_fin).contains(&t) {
            return Err(Error::Domain { value: t, domain: "[0, t_fin]" });
        }
        let s = t / self.t_fin;
        let (tf, tf2) = (self.t_fin, self.t_fin * self.t_fin);
        let mut out = DesiredState { q: Vec::new(), qd: Vec::new(), qdd: Vec::new() };
        for b in &self.beta {
            let d1: Vec<f64> = (0..5).map(|l| 5.0 * (b[l + 1] - b[l])).collect();
            let d2: Vec<f64> = (0..4).map(|l| 20.0 * (b[l + 2] - 2.0 * b[l + 1] + b[l])).collect();
            out.q.push(de_casteljau(b, s));
            out.qd.push(de_casteljau(&d1, s) / tf);
            out.qdd.push(de_casteljau(&d2, s) / tf2);
        }
        Ok(out)
    }
}

pub fn eval_desired(traj: &BernsteinTrajectory, t: f64) -> Result<DesiredState> {
    traj.eval(t)
}

/// Power-basis coefficients (in `s`) of a degree-5 Bernstein polynomial.
fn bernstein_to_power(beta: &[f64; 6]) -> [f64; 6] {
    let mut p = [0.0; 6];
    for (l, &b) in beta.iter().enumerate() {
        // C(5,l) s^l (1-s)^(5-l) = C(5,l) sum_i C(5-l,i) (-1)^i s^(l+i)
        let mut c = 1.0;
        for i in 0..=(5 - l) {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            p[l + i] += b * BINOM5[l] * c * sign;
            c = c * (5 - l - i) as f64 / (i + 1) as f64;
        }
    }
    p
}

fn poly_derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(m, c)| m as f64 * c).collect()
}

/// Coefficients of `p(a + b x)` in powers of `x`.
fn compose_affine(p: &[f64], a: f64, b: f64) -> Vec<f64> {
    // Horner in coefficient space: acc = acc * (a + b x) + p_m
    let mut acc: Vec<f64> = Vec::with_capacity(p.len());
    for &c in p.iter().rev() {
        let mut next = vec![0.0; acc.len() + 1];
        for (i, &v) in acc.iter().enumerate() {
            next[i] += a * v;
            next[i + 1] += b * v;
        }
        next[0] += c;
        acc = next;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    pub dt: f64,
    pub n_t: usize,
    pub t_p: f64,
    pub t_fin: f64,
}

impl TimePartition {
    pub fn new(dt: f64, t_p: f64, t_fin: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_fin > 0.0) {
            return Err(Error::Config(format!("dt = {dt} and t_fin = {t_fin} must be positive")));
        }
        let ratio = t_fin / dt;
        let n_t = ratio.round();
        if (ratio - n_t).abs() > 1e-9 * ratio.max(1.0) || n_t < 1.0 {
            return Err(Error::Config(format!("t_fin = {t_fin} is not an integer multiple of dt = {dt}")));
        }
        if !(t_p > 0.0 && t_p < t_fin) {
            return Err(Error::Config(format!("t_p = {t_p} must lie strictly inside (0, {t_fin})")));
        }
        Ok(TimePartition { dt, n_t: n_t as usize, t_p, t_fin })
    }

    /// Center of subinterval `i` (zero-based).
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt
    }

    /// `T_i = center + (dt/2) x_{t_i}`.
    pub fn interval_pz(&self, i: usize) -> PolyZonotope {
        PolyZonotope::scalar(self.center(i))
            .add(&PolyZonotope::generator(IndeterminateId::time(i), self.dt / 2.0))
            .expect("scalar")
    }

    pub fn pzs(&self) -> Vec<PolyZonotope> {
        (0..self.n_t).map(|i| self.interval_pz(i)).collect()
    }

    /// Value in `[-1, 1]` of `x_{t_i}` corresponding to time `t` in `T_i`.
    pub fn time_to_unit(&self, i: usize, t: f64) -> f64 {
        ((t - self.center(i)) / (self.dt / 2.0)).clamp(-1.0, 1.0)
    }

    /// Subinterval containing `t` (the last one for `t = t_fin`).
    pub fn interval_of(&self, t: f64) -> usize {
        ((t / self.dt).floor() as usize).min(self.n_t - 1)
    }
}

pub fn time_partition(dt: f64, t_p: f64, t_fin: f64) -> Result<(TimePartition, Vec<PolyZonotope>)> {
    let p = TimePartition::new(dt, t_p, t_fin)?;
    let pzs = p.pzs();
    Ok((p, pzs))
}

/// Desired trajectory sets of one time subinterval, one scalar set per joint.
#[derive(Debug, Clone)]
pub struct DesiredPz {
    pub q: Vec<PolyZonotope>,
    pub qd: Vec<PolyZonotope>,
    pub qdd: Vec<PolyZonotope>,
}

/// Scalar set `sum_m c_m x_t^m (* x_k if given)`.
fn time_polynomial(coefs: &[f64], t_id: IndeterminateId, k_id: Option<IndeterminateId>) -> PolyZonotope {
    let terms = coefs
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let mut mono = crate::setops::Monomial::new();
            if m > 0 {
                mono.push((t_id, m as u16));
            }
            if let Some(k) = k_id {
                mono.push((k, 1));
            }
            (mono, vec![c])
        })
        .collect();
    PolyZonotope::from_terms(1, 1, terms).expect("scalar terms")
}

/// Desired position/velocity/acceleration sets over subinterval `i`, with
/// `k_j` replaced by `x_{k_j}`. The substitution is exact: slicing at `k` and
/// `x_t` reproduces [`BernsteinTrajectory::eval`].
pub fn pz_desired(ic: &InitialCondition, eta1: &[f64], eta2: &[f64], partition: &TimePartition, i: usize) -> Result<DesiredPz> {
    ic.validate()?;
    let n = ic.n_q();
    if eta1.len() != n || eta2.len() != n {
        return Err(Error::Dimension("eta length differs from joint count".into()));
    }
    let tf = partition.t_fin;
    // s = (c_i + dt/2 x_t) / t_fin
    let (a, b) = (partition.center(i) / tf, partition.dt / 2.0 / tf);
    let t_id = IndeterminateId::time(i);
    let tail = bernstein_to_power(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let mut out = DesiredPz { q: Vec::new(), qd: Vec::new(), qdd: Vec::new() };
    for j in 0..n {
        let [b0, b1, b2] = leading_coefficients(ic.q0[j], ic.v0[j], ic.a0[j], tf);
        let fixed = bernstein_to_power(&[b0, b1, b2, eta2[j], eta2[j], eta2[j]]);
        let scaled_tail: Vec<f64> = tail.iter().map(|c| c * eta1[j]).collect();
        let k_id = IndeterminateId::parameter(j);
        let build = |fixed: &[f64], tail: &[f64], scale: f64| -> Result<PolyZonotope> {
            let f: Vec<f64> = compose_affine(fixed, a, b).iter().map(|c| c * scale).collect();
            let g: Vec<f64> = compose_affine(tail, a, b).iter().map(|c| c * scale).collect();
            time_polynomial(&f, t_id, None).add(&time_polynomial(&g, t_id, Some(k_id)))
        };
        out.q.push(build(&fixed, &scaled_tail, 1.0)?);
        let (fd, td) = (poly_derivative(&fixed), poly_derivative(&scaled_tail));
        out.qd.push(build(&fd, &td, 1.0 / tf)?);
        out.qdd.push(build(&poly_derivative(&fd), &poly_derivative(&td), 1.0 / (tf * tf))?);
    }
    Ok(out)
}

/// Tracking-error bounds used to inflate the desired sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingInflation {
    pub eps_p: Vec<f64>,
    pub eps_v: f64,
    pub k_r: Vec<f64>,
}

/// Sets of actual and modified-reference states of one subinterval.
#[derive(Debug, Clone)]
pub struct ArmStatePz {
    pub q: Vec<PolyZonotope>,
    pub qd: Vec<PolyZonotope>,
    pub qd_aux: Vec<PolyZonotope>,
    pub qdd_aux: Vec<PolyZonotope>,
}

/// `q = q_d + eps_p x_ep`, `qd = qd_d + eps_v x_ev`, and the modified references
/// `qd_a = qd_d + K_r e`, `qdd_a = qdd_d + K_r de` with the tracking error
/// `e = q_d - q = -eps_p x_ep` expressed on the same indeterminates, so that the
/// reference stays correlated with the actual state.
pub fn inflate_tracking_error(desired: &DesiredPz, bounds: &TrackingInflation) -> Result<ArmStatePz> {
    let n = desired.q.len();
    if bounds.eps_p.len() != n || bounds.k_r.len() != n {
        return Err(Error::Dimension("tracking bounds differ from joint count".into()));
    }
    if bounds.eps_p.iter().any(|v| *v < 0.0) || bounds.eps_v < 0.0 {
        return Err(Error::Config("tracking bounds must be nonnegative".into()));
    }
    let mut out = ArmStatePz { q: Vec::new(), qd: Vec::new(), qd_aux: Vec::new(), qdd_aux: Vec::new() };
    for j in 0..n {
        let ep = PolyZonotope::generator(IndeterminateId::position_error(j), bounds.eps_p[j]);
        let ev = PolyZonotope::generator(IndeterminateId::velocity_error(j), bounds.eps_v);
        out.q.push(desired.q[j].add(&ep)?);
        out.qd.push(desired.qd[j].add(&ev)?);
        out.qd_aux.push(desired.qd[j].sub(&ep.scale(bounds.k_r[j]))?);
        out.qdd_aux.push(desired.qdd[j].sub(&ev.scale(bounds.k_r[j]))?);
    }
    Ok(out)
}
