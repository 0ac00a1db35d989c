//! Passivity-based robust tracking controller and its ultimate bounds.

use crate::dynamics::{interval_pz, pz_rnea, rnea, RneaPzInputs};
use crate::error::{Error, Result};
use crate::kinematics::{ExtendedArmModel, InertialParams};
use crate::setops::{Interval, PolyZonotope, PzOptions};
use crate::traj::DesiredState;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub k_r: Vec<f64>,
    /// Lyapunov level set that must never be exceeded.
    pub v_m: f64,
    /// Slope of the linear class-K function `alpha(h) = alpha_c h`.
    pub alpha_c: f64,
    /// Lower/upper bounds on the mass-matrix eigenvalues.
    pub sigma_m: f64,
    pub sigma_big_m: f64,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_r.is_empty() || self.k_r.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::Config("controller gains K_r must be positive".into()));
        }
        if !(self.v_m >= 0.0) {
            return Err(Error::Config(format!("V_M = {} must be nonnegative", self.v_m)));
        }
        if !(self.alpha_c > 0.0) || !(self.sigma_m > 0.0) || !(self.sigma_big_m > 0.0) {
            return Err(Error::Config("alpha_c, sigma_m and sigma_M must be positive".into()));
        }
        if self.sigma_m > self.sigma_big_m {
            return Err(Error::Config(format!("sigma_m = {} exceeds sigma_M = {}", self.sigma_m, self.sigma_big_m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingBounds {
    /// Bound on the modified error `|r|`.
    pub eps: f64,
    pub eps_p: Vec<f64>,
    pub eps_v: f64,
}

/// `eps = sqrt(2 V_M / sigma_m)`, `eps_p = eps / K_r`, `eps_v = 2 eps`.
pub fn tracking_bounds(cfg: &ControllerConfig) -> Result<TrackingBounds> {
    cfg.validate()?;
    let eps = (2.0 * cfg.v_m / cfg.sigma_m).sqrt();
    Ok(TrackingBounds { eps, eps_p: cfg.k_r.iter().map(|k| eps / k).collect(), eps_v: 2.0 * eps })
}

/// Modified reference `qd_a = qd_d + K_r e`, `qdd_a = qdd_d + K_r de` with `e = q_d - q`.
pub fn modified_reference(q: &[f64], qd: &[f64], des: &DesiredState, k_r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = q.len();
    let qd_aux = (0..n).map(|j| des.qd[j] + k_r[j] * (des.q[j] - q[j])).collect();
    let qdd_aux = (0..n).map(|j| des.qdd[j] + k_r[j] * (des.qd[j] - qd[j])).collect();
    (qd_aux, qdd_aux)
}

/// Modified tracking error `r = de + K_r e`.
pub fn modified_error(q: &[f64], qd: &[f64], des: &DesiredState, k_r: &[f64]) -> Vec<f64> {
    (0..q.len()).map(|j| (des.qd[j] - qd[j]) + k_r[j] * (des.q[j] - q[j])).collect()
}

/// Nominal feedforward `tau = M(q) qdd_a + C(q, qd) qd_a + g(q)` with nominal parameters.
pub fn nominal_input(
    model: &ExtendedArmModel,
    q: &[f64],
    qd: &[f64],
    des: &DesiredState,
    k_r: &[f64],
    params: &[InertialParams],
    gravity: bool,
) -> Result<Vec<f64>> {
    let (qd_aux, qdd_aux) = modified_reference(q, qd, des, k_r);
    Ok(rnea(model, q, qd, &qd_aux, &qdd_aux, params, gravity)?.tau)
}

/// `max(|inf|, |sup|)` entry-wise.
pub fn rho_from_intervals(w: &[Interval]) -> Vec<f64> {
    w.iter().map(|iv| iv.lo.abs().max(iv.hi.abs())).collect()
}

/// Worst-case torque mismatch between the interval and the nominal parameters.
#[allow(clippy::too_many_arguments)]
pub fn disturbance_measure(
    model: &ExtendedArmModel,
    q: &[f64],
    qd: &[f64],
    des: &DesiredState,
    k_r: &[f64],
    tau_nominal: &[f64],
    gravity: bool,
    opts: &PzOptions,
) -> Result<Vec<f64>> {
    let (qd_aux, qdd_aux) = modified_reference(q, qd, des, k_r);
    let pts = |v: &[f64]| v.iter().map(|&x| PolyZonotope::scalar(x)).collect::<Vec<_>>();
    let (pq, pqd, pqda, pqdda) = (pts(q), pts(qd), pts(&qd_aux), pts(&qdd_aux));
    let inputs = RneaPzInputs { q: &pq, qd: &pqd, qd_aux: &pqda, qdd_aux: &pqdda };
    let out = pz_rnea(model, &inputs, None, &interval_pz(model), gravity, opts)?;
    let w: Vec<Interval> = out
        .tau
        .iter()
        .zip(tau_nominal)
        .map(|(t, tn)| {
            let b = t.bounds().data[0];
            Interval { lo: b.lo - tn, hi: b.hi - tn }
        })
        .collect();
    Ok(rho_from_intervals(&w))
}

/// Robust input `v = -gamma r / |r|` (zero when `r = 0`), with
/// `gamma = max(0, (-alpha_c h + |r|^T rho) / |r|)` and `h = V_M - sigma_M |r|^2 / 2`.
pub fn robust_input(cfg: &ControllerConfig, r: &[f64], rho: &[f64]) -> (Vec<f64>, f64) {
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![0.0; r.len()], 0.0);
    }
    let h = cfg.v_m - 0.5 * cfg.sigma_big_m * norm * norm;
    let r_rho: f64 = r.iter().zip(rho).map(|(a, b)| a.abs() * b).sum();
    let gamma = ((-cfg.alpha_c * h + r_rho) / norm).max(0.0);
    (r.iter().map(|v| -gamma * v / norm).collect(), gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub u: Vec<f64>,
    pub tau: Vec<f64>,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    pub gamma: f64,
}

/// Full control law `u = tau - v`.
pub fn control_step(
    model: &ExtendedArmModel,
    cfg: &ControllerConfig,
    q: &[f64],
    qd: &[f64],
    des: &DesiredState,
    gravity: bool,
    opts: &PzOptions,
) -> Result<ControlOutput> {
    let params = model.nominal_params();
    let tau = nominal_input(model, q, qd, des, &cfg.k_r, &params, gravity)?;
    let rho = disturbance_measure(model, q, qd, des, &cfg.k_r, &tau, gravity, opts)?;
    let r = modified_error(q, qd, des, &cfg.k_r);
    let (v, gamma) = robust_input(cfg, &r, &rho);
    let u = tau.iter().zip(&v).map(|(t, v)| t - v).collect();
    Ok(ControlOutput { u, tau, v, r, rho, gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{bias_torques, mass_matrix};
    use crate::kinematics::tests::three_link;
    use crate::kinematics::InertialBounds;
    use rand::{Rng, SeedableRng};

    fn cfg(v_m: f64, k: f64) -> ControllerConfig {
        ControllerConfig { k_r: vec![k; 3], v_m, alpha_c: 1.0, sigma_m: 8.0386, sigma_big_m: 20.0 }
    }

    #[test]
    fn appendix_constants() {
        let b = tracking_bounds(&cfg(2.0e-2, 4.0)).unwrap();
        assert!((b.eps - 0.0705).abs() < 1e-3);
        assert!((b.eps_p[0] - 0.0176).abs() < 5e-4);
        assert!((b.eps_v - 0.1411).abs() < 1e-3);
        assert_eq!(b.eps, (2.0 * 2.0e-2 / 8.0386f64).sqrt());
        let z = tracking_bounds(&cfg(0.0, 4.0)).unwrap();
        assert_eq!((z.eps, z.eps_p[0], z.eps_v), (0.0, 0.0, 0.0));
        let stiff = tracking_bounds(&cfg(2.0e-2, 40.0)).unwrap();
        assert!((stiff.eps_p[0] * 10.0 - b.eps_p[0]).abs() < 1e-15);
        assert_eq!(stiff.eps_v, b.eps_v);
        assert!(tracking_bounds(&cfg(-1.0, 4.0)).is_err());
        assert!(tracking_bounds(&cfg(1.0, 0.0)).is_err());
    }

    #[test]
    fn robust_term_cases() {
        let c = cfg(2.0e-2, 4.0);
        assert_eq!(robust_input(&c, &[0.0; 3], &[1.0; 3]).0, vec![0.0; 3]);
        let (v, g) = robust_input(&c, &[1e-3, 0.0, 0.0], &[0.0; 3]);
        assert_eq!((v, g), (vec![0.0; 3], 0.0));
        let (v, g) = robust_input(&c, &[0.5, -0.5, 0.1], &[1.0; 3]);
        assert!(g > 0.0 && v[0] < 0.0 && v[1] > 0.0);
        assert_eq!(rho_from_intervals(&[Interval { lo: -2.0, hi: 1.0 }]), vec![2.0]);
    }

    #[test]
    fn nominal_input_matches_assembly() {
        let m = three_link();
        let params = m.nominal_params();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let r3 = |rng: &mut rand_chacha::ChaCha8Rng, s: f64| (0..3).map(|_| rng.gen_range(-s..s)).collect::<Vec<_>>();
            let des = DesiredState { q: r3(&mut rng, 2.0), qd: r3(&mut rng, 1.0), qdd: r3(&mut rng, 3.0) };
            // zero error: inverse dynamics of the desired motion
            let tau = nominal_input(&m, &des.q, &des.qd, &des, &[4.0; 3], &params, true).unwrap();
            let mm = mass_matrix(&m, &des.q, &params).unwrap();
            let bias = bias_torques(&m, &des.q, &des.qd, &params).unwrap();
            let id = &mm * nalgebra::DVector::from_column_slice(&des.qdd) + nalgebra::DVector::from_vec(bias);
            for j in 0..3 {
                assert!((tau[j] - id[j]).abs() < 1e-9);
            }
        }
        // static desired at rest: gravity torques
        let q = [0.2, 0.4, -0.3];
        let des = DesiredState { q: q.to_vec(), qd: vec![0.0; 3], qdd: vec![0.0; 3] };
        let tau = nominal_input(&m, &q, &[0.0; 3], &des, &[4.0; 3], &params, true).unwrap();
        let g = bias_torques(&m, &q, &[0.0; 3], &params).unwrap();
        assert_eq!(tau, g);
    }

    #[test]
    fn disturbance_dominates_sampled_mismatch() {
        let mut m = three_link();
        for l in &mut m.links {
            l.bounds = InertialBounds::relative(&l.nominal, 0.05);
        }
        let opts = PzOptions::default();
        let q = [0.3, -0.6, 0.9];
        let qd = [0.2, 0.1, -0.3];
        let des = DesiredState { q: vec![0.31, -0.61, 0.9], qd: vec![0.25, 0.1, -0.3], qdd: vec![1.0, -0.5, 0.2] };
        let params = m.nominal_params();
        let tau = nominal_input(&m, &q, &qd, &des, &[4.0; 3], &params, true).unwrap();
        let rho = disturbance_measure(&m, &q, &qd, &des, &[4.0; 3], &tau, true, &opts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let sample: Vec<_> = m.links.iter().map(|l| l.bounds.sample(&mut rng)).collect();
            let t = nominal_input(&m, &q, &qd, &des, &[4.0; 3], &sample, true).unwrap();
            for j in 0..3 {
                assert!((t[j] - tau[j]).abs() <= rho[j] + 1e-12);
            }
        }
        // degenerate bounds: no disturbance
        let exact = three_link();
        let rho0 = disturbance_measure(&exact, &q, &qd, &des, &[4.0; 3], &tau, true, &opts).unwrap();
        assert!(rho0.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn zero_state_without_gravity_needs_no_input() {
        let m = three_link();
        let des = DesiredState { q: vec![0.0; 3], qd: vec![0.0; 3], qdd: vec![0.0; 3] };
        let out = control_step(&m, &cfg(2.0e-2, 4.0), &[0.0; 3], &[0.0; 3], &des, false, &PzOptions::default()).unwrap();
        assert_eq!(out.u, vec![0.0; 3]);
        let out = control_step(&m, &cfg(2.0e-2, 4.0), &[0.0; 3], &[0.0; 3], &des, true, &PzOptions::default()).unwrap();
        assert_eq!(out.v, vec![0.0; 3]);
        assert_eq!(out.u, out.tau);
    }
}
