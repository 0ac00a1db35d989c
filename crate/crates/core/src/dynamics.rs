//! Recursive Newton-Euler inverse dynamics with an auxiliary velocity
//! argument, pointwise and over polynomial zonotopes.
//!
//! Conventions: joint `j` is offset by `p_j` in the parent frame and rotated
//! by `R_j` (parent from child); quantities of link `j` are expressed in frame
//! `j`. Gravity enters as an upward base acceleration. The wrench of the last
//! (fixed) joint is what the tray exerts on the object, in the contact frame.
//!
//! With `qd_aux = qd` this is ordinary RNEA. With distinct velocities the
//! result is `M(q) qdd_aux + C(q, qd) qd_aux + g(q)` for a Coriolis matrix that
//! keeps `dM/dt - 2C` skew-symmetric, which the passivity-based controller needs.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};

use crate::error::{dim_err, Error, Result};
use crate::kinematics::{pz_relative_rotations, ExtendedArmModel, InertialParams, InertialPz};
use crate::setops::{PolyZonotope, PzOptions};

pub const GRAVITY: f64 = 9.81;

/// Force and moment at a joint, in that joint's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub f: Vector3<f64>,
    pub n: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RneaOutput {
    /// One torque per actuated joint.
    pub tau: Vec<f64>,
    /// One wrench per joint, including fixed ones.
    pub wrenches: Vec<Wrench>,
}

impl RneaOutput {
    /// Wrench the tray applies to the object.
    pub fn contact(&self) -> Wrench {
        *self.wrenches.last().expect("model has joints")
    }
}

fn check_lengths(model: &ExtendedArmModel, lens: &[usize], n_params: usize) -> Result<()> {
    let n = model.n_q();
    if lens.iter().any(|&l| l != n) {
        return dim_err(format!("state vectors must have {n} entries"));
    }
    if n_params != model.n_joints() {
        return dim_err(format!("{n_params} inertial parameter sets for {} links", model.n_joints()));
    }
    Ok(())
}

pub fn rnea(
    model: &ExtendedArmModel,
    q: &[f64],
    qd: &[f64],
    qd_aux: &[f64],
    qdd_aux: &[f64],
    params: &[InertialParams],
    gravity: bool,
) -> Result<RneaOutput> {
    check_lengths(model, &[q.len(), qd.len(), qd_aux.len(), qdd_aux.len()], params.len())?;
    let coords = model.coordinate_map();
    let nj = model.n_joints();
    let rots: Vec<Matrix3<f64>> =
        model.joints.iter().zip(&coords).map(|(j, c)| j.relative_rotation(c.map_or(0.0, |c| q[c]))).collect();

    let mut w = Vector3::zeros();
    let mut wa = Vector3::zeros();
    let mut wdot = Vector3::zeros();
    let mut a = if gravity { Vector3::new(0.0, 0.0, GRAVITY) } else { Vector3::zeros() };
    let mut forces = Vec::with_capacity(nj);
    let mut torques = Vec::with_capacity(nj);
    for (j, joint) in model.joints.iter().enumerate() {
        let rt = rots[j].transpose();
        let p = joint.offset;
        let a_next = rt * (a + wdot.cross(&p) + w.cross(&wa.cross(&p)));
        let (mut w_n, mut wa_n) = (rt * w, rt * wa);
        let mut wdot_n = rt * wdot;
        if let Some(c) = coords[j] {
            let z = joint.axis;
            wdot_n += wa_n.cross(&(z * qd[c])) + z * qdd_aux[c];
            w_n += z * qd[c];
            wa_n += z * qd_aux[c];
        }
        w = w_n;
        wa = wa_n;
        wdot = wdot_n;
        a = a_next;
        let pr = &params[j];
        let a_com = a + wdot.cross(&pr.com) + w.cross(&wa.cross(&pr.com));
        forces.push(a_com * pr.mass);
        torques.push(pr.inertia * wdot + wa.cross(&(pr.inertia * w)));
    }

    let mut wrenches = vec![Wrench { f: Vector3::zeros(), n: Vector3::zeros() }; nj];
    let mut f_next = Vector3::zeros();
    let mut n_next = Vector3::zeros();
    for j in (0..nj).rev() {
        // child quantities mapped into frame j
        let (rf, rn, p_child) = if j + 1 < nj {
            (rots[j + 1] * f_next, rots[j + 1] * n_next, model.joints[j + 1].offset)
        } else {
            (Vector3::zeros(), Vector3::zeros(), Vector3::zeros())
        };
        let f = rf + forces[j];
        let n = torques[j] + rn + params[j].com.cross(&forces[j]) + p_child.cross(&rf);
        wrenches[j] = Wrench { f, n };
        f_next = f;
        n_next = n;
    }
    let tau =
        model.joints.iter().zip(&coords).zip(&wrenches).filter_map(|((joint, c), wr)| c.map(|_| wr.n.dot(&joint.axis))).collect();
    Ok(RneaOutput { tau, wrenches })
}

/// Joint-space mass matrix, one unit-acceleration RNEA call per column.
pub fn mass_matrix(model: &ExtendedArmModel, q: &[f64], params: &[InertialParams]) -> Result<DMatrix<f64>> {
    let n = model.n_q();
    let zero = vec![0.0; n];
    let mut m = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let out = rnea(model, q, &zero, &zero, &e, params, false)?;
        for r in 0..n {
            m[(r, c)] = out.tau[r];
        }
    }
    Ok(m)
}

/// Coriolis, centrifugal and gravity torques `C(q, qd) qd + g(q)`.
pub fn bias_torques(model: &ExtendedArmModel, q: &[f64], qd: &[f64], params: &[InertialParams]) -> Result<Vec<f64>> {
    let zero = vec![0.0; model.n_q()];
    Ok(rnea(model, q, qd, qd, &zero, params, true)?.tau)
}

/// Extreme eigenvalues of the mass matrix over sampled configurations
/// (each joint uniform in `[-pi, pi]`) and sampled inertial parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub samples: usize,
}

pub fn estimate_mass_eigenvalues(model: &ExtendedArmModel, n_samples: usize, seed: u64) -> Result<EigenBounds> {
    if n_samples == 0 {
        return Err(Error::Config("eigenvalue estimate needs at least one sample".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let q: Vec<f64> = (0..model.n_q()).map(|_| rng.gen_range(-pi..=pi)).collect();
        let params: Vec<InertialParams> = model.links.iter().map(|l| l.bounds.sample(&mut rng)).collect();
        for (i, p) in params.iter().enumerate() {
            if SymmetricEigen::new(p.inertia).eigenvalues.min() < -1e-12 || p.mass < 0.0 {
                return Err(Error::Model(format!("link {i} sampled an inertia that is not positive semidefinite")));
            }
        }
        let m = mass_matrix(model, &q, &params)?;
        let eig = SymmetricEigen::new(m).eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    Ok(EigenBounds { sigma_min: lo, sigma_max: hi, samples: n_samples })
}

/// Smallest sampled mass-matrix eigenvalue, the `sigma_m` of the tracking bound.
pub fn estimate_sigma_m(model: &ExtendedArmModel, n_samples: usize, seed: u64) -> Result<f64> {
    Ok(estimate_mass_eigenvalues(model, n_samples, seed)?.sigma_min)
}

/// Set-valued joint states of one time subinterval, one scalar set per joint.
#[derive(Debug, Clone)]
pub struct RneaPzInputs<'a> {
    pub q: &'a [PolyZonotope],
    pub qd: &'a [PolyZonotope],
    pub qd_aux: &'a [PolyZonotope],
    pub qdd_aux: &'a [PolyZonotope],
}

#[derive(Debug, Clone)]
pub struct WrenchPz {
    pub f: PolyZonotope,
    pub n: PolyZonotope,
}

#[derive(Debug, Clone)]
pub struct RneaPzOutput {
    pub tau: Vec<PolyZonotope>,
    pub wrenches: Vec<WrenchPz>,
}

impl RneaPzOutput {
    pub fn contact(&self) -> &WrenchPz {
        self.wrenches.last().expect("model has joints")
    }
}

/// Set-valued RNEA. `rel` are the relative rotation sets of the joints (see
/// [`pz_relative_rotations`]); pass `None` to compute them from `inputs.q`.
pub fn pz_rnea(
    model: &ExtendedArmModel,
    inputs: &RneaPzInputs<'_>,
    rel: Option<&[PolyZonotope]>,
    params: &[InertialPz],
    gravity: bool,
    opts: &PzOptions,
) -> Result<RneaPzOutput> {
    check_lengths(model, &[inputs.q.len(), inputs.qd.len(), inputs.qd_aux.len(), inputs.qdd_aux.len()], params.len())?;
    let owned;
    let rots = match rel {
        Some(r) => r,
        None => {
            owned = pz_relative_rotations(model, inputs.q, opts)?;
            &owned
        }
    };
    let coords = model.coordinate_map();
    let nj = model.n_joints();
    let red = |p: PolyZonotope| p.reduce(opts.max_terms);

    let mut w = PolyZonotope::zeros(3, 1);
    let mut wa = PolyZonotope::zeros(3, 1);
    let mut wdot = PolyZonotope::zeros(3, 1);
    let mut a = PolyZonotope::vector(&[0.0, 0.0, if gravity { GRAVITY } else { 0.0 }]);
    let mut forces = Vec::with_capacity(nj);
    let mut torques = Vec::with_capacity(nj);
    for (j, joint) in model.joints.iter().enumerate() {
        let rt = rots[j].transpose();
        let p = PolyZonotope::from_vector3(&joint.offset);
        let a_next = red(rt.mul(&a.add(&wdot.cross(&p)?)?.add(&w.cross(&wa.cross(&p)?)?)?)?);
        let (mut w_n, mut wa_n) = (red(rt.mul(&w)?), red(rt.mul(&wa)?));
        let mut wdot_n = red(rt.mul(&wdot)?);
        if let Some(c) = coords[j] {
            let z = PolyZonotope::from_vector3(&joint.axis);
            wdot_n = wdot_n.add(&wa_n.cross(&inputs.qd[c].mul(&z)?)?)?.add(&inputs.qdd_aux[c].mul(&z)?)?;
            w_n = w_n.add(&inputs.qd[c].mul(&z)?)?;
            wa_n = wa_n.add(&inputs.qd_aux[c].mul(&z)?)?;
        }
        w = w_n;
        wa = wa_n;
        wdot = red(wdot_n);
        a = a_next;
        let pr = &params[j];
        let a_com = a.add(&wdot.cross(&pr.com)?)?.add(&w.cross(&wa.cross(&pr.com)?)?)?;
        forces.push(red(pr.mass.mul(&red(a_com))?));
        let iw = red(pr.inertia.mul(&w)?);
        torques.push(red(pr.inertia.mul(&wdot)?.add(&wa.cross(&iw)?)?));
    }

    let mut wrenches: Vec<Option<WrenchPz>> = vec![None; nj];
    let mut f_next = PolyZonotope::zeros(3, 1);
    let mut n_next = PolyZonotope::zeros(3, 1);
    for j in (0..nj).rev() {
        let mut f = forces[j].clone();
        let mut n = torques[j].add(&params[j].com.cross(&forces[j])?)?;
        if j + 1 < nj {
            let rf = red(rots[j + 1].mul(&f_next)?);
            let rn = red(rots[j + 1].mul(&n_next)?);
            let p_child = PolyZonotope::from_vector3(&model.joints[j + 1].offset);
            n = n.add(&rn)?.add(&p_child.cross(&rf)?)?;
            f = f.add(&rf)?;
        }
        let (f, n) = (red(f), red(n));
        f_next = f.clone();
        n_next = n.clone();
        wrenches[j] = Some(WrenchPz { f, n });
    }
    let wrenches: Vec<WrenchPz> = wrenches.into_iter().map(|w| w.expect("filled")).collect();
    let mut tau = Vec::with_capacity(model.n_q());
    for ((joint, c), wr) in model.joints.iter().zip(&coords).zip(&wrenches) {
        if c.is_some() {
            tau.push(PolyZonotope::from_vector3(&joint.axis).dot(&wr.n)?);
        }
    }
    Ok(RneaPzOutput { tau, wrenches })
}

/// Nominal inertial parameters of every link as point sets.
pub fn nominal_pz(model: &ExtendedArmModel) -> Vec<InertialPz> {
    model.links.iter().map(|l| InertialPz::from_params(&l.nominal)).collect()
}

/// Inertial parameter bounds of every link as sets over `inertial(..)` ids.
pub fn interval_pz(model: &ExtendedArmModel) -> Vec<InertialPz> {
    model.links.iter().enumerate().map(|(i, l)| InertialPz::from_bounds(i, &l.bounds)).collect()
}
