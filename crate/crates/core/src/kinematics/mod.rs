//! Forward kinematics and forward occupancy, pointwise and set-valued.

mod model;
mod obstacle;

pub use model::{
    ExtendedArmModel, InertialBounds, InertialParams, InertialPz, JointKind, JointModel, LinkModel, PARAMS_PER_LINK,
};
pub use obstacle::{obstacle_halfspaces, zonotopes_intersect, Obstacle, FLAT_INFLATION};

use nalgebra::{Matrix3, Vector3};

use crate::error::{dim_err, Result};
use crate::setops::{pz_cos, pz_sin, PolyZonotope, PzOptions, Zonotope};

/// World pose of a joint frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub r: Matrix3<f64>,
    pub p: Vector3<f64>,
}

/// World pose of a joint frame as sets (`r` is 3x3, `p` is 3x1).
#[derive(Debug, Clone)]
pub struct PosePz {
    pub r: PolyZonotope,
    pub p: PolyZonotope,
}

pub fn fk(model: &ExtendedArmModel, q: &[f64]) -> Result<Vec<Pose>> {
    if q.len() != model.n_q() {
        return dim_err(format!("{} joint values for {} actuated joints", q.len(), model.n_q()));
    }
    let coords = model.coordinate_map();
    let mut r = Matrix3::identity();
    let mut p = Vector3::zeros();
    let mut out = Vec::with_capacity(model.n_joints());
    for (joint, c) in model.joints.iter().zip(&coords) {
        p += r * joint.offset;
        r *= joint.relative_rotation(c.map_or(0.0, |c| q[c]));
        out.push(Pose { r, p });
    }
    Ok(out)
}

/// Sine and cosine enclosures of a scalar joint-angle set.
pub fn pz_trig(q: &PolyZonotope, opts: &PzOptions) -> Result<(PolyZonotope, PolyZonotope)> {
    let s = pz_sin(q, opts.taylor_degree)?.reduce(opts.max_terms);
    let c = pz_cos(q, opts.taylor_degree)?.reduce(opts.max_terms);
    Ok((s, c))
}

/// `R_j^{j-1}` as a set: `R0 (I + sin K + (1 - cos) K^2)`.
fn relative_rotation_pz(joint: &JointModel, q: Option<&PolyZonotope>, opts: &PzOptions) -> Result<PolyZonotope> {
    match (joint.kind, q) {
        (JointKind::Revolute, Some(q)) => {
            let (s, c) = pz_trig(q, opts)?;
            let k = joint.axis.cross_matrix();
            let r0 = PolyZonotope::from_matrix3(&joint.rotation);
            let rk = PolyZonotope::from_matrix3(&(joint.rotation * k));
            let rk2 = PolyZonotope::from_matrix3(&(joint.rotation * k * k));
            let one_minus_c = PolyZonotope::scalar(1.0).sub(&c)?;
            r0.add(&s.mul(&rk)?)?.add(&one_minus_c.mul(&rk2)?)
        }
        (JointKind::Fixed, _) => Ok(PolyZonotope::from_matrix3(&joint.rotation)),
        (JointKind::Revolute, None) => dim_err("revolute joint without a coordinate"),
    }
}

/// Relative rotation sets `R_j^{j-1}` of every joint.
pub fn pz_relative_rotations(model: &ExtendedArmModel, q: &[PolyZonotope], opts: &PzOptions) -> Result<Vec<PolyZonotope>> {
    if q.len() != model.n_q() {
        return dim_err(format!("{} joint sets for {} actuated joints", q.len(), model.n_q()));
    }
    let coords = model.coordinate_map();
    model.joints.iter().zip(&coords).map(|(joint, c)| relative_rotation_pz(joint, c.map(|c| &q[c]), opts)).collect()
}

/// Set-valued forward kinematics; each frame is reduced after composition.
pub fn pzfk(model: &ExtendedArmModel, q: &[PolyZonotope], opts: &PzOptions) -> Result<Vec<PosePz>> {
    let rel = pz_relative_rotations(model, q, opts)?;
    pzfk_from_relative(model, &rel, opts)
}

/// [`pzfk`] from precomputed relative rotations.
pub fn pzfk_from_relative(model: &ExtendedArmModel, rel: &[PolyZonotope], opts: &PzOptions) -> Result<Vec<PosePz>> {
    if rel.len() != model.n_joints() {
        return dim_err("one relative rotation per joint expected");
    }
    let mut r = PolyZonotope::identity(3);
    let mut p = PolyZonotope::zeros(3, 1);
    let mut out = Vec::with_capacity(model.n_joints());
    for (joint, rel) in model.joints.iter().zip(rel) {
        p = p.add(&r.mul(&PolyZonotope::from_vector3(&joint.offset))?)?.reduce(opts.max_terms);
        r = r.mul(rel)?.reduce(opts.max_terms);
        out.push(PosePz { r: r.clone(), p: p.clone() });
    }
    Ok(out)
}

/// Forward occupancy `p_j + R_j L_j` of every link.
pub fn fo(model: &ExtendedArmModel, q: &[f64]) -> Result<Vec<Zonotope>> {
    let poses = fk(model, q)?;
    Ok(poses.iter().zip(&model.links).map(|(pose, link)| occupancy(pose, &link.volume)).collect())
}

pub fn occupancy(pose: &Pose, volume: &Zonotope) -> Zonotope {
    let v3 = |v: &[f64]| Vector3::new(v[0], v[1], v[2]);
    let c = pose.p + pose.r * v3(&volume.center);
    let gens = volume.generators.iter().map(|g| (pose.r * v3(g)).as_slice().to_vec()).collect();
    Zonotope { center: c.as_slice().to_vec(), generators: gens }
}

/// Link volume as a set over fresh indeterminates, one per generator.
pub fn volume_pz(volume: &Zonotope) -> PolyZonotope {
    let mut out = PolyZonotope::vector(&volume.center);
    for g in &volume.generators {
        let term = PolyZonotope::generator(crate::setops::IndeterminateId::fresh(), 1.0);
        out = out.add(&term.mul(&PolyZonotope::vector(g)).expect("scalar times vector")).expect("3-vectors");
    }
    out
}

/// Set-valued forward occupancy from [`pzfk`] output.
pub fn pzfo(model: &ExtendedArmModel, poses: &[PosePz], opts: &PzOptions) -> Result<Vec<PolyZonotope>> {
    if poses.len() != model.n_joints() {
        return dim_err("one pose per joint expected");
    }
    poses
        .iter()
        .zip(&model.links)
        .map(|(pose, link)| Ok(pose.p.add(&pose.r.mul(&volume_pz(&link.volume))?)?.reduce(opts.max_terms)))
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::setops::IndeterminateId;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    pub(crate) fn point_link(mass: f64, com: Vector3<f64>) -> LinkModel {
        let nominal = InertialParams { mass, com, inertia: Matrix3::from_diagonal_element(1e-3) };
        LinkModel {
            volume: Zonotope::from_box(com.as_slice().to_vec(), &[0.02; 3]),
            bounds: InertialBounds::point(&nominal),
            nominal,
        }
    }

    /// Three revolute joints (z, y, y) plus the object joint.
    pub(crate) fn three_link() -> ExtendedArmModel {
        let joints = vec![
            JointModel::revolute(Vector3::z(), Vector3::new(0.0, 0.0, 0.1)),
            JointModel::revolute(Vector3::y(), Vector3::new(0.0, 0.0, 0.2)),
            JointModel::revolute(Vector3::y(), Vector3::new(0.3, 0.0, 0.0)),
            JointModel::fixed(Vector3::new(0.25, 0.0, 0.02), Matrix3::identity()),
        ];
        let links = vec![
            point_link(1.0, Vector3::new(0.0, 0.0, 0.1)),
            point_link(0.8, Vector3::new(0.15, 0.0, 0.0)),
            point_link(0.5, Vector3::new(0.12, 0.0, 0.0)),
            point_link(0.17, Vector3::new(0.0, 0.0, 0.05)),
        ];
        ExtendedArmModel::new(joints, links).unwrap()
    }

    fn homogeneous(r: &Matrix3<f64>, p: &Vector3<f64>) -> nalgebra::Matrix4<f64> {
        let mut t = nalgebra::Matrix4::identity();
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        t.fixed_view_mut::<3, 1>(0, 3).copy_from(p);
        t
    }

    #[test]
    fn zero_configuration_stacks_offsets() {
        let joints = vec![
            JointModel::revolute(Vector3::z(), Vector3::new(0.0, 0.0, 0.1)),
            JointModel::revolute(Vector3::z(), Vector3::new(0.0, 0.0, 0.2)),
            JointModel::fixed(Vector3::new(0.0, 0.0, 0.3), Matrix3::identity()),
        ];
        let links = (0..3).map(|_| point_link(1.0, Vector3::zeros())).collect();
        let m = ExtendedArmModel::new(joints, links).unwrap();
        let poses = fk(&m, &[0.0, 0.0]).unwrap();
        assert!((poses[2].p - Vector3::new(0.0, 0.0, 0.6)).norm() < 1e-15);
        assert_eq!(poses[2].r, Matrix3::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let joints =
            vec![JointModel::revolute(Vector3::z(), Vector3::zeros()), JointModel::fixed(Vector3::zeros(), Matrix3::identity())];
        let links = (0..2).map(|_| point_link(1.0, Vector3::zeros())).collect();
        let m = ExtendedArmModel::new(joints, links).unwrap();
        let poses = fk(&m, &[std::f64::consts::FRAC_PI_2]).unwrap();
        let x_axis = poses[0].r.column(0);
        assert!((x_axis - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn matches_homogeneous_matrix_chain() {
        let m = three_link();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let poses = fk(&m, &q).unwrap();
            let mut t = nalgebra::Matrix4::identity();
            let qs = [q[0], q[1], q[2], 0.0];
            for (j, joint) in m.joints.iter().enumerate() {
                let rot = if joint.is_revolute() {
                    *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(joint.axis), qs[j]).matrix()
                } else {
                    Matrix3::identity()
                };
                t = t
                    * homogeneous(&Matrix3::identity(), &joint.offset)
                    * homogeneous(&(joint.rotation * rot), &Vector3::zeros());
                let r = t.fixed_view::<3, 3>(0, 0).into_owned();
                let p = t.fixed_view::<3, 1>(0, 3).into_owned();
                assert!((r - poses[j].r).norm() < 1e-12);
                assert!((p - poses[j].p).norm() < 1e-12);
                assert!((poses[j].r.transpose() * poses[j].r - Matrix3::identity()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn trig_of_point_set() {
        let (s, c) = pz_trig(&PolyZonotope::scalar(0.0), &PzOptions::default()).unwrap();
        assert_eq!(s.center(), vec![0.0]);
        assert_eq!(c.center(), vec![1.0]);
        assert!(s.is_point() && c.is_point());
    }

    #[test]
    fn trig_pythagorean_identity_within_remainder() {
        let x = IndeterminateId::parameter(0);
        let q = PolyZonotope::scalar(0.7).add(&PolyZonotope::generator(x, 0.3)).unwrap();
        let (s, c) = pz_trig(&q, &PzOptions::default()).unwrap();
        let delta = s.radius()[0] + c.radius()[0];
        for i in 0..=100 {
            let v = -1.0 + 0.02 * i as f64;
            let bs = s.slice(x, v).unwrap().pz.bounds().data[0];
            let bc = c.slice(x, v).unwrap().pz.bounds().data[0];
            assert!(bs.contains_with_slack((0.7 + 0.3 * v).sin(), 1e-12));
            assert!(bc.contains_with_slack((0.7 + 0.3 * v).cos(), 1e-12));
            let id = bs.mid().powi(2) + bc.mid().powi(2);
            assert!((id - 1.0).abs() <= 2.0 * delta + 1e-9);
        }
    }

    #[test]
    fn point_sets_reproduce_fk() {
        let m = three_link();
        let q = [0.3, -0.4, 1.1];
        let qpz: Vec<_> = q.iter().map(|&v| PolyZonotope::scalar(v)).collect();
        let sets = pzfk(&m, &qpz, &PzOptions::default()).unwrap();
        let poses = fk(&m, &q).unwrap();
        for (s, p) in sets.iter().zip(&poses) {
            assert!(s.r.is_point() && s.p.is_point());
            for (a, b) in s.p.center().iter().zip(p.p.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_configurations_lie_in_sets() {
        let m = three_link();
        let opts = PzOptions::default();
        let ids: Vec<_> = (0..3).map(IndeterminateId::parameter).collect();
        let c = [0.2, -0.5, 0.9];
        let rad = [0.05, 0.08, 0.1];
        let qpz: Vec<_> =
            (0..3).map(|j| PolyZonotope::scalar(c[j]).add(&PolyZonotope::generator(ids[j], rad[j])).unwrap()).collect();
        let sets = pzfk(&m, &qpz, &opts).unwrap();
        let occ = pzfo(&m, &sets, &opts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let q: Vec<f64> = (0..3).map(|j| c[j] + rad[j] * u[j]).collect();
            let a: HashMap<_, _> = ids.iter().copied().zip(u.iter().copied()).collect();
            let poses = fk(&m, &q).unwrap();
            for (j, pose) in poses.iter().enumerate() {
                let pb = sets[j].p.slice_many(&a).unwrap().bounds();
                assert!(pb.contains_point(pose.p.as_slice(), 1e-9));
                let rb = sets[j].r.slice_many(&a).unwrap().bounds();
                let rows: Vec<f64> = (0..3).flat_map(|r| (0..3).map(move |cc| pose.r[(r, cc)])).collect();
                assert!(rb.contains_point(&rows, 1e-9));
                // a random point of the link body
                let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let body = occupancy(pose, &m.links[j].volume).point_at(&beta).unwrap();
                let ob = occ[j].slice_many(&a).unwrap().bounds();
                assert!(ob.contains_point(&body, 1e-9));
            }
        }
        // slicing never widens
        let whole = sets[3].p.bounds();
        let part = sets[3].p.slice(ids[1], 0.3).unwrap().pz.bounds();
        assert!(part.data.iter().zip(&whole.data).all(|(p, w)| p.lo >= w.lo - 1e-12 && p.hi <= w.hi + 1e-12));
    }

    #[test]
    fn occupancy_at_zero_is_translated_volume() {
        let m = three_link();
        let occ = fo(&m, &[0.0; 3]).unwrap();
        let poses = fk(&m, &[0.0; 3]).unwrap();
        for ((z, pose), link) in occ.iter().zip(&poses).zip(&m.links) {
            let expect = link.volume.translate(pose.p.as_slice());
            for (a, b) in z.center.iter().zip(&expect.center) {
                assert!((a - b).abs() < 1e-15);
            }
            assert_eq!(z.generators, expect.generators);
        }
    }

    #[test]
    fn far_configuration_is_certified_collision_free() {
        let m = three_link();
        let obs = Obstacle::new(Zonotope::from_box(vec![2.0, 2.0, 0.5], &[0.1; 3])).unwrap();
        let x = IndeterminateId::parameter(0);
        let qpz: Vec<_> =
            (0..3).map(|j| PolyZonotope::scalar(0.1 * j as f64).add(&PolyZonotope::generator(x, 0.05)).unwrap()).collect();
        let opts = PzOptions::default();
        let occ = pzfo(&m, &pzfk(&m, &qpz, &opts).unwrap(), &opts).unwrap();
        for link in &occ {
            let sep = obs.a.iter().zip(&obs.b).any(|(a, b)| {
                let row = PolyZonotope::from_vector3(a).transpose().mul(link).unwrap();
                row.bounds().data[0].lo - b > 0.0
            });
            assert!(sep);
        }
    }
}
