use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::setops::{IndeterminateId, Interval, PolyZonotope, Zonotope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Fixed,
}

/// Transform from frame `j-1` to frame `j`: translate by `offset` (parent
/// frame), rotate by `rotation`, then about `axis` by `q` for revolute joints.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    pub offset: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl JointModel {
    pub fn revolute(axis: Vector3<f64>, offset: Vector3<f64>) -> Self {
        JointModel { kind: JointKind::Revolute, axis, offset, rotation: Matrix3::identity() }
    }

    pub fn fixed(offset: Vector3<f64>, rotation: Matrix3<f64>) -> Self {
        JointModel { kind: JointKind::Fixed, axis: Vector3::z(), offset, rotation }
    }

    pub fn is_revolute(&self) -> bool {
        self.kind == JointKind::Revolute
    }

    /// `R_j^{j-1}(q)`.
    pub fn relative_rotation(&self, q: f64) -> Matrix3<f64> {
        match self.kind {
            JointKind::Fixed => self.rotation,
            JointKind::Revolute => {
                let k = self.axis.cross_matrix();
                self.rotation * (Matrix3::identity() + k * q.sin() + k * k * (1.0 - q.cos()))
            }
        }
    }
}

/// Mass, center of mass and inertia about the CoM, all in the link frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InertialParams {
    pub mass: f64,
    pub com: Vector3<f64>,
    pub inertia: Matrix3<f64>,
}

/// Number of scalar inertial parameters per link: mass, CoM (3), inertia (6).
pub const PARAMS_PER_LINK: usize = 10;

/// Index order of the inertia entries: xx, yy, zz, xy, xz, yz.
pub(crate) const INERTIA_ENTRIES: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct InertialBounds {
    pub mass: Interval,
    pub com: [Interval; 3],
    /// xx, yy, zz, xy, xz, yz
    pub inertia: [Interval; 6],
}

impl InertialBounds {
    pub fn point(p: &InertialParams) -> Self {
        InertialBounds {
            mass: Interval::point(p.mass),
            com: [0, 1, 2].map(|i| Interval::point(p.com[i])),
            inertia: INERTIA_ENTRIES.map(|(r, c)| Interval::point(p.inertia[(r, c)])),
        }
    }

    /// Bounds scaling mass and inertia by `1 -/+ frac` around `p` (CoM exact).
    pub fn relative(p: &InertialParams, frac: f64) -> Self {
        let scaled = |v: f64| {
            let (a, b) = (v * (1.0 - frac), v * (1.0 + frac));
            Interval { lo: a.min(b), hi: a.max(b) }
        };
        InertialBounds {
            mass: scaled(p.mass),
            com: [0, 1, 2].map(|i| Interval::point(p.com[i])),
            inertia: INERTIA_ENTRIES.map(|(r, c)| scaled(p.inertia[(r, c)])),
        }
    }

    pub fn as_array(&self) -> [Interval; PARAMS_PER_LINK] {
        let mut a = [Interval::point(0.0); PARAMS_PER_LINK];
        a[0] = self.mass;
        a[1..4].copy_from_slice(&self.com);
        a[4..].copy_from_slice(&self.inertia);
        a
    }

    pub fn contains(&self, p: &InertialParams) -> bool {
        let v = flatten(p);
        self.as_array().iter().zip(&v).all(|(iv, x)| iv.contains(*x))
    }

    /// Parameters at `unit` in `[-1, 1]^10` (midpoint + unit * radius).
    pub fn at_unit(&self, unit: &[f64; PARAMS_PER_LINK]) -> InertialParams {
        let a = self.as_array();
        let v: Vec<f64> = a.iter().zip(unit).map(|(iv, u)| iv.mid() + u * iv.rad()).collect();
        unflatten(&v)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> InertialParams {
        let mut u = [0.0; PARAMS_PER_LINK];
        for x in &mut u {
            *x = rng.gen_range(-1.0..=1.0);
        }
        self.at_unit(&u)
    }
}

pub(crate) fn flatten(p: &InertialParams) -> [f64; PARAMS_PER_LINK] {
    let mut v = [0.0; PARAMS_PER_LINK];
    v[0] = p.mass;
    for i in 0..3 {
        v[1 + i] = p.com[i];
    }
    for (e, (r, c)) in INERTIA_ENTRIES.iter().enumerate() {
        v[4 + e] = p.inertia[(*r, *c)];
    }
    v
}

fn unflatten(v: &[f64]) -> InertialParams {
    let mut inertia = Matrix3::zeros();
    for (e, (r, c)) in INERTIA_ENTRIES.iter().enumerate() {
        inertia[(*r, *c)] = v[4 + e];
        inertia[(*c, *r)] = v[4 + e];
    }
    InertialParams { mass: v[0], com: Vector3::new(v[1], v[2], v[3]), inertia }
}

/// Inertial parameters of one link as sets; uncertain entries carry the
/// indeterminate `inertial(link * 10 + entry)`, shared by symmetric inertia entries.
#[derive(Debug, Clone)]
pub struct InertialPz {
    pub mass: PolyZonotope,
    pub com: PolyZonotope,
    pub inertia: PolyZonotope,
}

impl InertialPz {
    pub fn from_bounds(link: usize, b: &InertialBounds) -> Self {
        let entry = |e: usize, iv: Interval| -> PolyZonotope {
            let base = PolyZonotope::scalar(iv.mid());
            if iv.rad() > 0.0 {
                let id = IndeterminateId::inertial(link * PARAMS_PER_LINK + e);
                base.add(&PolyZonotope::generator(id, iv.rad())).expect("scalar")
            } else {
                base
            }
        };
        let a = b.as_array();
        let com = PolyZonotope::stack(&[entry(1, a[1]), entry(2, a[2]), entry(3, a[3])]).expect("3 scalars");
        let mut cells: Vec<Option<PolyZonotope>> = vec![None; 9];
        for (e, (r, c)) in INERTIA_ENTRIES.iter().enumerate() {
            let v = entry(4 + e, a[4 + e]);
            cells[r * 3 + c] = Some(v.clone());
            cells[c * 3 + r] = Some(v);
        }
        let cells: Vec<PolyZonotope> = cells.into_iter().map(|c| c.expect("filled")).collect();
        let inertia = PolyZonotope::stack(&cells).expect("9 scalars").reshape(3, 3).expect("3x3");
        InertialPz { mass: entry(0, a[0]), com, inertia }
    }

    pub fn from_params(p: &InertialParams) -> Self {
        InertialPz {
            mass: PolyZonotope::scalar(p.mass),
            com: PolyZonotope::from_vector3(&p.com),
            inertia: PolyZonotope::from_matrix3(&p.inertia),
        }
    }
}

/// Rigid body attached to the frame of the joint with the same index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    /// Occupied volume in the link frame.
    pub volume: Zonotope,
    pub nominal: InertialParams,
    pub bounds: InertialBounds,
}

/// Serial chain with the tray merged into the last actuated link and the
/// carried object hanging off a final fixed joint at the contact point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedArmModel {
    pub joints: Vec<JointModel>,
    pub links: Vec<LinkModel>,
}

impl ExtendedArmModel {
    pub fn new(joints: Vec<JointModel>, links: Vec<LinkModel>) -> Result<Self> {
        let m = ExtendedArmModel { joints, links };
        m.validate()?;
        Ok(m)
    }

    pub fn n_q(&self) -> usize {
        self.joints.iter().filter(|j| j.is_revolute()).count()
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    /// Index of the joint carrying the object (the last one).
    pub fn object_joint(&self) -> usize {
        self.joints.len() - 1
    }

    /// Coordinate index of each joint (`None` for fixed joints).
    pub fn coordinate_map(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.joints
            .iter()
            .map(|j| {
                j.is_revolute().then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    pub fn nominal_params(&self) -> Vec<InertialParams> {
        self.links.iter().map(|l| l.nominal.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::Model("model has no joints".into()));
        }
        if self.joints.len() != self.links.len() {
            return Err(Error::Model(format!("{} joints but {} links", self.joints.len(), self.links.len())));
        }
        if self.joints.last().map(|j| j.kind) != Some(JointKind::Fixed) {
            return Err(Error::Model("the last joint must be the fixed object joint".into()));
        }
        if self.n_q() == 0 {
            return Err(Error::Model("model has no actuated joints".into()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if j.is_revolute() && (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Model(format!("joint {i} axis is not a unit vector")));
            }
            if (j.rotation.transpose() * j.rotation - Matrix3::identity()).norm() > 1e-9 {
                return Err(Error::Model(format!("joint {i} rotation is not orthonormal")));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            if l.volume.dim() != 3 {
                return Err(Error::Model(format!("link {i} volume is not 3-D")));
            }
            if !l.bounds.contains(&l.nominal) {
                return Err(Error::Model(format!("link {i} nominal inertial parameters lie outside their bounds")));
            }
            if l.bounds.mass.lo < 0.0 {
                return Err(Error::Model(format!("link {i} mass interval admits negative mass")));
            }
            // corners and random interior points of the inertia box must be PSD
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(i as u64);
            for s in 0..256 {
                let p = if s < 64 {
                    let mut u = [0.0; PARAMS_PER_LINK];
                    for (b, x) in u.iter_mut().enumerate().skip(4) {
                        *x = if (s >> (b - 4)) & 1 == 1 { 1.0 } else { -1.0 };
                    }
                    l.bounds.at_unit(&u)
                } else {
                    l.bounds.sample(&mut rng)
                };
                let min_eig = SymmetricEigen::new(p.inertia).eigenvalues.min();
                if min_eig < -1e-12 {
                    return Err(Error::Model(format!("link {i} inertia bounds admit a non-PSD tensor")));
                }
            }
        }
        Ok(())
    }
}
