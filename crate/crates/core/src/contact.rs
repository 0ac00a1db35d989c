//! Separation, slip and tip residuals of the tray/object contact.
//!
//! All residuals are square-root free and certify "no relative motion" when
//! nonpositive. Friction coefficient and contact radius enter only through
//! their lower bounds.

use nalgebra::{Vector2, Vector3};

use crate::dynamics::{Wrench, WrenchPz};
use crate::error::{Error, Result};
use crate::setops::PolyZonotope;

#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel {
    /// Lower bound of the static friction coefficient.
    pub mu: f64,
    /// Lower bound of the contact-disk radius (m).
    pub radius: f64,
    /// Tray normal in the contact frame.
    pub normal: Vector3<f64>,
}

impl ContactModel {
    pub fn new(mu: f64, radius: f64) -> Result<Self> {
        let cm = ContactModel { mu, radius, normal: Vector3::z() };
        cm.validate()?;
        Ok(cm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !(self.radius > 0.0) {
            return Err(Error::Config(format!(
                "friction coefficient {} and contact radius {} must be positive",
                self.mu, self.radius
            )));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("contact normal must be a unit vector".into()));
        }
        Ok(())
    }
}

/// Vertical separation `-n.f`.
pub fn h_sep(w: &Wrench, cm: &ContactModel) -> f64 {
    -cm.normal.dot(&w.f)
}

/// Linear slip `|f_t|^2 - (mu n.f)^2`.
pub fn h_slip(w: &Wrench, cm: &ContactModel) -> f64 {
    let fn_ = cm.normal.dot(&w.f);
    let ft = w.f - cm.normal * fn_;
    ft.norm_squared() - (cm.mu * fn_).powi(2)
}

/// Tip `|n x n_c|^2 - r^2 (n.f)^2`.
pub fn h_tip(w: &Wrench, cm: &ContactModel) -> f64 {
    cm.normal.cross(&w.n).norm_squared() - (cm.radius * cm.normal.dot(&w.f)).powi(2)
}

/// Zero moment point `(n x n_c) / (n.f)`, planar components in the contact frame.
pub fn zmp_point(w: &Wrench, cm: &ContactModel) -> Result<Vector2<f64>> {
    let den = cm.normal.dot(&w.f);
    if den == 0.0 {
        return Err(Error::UndefinedZmp);
    }
    let z = cm.normal.cross(&w.n) / den;
    Ok(Vector2::new(z.x, z.y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub sep: f64,
    pub slip: f64,
    pub tip: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.sep.max(self.slip).max(self.tip)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sep, self.slip, self.tip]
    }
}

pub fn residuals(w: &Wrench, cm: &ContactModel) -> Residuals {
    Residuals { sep: h_sep(w, cm), slip: h_slip(w, cm), tip: h_tip(w, cm) }
}

/// Residual sets built from a contact-wrench set.
#[derive(Debug, Clone)]
pub struct ContactPz {
    pub sep: PolyZonotope,
    pub slip: PolyZonotope,
    pub tip: PolyZonotope,
}

impl ContactPz {
    pub fn as_array(&self) -> [&PolyZonotope; 3] {
        [&self.sep, &self.slip, &self.tip]
    }
}

pub fn pz_contact_constraints(w: &WrenchPz, cm: &ContactModel) -> Result<ContactPz> {
    let n = PolyZonotope::from_vector3(&cm.normal);
    let fn_ = n.dot(&w.f)?;
    let ft = w.f.sub(&fn_.mul(&n)?)?;
    let fn_sq = fn_.mul(&fn_)?;
    let slip = ft.dot(&ft)?.sub(&fn_sq.scale(cm.mu * cm.mu))?;
    let nxm = n.cross(&w.n)?;
    let tip = nxm.dot(&nxm)?.sub(&fn_sq.scale(cm.radius * cm.radius))?;
    Ok(ContactPz { sep: fn_.neg(), slip, tip })
}

/// Upper bound of a scalar set.
pub fn sup(p: &PolyZonotope) -> f64 {
    p.bounds().data[0].hi
}
