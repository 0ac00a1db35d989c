use nalgebra::Vector3;

use crate::error::{dim_err, Result};
use crate::setops::Zonotope;

/// Inflation applied per axis to flat obstacle zonotopes.
pub const FLAT_INFLATION: f64 = 1e-9;

/// Zonotope obstacle with its halfspace representation `A p <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub zonotope: Zonotope,
    pub a: Vec<Vector3<f64>>,
    pub b: Vec<f64>,
    /// True when the zonotope was flat and had to be inflated.
    pub inflated: bool,
}

impl Obstacle {
    pub fn new(zonotope: Zonotope) -> Result<Self> {
        let (a, b, inflated) = obstacle_halfspaces(&zonotope)?;
        Ok(Obstacle { zonotope, a, b, inflated })
    }

    pub fn n_faces(&self) -> usize {
        self.b.len()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.a.iter().zip(&self.b).all(|(a, b)| a.dot(p) <= *b)
    }
}

/// Facet normals of a 3-D zonotope from pairwise generator cross products.
///
/// Returns `(A, b, inflated)`; parallel duplicate facets are merged.
pub fn obstacle_halfspaces(z: &Zonotope) -> Result<(Vec<Vector3<f64>>, Vec<f64>, bool)> {
    if z.dim() != 3 {
        return dim_err(format!("obstacle zonotope is {}-D", z.dim()));
    }
    let mut gens: Vec<Vector3<f64>> = z.generators.iter().map(|g| Vector3::new(g[0], g[1], g[2])).collect();
    let c = Vector3::new(z.center[0], z.center[1], z.center[2]);
    let scale = gens.iter().map(|g| g.norm()).fold(0.0, f64::max).max(1.0);
    let normals = |gens: &[Vector3<f64>]| -> Vec<Vector3<f64>> {
        let mut out: Vec<Vector3<f64>> = Vec::new();
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                let n = gens[i].cross(&gens[j]);
                if n.norm() <= 1e-12 * scale * scale {
                    continue;
                }
                let n = n.normalize();
                if !out.iter().any(|m| (m - n).norm() < 1e-9 || (m + n).norm() < 1e-9) {
                    out.push(n);
                }
            }
        }
        out
    };
    let mut ns = normals(&gens);
    let rank_ok = !ns.is_empty() && gens.iter().any(|g| ns.iter().any(|n| n.dot(g).abs() > 1e-12 * scale));
    let inflated = !rank_ok;
    if inflated {
        for e in [Vector3::x(), Vector3::y(), Vector3::z()] {
            gens.push(e * FLAT_INFLATION);
        }
        ns = normals(&gens);
    }
    let mut a = Vec::with_capacity(2 * ns.len());
    let mut b = Vec::with_capacity(2 * ns.len());
    for n in ns {
        let delta: f64 = gens.iter().map(|g| n.dot(g).abs()).sum();
        let d = n.dot(&c);
        a.push(n);
        b.push(d + delta);
        a.push(-n);
        b.push(-d + delta);
    }
    Ok((a, b, inflated))
}

/// Exact intersection test of two 3-D zonotopes: `0` must lie in the
/// zonotope `a - b`, checked against every facet of that difference.
pub fn zonotopes_intersect(a: &Zonotope, b: &Zonotope) -> Result<bool> {
    if a.dim() != 3 || b.dim() != 3 {
        return dim_err("zonotope intersection is implemented for 3-D sets");
    }
    let center: Vec<f64> = a.center.iter().zip(&b.center).map(|(x, y)| x - y).collect();
    let mut gens = a.generators.clone();
    gens.extend(b.generators.iter().cloned());
    let diff = Zonotope { center, generators: gens };
    let (_, offsets, _) = obstacle_halfspaces(&diff)?;
    Ok(offsets.iter().all(|o| *o >= 0.0))
}
