use serde::{Deserialize, Serialize};

use super::interval::{Interval, IntervalArray};
use crate::error::{dim_err, Result};

/// Zonotope `{ c + sum_i g_i b_i : b_i in [-1, 1] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zonotope {
    pub center: Vec<f64>,
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
}

impl Zonotope {
    pub fn new(center: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.len() != center.len()) {
            return dim_err(format!("generator of length {} for a {}-D zonotope", g.len(), center.len()));
        }
        Ok(Zonotope { center, generators })
    }

    pub fn point(center: Vec<f64>) -> Self {
        Zonotope { center, generators: Vec::new() }
    }

    /// Axis-aligned box with the given center and half-widths.
    pub fn from_box(center: Vec<f64>, half_widths: &[f64]) -> Self {
        let n = center.len();
        let generators = half_widths
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != 0.0)
            .map(|(i, &h)| {
                let mut g = vec![0.0; n];
                g[i] = h;
                g
            })
            .collect();
        Zonotope { center, generators }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Interval hull `[c - sum|g_i|, c + sum|g_i|]`.
    pub fn to_interval(&self) -> IntervalArray {
        let radius = self.radius();
        IntervalArray::vector(self.center.iter().zip(&radius).map(|(&c, &r)| Interval { lo: c - r, hi: c + r }).collect())
    }

    pub fn radius(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        for g in &self.generators {
            for (ri, gi) in r.iter_mut().zip(g) {
                *ri += gi.abs();
            }
        }
        r
    }

    /// Point of the zonotope for the generator weights `betas`.
    pub fn point_at(&self, betas: &[f64]) -> Result<Vec<f64>> {
        if betas.len() != self.generators.len() {
            return dim_err(format!("{} weights for {} generators", betas.len(), self.generators.len()));
        }
        let mut p = self.center.clone();
        for (g, &b) in self.generators.iter().zip(betas) {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi += gi * b;
            }
        }
        Ok(p)
    }

    pub fn translate(&self, offset: &[f64]) -> Zonotope {
        Zonotope { center: self.center.iter().zip(offset).map(|(c, o)| c + o).collect(), generators: self.generators.clone() }
    }
}

/// Interval hull of a zonotope.
pub fn zono_to_interval(z: &Zonotope) -> IntervalArray {
    z.to_interval()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hull_of_scalar_zonotope() {
        let z = Zonotope::new(vec![1.0], vec![vec![0.5], vec![-0.25]]).unwrap();
        let iv = zono_to_interval(&z);
        assert_eq!(iv.data[0], Interval { lo: 0.25, hi: 1.75 });
        let p = Zonotope::point(vec![2.5]);
        assert_eq!(p.to_interval().data[0], Interval::point(2.5));
    }

    #[test]
    fn hull_contains_dense_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let gens = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let z = Zonotope::new(vec![0.3, -0.2, 1.0], gens).unwrap();
        let hull = z.to_interval();
        for _ in 0..10_000 {
            let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            assert!(hull.contains_point(&z.point_at(&b).unwrap(), 1e-12));
        }
    }
}
