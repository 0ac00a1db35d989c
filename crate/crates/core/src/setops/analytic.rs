//! Taylor enclosures of sin/cos over polynomial zonotopes.

use super::id::IndeterminateId;
use super::interval::Interval;
use super::pz::PolyZonotope;
use crate::error::{dim_err, Error, Result};

/// Default Taylor degree for trigonometric enclosures.
pub const DEFAULT_TAYLOR_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analytic {
    Sin,
    Cos,
}

impl Analytic {
    /// `f^(n)(x)`, i.e. `sin(x + n pi/2)` or `cos(x + n pi/2)`.
    fn derivative(self, n: usize, x: f64) -> f64 {
        // quarter-turn table rather than a phase shift keeps cos(pi/2) exact
        let (s, c) = (x.sin(), x.cos());
        let (sn, cn) = match n % 4 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        match self {
            Analytic::Sin => sn,
            Analytic::Cos => cn,
        }
    }

    fn derivative_enclosure(self, n: usize, x: Interval) -> Interval {
        let (s, c) = (x.sin(), x.cos());
        let (sn, cn) = match n % 4 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        match self {
            Analytic::Sin => sn,
            Analytic::Cos => cn,
        }
    }
}

/// Degree-`degree` Taylor expansion of `f(p)` about the center of `p`, plus a
/// Lagrange remainder on a fresh independent indeterminate.
pub fn pz_analytic(p: &PolyZonotope, f: Analytic, degree: usize) -> Result<PolyZonotope> {
    if p.size() != 1 {
        return dim_err("analytic functions take a scalar set");
    }
    if degree == 0 {
        return Err(Error::Config("Taylor degree must be at least 1".into()));
    }
    let c = p.center()[0];
    let d = p.add_constant(&[-c])?;
    let mut out = PolyZonotope::scalar(f.derivative(0, c));
    if d.n_terms() == 0 {
        return Ok(out);
    }
    let mut power = d.clone();
    let mut factorial = 1.0;
    for n in 1..=degree {
        factorial *= n as f64;
        out = out.add(&power.scale(f.derivative(n, c) / factorial))?;
        power = power.mul(&d)?;
    }
    factorial *= (degree + 1) as f64;
    let m = f.derivative_enclosure(degree + 1, p.bounds().data[0]);
    let rem = (m * power.bounds().data[0]).scale(1.0 / factorial);
    out = out.add_constant(&[rem.mid()])?;
    if rem.rad() > 0.0 {
        out = out.add(&PolyZonotope::generator(IndeterminateId::fresh(), rem.rad()))?;
    }
    Ok(out)
}

pub fn pz_sin(p: &PolyZonotope, degree: usize) -> Result<PolyZonotope> {
    pz_analytic(p, Analytic::Sin, degree)
}

pub fn pz_cos(p: &PolyZonotope, degree: usize) -> Result<PolyZonotope> {
    pz_analytic(p, Analytic::Cos, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn point_inputs_are_exact() {
        let s = pz_sin(&PolyZonotope::scalar(FRAC_PI_2), 6).unwrap();
        assert!(s.is_point());
        assert_eq!(s.center(), vec![1.0]);
        assert_eq!(pz_cos(&PolyZonotope::scalar(0.0), 6).unwrap(), PolyZonotope::scalar(1.0));
    }

    fn check_containment(f: Analytic, c0: f64, c1: f64, samples: usize, seed: u64) {
        let x = IndeterminateId::parameter(0);
        let p = PolyZonotope::scalar(c0).add(&PolyZonotope::generator(x, c1)).unwrap();
        let out = pz_analytic(&p, f, 6).unwrap();
        let rest: Vec<_> = out.indeterminates().into_iter().filter(|&i| i != x).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let v: f64 = rng.gen_range(-1.0..=1.0);
            let arg = c0 + c1 * v;
            let exact = match f {
                Analytic::Sin => arg.sin(),
                Analytic::Cos => arg.cos(),
            };
            // membership: slice the input indeterminate, bound the remainder
            let b = out.slice(x, v).unwrap().pz.bounds().data[0];
            assert!(b.contains_with_slack(exact, 1e-12), "{f:?}({arg}) = {exact} not in {b:?}");
            // and the remainder really is the only freedom left
            let mut a: HashMap<_, _> = rest.iter().map(|&i| (i, 0.0)).collect();
            a.insert(x, v);
            assert!((out.evaluate(&a).unwrap()[0] - exact).abs() <= b.rad() + 1e-12);
        }
    }

    #[test]
    fn sin_enclosure_holds_on_dense_samples() {
        check_containment(Analytic::Sin, 0.3, 0.2, 100_000, 1);
    }

    #[test]
    fn random_trig_enclosures() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for s in 0..20 {
            let c0 = rng.gen_range(-4.0..4.0);
            let c1 = rng.gen_range(0.0..std::f64::consts::FRAC_PI_4);
            let f = if s % 2 == 0 { Analytic::Sin } else { Analytic::Cos };
            check_containment(f, c0, c1, 5_000, s);
        }
    }
}
