//! Closed real intervals and interval arrays.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Config(format!("interval lower bound {lo} exceeds upper bound {hi}")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn symmetric(radius: f64) -> Self {
        Interval { lo: -radius.abs(), hi: radius.abs() }
    }

    pub fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn rad(self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_with_slack(self, v: f64, slack: f64) -> bool {
        self.lo - slack <= v && v <= self.hi + slack
    }

    pub fn is_subset_of(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Largest absolute value of any member.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn scale(self, s: f64) -> Interval {
        if s >= 0.0 {
            Interval { lo: self.lo * s, hi: self.hi * s }
        } else {
            Interval { lo: self.hi * s, hi: self.lo * s }
        }
    }

    /// Enclosure of `sin` over the interval.
    pub fn sin(self) -> Interval {
        // sin(x) = cos(x - pi/2)
        (self - Interval::point(FRAC_PI_2)).cos()
    }

    /// Enclosure of `cos` over the interval.
    pub fn cos(self) -> Interval {
        if self.width() >= TAU {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (a, b) = (self.lo, self.hi);
        let mut lo = a.cos().min(b.cos());
        let mut hi = a.cos().max(b.cos());
        // maxima of cos at 2n*pi, minima at (2n+1)*pi
        let first_max = (a / TAU).ceil() * TAU;
        if first_max <= b {
            hi = 1.0;
        }
        let first_min = ((a - PI) / TAU).ceil() * TAU + PI;
        if first_min <= b {
            lo = -1.0;
        }
        Interval { lo, hi }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: self.lo - o.hi, hi: self.hi - o.lo }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval { lo: p.iter().copied().fold(f64::INFINITY, f64::min), hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max) }
    }
}

/// Row-major interval array; vectors are `n x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Interval>,
}

/// Binary interval operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalOp {
    Add,
    Sub,
    /// Element-wise product, or scalar times array when one side is `1 x 1`.
    Mul,
    MatMul,
    Cross,
}

impl IntervalArray {
    pub fn new(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(format!("{} entries for a {rows}x{cols} interval array", data.len()));
        }
        Ok(IntervalArray { rows, cols, data })
    }

    pub fn vector(data: Vec<Interval>) -> Self {
        IntervalArray { rows: data.len(), cols: 1, data }
    }

    pub fn scalar(iv: Interval) -> Self {
        IntervalArray { rows: 1, cols: 1, data: vec![iv] }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return dim_err("lower/upper bound length mismatch");
        }
        let data = lo.iter().zip(hi).map(|(&l, &h)| Interval::new(l, h)).collect::<Result<Vec<_>>>()?;
        Ok(Self::vector(data))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> Interval {
        self.data[r * self.cols + c]
    }

    pub fn lo(&self) -> Vec<f64> {
        self.data.iter().map(|i| i.lo).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.data.iter().map(|i| i.hi).collect()
    }

    pub fn contains_point(&self, p: &[f64], slack: f64) -> bool {
        p.len() == self.data.len() && self.data.iter().zip(p).all(|(iv, &v)| iv.contains_with_slack(v, slack))
    }

    pub fn is_subset_of(&self, other: &IntervalArray) -> bool {
        self.data.len() == other.data.len() && self.data.iter().zip(&other.data).all(|(a, b)| a.is_subset_of(*b))
    }

    /// Skew-symmetric matrix `[x]_x` of an interval 3-vector.
    pub fn skew(&self) -> Result<IntervalArray> {
        if self.data.len() != 3 {
            return dim_err("skew matrix needs a 3-vector");
        }
        let z = Interval::point(0.0);
        let (a, b, c) = (self.data[0], self.data[1], self.data[2]);
        IntervalArray::new(3, 3, vec![z, -c, b, c, z, -a, -b, a, z])
    }

    fn same_shape(&self, o: &IntervalArray) -> bool {
        self.rows == o.rows && self.cols == o.cols
    }
}

/// Applies `kind` to two interval arrays.
pub fn interval_op(a: &IntervalArray, b: &IntervalArray, kind: IntervalOp) -> Result<IntervalArray> {
    match kind {
        IntervalOp::Add | IntervalOp::Sub => {
            if !a.same_shape(b) {
                return dim_err(format!("{}x{} vs {}x{}", a.rows, a.cols, b.rows, b.cols));
            }
            let data = a.data.iter().zip(&b.data).map(|(&x, &y)| if kind == IntervalOp::Add { x + y } else { x - y }).collect();
            Ok(IntervalArray { rows: a.rows, cols: a.cols, data })
        }
        IntervalOp::Mul => {
            if a.len() == 1 {
                let s = a.data[0];
                Ok(IntervalArray { rows: b.rows, cols: b.cols, data: b.data.iter().map(|&y| s * y).collect() })
            } else if b.len() == 1 {
                let s = b.data[0];
                Ok(IntervalArray { rows: a.rows, cols: a.cols, data: a.data.iter().map(|&x| x * s).collect() })
            } else if a.same_shape(b) {
                let data = a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).collect();
                Ok(IntervalArray { rows: a.rows, cols: a.cols, data })
            } else {
                dim_err("element-wise product of differently shaped arrays")
            }
        }
        IntervalOp::MatMul => {
            if a.cols != b.rows {
                return dim_err(format!("matmul {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols));
            }
            let mut data = Vec::with_capacity(a.rows * b.cols);
            for r in 0..a.rows {
                for c in 0..b.cols {
                    let mut acc = Interval::point(0.0);
                    for k in 0..a.cols {
                        acc = acc + a.get(r, k) * b.get(k, c);
                    }
                    data.push(acc);
                }
            }
            Ok(IntervalArray { rows: a.rows, cols: b.cols, data })
        }
        IntervalOp::Cross => {
            if a.len() != 3 || b.len() != 3 {
                return dim_err("cross product needs 3-vectors");
            }
            interval_op(&a.skew()?, &IntervalArray::vector(b.data.clone()), IntervalOp::MatMul)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn endpoint_arithmetic() {
        assert_eq!(iv(1.0, 2.0) + iv(3.0, 4.0), iv(4.0, 6.0));
        assert_eq!(iv(-1.0, 2.0) * iv(3.0, 4.0), iv(-4.0, 8.0));
        assert_eq!(iv(1.0, 2.0) - iv(3.0, 4.0), iv(-3.0, -1.0));
    }

    #[test]
    fn point_cross_product() {
        let e1 = IntervalArray::vector(vec![Interval::point(1.0), Interval::point(0.0), Interval::point(0.0)]);
        let e2 = IntervalArray::vector(vec![Interval::point(0.0), Interval::point(1.0), Interval::point(0.0)]);
        let e3 = interval_op(&e1, &e2, IntervalOp::Cross).unwrap();
        assert_eq!(e3.data, vec![Interval::point(0.0), Interval::point(0.0), Interval::point(1.0)]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = IntervalArray::vector(vec![Interval::point(1.0); 2]);
        let b = IntervalArray::vector(vec![Interval::point(1.0); 3]);
        assert!(matches!(interval_op(&a, &b, IntervalOp::Add), Err(Error::Dimension(_))));
        assert!(matches!(interval_op(&a, &b, IntervalOp::Cross), Err(Error::Dimension(_))));
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn trig_enclosures() {
        let s = iv(0.0, PI).sin();
        assert!((s.hi - 1.0).abs() < 1e-15 && s.lo.abs() < 1e-12);
        let c = iv(-0.1, 0.2).cos();
        assert_eq!(c.hi, 1.0);
        assert!((c.lo - 0.2f64.cos()).abs() < 1e-15);
        let c = iv(3.0, 3.5).cos();
        assert_eq!(c.lo, -1.0);
        assert_eq!(iv(0.0, 7.0).sin(), iv(-1.0, 1.0));
    }

    #[test]
    fn products_contain_sampled_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a0, a1): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (b0, b1): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let a = iv(a0.min(a1), a0.max(a1));
            let b = iv(b0.min(b1), b0.max(b1));
            let x = rng.gen_range(a.lo..=a.hi);
            let y = rng.gen_range(b.lo..=b.hi);
            assert!((a * b).contains_with_slack(x * y, 1e-12));
            assert!((a - b).contains_with_slack(x - y, 1e-12));
            assert!(a.sin().contains_with_slack(x.sin(), 1e-12));
            assert!(a.cos().contains_with_slack(x.cos(), 1e-12));
        }
    }
}
