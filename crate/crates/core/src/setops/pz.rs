//! Sparse polynomial zonotopes.
//!
//! A [`PolyZonotope`] is a polynomial with matrix-valued coefficients over
//! named indeterminates, each ranging over `[-1, 1]`. The set it denotes is the
//! image of the polynomial over the indeterminate box. Two values that share an
//! indeterminate are dependent, so arithmetic between them is exact; values with
//! disjoint indeterminates combine like a Minkowski sum/product.
//!
//! Terms are kept in canonical form: sorted by monomial, equal monomials merged,
//! and coefficients whose entries are all below [`DROP_TOLERANCE`] discarded.

use std::collections::{BTreeSet, HashMap};

use smallvec::SmallVec;

use super::id::IndeterminateId;
use super::interval::{Interval, IntervalArray};
use crate::error::{dim_err, Error, Result};

/// Coefficients with every entry below this magnitude are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Sorted list of `(indeterminate, exponent)` with strictly positive exponents.
pub type Monomial = SmallVec<[(IndeterminateId, u16); 4]>;

/// Polynomial zonotope with `rows x cols` coefficients (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyZonotope {
    rows: usize,
    cols: usize,
    monos: Vec<Monomial>,
    coefs: Vec<f64>,
}

/// Result of [`PolyZonotope::slice`].
#[derive(Debug, Clone)]
pub struct Sliced {
    pub pz: PolyZonotope,
    /// `false` when the sliced indeterminate did not occur in the input.
    pub id_present: bool,
}

pub(crate) fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    if a.is_empty() {
        return b.clone();
    }
    if b.is_empty() {
        return a.clone();
    }
    let mut out = Monomial::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Collects unsorted terms and produces canonical storage.
struct Accumulator {
    size: usize,
    monos: Vec<Monomial>,
    coefs: Vec<f64>,
}

impl Accumulator {
    fn with_capacity(size: usize, n: usize) -> Self {
        Accumulator { size, monos: Vec::with_capacity(n), coefs: Vec::with_capacity(n * size) }
    }

    fn push(&mut self, mono: Monomial, coef: &[f64]) {
        debug_assert_eq!(coef.len(), self.size);
        self.monos.push(mono);
        self.coefs.extend_from_slice(coef);
    }

    /// Pushes a term and returns its coefficient slot for in-place writes.
    fn push_slot(&mut self, mono: Monomial) -> &mut [f64] {
        self.monos.push(mono);
        let start = self.coefs.len();
        self.coefs.resize(start + self.size, 0.0);
        &mut self.coefs[start..]
    }

    fn finish(self, rows: usize, cols: usize) -> PolyZonotope {
        let size = self.size;
        let n = self.monos.len();
        let mut order: Vec<usize> = (0..n).collect();
        // already-sorted input is common (add of canonical operands)
        if !self.monos.windows(2).all(|w| w[0] < w[1]) {
            order.sort_by(|&a, &b| self.monos[a].cmp(&self.monos[b]));
        }
        let mut monos = Vec::with_capacity(n);
        let mut coefs = Vec::with_capacity(n * size);
        let mut src_monos: Vec<Option<Monomial>> = self.monos.into_iter().map(Some).collect();
        let mut k = 0;
        while k < n {
            let idx = order[k];
            let mono = src_monos[idx].take().expect("each term consumed once");
            let start = coefs.len();
            coefs.extend_from_slice(&self.coefs[idx * size..(idx + 1) * size]);
            let mut m = k + 1;
            while m < n && src_monos[order[m]].as_ref() == Some(&mono) {
                let o = order[m];
                for (dst, src) in coefs[start..].iter_mut().zip(&self.coefs[o * size..(o + 1) * size]) {
                    *dst += *src;
                }
                src_monos[o] = None;
                m += 1;
            }
            if coefs[start..].iter().all(|c| c.abs() < DROP_TOLERANCE) {
                coefs.truncate(start);
            } else {
                monos.push(mono);
            }
            k = m;
        }
        PolyZonotope { rows, cols, monos, coefs }
    }
}

impl PolyZonotope {
    // ---- construction ------------------------------------------------------

    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyZonotope { rows, cols, monos: Vec::new(), coefs: Vec::new() }
    }

    /// Constant (point) set with row-major `data`.
    pub fn constant(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(format!("{} entries for a {rows}x{cols} constant", data.len()));
        }
        let mut acc = Accumulator::with_capacity(rows * cols, 1);
        acc.push(Monomial::new(), data);
        Ok(acc.finish(rows, cols))
    }

    pub fn scalar(v: f64) -> Self {
        Self::constant(1, 1, &[v]).expect("1x1")
    }

    pub fn vector(v: &[f64]) -> Self {
        Self::constant(v.len(), 1, v).expect("n x 1")
    }

    pub fn identity(n: usize) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        Self::constant(n, n, &d).expect("n x n")
    }

    /// Scalar `coef * x_id`.
    pub fn generator(id: IndeterminateId, coef: f64) -> Self {
        Self::monomial(1, 1, smallvec::smallvec![(id, 1)], &[coef]).expect("1x1")
    }

    /// Single-term set `coef * mono`.
    pub fn monomial(rows: usize, cols: usize, mono: Monomial, coef: &[f64]) -> Result<Self> {
        Self::from_terms(rows, cols, vec![(mono, coef.to_vec())])
    }

    /// Builds a canonical set from arbitrary (possibly repeated) terms.
    pub fn from_terms(rows: usize, cols: usize, terms: Vec<(Monomial, Vec<f64>)>) -> Result<Self> {
        let size = rows * cols;
        let mut acc = Accumulator::with_capacity(size, terms.len());
        for (mut mono, coef) in terms {
            if coef.len() != size {
                return dim_err(format!("term with {} entries in a {rows}x{cols} set", coef.len()));
            }
            mono.retain(|(_, e)| *e > 0);
            mono.sort_by_key(|(id, _)| *id);
            let mut merged = Monomial::new();
            for (id, e) in mono {
                match merged.last_mut() {
                    Some(last) if last.0 == id => last.1 += e,
                    _ => merged.push((id, e)),
                }
            }
            acc.push(merged, &coef);
        }
        Ok(acc.finish(rows, cols))
    }

    /// Converts an interval array to a set, one fresh indeterminate per
    /// non-degenerate entry.
    pub fn from_interval(iv: &IntervalArray) -> Self {
        Self::from_interval_with(iv, |_| IndeterminateId::fresh())
    }

    /// As [`PolyZonotope::from_interval`], naming the indeterminate of entry `e` with `id_of(e)`.
    pub fn from_interval_with(iv: &IntervalArray, mut id_of: impl FnMut(usize) -> IndeterminateId) -> Self {
        let size = iv.data.len();
        let mut acc = Accumulator::with_capacity(size, size + 1);
        acc.push(Monomial::new(), &iv.data.iter().map(|i| i.mid()).collect::<Vec<_>>());
        for (e, i) in iv.data.iter().enumerate() {
            if i.rad() > 0.0 {
                let slot = acc.push_slot(smallvec::smallvec![(id_of(e), 1)]);
                slot[e] = i.rad();
            }
        }
        acc.finish(iv.rows, iv.cols)
    }

    /// Constant 3x3 matrix set.
    pub fn from_matrix3(m: &nalgebra::Matrix3<f64>) -> Self {
        let d: Vec<f64> = (0..3).flat_map(|r| (0..3).map(move |c| m[(r, c)])).collect();
        Self::constant(3, 3, &d).expect("3x3")
    }

    /// Constant 3-vector set.
    pub fn from_vector3(v: &nalgebra::Vector3<f64>) -> Self {
        Self::vector(v.as_slice())
    }

    /// Stacks scalar sets into a column vector.
    pub fn stack(parts: &[PolyZonotope]) -> Result<Self> {
        if parts.iter().any(|p| p.size() != 1) {
            return dim_err("stack expects scalar parts");
        }
        let n = parts.len();
        let total: usize = parts.iter().map(|p| p.n_terms()).sum();
        let mut acc = Accumulator::with_capacity(n, total);
        for (i, p) in parts.iter().enumerate() {
            for (m, c) in p.terms() {
                acc.push_slot(m.clone())[i] = c[0];
            }
        }
        Ok(acc.finish(n, 1))
    }

    // ---- inspection --------------------------------------------------------

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of coefficient entries (`rows * cols`).
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_terms(&self) -> usize {
        self.monos.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &[f64])> {
        let size = self.size();
        self.monos.iter().enumerate().map(move |(i, m)| (m, &self.coefs[i * size..(i + 1) * size]))
    }

    /// Constant coefficient `g_0`.
    pub fn center(&self) -> Vec<f64> {
        match self.monos.first() {
            Some(m) if m.is_empty() => self.coefs[..self.size()].to_vec(),
            _ => vec![0.0; self.size()],
        }
    }

    pub fn is_point(&self) -> bool {
        self.monos.iter().all(|m| m.is_empty())
    }

    pub fn indeterminates(&self) -> BTreeSet<IndeterminateId> {
        self.monos.iter().flat_map(|m| m.iter().map(|(id, _)| *id)).collect()
    }

    pub fn contains_id(&self, id: IndeterminateId) -> bool {
        self.monos.iter().any(|m| m.iter().any(|(i, _)| *i == id))
    }

    pub fn max_degree_in(&self, id: IndeterminateId) -> u16 {
        self.monos.iter().flat_map(|m| m.iter().filter(|(i, _)| *i == id).map(|(_, e)| *e)).max().unwrap_or(0)
    }

    fn same_shape(&self, o: &PolyZonotope) -> bool {
        self.rows == o.rows && self.cols == o.cols
    }

    // ---- structural ops ----------------------------------------------------

    /// Scalar entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> PolyZonotope {
        assert!(r < self.rows && c < self.cols, "entry out of range");
        let e = r * self.cols + c;
        let mut acc = Accumulator::with_capacity(1, self.n_terms());
        for (m, coef) in self.terms() {
            if coef[e].abs() >= DROP_TOLERANCE {
                acc.push(m.clone(), &coef[e..=e]);
            }
        }
        acc.finish(1, 1)
    }

    /// Entry `i` of a vector.
    pub fn component(&self, i: usize) -> PolyZonotope {
        self.entry(i, 0)
    }

    pub fn transpose(&self) -> PolyZonotope {
        let (r, c) = (self.rows, self.cols);
        let mut coefs = vec![0.0; self.coefs.len()];
        for t in 0..self.n_terms() {
            let src = &self.coefs[t * r * c..(t + 1) * r * c];
            let dst = &mut coefs[t * r * c..(t + 1) * r * c];
            for i in 0..r {
                for j in 0..c {
                    dst[j * r + i] = src[i * c + j];
                }
            }
        }
        PolyZonotope { rows: c, cols: r, monos: self.monos.clone(), coefs }
    }

    /// Reinterprets the coefficient layout as `rows x cols` (same entry count).
    pub fn reshape(mut self, rows: usize, cols: usize) -> Result<PolyZonotope> {
        if rows * cols != self.size() {
            return dim_err("reshape changes the entry count");
        }
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }

    // ---- arithmetic --------------------------------------------------------

    /// Exact polynomial sum (Minkowski sum for disjoint indeterminates).
    pub fn add(&self, o: &PolyZonotope) -> Result<PolyZonotope> {
        if !self.same_shape(o) {
            return dim_err(format!("add {}x{} and {}x{}", self.rows, self.cols, o.rows, o.cols));
        }
        Ok(self.merge_with(o, 1.0))
    }

    pub fn sub(&self, o: &PolyZonotope) -> Result<PolyZonotope> {
        if !self.same_shape(o) {
            return dim_err(format!("sub {}x{} and {}x{}", self.rows, self.cols, o.rows, o.cols));
        }
        Ok(self.merge_with(o, -1.0))
    }

    fn merge_with(&self, o: &PolyZonotope, sign: f64) -> PolyZonotope {
        let size = self.size();
        let mut acc = Accumulator::with_capacity(size, self.n_terms() + o.n_terms());
        let (mut i, mut j) = (0, 0);
        while i < self.n_terms() || j < o.n_terms() {
            let take_left = j >= o.n_terms() || (i < self.n_terms() && self.monos[i] <= o.monos[j]);
            if take_left {
                let slot = acc.push_slot(self.monos[i].clone());
                slot.copy_from_slice(&self.coefs[i * size..(i + 1) * size]);
                if j < o.n_terms() && self.monos[i] == o.monos[j] {
                    for (d, s) in slot.iter_mut().zip(&o.coefs[j * size..(j + 1) * size]) {
                        *d += sign * s;
                    }
                    j += 1;
                }
                i += 1;
            } else {
                let slot = acc.push_slot(o.monos[j].clone());
                for (d, s) in slot.iter_mut().zip(&o.coefs[j * size..(j + 1) * size]) {
                    *d = sign * s;
                }
                j += 1;
            }
        }
        acc.finish(self.rows, self.cols)
    }

    pub fn neg(&self) -> PolyZonotope {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> PolyZonotope {
        let mut acc = Accumulator::with_capacity(self.size(), self.n_terms());
        for (m, c) in self.terms() {
            let slot = acc.push_slot(m.clone());
            for (d, v) in slot.iter_mut().zip(c) {
                *d = v * s;
            }
        }
        acc.finish(self.rows, self.cols)
    }

    /// Adds a constant of the same shape.
    pub fn add_constant(&self, c: &[f64]) -> Result<PolyZonotope> {
        self.add(&PolyZonotope::constant(self.rows, self.cols, c)?)
    }

    /// Product: scalar times anything, or a matrix product with compatible
    /// inner dimensions.
    pub fn mul(&self, o: &PolyZonotope) -> Result<PolyZonotope> {
        if self.size() == 1 {
            return Ok(self.pairwise(o, o.rows, o.cols, |a, b, out| {
                let s = a[0];
                for (d, v) in out.iter_mut().zip(b) {
                    *d = s * v;
                }
            }));
        }
        if o.size() == 1 {
            return Ok(self.pairwise(o, self.rows, self.cols, |a, b, out| {
                let s = b[0];
                for (d, v) in out.iter_mut().zip(a) {
                    *d = v * s;
                }
            }));
        }
        if self.cols != o.rows {
            return dim_err(format!("mul {}x{} by {}x{}", self.rows, self.cols, o.rows, o.cols));
        }
        let (n, m, k) = (self.rows, self.cols, o.cols);
        Ok(self.pairwise(o, n, k, |a, b, out| {
            for r in 0..n {
                for c in 0..k {
                    let mut s = 0.0;
                    for t in 0..m {
                        s += a[r * m + t] * b[t * k + c];
                    }
                    out[r * k + c] = s;
                }
            }
        }))
    }

    /// Set-based cross product of two 3-vectors.
    pub fn cross(&self, o: &PolyZonotope) -> Result<PolyZonotope> {
        if self.size() != 3 || o.size() != 3 || self.cols != 1 || o.cols != 1 {
            return dim_err("cross product needs two 3-vectors");
        }
        Ok(self.pairwise(o, 3, 1, |a, b, out| {
            out[0] = a[1] * b[2] - a[2] * b[1];
            out[1] = a[2] * b[0] - a[0] * b[2];
            out[2] = a[0] * b[1] - a[1] * b[0];
        }))
    }

    /// Dot product of two vectors of equal length.
    pub fn dot(&self, o: &PolyZonotope) -> Result<PolyZonotope> {
        if self.cols != 1 || o.cols != 1 || self.rows != o.rows {
            return dim_err("dot product needs equal-length vectors");
        }
        self.transpose().mul(o)
    }

    /// Skew-symmetric matrix set `[p]_x` of a 3-vector set.
    pub fn skew(&self) -> Result<PolyZonotope> {
        if self.size() != 3 || self.cols != 1 {
            return dim_err("skew matrix needs a 3-vector");
        }
        let mut acc = Accumulator::with_capacity(9, self.n_terms());
        for (m, g) in self.terms() {
            acc.push(m.clone(), &[0.0, -g[2], g[1], g[2], 0.0, -g[0], -g[1], g[0], 0.0]);
        }
        Ok(acc.finish(3, 3))
    }

    fn pairwise(&self, o: &PolyZonotope, rows: usize, cols: usize, f: impl Fn(&[f64], &[f64], &mut [f64])) -> PolyZonotope {
        let (sa, sb) = (self.size(), o.size());
        let mut acc = Accumulator::with_capacity(rows * cols, self.n_terms() * o.n_terms());
        for (i, ma) in self.monos.iter().enumerate() {
            let a = &self.coefs[i * sa..(i + 1) * sa];
            for (j, mb) in o.monos.iter().enumerate() {
                let b = &o.coefs[j * sb..(j + 1) * sb];
                let slot = acc.push_slot(mono_mul(ma, mb));
                f(a, b, slot);
            }
        }
        acc.finish(rows, cols)
    }

    // ---- slicing, bounding, evaluation -------------------------------------

    /// Substitutes `value` for `id`; the result is a subset of `self`.
    pub fn slice(&self, id: IndeterminateId, value: f64) -> Result<Sliced> {
        check_unit(value)?;
        if !self.contains_id(id) {
            return Ok(Sliced { pz: self.clone(), id_present: false });
        }
        let pz = self.substitute(|i| if i == id { Some(value) } else { None });
        Ok(Sliced { pz, id_present: true })
    }

    /// Slices every id of `assignment` at once; ids absent from `self` are ignored.
    pub fn slice_many(&self, assignment: &HashMap<IndeterminateId, f64>) -> Result<PolyZonotope> {
        for &v in assignment.values() {
            check_unit(v)?;
        }
        Ok(self.substitute(|i| assignment.get(&i).copied()))
    }

    fn substitute(&self, lookup: impl Fn(IndeterminateId) -> Option<f64>) -> PolyZonotope {
        let size = self.size();
        let mut acc = Accumulator::with_capacity(size, self.n_terms());
        for (m, c) in self.terms() {
            let mut factor = 1.0;
            let mut rest = Monomial::new();
            for &(id, e) in m {
                match lookup(id) {
                    Some(v) => factor *= v.powi(e as i32),
                    None => rest.push((id, e)),
                }
            }
            let slot = acc.push_slot(rest);
            for (d, v) in slot.iter_mut().zip(c) {
                *d = v * factor;
            }
        }
        acc.finish(self.rows, self.cols)
    }

    /// `[g_0 - sum|g_i|, g_0 + sum|g_i|]` entry-wise; ignores dependencies.
    pub fn bounds(&self) -> IntervalArray {
        let center = self.center();
        let radius = self.radius();
        let data = center.iter().zip(&radius).map(|(&c, &r)| Interval { lo: c - r, hi: c + r }).collect();
        IntervalArray { rows: self.rows, cols: self.cols, data }
    }

    /// Entry-wise sum of absolute non-constant coefficients.
    pub fn radius(&self) -> Vec<f64> {
        let size = self.size();
        let mut r = vec![0.0; size];
        for (m, c) in self.terms() {
            if !m.is_empty() {
                for (ri, v) in r.iter_mut().zip(c) {
                    *ri += v.abs();
                }
            }
        }
        r
    }

    /// Exact evaluation; every indeterminate must be assigned a value in `[-1, 1]`.
    pub fn evaluate(&self, assignment: &HashMap<IndeterminateId, f64>) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.size()];
        for (m, c) in self.terms() {
            let mut factor = 1.0;
            for &(id, e) in m {
                let v = *assignment.get(&id).ok_or(Error::IncompleteAssignment(id))?;
                check_unit(v)?;
                factor *= v.powi(e as i32);
            }
            for (o, v) in out.iter_mut().zip(c) {
                *o += factor * v;
            }
        }
        Ok(out)
    }

    /// Formal partial derivative with respect to `id`.
    pub fn differentiate(&self, id: IndeterminateId) -> PolyZonotope {
        let mut acc = Accumulator::with_capacity(self.size(), self.n_terms());
        for (m, c) in self.terms() {
            if let Some(pos) = m.iter().position(|(i, _)| *i == id) {
                let e = m[pos].1;
                let mut rest = m.clone();
                if e == 1 {
                    rest.remove(pos);
                } else {
                    rest[pos].1 = e - 1;
                }
                let slot = acc.push_slot(rest);
                for (d, v) in slot.iter_mut().zip(c) {
                    *d = v * e as f64;
                }
            }
        }
        acc.finish(self.rows, self.cols)
    }

    /// Order reduction: keeps the `max_terms` largest non-constant terms and
    /// encloses the rest in a box of fresh independent generators (one per
    /// entry with nonzero dropped mass). The result contains `self`.
    pub fn reduce(&self, max_terms: usize) -> PolyZonotope {
        let size = self.size();
        let has_const = self.monos.first().is_some_and(|m| m.is_empty());
        let first = usize::from(has_const);
        let n_gen = self.n_terms() - first;
        if n_gen <= max_terms.max(1) {
            return self.clone();
        }
        let norms: Vec<f64> =
            (first..self.n_terms()).map(|t| self.coefs[t * size..(t + 1) * size].iter().map(|v| v.abs()).sum()).collect();
        let mut order: Vec<usize> = (0..n_gen).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        let mut keep = vec![false; n_gen];
        for &o in order.iter().take(max_terms.max(1)) {
            keep[o] = true;
        }
        let mut box_radius = vec![0.0; size];
        let mut acc = Accumulator::with_capacity(size, max_terms + size + 1);
        if has_const {
            acc.push(Monomial::new(), &self.coefs[..size]);
        }
        for (g, &kept) in keep.iter().enumerate() {
            let t = g + first;
            let c = &self.coefs[t * size..(t + 1) * size];
            if kept {
                acc.push(self.monos[t].clone(), c);
            } else {
                for (r, v) in box_radius.iter_mut().zip(c) {
                    *r += v.abs();
                }
            }
        }
        for (e, &r) in box_radius.iter().enumerate() {
            if r > 0.0 {
                acc.push_slot(smallvec::smallvec![(IndeterminateId::fresh(), 1)])[e] = r;
            }
        }
        acc.finish(self.rows, self.cols)
    }
}

fn check_unit(v: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain { value: v, domain: "[-1, 1]" })
    }
}
