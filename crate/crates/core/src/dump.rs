//! `WPZ1` binary dump of named polynomial zonotopes.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "WPZ1"  u32 n_sets
//! per set:   u32 name_len, name (UTF-8), u32 rows, u32 cols, u32 n_terms
//! per term:  u8 n_factors, n_factors x (u8 tag, u64 index, u16 exponent),
//!            rows*cols x f64 coefficients (row-major)
//! ```
//!
//! Terms appear in canonical order. Remainder indeterminates are renumbered
//! `0..m` by the rank of their id across the whole dump, so dumping the same
//! computation twice gives identical bytes even though the process-wide
//! allocation counter differs. On load they are mapped to fresh ids in the
//! same order, which keeps them independent of anything else in the process.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::setops::{IndeterminateId, Monomial, PolyZonotope, Tag, DROP_TOLERANCE};

pub const DUMP_MAGIC: &[u8; 4] = b"WPZ1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSet {
    pub name: String,
    pub set: PolyZonotope,
}

impl NamedSet {
    pub fn new(name: impl Into<String>, set: PolyZonotope) -> Self {
        NamedSet { name: name.into(), set }
    }
}

fn remainder_ranks(sets: &[NamedSet]) -> BTreeMap<IndeterminateId, u64> {
    let mut ids: BTreeMap<IndeterminateId, u64> = BTreeMap::new();
    for s in sets {
        for (mono, _) in s.set.terms() {
            for (id, _) in mono {
                if id.tag() == Tag::Remainder {
                    ids.insert(*id, 0);
                }
            }
        }
    }
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank as u64;
    }
    ids
}

pub fn encode(sets: &[NamedSet]) -> Result<Vec<u8>> {
    let ranks = remainder_ranks(sets);
    let mut out = Vec::new();
    out.extend_from_slice(DUMP_MAGIC);
    let u32_of = |n: usize, what: &str| u32::try_from(n).map_err(|_| Error::Dump(format!("{what} {n} too large")));
    out.extend_from_slice(&u32_of(sets.len(), "set count")?.to_le_bytes());
    for s in sets {
        out.extend_from_slice(&u32_of(s.name.len(), "name length")?.to_le_bytes());
        out.extend_from_slice(s.name.as_bytes());
        out.extend_from_slice(&u32_of(s.set.rows(), "rows")?.to_le_bytes());
        out.extend_from_slice(&u32_of(s.set.cols(), "cols")?.to_le_bytes());
        out.extend_from_slice(&u32_of(s.set.n_terms(), "term count")?.to_le_bytes());
        for (mono, coef) in s.set.terms() {
            let n = u8::try_from(mono.len()).map_err(|_| Error::Dump("monomial with more than 255 factors".into()))?;
            out.push(n);
            for (id, e) in mono {
                let index = if id.tag() == Tag::Remainder { ranks[id] } else { id.index() };
                out.push(id.tag() as u8);
                out.extend_from_slice(&index.to_le_bytes());
                out.extend_from_slice(&e.to_le_bytes());
            }
            for c in coef {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Dump(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

type RawTerm = (Vec<(Tag, u64, u16)>, Vec<f64>);
type RawSet = (String, usize, usize, Vec<RawTerm>);

/// Parses a dump. Only canonical input is accepted, so `encode(decode(b)) == b`.
pub fn decode(bytes: &[u8]) -> Result<Vec<NamedSet>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != DUMP_MAGIC {
        return Err(Error::Dump("missing WPZ1 header".into()));
    }
    let n_sets = r.u32()? as usize;
    // raw terms with remainder indices still in dump numbering
    let mut raw: Vec<RawSet> = Vec::new();
    let mut remainders: BTreeMap<u64, ()> = BTreeMap::new();
    for _ in 0..n_sets {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|e| Error::Dump(format!("set name: {e}")))?.to_string();
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let size = rows.checked_mul(cols).ok_or_else(|| Error::Dump("set size overflows".into()))?;
        if size == 0 {
            return Err(Error::Dump(format!("set `{name}` is empty ({rows}x{cols})")));
        }
        let n_terms = r.u32()? as usize;
        // every term carries at least its coefficients
        if n_terms.saturating_mul(size.saturating_mul(8)) > r.remaining() {
            return Err(Error::Dump(format!("set `{name}`: term count {n_terms} exceeds the data")));
        }
        let mut terms = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let nf = r.u8()? as usize;
            let mut factors = Vec::with_capacity(nf);
            for _ in 0..nf {
                let tag = Tag::from_u8(r.u8()?).ok_or_else(|| Error::Dump(format!("unknown tag at byte {}", r.pos - 1)))?;
                let index = r.u64()?;
                let e = r.u16()?;
                if e == 0 {
                    return Err(Error::Dump(format!("zero exponent in set `{name}`")));
                }
                if index >= 1 << 56 {
                    return Err(Error::Dump(format!("indeterminate index {index} out of range")));
                }
                if tag == Tag::Remainder {
                    remainders.insert(index, ());
                }
                factors.push((tag, index, e));
            }
            if !factors.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)) {
                return Err(Error::Dump(format!("set `{name}`: factors not in canonical order")));
            }
            let coef = (0..size).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
            if coef.iter().all(|c| c.abs() < DROP_TOLERANCE) {
                return Err(Error::Dump(format!("set `{name}`: negligible term")));
            }
            terms.push((factors, coef));
        }
        if !terms.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::Dump(format!("set `{name}`: terms not in canonical order")));
        }
        raw.push((name, rows, cols, terms));
    }
    if r.remaining() != 0 {
        return Err(Error::Dump(format!("{} trailing bytes", r.remaining())));
    }
    if remainders.keys().enumerate().any(|(rank, idx)| rank as u64 != *idx) {
        return Err(Error::Dump("remainder indices are not numbered 0..m".into()));
    }
    let fresh: Vec<IndeterminateId> = (0..remainders.len()).map(|_| IndeterminateId::fresh()).collect();
    raw.into_iter()
        .map(|(name, rows, cols, terms)| {
            let terms = terms
                .into_iter()
                .map(|(factors, coef)| {
                    let mono: Monomial = factors
                        .into_iter()
                        .map(|(tag, index, e)| {
                            let id = if tag == Tag::Remainder { fresh[index as usize] } else { IndeterminateId::new(tag, index) };
                            (id, e)
                        })
                        .collect();
                    (mono, coef)
                })
                .collect();
            Ok(NamedSet { name, set: PolyZonotope::from_terms(rows, cols, terms)? })
        })
        .collect()
}

pub fn write_file(path: &std::path::Path, sets: &[NamedSet]) -> Result<()> {
    std::fs::write(path, encode(sets)?)?;
    Ok(())
}

pub fn read_file(path: &std::path::Path) -> Result<Vec<NamedSet>> {
    decode(&std::fs::read(path)?)
}
