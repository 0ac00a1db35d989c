//! Interval, zonotope and polynomial-zonotope arithmetic.

mod analytic;
mod id;
mod interval;
mod pz;
mod zonotope;

pub use analytic::{pz_analytic, pz_cos, pz_sin, Analytic, DEFAULT_TAYLOR_DEGREE};
pub use id::{IndeterminateId, Tag};
pub use interval::{interval_op, Interval, IntervalArray, IntervalOp};
pub use pz::{Monomial, PolyZonotope, Sliced, DROP_TOLERANCE};
pub use zonotope::{zono_to_interval, Zonotope};

/// Default cap on dependent terms kept by [`PolyZonotope::reduce`].
pub const DEFAULT_MAX_TERMS: usize = 40;

/// Accuracy/size knobs shared by every set-valued pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PzOptions {
    pub taylor_degree: usize,
    pub max_terms: usize,
}

impl Default for PzOptions {
    fn default() -> Self {
        PzOptions { taylor_degree: DEFAULT_TAYLOR_DEGREE, max_terms: DEFAULT_MAX_TERMS }
    }
}
