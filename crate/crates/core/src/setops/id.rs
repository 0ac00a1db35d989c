use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

/// Role of an indeterminate inside a planning iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Tag {
    /// `x_t` of time subinterval `i`.
    Time = 0,
    /// `x_k` of joint `j`.
    Parameter = 1,
    /// Position tracking error of joint `j`.
    PositionError = 2,
    /// Velocity tracking error of joint `j`.
    VelocityError = 3,
    /// One uncertain inertial parameter.
    Inertial = 4,
    /// Fresh independent generator (Taylor remainder, reduction box, link volume).
    Remainder = 5,
}

impl Tag {
    pub fn from_u8(v: u8) -> Option<Tag> {
        Some(match v {
            0 => Tag::Time,
            1 => Tag::Parameter,
            2 => Tag::PositionError,
            3 => Tag::VelocityError,
            4 => Tag::Inertial,
            5 => Tag::Remainder,
            _ => return None,
        })
    }
}

const TAG_SHIFT: u32 = 56;
const INDEX_MASK: u64 = (1 << TAG_SHIFT) - 1;

/// Globally unique name of an indeterminate ranging over `[-1, 1]`.
///
/// Packed as `tag << 56 | index`, so ordering is by tag first and then index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndeterminateId(u64);

static NEXT_FRESH: AtomicU64 = AtomicU64::new(0);

impl IndeterminateId {
    pub fn new(tag: Tag, index: u64) -> Self {
        assert!(index <= INDEX_MASK, "indeterminate index overflow");
        IndeterminateId(((tag as u64) << TAG_SHIFT) | index)
    }

    pub fn time(i: usize) -> Self {
        Self::new(Tag::Time, i as u64)
    }

    pub fn parameter(j: usize) -> Self {
        Self::new(Tag::Parameter, j as u64)
    }

    pub fn position_error(j: usize) -> Self {
        Self::new(Tag::PositionError, j as u64)
    }

    pub fn velocity_error(j: usize) -> Self {
        Self::new(Tag::VelocityError, j as u64)
    }

    pub fn inertial(index: usize) -> Self {
        Self::new(Tag::Inertial, index as u64)
    }

    /// Allocates a never-before-used remainder indeterminate.
    ///
    /// Allocation is monotone per thread, so the relative order of the ids
    /// created by one sequential computation is reproducible even though the
    /// absolute counter values are not.
    pub fn fresh() -> Self {
        let n = NEXT_FRESH.fetch_add(1, Ordering::Relaxed);
        Self::new(Tag::Remainder, n & INDEX_MASK)
    }

    pub fn tag(self) -> Tag {
        Tag::from_u8((self.0 >> TAG_SHIFT) as u8).expect("valid tag by construction")
    }

    pub fn index(self) -> u64 {
        self.0 & INDEX_MASK
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Inverse of [`IndeterminateId::raw`]; `None` for an unknown tag byte.
    pub fn from_raw(raw: u64) -> Option<Self> {
        Tag::from_u8((raw >> TAG_SHIFT) as u8).map(|_| IndeterminateId(raw))
    }

    /// Ids that can be sliced by a planner; remainder ids are never sliceable.
    pub fn is_sliceable(self) -> bool {
        self.tag() != Tag::Remainder
    }
}

impl fmt::Debug for IndeterminateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndeterminateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.tag() {
            Tag::Time => "t",
            Tag::Parameter => "k",
            Tag::PositionError => "ep",
            Tag::VelocityError => "ev",
            Tag::Inertial => "d",
            Tag::Remainder => "r",
        };
        write!(f, "x_{}{}", prefix, self.index())
    }
}
