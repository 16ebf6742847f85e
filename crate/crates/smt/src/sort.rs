use serde::{Deserialize, Serialize};
use std::fmt;

/// Sort (type) of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    /// Bitvector of the given width in bits. Width is always nonzero.
    BitVec(u32),
    /// Array from `BitVec(index)` to `BitVec(value)`.
    Array { index: u32, value: u32 },
}

impl Sort {
    pub fn is_bool(&self) -> bool {
        matches!(self, Sort::Bool)
    }

    pub fn is_bitvec(&self) -> bool {
        matches!(self, Sort::BitVec(_))
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Sort::Array { .. })
    }

    /// Bitvector width, if this is a bitvector sort.
    pub fn width(&self) -> Option<u32> {
        match self {
            Sort::BitVec(w) => Some(*w),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Array { index, value } => {
                write!(f, "(Array (_ BitVec {index}) (_ BitVec {value}))")
            }
        }
    }
}
