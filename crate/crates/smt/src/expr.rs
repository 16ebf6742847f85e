use crate::error::SmtError;
use crate::sort::Sort;
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Operators of the expression language. The set is closed: every symbolic
/// value any backend produces is built from these plus constants and
/// variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvSdiv,
    BvUrem,
    BvSrem,
    BvAnd,
    BvOr,
    BvXor,
    BvNot,
    BvNeg,
    BvShl,
    BvLshr,
    BvAshr,
    BvUlt,
    BvUle,
    BvSlt,
    BvSle,
    Eq,
    Not,
    And,
    Or,
    Ite,
    Concat,
    /// Bit slice, inclusive bounds, `hi >= lo`, zero-based from the LSB.
    Extract(u32, u32),
    ZeroExt(u32),
    SignExt(u32),
    Select,
    Store,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExprKind {
    /// Boolean literal.
    BoolConst(bool),
    /// Bitvector literal (sort `BitVec(w)`), or a constant array (sort
    /// `Array{..}`) where every element equals the value.
    Const(BigUint),
    /// Free variable; the sort lives on the node.
    Var(String),
    Op(OpKind, Vec<Expr>),
}

#[derive(Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExprNode {
    sort: Sort,
    kind: ExprKind,
}

/// Immutable, cheaply clonable expression handle. Equality and hashing are
/// structural; shared subtrees compare equal regardless of identity.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Expr(Arc<ExprNode>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::smtlib::expr_to_smtlib(self))
    }
}

fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - BigUint::one()
}

impl Expr {
    fn node(sort: Sort, kind: ExprKind) -> Expr {
        Expr(Arc::new(ExprNode { sort, kind }))
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Stable address of the underlying node, for identity-keyed memo tables.
    pub fn node_ptr(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    /// Width in bits; panics if the sort is not a bitvector.
    pub fn width(&self) -> u32 {
        match self.sort() {
            Sort::BitVec(w) => w,
            s => panic!("width() on non-bitvector expression of sort {s}"),
        }
    }

    pub fn bool_const(v: bool) -> Expr {
        Expr::node(Sort::Bool, ExprKind::BoolConst(v))
    }

    pub fn true_() -> Expr {
        Expr::bool_const(true)
    }

    pub fn false_() -> Expr {
        Expr::bool_const(false)
    }

    /// Bitvector constant. The value must fit in `width` bits.
    pub fn bv(value: impl Into<BigUint>, width: u32) -> Result<Expr, SmtError> {
        let value = value.into();
        if width == 0 {
            return Err(SmtError::Sort("bitvector width must be nonzero".into()));
        }
        if value.bits() > u64::from(width) {
            return Err(SmtError::ConstantRange {
                value: value.to_string(),
                width,
            });
        }
        Ok(Expr::node(Sort::BitVec(width), ExprKind::Const(value)))
    }

    /// Bitvector constant, truncating the value modulo 2^width.
    pub fn bv_masked(value: BigUint, width: u32) -> Expr {
        let v = value & mask(width);
        Expr::bv(v, width).expect("masked constant fits")
    }

    /// Convenience constructor for small constants.
    pub fn bv_u64(value: u64, width: u32) -> Expr {
        Expr::bv(BigUint::from(value), width).expect("constant fits declared width")
    }

    /// Constant array: every index maps to `value`.
    pub fn const_array(index: u32, value_width: u32, value: BigUint) -> Result<Expr, SmtError> {
        if index == 0 || value_width == 0 {
            return Err(SmtError::Sort("array widths must be nonzero".into()));
        }
        if value.bits() > u64::from(value_width) {
            return Err(SmtError::ConstantRange {
                value: value.to_string(),
                width: value_width,
            });
        }
        Ok(Expr::node(
            Sort::Array {
                index,
                value: value_width,
            },
            ExprKind::Const(value),
        ))
    }

    /// Free variable. Use [`crate::ConstraintSet::declare`] to create
    /// variables tracked by a constraint set.
    pub fn var(name: impl Into<String>, sort: Sort) -> Expr {
        Expr::node(sort, ExprKind::Var(name.into()))
    }

    /// Checked operator application; rejects arity and sort violations.
    pub fn op(kind: OpKind, args: Vec<Expr>) -> Result<Expr, SmtError> {
        use OpKind::*;
        let arity_err = |n: usize| {
            Err(SmtError::Sort(format!(
                "{kind:?} expects {n} operand(s), got a different count"
            )))
        };
        let sort = match kind {
            BvAdd | BvSub | BvMul | BvUdiv | BvSdiv | BvUrem | BvSrem | BvAnd | BvOr | BvXor
            | BvShl | BvLshr | BvAshr => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                let w = same_bv_width(kind, &args[0], &args[1])?;
                Sort::BitVec(w)
            }
            BvNot | BvNeg => {
                if args.len() != 1 {
                    return arity_err(1);
                }
                match args[0].sort() {
                    Sort::BitVec(w) => Sort::BitVec(w),
                    s => return Err(SmtError::Sort(format!("{kind:?} on sort {s}"))),
                }
            }
            BvUlt | BvUle | BvSlt | BvSle => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                same_bv_width(kind, &args[0], &args[1])?;
                Sort::Bool
            }
            Eq => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                if args[0].sort() != args[1].sort() {
                    return Err(SmtError::Sort(format!(
                        "Eq operand sorts differ: {} vs {}",
                        args[0].sort(),
                        args[1].sort()
                    )));
                }
                if args[0].sort().is_array() {
                    return Err(SmtError::Sort("Eq is not defined on array sorts".into()));
                }
                Sort::Bool
            }
            Not => {
                if args.len() != 1 {
                    return arity_err(1);
                }
                if !args[0].sort().is_bool() {
                    return Err(SmtError::Sort("Not expects a Bool operand".into()));
                }
                Sort::Bool
            }
            And | Or => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                if !args[0].sort().is_bool() || !args[1].sort().is_bool() {
                    return Err(SmtError::Sort(format!("{kind:?} expects Bool operands")));
                }
                Sort::Bool
            }
            Ite => {
                if args.len() != 3 {
                    return arity_err(3);
                }
                if !args[0].sort().is_bool() {
                    return Err(SmtError::Sort("Ite condition must be Bool".into()));
                }
                if args[1].sort() != args[2].sort() {
                    return Err(SmtError::Sort(format!(
                        "Ite branch sorts differ: {} vs {}",
                        args[1].sort(),
                        args[2].sort()
                    )));
                }
                args[1].sort()
            }
            Concat => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                match (args[0].sort(), args[1].sort()) {
                    (Sort::BitVec(a), Sort::BitVec(b)) => Sort::BitVec(a + b),
                    _ => return Err(SmtError::Sort("Concat expects bitvectors".into())),
                }
            }
            Extract(hi, lo) => {
                if args.len() != 1 {
                    return arity_err(1);
                }
                let w = args[0]
                    .sort()
                    .width()
                    .ok_or_else(|| SmtError::Sort("Extract expects a bitvector".into()))?;
                if hi < lo || hi >= w {
                    return Err(SmtError::Sort(format!(
                        "Extract({hi}, {lo}) out of range for width {w}"
                    )));
                }
                Sort::BitVec(hi - lo + 1)
            }
            ZeroExt(n) | SignExt(n) => {
                if args.len() != 1 {
                    return arity_err(1);
                }
                let w = args[0]
                    .sort()
                    .width()
                    .ok_or_else(|| SmtError::Sort(format!("{kind:?} expects a bitvector")))?;
                Sort::BitVec(w + n)
            }
            Select => {
                if args.len() != 2 {
                    return arity_err(2);
                }
                match (args[0].sort(), args[1].sort()) {
                    (Sort::Array { index, value }, Sort::BitVec(w)) if w == index => {
                        Sort::BitVec(value)
                    }
                    (a, i) => {
                        return Err(SmtError::Sort(format!(
                            "Select on sorts ({a}, {i}) is ill-typed"
                        )))
                    }
                }
            }
            Store => {
                if args.len() != 3 {
                    return arity_err(3);
                }
                match (args[0].sort(), args[1].sort(), args[2].sort()) {
                    (Sort::Array { index, value }, Sort::BitVec(i), Sort::BitVec(v))
                        if i == index && v == value =>
                    {
                        args[0].sort()
                    }
                    (a, i, v) => {
                        return Err(SmtError::Sort(format!(
                            "Store on sorts ({a}, {i}, {v}) is ill-typed"
                        )))
                    }
                }
            }
        };
        Ok(Expr::node(sort, ExprKind::Op(kind, args)))
    }

    pub fn is_const(&self) -> bool {
        matches!(
            self.kind(),
            ExprKind::BoolConst(_) | ExprKind::Const(_) if !self.sort().is_array()
        )
    }

    /// Constant bitvector value, if this is a bitvector literal.
    pub fn as_bv_const(&self) -> Option<&BigUint> {
        match (self.kind(), self.sort()) {
            (ExprKind::Const(v), Sort::BitVec(_)) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool_const(&self) -> Option<bool> {
        match self.kind() {
            ExprKind::BoolConst(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.kind() {
            ExprKind::Var(n) => Some(n),
            _ => None,
        }
    }

    /// Constant u64 value, if this is a bitvector literal that fits.
    pub fn as_u64(&self) -> Option<u64> {
        self.as_bv_const().and_then(|v| {
            let digits = v.to_u64_digits();
            match digits.len() {
                0 => Some(0),
                1 => Some(digits[0]),
                _ => None,
            }
        })
    }

    /// Names of all free variables in the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let ExprKind::Var(n) = e.kind() {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Post-order traversal visiting every distinct node once.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.node_ptr()) {
                continue;
            }
            f(&e);
            if let ExprKind::Op(_, args) = e.kind() {
                stack.extend(args.iter().cloned());
            }
        }
    }

    // Convenience builders. These are for code paths that construct
    // well-sorted expressions by design; sort violations are bugs and panic.

    fn op_ok(kind: OpKind, args: Vec<Expr>) -> Expr {
        Expr::op(kind, args).expect("operands are well-sorted")
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvAdd, vec![self.clone(), rhs.clone()])
    }
    pub fn sub(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvSub, vec![self.clone(), rhs.clone()])
    }
    pub fn mul(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvMul, vec![self.clone(), rhs.clone()])
    }
    pub fn udiv(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvUdiv, vec![self.clone(), rhs.clone()])
    }
    pub fn sdiv(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvSdiv, vec![self.clone(), rhs.clone()])
    }
    pub fn urem(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvUrem, vec![self.clone(), rhs.clone()])
    }
    pub fn srem(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvSrem, vec![self.clone(), rhs.clone()])
    }
    pub fn bvand(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvAnd, vec![self.clone(), rhs.clone()])
    }
    pub fn bvor(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvOr, vec![self.clone(), rhs.clone()])
    }
    pub fn bvxor(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvXor, vec![self.clone(), rhs.clone()])
    }
    pub fn bvnot(&self) -> Expr {
        Expr::op_ok(OpKind::BvNot, vec![self.clone()])
    }
    pub fn bvneg(&self) -> Expr {
        Expr::op_ok(OpKind::BvNeg, vec![self.clone()])
    }
    pub fn shl(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvShl, vec![self.clone(), rhs.clone()])
    }
    pub fn lshr(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvLshr, vec![self.clone(), rhs.clone()])
    }
    pub fn ashr(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvAshr, vec![self.clone(), rhs.clone()])
    }
    pub fn ult(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvUlt, vec![self.clone(), rhs.clone()])
    }
    pub fn ule(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvUle, vec![self.clone(), rhs.clone()])
    }
    pub fn slt(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvSlt, vec![self.clone(), rhs.clone()])
    }
    pub fn sle(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::BvSle, vec![self.clone(), rhs.clone()])
    }
    pub fn eq(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::Eq, vec![self.clone(), rhs.clone()])
    }
    pub fn ne(&self, rhs: &Expr) -> Expr {
        self.eq(rhs).not()
    }
    pub fn not(&self) -> Expr {
        Expr::op_ok(OpKind::Not, vec![self.clone()])
    }
    pub fn and(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::And, vec![self.clone(), rhs.clone()])
    }
    pub fn or(&self, rhs: &Expr) -> Expr {
        Expr::op_ok(OpKind::Or, vec![self.clone(), rhs.clone()])
    }
    pub fn ite(&self, then: &Expr, els: &Expr) -> Expr {
        Expr::op_ok(OpKind::Ite, vec![self.clone(), then.clone(), els.clone()])
    }
    /// `self` becomes the high bits, `low` the low bits.
    pub fn concat(&self, low: &Expr) -> Expr {
        Expr::op_ok(OpKind::Concat, vec![self.clone(), low.clone()])
    }
    pub fn extract(&self, hi: u32, lo: u32) -> Expr {
        Expr::op_ok(OpKind::Extract(hi, lo), vec![self.clone()])
    }
    pub fn zext(&self, extra: u32) -> Expr {
        if extra == 0 {
            return self.clone();
        }
        Expr::op_ok(OpKind::ZeroExt(extra), vec![self.clone()])
    }
    pub fn sext(&self, extra: u32) -> Expr {
        if extra == 0 {
            return self.clone();
        }
        Expr::op_ok(OpKind::SignExt(extra), vec![self.clone()])
    }
    pub fn select(&self, index: &Expr) -> Expr {
        Expr::op_ok(OpKind::Select, vec![self.clone(), index.clone()])
    }
    pub fn store(&self, index: &Expr, value: &Expr) -> Expr {
        Expr::op_ok(
            OpKind::Store,
            vec![self.clone(), index.clone(), value.clone()],
        )
    }

    /// Boolean to bitvector: `ite(self, 1, 0)` at the given width.
    pub fn to_bv(&self, width: u32) -> Expr {
        self.ite(&Expr::bv_u64(1, width), &Expr::bv_u64(0, width))
    }

    /// All-ones constant of the given width.
    pub fn all_ones(width: u32) -> Expr {
        Expr::bv_masked(mask(width), width)
    }

    pub fn zero(width: u32) -> Expr {
        Expr::bv_u64(0, width)
    }
}

fn same_bv_width(kind: OpKind, a: &Expr, b: &Expr) -> Result<u32, SmtError> {
    match (a.sort(), b.sort()) {
        (Sort::BitVec(x), Sort::BitVec(y)) if x == y => Ok(x),
        (x, y) => Err(SmtError::Sort(format!(
            "{kind:?} operand sorts mismatch: {x} vs {y}"
        ))),
    }
}

pub(crate) fn width_mask(width: u32) -> BigUint {
    mask(width)
}
