use crate::expr::{width_mask, Expr, ExprKind, OpKind};
use crate::sort::Sort;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};

/// Assignment of concrete values to variables. Bitvector values are stored
/// as unsigned integers; booleans as 0/1. Variables absent from the model
/// evaluate to zero (the completion rule used for unconstrained inputs).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    entries: BTreeMap<String, BigUint>,
}

impl Model {
    pub fn new() -> Model {
        Model::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: BigUint) {
        self.entries.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&BigUint> {
        self.entries.get(name)
    }

    /// Value under the zero-completion rule.
    pub fn value_of(&self, name: &str) -> BigUint {
        self.entries.get(name).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BigUint)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

impl FromIterator<(String, BigUint)> for Model {
    fn from_iter<T: IntoIterator<Item = (String, BigUint)>>(iter: T) -> Model {
        Model {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Result of evaluating an expression under a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Bits { value: BigUint, width: u32 },
    Array(ArrayValue),
}

/// Concrete array: a default plus an ordered write history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayValue {
    pub index_width: u32,
    pub value_width: u32,
    pub default: BigUint,
    pub writes: Vec<(BigUint, BigUint)>,
}

impl ArrayValue {
    pub fn read(&self, index: &BigUint) -> BigUint {
        for (i, v) in self.writes.iter().rev() {
            if i == index {
                return v.clone();
            }
        }
        self.default.clone()
    }
}

impl Value {
    pub fn as_bool(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            _ => panic!("expected boolean value"),
        }
    }

    pub fn as_bits(&self) -> &BigUint {
        match self {
            Value::Bits { value, .. } => value,
            _ => panic!("expected bitvector value"),
        }
    }

    pub fn into_bits(self) -> BigUint {
        match self {
            Value::Bits { value, .. } => value,
            _ => panic!("expected bitvector value"),
        }
    }
}

fn to_signed(v: &BigUint, width: u32) -> BigInt {
    if v.bit(u64::from(width) - 1) {
        BigInt::from(v.clone()) - (BigInt::one() << width)
    } else {
        BigInt::from(v.clone())
    }
}

fn from_signed(v: BigInt, width: u32) -> BigUint {
    let modulus = BigInt::one() << width;
    let mut r = v % &modulus;
    if r.is_negative() {
        r += &modulus;
    }
    r.to_biguint().expect("non-negative after wrap")
}

/// Evaluate an expression under a model. Total for well-sorted expressions.
pub fn eval(expr: &Expr, model: &Model) -> Value {
    let mut memo: HashMap<*const (), Value> = HashMap::new();
    eval_memo(expr, model, &mut memo)
}

fn eval_memo(expr: &Expr, model: &Model, memo: &mut HashMap<*const (), Value>) -> Value {
    if let Some(v) = memo.get(&expr.node_ptr()) {
        return v.clone();
    }
    let out = match expr.kind() {
        ExprKind::BoolConst(b) => Value::Bool(*b),
        ExprKind::Const(c) => match expr.sort() {
            Sort::BitVec(w) => Value::Bits {
                value: c.clone(),
                width: w,
            },
            Sort::Array { index, value } => Value::Array(ArrayValue {
                index_width: index,
                value_width: value,
                default: c.clone(),
                writes: Vec::new(),
            }),
            Sort::Bool => unreachable!("boolean constants use BoolConst"),
        },
        ExprKind::Var(name) => match expr.sort() {
            Sort::Bool => Value::Bool(model.value_of(name) == BigUint::one()),
            Sort::BitVec(w) => Value::Bits {
                value: model.value_of(name) & width_mask(w),
                width: w,
            },
            Sort::Array { index, value } => Value::Array(ArrayValue {
                index_width: index,
                value_width: value,
                default: BigUint::zero(),
                writes: Vec::new(),
            }),
        },
        ExprKind::Op(kind, args) => {
            let vals: Vec<Value> = args.iter().map(|a| eval_memo(a, model, memo)).collect();
            apply_op(*kind, &vals)
        }
    };
    memo.insert(expr.node_ptr(), out.clone());
    out
}

pub(crate) fn apply_op(kind: OpKind, vals: &[Value]) -> Value {
    use OpKind::*;
    let bits = |i: usize| -> (&BigUint, u32) {
        match &vals[i] {
            Value::Bits { value, width } => (value, *width),
            _ => panic!("expected bitvector operand"),
        }
    };
    match kind {
        BvAdd => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bits {
                value: (a + b) & width_mask(w),
                width: w,
            }
        }
        BvSub => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            let m = BigUint::one() << w;
            Value::Bits {
                value: ((a + &m) - b) & width_mask(w),
                width: w,
            }
        }
        BvMul => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bits {
                value: (a * b) & width_mask(w),
                width: w,
            }
        }
        BvUdiv => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            let value = if b.is_zero() { width_mask(w) } else { a / b };
            Value::Bits { value, width: w }
        }
        BvUrem => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            let value = if b.is_zero() { a.clone() } else { a % b };
            Value::Bits { value, width: w }
        }
        BvSdiv => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            let value = if b.is_zero() {
                // SMT-LIB: x sdiv 0 is -1 for x >= 0, else 1.
                if to_signed(a, w).is_negative() {
                    BigUint::one()
                } else {
                    width_mask(w)
                }
            } else {
                from_signed(to_signed(a, w) / to_signed(b, w), w)
            };
            Value::Bits { value, width: w }
        }
        BvSrem => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            let value = if b.is_zero() {
                a.clone()
            } else {
                from_signed(to_signed(a, w) % to_signed(b, w), w)
            };
            Value::Bits { value, width: w }
        }
        BvAnd => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bits {
                value: a & b,
                width: w,
            }
        }
        BvOr => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bits {
                value: a | b,
                width: w,
            }
        }
        BvXor => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bits {
                value: a ^ b,
                width: w,
            }
        }
        BvNot => {
            let (a, w) = bits(0);
            Value::Bits {
                value: a ^ width_mask(w),
                width: w,
            }
        }
        BvNeg => {
            let (a, w) = bits(0);
            let m = BigUint::one() << w;
            Value::Bits {
                value: (&m - a) & width_mask(w),
                width: w,
            }
        }
        BvShl | BvLshr | BvAshr => {
            let (a, w) = bits(0);
            let (amt, _) = bits(1);
            let sign = a.bit(u64::from(w) - 1);
            let value = match amt.to_u64() {
                Some(n) if n < u64::from(w) => match kind {
                    BvShl => (a << n) & width_mask(w),
                    BvLshr => a >> n,
                    BvAshr => {
                        let shifted = a >> n;
                        if sign {
                            let fill = width_mask(w) ^ (width_mask(w) >> n);
                            shifted | fill
                        } else {
                            shifted
                        }
                    }
                    _ => unreachable!(),
                },
                _ => {
                    if kind == BvAshr && sign {
                        width_mask(w)
                    } else {
                        BigUint::zero()
                    }
                }
            };
            Value::Bits { value, width: w }
        }
        BvUlt => {
            let (a, _) = bits(0);
            let (b, _) = bits(1);
            Value::Bool(a < b)
        }
        BvUle => {
            let (a, _) = bits(0);
            let (b, _) = bits(1);
            Value::Bool(a <= b)
        }
        BvSlt => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bool(to_signed(a, w) < to_signed(b, w))
        }
        BvSle => {
            let (a, w) = bits(0);
            let (b, _) = bits(1);
            Value::Bool(to_signed(a, w) <= to_signed(b, w))
        }
        Eq => match (&vals[0], &vals[1]) {
            (Value::Bool(a), Value::Bool(b)) => Value::Bool(a == b),
            (Value::Bits { value: a, .. }, Value::Bits { value: b, .. }) => Value::Bool(a == b),
            _ => panic!("Eq on array values"),
        },
        Not => Value::Bool(!vals[0].as_bool()),
        And => Value::Bool(vals[0].as_bool() && vals[1].as_bool()),
        Or => Value::Bool(vals[0].as_bool() || vals[1].as_bool()),
        Ite => {
            if vals[0].as_bool() {
                vals[1].clone()
            } else {
                vals[2].clone()
            }
        }
        Concat => {
            let (a, wa) = bits(0);
            let (b, wb) = bits(1);
            Value::Bits {
                value: (a << wb) | b,
                width: wa + wb,
            }
        }
        Extract(hi, lo) => {
            let (a, _) = bits(0);
            Value::Bits {
                value: (a >> lo) & width_mask(hi - lo + 1),
                width: hi - lo + 1,
            }
        }
        ZeroExt(n) => {
            let (a, w) = bits(0);
            Value::Bits {
                value: a.clone(),
                width: w + n,
            }
        }
        SignExt(n) => {
            let (a, w) = bits(0);
            let value = if a.bit(u64::from(w) - 1) {
                a | (width_mask(n) << w)
            } else {
                a.clone()
            };
            Value::Bits {
                value,
                width: w + n,
            }
        }
        Select => {
            let arr = match &vals[0] {
                Value::Array(a) => a,
                _ => panic!("Select on non-array"),
            };
            let (i, _) = bits(1);
            Value::Bits {
                value: arr.read(i),
                width: arr.value_width,
            }
        }
        Store => {
            let mut arr = match &vals[0] {
                Value::Array(a) => a.clone(),
                _ => panic!("Store on non-array"),
            };
            let (i, _) = bits(1);
            let (v, _) = bits(2);
            arr.writes.push((i.clone(), v.clone()));
            Value::Array(arr)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::Sort;

    fn m(pairs: &[(&str, u64)]) -> Model {
        pairs
            .iter()
            .map(|(n, v)| (n.to_string(), BigUint::from(*v)))
            .collect()
    }

    #[test]
    fn arithmetic_wraps() {
        let x = Expr::var("x", Sort::BitVec(8));
        let e = x.add(&Expr::bv_u64(10, 8));
        assert_eq!(
            eval(&e, &m(&[("x", 250)])),
            Value::Bits {
                value: BigUint::from(4u32),
                width: 8
            }
        );
    }

    #[test]
    fn division_by_zero_semantics() {
        let x = Expr::var("x", Sort::BitVec(8));
        let z = Expr::zero(8);
        let model = m(&[("x", 7)]);
        assert_eq!(*eval(&x.udiv(&z), &model).as_bits(), BigUint::from(255u32));
        assert_eq!(*eval(&x.urem(&z), &model).as_bits(), BigUint::from(7u32));
        assert_eq!(*eval(&x.sdiv(&z), &model).as_bits(), BigUint::from(255u32));
        let neg = m(&[("x", 0xF9)]); // -7
        assert_eq!(*eval(&x.sdiv(&z), &neg).as_bits(), BigUint::from(1u32));
        assert_eq!(*eval(&x.srem(&z), &neg).as_bits(), BigUint::from(0xF9u32));
    }

    #[test]
    fn signed_ops() {
        let x = Expr::var("x", Sort::BitVec(8));
        let y = Expr::var("y", Sort::BitVec(8));
        let model = m(&[("x", 0xF8), ("y", 3)]); // -8, 3
        assert_eq!(*eval(&x.sdiv(&y), &model).as_bits(), BigUint::from(0xFEu32)); // -2
        assert_eq!(*eval(&x.srem(&y), &model).as_bits(), BigUint::from(0xFEu32)); // -2
        assert!(eval(&x.slt(&y), &model).as_bool());
        assert!(!eval(&x.ult(&y), &model).as_bool());
        assert_eq!(
            *eval(&x.ashr(&Expr::bv_u64(1, 8)), &model).as_bits(),
            BigUint::from(0xFCu32)
        );
    }

    #[test]
    fn arrays_read_through_stores() {
        let a = Expr::const_array(32, 8, BigUint::zero()).unwrap();
        let i = Expr::bv_u64(5, 32);
        let stored = a.store(&i, &Expr::bv_u64(0xAB, 8));
        let sel = stored.select(&i);
        assert_eq!(*eval(&sel, &Model::new()).as_bits(), BigUint::from(0xABu32));
        let other = stored.select(&Expr::bv_u64(6, 32));
        assert_eq!(*eval(&other, &Model::new()).as_bits(), BigUint::zero());
    }

    #[test]
    fn completion_defaults_to_zero() {
        let x = Expr::var("x", Sort::BitVec(32));
        assert_eq!(*eval(&x, &Model::new()).as_bits(), BigUint::zero());
    }
}
