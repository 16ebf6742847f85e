//! Shared test utilities: an independent reference evaluator (written
//! directly from the SMT-LIB operator definitions, no reuse of the crate's
//! evaluator) and a seeded random expression generator.

#![allow(dead_code)]

use num_bigint::BigUint;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use roam_smt::{Expr, ExprKind, OpKind, Sort};
use std::collections::BTreeMap;

pub fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn sext64(v: u64, w: u32) -> i64 {
    let shift = 64 - w;
    ((v << shift) as i64) >> shift
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefVal {
    B(bool),
    V { v: u64, w: u32 },
    A { writes: Vec<(u64, u64)>, default: u64 },
}

impl RefVal {
    pub fn bits(&self) -> u64 {
        match self {
            RefVal::V { v, .. } => *v,
            _ => panic!("expected bitvector"),
        }
    }

    pub fn truth(&self) -> bool {
        match self {
            RefVal::B(b) => *b,
            _ => panic!("expected boolean"),
        }
    }
}

/// Reference semantics for widths up to 32 bits, sufficient for the
/// differential tests. Unbound variables default to zero.
pub fn ref_eval(e: &Expr, env: &BTreeMap<String, u64>) -> RefVal {
    use OpKind::*;
    match e.kind() {
        ExprKind::BoolConst(b) => RefVal::B(*b),
        ExprKind::Const(c) => match e.sort() {
            Sort::BitVec(w) => RefVal::V {
                v: biguint_to_u64(c),
                w,
            },
            Sort::Array { .. } => RefVal::A {
                writes: Vec::new(),
                default: biguint_to_u64(c),
            },
            Sort::Bool => unreachable!(),
        },
        ExprKind::Var(n) => match e.sort() {
            Sort::Bool => RefVal::B(env.get(n).copied().unwrap_or(0) != 0),
            Sort::BitVec(w) => RefVal::V {
                v: env.get(n).copied().unwrap_or(0) & mask(w),
                w,
            },
            Sort::Array { .. } => RefVal::A {
                writes: Vec::new(),
                default: 0,
            },
        },
        ExprKind::Op(kind, args) => {
            let a: Vec<RefVal> = args.iter().map(|x| ref_eval(x, env)).collect();
            let bv = |i: usize| match &a[i] {
                RefVal::V { v, w } => (*v, *w),
                _ => panic!("expected bitvector"),
            };
            match kind {
                BvAdd => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V {
                        v: x.wrapping_add(y) & mask(w),
                        w,
                    }
                }
                BvSub => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V {
                        v: x.wrapping_sub(y) & mask(w),
                        w,
                    }
                }
                BvMul => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V {
                        v: x.wrapping_mul(y) & mask(w),
                        w,
                    }
                }
                BvUdiv => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V {
                        v: if y == 0 { mask(w) } else { x / y },
                        w,
                    }
                }
                BvUrem => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V {
                        v: if y == 0 { x } else { x % y },
                        w,
                    }
                }
                BvSdiv => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    let (sx, sy) = (sext64(x, w), sext64(y, w));
                    let v = if y == 0 {
                        if sx >= 0 {
                            mask(w)
                        } else {
                            1
                        }
                    } else {
                        (sx.wrapping_div(sy) as u64) & mask(w)
                    };
                    RefVal::V { v, w }
                }
                BvSrem => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    let (sx, sy) = (sext64(x, w), sext64(y, w));
                    let v = if y == 0 {
                        x
                    } else {
                        (sx.wrapping_rem(sy) as u64) & mask(w)
                    };
                    RefVal::V { v, w }
                }
                BvAnd => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V { v: x & y, w }
                }
                BvOr => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V { v: x | y, w }
                }
                BvXor => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::V { v: x ^ y, w }
                }
                BvNot => {
                    let (x, w) = bv(0);
                    RefVal::V {
                        v: !x & mask(w),
                        w,
                    }
                }
                BvNeg => {
                    let (x, w) = bv(0);
                    RefVal::V {
                        v: x.wrapping_neg() & mask(w),
                        w,
                    }
                }
                BvShl => {
                    let ((x, w), (n, _)) = (bv(0), bv(1));
                    let v = if n >= u64::from(w) {
                        0
                    } else {
                        (x << n) & mask(w)
                    };
                    RefVal::V { v, w }
                }
                BvLshr => {
                    let ((x, w), (n, _)) = (bv(0), bv(1));
                    let v = if n >= u64::from(w) { 0 } else { x >> n };
                    RefVal::V { v, w }
                }
                BvAshr => {
                    let ((x, w), (n, _)) = (bv(0), bv(1));
                    let sign = (x >> (w - 1)) & 1 == 1;
                    let v = if n >= u64::from(w) {
                        if sign {
                            mask(w)
                        } else {
                            0
                        }
                    } else {
                        let shifted = x >> n;
                        if sign {
                            shifted | (mask(w) ^ (mask(w) >> n))
                        } else {
                            shifted
                        }
                    };
                    RefVal::V { v, w }
                }
                BvUlt => RefVal::B(bv(0).0 < bv(1).0),
                BvUle => RefVal::B(bv(0).0 <= bv(1).0),
                BvSlt => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::B(sext64(x, w) < sext64(y, w))
                }
                BvSle => {
                    let ((x, w), (y, _)) = (bv(0), bv(1));
                    RefVal::B(sext64(x, w) <= sext64(y, w))
                }
                Eq => match (&a[0], &a[1]) {
                    (RefVal::B(x), RefVal::B(y)) => RefVal::B(x == y),
                    (RefVal::V { v: x, .. }, RefVal::V { v: y, .. }) => RefVal::B(x == y),
                    _ => panic!("Eq on arrays"),
                },
                Not => RefVal::B(!a[0].truth()),
                And => RefVal::B(a[0].truth() && a[1].truth()),
                Or => RefVal::B(a[0].truth() || a[1].truth()),
                Ite => {
                    if a[0].truth() {
                        a[1].clone()
                    } else {
                        a[2].clone()
                    }
                }
                Concat => {
                    let ((hi, wh), (lo, wl)) = (bv(0), bv(1));
                    RefVal::V {
                        v: (hi << wl) | lo,
                        w: wh + wl,
                    }
                }
                Extract(h, l) => {
                    let (x, _) = bv(0);
                    RefVal::V {
                        v: (x >> l) & mask(h - l + 1),
                        w: h - l + 1,
                    }
                }
                ZeroExt(n) => {
                    let (x, w) = bv(0);
                    RefVal::V { v: x, w: w + n }
                }
                SignExt(n) => {
                    let (x, w) = bv(0);
                    let v = (sext64(x, w) as u64) & mask(w + n);
                    RefVal::V { v, w: w + n }
                }
                Select => {
                    let arr = match &a[0] {
                        RefVal::A { writes, default } => (writes, *default),
                        _ => panic!("Select on non-array"),
                    };
                    let (i, _) = bv(1);
                    let w = match e.sort() {
                        Sort::BitVec(w) => w,
                        _ => unreachable!(),
                    };
                    let v = arr
                        .0
                        .iter()
                        .rev()
                        .find(|(wi, _)| *wi == i)
                        .map(|(_, wv)| *wv)
                        .unwrap_or(arr.1);
                    RefVal::V { v, w }
                }
                Store => {
                    let (mut writes, default) = match &a[0] {
                        RefVal::A { writes, default } => (writes.clone(), *default),
                        _ => panic!("Store on non-array"),
                    };
                    writes.push((bv(1).0, bv(2).0));
                    RefVal::A { writes, default }
                }
            }
        }
    }
}

fn biguint_to_u64(v: &BigUint) -> u64 {
    let d = v.to_u64_digits();
    match d.len() {
        0 => 0,
        1 => d[0],
        _ => panic!("reference evaluator is limited to 64-bit values"),
    }
}

/// Seeded generator of well-sorted random expressions over two 8-bit
/// variables `x`, `y` and one boolean `b0`.
pub struct Gen {
    pub rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn bv8(&mut self, depth: u32) -> Expr {
        if depth == 0 {
            return match self.rng.random_range(0..4) {
                0 => Expr::var("x", Sort::BitVec(8)),
                1 => Expr::var("y", Sort::BitVec(8)),
                _ => Expr::bv_u64(self.rng.random_range(0..256), 8),
            };
        }
        match self.rng.random_range(0..20) {
            0 => self.bv8(depth - 1).add(&self.bv8(depth - 1)),
            1 => self.bv8(depth - 1).sub(&self.bv8(depth - 1)),
            2 => self.bv8(depth - 1).mul(&self.bv8(depth - 1)),
            3 => self.bv8(depth - 1).udiv(&self.bv8(depth - 1)),
            4 => self.bv8(depth - 1).urem(&self.bv8(depth - 1)),
            5 => self.bv8(depth - 1).sdiv(&self.bv8(depth - 1)),
            6 => self.bv8(depth - 1).srem(&self.bv8(depth - 1)),
            7 => self.bv8(depth - 1).bvand(&self.bv8(depth - 1)),
            8 => self.bv8(depth - 1).bvor(&self.bv8(depth - 1)),
            9 => self.bv8(depth - 1).bvxor(&self.bv8(depth - 1)),
            10 => self.bv8(depth - 1).bvnot(),
            11 => self.bv8(depth - 1).bvneg(),
            12 => self.bv8(depth - 1).shl(&self.bv8(depth - 1)),
            13 => self.bv8(depth - 1).lshr(&self.bv8(depth - 1)),
            14 => self.bv8(depth - 1).ashr(&self.bv8(depth - 1)),
            15 => {
                let c = self.boolean(depth - 1);
                c.ite(&self.bv8(depth - 1), &self.bv8(depth - 1))
            }
            16 => {
                // Round-trip through a wider vector.
                let lo = self.rng.random_range(0..9);
                self.bv16(depth - 1).extract(lo + 7, lo)
            }
            17 => self.bv16(depth - 1).extract(7, 0),
            _ => {
                let hi = self.rng.random_range(0..8);
                let lo = self.rng.random_range(0..=hi);
                let part = self.bv8(depth - 1).extract(hi, lo);
                part.zext(8 - (hi - lo + 1))
            }
        }
    }

    pub fn bv16(&mut self, depth: u32) -> Expr {
        match self.rng.random_range(0..4) {
            0 => self.bv8(depth).concat(&self.bv8(depth)),
            1 => self.bv8(depth).zext(8),
            2 => self.bv8(depth).sext(8),
            _ => self.bv16_arith(depth),
        }
    }

    fn bv16_arith(&mut self, depth: u32) -> Expr {
        let a = self.bv8(depth).zext(8);
        let b = self.bv8(depth).sext(8);
        match self.rng.random_range(0..3) {
            0 => a.add(&b),
            1 => a.mul(&b),
            _ => a.bvxor(&b),
        }
    }

    pub fn boolean(&mut self, depth: u32) -> Expr {
        if depth == 0 {
            return match self.rng.random_range(0..4) {
                0 => Expr::var("b0", Sort::Bool),
                1 => Expr::true_(),
                2 => Expr::false_(),
                _ => Expr::var("x", Sort::BitVec(8)).ult(&Expr::var("y", Sort::BitVec(8))),
            };
        }
        match self.rng.random_range(0..10) {
            0 => self.bv8(depth - 1).ult(&self.bv8(depth - 1)),
            1 => self.bv8(depth - 1).ule(&self.bv8(depth - 1)),
            2 => self.bv8(depth - 1).slt(&self.bv8(depth - 1)),
            3 => self.bv8(depth - 1).sle(&self.bv8(depth - 1)),
            4 => self.bv8(depth - 1).eq(&self.bv8(depth - 1)),
            5 => self.boolean(depth - 1).not(),
            6 => self.boolean(depth - 1).and(&self.boolean(depth - 1)),
            7 => self.boolean(depth - 1).or(&self.boolean(depth - 1)),
            8 => {
                let c = self.boolean(depth - 1);
                c.ite(&self.boolean(depth - 1), &self.boolean(depth - 1))
            }
            _ => self.boolean(depth - 1).eq(&self.boolean(depth - 1)),
        }
    }
}

/// Brute-force satisfiability of assertions over x, y in 0..256 and b0 in
/// {0, 1}. Returns a witness if one exists.
pub fn brute_force(assertions: &[Expr]) -> Option<BTreeMap<String, u64>> {
    let mut env = BTreeMap::new();
    for b0 in 0..=1u64 {
        for x in 0..256u64 {
            for y in 0..256u64 {
                env.insert("x".to_string(), x);
                env.insert("y".to_string(), y);
                env.insert("b0".to_string(), b0);
                if assertions.iter().all(|a| ref_eval(a, &env).truth()) {
                    return Some(env);
                }
            }
        }
    }
    None
}
