use crate::eval::{apply_op, Value};
use crate::expr::{Expr, ExprKind, OpKind};
use crate::sort::Sort;
use num_traits::{One, Zero};
use std::collections::HashMap;

/// Structural simplification: constant folding plus a set of local rewrite
/// rules (identity elements, `x ^ x`, ite collapsing, extract/concat fusion,
/// select-over-store resolution). The result is equivalent to the input in
/// every model and never grows the expression.
pub fn simplify(expr: &Expr) -> Expr {
    let mut memo = Memo::new();
    simp(expr, &mut memo)
}

// Keyed by node address; each entry keeps a clone of the keyed node alive so
// the allocator cannot hand that address to a different node while the memo
// is in use.
struct Memo(HashMap<*const (), (Expr, Expr)>);

impl Memo {
    fn new() -> Self {
        Memo(HashMap::new())
    }

    fn get(&self, e: &Expr) -> Option<&Expr> {
        self.0.get(&e.node_ptr()).map(|(_, out)| out)
    }

    fn insert(&mut self, e: &Expr, out: Expr) {
        self.0.insert(e.node_ptr(), (e.clone(), out));
    }
}

fn simp(expr: &Expr, memo: &mut Memo) -> Expr {
    if let Some(e) = memo.get(expr) {
        return e.clone();
    }
    let out = match expr.kind() {
        ExprKind::Op(kind, args) => {
            let args: Vec<Expr> = args.iter().map(|a| simp(a, memo)).collect();
            rewrite(*kind, args, memo)
        }
        _ => expr.clone(),
    };
    memo.insert(expr, out.clone());
    out
}

fn const_value(e: &Expr) -> Option<Value> {
    match (e.kind(), e.sort()) {
        (ExprKind::BoolConst(b), _) => Some(Value::Bool(*b)),
        (ExprKind::Const(v), Sort::BitVec(w)) => Some(Value::Bits {
            value: v.clone(),
            width: w,
        }),
        _ => None,
    }
}

fn value_to_expr(v: Value) -> Expr {
    match v {
        Value::Bool(b) => Expr::bool_const(b),
        Value::Bits { value, width } => Expr::bv(value, width).expect("folded constant fits"),
        Value::Array(_) => unreachable!("constant folding never yields arrays"),
    }
}

fn is_bv_zero(e: &Expr) -> bool {
    e.as_bv_const().is_some_and(|v| v.is_zero())
}

fn is_bv_one(e: &Expr) -> bool {
    e.as_bv_const().is_some_and(|v| v.is_one())
}

fn is_bv_ones(e: &Expr) -> bool {
    e.as_bv_const()
        .is_some_and(|v| *v == crate::expr::width_mask(e.width()))
}

fn rewrite(kind: OpKind, args: Vec<Expr>, memo: &mut Memo) -> Expr {
    use OpKind::*;

    // Constant folding covers every operator whose operands are literals.
    if !matches!(kind, Store) {
        let consts: Option<Vec<Value>> = args.iter().map(const_value).collect();
        if let Some(vals) = consts {
            return value_to_expr(apply_op(kind, &vals));
        }
    }

    match kind {
        BvAdd => {
            if is_bv_zero(&args[0]) {
                return args[1].clone();
            }
            if is_bv_zero(&args[1]) {
                return args[0].clone();
            }
        }
        BvSub => {
            if is_bv_zero(&args[1]) {
                return args[0].clone();
            }
            if args[0] == args[1] {
                return Expr::zero(args[0].width());
            }
        }
        BvMul => {
            for (a, b) in [(0, 1), (1, 0)] {
                if is_bv_zero(&args[a]) {
                    return Expr::zero(args[a].width());
                }
                if is_bv_one(&args[a]) {
                    return args[b].clone();
                }
            }
        }
        BvAnd => {
            if args[0] == args[1] {
                return args[0].clone();
            }
            for (a, b) in [(0, 1), (1, 0)] {
                if is_bv_zero(&args[a]) {
                    return Expr::zero(args[a].width());
                }
                if is_bv_ones(&args[a]) {
                    return args[b].clone();
                }
            }
        }
        BvOr => {
            if args[0] == args[1] {
                return args[0].clone();
            }
            for (a, b) in [(0, 1), (1, 0)] {
                if is_bv_zero(&args[a]) {
                    return args[b].clone();
                }
                if is_bv_ones(&args[a]) {
                    return Expr::all_ones(args[a].width());
                }
            }
        }
        BvXor => {
            if args[0] == args[1] {
                return Expr::zero(args[0].width());
            }
            for (a, b) in [(0, 1), (1, 0)] {
                if is_bv_zero(&args[a]) {
                    return args[b].clone();
                }
            }
        }
        BvNot | BvNeg => {
            if let ExprKind::Op(inner, inner_args) = args[0].kind() {
                if *inner == kind {
                    return inner_args[0].clone();
                }
            }
        }
        BvShl | BvLshr | BvAshr => {
            if is_bv_zero(&args[1]) || is_bv_zero(&args[0]) {
                return args[0].clone();
            }
        }
        BvUlt => {
            if args[0] == args[1] {
                return Expr::false_();
            }
        }
        BvSlt => {
            if args[0] == args[1] {
                return Expr::false_();
            }
        }
        BvUle | BvSle => {
            if args[0] == args[1] {
                return Expr::true_();
            }
        }
        Eq => {
            if args[0] == args[1] {
                return Expr::true_();
            }
            // Fold comparisons against boolean literals.
            for (a, b) in [(0, 1), (1, 0)] {
                match args[a].as_bool_const() {
                    Some(true) => return args[b].clone(),
                    Some(false) => return simplify(&args[b].not()),
                    None => {}
                }
            }
        }
        Not => {
            if let ExprKind::Op(Not, inner) = args[0].kind() {
                return inner[0].clone();
            }
        }
        And => {
            if args[0] == args[1] {
                return args[0].clone();
            }
            for (a, b) in [(0, 1), (1, 0)] {
                match args[a].as_bool_const() {
                    Some(false) => return Expr::false_(),
                    Some(true) => return args[b].clone(),
                    None => {}
                }
            }
        }
        Or => {
            if args[0] == args[1] {
                return args[0].clone();
            }
            for (a, b) in [(0, 1), (1, 0)] {
                match args[a].as_bool_const() {
                    Some(true) => return Expr::true_(),
                    Some(false) => return args[b].clone(),
                    None => {}
                }
            }
        }
        Ite => {
            match args[0].as_bool_const() {
                Some(true) => return args[1].clone(),
                Some(false) => return args[2].clone(),
                None => {}
            }
            if args[1] == args[2] {
                return args[1].clone();
            }
            if args[1].sort().is_bool() {
                if let (Some(true), Some(false)) =
                    (args[1].as_bool_const(), args[2].as_bool_const())
                {
                    return args[0].clone();
                }
                if let (Some(false), Some(true)) =
                    (args[1].as_bool_const(), args[2].as_bool_const())
                {
                    return simplify(&args[0].not());
                }
            }
        }
        Concat => {
            // Merge adjacent slices of the same base value.
            if let (ExprKind::Op(Extract(h1, l1), a1), ExprKind::Op(Extract(h2, l2), a2)) =
                (args[0].kind(), args[1].kind())
            {
                if a1[0] == a2[0] && *l1 == h2 + 1 {
                    return simp(&a1[0].extract(*h1, *l2), memo);
                }
            }
        }
        Extract(hi, lo) => {
            let src = &args[0];
            let w = src.width();
            if lo == 0 && hi == w - 1 {
                return src.clone();
            }
            match src.kind() {
                ExprKind::Op(Extract(_, l2), inner) => {
                    return simp(&inner[0].extract(l2 + hi, l2 + lo), memo);
                }
                ExprKind::Op(Concat, parts) => {
                    let wb = parts[1].width();
                    if hi < wb {
                        return simp(&parts[1].extract(hi, lo), memo);
                    }
                    if lo >= wb {
                        return simp(&parts[0].extract(hi - wb, lo - wb), memo);
                    }
                }
                ExprKind::Op(ZeroExt(_), inner) => {
                    let iw = inner[0].width();
                    if hi < iw {
                        return simp(&inner[0].extract(hi, lo), memo);
                    }
                    if lo >= iw {
                        return Expr::zero(hi - lo + 1);
                    }
                }
                ExprKind::Op(SignExt(_), inner) => {
                    let iw = inner[0].width();
                    if hi < iw {
                        return simp(&inner[0].extract(hi, lo), memo);
                    }
                }
                _ => {}
            }
        }
        ZeroExt(n) => {
            if let ExprKind::Op(ZeroExt(m), inner) = args[0].kind() {
                return inner[0].zext(n + m);
            }
        }
        SignExt(n) => {
            if let ExprKind::Op(SignExt(m), inner) = args[0].kind() {
                return inner[0].sext(n + m);
            }
        }
        Select => {
            let index = args[1].clone();
            let mut array = args[0].clone();
            loop {
                match array.kind() {
                    ExprKind::Op(Store, sargs) => {
                        let (base, si, sv) = (&sargs[0], &sargs[1], &sargs[2]);
                        if *si == index {
                            return sv.clone();
                        }
                        match (si.as_bv_const(), index.as_bv_const()) {
                            // Distinct constant indexes cannot alias; look
                            // through this store.
                            (Some(_), Some(_)) => array = base.clone(),
                            _ => break,
                        }
                    }
                    ExprKind::Const(default) => {
                        let vw = match array.sort() {
                            Sort::Array { value, .. } => value,
                            _ => unreachable!(),
                        };
                        return Expr::bv(default.clone(), vw).expect("array default fits");
                    }
                    _ => break,
                }
            }
            return Expr::op(Select, vec![array, index]).expect("sorts preserved");
        }
        Store => {
            // Overwriting the same index keeps only the last write.
            if let ExprKind::Op(Store, inner) = args[0].kind() {
                if inner[1] == args[1] {
                    return Expr::op(Store, vec![inner[0].clone(), args[1].clone(), args[2].clone()])
                        .expect("sorts preserved");
                }
            }
        }
        _ => {}
    }

    Expr::op(kind, args).expect("operands already validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::Sort;

    fn var8(n: &str) -> Expr {
        Expr::var(n, Sort::BitVec(8))
    }

    #[test]
    fn xor_self_is_zero() {
        let x = var8("x");
        assert_eq!(simplify(&x.bvxor(&x)), Expr::zero(8));
    }

    #[test]
    fn add_consts_wraps() {
        let e = Expr::bv_u64(250, 8).add(&Expr::bv_u64(7, 8));
        assert_eq!(simplify(&e), Expr::bv_u64(1, 8));
    }

    #[test]
    fn ite_on_true_condition() {
        let a = var8("a");
        let b = var8("b");
        let cond = Expr::bv_u64(1, 8).eq(&Expr::bv_u64(1, 8));
        assert_eq!(simplify(&cond.ite(&a, &b)), a);
    }

    #[test]
    fn extract_of_concat_on_boundary() {
        let x = var8("x");
        let y = var8("y");
        let c = x.concat(&y); // x is bits 15..8, y is bits 7..0
        assert_eq!(simplify(&c.extract(15, 8)), x);
        assert_eq!(simplify(&c.extract(7, 0)), y);
    }

    #[test]
    fn concat_of_adjacent_extracts_fuses() {
        let x = Expr::var("x", Sort::BitVec(32));
        let e = x.extract(15, 8).concat(&x.extract(7, 0));
        assert_eq!(simplify(&e), x.extract(15, 0));
    }

    #[test]
    fn select_over_store() {
        let a = Expr::const_array(32, 8, num_bigint::BigUint::zero()).unwrap();
        let i = Expr::var("i", Sort::BitVec(32));
        let v = var8("v");
        let stored = a.store(&i, &v);
        assert_eq!(simplify(&stored.select(&i)), v);
        // Distinct constant indexes resolve through the chain.
        let s2 = a
            .store(&Expr::bv_u64(4, 32), &Expr::bv_u64(9, 8))
            .store(&Expr::bv_u64(8, 32), &Expr::bv_u64(7, 8));
        assert_eq!(
            simplify(&s2.select(&Expr::bv_u64(4, 32))),
            Expr::bv_u64(9, 8)
        );
        // Symbolic store index blocks resolution for a different index.
        let blocked = stored.select(&Expr::bv_u64(3, 32));
        assert!(matches!(
            simplify(&blocked).kind(),
            ExprKind::Op(OpKind::Select, _)
        ));
        // Reads from an untouched constant array yield the default.
        assert_eq!(
            simplify(&a.select(&Expr::var("j", Sort::BitVec(32)))),
            Expr::zero(8)
        );
    }

    #[test]
    fn double_negation() {
        let x = var8("x");
        assert_eq!(simplify(&x.bvnot().bvnot()), x);
        let b = Expr::var("b", Sort::Bool);
        assert_eq!(simplify(&b.not().not()), b);
    }

    #[test]
    fn masking_identities() {
        let x = var8("x");
        assert_eq!(simplify(&x.bvand(&Expr::zero(8))), Expr::zero(8));
        assert_eq!(simplify(&x.bvand(&Expr::all_ones(8))), x);
        assert_eq!(simplify(&x.bvor(&Expr::zero(8))), x);
        assert_eq!(simplify(&x.add(&Expr::zero(8))), x);
        assert_eq!(simplify(&x.shl(&Expr::zero(8))), x);
    }

    #[test]
    fn comparisons_of_identical_operands() {
        let x = var8("x");
        assert_eq!(simplify(&x.ult(&x)), Expr::false_());
        assert_eq!(simplify(&x.ule(&x)), Expr::true_());
        assert_eq!(simplify(&x.eq(&x)), Expr::true_());
    }
}
