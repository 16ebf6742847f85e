use crate::constraints::ConstraintSet;
use crate::expr::{Expr, ExprKind, OpKind};
use crate::sort::Sort;
use std::fmt::Write;

pub fn sort_to_smtlib(sort: &Sort) -> String {
    sort.to_string()
}

fn op_head(kind: &OpKind) -> String {
    use OpKind::*;
    match kind {
        BvAdd => "bvadd".into(),
        BvSub => "bvsub".into(),
        BvMul => "bvmul".into(),
        BvUdiv => "bvudiv".into(),
        BvSdiv => "bvsdiv".into(),
        BvUrem => "bvurem".into(),
        BvSrem => "bvsrem".into(),
        BvAnd => "bvand".into(),
        BvOr => "bvor".into(),
        BvXor => "bvxor".into(),
        BvNot => "bvnot".into(),
        BvNeg => "bvneg".into(),
        BvShl => "bvshl".into(),
        BvLshr => "bvlshr".into(),
        BvAshr => "bvashr".into(),
        BvUlt => "bvult".into(),
        BvUle => "bvule".into(),
        BvSlt => "bvslt".into(),
        BvSle => "bvsle".into(),
        Eq => "=".into(),
        Not => "not".into(),
        And => "and".into(),
        Or => "or".into(),
        Ite => "ite".into(),
        Concat => "concat".into(),
        Extract(hi, lo) => format!("(_ extract {hi} {lo})"),
        ZeroExt(n) => format!("(_ zero_extend {n})"),
        SignExt(n) => format!("(_ sign_extend {n})"),
        Select => "select".into(),
        Store => "store".into(),
    }
}

/// Render an expression as an SMT-LIB 2 term. Deterministic: structurally
/// equal expressions print identically.
pub fn expr_to_smtlib(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn write_expr(out: &mut String, expr: &Expr) {
    match expr.kind() {
        ExprKind::BoolConst(b) => {
            out.push_str(if *b { "true" } else { "false" });
        }
        ExprKind::Const(v) => match expr.sort() {
            Sort::BitVec(w) => {
                let _ = write!(out, "(_ bv{v} {w})");
            }
            Sort::Array { index, value } => {
                let _ = write!(
                    out,
                    "((as const (Array (_ BitVec {index}) (_ BitVec {value}))) (_ bv{v} {value}))"
                );
            }
            Sort::Bool => unreachable!("boolean constants use BoolConst"),
        },
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Op(kind, args) => {
            out.push('(');
            out.push_str(&op_head(kind));
            for a in args {
                out.push(' ');
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

/// Declarations (sorted by variable name) followed by one `(assert ..)` per
/// assertion and per extra constraint. No `(check-sat)`; see [`script`].
pub fn decls_and_asserts(cs: &ConstraintSet, extra: &[Expr]) -> String {
    let mut out = String::new();
    for (name, sort) in cs.declarations() {
        let _ = writeln!(out, "(declare-fun {name} () {sort})");
    }
    for a in cs.assertions().iter().chain(extra.iter()) {
        let _ = writeln!(out, "(assert {})", expr_to_smtlib(a));
    }
    out
}

/// Full deterministic SMT-LIB 2 script for a satisfiability query:
/// `set-logic`, sorted declarations, assertions, `check-sat`.
pub fn script(cs: &ConstraintSet, extra: &[Expr]) -> String {
    let mut out = String::from("(set-logic QF_AUFBV)\n");
    out.push_str(&decls_and_asserts(cs, extra));
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_prints_header_and_check() {
        let cs = ConstraintSet::new();
        assert_eq!(script(&cs, &[]), "(set-logic QF_AUFBV)\n(check-sat)\n");
    }

    #[test]
    fn declarations_sorted_and_deterministic() {
        let mut cs = ConstraintSet::new();
        let y = cs.declare("y", Sort::BitVec(8)).unwrap();
        let x = cs.declare("x", Sort::BitVec(8)).unwrap();
        cs.assert(x.eq(&Expr::bv_u64(9, 8))).unwrap();
        cs.assert(y.ult(&x)).unwrap();
        let s = script(&cs, &[]);
        assert_eq!(
            s,
            "(set-logic QF_AUFBV)\n\
             (declare-fun x () (_ BitVec 8))\n\
             (declare-fun y () (_ BitVec 8))\n\
             (assert (= x (_ bv9 8)))\n\
             (assert (bvult y x))\n\
             (check-sat)\n"
        );
        assert_eq!(s, script(&cs, &[]));
    }

    #[test]
    fn operators_render_as_smtlib() {
        let x = Expr::var("x", Sort::BitVec(32));
        let e = x.extract(15, 8).zext(8).add(&Expr::bv_u64(1, 16));
        assert_eq!(
            expr_to_smtlib(&e),
            "(bvadd ((_ zero_extend 8) ((_ extract 15 8) x)) (_ bv1 16))"
        );
        let arr = Expr::const_array(32, 8, 0u32.into()).unwrap();
        let sel = arr.store(&x, &Expr::bv_u64(7, 8)).select(&x);
        assert_eq!(
            expr_to_smtlib(&sel),
            "(select (store ((as const (Array (_ BitVec 32) (_ BitVec 8))) (_ bv0 8)) x (_ bv7 8)) x)"
        );
    }
}
