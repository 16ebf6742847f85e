use crate::constraints::ConstraintSet;
use crate::error::SmtError;
use crate::expr::{Expr, OpKind};
use crate::sexpr::{parse_all, SExpr};
use crate::sort::Sort;
use num_bigint::BigUint;
use num_traits::Num;

/// Outcome of parsing a declarations-and-assertions script (the body format
/// used for serialized states and solver input).
#[derive(Debug, Default)]
pub struct ParsedScript {
    pub cs: ConstraintSet,
}

/// Parse a script consisting of `set-logic`/`set-option`/`set-info`
/// (ignored), `declare-fun`/`declare-const`, `assert`, and optionally
/// `check-sat`/`exit` (ignored). Anything else is an error.
pub fn parse_script(text: &str) -> Result<ParsedScript, SmtError> {
    let mut out = ParsedScript::default();
    for cmd in parse_all(text)? {
        let items = cmd
            .list()
            .ok_or_else(|| SmtError::Parse(format!("expected a command, got `{cmd}`")))?;
        let head = items
            .first()
            .and_then(SExpr::atom)
            .ok_or_else(|| SmtError::Parse("command without a head symbol".into()))?;
        match head {
            "set-logic" | "set-option" | "set-info" | "check-sat" | "exit" => {}
            "declare-fun" => {
                if items.len() != 4 || items[2].list().map(|l| l.len()) != Some(0) {
                    return Err(SmtError::Parse(format!("malformed declare-fun: {cmd}")));
                }
                let name = items[1]
                    .atom()
                    .ok_or_else(|| SmtError::Parse("declare-fun name".into()))?;
                let sort = parse_sort(&items[3])?;
                out.cs.declare(name, sort)?;
            }
            "declare-const" => {
                if items.len() != 3 {
                    return Err(SmtError::Parse(format!("malformed declare-const: {cmd}")));
                }
                let name = items[1]
                    .atom()
                    .ok_or_else(|| SmtError::Parse("declare-const name".into()))?;
                let sort = parse_sort(&items[2])?;
                out.cs.declare(name, sort)?;
            }
            "assert" => {
                if items.len() != 2 {
                    return Err(SmtError::Parse(format!("malformed assert: {cmd}")));
                }
                let lookup = |n: &str| out.cs.sort_of(n);
                let e = parse_expr(&items[1], &lookup)?;
                out.cs.assert(e)?;
            }
            other => {
                return Err(SmtError::Unsupported(format!(
                    "command `{other}` in script"
                )))
            }
        }
    }
    Ok(out)
}

pub fn parse_sort(sx: &SExpr) -> Result<Sort, SmtError> {
    match sx {
        SExpr::Atom(a) if a == "Bool" => Ok(Sort::Bool),
        SExpr::List(items) => {
            let heads: Vec<Option<&str>> = items.iter().map(SExpr::atom).collect();
            match heads.as_slice() {
                [Some("_"), Some("BitVec"), Some(w)] => {
                    let w: u32 = w
                        .parse()
                        .map_err(|_| SmtError::Parse(format!("bad width in {sx}")))?;
                    Ok(Sort::BitVec(w))
                }
                [Some("Array"), _, _] => {
                    let index = parse_sort(&items[1])?
                        .width()
                        .ok_or_else(|| SmtError::Parse("array index sort".into()))?;
                    let value = parse_sort(&items[2])?
                        .width()
                        .ok_or_else(|| SmtError::Parse("array value sort".into()))?;
                    Ok(Sort::Array { index, value })
                }
                _ => Err(SmtError::Parse(format!("unknown sort `{sx}`"))),
            }
        }
        _ => Err(SmtError::Parse(format!("unknown sort `{sx}`"))),
    }
}

/// Parse a bitvector literal: `(_ bvN w)`, `#x...`, or `#b...`.
/// Returns the value and its width.
pub fn parse_bv_literal(sx: &SExpr) -> Result<Option<(BigUint, u32)>, SmtError> {
    match sx {
        SExpr::Atom(a) => {
            if let Some(hex) = a.strip_prefix("#x") {
                let v = BigUint::from_str_radix(hex, 16)
                    .map_err(|_| SmtError::Parse(format!("bad hex literal `{a}`")))?;
                Ok(Some((v, 4 * hex.len() as u32)))
            } else if let Some(bin) = a.strip_prefix("#b") {
                let v = BigUint::from_str_radix(bin, 2)
                    .map_err(|_| SmtError::Parse(format!("bad binary literal `{a}`")))?;
                Ok(Some((v, bin.len() as u32)))
            } else {
                Ok(None)
            }
        }
        SExpr::List(items) => match items
            .iter()
            .map(SExpr::atom)
            .collect::<Vec<_>>()
            .as_slice()
        {
            [Some("_"), Some(bv), Some(w)] if bv.starts_with("bv") => {
                let v = BigUint::from_str_radix(&bv[2..], 10)
                    .map_err(|_| SmtError::Parse(format!("bad literal `{sx}`")))?;
                let w: u32 = w
                    .parse()
                    .map_err(|_| SmtError::Parse(format!("bad width in `{sx}`")))?;
                Ok(Some((v, w)))
            }
            _ => Ok(None),
        },
    }
}

fn head_to_op(head: &str) -> Option<OpKind> {
    use OpKind::*;
    Some(match head {
        "bvadd" => BvAdd,
        "bvsub" => BvSub,
        "bvmul" => BvMul,
        "bvudiv" => BvUdiv,
        "bvsdiv" => BvSdiv,
        "bvurem" => BvUrem,
        "bvsrem" => BvSrem,
        "bvand" => BvAnd,
        "bvor" => BvOr,
        "bvxor" => BvXor,
        "bvnot" => BvNot,
        "bvneg" => BvNeg,
        "bvshl" => BvShl,
        "bvlshr" => BvLshr,
        "bvashr" => BvAshr,
        "bvult" => BvUlt,
        "bvule" => BvUle,
        "bvslt" => BvSlt,
        "bvsle" => BvSle,
        "=" => Eq,
        "not" => Not,
        "and" => And,
        "or" => Or,
        "ite" => Ite,
        "concat" => Concat,
        "select" => Select,
        "store" => Store,
        _ => return None,
    })
}

/// Parse a term. Variable sorts come from `lookup`; unknown symbols are an
/// error. Supports exactly the operator set of [`OpKind`].
pub fn parse_expr(
    sx: &SExpr,
    lookup: &dyn Fn(&str) -> Option<Sort>,
) -> Result<Expr, SmtError> {
    if let Some((v, w)) = parse_bv_literal(sx)? {
        return Expr::bv(v, w);
    }
    match sx {
        SExpr::Atom(a) => match a.as_str() {
            "true" => Ok(Expr::true_()),
            "false" => Ok(Expr::false_()),
            name => match lookup(name) {
                Some(sort) => Ok(Expr::var(name, sort)),
                None => Err(SmtError::UndeclaredVariable(name.to_string())),
            },
        },
        SExpr::List(items) => {
            if items.is_empty() {
                return Err(SmtError::Parse("empty application".into()));
            }
            // ((as const <array-sort>) <value>)
            if let Some(as_items) = items[0].list() {
                if as_items.first().and_then(SExpr::atom) == Some("as")
                    && as_items.get(1).and_then(SExpr::atom) == Some("const")
                {
                    if items.len() != 2 || as_items.len() != 3 {
                        return Err(SmtError::Parse(format!("malformed const array `{sx}`")));
                    }
                    let sort = parse_sort(&as_items[2])?;
                    let (index, value) = match sort {
                        Sort::Array { index, value } => (index, value),
                        s => {
                            return Err(SmtError::Parse(format!(
                                "const array with non-array sort {s}"
                            )))
                        }
                    };
                    let (v, _) = parse_bv_literal(&items[1])?.ok_or_else(|| {
                        SmtError::Parse(format!("const array default must be a literal: {sx}"))
                    })?;
                    return Expr::const_array(index, value, v);
                }
                // ((_ extract hi lo) x) and friends
                if as_items.first().and_then(SExpr::atom) == Some("_") {
                    let name = as_items.get(1).and_then(SExpr::atom).unwrap_or("");
                    let num = |i: usize| -> Result<u32, SmtError> {
                        as_items
                            .get(i)
                            .and_then(SExpr::atom)
                            .and_then(|a| a.parse().ok())
                            .ok_or_else(|| SmtError::Parse(format!("bad index in `{sx}`")))
                    };
                    let kind = match name {
                        "extract" => OpKind::Extract(num(2)?, num(3)?),
                        "zero_extend" => OpKind::ZeroExt(num(2)?),
                        "sign_extend" => OpKind::SignExt(num(2)?),
                        other => {
                            return Err(SmtError::Unsupported(format!(
                                "indexed operator `{other}`"
                            )))
                        }
                    };
                    if items.len() != 2 {
                        return Err(SmtError::Parse(format!("malformed application `{sx}`")));
                    }
                    let arg = parse_expr(&items[1], lookup)?;
                    return Expr::op(kind, vec![arg]);
                }
            }
            let head = items[0]
                .atom()
                .ok_or_else(|| SmtError::Parse(format!("bad application head in `{sx}`")))?;
            let kind = head_to_op(head)
                .ok_or_else(|| SmtError::Unsupported(format!("operator `{head}`")))?;
            let args: Vec<Expr> = items[1..]
                .iter()
                .map(|s| parse_expr(s, lookup))
                .collect::<Result<_, _>>()?;
            // Accept n-ary chains for the associative boolean/bitvector ops
            // (SMT-LIB allows them); fold left into the binary core.
            match kind {
                OpKind::And | OpKind::Or | OpKind::BvAdd | OpKind::BvAnd | OpKind::BvOr
                | OpKind::BvXor | OpKind::BvMul | OpKind::Concat
                    if args.len() > 2 =>
                {
                    let mut it = args.into_iter();
                    let first = it.next().unwrap();
                    it.try_fold(first, |acc, rhs| Expr::op(kind, vec![acc, rhs]))
                }
                _ => Expr::op(kind, args),
            }
        }
    }
}

/// Parse `(define-fun <name> () <sort> <literal>)` entries, as written in
/// the model section of test-case `.smt` files.
pub fn parse_model_defs(text: &str) -> Result<Vec<(String, BigUint)>, SmtError> {
    let mut out = Vec::new();
    for cmd in parse_all(text)? {
        let items = cmd
            .list()
            .ok_or_else(|| SmtError::Parse(format!("expected define-fun, got `{cmd}`")))?;
        if items.first().and_then(SExpr::atom) != Some("define-fun") || items.len() != 5 {
            return Err(SmtError::Parse(format!("expected define-fun, got `{cmd}`")));
        }
        let name = items[1]
            .atom()
            .ok_or_else(|| SmtError::Parse("define-fun name".into()))?;
        let value = match items[4].atom() {
            Some("true") => BigUint::from(1u8),
            Some("false") => BigUint::from(0u8),
            _ => {
                parse_bv_literal(&items[4])?
                    .ok_or_else(|| SmtError::Parse(format!("bad model value in `{cmd}`")))?
                    .0
            }
        };
        out.push((name.to_string(), value));
    }
    Ok(out)
}
