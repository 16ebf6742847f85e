//! Serialization round-trips: printing an expression or a whole constraint
//! set to SMT-LIB text and parsing it back yields a structurally equal value.

mod common;

use common::Gen;
use num_bigint::BigUint;
use proptest::prelude::*;
use roam_smt::{expr_to_smtlib, parse_script, script, ConstraintSet, Expr, Sort};

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn expr_roundtrips_through_text(seed in any::<u64>()) {
        let mut gen = Gen::new(seed);
        let expr = if seed % 2 == 0 { gen.boolean(4) } else { gen.bv8(4) };
        let text = expr_to_smtlib(&expr);
        let sx = roam_smt::parse_one(&text).unwrap();
        let lookup = |n: &str| match n {
            "x" | "y" => Some(Sort::BitVec(8)),
            "b0" => Some(Sort::Bool),
            _ => None,
        };
        let parsed = roam_smt::parse_expr(&sx, &lookup).unwrap();
        prop_assert_eq!(parsed, expr);
    }
}

#[test]
fn constraint_set_roundtrips_with_arrays() {
    let mut gen = Gen::new(7);
    let mut cs = ConstraintSet::new();
    let i = cs.declare("i", Sort::BitVec(32)).unwrap();
    let x = cs.declare("x", Sort::BitVec(8)).unwrap();
    cs.declare("y", Sort::BitVec(8)).unwrap();
    cs.declare("b0", Sort::Bool).unwrap();
    let mem = cs
        .declare(
            "mem",
            Sort::Array {
                index: 32,
                value: 8,
            },
        )
        .unwrap();
    let base = Expr::const_array(32, 8, BigUint::from(0u8)).unwrap();

    for k in 0..10 {
        let idx = Expr::bv_u64(0x2000 + k, 32);
        let chain = base.store(&idx, &x).store(&i, &Expr::bv_u64(k, 8));
        cs.assert(chain.select(&i).eq(&gen.bv8(3))).unwrap();
        cs.assert(mem.select(&idx).ule(&x)).unwrap();
        cs.assert(gen.boolean(3)).unwrap();
    }

    let text = script(&cs, &[]);
    let parsed = parse_script(&text).unwrap();
    assert_eq!(parsed.cs.assertions(), cs.assertions());
    assert_eq!(
        parsed.cs.declarations().collect::<Vec<_>>(),
        cs.declarations().collect::<Vec<_>>()
    );
    // And the reparsed set serializes to the identical script.
    assert_eq!(script(&parsed.cs, &[]), text);
}
