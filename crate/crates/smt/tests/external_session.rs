//! The external-solver path, exercised against the `roam-solve` binary:
//! same answers as the built-in backend, deterministic models, and the
//! failure modes (timeout -> Unknown, garbage/missing binary -> Unavailable).

mod common;

use common::Gen;
use num_bigint::BigUint;
use rand::prelude::*;
use roam_smt::{
    ConstraintSet, Expr, Solver, SolverConfig, SolverError, SolverResult, Sort,
};
use std::time::Duration;

fn shim_config() -> SolverConfig {
    SolverConfig {
        command: Some(vec![env!("CARGO_BIN_EXE_roam-solve").to_string()]),
        timeout: Duration::from_secs(30),
    }
}

fn make_cs(assertions: &[Expr]) -> ConstraintSet {
    let mut cs = ConstraintSet::new();
    cs.declare("x", Sort::BitVec(8)).unwrap();
    cs.declare("y", Sort::BitVec(8)).unwrap();
    cs.declare("b0", Sort::Bool).unwrap();
    for a in assertions {
        cs.assert(a.clone()).unwrap();
    }
    cs
}

#[test]
fn external_agrees_with_builtin_across_random_queries() {
    let mut external = Solver::new(&shim_config());
    let mut builtin = Solver::new(&SolverConfig::builtin());
    assert!(external.is_external());

    // One long-lived session for all queries: exercises push/pop reuse.
    for seed in 0..60u64 {
        let mut gen = Gen::new(0xE17E_0000 + seed);
        let count = gen.rng.random_range(1..=3);
        let assertions: Vec<Expr> = (0..count).map(|_| gen.boolean(3)).collect();
        let cs = make_cs(&assertions);

        let a = external.check(&cs, &[]).unwrap();
        let b = builtin.check(&cs, &[]).unwrap();
        assert_eq!(a, b, "seed {seed}: verdicts differ");

        if a == SolverResult::Sat {
            let names = cs.constrained_variables();
            let me = external.model(&cs, &[], &names).unwrap().unwrap();
            // Both backends produce *a* model; each must satisfy the set.
            // (Models need not be identical across engines.)
            let check_extra: Vec<Expr> = names
                .iter()
                .map(|n| {
                    let sort = cs.sort_of(n).unwrap();
                    let val = me.value_of(n);
                    match sort {
                        Sort::Bool => {
                            let b = Expr::var(n.clone(), sort);
                            if val == BigUint::from(1u8) {
                                b
                            } else {
                                b.not()
                            }
                        }
                        Sort::BitVec(w) => {
                            Expr::var(n.clone(), sort).eq(&Expr::bv(val, w).unwrap())
                        }
                        Sort::Array { .. } => unreachable!(),
                    }
                })
                .collect();
            assert_eq!(
                builtin.check(&cs, &check_extra).unwrap(),
                SolverResult::Sat,
                "seed {seed}: external model rejected by builtin"
            );
        }
    }
}

#[test]
fn external_value_queries_match_builtin() {
    let mut external = Solver::new(&shim_config());
    let mut builtin = Solver::new(&SolverConfig::builtin());

    let mut cs = ConstraintSet::new();
    let x = cs.declare("x", Sort::BitVec(8)).unwrap();
    let free = cs.declare("free", Sort::BitVec(8)).unwrap();
    cs.assert(x.add(&Expr::bv_u64(1, 8)).eq(&Expr::bv_u64(10, 8)))
        .unwrap();

    assert_eq!(
        external.get_value(&cs, &x).unwrap(),
        builtin.get_value(&cs, &x).unwrap()
    );
    // Unconstrained variables complete to zero on both backends.
    assert_eq!(external.get_value(&cs, &free).unwrap(), BigUint::from(0u8));
    assert_eq!(builtin.get_value(&cs, &free).unwrap(), BigUint::from(0u8));

    let mut cs2 = ConstraintSet::new();
    let z = cs2.declare("z", Sort::BitVec(8)).unwrap();
    cs2.assert(z.ult(&Expr::bv_u64(5, 8))).unwrap();
    cs2.assert(z.ne(&Expr::bv_u64(2, 8))).unwrap();
    let (ve, te) = external.all_values(&cs2, &z, 64).unwrap();
    let (vb, tb) = builtin.all_values(&cs2, &z, 64).unwrap();
    assert_eq!(ve, vb);
    assert_eq!(te, tb);
    assert_eq!(
        ve,
        [0u8, 1, 3, 4].map(BigUint::from).to_vec()
    );

    let me = external.minmax(&cs2, &z).unwrap();
    let mb = builtin.minmax(&cs2, &z).unwrap();
    assert_eq!(me, mb);
    assert_eq!(me, (BigUint::from(0u8), BigUint::from(4u8)));
}

#[test]
fn external_handles_arrays_natively() {
    let mut external = Solver::new(&shim_config());
    let mut cs = ConstraintSet::new();
    let mem = cs
        .declare(
            "mem",
            Sort::Array {
                index: 32,
                value: 8,
            },
        )
        .unwrap();
    let i = cs.declare("i", Sort::BitVec(32)).unwrap();
    cs.assert(
        mem.store(&Expr::bv_u64(4, 32), &Expr::bv_u64(0xAA, 8))
            .select(&i)
            .eq(&Expr::bv_u64(0xAA, 8)),
    )
    .unwrap();
    cs.assert(i.ne(&Expr::bv_u64(4, 32))).unwrap();
    cs.assert(mem.select(&i).eq(&Expr::bv_u64(0xBB, 8))).unwrap();
    assert_eq!(external.check(&cs, &[]).unwrap(), SolverResult::Unsat);
}

#[test]
fn silent_solver_times_out_as_unknown() {
    let config = SolverConfig {
        command: Some(vec![
            "/bin/sh".to_string(),
            "-c".to_string(),
            "while read line; do :; done".to_string(),
        ]),
        timeout: Duration::from_millis(300),
    };
    let mut solver = Solver::new(&config);
    let mut cs = ConstraintSet::new();
    let x = cs.declare("x", Sort::BitVec(8)).unwrap();
    cs.assert(x.eq(&Expr::bv_u64(1, 8))).unwrap();
    // Timeout is a verdict (Unknown), not an availability error.
    assert_eq!(solver.check(&cs, &[]).unwrap(), SolverResult::Unknown);
    // can_be_true cannot treat Unknown as a boolean answer.
    assert!(matches!(
        solver.can_be_true(&cs, &x.eq(&Expr::bv_u64(1, 8))),
        Err(SolverError::Unknown)
    ));
}

#[test]
fn missing_binary_is_unavailable() {
    let config = SolverConfig {
        command: Some(vec!["/nonexistent/solver-binary".to_string()]),
        timeout: Duration::from_secs(1),
    };
    let mut solver = Solver::new(&config);
    let cs = ConstraintSet::new();
    assert!(matches!(
        solver.check(&cs, &[]),
        Err(SolverError::Unavailable(_))
    ));
}

#[test]
fn garbage_talker_is_unavailable_not_unknown() {
    let config = SolverConfig {
        command: Some(vec![
            "/bin/sh".to_string(),
            "-c".to_string(),
            "while read line; do echo banana; done".to_string(),
        ]),
        timeout: Duration::from_secs(5),
    };
    let mut solver = Solver::new(&config);
    let mut cs = ConstraintSet::new();
    let x = cs.declare("x", Sort::BitVec(8)).unwrap();
    cs.assert(x.eq(&Expr::bv_u64(1, 8))).unwrap();
    assert!(matches!(
        solver.check(&cs, &[]),
        Err(SolverError::Unavailable(_))
    ));
}
