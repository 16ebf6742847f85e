mod common;

use common::toy::*;
use roam_core::{EngineConfig, EventKind, Workspace};
use std::sync::{Arc, Mutex};

#[test]
fn events_fire_in_pinned_order() {
    let program = vec![ToyOp::EmitRead(0xaa), ToyOp::Exit(0)];
    let mut engine = engine(program, EngineConfig::default());
    let log: Arc<Mutex<Vec<String>>> = Arc::new(Mutex::new(Vec::new()));
    for kind in [
        EventKind::WillExecuteInstruction,
        EventKind::MemoryRead,
        EventKind::DidExecuteInstruction,
        EventKind::StateTerminated,
    ] {
        let sink = log.clone();
        engine.subscribe(kind, move |_, event| {
            sink.lock().unwrap().push(format!("{kind:?}@{}", event.location));
        });
    }
    let sink = log.clone();
    engine.register_hook(0, move |_| {
        sink.lock().unwrap().push("hook@0".into());
    });
    engine.run(initial_state(&[]), None).unwrap();
    assert_eq!(
        *log.lock().unwrap(),
        vec![
            "hook@0",
            "WillExecuteInstruction@0",
            "MemoryRead@0",
            "DidExecuteInstruction@0",
            "WillExecuteInstruction@1",
            "DidExecuteInstruction@1",
            "StateTerminated@1",
        ]
    );
}

#[test]
fn did_execute_count_matches_trace_length() {
    let program = vec![
        ToyOp::Nop,
        ToyOp::Note("mid".into()),
        ToyOp::Nop,
        ToyOp::Exit(0),
    ];
    let mut engine = engine(program, EngineConfig::default());
    let count = Arc::new(Mutex::new(0u64));
    let sink = count.clone();
    engine.subscribe(EventKind::DidExecuteInstruction, move |_, _| {
        *sink.lock().unwrap() += 1;
    });
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    engine.run(initial_state(&[]), Some(&ws)).unwrap();
    let trace = std::fs::read_to_string(ws.path().join("test_00000000.trace")).unwrap();
    assert_eq!(trace.lines().count() as u64, *count.lock().unwrap());
    assert_eq!(trace, "0x0\n0x1\n0x2\n0x3\n");
}

#[test]
fn fork_restart_does_not_duplicate_trace_entries() {
    let program = vec![
        ToyOp::Branch {
            var: "x".into(),
            bound: 128,
            then_pc: 1,
            else_pc: 1,
        },
        ToyOp::Exit(0),
    ];
    let engine = engine(program, EngineConfig::default());
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 2);
    for id in 0..2 {
        let trace =
            std::fs::read_to_string(ws.path().join(format!("test_{id:08}.trace"))).unwrap();
        // The branch pc appears once even though the instruction ran twice
        // (the first run forked instead of completing).
        assert_eq!(trace, "0x0\n0x1\n");
    }
}

#[test]
fn hook_can_abandon_infeasible_states() {
    // Both branch arms converge on pc 1; the hook keeps only states that can
    // still reach x == 0x44.
    let program = vec![
        ToyOp::Branch {
            var: "x".into(),
            bound: 128,
            then_pc: 1,
            else_pc: 1,
        },
        ToyOp::Exit(0),
    ];
    let mut engine = engine(program, EngineConfig::default());
    engine.register_hook(1, |ctx| {
        let target = toy_var("x").eq(&toy_lit(0x44));
        match ctx.can_be_true(&target) {
            Ok(true) => {}
            _ => ctx.state.abandon(),
        }
    });
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 1);
    assert_eq!(report.abandoned, 1);
    assert_eq!(report.test_cases, 1);
    // The surviving group's model stays inside the kept half.
    let smt = std::fs::read_to_string(ws.path().join("test_00000000.smt")).unwrap();
    let needle = "(define-fun x () (_ BitVec 8) (_ bv";
    let line = smt.lines().find(|l| l.starts_with(needle)).unwrap();
    let value: u64 = line[needle.len()..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(value < 128);
}

#[test]
fn hook_constraints_shape_the_model() {
    let program = vec![
        ToyOp::Pick {
            var: "x".into(),
            policy: None,
        },
        ToyOp::Exit(0),
    ];
    let mut engine = engine(program, EngineConfig::default());
    engine.register_hook(0, |ctx| {
        let forced = toy_var("x").eq(&toy_lit(0x42));
        ctx.state.constrain(forced).unwrap();
    });
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 1);
    assert_eq!(report.children_created, 1);
    let smt = std::fs::read_to_string(ws.path().join("test_00000000.smt")).unwrap();
    assert!(smt.contains("(define-fun x () (_ BitVec 8) (_ bv66 8))"));
}

#[test]
fn panicking_hook_abandons_only_that_state() {
    let program = vec![
        ToyOp::Branch {
            var: "x".into(),
            bound: 128,
            then_pc: 1,
            else_pc: 2,
        },
        ToyOp::Exit(1),
        ToyOp::Exit(0),
    ];
    let mut engine = engine(program, EngineConfig::default());
    engine.register_hook(1, |_| panic!("hook bug"));
    let report = engine.run(initial_state(&["x"]), None).unwrap();
    // The then-side dies in the hook, the else-side still completes, and the
    // run as a whole is not aborted.
    assert_eq!(report.terminated, 1);
    assert_eq!(report.abandoned, 1);
    assert!(report.aborted.is_none());
    assert_eq!(report.diagnostics.len(), 1);
    assert!(report.diagnostics[0].contains("hook bug"));
}

#[test]
fn panicking_backend_aborts_but_keeps_finished_work() {
    let program = vec![
        ToyOp::Branch {
            var: "x".into(),
            bound: 128,
            then_pc: 1,
            else_pc: 2,
        },
        ToyOp::Exit(1),
        ToyOp::PanicNow,
    ];
    let engine = engine(program, EngineConfig::default());
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 1);
    assert_eq!(ws.test_count(), 1);
    let aborted = report.aborted.expect("backend panic aborts the run");
    assert!(aborted.contains("toy backend exploded"));
}

#[test]
fn unsatisfiable_at_save_degrades_to_messages_only() {
    let program = vec![ToyOp::Exit(9)];
    let mut engine = engine(program, EngineConfig::default());
    engine.subscribe(EventKind::DidExecuteInstruction, |ctx, _| {
        // Wedge the constraint store after execution so persistence sees an
        // unsatisfiable set.
        let x = toy_var("x");
        ctx.state.constrain(x.eq(&toy_lit(5))).unwrap();
        ctx.state.constrain(x.eq(&toy_lit(6))).unwrap();
    });
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 1);
    assert_eq!(report.test_cases, 1);
    let messages =
        std::fs::read_to_string(ws.path().join("test_00000000.messages")).unwrap();
    assert!(messages.starts_with("status: exit(9)\n"));
    assert!(messages.contains("model unavailable"));
    assert!(!ws.path().join("test_00000000.trace").exists());
    assert!(!ws.path().join("test_00000000.smt").exists());
}

#[test]
fn state_messages_reach_the_persisted_group() {
    let program = vec![
        ToyOp::Note("first note".into()),
        ToyOp::Note("second note".into()),
        ToyOp::Exit(0),
    ];
    let engine = engine(program, EngineConfig::default());
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    engine.run(initial_state(&[]), Some(&ws)).unwrap();
    let messages =
        std::fs::read_to_string(ws.path().join("test_00000000.messages")).unwrap();
    assert_eq!(messages, "status: exit(0)\nfirst note\nsecond note\n");
}

#[test]
fn forked_children_inherit_parent_messages() {
    let program = vec![
        ToyOp::Note("before the fork".into()),
        ToyOp::Branch {
            var: "x".into(),
            bound: 128,
            then_pc: 2,
            else_pc: 2,
        },
        ToyOp::Exit(0),
    ];
    let engine = engine(program, EngineConfig::default());
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    let report = engine.run(initial_state(&["x"]), Some(&ws)).unwrap();
    assert_eq!(report.terminated, 2);
    for id in 0..2 {
        let messages =
            std::fs::read_to_string(ws.path().join(format!("test_{id:08}.messages"))).unwrap();
        assert!(messages.contains("before the fork"));
    }
}

#[test]
fn memory_violation_status_is_recorded() {
    let engine = engine(vec![ToyOp::Trap(0xdead)], EngineConfig::default());
    let tmp = tempfile::tempdir().unwrap();
    let ws = Workspace::create_in(tmp.path()).unwrap();
    engine.run(initial_state(&[]), Some(&ws)).unwrap();
    let messages =
        std::fs::read_to_string(ws.path().join("test_00000000.messages")).unwrap();
    assert!(messages.starts_with("status: memory violation at 0xdead\n"));
}
