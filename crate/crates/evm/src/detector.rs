//! Arithmetic overflow detection. After every ADD and MUL the detector
//! asks the solver whether the result can wrap around 2^256 under the
//! path constraints; feasible wraps are recorded with a concrete witness.

use crate::platform::{ArithKind, ArithRecord, EvmContext, EvmPlatform};
use num_bigint::BigUint;
use roam_core::{Engine, EventKind, HookCtx};
use roam_smt::{eval, simplify, Expr, Model, SolverError, Value};
use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

/// Findings accumulated by the detector, one line per feasible (or
/// undecided) overflow. Drain into the workspace findings file after the
/// run.
pub type OverflowFindings = Arc<Mutex<Vec<String>>>;

/// Subscribe an overflow detector to `engine`. Returns the shared buffer
/// the detector appends findings to.
pub fn attach_overflow_detector(engine: &mut Engine<EvmPlatform>) -> OverflowFindings {
    let findings: OverflowFindings = Arc::new(Mutex::new(Vec::new()));
    let sink = findings.clone();
    engine.subscribe(EventKind::DidExecuteInstruction, move |ctx, _event| {
        let Some(record) = ctx.state.context.last_arith.clone() else {
            return;
        };
        if let Some(line) = check_wrap(ctx, &record) {
            sink.lock().expect("findings buffer").push(line);
        }
    });
    findings
}

/// The wrap condition for one retired instruction: ADD wrapped iff the
/// result is less than an operand; MUL wrapped iff the 512-bit product has
/// bits above the low word.
fn wrap_condition(record: &ArithRecord) -> Expr {
    match record.kind {
        ArithKind::Add => record.result.ult(&record.lhs),
        ArithKind::Mul => {
            let wide = record.lhs.zext(256).mul(&record.rhs.zext(256));
            wide.extract(511, 256).ne(&Expr::zero(256))
        }
    }
}

fn check_wrap(ctx: &mut HookCtx<'_, EvmContext>, record: &ArithRecord) -> Option<String> {
    let wrap = simplify(&wrap_condition(record));
    if wrap.as_bool_const() == Some(false) {
        return None;
    }
    let name = match record.kind {
        ArithKind::Add => "add",
        ArithKind::Mul => "mul",
    };
    let place = format!(
        "overflow {name} state {} contract 0x{:040x} pc {}",
        ctx.state.id(),
        record.address,
        record.pc
    );
    match ctx.can_be_true(&wrap) {
        Ok(false) => None,
        Ok(true) => Some(match witness(ctx, record, &wrap) {
            Some(model) => format!(
                "{place} lhs 0x{:064x} rhs 0x{:064x} result 0x{:064x}",
                eval_bits(&record.lhs, &model),
                eval_bits(&record.rhs, &model),
                eval_bits(&record.result, &model)
            ),
            None => format!("{place} witness unavailable"),
        }),
        Err(SolverError::Unknown) => {
            Some(format!("{place} unknown: solver could not decide feasibility"))
        }
        Err(e) => Some(format!("{place} unknown: {e}")),
    }
}

fn witness(
    ctx: &mut HookCtx<'_, EvmContext>,
    record: &ArithRecord,
    wrap: &Expr,
) -> Option<Model> {
    let mut names: BTreeSet<String> = record.lhs.variables();
    names.extend(record.rhs.variables());
    ctx.solver
        .model(
            ctx.state.constraints(),
            std::slice::from_ref(wrap),
            &names,
        )
        .ok()
        .flatten()
}

fn eval_bits(expr: &Expr, model: &Model) -> BigUint {
    match eval(expr, model) {
        Value::Bits { value, .. } => value,
        _ => BigUint::from(0u8),
    }
}
