//! A tiny scripted backend for exercising the engine: a program counter over
//! a fixed op list, 8-bit symbolic inputs, and ops that branch, concretize,
//! constrain, log, emit events, exit, or panic on demand.

use num_bigint::BigUint;
use roam_core::{Engine, EngineConfig, Event, Platform, Policy, State, StepOutcome, TerminateReason};
use roam_smt::{ConstraintSet, Expr, Sort};
use serde::{Deserialize, Serialize};

pub const TOY_WIDTH: u32 = 8;

#[derive(Clone, Serialize, Deserialize)]
pub struct ToyCtx {
    pub pc: u64,
}

#[derive(Clone)]
pub enum ToyOp {
    Nop,
    Note(String),
    Jump(u64),
    Exit(u64),
    Trap(u64),
    PanicNow,
    /// Fork on `var < bound`, then resume at `then_pc` or `else_pc` per the
    /// cached truth value.
    Branch {
        var: String,
        bound: u64,
        then_pc: u64,
        else_pc: u64,
    },
    /// Concretize `var` under `policy` (engine default when None) and fall
    /// through once a cached value exists.
    Pick {
        var: String,
        policy: Option<Policy>,
    },
    /// Assert `var < bound` and fall through.
    Require { var: String, bound: u64 },
    EmitRead(u64),
}

pub struct ToyPlatform {
    pub program: Vec<ToyOp>,
}

pub fn toy_var(name: &str) -> Expr {
    Expr::var(name, Sort::BitVec(TOY_WIDTH))
}

pub fn toy_lit(value: u64) -> Expr {
    Expr::bv_u64(value, TOY_WIDTH)
}

impl Platform for ToyPlatform {
    type Context = ToyCtx;

    fn tag(&self) -> &'static str {
        "toy"
    }

    fn location(&self, ctx: &ToyCtx) -> u64 {
        ctx.pc
    }

    fn execute(&self, state: &mut State<ToyCtx>) -> StepOutcome {
        let pc = state.context.pc;
        let Some(op) = self.program.get(pc as usize) else {
            return StepOutcome::Terminate(TerminateReason::InvalidInstruction);
        };
        match op.clone() {
            ToyOp::Nop => {
                state.context.pc += 1;
                StepOutcome::Continue
            }
            ToyOp::Note(msg) => {
                state.log(msg);
                state.context.pc += 1;
                StepOutcome::Continue
            }
            ToyOp::Jump(target) => {
                state.context.pc = target;
                StepOutcome::Continue
            }
            ToyOp::Exit(code) => StepOutcome::Terminate(TerminateReason::Exit(code)),
            ToyOp::Trap(addr) => {
                StepOutcome::Terminate(TerminateReason::MemoryViolation(addr))
            }
            ToyOp::PanicNow => panic!("toy backend exploded"),
            ToyOp::Branch {
                var,
                bound,
                then_pc,
                else_pc,
            } => {
                let cond = toy_var(&var).ult(&toy_lit(bound));
                match state.cached(&cond) {
                    Some(v) => {
                        state.context.pc = if *v == BigUint::from(0u8) {
                            else_pc
                        } else {
                            then_pc
                        };
                        StepOutcome::Continue
                    }
                    None => StepOutcome::Concretize {
                        expr: cond,
                        policy: None,
                    },
                }
            }
            ToyOp::Pick { var, policy } => {
                let expr = toy_var(&var);
                if state.cached(&expr).is_some() {
                    state.context.pc += 1;
                    StepOutcome::Continue
                } else {
                    StepOutcome::Concretize { expr, policy }
                }
            }
            ToyOp::Require { var, bound } => {
                state
                    .constrain(toy_var(&var).ult(&toy_lit(bound)))
                    .expect("toy inputs are declared up front");
                state.context.pc += 1;
                StepOutcome::Continue
            }
            ToyOp::EmitRead(addr) => {
                state.emit(Event::memory_read(pc, toy_lit(addr)));
                state.context.pc += 1;
                StepOutcome::Continue
            }
        }
    }
}

/// Fresh root state with the named 8-bit inputs declared.
pub fn initial_state(vars: &[&str]) -> State<ToyCtx> {
    let mut state = State::new(0, ConstraintSet::new(), ToyCtx { pc: 0 });
    for var in vars {
        state
            .declare_input(*var, Sort::BitVec(TOY_WIDTH), "toy input")
            .expect("fresh names");
    }
    state
}

pub fn engine(program: Vec<ToyOp>, config: EngineConfig) -> Engine<ToyPlatform> {
    Engine::new(ToyPlatform { program }, config).expect("valid config")
}

/// Complete binary tree of `Branch` ops with one op per tree node. Each
/// leaf exits with the code formed by its branch decisions, most significant
/// first (true = 1). Level `i` branches on `b{i}`.
pub fn labeled_tree(depth: usize) -> Vec<ToyOp> {
    fn build(prog: &mut Vec<ToyOp>, remaining: usize, path: &mut Vec<bool>) -> u64 {
        if remaining == 0 {
            let code = path.iter().fold(0u64, |acc, b| acc * 2 + u64::from(*b));
            let pc = prog.len() as u64;
            prog.push(ToyOp::Exit(code));
            return pc;
        }
        let var = format!("b{}", path.len());
        let pc = prog.len();
        prog.push(ToyOp::Nop);
        path.push(true);
        let then_pc = build(prog, remaining - 1, path);
        path.pop();
        path.push(false);
        let else_pc = build(prog, remaining - 1, path);
        path.pop();
        prog[pc] = ToyOp::Branch {
            var,
            bound: 128,
            then_pc,
            else_pc,
        };
        pc as u64
    }
    let mut prog = Vec::new();
    build(&mut prog, depth, &mut Vec::new());
    prog
}

pub fn tree_vars(depth: usize) -> Vec<String> {
    (0..depth).map(|i| format!("b{i}")).collect()
}

pub fn initial_for_tree(depth: usize) -> State<ToyCtx> {
    let names = tree_vars(depth);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    initial_state(&refs)
}
