//! Symbolic interpreter for the 32-bit machine, wired into the exploration
//! engine through the `Platform` trait.

use crate::isa::{decode, Opcode, INSTRUCTION_SIZE};
use crate::memory::{Access, MemoryMap, MemoryModel};
use crate::os::{ByteSpec, MiniOs, SYS_EXIT, SYS_READ, SYS_WRITE};
use num_bigint::BigUint;
use roam_core::{Event, Platform, Policy, State, StepOutcome, TerminateReason};
use roam_smt::{eval, simplify, Expr, Model, Sort, Value};
use serde::{Deserialize, Serialize};

/// Full machine state carried inside each exploration state.
#[derive(Clone, Serialize, Deserialize)]
pub struct MiniVmContext {
    pub registers: [Expr; 8],
    pub pc: u32,
    pub memory: MemoryMap,
    pub os: MiniOs,
    /// Byte specs the argument block was built from, kept for test-case
    /// rendering (the block itself lives in memory).
    pub argv: Vec<Vec<ByteSpec>>,
}

pub struct MiniVmPlatform;

impl Platform for MiniVmPlatform {
    type Context = MiniVmContext;

    fn tag(&self) -> &'static str {
        "minivm"
    }

    fn location(&self, context: &MiniVmContext) -> u64 {
        context.pc as u64
    }

    fn execute(&self, state: &mut State<MiniVmContext>) -> StepOutcome {
        step(state)
    }

    fn testcase_files(
        &self,
        state: &State<MiniVmContext>,
        model: &Model,
    ) -> Vec<(String, Vec<u8>)> {
        render_files(state, model)
    }
}

pub(crate) fn lit32(v: u32) -> Expr {
    Expr::bv_u64(v as u64, 32)
}

fn lit8(v: u8) -> Expr {
    Expr::bv_u64(v as u64, 8)
}

fn reg(state: &State<MiniVmContext>, index: u8) -> Expr {
    state.context.registers[index as usize].clone()
}

fn set_reg(state: &mut State<MiniVmContext>, index: u8, value: Expr) {
    state.context.registers[index as usize] = value;
}

fn advance(state: &mut State<MiniVmContext>, pc: u32) -> StepOutcome {
    state.context.pc = pc.wrapping_add(INSTRUCTION_SIZE);
    StepOutcome::Continue
}

fn fault(addr: u32) -> StepOutcome {
    StepOutcome::Terminate(TerminateReason::MemoryViolation(addr as u64))
}

fn to_u32(v: &BigUint) -> u32 {
    u32::try_from(v).expect("32-bit machine value")
}

/// Outcome of turning an expression into a concrete u32.
enum Resolved {
    Value(u32),
    /// The instruction must be suspended; propagate this outcome.
    Pending(StepOutcome),
}

/// Concretize `expr` under `policy`. Constants and previously answered
/// requests resolve immediately; anything else suspends the instruction.
fn resolve_u32(
    state: &mut State<MiniVmContext>,
    expr: &Expr,
    policy: Policy,
    what: &str,
) -> Resolved {
    let expr = simplify(expr);
    if let Some(c) = expr.as_bv_const() {
        return Resolved::Value(to_u32(c));
    }
    if let Some(v) = state.cached(&expr) {
        let v = to_u32(v);
        return Resolved::Value(v);
    }
    let how = match policy {
        Policy::One => "a single feasible value",
        Policy::Minmax => "its feasible bounds",
        Policy::All { .. } => "all feasible values",
    };
    state.log(format!("concretizing {what} to {how}"));
    Resolved::Pending(StepOutcome::Concretize {
        expr,
        policy: Some(policy),
    })
}

/// How a load/store address gets handled under the active memory model.
enum Address {
    Concrete(u32),
    Symbolic(Expr),
    Pending(StepOutcome),
}

fn resolve_address(state: &mut State<MiniVmContext>, addr: &Expr, what: &str) -> Address {
    let addr = simplify(addr);
    if let Some(c) = addr.as_bv_const() {
        return Address::Concrete(to_u32(c));
    }
    match state.context.memory.model {
        MemoryModel::FullySymbolic => Address::Symbolic(addr),
        MemoryModel::ConcretizingAddress => match resolve_u32(state, &addr, Policy::all(), what) {
            Resolved::Value(v) => Address::Concrete(v),
            Resolved::Pending(out) => Address::Pending(out),
        },
    }
}

/// Execute one instruction. Every path that mutates the context first
/// finishes all concretization, so a suspended instruction can re-run from
/// an unchanged state.
pub(crate) fn step(state: &mut State<MiniVmContext>) -> StepOutcome {
    let pc = state.context.pc;
    let raw = match state.context.memory.fetch(pc) {
        Ok(bytes) => bytes,
        Err(f) => return fault(f.0),
    };
    let instr = match decode(&raw) {
        Ok(i) => i,
        Err(_) => return StepOutcome::Terminate(TerminateReason::InvalidInstruction),
    };

    match instr.opcode {
        Opcode::Halt => {
            state.context.os.exit_code = Some(0);
            StepOutcome::Terminate(TerminateReason::Exit(0))
        }
        Opcode::Loadi => {
            set_reg(state, instr.rd, lit32(instr.imm));
            advance(state, pc)
        }
        Opcode::Mov => {
            let v = reg(state, instr.rs1);
            set_reg(state, instr.rd, v);
            advance(state, pc)
        }
        Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Xor | Opcode::And | Opcode::Or => {
            let a = reg(state, instr.rs1);
            let b = reg(state, instr.rs2);
            let v = match instr.opcode {
                Opcode::Add => a.add(&b),
                Opcode::Sub => a.sub(&b),
                Opcode::Mul => a.mul(&b),
                Opcode::Xor => a.bvxor(&b),
                Opcode::And => a.bvand(&b),
                _ => a.bvor(&b),
            };
            set_reg(state, instr.rd, simplify(&v));
            advance(state, pc)
        }
        Opcode::Shl | Opcode::Shr => {
            // Shift amounts wrap modulo the register width.
            let a = reg(state, instr.rs1);
            let amount = simplify(&reg(state, instr.rs2).bvand(&lit32(31)));
            let v = match instr.opcode {
                Opcode::Shl => a.shl(&amount),
                _ => a.lshr(&amount),
            };
            set_reg(state, instr.rd, simplify(&v));
            advance(state, pc)
        }
        Opcode::Ltu => {
            let a = reg(state, instr.rs1);
            let b = reg(state, instr.rs2);
            let v = a.ult(&b).ite(&lit32(1), &lit32(0));
            set_reg(state, instr.rd, simplify(&v));
            advance(state, pc)
        }
        Opcode::Load => {
            let addr_expr = simplify(&reg(state, instr.rs1).add(&lit32(instr.imm)));
            match resolve_address(state, &addr_expr, "load address") {
                Address::Pending(out) => out,
                Address::Concrete(a) => match state.context.memory.read_concrete(a, 4) {
                    Ok(value) => {
                        set_reg(state, instr.rd, value);
                        state.emit(Event::memory_read(pc as u64, lit32(a)));
                        advance(state, pc)
                    }
                    Err(f) => fault(f.0),
                },
                Address::Symbolic(addr) => {
                    let (value, guard) = state.context.memory.read_symbolic(&addr, 4);
                    state
                        .constrain(guard)
                        .expect("memory range guard is well-sorted");
                    set_reg(state, instr.rd, value);
                    state.emit(Event::memory_read(pc as u64, addr));
                    advance(state, pc)
                }
            }
        }
        Opcode::Store => {
            let addr_expr = simplify(&reg(state, instr.rs1).add(&lit32(instr.imm)));
            let value = reg(state, instr.rs2);
            match resolve_address(state, &addr_expr, "store address") {
                Address::Pending(out) => out,
                Address::Concrete(a) => match state.context.memory.write_concrete(a, &value, 4) {
                    Ok(()) => {
                        state.emit(Event::memory_write(pc as u64, lit32(a)));
                        advance(state, pc)
                    }
                    Err(f) => fault(f.0),
                },
                Address::Symbolic(addr) => {
                    let guard = state.context.memory.write_symbolic(&addr, &value, 4);
                    state
                        .constrain(guard)
                        .expect("memory range guard is well-sorted");
                    state.emit(Event::memory_write(pc as u64, addr));
                    advance(state, pc)
                }
            }
        }
        Opcode::Jmp => {
            state.context.pc = instr.imm;
            StepOutcome::Continue
        }
        Opcode::Jz | Opcode::Jnz => {
            let cond = simplify(&reg(state, instr.rs1).eq(&lit32(0)));
            let is_zero = if let Some(b) = cond.as_bool_const() {
                Some(b)
            } else {
                state.cached(&cond).map(|v| v != &BigUint::from(0u8))
            };
            match is_zero {
                Some(z) => {
                    let jump = z == matches!(instr.opcode, Opcode::Jz);
                    state.context.pc = if jump {
                        instr.imm
                    } else {
                        pc.wrapping_add(INSTRUCTION_SIZE)
                    };
                    StepOutcome::Continue
                }
                None => StepOutcome::Concretize {
                    expr: cond,
                    policy: None,
                },
            }
        }
        Opcode::Syscall => syscall(state, pc),
    }
}

macro_rules! resolve {
    ($state:expr, $expr:expr, $policy:expr, $what:expr) => {
        match resolve_u32($state, &$expr, $policy, $what) {
            Resolved::Value(v) => v,
            Resolved::Pending(out) => return out,
        }
    };
}

fn syscall(state: &mut State<MiniVmContext>, pc: u32) -> StepOutcome {
    let num = resolve!(state, reg(state, 0), Policy::One, "syscall number");
    match num {
        SYS_EXIT => {
            let code = resolve!(state, reg(state, 1), Policy::One, "exit code");
            state.context.os.exit_code = Some(code);
            StepOutcome::Terminate(TerminateReason::Exit(code as u64))
        }
        SYS_READ => {
            let fd = resolve!(state, reg(state, 1), Policy::One, "read file descriptor");
            if fd != 0 {
                set_reg(state, 0, lit32(u32::MAX));
                return advance(state, pc);
            }
            let len = resolve!(state, reg(state, 3), Policy::One, "read length");
            let buf = resolve!(state, reg(state, 2), Policy::all(), "read buffer address");
            let n = (len as usize).min(state.context.os.remaining_stdin());
            if n > 0 {
                if state
                    .context
                    .memory
                    .region_at(buf, n as u32, Access::Write)
                    .is_err()
                {
                    return fault(buf);
                }
                let cursor = state.context.os.cursor;
                for i in 0..n {
                    let byte = match &state.context.os.stdin[cursor + i] {
                        ByteSpec::Concrete(b) => lit8(*b),
                        ByteSpec::Symbolic(name) => Expr::var(name.clone(), Sort::BitVec(8)),
                    };
                    state
                        .context
                        .memory
                        .write_concrete(buf + i as u32, &byte, 1)
                        .expect("span already checked");
                }
                state.emit(Event::memory_write(pc as u64, lit32(buf)));
            }
            state.context.os.cursor += n;
            set_reg(state, 0, lit32(n as u32));
            advance(state, pc)
        }
        SYS_WRITE => {
            let fd = resolve!(state, reg(state, 1), Policy::One, "write file descriptor");
            if fd != 1 {
                set_reg(state, 0, lit32(u32::MAX));
                return advance(state, pc);
            }
            let len = resolve!(state, reg(state, 3), Policy::One, "write length");
            let buf = resolve!(state, reg(state, 2), Policy::all(), "write buffer address");
            if len > 0 {
                if state
                    .context
                    .memory
                    .region_at(buf, len, Access::Read)
                    .is_err()
                {
                    return fault(buf);
                }
                for i in 0..len {
                    let byte = state
                        .context
                        .memory
                        .read_concrete(buf + i, 1)
                        .expect("span already checked");
                    state.context.os.stdout.push(byte);
                }
                state.emit(Event::memory_read(pc as u64, lit32(buf)));
            }
            set_reg(state, 0, lit32(len));
            advance(state, pc)
        }
        _ => StepOutcome::Terminate(TerminateReason::InvalidInstruction),
    }
}

fn low_byte(v: &BigUint) -> u8 {
    v.to_bytes_le().first().copied().unwrap_or(0)
}

/// Render the machine-specific test-case files: the concrete stdin stream,
/// the argument vector (one hex-encoded argument per line), and the bytes
/// the program wrote to stdout under this model.
fn render_files(state: &State<MiniVmContext>, model: &Model) -> Vec<(String, Vec<u8>)> {
    let ctx = &state.context;
    let byte_of = |spec: &ByteSpec| match spec {
        ByteSpec::Concrete(b) => *b,
        ByteSpec::Symbolic(name) => low_byte(&model.value_of(name)),
    };

    let stdin: Vec<u8> = ctx.os.stdin.iter().map(byte_of).collect();

    let mut argv = Vec::new();
    for arg in &ctx.argv {
        for spec in arg {
            let b = byte_of(spec);
            argv.extend_from_slice(format!("{b:02x}").as_bytes());
        }
        argv.push(b'\n');
    }

    let stdout: Vec<u8> = ctx
        .os
        .stdout
        .iter()
        .map(|e| match eval(e, model) {
            Value::Bits { value, .. } => low_byte(&value),
            _ => 0,
        })
        .collect();

    vec![
        ("stdin".to_string(), stdin),
        ("argv".to_string(), argv),
        ("stdout".to_string(), stdout),
    ]
}
