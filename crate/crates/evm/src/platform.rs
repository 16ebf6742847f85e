//! The symbolic EVM backend: call frames over 256-bit symbolic words,
//! symbolic transaction application, world snapshots with rollback, a
//! simplified gas schedule, and SHA3 via concretization with recorded pairs.

use crate::keccak::keccak256;
use crate::opcode::{jumpdests, Op};
use crate::world::{Transaction, TxKind, World, WORD};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use roam_core::{Event, Platform, Policy, State, StepOutcome, TerminateReason};
use roam_smt::{eval, simplify, Expr, Model, Sort, Value};
use serde::{Deserialize, Serialize};

pub const STACK_LIMIT: usize = 1024;
pub const CALL_DEPTH_LIMIT: usize = 64;
pub const DEFAULT_GAS_BUDGET: u64 = 10_000_000;

/// Concretized memory offsets and lengths must stay below this bound. The
/// simplified gas schedule has no memory-expansion cost, so the rein on
/// absurd offsets is explicit instead of economic.
const MEMORY_BOUND: u64 = 1 << 32;

/// How each path acquires its symbolic transactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxSetup {
    /// Symbolic transactions applied to every path, one after another, each
    /// starting where the previous one committed.
    pub txlimit: u64,
    /// Calldata bytes declared per transaction.
    pub txdatasize: u32,
    /// Gas budget granted to each transaction.
    pub gas_budget: u64,
}

impl Default for TxSetup {
    fn default() -> TxSetup {
        TxSetup {
            txlimit: 1,
            txdatasize: 36,
            gas_budget: DEFAULT_GAS_BUDGET,
        }
    }
}

/// Which arithmetic instruction last retired, for overflow analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithKind {
    Add,
    Mul,
}

/// Operands and result of the arithmetic instruction that just executed,
/// published so subscribers can query wrap-around feasibility.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArithRecord {
    pub kind: ArithKind,
    pub lhs: Expr,
    pub rhs: Expr,
    pub result: Expr,
    pub address: u64,
    pub pc: u32,
}

/// One level of the call stack. The bottom frame is the transaction itself;
/// each frame carries the world snapshot to restore if it fails. For
/// transaction frames the snapshot is taken after the value transfer, for
/// inner calls before it (a failed call refunds its value).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frame {
    /// Account whose code is running; owns the storage SSTORE writes.
    pub address: u64,
    pub caller: u64,
    pub pc: u32,
    pub stack: Vec<Expr>,
    /// Byte-addressed scratch memory as an Array(256 -> 8) expression.
    pub memory: Expr,
    /// Highest touched memory offset, rounded up to a 32-byte boundary.
    pub msize: u64,
    /// One 8-bit expression per calldata byte.
    pub calldata: Vec<Expr>,
    pub callvalue: Expr,
    /// World to restore on Revert/OutOfGas/InvalidInstruction.
    pub snapshot: World,
    /// Where the parent wants return data copied: (offset, max length).
    ret_slot: Option<(u64, u64)>,
}

/// Machine context stored in every state: the world, the call stack, and
/// the transaction history that finished states render into test cases.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvmContext {
    pub world: World,
    /// Active call stack; empty exactly between transactions. Call depth is
    /// `frames.len() - 1`.
    pub frames: Vec<Frame>,
    /// Transactions applied on this path, in order.
    pub txs: Vec<Transaction>,
    /// Externally-owned account issuing the symbolic transactions.
    pub caller: u64,
    /// Contract the transactions target.
    pub target: u64,
    pub setup: TxSetup,
    /// Concrete gas left in the current transaction.
    pub gas_remaining: u64,
    /// Return data of the most recently completed inner call.
    pub last_return: Vec<Expr>,
    /// Set while the `did_execute_instruction` event for an ADD/MUL is being
    /// dispatched, cleared by the next instruction.
    pub last_arith: Option<ArithRecord>,
}

impl EvmContext {
    /// Standard single-contract setup: a funded externally-owned caller and
    /// the contract under test, which receives every symbolic transaction.
    pub fn for_contract(code: Vec<u8>, setup: TxSetup) -> EvmContext {
        let mut world = World::new();
        let caller = world.create_account(crate::world::initial_caller_balance());
        let target = world.create_contract(code, BigUint::from(0u8));
        EvmContext::with_world(world, caller, target, setup)
    }

    /// Setup over a prepared world. `target` receives the symbolic
    /// transactions, `caller` pays for them.
    pub fn with_world(world: World, caller: u64, target: u64, setup: TxSetup) -> EvmContext {
        EvmContext {
            world,
            frames: Vec::new(),
            txs: Vec::new(),
            caller,
            target,
            setup,
            gas_remaining: 0,
            last_return: Vec::new(),
            last_arith: None,
        }
    }

    pub fn location(&self) -> u64 {
        match self.frames.last() {
            Some(f) => pack_location(f.address, f.pc),
            None => pack_location(self.target, 0),
        }
    }
}

/// Trace and hook locations pack the executing account with its program
/// counter; sequential artifact addresses always fit the high half.
pub fn pack_location(address: u64, pc: u32) -> u64 {
    debug_assert!(address < (1 << 32), "account address too large to pack");
    (address << 32) | u64::from(pc)
}

pub fn unpack_location(location: u64) -> (u64, u32) {
    (location >> 32, (location & 0xffff_ffff) as u32)
}

pub struct EvmPlatform;

impl Platform for EvmPlatform {
    type Context = EvmContext;

    fn tag(&self) -> &'static str {
        "evm"
    }

    fn location(&self, context: &EvmContext) -> u64 {
        context.location()
    }

    fn execute(&self, state: &mut State<EvmContext>) -> StepOutcome {
        step(state)
    }

    fn testcase_files(&self, state: &State<EvmContext>, model: &Model) -> Vec<(String, Vec<u8>)> {
        render_files(state, model)
    }
}

fn word(v: u64) -> Expr {
    Expr::bv_u64(v, WORD)
}

fn word_big(v: BigUint) -> Expr {
    Expr::bv_masked(v, WORD)
}

fn byte(v: u8) -> Expr {
    Expr::bv_u64(u64::from(v), 8)
}

/// 1 or 0 as a 256-bit word.
fn bool_word(cond: &Expr) -> Expr {
    cond.ite(&word(1), &Expr::zero(WORD))
}

fn address_mask() -> Expr {
    word_big((BigUint::from(1u8) << 160) - 1u8)
}

fn zero_memory() -> Expr {
    Expr::const_array(WORD, 8, BigUint::from(0u8)).expect("byte-addressed memory array")
}

enum Resolved {
    Known(BigUint),
    Out(StepOutcome),
}

/// Obtain a concrete value for `expr`: constant after simplification, the
/// concretization cache (this is a re-attempt after a fork), or a fork
/// request under `policy`.
fn resolve(
    state: &mut State<EvmContext>,
    expr: &Expr,
    policy: Policy,
    what: &str,
) -> Resolved {
    let e = simplify(expr);
    if let Some(v) = e.as_bv_const() {
        return Resolved::Known(v.clone());
    }
    if let Some(v) = state.cached(&e) {
        return Resolved::Known(v.clone());
    }
    let how = match policy {
        Policy::One => "a single feasible value",
        Policy::All { .. } => "all feasible values",
        Policy::Minmax => "its feasible bounds",
    };
    state.log(format!("concretizing {what} to {how}"));
    Resolved::Out(StepOutcome::Concretize {
        expr: e,
        policy: Some(policy),
    })
}

macro_rules! need {
    ($state:expr, $expr:expr, $policy:expr, $what:expr) => {
        match resolve($state, $expr, $policy, $what) {
            Resolved::Known(v) => v,
            Resolved::Out(out) => return out,
        }
    };
}

/// Truth of `value != 0`: constant, cached from an earlier two-way fork, or
/// a fork request.
fn resolve_truth(state: &mut State<EvmContext>, value: &Expr) -> Result<bool, StepOutcome> {
    let cond = simplify(&value.ne(&Expr::zero(value.width())));
    resolve_bool(state, cond)
}

fn resolve_bool(state: &mut State<EvmContext>, cond: Expr) -> Result<bool, StepOutcome> {
    if let Some(b) = cond.as_bool_const() {
        return Ok(b);
    }
    if let Some(v) = state.cached(&cond) {
        return Ok(*v != BigUint::from(0u8));
    }
    Err(StepOutcome::Concretize {
        expr: cond,
        policy: None,
    })
}

/// Resolve a stack word that names a memory offset or length. Values at or
/// beyond the memory bound fail the frame.
fn resolve_extent(
    state: &mut State<EvmContext>,
    expr: &Expr,
    what: &str,
) -> Result<u64, StepOutcome> {
    let v = match resolve(state, expr, Policy::One, what) {
        Resolved::Known(v) => v,
        Resolved::Out(out) => return Err(out),
    };
    match v.to_u64() {
        Some(n) if n < MEMORY_BOUND => Ok(n),
        _ => {
            state.log(format!("{what} {v:#x} exceeds the memory bound"));
            Err(frame_failure(state, TerminateReason::InvalidInstruction))
        }
    }
}

macro_rules! extent {
    ($state:expr, $expr:expr, $what:expr) => {
        match resolve_extent($state, $expr, $what) {
            Ok(v) => v,
            Err(out) => return out,
        }
    };
}

/// Deduct `cost`, failing the frame with OutOfGas if it cannot pay. Called
/// after all concretization points so a re-attempted instruction is charged
/// exactly once.
fn charge(state: &mut State<EvmContext>, cost: u64) -> Option<StepOutcome> {
    if state.context.gas_remaining < cost {
        state.log("gas exhausted".to_string());
        return Some(frame_failure(state, TerminateReason::OutOfGas));
    }
    state.context.gas_remaining -= cost;
    None
}

macro_rules! pay {
    ($state:expr, $cost:expr) => {
        if let Some(out) = charge($state, $cost) {
            return out;
        }
    };
}

fn top_frame(state: &State<EvmContext>) -> &Frame {
    state.context.frames.last().expect("active frame")
}

fn top_frame_mut(state: &mut State<EvmContext>) -> &mut Frame {
    state.context.frames.last_mut().expect("active frame")
}

/// Stack item `k` positions below the top, cloned (expressions are cheap
/// reference-counted handles). Arity was checked before dispatch.
fn peek(state: &State<EvmContext>, k: usize) -> Expr {
    let stack = &top_frame(state).stack;
    stack[stack.len() - 1 - k].clone()
}

/// Pop `pops` items, optionally push a result, and advance the program
/// counter past an instruction of encoded length `len`.
fn finish_op(state: &mut State<EvmContext>, pops: usize, push: Option<Expr>, len: usize) {
    let frame = top_frame_mut(state);
    let depth = frame.stack.len();
    frame.stack.truncate(depth - pops);
    if let Some(e) = push {
        frame.stack.push(e);
    }
    frame.pc += len as u32;
}

fn touch(frame: &mut Frame, offset: u64, size: u64) {
    if size == 0 {
        return;
    }
    let end = (offset + size).div_ceil(32) * 32;
    frame.msize = frame.msize.max(end);
}

fn mem_read_bytes(memory: &Expr, offset: u64, size: u64) -> Vec<Expr> {
    (0..size)
        .map(|i| simplify(&memory.select(&word(offset + i))))
        .collect()
}

fn mem_write_bytes(frame: &mut Frame, offset: u64, bytes: &[Expr]) {
    let mut memory = frame.memory.clone();
    for (i, b) in bytes.iter().enumerate() {
        memory = memory.store(&word(offset + i as u64), b);
    }
    frame.memory = simplify(&memory);
    touch(frame, offset, bytes.len() as u64);
}

/// Big-endian word from 32 byte expressions.
fn word_from_bytes(bytes: &[Expr]) -> Expr {
    let mut it = bytes.iter();
    let mut acc = it.next().expect("at least one byte").clone();
    for b in it {
        acc = acc.concat(b);
    }
    simplify(&acc)
}

/// 32 byte expressions from a word, most significant first.
fn word_to_bytes(value: &Expr) -> Vec<Expr> {
    (0..32)
        .map(|i| simplify(&value.extract(255 - 8 * i, 248 - 8 * i)))
        .collect()
}

/// Terminate the state without producing a test case. Reserved for internal
/// invariant breaks that have no machine-level meaning.
fn give_up(state: &mut State<EvmContext>, why: String) -> StepOutcome {
    state.log(why);
    StepOutcome::Terminate(TerminateReason::Abandoned)
}

fn step(state: &mut State<EvmContext>) -> StepOutcome {
    state.context.last_arith = None;
    if state.context.frames.is_empty() {
        return apply_transaction(state);
    }
    exec_instruction(state)
}

/// Fund and start the next symbolic transaction: declare `txvalue_<n>` and
/// `txdata_<n>_<i>`, bound the value by the caller's balance, transfer it,
/// snapshot the world, and open the transaction frame at code offset 0.
fn apply_transaction(state: &mut State<EvmContext>) -> StepOutcome {
    let n = state.context.world.tx_count;
    let caller = state.context.caller;
    let target = state.context.target;
    let size = state.context.setup.txdatasize;

    let value = match state.declare_input(format!("txvalue_{n}"), Sort::BitVec(WORD), "txvalue") {
        Ok(e) => e,
        Err(e) => return give_up(state, format!("declaring transaction value failed: {e}")),
    };
    let mut data = Vec::with_capacity(size as usize);
    for i in 0..size {
        match state.declare_input(format!("txdata_{n}_{i}"), Sort::BitVec(8), "txdata") {
            Ok(e) => data.push(e),
            Err(e) => return give_up(state, format!("declaring transaction data failed: {e}")),
        }
    }

    let Some(caller_balance) = state.context.world.account(caller).map(|a| a.balance.clone())
    else {
        return give_up(state, format!("transaction caller {caller:#x} does not exist"));
    };
    if state.context.world.account(target).is_none() {
        return give_up(state, format!("transaction target {target:#x} does not exist"));
    }
    if let Err(e) = state.constrain(value.ule(&caller_balance)) {
        return give_up(state, format!("constraining transaction value failed: {e}"));
    }

    let ctx = &mut state.context;
    let payer = ctx.world.account_mut(caller).expect("caller checked above");
    payer.balance = simplify(&payer.balance.sub(&value));
    let payee = ctx.world.account_mut(target).expect("target checked above");
    payee.balance = simplify(&payee.balance.add(&value));
    ctx.world.tx_count += 1;

    let snapshot = ctx.world.clone();
    ctx.frames.push(Frame {
        address: target,
        caller,
        pc: 0,
        stack: Vec::new(),
        memory: zero_memory(),
        msize: 0,
        calldata: data.clone(),
        callvalue: value.clone(),
        snapshot,
        ret_slot: None,
    });
    ctx.txs.push(Transaction {
        caller,
        target,
        value,
        data,
        kind: TxKind::Symbolic,
    });
    ctx.gas_remaining = ctx.setup.gas_budget;
    ctx.last_return = Vec::new();

    state.log(format!(
        "symbolic transaction {n}: {size} data bytes to contract {target:#x}"
    ));
    state.emit(Event::transaction_applied(pack_location(target, 0), n));
    StepOutcome::Continue
}

/// Close the active frame successfully. At transaction depth the world
/// commits; within a call the parent receives return data and a 1.
fn frame_return(state: &mut State<EvmContext>, ret: Vec<Expr>) -> StepOutcome {
    let ctx = &mut state.context;
    let frame = ctx.frames.pop().expect("frame to return from");
    if ctx.frames.is_empty() {
        // Keep the transaction's return data visible on the finished state;
        // the next transaction (if any) starts with an empty buffer.
        ctx.last_return = ret;
        if ctx.world.tx_count < ctx.setup.txlimit {
            return StepOutcome::Continue;
        }
        return StepOutcome::Terminate(TerminateReason::Exit(0));
    }
    let (ret_off, ret_max) = frame.ret_slot.unwrap_or((0, 0));
    let parent = ctx.frames.last_mut().expect("parent frame");
    let copied = ret.len().min(ret_max as usize);
    if copied > 0 {
        let mut memory = parent.memory.clone();
        for (i, b) in ret.iter().take(copied).enumerate() {
            memory = memory.store(&word(ret_off + i as u64), b);
        }
        parent.memory = simplify(&memory);
        touch(parent, ret_off, copied as u64);
    }
    parent.stack.push(word(1));
    ctx.last_return = ret;
    StepOutcome::Continue
}

/// Close the active frame on Revert/OutOfGas/InvalidInstruction: restore
/// its entry snapshot and either terminate the state (transaction depth) or
/// hand the parent a 0.
fn frame_failure(state: &mut State<EvmContext>, reason: TerminateReason) -> StepOutcome {
    let ctx = &mut state.context;
    let frame = ctx.frames.pop().expect("failing frame");
    ctx.world = frame.snapshot;
    if ctx.frames.is_empty() {
        return StepOutcome::Terminate(reason);
    }
    let parent = ctx.frames.last_mut().expect("parent frame");
    parent.stack.push(word(0));
    ctx.last_return = Vec::new();
    StepOutcome::Continue
}

fn exec_instruction(state: &mut State<EvmContext>) -> StepOutcome {
    let (address, pc, code) = {
        let frame = top_frame(state);
        let code = state
            .context
            .world
            .account(frame.address)
            .map(|a| a.code.clone());
        (frame.address, frame.pc, code)
    };
    let Some(code) = code else {
        return give_up(state, format!("executing account {address:#x} vanished"));
    };

    // Running off the end of the code halts cleanly, like a trailing STOP;
    // this is also what entering an empty-code account does.
    if pc as usize >= code.len() {
        return frame_return(state, Vec::new());
    }

    let Some(op) = Op::decode(code[pc as usize]) else {
        state.log(format!(
            "invalid opcode {:#04x} at {address:#x}:{pc}",
            code[pc as usize]
        ));
        return frame_failure(state, TerminateReason::InvalidInstruction);
    };

    let (pops, pushes) = op.stack_effect();
    let depth = top_frame(state).stack.len();
    if depth < pops {
        state.log(format!("stack underflow at {address:#x}:{pc}"));
        return frame_failure(state, TerminateReason::InvalidInstruction);
    }
    if depth - pops + pushes > STACK_LIMIT {
        state.log(format!("stack overflow at {address:#x}:{pc}"));
        return frame_failure(state, TerminateReason::InvalidInstruction);
    }

    exec_op(state, op, address, pc, &code)
}

fn exec_op(
    state: &mut State<EvmContext>,
    op: Op,
    address: u64,
    pc: u32,
    code: &[u8],
) -> StepOutcome {
    let len = op.len();
    match op {
        Op::Stop => {
            pay!(state, op.base_gas());
            frame_return(state, Vec::new())
        }

        Op::Add
        | Op::Mul
        | Op::Sub
        | Op::Div
        | Op::Sdiv
        | Op::Mod
        | Op::Smod
        | Op::Lt
        | Op::Gt
        | Op::Slt
        | Op::Sgt
        | Op::Eq
        | Op::And
        | Op::Or
        | Op::Xor
        | Op::Byte
        | Op::Shl
        | Op::Shr
        | Op::Sar => {
            pay!(state, op.base_gas());
            let a = peek(state, 0);
            let b = peek(state, 1);
            let r = simplify(&binary_result(op, &a, &b));
            if let Some(kind) = match op {
                Op::Add => Some(ArithKind::Add),
                Op::Mul => Some(ArithKind::Mul),
                _ => None,
            } {
                state.context.last_arith = Some(ArithRecord {
                    kind,
                    lhs: a,
                    rhs: b,
                    result: r.clone(),
                    address,
                    pc,
                });
            }
            finish_op(state, 2, Some(r), len);
            StepOutcome::Continue
        }

        Op::IsZero => {
            pay!(state, op.base_gas());
            let a = peek(state, 0);
            let r = simplify(&bool_word(&a.eq(&Expr::zero(WORD))));
            finish_op(state, 1, Some(r), len);
            StepOutcome::Continue
        }

        Op::Not => {
            pay!(state, op.base_gas());
            let a = peek(state, 0);
            let r = simplify(&a.bvnot());
            finish_op(state, 1, Some(r), len);
            StepOutcome::Continue
        }

        Op::Sha3 => {
            let off_e = peek(state, 0);
            let size_e = peek(state, 1);
            let off = extent!(state, &off_e, "hash offset");
            let size = extent!(state, &size_e, "hash length");
            if off + size >= MEMORY_BOUND {
                state.log("hashed slice exceeds the memory bound".to_string());
                return frame_failure(state, TerminateReason::InvalidInstruction);
            }
            let cost = 30 + 6 * size.div_ceil(32);
            if state.context.gas_remaining < cost {
                state.log("gas exhausted".to_string());
                return frame_failure(state, TerminateReason::OutOfGas);
            }

            let memory = top_frame(state).memory.clone();
            let bytes = mem_read_bytes(&memory, off, size);
            let preimage = match concrete_bytes(&bytes) {
                Some(p) => p,
                None => {
                    let packed = pack_bytes(&bytes);
                    let v = need!(state, &packed, Policy::One, "hashed memory slice");
                    unpack_value(&v, size as usize)
                }
            };
            let digest = keccak256(&preimage);

            // Recorded pairs must stay injective: a second preimage mapping
            // to an already-recorded digest would be a genuine Keccak
            // collision, and a path claiming one is infeasible.
            let consistent = state
                .context
                .world
                .sha3_pairs
                .iter()
                .all(|(p, d)| (p == &preimage) == (d == &digest));
            if !consistent {
                state.log("sha3 pair consistency violated".to_string());
                if state.constrain(Expr::false_()).is_err() {
                    return give_up(state, "recording sha3 contradiction failed".to_string());
                }
            }
            let known = state
                .context
                .world
                .sha3_pairs
                .iter()
                .any(|(p, _)| p == &preimage);
            if !known {
                state
                    .context
                    .world
                    .sha3_pairs
                    .push((preimage, digest));
            }

            pay!(state, cost);
            touch(top_frame_mut(state), off, size);
            let r = word_big(BigUint::from_bytes_be(&digest));
            finish_op(state, 2, Some(r), len);
            StepOutcome::Continue
        }

        Op::Address => {
            pay!(state, op.base_gas());
            finish_op(state, 0, Some(word(address)), len);
            StepOutcome::Continue
        }

        Op::Balance => {
            let a = peek(state, 0);
            let masked = simplify(&a.bvand(&address_mask()));
            let v = need!(state, &masked, Policy::One, "balance address");
            pay!(state, op.base_gas());
            let balance = v
                .to_u64()
                .and_then(|addr| state.context.world.account(addr))
                .map(|acct| acct.balance.clone())
                .unwrap_or_else(|| Expr::zero(WORD));
            finish_op(state, 1, Some(balance), len);
            StepOutcome::Continue
        }

        Op::Caller => {
            pay!(state, op.base_gas());
            let caller = top_frame(state).caller;
            finish_op(state, 0, Some(word(caller)), len);
            StepOutcome::Continue
        }

        Op::CallValue => {
            pay!(state, op.base_gas());
            let value = top_frame(state).callvalue.clone();
            finish_op(state, 0, Some(value), len);
            StepOutcome::Continue
        }

        Op::CallDataLoad => {
            let idx_e = peek(state, 0);
            let idx = need!(state, &idx_e, Policy::One, "calldata index");
            pay!(state, op.base_gas());
            let frame = top_frame(state);
            let bytes: Vec<Expr> = (0..32u64)
                .map(|k| {
                    idx.to_u64()
                        .and_then(|i| i.checked_add(k))
                        .and_then(|j| frame.calldata.get(j as usize))
                        .cloned()
                        .unwrap_or_else(|| byte(0))
                })
                .collect();
            let r = word_from_bytes(&bytes);
            finish_op(state, 1, Some(r), len);
            StepOutcome::Continue
        }

        Op::CallDataSize => {
            pay!(state, op.base_gas());
            let n = top_frame(state).calldata.len() as u64;
            finish_op(state, 0, Some(word(n)), len);
            StepOutcome::Continue
        }

        Op::CallDataCopy | Op::CodeCopy | Op::ReturnDataCopy => {
            let dst_e = peek(state, 0);
            let src_e = peek(state, 1);
            let len_e = peek(state, 2);
            let dst = extent!(state, &dst_e, "memory offset");
            let src = need!(state, &src_e, Policy::One, "source offset");
            let count = extent!(state, &len_e, "copy length");
            if dst + count >= MEMORY_BOUND {
                state.log("copy exceeds the memory bound".to_string());
                return frame_failure(state, TerminateReason::InvalidInstruction);
            }
            pay!(state, op.base_gas());
            let frame = top_frame(state);
            let bytes: Vec<Expr> = (0..count)
                .map(|k| {
                    let j = src.to_u64().and_then(|s| s.checked_add(k));
                    match op {
                        Op::CallDataCopy => j
                            .and_then(|j| frame.calldata.get(j as usize))
                            .cloned(),
                        Op::ReturnDataCopy => j
                            .and_then(|j| state.context.last_return.get(j as usize))
                            .cloned(),
                        _ => j
                            .and_then(|j| code.get(j as usize))
                            .map(|b| byte(*b)),
                    }
                    .unwrap_or_else(|| byte(0))
                })
                .collect();
            mem_write_bytes(top_frame_mut(state), dst, &bytes);
            finish_op(state, 3, None, len);
            StepOutcome::Continue
        }

        Op::CodeSize => {
            pay!(state, op.base_gas());
            finish_op(state, 0, Some(word(code.len() as u64)), len);
            StepOutcome::Continue
        }

        Op::ReturnDataSize => {
            pay!(state, op.base_gas());
            let n = state.context.last_return.len() as u64;
            finish_op(state, 0, Some(word(n)), len);
            StepOutcome::Continue
        }

        Op::Pop => {
            pay!(state, op.base_gas());
            finish_op(state, 1, None, len);
            StepOutcome::Continue
        }

        Op::Mload => {
            let off_e = peek(state, 0);
            let off = extent!(state, &off_e, "memory offset");
            pay!(state, op.base_gas());
            let frame = top_frame_mut(state);
            let bytes = mem_read_bytes(&frame.memory, off, 32);
            touch(frame, off, 32);
            let r = word_from_bytes(&bytes);
            finish_op(state, 1, Some(r), len);
            StepOutcome::Continue
        }

        Op::Mstore => {
            let off_e = peek(state, 0);
            let off = extent!(state, &off_e, "memory offset");
            pay!(state, op.base_gas());
            let value = peek(state, 1);
            let bytes = word_to_bytes(&value);
            mem_write_bytes(top_frame_mut(state), off, &bytes);
            finish_op(state, 2, None, len);
            StepOutcome::Continue
        }

        Op::Mstore8 => {
            let off_e = peek(state, 0);
            let off = extent!(state, &off_e, "memory offset");
            pay!(state, op.base_gas());
            let value = peek(state, 1);
            let low = simplify(&value.extract(7, 0));
            mem_write_bytes(top_frame_mut(state), off, &[low]);
            finish_op(state, 2, None, len);
            StepOutcome::Continue
        }

        Op::Sload => {
            pay!(state, op.base_gas());
            let key = peek(state, 0);
            let storage = state
                .context
                .world
                .account(address)
                .expect("executing account exists")
                .storage
                .clone();
            let r = simplify(&storage.select(&key));
            finish_op(state, 1, Some(r), len);
            StepOutcome::Continue
        }

        Op::Sstore => {
            pay!(state, op.base_gas());
            let key = peek(state, 0);
            let value = peek(state, 1);
            let acct = state
                .context
                .world
                .account_mut(address)
                .expect("executing account exists");
            acct.storage = simplify(&acct.storage.store(&key, &value));
            finish_op(state, 2, None, len);
            StepOutcome::Continue
        }

        Op::Jump => {
            let dest_e = peek(state, 0);
            let dest = match resolve_jump_target(state, &dest_e, code) {
                Ok(d) => d,
                Err(out) => return out,
            };
            pay!(state, op.base_gas());
            let frame = top_frame_mut(state);
            frame.stack.pop();
            frame.pc = dest;
            StepOutcome::Continue
        }

        Op::Jumpi => {
            let dest_e = peek(state, 0);
            let cond = peek(state, 1);
            let taken = match resolve_truth(state, &cond) {
                Ok(t) => t,
                Err(out) => return out,
            };
            if taken {
                let dest = match resolve_jump_target(state, &dest_e, code) {
                    Ok(d) => d,
                    Err(out) => return out,
                };
                pay!(state, op.base_gas());
                let frame = top_frame_mut(state);
                frame.stack.truncate(frame.stack.len() - 2);
                frame.pc = dest;
            } else {
                pay!(state, op.base_gas());
                finish_op(state, 2, None, len);
            }
            StepOutcome::Continue
        }

        Op::Pc => {
            pay!(state, op.base_gas());
            finish_op(state, 0, Some(word(u64::from(pc))), len);
            StepOutcome::Continue
        }

        Op::Msize => {
            pay!(state, op.base_gas());
            let msize = top_frame(state).msize;
            finish_op(state, 0, Some(word(msize)), len);
            StepOutcome::Continue
        }

        Op::Gas => {
            pay!(state, op.base_gas());
            let gas = state.context.gas_remaining;
            finish_op(state, 0, Some(word(gas)), len);
            StepOutcome::Continue
        }

        Op::Jumpdest => {
            pay!(state, op.base_gas());
            finish_op(state, 0, None, len);
            StepOutcome::Continue
        }

        Op::Push(n) => {
            pay!(state, op.base_gas());
            let start = pc as usize + 1;
            let end = (start + n as usize).min(code.len());
            let avail = &code[start.min(code.len())..end];
            let mut v = BigUint::from_bytes_be(avail);
            // Immediates cut off by the end of the code read as zeros.
            v <<= 8 * (n as usize - avail.len());
            finish_op(state, 0, Some(word_big(v)), len);
            StepOutcome::Continue
        }

        Op::Dup(n) => {
            pay!(state, op.base_gas());
            let v = peek(state, n as usize - 1);
            finish_op(state, 0, Some(v), len);
            StepOutcome::Continue
        }

        Op::Swap(n) => {
            pay!(state, op.base_gas());
            let frame = top_frame_mut(state);
            let depth = frame.stack.len();
            frame.stack.swap(depth - 1, depth - 1 - n as usize);
            frame.pc += len as u32;
            StepOutcome::Continue
        }

        Op::Return | Op::Revert => {
            let off_e = peek(state, 0);
            let size_e = peek(state, 1);
            let off = extent!(state, &off_e, "return offset");
            let size = extent!(state, &size_e, "return length");
            if off + size >= MEMORY_BOUND {
                state.log("return data exceeds the memory bound".to_string());
                return frame_failure(state, TerminateReason::InvalidInstruction);
            }
            pay!(state, op.base_gas());
            if op == Op::Return {
                let memory = top_frame(state).memory.clone();
                let data = mem_read_bytes(&memory, off, size);
                frame_return(state, data)
            } else {
                frame_failure(state, TerminateReason::Revert)
            }
        }

        Op::Call => exec_call(state, address, code),
    }
}

fn binary_result(op: Op, a: &Expr, b: &Expr) -> Expr {
    let zero = Expr::zero(WORD);
    match op {
        Op::Add => a.add(b),
        Op::Mul => a.mul(b),
        Op::Sub => a.sub(b),
        // Division and remainder by zero yield zero, encoded directly in
        // the expression rather than by forking.
        Op::Div => b.eq(&zero).ite(&zero, &a.udiv(b)),
        Op::Sdiv => b.eq(&zero).ite(&zero, &a.sdiv(b)),
        Op::Mod => b.eq(&zero).ite(&zero, &a.urem(b)),
        Op::Smod => b.eq(&zero).ite(&zero, &a.srem(b)),
        Op::Lt => bool_word(&a.ult(b)),
        Op::Gt => bool_word(&b.ult(a)),
        Op::Slt => bool_word(&a.slt(b)),
        Op::Sgt => bool_word(&b.slt(a)),
        Op::Eq => bool_word(&a.eq(b)),
        Op::And => a.bvand(b),
        Op::Or => a.bvor(b),
        Op::Xor => a.bvxor(b),
        Op::Byte => {
            // a indexes the word's bytes from the most significant end.
            let shift = word(248).sub(&a.mul(&word(8)));
            let picked = b.lshr(&shift).bvand(&word(0xff));
            a.ult(&word(32)).ite(&picked, &zero)
        }
        Op::Shl => b.shl(a),
        Op::Shr => b.lshr(a),
        Op::Sar => b.ashr(a),
        _ => unreachable!("not a binary operator"),
    }
}

/// Resolve and validate a jump destination. Symbolic destinations enumerate
/// under ALL, capped by how many JUMPDESTs the code has; anything that is
/// not a JUMPDEST fails the frame.
fn resolve_jump_target(
    state: &mut State<EvmContext>,
    dest: &Expr,
    code: &[u8],
) -> Result<u32, StepOutcome> {
    let dests = jumpdests(code);
    let policy = Policy::All {
        cap: dests.len().max(1),
    };
    let v = match resolve(state, dest, policy, "jump target") {
        Resolved::Known(v) => v,
        Resolved::Out(out) => return Err(out),
    };
    match v.to_u64() {
        Some(d) if d <= u64::from(u32::MAX) && dests.contains(&(d as u32)) => Ok(d as u32),
        _ => {
            state.log(format!("jump to {v:#x} which is not a JUMPDEST"));
            Err(frame_failure(state, TerminateReason::InvalidInstruction))
        }
    }
}

fn concrete_bytes(bytes: &[Expr]) -> Option<Vec<u8>> {
    bytes
        .iter()
        .map(|b| b.as_bv_const().map(low_byte))
        .collect()
}

fn low_byte(v: &BigUint) -> u8 {
    v.to_bytes_le().first().copied().unwrap_or(0)
}

/// Big-endian packing of byte expressions into one wide expression, so a
/// single concretization pins the whole slice.
fn pack_bytes(bytes: &[Expr]) -> Expr {
    let mut it = bytes.iter();
    let mut acc = it.next().expect("non-empty slice").clone();
    for b in it {
        acc = acc.concat(b);
    }
    simplify(&acc)
}

/// Split a packed value back into `size` bytes, most significant first.
fn unpack_value(v: &BigUint, size: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; size];
    let start = size - raw.len().min(size);
    out[start..].copy_from_slice(&raw[raw.len() - (size - start)..]);
    out
}

fn exec_call(state: &mut State<EvmContext>, address: u64, _code: &[u8]) -> StepOutcome {
    // Stack: gas (ignored; one budget per transaction), target, value,
    // argsOffset, argsSize, retOffset, retSize.
    let target_e = peek(state, 1);
    let value = peek(state, 2);
    let args_off_e = peek(state, 3);
    let args_size_e = peek(state, 4);
    let ret_off_e = peek(state, 5);
    let ret_size_e = peek(state, 6);

    let masked = simplify(&target_e.bvand(&address_mask()));
    let account_count = state.context.world.accounts.len().max(1);
    let target_v = need!(
        state,
        &masked,
        Policy::All {
            cap: account_count
        },
        "call target"
    );
    let args_off = extent!(state, &args_off_e, "call data offset");
    let args_size = extent!(state, &args_size_e, "call data length");
    let ret_off = extent!(state, &ret_off_e, "return buffer offset");
    let ret_size = extent!(state, &ret_size_e, "return buffer length");
    if args_off + args_size >= MEMORY_BOUND || ret_off + ret_size >= MEMORY_BOUND {
        state.log("call buffers exceed the memory bound".to_string());
        return frame_failure(state, TerminateReason::InvalidInstruction);
    }

    let caller_balance = state
        .context
        .world
        .account(address)
        .expect("executing account exists")
        .balance
        .clone();
    let sufficient = match resolve_bool(state, simplify(&value.ule(&caller_balance))) {
        Ok(b) => b,
        Err(out) => return out,
    };

    pay!(state, Op::Call.base_gas());

    let callee = target_v.to_u64().filter(|a| state.context.world.account(*a).is_some());

    if state.context.frames.len() > CALL_DEPTH_LIMIT {
        state.log("call depth limit reached".to_string());
        finish_op(state, 7, Some(word(0)), 1);
        return StepOutcome::Continue;
    }
    let Some(callee) = callee else {
        state.log(format!("call to unknown account {target_v:#x}"));
        finish_op(state, 7, Some(word(0)), 1);
        return StepOutcome::Continue;
    };
    if !sufficient {
        state.log("call value exceeds the caller's balance".to_string());
        finish_op(state, 7, Some(word(0)), 1);
        return StepOutcome::Continue;
    }

    // Commit: snapshot the pre-transfer world so a failing callee refunds
    // the value, move the funds, and read the argument bytes.
    let snapshot = state.context.world.clone();
    {
        let ctx = &mut state.context;
        let payer = ctx.world.account_mut(address).expect("caller exists");
        payer.balance = simplify(&payer.balance.sub(&value));
        let payee = ctx.world.account_mut(callee).expect("callee exists");
        payee.balance = simplify(&payee.balance.add(&value));
    }

    let (calldata, callee_code) = {
        let frame = top_frame_mut(state);
        let data = mem_read_bytes(&frame.memory, args_off, args_size);
        touch(frame, args_off, args_size);
        let code = state
            .context
            .world
            .account(callee)
            .expect("callee exists")
            .code
            .clone();
        (data, code)
    };

    if callee_code.is_empty() {
        state.context.last_return = Vec::new();
        finish_op(state, 7, Some(word(1)), 1);
        return StepOutcome::Continue;
    }

    // Consume the CALL in the parent, then open the callee frame; the
    // success flag arrives when the callee finishes.
    finish_op(state, 7, None, 1);
    state.context.frames.push(Frame {
        address: callee,
        caller: address,
        pc: 0,
        stack: Vec::new(),
        memory: zero_memory(),
        msize: 0,
        calldata,
        callvalue: value,
        snapshot,
        ret_slot: Some((ret_off, ret_size)),
    });
    StepOutcome::Continue
}

/// Render the transaction history into the `.input` test-case file: one
/// block per transaction with caller, target, value, and calldata in hex.
fn render_files(state: &State<EvmContext>, model: &Model) -> Vec<(String, Vec<u8>)> {
    let mut text = String::new();
    for (i, tx) in state.context.txs.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        text.push_str(&format!("tx {i}\n"));
        text.push_str(&format!("caller 0x{:040x}\n", tx.caller));
        text.push_str(&format!("target 0x{:040x}\n", tx.target));
        text.push_str(&format!("value 0x{:064x}\n", eval_bits(&tx.value, model)));
        let data: String = tx
            .data
            .iter()
            .map(|b| format!("{:02x}", low_byte(&eval_bits(b, model))))
            .collect();
        text.push_str(&format!("data {data}\n"));
    }
    vec![("input".to_string(), text.into_bytes())]
}

fn eval_bits(expr: &Expr, model: &Model) -> BigUint {
    match eval(expr, model) {
        Value::Bits { value, .. } => value,
        _ => BigUint::from(0u8),
    }
}
