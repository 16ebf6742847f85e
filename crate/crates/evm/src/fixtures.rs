//! Hand-assembled bytecode fixtures exercised by the integration tests and
//! the end-to-end acceptance checks, plus the tiny assembler that builds
//! them.

use crate::opcode::Op;
use std::collections::BTreeMap;

/// A minimal assembler: chain opcodes, immediates, and labels, then
/// `assemble`. Labels emit a JUMPDEST and are referenced with a one-byte
/// PUSH, so programs must stay under 256 bytes.
#[derive(Default)]
pub struct EvmAsm {
    code: Vec<u8>,
    labels: BTreeMap<String, u8>,
    patches: Vec<(usize, String)>,
}

impl EvmAsm {
    pub fn new() -> EvmAsm {
        EvmAsm::default()
    }

    pub fn op(mut self, op: Op) -> Self {
        self.code.push(op.encode());
        self
    }

    /// PUSHn for an n-byte immediate.
    pub fn push(mut self, bytes: &[u8]) -> Self {
        assert!(!bytes.is_empty() && bytes.len() <= 32, "push width");
        self.code.push(Op::Push(bytes.len() as u8).encode());
        self.code.extend_from_slice(bytes);
        self
    }

    pub fn push1(self, value: u8) -> Self {
        self.push(&[value])
    }

    /// PUSH1 whose immediate is patched to the label's offset.
    pub fn push_label(mut self, name: &str) -> Self {
        self.code.push(Op::Push(1).encode());
        self.patches.push((self.code.len(), name.to_string()));
        self.code.push(0);
        self
    }

    /// Bind `name` here and emit the JUMPDEST it points at.
    pub fn label(mut self, name: &str) -> Self {
        let offset = self.code.len();
        assert!(offset <= u8::MAX as usize, "program too large for one-byte labels");
        let previous = self.labels.insert(name.to_string(), offset as u8);
        assert!(previous.is_none(), "label {name:?} defined twice");
        self.op(Op::Jumpdest)
    }

    /// Emit a raw byte, useful for deliberately invalid opcodes.
    pub fn raw(mut self, byte: u8) -> Self {
        self.code.push(byte);
        self
    }

    pub fn assemble(mut self) -> Vec<u8> {
        for (position, name) in &self.patches {
            let offset = *self
                .labels
                .get(name)
                .unwrap_or_else(|| panic!("label {name:?} never defined"));
            self.code[*position] = offset;
        }
        self.code
    }
}

pub const DISPATCH_SELECTOR_A: u32 = 0xaabb_ccdd;
pub const DISPATCH_SELECTOR_B: u32 = 0x1122_3344;

/// Selector dispatcher: calldata starting with `DISPATCH_SELECTOR_A` stores
/// 0x2a at storage key 0 and stops, `DISPATCH_SELECTOR_B` stores 7 at key 1
/// and stops, and anything else reverts.
pub fn dispatch() -> Vec<u8> {
    EvmAsm::new()
        .push1(0)
        .op(Op::CallDataLoad)
        .push1(0xe0)
        .op(Op::Shr)
        .op(Op::Dup(1))
        .push(&DISPATCH_SELECTOR_A.to_be_bytes())
        .op(Op::Eq)
        .push_label("set_a")
        .op(Op::Jumpi)
        .op(Op::Dup(1))
        .push(&DISPATCH_SELECTOR_B.to_be_bytes())
        .op(Op::Eq)
        .push_label("set_b")
        .op(Op::Jumpi)
        .push1(0)
        .push1(0)
        .op(Op::Revert)
        .label("set_a")
        .push1(0x2a)
        .push1(0)
        .op(Op::Sstore)
        .op(Op::Stop)
        .label("set_b")
        .push1(7)
        .push1(1)
        .op(Op::Sstore)
        .op(Op::Stop)
        .assemble()
}

/// Writes 0xaa to storage key 0 on both arms of a calldata-driven branch,
/// then reverts on one arm and stops on the other. Exercises rollback.
pub fn store_then_revert() -> Vec<u8> {
    EvmAsm::new()
        .push1(0)
        .op(Op::CallDataLoad)
        .push_label("commit")
        .op(Op::Jumpi)
        .push1(0xaa)
        .push1(0)
        .op(Op::Sstore)
        .push1(0)
        .push1(0)
        .op(Op::Revert)
        .label("commit")
        .push1(0xaa)
        .push1(0)
        .op(Op::Sstore)
        .op(Op::Stop)
        .assemble()
}

/// Adds the first two calldata words and stores the sum at key 0. The ADD
/// can wrap, so the overflow detector fires exactly once.
pub fn add_overflow() -> Vec<u8> {
    EvmAsm::new()
        .push1(0)
        .op(Op::CallDataLoad)
        .push1(32)
        .op(Op::CallDataLoad)
        .op(Op::Add)
        .push1(0)
        .op(Op::Sstore)
        .op(Op::Stop)
        .assemble()
}

/// Increments storage key 0 by one per transaction.
pub fn counter() -> Vec<u8> {
    EvmAsm::new()
        .push1(0)
        .op(Op::Sload)
        .push1(1)
        .op(Op::Add)
        .push1(0)
        .op(Op::Sstore)
        .op(Op::Stop)
        .assemble()
}

/// Jumps to `table + (calldata word & 7)`: eight consecutive JUMPDESTs, so
/// a symbolic jump target enumerates exactly eight destinations.
pub fn jump_spread() -> Vec<u8> {
    let mut asm = EvmAsm::new()
        .push1(0)
        .op(Op::CallDataLoad)
        .push1(0x07)
        .op(Op::And)
        .push_label("table")
        .op(Op::Add)
        .op(Op::Jump)
        .label("table");
    for _ in 0..7 {
        asm = asm.op(Op::Jumpdest);
    }
    asm.op(Op::Stop).assemble()
}
