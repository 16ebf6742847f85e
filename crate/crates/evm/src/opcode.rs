//! The supported EVM opcode subset: decoding, stack arity, gas pricing, and
//! the linear code sweeps used for jump validation and coverage accounting.

use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Stop,
    Add,
    Mul,
    Sub,
    Div,
    Sdiv,
    Mod,
    Smod,
    Lt,
    Gt,
    Slt,
    Sgt,
    Eq,
    IsZero,
    And,
    Or,
    Xor,
    Not,
    Byte,
    Shl,
    Shr,
    Sar,
    Sha3,
    Address,
    Balance,
    Caller,
    CallValue,
    CallDataLoad,
    CallDataSize,
    CallDataCopy,
    CodeSize,
    CodeCopy,
    ReturnDataSize,
    ReturnDataCopy,
    Pop,
    Mload,
    Mstore,
    Mstore8,
    Sload,
    Sstore,
    Jump,
    Jumpi,
    Pc,
    Msize,
    Gas,
    Jumpdest,
    /// PUSH1..PUSH32; the payload is the immediate width in bytes.
    Push(u8),
    /// DUP1..DUP16.
    Dup(u8),
    /// SWAP1..SWAP16.
    Swap(u8),
    Return,
    Revert,
    Call,
}

impl Op {
    /// Decode one opcode byte. `None` means the byte is outside the
    /// supported subset and executing it is an invalid instruction.
    pub fn decode(byte: u8) -> Option<Op> {
        Some(match byte {
            0x00 => Op::Stop,
            0x01 => Op::Add,
            0x02 => Op::Mul,
            0x03 => Op::Sub,
            0x04 => Op::Div,
            0x05 => Op::Sdiv,
            0x06 => Op::Mod,
            0x07 => Op::Smod,
            0x10 => Op::Lt,
            0x11 => Op::Gt,
            0x12 => Op::Slt,
            0x13 => Op::Sgt,
            0x14 => Op::Eq,
            0x15 => Op::IsZero,
            0x16 => Op::And,
            0x17 => Op::Or,
            0x18 => Op::Xor,
            0x19 => Op::Not,
            0x1a => Op::Byte,
            0x1b => Op::Shl,
            0x1c => Op::Shr,
            0x1d => Op::Sar,
            0x20 => Op::Sha3,
            0x30 => Op::Address,
            0x31 => Op::Balance,
            0x33 => Op::Caller,
            0x34 => Op::CallValue,
            0x35 => Op::CallDataLoad,
            0x36 => Op::CallDataSize,
            0x37 => Op::CallDataCopy,
            0x38 => Op::CodeSize,
            0x39 => Op::CodeCopy,
            0x3d => Op::ReturnDataSize,
            0x3e => Op::ReturnDataCopy,
            0x50 => Op::Pop,
            0x51 => Op::Mload,
            0x52 => Op::Mstore,
            0x53 => Op::Mstore8,
            0x54 => Op::Sload,
            0x55 => Op::Sstore,
            0x56 => Op::Jump,
            0x57 => Op::Jumpi,
            0x58 => Op::Pc,
            0x59 => Op::Msize,
            0x5a => Op::Gas,
            0x5b => Op::Jumpdest,
            0x60..=0x7f => Op::Push(byte - 0x5f),
            0x80..=0x8f => Op::Dup(byte - 0x7f),
            0x90..=0x9f => Op::Swap(byte - 0x8f),
            0xf1 => Op::Call,
            0xf3 => Op::Return,
            0xfd => Op::Revert,
            _ => return None,
        })
    }

    /// The opcode byte this instruction encodes to.
    pub fn encode(self) -> u8 {
        match self {
            Op::Stop => 0x00,
            Op::Add => 0x01,
            Op::Mul => 0x02,
            Op::Sub => 0x03,
            Op::Div => 0x04,
            Op::Sdiv => 0x05,
            Op::Mod => 0x06,
            Op::Smod => 0x07,
            Op::Lt => 0x10,
            Op::Gt => 0x11,
            Op::Slt => 0x12,
            Op::Sgt => 0x13,
            Op::Eq => 0x14,
            Op::IsZero => 0x15,
            Op::And => 0x16,
            Op::Or => 0x17,
            Op::Xor => 0x18,
            Op::Not => 0x19,
            Op::Byte => 0x1a,
            Op::Shl => 0x1b,
            Op::Shr => 0x1c,
            Op::Sar => 0x1d,
            Op::Sha3 => 0x20,
            Op::Address => 0x30,
            Op::Balance => 0x31,
            Op::Caller => 0x33,
            Op::CallValue => 0x34,
            Op::CallDataLoad => 0x35,
            Op::CallDataSize => 0x36,
            Op::CallDataCopy => 0x37,
            Op::CodeSize => 0x38,
            Op::CodeCopy => 0x39,
            Op::ReturnDataSize => 0x3d,
            Op::ReturnDataCopy => 0x3e,
            Op::Pop => 0x50,
            Op::Mload => 0x51,
            Op::Mstore => 0x52,
            Op::Mstore8 => 0x53,
            Op::Sload => 0x54,
            Op::Sstore => 0x55,
            Op::Jump => 0x56,
            Op::Jumpi => 0x57,
            Op::Pc => 0x58,
            Op::Msize => 0x59,
            Op::Gas => 0x5a,
            Op::Jumpdest => 0x5b,
            Op::Push(n) => 0x5f + n,
            Op::Dup(n) => 0x7f + n,
            Op::Swap(n) => 0x8f + n,
            Op::Return => 0xf3,
            Op::Revert => 0xfd,
            Op::Call => 0xf1,
        }
    }

    /// Encoded length in bytes, counting PUSH immediates.
    pub fn len(self) -> usize {
        match self {
            Op::Push(n) => 1 + n as usize,
            _ => 1,
        }
    }

    /// Stack items consumed and produced.
    pub fn stack_effect(self) -> (usize, usize) {
        match self {
            Op::Stop | Op::Jumpdest => (0, 0),
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
            | Op::Sar
            | Op::Sha3 => (2, 1),
            Op::IsZero | Op::Not | Op::Balance | Op::CallDataLoad | Op::Mload | Op::Sload => (1, 1),
            Op::Address
            | Op::Caller
            | Op::CallValue
            | Op::CallDataSize
            | Op::CodeSize
            | Op::ReturnDataSize
            | Op::Pc
            | Op::Msize
            | Op::Gas
            | Op::Push(_) => (0, 1),
            Op::CallDataCopy | Op::CodeCopy | Op::ReturnDataCopy => (3, 0),
            Op::Pop | Op::Jump => (1, 0),
            Op::Mstore | Op::Mstore8 | Op::Sstore | Op::Jumpi | Op::Return | Op::Revert => (2, 0),
            Op::Dup(n) => (n as usize, n as usize + 1),
            Op::Swap(n) => (n as usize + 1, n as usize + 1),
            Op::Call => (7, 1),
        }
    }

    /// Base gas cost. SHA3 additionally pays 6 per hashed 32-byte word.
    pub fn base_gas(self) -> u64 {
        match self {
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
            | Op::IsZero
            | Op::And
            | Op::Or
            | Op::Xor
            | Op::Not
            | Op::Byte
            | Op::Shl
            | Op::Shr
            | Op::Sar
            | Op::Pop
            | Op::Push(_)
            | Op::Dup(_)
            | Op::Swap(_) => 3,
            Op::Sha3 => 30,
            Op::Sload => 200,
            Op::Sstore => 5000,
            Op::Call => 700,
            _ => 1,
        }
    }
}

/// Offsets that start an instruction in a linear sweep from zero, skipping
/// PUSH immediates. Bytes outside the supported subset are stepped over but
/// not counted: they can never execute, so they are excluded from coverage
/// denominators.
pub fn instruction_offsets(code: &[u8]) -> BTreeSet<u32> {
    let mut offsets = BTreeSet::new();
    let mut pc = 0usize;
    while pc < code.len() {
        match Op::decode(code[pc]) {
            Some(op) => {
                offsets.insert(pc as u32);
                pc += op.len();
            }
            None => pc += 1,
        }
    }
    offsets
}

/// Offsets holding a JUMPDEST at an instruction boundary. A 0x5b byte inside
/// PUSH immediate data is not a valid jump target.
pub fn jumpdests(code: &[u8]) -> BTreeSet<u32> {
    let mut dests = BTreeSet::new();
    let mut pc = 0usize;
    while pc < code.len() {
        match Op::decode(code[pc]) {
            Some(Op::Jumpdest) => {
                dests.insert(pc as u32);
                pc += 1;
            }
            Some(op) => pc += op.len(),
            None => pc += 1,
        }
    }
    dests
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_covers_the_supported_subset() {
        assert_eq!(Op::decode(0x00), Some(Op::Stop));
        assert_eq!(Op::decode(0x01), Some(Op::Add));
        assert_eq!(Op::decode(0x60), Some(Op::Push(1)));
        assert_eq!(Op::decode(0x7f), Some(Op::Push(32)));
        assert_eq!(Op::decode(0x80), Some(Op::Dup(1)));
        assert_eq!(Op::decode(0x8f), Some(Op::Dup(16)));
        assert_eq!(Op::decode(0x90), Some(Op::Swap(1)));
        assert_eq!(Op::decode(0x9f), Some(Op::Swap(16)));
        assert_eq!(Op::decode(0xf1), Some(Op::Call));
        assert_eq!(Op::decode(0xfd), Some(Op::Revert));
        // Explicit non-goals stay undecodable.
        for byte in [0x08, 0x0a, 0x32, 0x3a, 0xa0, 0xf0, 0xf4, 0xfa, 0xfe, 0xff] {
            assert_eq!(Op::decode(byte), None, "byte 0x{byte:02x}");
        }
    }

    #[test]
    fn encode_inverts_decode_across_every_byte() {
        for byte in 0u8..=255 {
            if let Some(op) = Op::decode(byte) {
                assert_eq!(op.encode(), byte, "byte 0x{byte:02x}");
            }
        }
    }

    #[test]
    fn push_immediates_are_not_instruction_starts() {
        // PUSH2 0x5b5b; JUMPDEST; PUSH1 0x00; STOP
        let code = [0x61, 0x5b, 0x5b, 0x5b, 0x60, 0x00, 0x00];
        assert_eq!(
            instruction_offsets(&code).into_iter().collect::<Vec<_>>(),
            vec![0, 3, 4, 6]
        );
        assert_eq!(jumpdests(&code).into_iter().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn unsupported_bytes_are_skipped_not_counted() {
        // SELFDESTRUCT-style junk between real instructions.
        let code = [0x00, 0xff, 0x5b, 0xfe, 0x60, 0x07];
        assert_eq!(
            instruction_offsets(&code).into_iter().collect::<Vec<_>>(),
            vec![0, 2, 4]
        );
        assert_eq!(jumpdests(&code).into_iter().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn truncated_push_still_terminates_the_sweep() {
        let code = [0x7f, 0x01, 0x02];
        assert_eq!(
            instruction_offsets(&code).into_iter().collect::<Vec<_>>(),
            vec![0]
        );
    }
}
