//! Fixed 8-byte instruction set of the register machine: byte 0 opcode,
//! bytes 1-3 register indices (rd, rs1, rs2), bytes 4-7 little-endian
//! immediate. Eight general registers R0..R7.

pub const INSTRUCTION_SIZE: u32 = 8;
pub const NUM_REGISTERS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Opcode {
    Halt,
    Loadi,
    Mov,
    Add,
    Sub,
    Mul,
    Xor,
    And,
    Or,
    Shl,
    Shr,
    Load,
    Store,
    Jmp,
    Jz,
    Jnz,
    Ltu,
    Syscall,
}

impl Opcode {
    pub fn from_byte(byte: u8) -> Option<Opcode> {
        Some(match byte {
            0x00 => Opcode::Halt,
            0x01 => Opcode::Loadi,
            0x02 => Opcode::Mov,
            0x03 => Opcode::Add,
            0x04 => Opcode::Sub,
            0x05 => Opcode::Mul,
            0x06 => Opcode::Xor,
            0x07 => Opcode::And,
            0x08 => Opcode::Or,
            0x09 => Opcode::Shl,
            0x0A => Opcode::Shr,
            0x0B => Opcode::Load,
            0x0C => Opcode::Store,
            0x0D => Opcode::Jmp,
            0x0E => Opcode::Jz,
            0x0F => Opcode::Jnz,
            0x10 => Opcode::Ltu,
            0x11 => Opcode::Syscall,
            _ => return None,
        })
    }

    pub fn to_byte(self) -> u8 {
        match self {
            Opcode::Halt => 0x00,
            Opcode::Loadi => 0x01,
            Opcode::Mov => 0x02,
            Opcode::Add => 0x03,
            Opcode::Sub => 0x04,
            Opcode::Mul => 0x05,
            Opcode::Xor => 0x06,
            Opcode::And => 0x07,
            Opcode::Or => 0x08,
            Opcode::Shl => 0x09,
            Opcode::Shr => 0x0A,
            Opcode::Load => 0x0B,
            Opcode::Store => 0x0C,
            Opcode::Jmp => 0x0D,
            Opcode::Jz => 0x0E,
            Opcode::Jnz => 0x0F,
            Opcode::Ltu => 0x10,
            Opcode::Syscall => 0x11,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub opcode: Opcode,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeError {
    UnknownOpcode(u8),
    BadRegister(u8),
}

pub fn decode(bytes: &[u8; 8]) -> Result<Instruction, DecodeError> {
    let opcode = Opcode::from_byte(bytes[0]).ok_or(DecodeError::UnknownOpcode(bytes[0]))?;
    for &reg in &bytes[1..4] {
        if reg as usize >= NUM_REGISTERS {
            return Err(DecodeError::BadRegister(reg));
        }
    }
    Ok(Instruction {
        opcode,
        rd: bytes[1],
        rs1: bytes[2],
        rs2: bytes[3],
        imm: u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
    })
}

pub fn encode(instr: &Instruction) -> [u8; 8] {
    let imm = instr.imm.to_le_bytes();
    [
        instr.opcode.to_byte(),
        instr.rd,
        instr.rs1,
        instr.rs2,
        imm[0],
        imm[1],
        imm[2],
        imm[3],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_matches_encoding_table() {
        let loadi = decode(&[0x01, 0x00, 0x00, 0x00, 0x2A, 0x00, 0x00, 0x00]).unwrap();
        assert_eq!(loadi.opcode, Opcode::Loadi);
        assert_eq!(loadi.rd, 0);
        assert_eq!(loadi.imm, 42);

        let halt = decode(&[0; 8]).unwrap();
        assert_eq!(halt.opcode, Opcode::Halt);
    }

    #[test]
    fn unknown_opcode_and_bad_register_fail() {
        assert_eq!(
            decode(&[0xFF, 0, 0, 0, 0, 0, 0, 0]),
            Err(DecodeError::UnknownOpcode(0xFF))
        );
        assert_eq!(
            decode(&[0x03, 8, 0, 0, 0, 0, 0, 0]),
            Err(DecodeError::BadRegister(8))
        );
    }

    #[test]
    fn encode_then_decode_round_trips() {
        let instr = Instruction {
            opcode: Opcode::Store,
            rd: 0,
            rs1: 3,
            rs2: 7,
            imm: 0xDEAD_BEEF,
        };
        assert_eq!(decode(&encode(&instr)).unwrap(), instr);
    }
}
