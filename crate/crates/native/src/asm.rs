//! Small label-aware assembler used to build program images in tests and
//! fixtures. Jump targets are labels resolved to absolute addresses at
//! assembly time.

use crate::isa::{encode, Instruction, Opcode, INSTRUCTION_SIZE};
use crate::memory::CODE_BASE;
use std::collections::HashMap;

#[derive(Clone)]
enum Imm {
    Value(u32),
    Label(String),
}

#[derive(Clone)]
struct Pending {
    opcode: Opcode,
    rd: u8,
    rs1: u8,
    rs2: u8,
    imm: Imm,
}

#[derive(Default)]
pub struct Asm {
    instrs: Vec<Pending>,
    labels: HashMap<String, u32>,
}

impl Asm {
    pub fn new() -> Asm {
        Asm::default()
    }

    /// Address the next emitted instruction will have.
    pub fn here(&self) -> u32 {
        CODE_BASE + self.instrs.len() as u32 * INSTRUCTION_SIZE
    }

    pub fn label(&mut self, name: &str) -> &mut Asm {
        let addr = self.here();
        let previous = self.labels.insert(name.to_string(), addr);
        assert!(previous.is_none(), "label {name} bound twice");
        self
    }

    pub fn address_of(&self, name: &str) -> u32 {
        *self
            .labels
            .get(name)
            .unwrap_or_else(|| panic!("unknown label {name}"))
    }

    fn push(&mut self, opcode: Opcode, rd: u8, rs1: u8, rs2: u8, imm: Imm) -> &mut Asm {
        self.instrs.push(Pending {
            opcode,
            rd,
            rs1,
            rs2,
            imm,
        });
        self
    }

    pub fn halt(&mut self) -> &mut Asm {
        self.push(Opcode::Halt, 0, 0, 0, Imm::Value(0))
    }

    pub fn loadi(&mut self, rd: u8, imm: u32) -> &mut Asm {
        self.push(Opcode::Loadi, rd, 0, 0, Imm::Value(imm))
    }

    pub fn mov(&mut self, rd: u8, rs1: u8) -> &mut Asm {
        self.push(Opcode::Mov, rd, rs1, 0, Imm::Value(0))
    }

    pub fn add(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Add, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn sub(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Sub, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn mul(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Mul, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn xor(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Xor, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn and(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::And, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn or(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Or, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn shl(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Shl, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn shr(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Shr, rd, rs1, rs2, Imm::Value(0))
    }

    pub fn ltu(&mut self, rd: u8, rs1: u8, rs2: u8) -> &mut Asm {
        self.push(Opcode::Ltu, rd, rs1, rs2, Imm::Value(0))
    }

    /// rd = 32-bit little-endian load from [rs1 + imm].
    pub fn load(&mut self, rd: u8, rs1: u8, imm: u32) -> &mut Asm {
        self.push(Opcode::Load, rd, rs1, 0, Imm::Value(imm))
    }

    /// [rs1 + imm] = rs2 (32-bit little-endian store).
    pub fn store(&mut self, rs1: u8, imm: u32, rs2: u8) -> &mut Asm {
        self.push(Opcode::Store, 0, rs1, rs2, Imm::Value(imm))
    }

    pub fn jmp(&mut self, target: &str) -> &mut Asm {
        self.push(Opcode::Jmp, 0, 0, 0, Imm::Label(target.to_string()))
    }

    pub fn jmp_addr(&mut self, target: u32) -> &mut Asm {
        self.push(Opcode::Jmp, 0, 0, 0, Imm::Value(target))
    }

    pub fn jz(&mut self, rs1: u8, target: &str) -> &mut Asm {
        self.push(Opcode::Jz, 0, rs1, 0, Imm::Label(target.to_string()))
    }

    pub fn jnz(&mut self, rs1: u8, target: &str) -> &mut Asm {
        self.push(Opcode::Jnz, 0, rs1, 0, Imm::Label(target.to_string()))
    }

    pub fn syscall(&mut self) -> &mut Asm {
        self.push(Opcode::Syscall, 0, 0, 0, Imm::Value(0))
    }

    pub fn assemble(&self) -> Vec<u8> {
        let mut image = Vec::with_capacity(self.instrs.len() * INSTRUCTION_SIZE as usize);
        for pending in &self.instrs {
            let imm = match &pending.imm {
                Imm::Value(v) => *v,
                Imm::Label(name) => self.address_of(name),
            };
            image.extend_from_slice(&encode(&Instruction {
                opcode: pending.opcode,
                rd: pending.rd,
                rs1: pending.rs1,
                rs2: pending.rs2,
                imm,
            }));
        }
        image
    }
}
