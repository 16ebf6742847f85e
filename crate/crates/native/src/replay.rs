//! Fully concrete re-execution. No solver, no expressions: plain 32-bit
//! arithmetic over the same memory layout and syscall semantics as the
//! symbolic interpreter, byte for byte.

use crate::isa::{decode, Opcode, INSTRUCTION_SIZE};
use crate::loader::{argv_layout, validate_image, LoadError};
use crate::memory::{ARGV_BASE, CODE_BASE, DATA_BASE, DATA_SIZE};
use crate::os::{SYS_EXIT, SYS_READ, SYS_WRITE};
use roam_core::TerminateReason;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("replay exceeded {0} steps without terminating")]
    StepLimit(u64),
}

/// What a concrete run produced: how it stopped, the executed locations,
/// and the bytes written to stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub reason: TerminateReason,
    pub trace: Vec<u64>,
    pub stdout: Vec<u8>,
}

impl Replay {
    pub fn exit_code(&self) -> Option<u64> {
        match self.reason {
            TerminateReason::Exit(code) => Some(code),
            _ => None,
        }
    }
}

struct Machine<'a> {
    image: &'a [u8],
    data: BTreeMap<u32, u8>,
    regs: [u32; 8],
    pc: u32,
    stdin: &'a [u8],
    cursor: usize,
    stdout: Vec<u8>,
}

enum Span {
    Code,
    Data,
}

impl<'a> Machine<'a> {
    fn span(&self, addr: u32, len: u32) -> Option<Span> {
        let end = addr as u64 + len as u64;
        let code_end = CODE_BASE as u64 + self.image.len() as u64;
        if addr >= CODE_BASE && end <= code_end {
            return Some(Span::Code);
        }
        let data_end = (DATA_BASE + DATA_SIZE) as u64;
        if addr >= DATA_BASE && end <= data_end {
            return Some(Span::Data);
        }
        None
    }

    fn read_byte(&self, addr: u32) -> Option<u8> {
        match self.span(addr, 1)? {
            Span::Code => Some(self.image[(addr - CODE_BASE) as usize]),
            Span::Data => Some(*self.data.get(&addr).unwrap_or(&0)),
        }
    }

    fn write_byte(&mut self, addr: u32, value: u8) -> Option<()> {
        match self.span(addr, 1)? {
            Span::Code => None,
            Span::Data => {
                self.data.insert(addr, value);
                Some(())
            }
        }
    }

    fn read_word(&self, addr: u32) -> Option<u32> {
        self.span(addr, 4)?;
        let mut v = 0u32;
        for i in 0..4 {
            v |= (self.read_byte(addr + i)? as u32) << (8 * i);
        }
        Some(v)
    }

    fn write_word(&mut self, addr: u32, value: u32) -> Option<()> {
        if !matches!(self.span(addr, 4), Some(Span::Data)) {
            return None;
        }
        for i in 0..4 {
            self.write_byte(addr + i, (value >> (8 * i)) as u8)?;
        }
        Some(())
    }

    fn put_block(&mut self, addr: u32, bytes: &[u8]) {
        for (i, b) in bytes.iter().enumerate() {
            self.data.insert(addr + i as u32, *b);
        }
    }
}

/// Run `image` to completion on concrete inputs. The trace lists the
/// location of every attempted instruction, including the one that faulted.
pub fn concrete_replay(
    image: &[u8],
    stdin: &[u8],
    argv: &[Vec<u8>],
    max_steps: u64,
) -> Result<Replay, ReplayError> {
    validate_image(image)?;

    let mut m = Machine {
        image,
        data: BTreeMap::new(),
        regs: [0; 8],
        pc: CODE_BASE,
        stdin,
        cursor: 0,
        stdout: Vec::new(),
    };

    let lens: Vec<usize> = argv.iter().map(|a| a.len()).collect();
    let layout = argv_layout(&lens);
    if layout.end > (DATA_BASE + DATA_SIZE) as u64 {
        return Err(LoadError::ArgvOverflow.into());
    }
    m.put_block(layout.argc_addr, &(argv.len() as u32).to_le_bytes());
    for (k, arg) in argv.iter().enumerate() {
        m.put_block(
            layout.table_addr + 4 * k as u32,
            &layout.string_addrs[k].to_le_bytes(),
        );
        m.put_block(layout.string_addrs[k], arg);
        m.data.insert(layout.string_addrs[k] + arg.len() as u32, 0);
    }
    m.regs[1] = argv.len() as u32;
    m.regs[2] = ARGV_BASE + 4;

    let mut trace: Vec<u64> = Vec::new();
    let mut steps = 0u64;
    let reason = loop {
        if steps == max_steps {
            return Err(ReplayError::StepLimit(max_steps));
        }
        steps += 1;
        let pc = m.pc;
        trace.push(pc as u64);

        let raw: [u8; 8] = match m.span(pc, 8) {
            Some(Span::Code) => {
                let off = (pc - CODE_BASE) as usize;
                m.image[off..off + 8].try_into().unwrap()
            }
            _ => break TerminateReason::MemoryViolation(pc as u64),
        };
        let instr = match decode(&raw) {
            Ok(i) => i,
            Err(_) => break TerminateReason::InvalidInstruction,
        };

        let rs1 = m.regs[instr.rs1 as usize];
        let rs2 = m.regs[instr.rs2 as usize];
        let rd = instr.rd as usize;
        let next = pc.wrapping_add(INSTRUCTION_SIZE);
        m.pc = next;

        match instr.opcode {
            Opcode::Halt => break TerminateReason::Exit(0),
            Opcode::Loadi => m.regs[rd] = instr.imm,
            Opcode::Mov => m.regs[rd] = rs1,
            Opcode::Add => m.regs[rd] = rs1.wrapping_add(rs2),
            Opcode::Sub => m.regs[rd] = rs1.wrapping_sub(rs2),
            Opcode::Mul => m.regs[rd] = rs1.wrapping_mul(rs2),
            Opcode::Xor => m.regs[rd] = rs1 ^ rs2,
            Opcode::And => m.regs[rd] = rs1 & rs2,
            Opcode::Or => m.regs[rd] = rs1 | rs2,
            Opcode::Shl => m.regs[rd] = rs1 << (rs2 & 31),
            Opcode::Shr => m.regs[rd] = rs1 >> (rs2 & 31),
            Opcode::Ltu => m.regs[rd] = (rs1 < rs2) as u32,
            Opcode::Load => {
                let addr = rs1.wrapping_add(instr.imm);
                match m.read_word(addr) {
                    Some(v) => m.regs[rd] = v,
                    None => break TerminateReason::MemoryViolation(addr as u64),
                }
            }
            Opcode::Store => {
                let addr = rs1.wrapping_add(instr.imm);
                if m.write_word(addr, rs2).is_none() {
                    break TerminateReason::MemoryViolation(addr as u64);
                }
            }
            Opcode::Jmp => m.pc = instr.imm,
            Opcode::Jz => {
                if rs1 == 0 {
                    m.pc = instr.imm;
                }
            }
            Opcode::Jnz => {
                if rs1 != 0 {
                    m.pc = instr.imm;
                }
            }
            Opcode::Syscall => match m.regs[0] {
                SYS_EXIT => break TerminateReason::Exit(m.regs[1] as u64),
                SYS_READ => {
                    if m.regs[1] != 0 {
                        m.regs[0] = u32::MAX;
                        continue;
                    }
                    let buf = m.regs[2];
                    let len = m.regs[3] as usize;
                    let n = len.min(m.stdin.len() - m.cursor);
                    if n > 0 {
                        if !matches!(m.span(buf, n as u32), Some(Span::Data)) {
                            break TerminateReason::MemoryViolation(buf as u64);
                        }
                        for i in 0..n {
                            m.data.insert(buf + i as u32, m.stdin[m.cursor + i]);
                        }
                    }
                    m.cursor += n;
                    m.regs[0] = n as u32;
                }
                SYS_WRITE => {
                    if m.regs[1] != 1 {
                        m.regs[0] = u32::MAX;
                        continue;
                    }
                    let buf = m.regs[2];
                    let len = m.regs[3];
                    if len > 0 {
                        if m.span(buf, len).is_none() {
                            break TerminateReason::MemoryViolation(buf as u64);
                        }
                        for i in 0..len {
                            m.stdout.push(m.read_byte(buf + i).unwrap());
                        }
                    }
                    m.regs[0] = len;
                }
                _ => break TerminateReason::InvalidInstruction,
            },
        }
    };

    Ok(Replay {
        reason,
        trace,
        stdout: m.stdout,
    })
}
