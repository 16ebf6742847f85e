//! Symbolic execution backend for a small 32-bit register machine with a
//! syscall-based mini OS. The machine has eight registers, fixed 8-byte
//! instructions, a read/execute code region, and one read/write data region;
//! programs talk to the world through `exit`, `read` (fd 0), and `write`
//! (fd 1) syscalls. Inputs arrive as symbolic stdin bytes and argv strings.

pub mod asm;
pub mod fixtures;
mod isa;
mod loader;
mod memory;
mod os;
mod platform;
mod replay;

pub use asm::Asm;
pub use isa::{
    decode, encode, DecodeError, Instruction, Opcode, INSTRUCTION_SIZE, NUM_REGISTERS,
};
pub use loader::{load_program, parse_byte_specs, InputByte, LoadError, MAX_IMAGE};
pub use memory::{
    Access, Fault, MemoryMap, MemoryModel, Region, ARGV_BASE, CODE_BASE, DATA_BASE, DATA_SIZE,
};
pub use os::{ByteSpec, MiniOs, SYS_EXIT, SYS_READ, SYS_WRITE};
pub use platform::{MiniVmContext, MiniVmPlatform};
pub use replay::{concrete_replay, Replay, ReplayError};
