//! Small machine programs used across the test suite and the command line
//! examples. Each one hides a "bomb" block behind input-dependent control
//! flow; exploration defuses the bomb by producing an input whose replay
//! reaches `bomb_pc`.

use crate::asm::Asm;
use crate::loader::{load_program, InputByte, LoadError};
use crate::memory::{MemoryModel, DATA_BASE};
use crate::os::{SYS_EXIT, SYS_READ, SYS_WRITE};
use crate::platform::MiniVmContext;
use roam_core::State;

pub struct Fixture {
    pub name: &'static str,
    pub image: Vec<u8>,
    pub stdin: Vec<InputByte>,
    pub argv: Vec<Vec<InputByte>>,
    /// Address of the guarded block.
    pub bomb_pc: u32,
    /// Whether any input reaches the bomb.
    pub satisfiable: bool,
}

impl Fixture {
    pub fn initial_state(&self, model: MemoryModel) -> Result<State<MiniVmContext>, LoadError> {
        load_program(&self.image, &self.stdin, &self.argv, model)
    }
}

/// Every fixture, eleven satisfiable and one whose guard is contradictory.
pub fn all() -> Vec<Fixture> {
    vec![
        magic4(),
        affine(),
        strcmp6(),
        table_lookup(),
        nested6(),
        unsat_guard(),
        sum_loop(),
        nibble_swap(),
        branches10(),
        echo3(),
        argv_gate(),
        magic_word(),
    ]
}

fn sym(n: usize) -> Vec<InputByte> {
    vec![InputByte::Symbolic; n]
}

fn concrete(s: &str) -> Vec<InputByte> {
    s.bytes().map(InputByte::Concrete).collect()
}

fn emit_read(a: &mut Asm, buf: u32, len: u32) {
    a.loadi(0, SYS_READ)
        .loadi(1, 0)
        .loadi(2, buf)
        .loadi(3, len)
        .syscall();
}

fn emit_write(a: &mut Asm, buf: u32, len: u32) {
    a.loadi(0, SYS_WRITE)
        .loadi(1, 1)
        .loadi(2, buf)
        .loadi(3, len)
        .syscall();
}

fn emit_exit(a: &mut Asm, code: u32) {
    a.loadi(0, SYS_EXIT).loadi(1, code).syscall();
}

/// Append the shared tail: `bomb` exits 42, `exit` exits 0.
fn bomb_exit_tail(a: &mut Asm) -> u32 {
    a.label("bomb");
    emit_exit(a, 42);
    a.label("exit");
    emit_exit(a, 0);
    a.address_of("bomb")
}

/// Four stdin bytes must equal "GOLD", compared as one little-endian word.
pub fn magic4() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 4);
    a.load(4, 2, 0)
        .loadi(5, u32::from_le_bytes(*b"GOLD"))
        .xor(6, 4, 5)
        .jnz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "magic4",
        image: a.assemble(),
        stdin: sym(4),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// One stdin byte x with 3x + 7 == 0x100; the only solution is x = 83.
pub fn affine() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 1);
    a.load(4, 2, 0)
        .loadi(5, 3)
        .mul(4, 4, 5)
        .loadi(5, 7)
        .add(4, 4, 5)
        .loadi(5, 0x100)
        .xor(6, 4, 5)
        .jnz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "affine",
        image: a.assemble(),
        stdin: sym(1),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Byte-wise compare against "SESAME" with an early exit on the first
/// mismatch, so later bytes stay unconstrained on failing paths.
pub fn strcmp6() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 6);
    for (i, ch) in b"SESAME".iter().enumerate() {
        a.load(4, 2, i as u32)
            .loadi(5, 0xFF)
            .and(4, 4, 5)
            .loadi(5, *ch as u32)
            .xor(6, 4, 5)
            .jnz(6, "exit");
    }
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "strcmp6",
        image: a.assemble(),
        stdin: sym(6),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// A word table is built at runtime, then indexed by a symbolic byte that
/// is only bounds-checked, not fixed: the load address itself is symbolic.
/// Entry 5 holds the magic value.
pub fn table_lookup() -> Fixture {
    let tbl = DATA_BASE + 0x100;
    let mut a = Asm::new();
    a.loadi(4, tbl);
    for i in 0..8u32 {
        let v = if i == 5 { 0xCAFE } else { 0xBEE0 + i };
        a.loadi(5, v).store(4, 4 * i, 5);
    }
    emit_read(&mut a, DATA_BASE, 1);
    a.load(5, 2, 0)
        .loadi(6, 8)
        .ltu(7, 5, 6)
        .jz(7, "exit")
        .loadi(6, 2)
        .shl(5, 5, 6)
        .add(5, 5, 4)
        .load(6, 5, 0)
        .loadi(7, 0xCAFE)
        .xor(6, 6, 7)
        .jnz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "table_lookup",
        image: a.assemble(),
        stdin: sym(1),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Six nested guards: every stdin byte must have its high bit clear.
pub fn nested6() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 6);
    for i in 0..6u32 {
        a.load(4, 2, i).loadi(5, 0x80).and(4, 4, 5).jnz(4, "exit");
    }
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "nested6",
        image: a.assemble(),
        stdin: sym(6),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Contradictory guards (x < 10 then 200 < x): the bomb is unreachable and
/// exploration must prove it rather than report a spurious hit.
pub fn unsat_guard() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 1);
    a.load(4, 2, 0)
        .loadi(5, 10)
        .ltu(6, 4, 5)
        .jz(6, "exit")
        .loadi(5, 200)
        .ltu(6, 5, 4)
        .jz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "unsat_guard",
        image: a.assemble(),
        stdin: sym(1),
        argv: vec![],
        bomb_pc,
        satisfiable: false,
    }
}

/// A concrete-bound loop reads five bytes one at a time and sums them; the
/// bomb wants the sum to be exactly 300.
pub fn sum_loop() -> Fixture {
    let mut a = Asm::new();
    a.loadi(7, 0).loadi(6, 5);
    a.label("loop").jz(6, "check");
    emit_read(&mut a, DATA_BASE, 1);
    a.load(4, 2, 0)
        .add(7, 7, 4)
        .loadi(4, 1)
        .sub(6, 6, 4)
        .jmp("loop");
    a.label("check")
        .loadi(5, 300)
        .xor(4, 7, 5)
        .jnz(4, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "sum_loop",
        image: a.assemble(),
        stdin: sym(5),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Swapping the nibbles of the input byte must give 0x5A (so x = 0xA5).
pub fn nibble_swap() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 1);
    a.load(4, 2, 0)
        .loadi(5, 4)
        .shl(6, 4, 5)
        .shr(7, 4, 5)
        .or(6, 6, 7)
        .loadi(5, 0xFF)
        .and(6, 6, 5)
        .loadi(5, 0x5A)
        .xor(6, 6, 5)
        .jnz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "nibble_swap",
        image: a.assemble(),
        stdin: sym(1),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Ten independent two-way branches over ten stdin bytes; every path is
/// feasible, so exploration fans out to 2^10 terminated states. The arms
/// differ (one has a filler instruction) to keep all traces distinct.
pub fn branches10() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 10);
    for i in 0..10u32 {
        let skip = format!("skip{i}");
        a.load(4, 2, i).loadi(5, 0x80).and(4, 4, 5).jz(4, &skip);
        a.mov(6, 6);
        a.label(&skip);
    }
    a.label("bomb").halt();
    let bomb_pc = a.address_of("bomb");
    Fixture {
        name: "branches10",
        image: a.assemble(),
        stdin: sym(10),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// Echoes three stdin bytes to stdout, then checks the first one; exercises
/// the write syscall and symbolic stdout rendering.
pub fn echo3() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 3);
    emit_write(&mut a, DATA_BASE, 3);
    a.load(4, 2, 0)
        .loadi(5, 0xFF)
        .and(4, 4, 5)
        .loadi(5, b'E' as u32)
        .xor(6, 4, 5)
        .jnz(6, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "echo3",
        image: a.assemble(),
        stdin: sym(3),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}

/// The guard reads argv[1] through the pointer table and wants its first
/// byte to be '!'. stdin is unused.
pub fn argv_gate() -> Fixture {
    let mut a = Asm::new();
    a.load(4, 2, 4)
        .load(5, 4, 0)
        .loadi(6, 0xFF)
        .and(5, 5, 6)
        .loadi(6, b'!' as u32)
        .xor(5, 5, 6)
        .jnz(5, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "argv_gate",
        image: a.assemble(),
        stdin: vec![],
        argv: vec![concrete("tool"), sym(2)],
        bomb_pc,
        satisfiable: true,
    }
}

/// A 32-bit multiplicative gate: word * 0x1337 == 0x00C0FFEE. The factor is
/// odd, so exactly one word opens it.
pub fn magic_word() -> Fixture {
    let mut a = Asm::new();
    emit_read(&mut a, DATA_BASE, 4);
    a.load(4, 2, 0)
        .loadi(5, 0x1337)
        .mul(4, 4, 5)
        .loadi(5, 0x00C0_FFEE)
        .xor(4, 4, 5)
        .jnz(4, "exit");
    let bomb_pc = bomb_exit_tail(&mut a);
    Fixture {
        name: "magic_word",
        image: a.assemble(),
        stdin: sym(4),
        argv: vec![],
        bomb_pc,
        satisfiable: true,
    }
}
