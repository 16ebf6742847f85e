//! The mini operating system: a byte-spec stdin stream, a captured stdout
//! log, and the syscall numbers the machine exposes.

use roam_smt::Expr;
use serde::{Deserialize, Serialize};

pub const SYS_EXIT: u32 = 0;
pub const SYS_READ: u32 = 1;
pub const SYS_WRITE: u32 = 2;

/// One stdin byte: fixed, or a named symbolic variable created at load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ByteSpec {
    Concrete(u8),
    Symbolic(String),
}

/// Per-state OS view. stdout bytes may be symbolic expressions; they are
/// resolved against the model when the test case is written.
#[derive(Clone, Default, Serialize, Deserialize)]
pub struct MiniOs {
    pub stdin: Vec<ByteSpec>,
    pub cursor: usize,
    pub stdout: Vec<Expr>,
    pub exit_code: Option<u32>,
}

impl MiniOs {
    pub fn remaining_stdin(&self) -> usize {
        self.stdin.len() - self.cursor
    }
}
