use num_bigint::BigUint;
use roam_smt::Expr;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Why a state stopped executing. `Abandoned` states are never persisted;
/// every other reason produces a test-case group in the workspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminateReason {
    Exit(u64),
    MemoryViolation(u64),
    InvalidInstruction,
    Revert,
    OutOfGas,
    Abandoned,
    SolverUnknown,
}

impl TerminateReason {
    pub fn is_abandoned(&self) -> bool {
        matches!(self, TerminateReason::Abandoned)
    }
}

impl fmt::Display for TerminateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminateReason::Exit(code) => write!(f, "exit({code})"),
            TerminateReason::MemoryViolation(addr) => {
                write!(f, "memory violation at {addr:#x}")
            }
            TerminateReason::InvalidInstruction => write!(f, "invalid instruction"),
            TerminateReason::Revert => write!(f, "revert"),
            TerminateReason::OutOfGas => write!(f, "out of gas"),
            TerminateReason::Abandoned => write!(f, "abandoned"),
            TerminateReason::SolverUnknown => write!(f, "solver unknown"),
        }
    }
}

/// How many concrete values a concretization spawns children for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Every feasible value up to `cap`; exceeding the cap truncates the set
    /// and logs a warning into the forked children.
    All { cap: usize },
    /// A single satisfying value.
    One,
    /// The minimum and maximum feasible values.
    Minmax,
}

impl Policy {
    pub fn all() -> Policy {
        Policy::All { cap: 64 }
    }
}

impl Default for Policy {
    fn default() -> Policy {
        Policy::all()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    WillExecuteInstruction,
    DidExecuteInstruction,
    MemoryRead,
    MemoryWrite,
    StateForked,
    StateTerminated,
    SymbolicTransactionApplied,
}

/// Payload delivered to event subscribers. `location` is always the
/// platform location of the instruction the event belongs to; the remaining
/// fields are filled per kind (forked child id, termination reason, the
/// accessed address or concretized expression, the concrete value involved).
#[derive(Clone, Debug)]
pub struct Event {
    pub kind: EventKind,
    pub location: u64,
    pub child: Option<u64>,
    pub reason: Option<TerminateReason>,
    pub expr: Option<Expr>,
    pub value: Option<BigUint>,
}

impl Event {
    pub fn at(kind: EventKind, location: u64) -> Event {
        Event {
            kind,
            location,
            child: None,
            reason: None,
            expr: None,
            value: None,
        }
    }

    pub fn memory_read(location: u64, address: Expr) -> Event {
        Event {
            expr: Some(address),
            ..Event::at(EventKind::MemoryRead, location)
        }
    }

    pub fn memory_write(location: u64, address: Expr) -> Event {
        Event {
            expr: Some(address),
            ..Event::at(EventKind::MemoryWrite, location)
        }
    }

    pub fn transaction_applied(location: u64, index: u64) -> Event {
        Event {
            value: Some(BigUint::from(index)),
            ..Event::at(EventKind::SymbolicTransactionApplied, location)
        }
    }

    pub(crate) fn forked(location: u64, child: u64, expr: Expr, value: BigUint) -> Event {
        Event {
            child: Some(child),
            expr: Some(expr),
            value: Some(value),
            ..Event::at(EventKind::StateForked, location)
        }
    }

    pub(crate) fn terminated(location: u64, reason: TerminateReason) -> Event {
        Event {
            reason: Some(reason),
            ..Event::at(EventKind::StateTerminated, location)
        }
    }
}
