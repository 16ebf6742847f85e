//! Symbolic EVM backend: a 256-bit interpreter over symbolic words with
//! call frames, world snapshots, symbolic transactions, coverage
//! reporting, and an arithmetic overflow detector.

mod coverage;
mod detector;
mod keccak;
mod opcode;
mod platform;
mod world;

pub mod fixtures;

pub use coverage::{coverage_report, CoverageReport};
pub use detector::{attach_overflow_detector, OverflowFindings};
pub use keccak::keccak256;
pub use opcode::{instruction_offsets, jumpdests, Op};
pub use platform::{
    pack_location, unpack_location, ArithKind, ArithRecord, EvmContext, EvmPlatform, Frame,
    TxSetup, CALL_DEPTH_LIMIT, DEFAULT_GAS_BUDGET, STACK_LIMIT,
};
pub use world::{initial_caller_balance, Account, Transaction, TxKind, World, WORD};
