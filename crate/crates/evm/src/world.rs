//! The mutable blockchain picture a state carries: accounts with symbolic
//! balances and storage, the hash pairs observed so far, and the count of
//! transactions applied. Worlds are cloned wholesale for snapshots, so
//! rollback is plain assignment.

use num_bigint::BigUint;
use roam_smt::Expr;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Width of machine words, balances, and storage cells.
pub const WORD: u32 = 256;

/// The transaction origin starts with 2^255 wei so value constraints are
/// effectively bounded by the 256-bit word, not by funds.
pub fn initial_caller_balance() -> BigUint {
    BigUint::from(1u8) << 255
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Account {
    /// 256-bit balance; symbolic once symbolic value has flowed through it.
    pub balance: Expr,
    /// Runtime bytecode. Shared: code never changes after creation.
    pub code: Arc<Vec<u8>>,
    /// Array from 256-bit key to 256-bit value, zero by default.
    pub storage: Expr,
    pub nonce: u64,
}

impl Account {
    fn fresh(balance: Expr, code: Vec<u8>, nonce: u64) -> Account {
        Account {
            balance,
            code: Arc::new(code),
            storage: Expr::const_array(WORD, WORD, BigUint::from(0u8))
                .expect("zero storage array"),
            nonce,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxKind {
    /// Value and calldata are fresh symbolic inputs.
    Symbolic,
    /// Value and calldata were given concretely (replay).
    Concrete,
}

/// One applied transaction, kept so finished states can render their inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub caller: u64,
    pub target: u64,
    /// 256-bit value, usually the symbolic `txvalue_<n>`.
    pub value: Expr,
    /// One 8-bit expression per calldata byte.
    pub data: Vec<Expr>,
    pub kind: TxKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub accounts: BTreeMap<u64, Account>,
    /// Concrete (preimage, digest) pairs produced by SHA3 on this path.
    pub sha3_pairs: Vec<(Vec<u8>, [u8; 32])>,
    /// Symbolic transactions applied so far.
    pub tx_count: u64,
    next_address: u64,
}

impl World {
    pub fn new() -> World {
        World {
            accounts: BTreeMap::new(),
            sha3_pairs: Vec::new(),
            tx_count: 0,
            next_address: 1,
        }
    }

    fn next_address(&mut self) -> u64 {
        let addr = self.next_address;
        self.next_address += 1;
        addr
    }

    /// Account without code at the next sequential address.
    pub fn create_account(&mut self, balance: BigUint) -> u64 {
        let addr = self.next_address();
        let balance = Expr::bv_masked(balance, WORD);
        self.accounts.insert(addr, Account::fresh(balance, Vec::new(), 0));
        addr
    }

    /// Contract with the given runtime bytecode at the next sequential
    /// address.
    pub fn create_contract(&mut self, code: Vec<u8>, balance: BigUint) -> u64 {
        let addr = self.next_address();
        let balance = Expr::bv_masked(balance, WORD);
        self.accounts.insert(addr, Account::fresh(balance, code, 1));
        addr
    }

    pub fn account(&self, addr: u64) -> Option<&Account> {
        self.accounts.get(&addr)
    }

    pub fn account_mut(&mut self, addr: u64) -> Option<&mut Account> {
        self.accounts.get_mut(&addr)
    }

    /// Symbolic sum of every balance; conserved by transactions and calls.
    pub fn balance_total(&self) -> Expr {
        let mut total = Expr::zero(WORD);
        for account in self.accounts.values() {
            total = total.add(&account.balance);
        }
        roam_smt::simplify(&total)
    }
}

impl Default for World {
    fn default() -> World {
        World::new()
    }
}
