//! Code coverage over executed instruction offsets. Trace locations pack
//! the executing account with the program counter; the denominator for
//! each account is every byte offset of its code that decodes to a
//! supported instruction (push immediates are data, not instructions).

use crate::opcode::instruction_offsets;
use crate::platform::unpack_location;
use crate::world::World;
use std::collections::BTreeMap;
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccountCoverage {
    pub address: u64,
    pub executed: usize,
    pub total: usize,
}

impl AccountCoverage {
    pub fn percent(&self) -> f64 {
        percent(self.executed, self.total)
    }
}

/// Per-account and aggregate instruction coverage. Executed offsets are
/// intersected with the decodable set, so executed never exceeds total.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageReport {
    /// One entry per account with code, ordered by address.
    pub accounts: Vec<AccountCoverage>,
}

impl CoverageReport {
    pub fn executed(&self) -> usize {
        self.accounts.iter().map(|a| a.executed).sum()
    }

    pub fn total(&self) -> usize {
        self.accounts.iter().map(|a| a.total).sum()
    }

    pub fn percent(&self) -> f64 {
        percent(self.executed(), self.total())
    }

    /// Plain-text report: one `address, executed, total, percent` line per
    /// account with code, then an aggregate line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for a in &self.accounts {
            out.push_str(&format!(
                "0x{:040x}, {}, {}, {:.1}%\n",
                a.address,
                a.executed,
                a.total,
                a.percent()
            ));
        }
        out.push_str(&format!(
            "total, {}, {}, {:.1}%\n",
            self.executed(),
            self.total(),
            self.percent()
        ));
        out
    }
}

fn percent(executed: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        executed as f64 * 100.0 / total as f64
    }
}

/// Aggregate coverage of `locations` (typically the union of all state
/// traces) against the code in `world`. Locations in accounts without code
/// or at offsets inside push immediates are ignored.
pub fn coverage_report<I>(world: &World, locations: I) -> CoverageReport
where
    I: IntoIterator<Item = u64>,
{
    let mut executed: BTreeMap<u64, BTreeSet<u32>> = BTreeMap::new();
    for location in locations {
        let (address, pc) = unpack_location(location);
        executed.entry(address).or_default().insert(pc);
    }

    let mut accounts = Vec::new();
    for (address, account) in &world.accounts {
        if account.code.is_empty() {
            continue;
        }
        let decodable = instruction_offsets(&account.code);
        let hit = executed
            .get(address)
            .map(|offsets| offsets.intersection(&decodable).count())
            .unwrap_or(0);
        accounts.push(AccountCoverage {
            address: *address,
            executed: hit,
            total: decodable.len(),
        });
    }
    CoverageReport { accounts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::pack_location;
    use num_bigint::BigUint;

    fn world_with(code: Vec<u8>) -> (World, u64) {
        let mut world = World::new();
        let addr = world.create_contract(code, BigUint::from(0u8));
        (world, addr)
    }

    #[test]
    fn full_trace_is_full_coverage() {
        // PUSH1 0x00, POP, STOP: instruction starts at 0, 2, 3.
        let (world, addr) = world_with(vec![0x60, 0x00, 0x50, 0x00]);
        let trace = [0u32, 2, 3].map(|pc| pack_location(addr, pc));
        let report = coverage_report(&world, trace);
        assert_eq!(report.accounts.len(), 1);
        assert_eq!(report.accounts[0].executed, 3);
        assert_eq!(report.accounts[0].total, 3);
        assert_eq!(report.percent(), 100.0);
    }

    #[test]
    fn immediate_offsets_and_foreign_accounts_are_ignored() {
        let (world, addr) = world_with(vec![0x60, 0x00, 0x50, 0x00]);
        let trace = [
            pack_location(addr, 0),
            pack_location(addr, 1),   // inside the PUSH1 immediate
            pack_location(addr, 400), // past the end of the code
            pack_location(0x99, 0),   // no such account
        ];
        let report = coverage_report(&world, trace);
        assert_eq!(report.accounts[0].executed, 1);
        assert_eq!(report.accounts[0].total, 3);
    }

    #[test]
    fn report_lines_include_every_coded_account_and_an_aggregate() {
        let mut world = World::new();
        let a = world.create_contract(vec![0x00], BigUint::from(0u8));
        let b = world.create_contract(vec![0x5b, 0x00], BigUint::from(0u8));
        world.create_account(BigUint::from(1u8)); // codeless, not reported
        let report = coverage_report(&world, [pack_location(a, 0), pack_location(b, 0)]);
        let text = report.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], format!("0x{a:040x}, 1, 1, 100.0%"));
        assert_eq!(lines[1], format!("0x{b:040x}, 1, 2, 50.0%"));
        assert_eq!(lines[2], "total, 2, 3, 66.7%");
    }
}
