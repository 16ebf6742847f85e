//! Mapped virtual address space. Each region backs its contents with an
//! SMT array expression (index 32 bits, elements 8 bits), so stored bytes
//! may be fully symbolic. Non-writable code regions additionally keep their
//! raw image bytes for fast instruction fetch.

use num_bigint::BigUint;
use roam_smt::{simplify, Expr};
use serde::{Deserialize, Serialize};

pub const CODE_BASE: u32 = 0x1000;
pub const DATA_BASE: u32 = 0x0002_0000;
pub const DATA_SIZE: u32 = 0x0001_0000;
/// Start of the argument block inside the data region.
pub const ARGV_BASE: u32 = 0x0002_F000;

/// How a symbolic (non-constant) address is handled: keep the access as an
/// array operation constrained to the mapped range, or enumerate feasible
/// addresses and fork.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MemoryModel {
    FullySymbolic,
    #[default]
    ConcretizingAddress,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Region {
    pub base: u32,
    pub size: u32,
    pub read: bool,
    pub write: bool,
    pub execute: bool,
    backing: Expr,
    /// Concrete image for executable regions; valid because such regions
    /// are never writable.
    fetch_bytes: Option<Vec<u8>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
    Execute,
}

/// Address of the first byte that failed the permission or mapping check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fault(pub u32);

fn index(addr: u32) -> Expr {
    Expr::bv_u64(addr as u64, 32)
}

impl Region {
    pub fn code(base: u32, image: &[u8]) -> Region {
        Region {
            base,
            size: image.len() as u32,
            read: true,
            write: false,
            execute: true,
            backing: build_backing(base, image),
            fetch_bytes: Some(image.to_vec()),
        }
    }

    pub fn data(base: u32, size: u32) -> Region {
        Region {
            base,
            size,
            read: true,
            write: true,
            execute: false,
            backing: zero_array(),
            fetch_bytes: None,
        }
    }

    fn contains_span(&self, addr: u32, len: u32) -> bool {
        let addr = addr as u64;
        let len = len as u64;
        addr >= self.base as u64 && addr + len <= self.base as u64 + self.size as u64
    }

    fn allows(&self, access: Access) -> bool {
        match access {
            Access::Read => self.read,
            Access::Write => self.write,
            Access::Execute => self.execute,
        }
    }

    /// One byte at a concrete address (caller has bounds-checked).
    fn byte(&self, addr: u32) -> Expr {
        if let Some(bytes) = &self.fetch_bytes {
            let off = (addr - self.base) as usize;
            return Expr::bv_u64(bytes[off] as u64, 8);
        }
        simplify(&self.backing.select(&index(addr)))
    }

    fn put_byte(&mut self, addr: u32, value: Expr) {
        self.backing = simplify(&self.backing.store(&index(addr), &value));
    }

    pub fn backing(&self) -> &Expr {
        &self.backing
    }
}

fn zero_array() -> Expr {
    Expr::const_array(32, 8, BigUint::from(0u8)).expect("valid array sort")
}

fn build_backing(base: u32, image: &[u8]) -> Expr {
    let mut backing = zero_array();
    for (i, b) in image.iter().enumerate() {
        backing = backing.store(&index(base + i as u32), &Expr::bv_u64(*b as u64, 8));
    }
    backing
}

#[derive(Clone, Serialize, Deserialize)]
pub struct MemoryMap {
    regions: Vec<Region>,
    pub model: MemoryModel,
}

impl MemoryMap {
    pub fn new(model: MemoryModel) -> MemoryMap {
        MemoryMap {
            regions: Vec::new(),
            model,
        }
    }

    pub fn map(&mut self, region: Region) {
        assert!(
            self.regions.iter().all(|r| {
                let a = region.base as u64;
                let b = a + region.size as u64;
                let c = r.base as u64;
                let d = c + r.size as u64;
                b <= c || d <= a
            }),
            "regions must not overlap"
        );
        self.regions.push(region);
    }

    pub fn region_at(&self, addr: u32, len: u32, access: Access) -> Result<&Region, Fault> {
        self.regions
            .iter()
            .find(|r| r.contains_span(addr, len) && r.allows(access))
            .ok_or(Fault(addr))
    }

    fn region_at_mut(&mut self, addr: u32, len: u32, access: Access) -> Result<&mut Region, Fault> {
        self.regions
            .iter_mut()
            .find(|r| r.contains_span(addr, len) && r.allows(access))
            .ok_or(Fault(addr))
    }

    /// The region symbolic-address accesses resolve against under the fully
    /// symbolic model: the single writable region.
    pub fn symbolic_target(&self) -> &Region {
        let mut it = self.regions.iter().filter(|r| r.write);
        let region = it.next().expect("a writable region is mapped");
        debug_assert!(it.next().is_none(), "one writable region expected");
        region
    }

    fn symbolic_target_mut(&mut self) -> &mut Region {
        self.regions
            .iter_mut()
            .find(|r| r.write)
            .expect("a writable region is mapped")
    }

    /// Raw instruction bytes; requires execute permission over the span.
    pub fn fetch(&self, addr: u32) -> Result<[u8; 8], Fault> {
        let region = self.region_at(addr, 8, Access::Execute)?;
        let bytes = region
            .fetch_bytes
            .as_ref()
            .expect("executable regions keep their image");
        let off = (addr - region.base) as usize;
        Ok(bytes[off..off + 8].try_into().expect("span checked"))
    }

    /// Little-endian read of `size` bytes at a concrete address.
    pub fn read_concrete(&self, addr: u32, size: u32) -> Result<Expr, Fault> {
        let region = self.region_at(addr, size, Access::Read)?;
        let mut value = region.byte(addr);
        for i in 1..size {
            value = region.byte(addr + i).concat(&value);
        }
        Ok(simplify(&value))
    }

    /// Little-endian write of `value` (8*size bits wide) at a concrete
    /// address.
    pub fn write_concrete(&mut self, addr: u32, value: &Expr, size: u32) -> Result<(), Fault> {
        let region = self.region_at_mut(addr, size, Access::Write)?;
        for i in 0..size {
            let byte = simplify(&value.extract(8 * i + 7, 8 * i));
            region.put_byte(addr + i, byte);
        }
        Ok(())
    }

    /// Fully symbolic read: a select chain over the writable region plus
    /// the range guard the caller must assert.
    pub fn read_symbolic(&self, addr: &Expr, size: u32) -> (Expr, Expr) {
        let region = self.symbolic_target();
        let mut value = region.backing.select(addr);
        for i in 1..size {
            let a = simplify(&addr.add(&index(i)));
            value = region.backing.select(&a).concat(&value);
        }
        (simplify(&value), range_guard(region, addr, size))
    }

    /// Fully symbolic write; returns the range guard to assert.
    pub fn write_symbolic(&mut self, addr: &Expr, value: &Expr, size: u32) -> Expr {
        let region = self.symbolic_target_mut();
        for i in 0..size {
            let a = simplify(&addr.add(&index(i)));
            let byte = simplify(&value.extract(8 * i + 7, 8 * i));
            region.backing = simplify(&region.backing.store(&a, &byte));
        }
        range_guard(self.symbolic_target(), addr, size)
    }
}

/// base <= addr && addr <= base + size - access_size.
fn range_guard(region: &Region, addr: &Expr, size: u32) -> Expr {
    let low = index(region.base);
    let high = index(region.base + region.size - size);
    low.ule(addr).and(&addr.ule(&high))
}
