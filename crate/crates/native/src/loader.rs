//! Builds the initial machine state: maps code and data, lays out the
//! argument block, and registers the symbolic stdin/argv bytes.

use crate::memory::{MemoryMap, MemoryModel, Region, ARGV_BASE, CODE_BASE, DATA_BASE, DATA_SIZE};
use crate::os::{ByteSpec, MiniOs};
use crate::platform::{lit32, MiniVmContext};
use roam_core::State;
use roam_smt::{ConstraintSet, Expr, SmtError, Sort};
use thiserror::Error;

/// Largest loadable program image: the gap between the code base and the
/// data region.
pub const MAX_IMAGE: usize = (DATA_BASE - CODE_BASE) as usize;

/// One input byte as specified on the command line: a fixed value or a
/// placeholder for a fresh symbolic variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputByte {
    Concrete(u8),
    Symbolic,
}

/// Parse an argv-style spec string: `+` marks a symbolic byte, anything
/// else is taken literally.
pub fn parse_byte_specs(spec: &str) -> Vec<InputByte> {
    spec.bytes()
        .map(|b| {
            if b == b'+' {
                InputByte::Symbolic
            } else {
                InputByte::Concrete(b)
            }
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("program image is empty")]
    EmptyImage,
    #[error("program image length {0} is not a multiple of the 8-byte instruction size")]
    Misaligned(usize),
    #[error("program image is {0} bytes; the code region holds at most {MAX_IMAGE}")]
    Oversized(usize),
    #[error("argument block does not fit in the data region")]
    ArgvOverflow,
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Where the argument block lands: argc word, pointer table, then the
/// NUL-terminated strings, all packed from `ARGV_BASE`.
pub(crate) struct ArgvLayout {
    pub argc_addr: u32,
    pub table_addr: u32,
    pub string_addrs: Vec<u32>,
    pub end: u64,
}

pub(crate) fn argv_layout(lens: &[usize]) -> ArgvLayout {
    let argc_addr = ARGV_BASE;
    let table_addr = ARGV_BASE + 4;
    let mut next = table_addr as u64 + 4 * lens.len() as u64;
    let mut string_addrs = Vec::with_capacity(lens.len());
    for len in lens {
        string_addrs.push(next as u32);
        next += *len as u64 + 1;
    }
    ArgvLayout {
        argc_addr,
        table_addr,
        string_addrs,
        end: next,
    }
}

pub(crate) fn validate_image(image: &[u8]) -> Result<(), LoadError> {
    if image.is_empty() {
        return Err(LoadError::EmptyImage);
    }
    if image.len() % 8 != 0 {
        return Err(LoadError::Misaligned(image.len()));
    }
    if image.len() > MAX_IMAGE {
        return Err(LoadError::Oversized(image.len()));
    }
    Ok(())
}

/// Assemble the initial state. Symbolic stdin bytes become `stdin_<offset>`
/// variables (all declared up front, whether or not the program reads them);
/// symbolic argv bytes become `argv<k>_<i>`. R1 holds argc, R2 the pointer
/// table address.
pub fn load_program(
    image: &[u8],
    stdin_spec: &[InputByte],
    argv_spec: &[Vec<InputByte>],
    model: MemoryModel,
) -> Result<State<MiniVmContext>, LoadError> {
    validate_image(image)?;

    let mut memory = MemoryMap::new(model);
    memory.map(Region::code(CODE_BASE, image));
    memory.map(Region::data(DATA_BASE, DATA_SIZE));

    let lens: Vec<usize> = argv_spec.iter().map(|a| a.len()).collect();
    let layout = argv_layout(&lens);
    if layout.end > (DATA_BASE + DATA_SIZE) as u64 {
        return Err(LoadError::ArgvOverflow);
    }

    let mut argv_names = Vec::new();
    let mut argv_bytes: Vec<Vec<ByteSpec>> = Vec::with_capacity(argv_spec.len());
    memory
        .write_concrete(layout.argc_addr, &lit32(argv_spec.len() as u32), 4)
        .expect("argument block lies inside the data region");
    for (k, arg) in argv_spec.iter().enumerate() {
        memory
            .write_concrete(
                layout.table_addr + 4 * k as u32,
                &lit32(layout.string_addrs[k]),
                4,
            )
            .expect("pointer table lies inside the data region");
        let base = layout.string_addrs[k];
        let mut rendered = Vec::with_capacity(arg.len());
        for (i, b) in arg.iter().enumerate() {
            let (expr, spec) = match b {
                InputByte::Concrete(v) => {
                    (Expr::bv_u64(*v as u64, 8), ByteSpec::Concrete(*v))
                }
                InputByte::Symbolic => {
                    let name = format!("argv{k}_{i}");
                    argv_names.push(name.clone());
                    (
                        Expr::var(name.clone(), Sort::BitVec(8)),
                        ByteSpec::Symbolic(name),
                    )
                }
            };
            memory
                .write_concrete(base + i as u32, &expr, 1)
                .expect("argument string lies inside the data region");
            rendered.push(spec);
        }
        memory
            .write_concrete(base + arg.len() as u32, &Expr::bv_u64(0, 8), 1)
            .expect("terminator lies inside the data region");
        argv_bytes.push(rendered);
    }

    let mut stdin_names = Vec::new();
    let stdin: Vec<ByteSpec> = stdin_spec
        .iter()
        .enumerate()
        .map(|(offset, b)| match b {
            InputByte::Concrete(v) => ByteSpec::Concrete(*v),
            InputByte::Symbolic => {
                let name = format!("stdin_{offset}");
                stdin_names.push(name.clone());
                ByteSpec::Symbolic(name)
            }
        })
        .collect();

    let mut registers = std::array::from_fn::<Expr, 8, _>(|_| lit32(0));
    registers[1] = lit32(argv_spec.len() as u32);
    registers[2] = lit32(layout.table_addr);

    let context = MiniVmContext {
        registers,
        pc: CODE_BASE,
        memory,
        os: MiniOs {
            stdin,
            cursor: 0,
            stdout: Vec::new(),
            exit_code: None,
        },
        argv: argv_bytes,
    };

    let mut state = State::new(0, ConstraintSet::new(), context);
    for name in stdin_names {
        state.declare_input(name, Sort::BitVec(8), "stdin")?;
    }
    for name in argv_names {
        state.declare_input(name, Sort::BitVec(8), "argv")?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing_marks_plus_as_symbolic() {
        let spec = parse_byte_specs("a+b");
        assert_eq!(
            spec,
            vec![
                InputByte::Concrete(b'a'),
                InputByte::Symbolic,
                InputByte::Concrete(b'b'),
            ]
        );
    }

    #[test]
    fn image_validation() {
        assert!(matches!(validate_image(&[]), Err(LoadError::EmptyImage)));
        assert!(matches!(
            validate_image(&[0; 12]),
            Err(LoadError::Misaligned(12))
        ));
        assert!(validate_image(&[0; 16]).is_ok());
    }

    #[test]
    fn argv_layout_packs_table_then_strings() {
        let layout = argv_layout(&[4, 2]);
        assert_eq!(layout.argc_addr, ARGV_BASE);
        assert_eq!(layout.table_addr, ARGV_BASE + 4);
        assert_eq!(layout.string_addrs, vec![ARGV_BASE + 12, ARGV_BASE + 17]);
        assert_eq!(layout.end, (ARGV_BASE + 20) as u64);
    }
}
