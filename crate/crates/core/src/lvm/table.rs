//! Compiling explicit function tables into programs: an if-then-else chain
//! over equality tests, one arm per domain point.

use super::{Instruction, Opcode, Operand, Program, WordWidth};
use std::collections::HashSet;
use thiserror::Error;

/// Saturation point of [`max_length_bound`].
pub const LENGTH_BOUND_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("table is empty")]
    Empty,
    #[error("duplicate key {0:?}")]
    DuplicateKey(Vec<u64>),
    #[error("table with {0} entries is not total over any domain 0..2^n")]
    NotTotal(usize),
    #[error("domain of {0} points does not fit in a word of width {1}")]
    DomainTooWide(usize, u32),
    #[error("value {0} does not fit in a word of width {1}")]
    ValueOutOfRange(u64, u32),
    #[error("entry has {found} components, expected {expected}")]
    Shape { expected: usize, found: usize },
}

/// Length bound on a program for a total function of `input_bits` input bits.
pub fn max_length_bound(input_bits: u32) -> usize {
    if input_bits >= 20 {
        LENGTH_BOUND_CAP
    } else {
        (1usize << input_bits).min(LENGTH_BOUND_CAP)
    }
}

/// Builds a one-input, one-output program computing the table.
///
/// The table must be total over `0..2^n` for some `n <= w.bits()`, in any order.
pub fn compile_table(table: &[(u64, u64)], w: WordWidth) -> Result<Program, TableError> {
    if table.is_empty() {
        return Err(TableError::Empty);
    }
    let mut seen = HashSet::new();
    for &(k, v) in table {
        if !seen.insert(k) {
            return Err(TableError::DuplicateKey(vec![k]));
        }
        if v > w.mask() {
            return Err(TableError::ValueOutOfRange(v, w.bits()));
        }
    }
    let size = table.len();
    if !size.is_power_of_two() || table.iter().any(|&(k, _)| k >= size as u64) {
        return Err(TableError::NotTotal(size));
    }
    if size.trailing_zeros() > w.bits() {
        return Err(TableError::DomainTooWide(size, w.bits()));
    }
    let mut f = vec![0u64; size];
    for &(k, v) in table {
        f[k as usize] = v;
    }
    if size == 1 {
        return Ok(Program::new(1, vec![], vec![f[0]], vec![Operand::Const(0)]));
    }

    let x = Operand::Input(0);
    let mut constants = vec![1, f[1], f[0]];
    let mut ins = vec![
        Instruction::new(Opcode::Eq, [x, Operand::Const(0)]),
        Instruction::new(Opcode::Ite, [Operand::Temp(0), Operand::Const(1), Operand::Const(2)]),
    ];
    for (k, &fk) in f.iter().enumerate().skip(2) {
        let key = constants.len();
        constants.push(k as u64);
        constants.push(fk);
        let prev = Operand::Temp(ins.len() - 1);
        ins.push(Instruction::new(Opcode::Eq, [x, Operand::Const(key)]));
        let test = Operand::Temp(ins.len() - 1);
        ins.push(Instruction::new(Opcode::Ite, [test, Operand::Const(key + 1), prev]));
    }
    let out = Operand::Temp(ins.len() - 1);
    Ok(Program::new(1, ins, constants, vec![out]))
}

/// Builds a program with `arity` inputs and one output per value component.
///
/// Totality is the caller's concern: on points missing from the table the
/// program returns the values of the first entry.
pub fn compile_function(arity: usize, table: &[(Vec<u64>, Vec<u64>)], w: WordWidth) -> Result<Program, TableError> {
    let first = table.first().ok_or(TableError::Empty)?;
    let outs = first.1.len();
    let mut seen = HashSet::new();
    for (k, v) in table {
        if k.len() != arity {
            return Err(TableError::Shape { expected: arity, found: k.len() });
        }
        if v.len() != outs {
            return Err(TableError::Shape { expected: outs, found: v.len() });
        }
        if let Some(&bad) = v.iter().find(|&&x| x > w.mask()) {
            return Err(TableError::ValueOutOfRange(bad, w.bits()));
        }
        if !seen.insert(k.clone()) {
            return Err(TableError::DuplicateKey(k.clone()));
        }
    }

    let mut constants: Vec<u64> = Vec::new();
    let intern = |v: u64, constants: &mut Vec<u64>| -> Operand {
        match constants.iter().position(|&c| c == v) {
            Some(i) => Operand::Const(i),
            None => {
                constants.push(v);
                Operand::Const(constants.len() - 1)
            }
        }
    };
    let mut ins: Vec<Instruction> = Vec::new();
    // One guard temp per non-first entry, shared by all outputs.
    let mut guards = Vec::with_capacity(table.len());
    for (key, _) in table.iter().skip(1) {
        let mut acc: Option<Operand> = None;
        for (i, &k) in key.iter().enumerate() {
            let c = intern(k, &mut constants);
            ins.push(Instruction::new(Opcode::Eq, [Operand::Input(i), c]));
            let t = Operand::Temp(ins.len() - 1);
            acc = Some(match acc {
                None => t,
                Some(a) => {
                    ins.push(Instruction::new(Opcode::And, [a, t]));
                    Operand::Temp(ins.len() - 1)
                }
            });
        }
        // A zero-arity table has only one entry, so the guard always exists here.
        guards.push(acc.expect("non-first entry of a zero-arity table"));
    }
    let mut outputs = Vec::with_capacity(outs);
    for j in 0..outs {
        let mut cur = intern(first.1[j], &mut constants);
        for (g, (_, v)) in guards.iter().zip(table.iter().skip(1)) {
            let val = intern(v[j], &mut constants);
            ins.push(Instruction::new(Opcode::Ite, [*g, val, cur]));
            cur = Operand::Temp(ins.len() - 1);
        }
        outputs.push(cur);
    }
    Ok(Program::new(arity, ins, constants, outputs))
}
