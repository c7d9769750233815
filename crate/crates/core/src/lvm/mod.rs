//! The solution language: a loop-free SSA instruction set over machine words
//! of a configurable width, and its interpreter.
//!
//! A [`Program`] is a list of instructions; every operand is either an input
//! word, the result of an earlier instruction, or an entry of the program's
//! constant table. Programs carry an explicit list of output designators, so
//! one program can compute several words.

mod table;
mod text;

pub use table::{compile_function, compile_table, max_length_bound, TableError, LENGTH_BOUND_CAP};
pub use text::{parse_program, parse_programs, print_program, print_programs, ParseProgramError};

use std::fmt;

/// Number of bits in every register and immediate of the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordWidth(u32);

impl WordWidth {
    pub const MAX_BITS: u32 = 64;

    pub fn new(bits: u32) -> Option<Self> {
        (1..=Self::MAX_BITS).contains(&bits).then_some(WordWidth(bits))
    }

    /// Panics when `bits` is outside `1..=64`.
    pub fn of(bits: u32) -> Self {
        Self::new(bits).unwrap_or_else(|| panic!("word width {bits} outside 1..=64"))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn mask(self) -> u64 {
        mask_bits(self.0)
    }

    pub fn truncate(self, v: u64) -> u64 {
        v & self.mask()
    }

    pub fn sign_bit(self) -> u64 {
        1u64 << (self.0 - 1)
    }

    /// Two's complement reading of a `self`-bit word.
    pub fn to_signed(self, v: u64) -> i64 {
        let shift = 64 - self.0;
        ((v << shift) as i64) >> shift
    }

    /// Number of distinct words, saturating at `u64::MAX`.
    pub fn domain_size(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            1u64 << self.0
        }
    }
}

impl fmt::Display for WordWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// All-ones mask of `bits` bits (`bits` may be 0 or 64).
pub fn mask_bits(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Mod,
    Min,
    Max,
    And,
    Or,
    Xor,
    Lshr,
    Ashr,
    Not,
    Le,
    Lt,
    Sle,
    Slt,
    Eq,
    Neq,
    Implies,
    Ite,
}

impl Opcode {
    /// Every opcode in enumeration order.
    pub const ALL: [Opcode; 22] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Neg,
        Opcode::Mod,
        Opcode::Min,
        Opcode::Max,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Lshr,
        Opcode::Ashr,
        Opcode::Not,
        Opcode::Le,
        Opcode::Lt,
        Opcode::Sle,
        Opcode::Slt,
        Opcode::Eq,
        Opcode::Neq,
        Opcode::Implies,
        Opcode::Ite,
    ];

    pub fn arity(self) -> usize {
        match self {
            Opcode::Neg | Opcode::Not => 1,
            Opcode::Ite => 3,
            _ => 2,
        }
    }

    /// Binary opcodes whose operands may be swapped without changing the result.
    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Opcode::Add
                | Opcode::Mul
                | Opcode::Min
                | Opcode::Max
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
                | Opcode::Eq
                | Opcode::Neq
        )
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
            Opcode::Neg => "neg",
            Opcode::Mod => "mod",
            Opcode::Min => "min",
            Opcode::Max => "max",
            Opcode::And => "and",
            Opcode::Or => "or",
            Opcode::Xor => "xor",
            Opcode::Lshr => "lshr",
            Opcode::Ashr => "ashr",
            Opcode::Not => "not",
            Opcode::Le => "le",
            Opcode::Lt => "lt",
            Opcode::Sle => "sle",
            Opcode::Slt => "slt",
            Opcode::Eq => "eq",
            Opcode::Neq => "neq",
            Opcode::Implies => "implies",
            Opcode::Ite => "ite",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| op.mnemonic() == s)
    }

    /// Position of the opcode in [`Opcode::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Where an instruction reads a value from.
///
/// The derived order (inputs, then temporaries, then constants) is the order
/// used to canonicalize commutative operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Input(usize),
    Temp(usize),
    Const(usize),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Input(i) => write!(f, "in{i}"),
            Operand::Temp(i) => write!(f, "t{i}"),
            Operand::Const(i) => write!(f, "c{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
}

impl Instruction {
    pub fn new(opcode: Opcode, operands: impl Into<Vec<Operand>>) -> Self {
        Instruction { opcode, operands: operands.into() }
    }

    /// Swaps the operands of a commutative instruction into ascending order.
    pub fn normalize(&mut self) {
        if self.opcode.is_commutative() && self.operands.len() == 2 && self.operands[1] < self.operands[0] {
            self.operands.swap(0, 1);
        }
    }

    pub fn is_normalized(&self) -> bool {
        !(self.opcode.is_commutative() && self.operands.len() == 2 && self.operands[1] < self.operands[0])
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.opcode)?;
        for op in &self.operands {
            write!(f, " {op}")?;
        }
        Ok(())
    }
}

/// A straight-line program in SSA form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub arity: usize,
    pub instructions: Vec<Instruction>,
    pub constants: Vec<u64>,
    pub outputs: Vec<Operand>,
}

/// A well-formedness problem found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ArityMismatch { instruction: usize, expected: usize, found: usize },
    ForwardReference { instruction: usize, temp: usize },
    InputOutOfRange { instruction: Option<usize>, input: usize },
    ConstOutOfRange { instruction: Option<usize>, constant: usize },
    OutputOutOfRange { temp: usize },
    NoOutputs,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |i: &Option<usize>| match i {
            Some(i) => format!("instruction {i}"),
            None => "outputs".to_string(),
        };
        match self {
            Violation::ArityMismatch { instruction, expected, found } => {
                write!(f, "arity mismatch at instruction {instruction}: expected {expected} operands, found {found}")
            }
            Violation::ForwardReference { instruction, temp } => {
                write!(f, "forward/self reference at instruction {instruction}: t{temp}")
            }
            Violation::InputOutOfRange { instruction, input } => {
                write!(f, "input in{input} out of range at {}", at(instruction))
            }
            Violation::ConstOutOfRange { instruction, constant } => {
                write!(f, "constant c{constant} out of range at {}", at(instruction))
            }
            Violation::OutputOutOfRange { temp } => write!(f, "output t{temp} does not exist"),
            Violation::NoOutputs => f.write_str("program has no outputs"),
        }
    }
}

/// Returns every SSA, arity and index violation of `p`; empty iff `p` is well formed.
pub fn validate(p: &Program) -> Vec<Violation> {
    let mut out = Vec::new();
    let check = |op: &Operand, instruction: Option<usize>, temps: usize, out: &mut Vec<Violation>| match *op {
        Operand::Input(i) if i >= p.arity => out.push(Violation::InputOutOfRange { instruction, input: i }),
        Operand::Const(c) if c >= p.constants.len() => {
            out.push(Violation::ConstOutOfRange { instruction, constant: c })
        }
        Operand::Temp(t) if t >= temps => match instruction {
            Some(i) => out.push(Violation::ForwardReference { instruction: i, temp: t }),
            None => out.push(Violation::OutputOutOfRange { temp: t }),
        },
        _ => {}
    };
    for (i, ins) in p.instructions.iter().enumerate() {
        if ins.operands.len() != ins.opcode.arity() {
            out.push(Violation::ArityMismatch {
                instruction: i,
                expected: ins.opcode.arity(),
                found: ins.operands.len(),
            });
        }
        for op in &ins.operands {
            check(op, Some(i), i, &mut out);
        }
    }
    if p.outputs.is_empty() {
        out.push(Violation::NoOutputs);
    }
    for op in &p.outputs {
        check(op, None, p.instructions.len(), &mut out);
    }
    out
}

/// Semantics of a single opcode at width `w`. Unused operands are ignored.
pub fn eval_instruction(op: Opcode, a: u64, b: u64, c: u64, w: WordWidth) -> u64 {
    let mask = w.mask();
    let bits = w.bits() as u64;
    let flag = |b: bool| b as u64;
    match op {
        Opcode::Add => a.wrapping_add(b) & mask,
        Opcode::Sub => a.wrapping_sub(b) & mask,
        Opcode::Mul => a.wrapping_mul(b) & mask,
        Opcode::Div => a.checked_div(b).unwrap_or(mask),
        Opcode::Neg => a.wrapping_neg() & mask,
        Opcode::Mod => {
            if b == 0 {
                a
            } else {
                a % b
            }
        }
        Opcode::Min => a.min(b),
        Opcode::Max => a.max(b),
        Opcode::And => a & b,
        Opcode::Or => a | b,
        Opcode::Xor => a ^ b,
        Opcode::Lshr => {
            if b >= bits {
                0
            } else {
                a >> b
            }
        }
        Opcode::Ashr => {
            let s = w.to_signed(a);
            let amount = b.min(bits - 1);
            ((s >> amount) as u64) & mask
        }
        Opcode::Not => !a & mask,
        Opcode::Le => flag(a <= b),
        Opcode::Lt => flag(a < b),
        Opcode::Sle => flag(w.to_signed(a) <= w.to_signed(b)),
        Opcode::Slt => flag(w.to_signed(a) < w.to_signed(b)),
        Opcode::Eq => flag(a == b),
        Opcode::Neq => flag(a != b),
        Opcode::Implies => flag(a == 0 || b != 0),
        Opcode::Ite => {
            if a != 0 {
                b
            } else {
                c
            }
        }
    }
}

impl Program {
    pub fn new(arity: usize, instructions: Vec<Instruction>, constants: Vec<u64>, outputs: Vec<Operand>) -> Self {
        Program { arity, instructions, constants, outputs }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Runs the instructions, leaving one value per instruction in `temps`.
    ///
    /// The program must be valid; inputs are truncated to `w`.
    pub fn run_into(&self, inputs: &[u64], w: WordWidth, temps: &mut Vec<u64>) {
        temps.clear();
        let mask = w.mask();
        for ins in &self.instructions {
            let mut vals = [0u64; 3];
            for (slot, op) in vals.iter_mut().zip(&ins.operands) {
                *slot = self.read(*op, inputs, temps, mask);
            }
            temps.push(eval_instruction(ins.opcode, vals[0], vals[1], vals[2], w));
        }
    }

    #[inline]
    fn read(&self, op: Operand, inputs: &[u64], temps: &[u64], mask: u64) -> u64 {
        match op {
            Operand::Input(i) => inputs[i] & mask,
            Operand::Temp(t) => temps[t],
            Operand::Const(c) => self.constants[c] & mask,
        }
    }

    /// Value of output `k` after [`Program::run_into`] filled `temps`.
    pub fn output_from(&self, k: usize, inputs: &[u64], temps: &[u64], w: WordWidth) -> u64 {
        self.read(self.outputs[k], inputs, temps, w.mask())
    }

    /// Evaluates just output `k`, reusing `scratch` for temporaries.
    pub fn eval_output(&self, k: usize, inputs: &[u64], w: WordWidth, scratch: &mut Vec<u64>) -> u64 {
        self.run_into(inputs, w, scratch);
        self.output_from(k, inputs, scratch, w)
    }

    /// True when some operand reads the constant table.
    pub fn uses_constants(&self) -> bool {
        self.instructions
            .iter()
            .flat_map(|i| i.operands.iter())
            .chain(&self.outputs)
            .any(|op| matches!(op, Operand::Const(_)))
    }

    /// Copy of the program with commutative operands in ascending order.
    pub fn normalized(&self) -> Program {
        let mut p = self.clone();
        for ins in &mut p.instructions {
            ins.normalize();
        }
        p
    }

    /// `live[i]` is true when instruction `i` contributes to some output.
    pub fn live_instructions(&self) -> Vec<bool> {
        let mut live = vec![false; self.instructions.len()];
        for op in &self.outputs {
            if let Operand::Temp(t) = *op {
                live[t] = true;
            }
        }
        for i in (0..self.instructions.len()).rev() {
            if !live[i] {
                continue;
            }
            for op in &self.instructions[i].operands {
                if let Operand::Temp(t) = *op {
                    live[t] = true;
                }
            }
        }
        live
    }
}

/// Runs `p` on `inputs` at width `w` and returns one word per output designator.
///
/// `p` must satisfy [`validate`] and `inputs.len()` must equal `p.arity`.
pub fn exec(p: &Program, inputs: &[u64], w: WordWidth) -> Vec<u64> {
    debug_assert_eq!(inputs.len(), p.arity);
    let mut temps = Vec::with_capacity(p.instructions.len());
    p.run_into(inputs, w, &mut temps);
    (0..p.outputs.len()).map(|k| p.output_from(k, inputs, &temps, w)).collect()
}
