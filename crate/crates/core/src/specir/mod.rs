//! Specifications: second-order existential problems over bitvectors.
//!
//! A specification declares unknown functions, a first-order quantifier
//! prefix and a quantifier-free body. [`parse_spec`] reads the text form,
//! [`skolemize`] turns it into a [`SpecProblem`] with universals only, and
//! [`CompiledSpec`] evaluates the body against candidate programs.

mod eval;
mod lexer;
mod parser;
mod print;
mod skolem;

pub use eval::{enumerate_domain, eval_sigma, CompiledSpec, DomainError, DomainIter, EvalError, Node, NodeId, Scratch};
pub use parser::{parse_expr, parse_spec};
pub use print::{print_expr, print_spec};
pub use skolem::skolemize;

use crate::lvm::{eval_instruction, Opcode, WordWidth};
use std::fmt;
use thiserror::Error;

/// Signature of an unknown function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnknownSig {
    pub name: String,
    pub in_arity: usize,
    pub out_arity: usize,
    /// Results are truncated to this many bits (scaled with the word width).
    /// Set for Skolem functions of narrow existentials.
    pub result_width: Option<u32>,
}

impl UnknownSig {
    pub fn new(name: impl Into<String>, in_arity: usize, out_arity: usize) -> Self {
        UnknownSig { name: name.into(), in_arity, out_arity, result_width: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    /// Logical negation, `!`.
    Not,
    /// Bitwise complement, `~`.
    BitNot,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    UDiv,
    URem,
    And,
    Or,
    Xor,
    Shl,
    LShr,
    AShr,
    Min,
    Max,
    Eq,
    Ne,
    Ult,
    Ule,
    Ugt,
    Uge,
    Slt,
    Sle,
    Sgt,
    Sge,
    LAnd,
    LOr,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::UDiv => "/u",
            BinOp::URem => "%u",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Shl => "<<",
            BinOp::LShr => ">>u",
            BinOp::AShr => ">>s",
            BinOp::Min => "min",
            BinOp::Max => "max",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Ult => "<u",
            BinOp::Ule => "<=u",
            BinOp::Ugt => ">u",
            BinOp::Uge => ">=u",
            BinOp::Slt => "<s",
            BinOp::Sle => "<=s",
            BinOp::Sgt => ">s",
            BinOp::Sge => ">=s",
            BinOp::LAnd => "&&",
            BinOp::LOr => "||",
            BinOp::Implies => "=>",
        }
    }

    pub fn eval(self, a: u64, b: u64, w: WordWidth) -> u64 {
        let l = |op| eval_instruction(op, a, b, 0, w);
        let r = |op| eval_instruction(op, b, a, 0, w);
        match self {
            BinOp::Add => l(Opcode::Add),
            BinOp::Sub => l(Opcode::Sub),
            BinOp::Mul => l(Opcode::Mul),
            BinOp::UDiv => l(Opcode::Div),
            BinOp::URem => l(Opcode::Mod),
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Shl => {
                if b >= w.bits() as u64 {
                    0
                } else {
                    (a << b) & w.mask()
                }
            }
            BinOp::LShr => l(Opcode::Lshr),
            BinOp::AShr => l(Opcode::Ashr),
            BinOp::Min => a.min(b),
            BinOp::Max => a.max(b),
            BinOp::Eq => (a == b) as u64,
            BinOp::Ne => (a != b) as u64,
            BinOp::Ult => l(Opcode::Lt),
            BinOp::Ule => l(Opcode::Le),
            BinOp::Ugt => r(Opcode::Lt),
            BinOp::Uge => r(Opcode::Le),
            BinOp::Slt => l(Opcode::Slt),
            BinOp::Sle => l(Opcode::Sle),
            BinOp::Sgt => r(Opcode::Slt),
            BinOp::Sge => r(Opcode::Sle),
            BinOp::LAnd => (a != 0 && b != 0) as u64,
            BinOp::LOr => (a != 0 || b != 0) as u64,
            BinOp::Implies => (a == 0 || b != 0) as u64,
        }
    }
}

impl UnOp {
    pub fn eval(self, a: u64, w: WordWidth) -> u64 {
        match self {
            UnOp::Not => (a == 0) as u64,
            UnOp::BitNot => !a & w.mask(),
            UnOp::Neg => a.wrapping_neg() & w.mask(),
        }
    }
}

/// Body expressions. Evaluation is untyped: every node yields a word, and
/// boolean positions read any nonzero word as true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// Reduced modulo 2^w at evaluation time.
    Lit(u64),
    /// The current word width, as a number.
    Width,
    Var(String),
    Apply { name: String, args: Vec<Expr>, index: usize },
    Un(UnOp, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn apply(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Apply { name: name.into(), args, index: 0 }
    }

    pub fn apply_k(name: impl Into<String>, args: Vec<Expr>, index: usize) -> Expr {
        Expr::Apply { name: name.into(), args, index }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn un(op: UnOp, a: Expr) -> Expr {
        Expr::Un(op, Box::new(a))
    }

    pub fn ite(c: Expr, a: Expr, b: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::LAnd, a, b)
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::LOr, a, b)
    }

    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Implies, a, b)
    }

    pub fn not(a: Expr) -> Expr {
        Expr::un(UnOp::Not, a)
    }

    /// Conjunction of all items; `Lit(1)` when empty.
    pub fn all(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::and).unwrap_or(Expr::Lit(1))
    }

    /// Replaces every `Var` for which `f` returns `Some`.
    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Expr::Lit(_) | Expr::Width => self.clone(),
            Expr::Apply { name, args, index } => Expr::Apply {
                name: name.clone(),
                args: args.iter().map(|a| a.substitute(f)).collect(),
                index: *index,
            },
            Expr::Un(op, a) => Expr::un(*op, a.substitute(f)),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.substitute(f), b.substitute(f)),
            Expr::Ite(c, a, b) => Expr::ite(c.substitute(f), a.substitute(f), b.substitute(f)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Width | Expr::Var(_) => 1,
            Expr::Apply { args, .. } => 1 + args.iter().map(Expr::size).sum::<usize>(),
            Expr::Un(_, a) => 1 + a.size(),
            Expr::Bin(_, a, b) => 1 + a.size() + b.size(),
            Expr::Ite(c, a, b) => 1 + c.size() + a.size() + b.size(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binder {
    pub quantifier: Quantifier,
    pub name: String,
    pub width: u32,
}

/// A specification as written: unknowns, first-order prefix, body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSpec {
    pub unknowns: Vec<UnknownSig>,
    pub prefix: Vec<Binder>,
    pub body: Expr,
}

/// A universally quantified problem: find programs for `unknowns` such that
/// `body` holds on every assignment of `universals`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecProblem {
    pub unknowns: Vec<UnknownSig>,
    /// Names with declared widths, in quantifier order.
    pub universals: Vec<(String, u32)>,
    pub body: Expr,
    pub input_bits: u32,
}

impl SpecProblem {
    pub fn new(unknowns: Vec<UnknownSig>, universals: Vec<(String, u32)>, body: Expr) -> Self {
        let input_bits = universals.iter().map(|(_, w)| *w).sum();
        SpecProblem { unknowns, universals, body, input_bits }
    }

    /// Widest declared variable or Skolem result, at least 1.
    pub fn default_target_width(&self) -> WordWidth {
        let vars = self.universals.iter().map(|(_, w)| *w);
        let results = self.unknowns.iter().filter_map(|u| u.result_width);
        WordWidth::of(vars.chain(results).max().unwrap_or(1).clamp(1, 64))
    }

    /// Input bits at lattice width `w`, where each variable has `min(k, w)` bits.
    pub fn input_bits_at(&self, w: WordWidth) -> u32 {
        self.universals.iter().map(|(_, k)| (*k).min(w.bits())).sum()
    }

    pub fn unknown(&self, name: &str) -> Option<&UnknownSig> {
        self.unknowns.iter().find(|u| u.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: `{name}` takes {expected} argument(s), found {found}")]
    Arity { line: usize, col: usize, name: String, expected: usize, found: usize },
    #[error("{line}:{col}: `{name}` has {out_arity} result(s), index {index} is out of range")]
    ResultIndex { line: usize, col: usize, name: String, out_arity: usize, index: usize },
    #[error("{line}:{col}: undeclared identifier `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` declared twice")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: width {width} outside 1..=64")]
    Width { line: usize, col: usize, width: u64 },
}

impl SpecError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        SpecError::Syntax { line, col, msg: msg.into() }
    }
}
