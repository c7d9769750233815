//! Line-oriented text serialization of programs.
//!
//! ```text
//! arity 1
//! width 8
//! consts 1
//! t0 := not in0
//! t1 := add t0 c0
//! t2 := and in0 t1
//! outputs t2
//! ```
//!
//! Several programs can share one file, each block introduced by
//! `program NAME`. Blank lines and `#` comments are ignored.

use super::{validate, Instruction, Opcode, Operand, Program, WordWidth};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseProgramError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseProgramError> {
    Err(ParseProgramError { line, msg: msg.into() })
}

pub fn print_program(p: &Program, width: Option<WordWidth>) -> String {
    let mut s = String::new();
    write_body(&mut s, p, width);
    s
}

fn write_body(s: &mut String, p: &Program, width: Option<WordWidth>) {
    let _ = writeln!(s, "arity {}", p.arity);
    if let Some(w) = width {
        let _ = writeln!(s, "width {w}");
    }
    if p.constants.is_empty() {
        s.push_str("consts\n");
    } else {
        let cs: Vec<String> = p.constants.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "consts {}", cs.join(","));
    }
    for (i, ins) in p.instructions.iter().enumerate() {
        let _ = writeln!(s, "t{i} := {ins}");
    }
    let outs: Vec<String> = p.outputs.iter().map(Operand::to_string).collect();
    let _ = writeln!(s, "outputs {}", outs.join(","));
}

/// Prints named programs as consecutive `program NAME` blocks.
pub fn print_programs<'a>(progs: impl IntoIterator<Item = (&'a str, &'a Program)>, width: Option<WordWidth>) -> String {
    let mut s = String::new();
    for (name, p) in progs {
        let _ = writeln!(s, "program {name}");
        write_body(&mut s, p, width);
    }
    s
}

fn parse_operand(tok: &str, line: usize) -> Result<Operand, ParseProgramError> {
    let num = |rest: &str| rest.parse::<usize>().ok();
    let parsed = if let Some(r) = tok.strip_prefix("in") {
        num(r).map(Operand::Input)
    } else if let Some(r) = tok.strip_prefix('t') {
        num(r).map(Operand::Temp)
    } else if let Some(r) = tok.strip_prefix('c') {
        num(r).map(Operand::Const)
    } else {
        None
    };
    match parsed {
        Some(op) => Ok(op),
        None => err(line, format!("bad operand `{tok}`")),
    }
}

/// Meaningful lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

struct Block {
    arity: Option<usize>,
    width: Option<WordWidth>,
    consts: Option<Vec<u64>>,
    instructions: Vec<Instruction>,
    outputs: Option<Vec<Operand>>,
}

impl Block {
    fn new() -> Self {
        Block { arity: None, width: None, consts: None, instructions: Vec::new(), outputs: None }
    }

    fn feed(&mut self, line: usize, l: &str) -> Result<(), ParseProgramError> {
        if self.outputs.is_some() {
            return err(line, "content after `outputs`");
        }
        let (head, rest) = match l.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (l, ""),
        };
        match head {
            "arity" => {
                if self.arity.is_some() {
                    return err(line, "duplicate `arity`");
                }
                self.arity = Some(rest.parse().or_else(|_| err(line, format!("bad arity `{rest}`")))?);
            }
            "width" => {
                let w = rest.parse::<u32>().ok().and_then(WordWidth::new);
                match w {
                    Some(w) => self.width = Some(w),
                    None => return err(line, format!("bad width `{rest}`")),
                }
            }
            "consts" => {
                if !self.instructions.is_empty() {
                    return err(line, "`consts` after instructions");
                }
                let mut cs = Vec::new();
                for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    cs.push(tok.parse::<u64>().or_else(|_| err(line, format!("bad constant `{tok}`")))?);
                }
                self.consts = Some(cs);
            }
            "outputs" => {
                let outs = rest
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_operand(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                self.outputs = Some(outs);
            }
            _ => {
                let Some((lhs, rhs)) = l.split_once(":=") else {
                    return err(line, format!("unrecognized line `{l}`"));
                };
                let expected = format!("t{}", self.instructions.len());
                if lhs.trim() != expected {
                    return err(line, format!("expected `{expected}`, found `{}`", lhs.trim()));
                }
                let mut toks = rhs.split_whitespace();
                let mn = toks.next().unwrap_or("");
                let opcode = Opcode::from_mnemonic(mn).map_or_else(|| err(line, format!("unknown opcode `{mn}`")), Ok)?;
                let operands = toks.map(|t| parse_operand(t, line)).collect::<Result<Vec<_>, _>>()?;
                self.instructions.push(Instruction::new(opcode, operands));
            }
        }
        Ok(())
    }

    fn finish(self, line: usize) -> Result<(Program, Option<WordWidth>), ParseProgramError> {
        let Some(arity) = self.arity else { return err(line, "missing `arity`") };
        let Some(outputs) = self.outputs else { return err(line, "missing `outputs`") };
        let p = Program::new(arity, self.instructions, self.consts.unwrap_or_default(), outputs);
        if let Some(v) = validate(&p).first() {
            return err(line, format!("ill-formed program: {v}"));
        }
        if let Some(w) = self.width {
            if let Some(c) = p.constants.iter().find(|&&c| c > w.mask()) {
                return err(line, format!("constant {c} exceeds width {w}"));
            }
        }
        Ok((p, self.width))
    }
}

/// Parses a single program, which must pass [`validate`].
pub fn parse_program(text: &str) -> Result<(Program, Option<WordWidth>), ParseProgramError> {
    let mut b = Block::new();
    let mut last = 0;
    for (n, l) in lines(text) {
        b.feed(n, l)?;
        last = n;
    }
    b.finish(last)
}

/// Parses a file of `program NAME` blocks. All blocks must agree on `width`
/// where they state one.
pub fn parse_programs(text: &str) -> Result<(Vec<(String, Program)>, Option<WordWidth>), ParseProgramError> {
    let mut out = Vec::new();
    let mut width: Option<WordWidth> = None;
    let mut current: Option<(String, Block)> = None;
    let mut last = 0;
    let mut close = |cur: Option<(String, Block)>, line: usize, out: &mut Vec<(String, Program)>| {
        if let Some((name, b)) = cur {
            let (p, w) = b.finish(line)?;
            if let Some(w) = w {
                if width.is_some_and(|prev| prev != w) {
                    return err(line, "programs disagree on `width`");
                }
                width = Some(w);
            }
            if out.iter().any(|(n, _)| *n == name) {
                return err(line, format!("duplicate program `{name}`"));
            }
            out.push((name, p));
        }
        Ok(())
    };
    for (n, l) in lines(text) {
        if let Some(name) = l.strip_prefix("program ") {
            close(current.take(), n, &mut out)?;
            current = Some((name.trim().to_string(), Block::new()));
        } else {
            match current.as_mut() {
                Some((_, b)) => b.feed(n, l)?,
                None => return err(n, "expected `program NAME`"),
            }
        }
        last = n;
    }
    close(current, last, &mut out)?;
    Ok((out, width))
}
