//! And-inverter circuits with structural hashing and constant folding, plus
//! word-level operators that mirror the interpreter semantics bit for bit.
//!
//! Literals are `2 * var + negated`; variable 0 is the constant false, so
//! [`FALSE`] is 0 and [`TRUE`] is 1. Words are little-endian literal vectors.

mod sat;

pub use sat::{SatSolver, SolveStatus};

use crate::lvm::{Opcode, Operand, Program, WordWidth};
use crate::specir::{BinOp, CompiledSpec, Node, UnOp};
use std::collections::HashMap;

pub type Lit = u32;
pub const FALSE: Lit = 0;
pub const TRUE: Lit = 1;

pub type Word = Vec<Lit>;

#[inline]
pub fn not(a: Lit) -> Lit {
    a ^ 1
}

#[inline]
pub fn var_of(a: Lit) -> u32 {
    a >> 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    False,
    Input,
    And(Lit, Lit),
}

#[derive(Clone, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    strash: HashMap<(Lit, Lit), Lit>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub fn new() -> Self {
        Circuit { gates: vec![Gate::False], strash: HashMap::new() }
    }

    pub fn gate(&self, var: u32) -> Gate {
        self.gates[var as usize]
    }

    pub fn num_vars(&self) -> usize {
        self.gates.len()
    }

    pub fn input(&mut self) -> Lit {
        self.gates.push(Gate::Input);
        ((self.gates.len() - 1) as Lit) << 1
    }

    pub fn input_word(&mut self, bits: u32) -> Word {
        (0..bits).map(|_| self.input()).collect()
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == FALSE || a == not(b) {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if let Some(&l) = self.strash.get(&(a, b)) {
            return l;
        }
        self.gates.push(Gate::And(a, b));
        let l = ((self.gates.len() - 1) as Lit) << 1;
        self.strash.insert((a, b), l);
        l
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        not(self.and(not(a), not(b)))
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE {
            return b;
        }
        if b == FALSE {
            return a;
        }
        if a == TRUE {
            return not(b);
        }
        if b == TRUE {
            return not(a);
        }
        let x = self.and(a, not(b));
        let y = self.and(not(a), b);
        self.or(x, y)
    }

    pub fn mux(&mut self, s: Lit, a: Lit, b: Lit) -> Lit {
        if s == TRUE || a == b {
            return a;
        }
        if s == FALSE {
            return b;
        }
        let x = self.and(s, a);
        let y = self.and(not(s), b);
        self.or(x, y)
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(TRUE, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(FALSE, |acc, l| self.or(acc, l))
    }

    /// True iff exactly one of `lits` is true.
    pub fn exactly_one(&mut self, lits: &[Lit]) -> Lit {
        // Sequential: `seen` = some earlier literal set, `bad` = two set.
        let (mut seen, mut bad) = (FALSE, FALSE);
        for &l in lits {
            let both = self.and(seen, l);
            bad = self.or(bad, both);
            seen = self.or(seen, l);
        }
        self.and(seen, not(bad))
    }

    // ---- words ----

    pub fn constant(&self, v: u64, bits: u32) -> Word {
        (0..bits).map(|i| if v >> i & 1 == 1 { TRUE } else { FALSE }).collect()
    }

    /// Value of a word whose literals are all constant.
    pub fn const_value(w: &[Lit]) -> Option<u64> {
        let mut v = 0u64;
        for (i, &l) in w.iter().enumerate() {
            match l {
                TRUE => v |= 1 << i,
                FALSE => {}
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn bool_word(&self, b: Lit, bits: u32) -> Word {
        let mut w = vec![FALSE; bits as usize];
        w[0] = b;
        w
    }

    pub fn nonzero(&mut self, a: &[Lit]) -> Lit {
        self.or_all(a.iter().copied())
    }

    pub fn bitwise(&mut self, a: &[Lit], b: &[Lit], f: fn(&mut Circuit, Lit, Lit) -> Lit) -> Word {
        a.iter().zip(b).map(|(&x, &y)| f(self, x, y)).collect()
    }

    pub fn not_word(&self, a: &[Lit]) -> Word {
        a.iter().map(|&x| not(x)).collect()
    }

    pub fn mux_word(&mut self, s: Lit, a: &[Lit], b: &[Lit]) -> Word {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    /// `a + b + carry`, returning the sum and the carry out.
    fn add_carry(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> (Word, Lit) {
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let t = self.xor(x, y);
            out.push(self.xor(t, carry));
            let g = self.and(x, y);
            let p = self.and(t, carry);
            carry = self.or(g, p);
        }
        (out, carry)
    }

    pub fn add(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        self.add_carry(a, b, FALSE).0
    }

    pub fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let nb = self.not_word(b);
        self.add_carry(a, &nb, TRUE).0
    }

    pub fn neg(&mut self, a: &[Lit]) -> Word {
        let zero = vec![FALSE; a.len()];
        self.sub(&zero, a)
    }

    pub fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let n = a.len();
        let mut acc = vec![FALSE; n];
        for (i, &bi) in b.iter().enumerate() {
            let mut partial = vec![FALSE; n];
            for j in 0..n - i {
                partial[i + j] = self.and(a[j], bi);
            }
            acc = self.add(&acc, &partial);
        }
        acc
    }

    /// Unsigned `a < b`.
    pub fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        // a - b borrows iff a < b: carry out of a + ~b + 1 is 0.
        let nb = self.not_word(b);
        let (_, carry) = self.add_carry(a, &nb, TRUE);
        not(carry)
    }

    pub fn ule(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        not(self.ult(b, a))
    }

    /// Signed `a < b`: flip the sign bits and compare unsigned.
    pub fn slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        let top = a.len() - 1;
        a[top] = not(a[top]);
        b[top] = not(b[top]);
        self.ult(&a, &b)
    }

    pub fn sle(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        not(self.slt(b, a))
    }

    pub fn eq(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let diffs: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect();
        not(self.or_all(diffs))
    }

    /// Restoring division; a zero divisor yields all-ones and remainder `a`.
    pub fn udiv_urem(&mut self, a: &[Lit], b: &[Lit]) -> (Word, Word) {
        let n = a.len();
        let mut rem = vec![FALSE; n];
        let mut quo = vec![FALSE; n];
        for i in (0..n).rev() {
            // rem = (rem << 1) | a[i], tracking the bit shifted out.
            let overflow = rem[n - 1];
            let mut shifted = Vec::with_capacity(n);
            shifted.push(a[i]);
            shifted.extend_from_slice(&rem[..n - 1]);
            let lt = self.ult(&shifted, b);
            let ge = self.or(overflow, not(lt));
            let diff = self.sub(&shifted, b);
            rem = self.mux_word(ge, &diff, &shifted);
            quo[i] = ge;
        }
        (quo, rem)
    }

    /// Shift by a variable amount; amounts `>= len` give `fill` everywhere.
    fn shift(&mut self, a: &[Lit], b: &[Lit], left: bool, fill: Lit) -> Word {
        let n = a.len();
        let mut cur = a.to_vec();
        let stages = (usize::BITS - (n - 1).leading_zeros()) as usize;
        for (k, &bit) in b.iter().enumerate().take(stages) {
            let dist = 1usize << k;
            let moved: Word = (0..n)
                .map(|i| {
                    if left {
                        if i >= dist {
                            cur[i - dist]
                        } else {
                            FALSE
                        }
                    } else if i + dist < n {
                        cur[i + dist]
                    } else {
                        fill
                    }
                })
                .collect();
            cur = self.mux_word(bit, &moved, &cur);
        }
        // Amounts >= n overflow; n always fits in the amount's width.
        let n_word = self.constant(n as u64, b.len() as u32);
        let over = not(self.ult(b, &n_word));
        let filled = vec![fill; n];
        self.mux_word(over, &filled, &cur)
    }

    pub fn shl(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        self.shift(a, b, true, FALSE)
    }

    pub fn lshr(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        self.shift(a, b, false, FALSE)
    }

    pub fn ashr(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let sign = a[a.len() - 1];
        self.shift(a, b, false, sign)
    }

    /// Word-level semantics of one instruction, matching `lvm::eval_instruction`.
    pub fn opcode(&mut self, op: Opcode, a: &[Lit], b: &[Lit], c: &[Lit]) -> Word {
        let bits = a.len() as u32;
        match op {
            Opcode::Add => self.add(a, b),
            Opcode::Sub => self.sub(a, b),
            Opcode::Mul => self.mul(a, b),
            Opcode::Div => self.udiv_urem(a, b).0,
            Opcode::Mod => self.udiv_urem(a, b).1,
            Opcode::Neg => self.neg(a),
            Opcode::Min => {
                let lt = self.ult(a, b);
                self.mux_word(lt, a, b)
            }
            Opcode::Max => {
                let lt = self.ult(a, b);
                self.mux_word(lt, b, a)
            }
            Opcode::And => self.bitwise(a, b, Circuit::and),
            Opcode::Or => self.bitwise(a, b, Circuit::or),
            Opcode::Xor => self.bitwise(a, b, Circuit::xor),
            Opcode::Lshr => self.lshr(a, b),
            Opcode::Ashr => self.ashr(a, b),
            Opcode::Not => self.not_word(a),
            Opcode::Le => {
                let r = self.ule(a, b);
                self.bool_word(r, bits)
            }
            Opcode::Lt => {
                let r = self.ult(a, b);
                self.bool_word(r, bits)
            }
            Opcode::Sle => {
                let r = self.sle(a, b);
                self.bool_word(r, bits)
            }
            Opcode::Slt => {
                let r = self.slt(a, b);
                self.bool_word(r, bits)
            }
            Opcode::Eq => {
                let r = self.eq(a, b);
                self.bool_word(r, bits)
            }
            Opcode::Neq => {
                let r = self.eq(a, b);
                self.bool_word(not(r), bits)
            }
            Opcode::Implies => {
                let za = self.nonzero(a);
                let nb = self.nonzero(b);
                let r = self.or(not(za), nb);
                self.bool_word(r, bits)
            }
            Opcode::Ite => {
                let s = self.nonzero(a);
                self.mux_word(s, b, c)
            }
        }
    }

    /// Word-level semantics of a spec operator, matching `BinOp::eval`.
    pub fn binop(&mut self, op: BinOp, a: &[Lit], b: &[Lit]) -> Word {
        let bits = a.len() as u32;
        let flag = |c: &mut Circuit, l: Lit| c.bool_word(l, bits);
        match op {
            BinOp::Add => self.opcode(Opcode::Add, a, b, &[]),
            BinOp::Sub => self.opcode(Opcode::Sub, a, b, &[]),
            BinOp::Mul => self.opcode(Opcode::Mul, a, b, &[]),
            BinOp::UDiv => self.opcode(Opcode::Div, a, b, &[]),
            BinOp::URem => self.opcode(Opcode::Mod, a, b, &[]),
            BinOp::And => self.opcode(Opcode::And, a, b, &[]),
            BinOp::Or => self.opcode(Opcode::Or, a, b, &[]),
            BinOp::Xor => self.opcode(Opcode::Xor, a, b, &[]),
            BinOp::Shl => self.shl(a, b),
            BinOp::LShr => self.lshr(a, b),
            BinOp::AShr => self.ashr(a, b),
            BinOp::Min => self.opcode(Opcode::Min, a, b, &[]),
            BinOp::Max => self.opcode(Opcode::Max, a, b, &[]),
            BinOp::Eq => self.opcode(Opcode::Eq, a, b, &[]),
            BinOp::Ne => self.opcode(Opcode::Neq, a, b, &[]),
            BinOp::Ult => self.opcode(Opcode::Lt, a, b, &[]),
            BinOp::Ule => self.opcode(Opcode::Le, a, b, &[]),
            BinOp::Ugt => self.opcode(Opcode::Lt, b, a, &[]),
            BinOp::Uge => self.opcode(Opcode::Le, b, a, &[]),
            BinOp::Slt => self.opcode(Opcode::Slt, a, b, &[]),
            BinOp::Sle => self.opcode(Opcode::Sle, a, b, &[]),
            BinOp::Sgt => self.opcode(Opcode::Slt, b, a, &[]),
            BinOp::Sge => self.opcode(Opcode::Sle, b, a, &[]),
            BinOp::LAnd => {
                let x = self.nonzero(a);
                let y = self.nonzero(b);
                let r = self.and(x, y);
                flag(self, r)
            }
            BinOp::LOr => {
                let x = self.nonzero(a);
                let y = self.nonzero(b);
                let r = self.or(x, y);
                flag(self, r)
            }
            BinOp::Implies => self.opcode(Opcode::Implies, a, b, &[]),
        }
    }

    pub fn unop(&mut self, op: UnOp, a: &[Lit]) -> Word {
        match op {
            UnOp::Not => {
                let nz = self.nonzero(a);
                self.bool_word(not(nz), a.len() as u32)
            }
            UnOp::BitNot => self.not_word(a),
            UnOp::Neg => self.neg(a),
        }
    }

    /// Evaluates `lit` given values for input variables (missing inputs are false).
    pub fn eval(&self, lit: Lit, inputs: &HashMap<u32, bool>) -> bool {
        let mut memo: HashMap<u32, bool> = HashMap::new();
        self.eval_var(var_of(lit), inputs, &mut memo) ^ (lit & 1 == 1)
    }

    fn eval_var(&self, v: u32, inputs: &HashMap<u32, bool>, memo: &mut HashMap<u32, bool>) -> bool {
        // Iterative post-order to survive deep multiplier cones.
        let mut stack = vec![v];
        while let Some(&top) = stack.last() {
            if memo.contains_key(&top) {
                stack.pop();
                continue;
            }
            match self.gates[top as usize] {
                Gate::False => {
                    memo.insert(top, false);
                    stack.pop();
                }
                Gate::Input => {
                    memo.insert(top, inputs.get(&top).copied().unwrap_or(false));
                    stack.pop();
                }
                Gate::And(a, b) => match (memo.get(&var_of(a)), memo.get(&var_of(b))) {
                    (Some(&x), Some(&y)) => {
                        let r = (x ^ (a & 1 == 1)) && (y ^ (b & 1 == 1));
                        memo.insert(top, r);
                        stack.pop();
                    }
                    (xa, xb) => {
                        if xa.is_none() {
                            stack.push(var_of(a));
                        }
                        if xb.is_none() {
                            stack.push(var_of(b));
                        }
                    }
                },
            }
        }
        memo[&v]
    }
}

/// Encodes a fixed program applied to `args`; one word per output.
pub fn encode_program(c: &mut Circuit, p: &Program, args: &[Word], w: WordWidth) -> Vec<Word> {
    let bits = w.bits();
    let consts: Vec<Word> = p.constants.iter().map(|&v| c.constant(v & w.mask(), bits)).collect();
    let mut temps: Vec<Word> = Vec::with_capacity(p.instructions.len());
    let read = |op: &Operand, temps: &[Word]| -> Word {
        match *op {
            Operand::Input(i) => args[i].clone(),
            Operand::Temp(t) => temps[t].clone(),
            Operand::Const(k) => consts[k].clone(),
        }
    };
    for ins in &p.instructions {
        let mut ops: Vec<Word> = ins.operands.iter().map(|o| read(o, &temps)).collect();
        ops.resize(3, vec![FALSE; bits as usize]);
        let r = c.opcode(ins.opcode, &ops[0], &ops[1], &ops[2]);
        temps.push(r);
    }
    p.outputs.iter().map(|o| read(o, &temps)).collect()
}

/// Encodes the body of `spec` at width `w` and returns the literal "body is true".
///
/// `vars` holds one `w`-bit word per variable. `call` encodes unknown `u`
/// applied to argument words and returns its output words; results are
/// masked here. Each distinct call site is encoded once.
pub fn encode_body(
    c: &mut Circuit,
    spec: &CompiledSpec,
    w: WordWidth,
    vars: &[Word],
    call: &mut dyn FnMut(&mut Circuit, usize, &[Word]) -> Vec<Word>,
) -> Lit {
    let bits = w.bits();
    let mut vals: Vec<Word> = Vec::with_capacity(spec.nodes.len());
    let mut calls: Vec<Option<Vec<Word>>> = vec![None; spec.calls.len()];
    for n in &spec.nodes {
        let v = match *n {
            Node::Lit(v) => c.constant(v & w.mask(), bits),
            Node::Width => c.constant(bits as u64 & w.mask(), bits),
            Node::Var(i) => {
                let m = spec.var_mask(i, w);
                vars[i].iter().enumerate().map(|(b, &l)| if m >> b & 1 == 1 { l } else { FALSE }).collect()
            }
            Node::Apply { call: k, index } => {
                if calls[k].is_none() {
                    let site = &spec.calls[k];
                    let args: Vec<Word> = site.args.iter().map(|&a| vals[a as usize].clone()).collect();
                    let m = spec.result_mask(site.unknown, w);
                    let outs = call(c, site.unknown, &args)
                        .into_iter()
                        .map(|o| o.iter().enumerate().map(|(b, &l)| if m >> b & 1 == 1 { l } else { FALSE }).collect())
                        .collect();
                    calls[k] = Some(outs);
                }
                calls[k].as_ref().expect("just filled")[index].clone()
            }
            Node::Un(op, a) => c.unop(op, &vals[a as usize]),
            Node::Bin(op, a, b) => {
                let (x, y) = (vals[a as usize].clone(), vals[b as usize].clone());
                c.binop(op, &x, &y)
            }
            Node::Ite(s, a, b) => {
                let sel = c.nonzero(&vals[s as usize].clone());
                let (x, y) = (vals[a as usize].clone(), vals[b as usize].clone());
                c.mux_word(sel, &x, &y)
            }
        };
        vals.push(v);
    }
    let root = vals[spec.root as usize].clone();
    c.nonzero(&root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lvm::eval_instruction;

    #[test]
    fn folding_and_hashing() {
        let mut c = Circuit::new();
        let x = c.input();
        let y = c.input();
        assert_eq!(c.and(x, FALSE), FALSE);
        assert_eq!(c.and(x, TRUE), x);
        assert_eq!(c.and(x, not(x)), FALSE);
        let a = c.and(x, y);
        assert_eq!(c.and(y, x), a);
        assert_eq!(c.xor(x, x), FALSE);
        assert_eq!(c.num_vars(), 4);
    }

    /// Constant inputs must fold completely and agree with the interpreter.
    #[test]
    fn opcode_circuits_fold_to_interpreter_values() {
        for bits in 1..=3u32 {
            let w = WordWidth::of(bits);
            let n = 1u64 << bits;
            let mut c = Circuit::new();
            for op in Opcode::ALL {
                for a in 0..n {
                    for b in 0..n {
                        let (wa, wb, wc) = (c.constant(a, bits), c.constant(b, bits), c.constant(n - 1, bits));
                        let r = c.opcode(op, &wa, &wb, &wc);
                        assert_eq!(
                            Circuit::const_value(&r),
                            Some(eval_instruction(op, a, b, n - 1, w)),
                            "{op} {a} {b} @ {bits}"
                        );
                    }
                }
            }
        }
    }

    /// With symbolic inputs, evaluating the circuit must agree too.
    #[test]
    fn opcode_circuits_on_symbolic_inputs() {
        let bits = 3u32;
        let w = WordWidth::of(bits);
        for op in Opcode::ALL {
            let mut c = Circuit::new();
            let (a, b, s) = (c.input_word(bits), c.input_word(bits), c.input_word(bits));
            let r = c.opcode(op, &a, &b, &s);
            for va in 0..8u64 {
                for vb in 0..8u64 {
                    let vs = (va ^ vb) & 7;
                    let mut env = HashMap::new();
                    for i in 0..bits as usize {
                        env.insert(var_of(a[i]), va >> i & 1 == 1);
                        env.insert(var_of(b[i]), vb >> i & 1 == 1);
                        env.insert(var_of(s[i]), vs >> i & 1 == 1);
                    }
                    let got = (0..bits as usize).fold(0u64, |acc, i| acc | (c.eval(r[i], &env) as u64) << i);
                    assert_eq!(got, eval_instruction(op, va, vb, vs, w), "{op} {va} {vb} {vs}");
                }
            }
        }
    }

    #[test]
    fn shifts_by_wide_amounts() {
        let mut c = Circuit::new();
        for bits in [1u32, 3, 4, 5] {
            let n = 1u64 << bits;
            for a in [0u64, 1, n - 1, n / 2] {
                for b in 0..n {
                    let (wa, wb) = (c.constant(a, bits), c.constant(b, bits));
                    let w = WordWidth::of(bits);
                    let r = c.shl(&wa, &wb);
                    assert_eq!(Circuit::const_value(&r), Some(BinOp::Shl.eval(a, b, w)));
                    let r = c.ashr(&wa, &wb);
                    assert_eq!(Circuit::const_value(&r), Some(eval_instruction(Opcode::Ashr, a, b, 0, w)));
                }
            }
        }
    }

    #[test]
    fn exactly_one() {
        let mut c = Circuit::new();
        let xs: Vec<Lit> = (0..3).map(|_| c.input()).collect();
        let e = c.exactly_one(&xs);
        for m in 0..8u32 {
            let env: HashMap<u32, bool> = xs.iter().enumerate().map(|(i, &l)| (var_of(l), m >> i & 1 == 1)).collect();
            assert_eq!(c.eval(e, &env), m.count_ones() == 1, "{m}");
        }
    }
}
