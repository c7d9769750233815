//! Exhaustive enumeration of all programs at fixed length and constant count.
//!
//! The search is an odometer. Constant tables are the outermost digits; they
//! are strictly increasing tables of exactly `min(c, 2^w)` distinct values,
//! which loses nothing since any program using fewer distinct constants fits
//! in such a table. Below them come, per unknown, the output designators and
//! then the instruction slots from last to first. A slot whose result no
//! output depends on only takes its first choice, and commutative operands
//! are generated in ascending order only.

use super::{Step, Strategy, StrategyKind, SynthContext};
use crate::lvm::{Instruction, Opcode, Operand, Program};

struct Space {
    slots: Vec<Vec<Instruction>>,
    outs: Vec<Operand>,
}

#[derive(Clone, Copy)]
enum Digit {
    Out(usize, usize),
    Slot(usize, usize),
}

pub struct Explicit {
    init: bool,
    done: bool,
    mask: u64,
    spaces: Vec<Space>,
    digits: Vec<Digit>,
    vals: Vec<usize>,
    programs: Vec<Program>,
    order: Vec<usize>,
    /// Candidates checked against the bank so far.
    pub examined: u64,
}

impl Default for Explicit {
    fn default() -> Self {
        Self::new()
    }
}

/// All instructions for slot `i` over inputs, earlier temps and `k` constants.
pub fn slot_choices(opcodes: &[Opcode], arity: usize, i: usize, k: usize) -> Vec<Instruction> {
    let pool: Vec<Operand> = (0..arity)
        .map(Operand::Input)
        .chain((0..i).map(Operand::Temp))
        .chain((0..k).map(Operand::Const))
        .collect();
    let mut out = Vec::new();
    for &op in opcodes {
        match op.arity() {
            1 => out.extend(pool.iter().map(|&a| Instruction::new(op, [a]))),
            2 => {
                for &a in &pool {
                    for &b in &pool {
                        if op.is_commutative() && b < a {
                            continue;
                        }
                        out.push(Instruction::new(op, [a, b]));
                    }
                }
            }
            _ => {
                for &a in &pool {
                    for &b in &pool {
                        for &c in &pool {
                            out.push(Instruction::new(op, [a, b, c]));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Steps `t` to the next strictly increasing table with entries `<= max`.
fn next_table(t: &mut [u64], max: u64) -> bool {
    let k = t.len();
    for i in (0..k).rev() {
        let limit = max - (k - 1 - i) as u64;
        if t[i] < limit {
            t[i] += 1;
            for j in i + 1..k {
                t[j] = t[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl Explicit {
    pub fn new() -> Self {
        Explicit {
            init: false,
            done: false,
            mask: 0,
            spaces: Vec::new(),
            digits: Vec::new(),
            vals: Vec::new(),
            programs: Vec::new(),
            order: Vec::new(),
            examined: 0,
        }
    }

    fn setup(&mut self, ctx: &SynthContext) {
        self.init = true;
        let p = ctx.params;
        let w = p.w_syn;
        self.mask = w.mask();
        let k = (p.c as u64).min(w.domain_size()) as usize;
        let unknowns = &ctx.spec.unknowns;
        self.spaces = unknowns
            .iter()
            .map(|u| Space {
                slots: (0..p.l).map(|i| slot_choices(&ctx.cfg.opcodes, u.in_arity, i, k)).collect(),
                outs: (0..u.in_arity)
                    .map(Operand::Input)
                    .chain((0..p.l).map(Operand::Temp))
                    .chain((0..k).map(Operand::Const))
                    .collect(),
            })
            .collect();
        if self.spaces.iter().any(|s| s.slots.iter().any(Vec::is_empty) || s.outs.is_empty()) {
            self.done = true;
            return;
        }
        self.digits.clear();
        for (u, sig) in unknowns.iter().enumerate() {
            self.digits.extend((0..sig.out_arity).map(|j| Digit::Out(u, j)));
            self.digits.extend((0..p.l).rev().map(|i| Digit::Slot(u, i)));
        }
        self.vals = vec![0; self.digits.len()];
        self.programs = unknowns
            .iter()
            .zip(&self.spaces)
            .map(|(u, s)| {
                Program::new(
                    u.in_arity,
                    s.slots.iter().map(|c| c[0].clone()).collect(),
                    (0..k as u64).collect(),
                    vec![s.outs[0]; u.out_arity],
                )
            })
            .collect();
        self.order = (0..ctx.bank.len()).collect();
    }

    fn range(&self, d: Digit) -> usize {
        match d {
            Digit::Out(u, _) => self.spaces[u].outs.len(),
            // Later slots and the outputs are more significant digits, so
            // liveness of slot `i` is settled while it counts.
            Digit::Slot(u, i) => {
                if self.programs[u].live_instructions()[i] {
                    self.spaces[u].slots[i].len()
                } else {
                    1
                }
            }
        }
    }

    fn write(&mut self, d: usize) {
        match self.digits[d] {
            Digit::Out(u, j) => self.programs[u].outputs[j] = self.spaces[u].outs[self.vals[d]],
            Digit::Slot(u, i) => {
                let src = &self.spaces[u].slots[i][self.vals[d]];
                self.programs[u].instructions[i].clone_from(src);
            }
        }
    }

    /// Moves to the next canonical candidate; false when the space is exhausted.
    fn advance(&mut self) -> bool {
        for d in (0..self.digits.len()).rev() {
            if self.vals[d] + 1 < self.range(self.digits[d]) {
                self.vals[d] += 1;
                self.write(d);
                return true;
            }
            if self.vals[d] != 0 {
                self.vals[d] = 0;
                self.write(d);
            }
        }
        for u in (0..self.programs.len()).rev() {
            if next_table(&mut self.programs[u].constants, self.mask) {
                return true;
            }
            let k = self.programs[u].constants.len() as u64;
            self.programs[u].constants = (0..k).collect();
        }
        false
    }

    fn satisfies_bank(&mut self, ctx: &SynthContext, scratch: &mut crate::specir::Scratch) -> bool {
        let refs: Vec<&Program> = self.programs.iter().collect();
        for pos in 0..self.order.len() {
            let t = self.order[pos];
            if !ctx.spec.eval(&refs, &ctx.bank[t], ctx.params.w_syn, scratch) {
                // Failing tests move to the front; they tend to fail again.
                self.order[..=pos].rotate_right(1);
                return false;
            }
        }
        true
    }
}

impl Strategy for Explicit {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Explicit
    }

    fn step(&mut self, ctx: &SynthContext) -> Step {
        if !self.init {
            self.setup(ctx);
            if self.done {
                return Step::Exhausted;
            }
            self.examined += 1;
            let mut scratch = crate::specir::Scratch::default();
            if self.satisfies_bank(ctx, &mut scratch) {
                return Step::Found(self.programs.clone());
            }
        }
        if self.done {
            return Step::Exhausted;
        }
        let mut scratch = crate::specir::Scratch::default();
        for _ in 0..ctx.cfg.explicit_quantum {
            if !self.advance() {
                self.done = true;
                return Step::Exhausted;
            }
            self.examined += 1;
            if self.satisfies_bank(ctx, &mut scratch) {
                let found = self.programs.clone();
                // Resume after this candidate if stepped again.
                return Step::Found(found);
            }
        }
        Step::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cegis::SolverConfig;
    use crate::lattice::ParamSet;
    use crate::lvm::WordWidth;
    use crate::specir::{parse_spec, skolemize, CompiledSpec};

    fn run(src: &str, bank: &[Vec<u64>], l: usize, c: usize, w: u32) -> (Option<Vec<Program>>, u64) {
        let spec = CompiledSpec::new(&skolemize(&parse_spec(src).unwrap()));
        let cfg = SolverConfig::default();
        let params = ParamSet { l, c, w_syn: WordWidth::of(w), w_target: WordWidth::of(w) };
        let ctx = SynthContext { spec: &spec, bank, params, cfg: &cfg, deadline: None };
        let mut e = Explicit::new();
        loop {
            match e.step(&ctx) {
                Step::Found(p) => return (Some(p), e.examined),
                Step::Exhausted => return (None, e.examined),
                Step::Continue => {}
                Step::Unsupported => unreachable!(),
            }
        }
    }

    #[test]
    fn table_successor() {
        let mut t = vec![0, 1];
        let mut all = vec![t.clone()];
        while next_table(&mut t, 3) {
            all.push(t.clone());
        }
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut e: Vec<u64> = vec![];
        assert!(!next_table(&mut e, 3));
    }

    #[test]
    fn identity_at_length_one() {
        let (p, _) = run("fun P(1)->1; forall x:4; P(x) = x", &[vec![1]], 1, 0, 4);
        let p = p.unwrap();
        assert_eq!(crate::lvm::exec(&p[0], &[1], WordWidth::of(4)), vec![1]);
    }

    #[test]
    fn constant_eight() {
        let (p, _) = run("fun P(1)->1; forall x:4; P(x) = 8", &[vec![0]], 1, 1, 4);
        let p = p.unwrap();
        // Constant tables are the outermost digits, so `add c0 c0` with table
        // [4] comes before any program over [8].
        assert_eq!(p[0].constants, vec![4]);
        assert_eq!(crate::lvm::exec(&p[0], &[0], WordWidth::of(4)), vec![8]);
    }

    #[test]
    fn isolate_lsb_at_length_two() {
        let bank: Vec<Vec<u64>> = (0..8).map(|x| vec![x]).collect();
        let src = "fun P(1)->1; forall x:3; P(x) = x & -x";
        assert!(run(src, &bank, 1, 0, 3).0.is_none());
        let p = run(src, &bank, 2, 0, 3).0.unwrap();
        for x in 0..8u64 {
            assert_eq!(crate::lvm::exec(&p[0], &[x], WordWidth::of(3)), vec![x & x.wrapping_neg() & 7]);
        }
    }

    #[test]
    fn strict_increase_has_no_short_program() {
        let (p, n) = run("fun P(1)->1; forall x:2; P(x) >u x", &[vec![3]], 2, 1, 2);
        assert!(p.is_none());
        assert!(n > 0);
    }

    #[test]
    fn dead_slots_are_pinned() {
        // With a trivially true spec and no bank, the first candidate is all zeros.
        let spec = "fun P(1)->1; forall x:2; 1 = 1";
        let (p, n) = run(spec, &[], 3, 0, 2);
        assert_eq!(n, 1);
        assert_eq!(p.unwrap()[0].outputs, vec![Operand::Input(0)]);
    }

    #[test]
    fn canonical_count_matches_brute_force() {
        // Count canonical programs with an unsatisfiable spec and compare with a
        // direct filter over the full product space.
        let ops = Opcode::ALL.to_vec();
        let (l, k) = (2usize, 0usize);
        let s0 = slot_choices(&ops, 1, 0, k);
        let s1 = slot_choices(&ops, 1, 1, k);
        let outs = 1 + l;
        let mut expected = 0u64;
        for a in 0..s0.len() {
            for b in 0..s1.len() {
                for o in 0..outs {
                    let out = if o == 0 { Operand::Input(0) } else { Operand::Temp(o - 1) };
                    let p = Program::new(1, vec![s0[a].clone(), s1[b].clone()], vec![], vec![out]);
                    let live = p.live_instructions();
                    if (!live[0] && a != 0) || (!live[1] && b != 0) {
                        continue;
                    }
                    expected += 1;
                }
            }
        }
        let (p, n) = run("fun P(1)->1; forall x:2; 1 = 0", &[vec![0]], l, k, 2);
        assert!(p.is_none());
        assert_eq!(n, expected);
    }
}
