//! The search over program length, constant count and word width, and the
//! rules that lift constants found at a small width to a larger one.

use crate::cegis::Verdict;
use crate::lvm::{mask_bits, Program, WordWidth};
use std::collections::HashSet;
use std::fmt;

/// A point in the (length, constants, width) lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamSet {
    /// Instructions per unknown.
    pub l: usize,
    /// Constants per unknown, at most `l`.
    pub c: usize,
    pub w_syn: WordWidth,
    pub w_target: WordWidth,
}

impl ParamSet {
    /// The bottom of the lattice: `l = 1`, `c = 0`, `w_syn = min(initial, target)`.
    pub fn initial(w_target: WordWidth, initial_width: u32) -> Self {
        let w = initial_width.clamp(1, w_target.bits());
        ParamSet { l: 1, c: 0, w_syn: WordWidth::of(w), w_target }
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l={},c={},w={}/{}", self.l, self.c, self.w_syn, self.w_target)
    }
}

/// How the last refinement round ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    SynthFailed,
    /// The candidate failed verification at the synthesis width as well.
    VerifFailedSmallToo,
    /// The candidate held at the synthesis width but no constant rewrite held at the target.
    VerifSmallOkGenFailed,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Next {
    Params(ParamSet),
    /// Program length would exceed `bound`.
    Exhausted,
}

/// Successor of `p` after `outcome`, with `bound` the largest allowed length.
pub fn next_params(p: ParamSet, outcome: SearchOutcome, bound: usize) -> Next {
    let mut q = p;
    match outcome {
        SearchOutcome::SynthFailed => {
            if q.c < q.l {
                q.c += 1;
            } else {
                q.c = 0;
                q.l += 1;
            }
        }
        SearchOutcome::VerifSmallOkGenFailed => {
            q.w_syn = WordWidth::of((q.w_syn.bits() + 1).min(q.w_target.bits()));
        }
        SearchOutcome::VerifFailedSmallToo | SearchOutcome::Done => {}
    }
    if q.l > bound {
        Next::Exhausted
    } else {
        Next::Params(q)
    }
}

/// Rewrites an `m`-bit constant for an `n`-bit machine with one of six
/// rules; `None` when rules 1 to 3 do not match `v`.
///
/// 1. `m` becomes `n`; 2. `m - 1` becomes `n - 1`; 3. `m + 1` becomes `n + 1`;
/// 4. zero extension; 5. shift left by `n - m`; 6. repeat the bit pattern.
pub fn extend_constant(v: u64, m: WordWidth, n: WordWidth, rule: u8) -> Option<u64> {
    let (mb, nb) = (m.bits() as u64, n.bits() as u64);
    debug_assert!(mb <= nb && v <= m.mask());
    match rule {
        1 => (v == mb & m.mask()).then_some(nb & n.mask()),
        2 => (v == (mb - 1) & m.mask()).then_some((nb - 1) & n.mask()),
        3 => (v == (mb + 1) & m.mask()).then_some((nb + 1) & n.mask()),
        4 => Some(v),
        5 => Some((v << (nb - mb)) & n.mask()),
        6 => {
            let mut out = 0u64;
            let mut shift = 0;
            while shift < nb {
                out |= v << shift;
                shift += mb;
            }
            Some(out & n.mask())
        }
        _ => panic!("no extension rule {rule}"),
    }
}

pub const RULES: [u8; 6] = [1, 2, 3, 4, 5, 6];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generalized {
    Valid(Vec<Program>),
    /// Nothing held; carries the first target-width counterexample seen.
    Failed(Option<Vec<u64>>),
}

/// Tries constant rewrites of `programs` (valid at `w_syn`) at `w_target`.
///
/// Order: the programs unchanged, each rule applied to every constant, then
/// per-constant rule combinations up to `cap` of them. `verify` checks a
/// rewritten vector at the target width; the first valid one wins.
pub fn generalize(
    programs: &[Program],
    w_syn: WordWidth,
    w_target: WordWidth,
    cap: usize,
    mut verify: impl FnMut(&[Program]) -> Verdict,
) -> Generalized {
    let originals: Vec<u64> = programs.iter().flat_map(|p| p.constants.iter().copied()).collect();
    let mut tried: HashSet<Vec<u64>> = HashSet::new();
    let mut first_cex = None;
    let mut attempt = |consts: Vec<u64>, first_cex: &mut Option<Vec<u64>>| -> Option<Vec<Program>> {
        if !tried.insert(consts.clone()) {
            return None;
        }
        let rewritten = with_constants(programs, &consts);
        match verify(&rewritten) {
            Verdict::Valid => Some(rewritten),
            Verdict::Counterexample(c) => {
                first_cex.get_or_insert(c);
                None
            }
            Verdict::Incomplete => None,
        }
    };

    if let Some(p) = attempt(originals.clone(), &mut first_cex) {
        return Generalized::Valid(p);
    }
    if originals.is_empty() {
        return Generalized::Failed(first_cex);
    }
    let small: Vec<u64> = originals.iter().map(|&v| v & w_syn.mask()).collect();
    for rule in RULES {
        let lifted: Option<Vec<u64>> = small.iter().map(|&v| extend_constant(v, w_syn, w_target, rule)).collect();
        if let Some(consts) = lifted {
            if let Some(p) = attempt(consts, &mut first_cex) {
                return Generalized::Valid(p);
            }
        }
    }
    // Mixed-radix walk over one rule per constant, skipping inapplicable ones.
    let options: Vec<Vec<u64>> = small
        .iter()
        .map(|&v| {
            let mut o: Vec<u64> = RULES.iter().filter_map(|&r| extend_constant(v, w_syn, w_target, r)).collect();
            o.dedup();
            o
        })
        .collect();
    let mut idx = vec![0usize; options.len()];
    for _ in 0..cap {
        let consts: Vec<u64> = idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        if let Some(p) = attempt(consts, &mut first_cex) {
            return Generalized::Valid(p);
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return Generalized::Failed(first_cex);
            }
            idx[d] += 1;
            if idx[d] < options[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
    Generalized::Failed(first_cex)
}

/// Copies of `programs` with their constant tables replaced, in order, by `consts`.
pub fn with_constants(programs: &[Program], consts: &[u64]) -> Vec<Program> {
    let mut it = consts.iter().copied();
    programs
        .iter()
        .map(|p| {
            let mut q = p.clone();
            for c in &mut q.constants {
                *c = it.next().expect("constant count mismatch");
            }
            q
        })
        .collect()
}

/// Masks all constants to `w`, for reuse of programs at a narrower width.
pub fn mask_constants(programs: &mut [Program], w: WordWidth) {
    for p in programs {
        for c in &mut p.constants {
            *c &= mask_bits(w.bits());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lvm::{exec, Instruction, Opcode, Operand};

    fn ps(l: usize, c: usize) -> ParamSet {
        ParamSet { l, c, w_syn: WordWidth::of(4), w_target: WordWidth::of(8) }
    }

    #[test]
    fn decision_tree_edges() {
        assert_eq!(next_params(ps(2, 1), SearchOutcome::SynthFailed, 16), Next::Params(ps(2, 2)));
        assert_eq!(next_params(ps(2, 2), SearchOutcome::SynthFailed, 16), Next::Params(ps(3, 0)));
        assert_eq!(next_params(ps(4, 4), SearchOutcome::SynthFailed, 4), Next::Exhausted);
        assert_eq!(next_params(ps(2, 1), SearchOutcome::VerifFailedSmallToo, 16), Next::Params(ps(2, 1)));
        let Next::Params(q) = next_params(ps(2, 1), SearchOutcome::VerifSmallOkGenFailed, 16) else { panic!() };
        assert_eq!((q.l, q.c, q.w_syn.bits()), (2, 1, 5));
        let top = ParamSet { w_syn: WordWidth::of(8), ..ps(1, 0) };
        assert_eq!(next_params(top, SearchOutcome::VerifSmallOkGenFailed, 16), Next::Params(top));
    }

    #[test]
    fn lexicographic_walk() {
        let mut p = ParamSet::initial(WordWidth::of(2), 4);
        assert_eq!(p.w_syn.bits(), 2);
        let mut seen = vec![(p.l, p.c)];
        while let Next::Params(q) = next_params(p, SearchOutcome::SynthFailed, 4) {
            assert!(q.c <= q.l);
            seen.push((q.l, q.c));
            p = q;
        }
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen.len(), 2 + 3 + 4 + 5);
    }

    #[test]
    fn extension_rules() {
        let (w4, w8, w32) = (WordWidth::of(4), WordWidth::of(8), WordWidth::of(32));
        assert_eq!(extend_constant(8, w8, w32, 1), Some(32));
        assert_eq!(extend_constant(7, w8, w32, 2), Some(31));
        assert_eq!(extend_constant(9, w8, w32, 3), Some(33));
        assert_eq!(extend_constant(0xA, w4, w8, 6), Some(0xAA));
        assert_eq!(extend_constant(0xA, w4, w8, 5), Some(0xA0));
        assert_eq!(extend_constant(0xA, w4, w8, 4), Some(0xA));
        assert_eq!(extend_constant(5, w8, w32, 1), None);
        // Only m - 1 = 7 matches rule 2; the all-ones lift comes from rule 6.
        assert_eq!(extend_constant(255, w8, w32, 2), None);
        assert_eq!(extend_constant(255, w8, w32, 6), Some(u32::MAX as u64));
        assert_eq!(extend_constant(0b101, WordWidth::of(3), WordWidth::of(8), 6), Some(0b0110_1101));
    }

    #[test]
    fn equal_widths_are_identity_or_inapplicable() {
        for bits in 1..=6 {
            let w = WordWidth::of(bits);
            for v in 0..=w.mask() {
                for r in RULES {
                    let e = extend_constant(v, w, w, r);
                    assert!(e.is_none() || e == Some(v), "{v} {bits} {r}");
                }
            }
        }
    }

    fn lshr_prog(c: u64) -> Program {
        Program::new(1, vec![Instruction::new(Opcode::Lshr, [Operand::Input(0), Operand::Const(0)])], vec![c], vec![Operand::Temp(0)])
    }

    /// Checks `x >>u (w - 1)` on a handful of inputs, standing in for a verifier.
    fn sign_bit_check(w: WordWidth) -> impl FnMut(&[Program]) -> Verdict {
        move |ps: &[Program]| {
            for x in [0, 1, w.mask(), w.sign_bit(), w.sign_bit() - 1] {
                if exec(&ps[0], &[x], w)[0] != x >> (w.bits() - 1) {
                    return Verdict::Counterexample(vec![x]);
                }
            }
            Verdict::Valid
        }
    }

    #[test]
    fn shift_by_width_minus_one_lifts() {
        let (w8, w32) = (WordWidth::of(8), WordWidth::of(32));
        let got = generalize(&[lshr_prog(7)], w8, w32, 216, sign_bit_check(w32));
        assert_eq!(got, Generalized::Valid(vec![lshr_prog(31)]));
    }

    #[test]
    fn constant_free_programs_are_tried_once() {
        let p = Program::new(1, vec![Instruction::new(Opcode::Neg, [Operand::Input(0)])], vec![], vec![Operand::Temp(0)]);
        let mut calls = 0;
        let got = generalize(&[p], WordWidth::of(4), WordWidth::of(8), 216, |_| {
            calls += 1;
            Verdict::Counterexample(vec![3])
        });
        assert_eq!(got, Generalized::Failed(Some(vec![3])));
        assert_eq!(calls, 1);
    }

    #[test]
    fn product_is_capped() {
        let p = Program::new(
            1,
            vec![Instruction::new(Opcode::Add, [Operand::Const(0), Operand::Const(1)])],
            vec![3, 5],
            vec![Operand::Temp(0)],
        );
        let mut calls = 0;
        let got = generalize(&[p], WordWidth::of(4), WordWidth::of(8), 5, |_| {
            calls += 1;
            Verdict::Counterexample(vec![0])
        });
        assert!(matches!(got, Generalized::Failed(_)));
        // Unchanged, four distinct uniform rewrites, then at most five more.
        assert!(calls <= 1 + 6 + 5, "{calls}");
    }
}
