//! Checking a candidate against every assignment of the universals.

use super::SolverConfig;
use crate::bitblast::{encode_body, encode_program, not, Circuit, SatSolver, SolveStatus};
use crate::lvm::{Program, WordWidth};
use crate::specir::{CompiledSpec, DomainIter, Scratch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Counterexample(Vec<u64>),
    /// No complete method could decide, e.g. the domain is too large and
    /// the symbolic check is disabled or ran out of time.
    Incomplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Sampling,
    Symbolic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub verdict: Verdict,
    /// The method that decided, if any.
    pub method: Option<Method>,
}

/// Verifies `programs` against `spec` at width `w`.
///
/// Small domains are enumerated and the first falsifying assignment in
/// enumeration order is returned. Larger ones are sampled (corner values
/// first) and then, if enabled, handed to the symbolic falsification query.
pub fn verify(
    spec: &CompiledSpec,
    programs: &[Program],
    w: WordWidth,
    cfg: &SolverConfig,
    deadline: Option<Instant>,
) -> Verification {
    let refs: Vec<&Program> = programs.iter().collect();
    let widths: Vec<u32> = spec.var_widths.iter().map(|&k| k.min(w.bits())).collect();
    let bits: u32 = widths.iter().sum();
    let mut scratch = Scratch::default();
    if bits <= cfg.exhaustive_cap {
        for a in DomainIter::new(widths) {
            if !spec.eval(&refs, &a, w, &mut scratch) {
                return Verification { verdict: Verdict::Counterexample(a), method: Some(Method::Exhaustive) };
            }
        }
        return Verification { verdict: Verdict::Valid, method: Some(Method::Exhaustive) };
    }

    if let Some(a) = sample(spec, &refs, &widths, w, cfg, &mut scratch) {
        return Verification { verdict: Verdict::Counterexample(a), method: Some(Method::Sampling) };
    }
    if !cfg.symbolic_verify {
        return Verification { verdict: Verdict::Incomplete, method: None };
    }
    match falsify(spec, programs, w, deadline) {
        Some(v) => Verification { verdict: v, method: Some(Method::Symbolic) },
        None => Verification { verdict: Verdict::Incomplete, method: None },
    }
}

fn corners(bits: u32) -> Vec<u64> {
    let mask = crate::lvm::mask_bits(bits);
    let sign = 1u64 << (bits - 1);
    let mut c = vec![0, 1, mask, sign, sign.wrapping_sub(1) & mask, 2 & mask, mask.wrapping_sub(1) & mask];
    let mut seen = std::collections::HashSet::new();
    c.retain(|v| seen.insert(*v));
    c
}

fn sample(
    spec: &CompiledSpec,
    refs: &[&Program],
    widths: &[u32],
    w: WordWidth,
    cfg: &SolverConfig,
    scratch: &mut Scratch,
) -> Option<Vec<u64>> {
    let corner_sets: Vec<Vec<u64>> = widths.iter().map(|&b| corners(b)).collect();
    let mut budget = cfg.samples;
    let mut a = vec![0u64; widths.len()];
    // Every variable at the same corner, then each variable alone at each corner.
    for k in 0..7 {
        for (v, cs) in a.iter_mut().zip(&corner_sets) {
            *v = cs[k % cs.len()];
        }
        if budget == 0 {
            return None;
        }
        budget -= 1;
        if !spec.eval(refs, &a, w, scratch) {
            return Some(a);
        }
    }
    for i in 0..widths.len() {
        for &cv in &corner_sets[i] {
            a.iter_mut().for_each(|v| *v = 0);
            a[i] = cv;
            if budget == 0 {
                return None;
            }
            budget -= 1;
            if !spec.eval(refs, &a, w, scratch) {
                return Some(a);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((w.bits() as u64) << 40));
    for _ in 0..budget {
        for (v, &b) in a.iter_mut().zip(widths) {
            *v = rng.gen::<u64>() & crate::lvm::mask_bits(b);
        }
        if !spec.eval(refs, &a, w, scratch) {
            return Some(a);
        }
    }
    None
}

/// Decides validity with a SAT query for a falsifying assignment; `None` on timeout.
pub fn falsify(spec: &CompiledSpec, programs: &[Program], w: WordWidth, deadline: Option<Instant>) -> Option<Verdict> {
    let mut c = Circuit::new();
    let vars: Vec<_> = spec.var_widths.iter().map(|_| c.input_word(w.bits())).collect();
    let holds = encode_body(&mut c, spec, w, &vars, &mut |c, u, args| encode_program(c, &programs[u], args, w));
    let mut sat = SatSolver::new();
    sat.set_deadline(deadline);
    sat.assert(&c, not(holds));
    match sat.solve(None) {
        SolveStatus::Unsat => Some(Verdict::Valid),
        SolveStatus::Sat => {
            let a: Vec<u64> = vars
                .iter()
                .enumerate()
                .map(|(i, word)| sat.word_value(word) & spec.var_mask(i, w))
                .collect();
            debug_assert!(!spec.eval(&programs.iter().collect::<Vec<_>>(), &a, w, &mut Scratch::default()));
            Some(Verdict::Counterexample(a))
        }
        SolveStatus::Unknown => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lvm::{Instruction, Opcode, Operand};
    use crate::specir::{parse_spec, skolemize};

    fn compiled(src: &str) -> CompiledSpec {
        CompiledSpec::new(&skolemize(&parse_spec(src).unwrap()))
    }

    fn constant(v: u64) -> Program {
        Program::new(1, vec![], vec![v], vec![Operand::Const(0)])
    }

    fn isolate_lsb() -> Program {
        Program::new(
            1,
            vec![Instruction::new(Opcode::Neg, [Operand::Input(0)]), Instruction::new(Opcode::And, [Operand::Input(0), Operand::Temp(0)])],
            vec![],
            vec![Operand::Temp(1)],
        )
    }

    #[test]
    fn exhaustive_verdicts() {
        let s = compiled("fun P(1)->1; forall x:3; P(x) >=u x");
        let cfg = SolverConfig::default();
        let w = WordWidth::of(3);
        assert_eq!(verify(&s, &[constant(7)], w, &cfg, None).verdict, Verdict::Valid);
        let v = verify(&s, &[constant(5)], w, &cfg, None);
        assert_eq!(v.verdict, Verdict::Counterexample(vec![6]));
        assert_eq!(v.method, Some(Method::Exhaustive));

        let lsb = compiled("fun P(1)->1; forall x:8; P(x) = x & -x");
        assert_eq!(verify(&lsb, &[isolate_lsb()], WordWidth::of(8), &cfg, None).verdict, Verdict::Valid);
    }

    #[test]
    fn wide_domains_use_sampling_then_sat() {
        let lsb = compiled("fun P(1)->1; forall x:32; P(x) = x & -x");
        let cfg = SolverConfig { samples: 1000, ..SolverConfig::default() };
        let w = WordWidth::of(32);
        let v = verify(&lsb, &[isolate_lsb()], w, &cfg, None);
        assert_eq!(v, Verification { verdict: Verdict::Valid, method: Some(Method::Symbolic) });

        // Wrong only at one point: sampling misses it, the SAT query does not.
        let s = compiled("fun P(1)->1; forall x:32; P(x) = x");
        let p = Program::new(
            1,
            vec![
                Instruction::new(Opcode::Eq, [Operand::Input(0), Operand::Const(0)]),
                Instruction::new(Opcode::Xor, [Operand::Input(0), Operand::Temp(0)]),
            ],
            vec![0x1234_5678],
            vec![Operand::Temp(1)],
        );
        let v = verify(&s, std::slice::from_ref(&p), w, &cfg, None);
        assert_eq!(v.verdict, Verdict::Counterexample(vec![0x1234_5678]));
        assert_eq!(v.method, Some(Method::Symbolic));

        let off = SolverConfig { symbolic_verify: false, ..cfg };
        assert_eq!(verify(&s, &[p], w, &off, None).verdict, Verdict::Incomplete);
    }

    #[test]
    fn sampling_finds_corner_failures() {
        let s = compiled("fun P(1)->1; forall x:32; P(x) = x");
        let cfg = SolverConfig { symbolic_verify: false, ..SolverConfig::default() };
        let neg = Program::new(1, vec![Instruction::new(Opcode::Neg, [Operand::Input(0)])], vec![], vec![Operand::Temp(0)]);
        let v = verify(&s, &[neg], WordWidth::of(32), &cfg, None);
        assert_eq!(v.method, Some(Method::Sampling));
        assert_eq!(v.verdict, Verdict::Counterexample(vec![1]));
    }
}
