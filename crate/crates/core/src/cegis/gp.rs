//! Linear genetic programming over program vectors.
//!
//! Fitness is the number of bank tests an individual satisfies. The
//! population survives between synthesis calls and is rescored against the
//! current bank every generation.

use super::{Step, Strategy, StrategyKind, SynthContext};
use crate::lvm::{Instruction, Opcode, Operand, Program, WordWidth};
use crate::specir::{CompiledSpec, Scratch};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Shape {
    l: usize,
    c: usize,
    sigs: Vec<(usize, usize)>,
    ops: Vec<Opcode>,
}

#[derive(Clone, Debug)]
pub struct GpPopulation {
    pub individuals: Vec<Vec<Program>>,
    /// Fitness of each individual against the bank it was last scored on.
    pub fitness: Vec<usize>,
    pub generation: u64,
    pub rng_seed: u64,
    rng: ChaCha8Rng,
    shape: Option<Shape>,
    width: Option<WordWidth>,
}

fn pool_size(arity: usize, slot: usize, k: usize) -> usize {
    arity + slot + k
}

fn operand_at(j: usize, arity: usize, slot: usize) -> Operand {
    if j < arity {
        Operand::Input(j)
    } else if j < arity + slot {
        Operand::Temp(j - arity)
    } else {
        Operand::Const(j - arity - slot)
    }
}

fn random_operand(rng: &mut ChaCha8Rng, arity: usize, slot: usize, k: usize) -> Operand {
    operand_at(rng.gen_range(0..pool_size(arity, slot, k)), arity, slot)
}

fn random_instruction(rng: &mut ChaCha8Rng, ops: &[Opcode], arity: usize, slot: usize, k: usize) -> Instruction {
    let op = *ops.choose(rng).expect("opcode set is nonempty");
    Instruction::new(op, (0..op.arity()).map(|_| random_operand(rng, arity, slot, k)).collect::<Vec<_>>())
}

/// Fitness of `programs`: the number of tests on which the spec holds.
pub fn fitness(spec: &CompiledSpec, programs: &[Program], bank: &[Vec<u64>], w: WordWidth, s: &mut Scratch) -> usize {
    let refs: Vec<&Program> = programs.iter().collect();
    bank.iter().filter(|t| spec.eval(&refs, t, w, s)).count()
}

/// Clamps every operand into the range the SSA rules allow at its slot.
pub fn repair(p: &mut Program) {
    let (arity, k, n) = (p.arity, p.constants.len(), p.instructions.len());
    let fix = |op: Operand, slot: usize| match op {
        Operand::Input(i) if i >= arity => Operand::Input(arity.saturating_sub(1)),
        Operand::Temp(t) if t >= slot => {
            if slot > 0 {
                Operand::Temp(slot - 1)
            } else if arity > 0 {
                Operand::Input(0)
            } else {
                Operand::Const(0)
            }
        }
        Operand::Const(c) if c >= k => Operand::Const(k.saturating_sub(1)),
        o => o,
    };
    for (i, ins) in p.instructions.iter_mut().enumerate() {
        for o in &mut ins.operands {
            *o = fix(*o, i);
        }
    }
    for o in &mut p.outputs {
        *o = fix(*o, n);
    }
}

impl GpPopulation {
    /// An empty population; the first step bootstraps it at random.
    pub fn new(seed: u64) -> Self {
        GpPopulation {
            individuals: Vec::new(),
            fitness: Vec::new(),
            generation: 0,
            rng_seed: seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            shape: None,
            width: None,
        }
    }

    fn random_individual(&mut self, shape: &Shape, w: WordWidth) -> Vec<Program> {
        let rng = &mut self.rng;
        shape
            .sigs
            .iter()
            .map(|&(arity, outs)| {
                let instructions = (0..shape.l).map(|i| random_instruction(rng, &shape.ops, arity, i, shape.c)).collect();
                let constants = (0..shape.c).map(|_| rng.gen::<u64>() & w.mask()).collect();
                let outputs = (0..outs).map(|_| random_operand(rng, arity, shape.l, shape.c)).collect();
                Program::new(arity, instructions, constants, outputs)
            })
            .collect()
    }

    /// Brings the population in line with the current parameters.
    ///
    /// A new length, constant count or opcode set means a fresh random
    /// population; a new width only masks the constants.
    pub fn incremental_seed(&mut self, ctx: &SynthContext, size: usize) {
        let shape = Shape {
            l: ctx.params.l,
            c: ctx.params.c,
            sigs: ctx.spec.unknowns.iter().map(|u| (u.in_arity, u.out_arity)).collect(),
            ops: ctx.cfg.opcodes.clone(),
        };
        let w = ctx.params.w_syn;
        if self.shape.as_ref() != Some(&shape) || self.individuals.len() != size {
            self.individuals = (0..size).map(|_| self.random_individual(&shape, w)).collect();
            self.shape = Some(shape);
        } else if self.width != Some(w) {
            for ind in &mut self.individuals {
                crate::lattice::mask_constants(ind, w);
            }
        }
        self.width = Some(w);
    }

    /// Scores every individual; returns the index of the best (first on ties).
    pub fn score(&mut self, spec: &CompiledSpec, bank: &[Vec<u64>], w: WordWidth) -> usize {
        let mut s = Scratch::default();
        self.fitness = self.individuals.iter().map(|ind| fitness(spec, ind, bank, w, &mut s)).collect();
        let mut best = 0;
        for (i, &f) in self.fitness.iter().enumerate() {
            if f > self.fitness[best] {
                best = i;
            }
        }
        best
    }

    fn select(&mut self, weights: &Option<WeightedIndex<usize>>) -> usize {
        match weights {
            Some(d) => d.sample(&mut self.rng),
            None => self.rng.gen_range(0..self.individuals.len()),
        }
    }

    fn crossover(&mut self, a: &[Program], b: &[Program]) -> Vec<Program> {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let cut = self.rng.gen_range(0..=x.instructions.len());
                let kcut = self.rng.gen_range(0..=x.constants.len());
                let mut instructions = x.instructions[..cut].to_vec();
                instructions.extend_from_slice(&y.instructions[cut..]);
                let mut constants = x.constants[..kcut].to_vec();
                constants.extend_from_slice(&y.constants[kcut..]);
                let mut p = Program::new(x.arity, instructions, constants, y.outputs.clone());
                repair(&mut p);
                p
            })
            .collect()
    }

    fn mutate(&mut self, ind: &mut [Program], ops: &[Opcode], rate: f64, w: WordWidth) {
        let rng = &mut self.rng;
        for p in ind {
            let (arity, k, n) = (p.arity, p.constants.len(), p.instructions.len());
            for (i, ins) in p.instructions.iter_mut().enumerate() {
                if rng.gen_bool(rate) {
                    let op = *ops.choose(rng).expect("opcode set is nonempty");
                    ins.opcode = op;
                    ins.operands.truncate(op.arity());
                    while ins.operands.len() < op.arity() {
                        ins.operands.push(random_operand(rng, arity, i, k));
                    }
                }
                for o in &mut ins.operands {
                    if rng.gen_bool(rate) {
                        *o = random_operand(rng, arity, i, k);
                    }
                }
            }
            for c in &mut p.constants {
                if rng.gen_bool(rate) {
                    *c = if rng.gen_bool(0.5) { rng.gen::<u64>() & w.mask() } else { *c ^ (1 << rng.gen_range(0..w.bits())) };
                }
            }
            for o in &mut p.outputs {
                if rng.gen_bool(rate) {
                    *o = random_operand(rng, arity, n, k);
                }
            }
        }
    }

    /// Breeds the next generation from the scored current one, keeping `best`.
    pub fn breed(&mut self, best: usize, cfg: &super::SolverConfig, w: WordWidth) {
        let weights = WeightedIndex::new(&self.fitness).ok();
        let mut next = Vec::with_capacity(self.individuals.len());
        next.push(self.individuals[best].clone());
        while next.len() < self.individuals.len() {
            let a = self.select(&weights);
            let mut child = if self.rng.gen_bool(cfg.crossover) {
                let b = self.select(&weights);
                let (pa, pb) = (self.individuals[a].clone(), self.individuals[b].clone());
                self.crossover(&pa, &pb)
            } else {
                self.individuals[a].clone()
            };
            self.mutate(&mut child, &cfg.opcodes, cfg.mutation, w);
            next.push(child);
        }
        self.individuals = next;
        self.generation += 1;
    }
}

/// One generation: rescore, return the best if it satisfies the whole bank,
/// otherwise breed.
pub fn gp_step(pop: &mut GpPopulation, ctx: &SynthContext) -> Option<Vec<Program>> {
    let w = ctx.params.w_syn;
    let best = pop.score(ctx.spec, ctx.bank, w);
    if pop.fitness[best] == ctx.bank.len() {
        return Some(pop.individuals[best].clone());
    }
    pop.breed(best, ctx.cfg, w);
    None
}

impl Strategy for GpPopulation {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Gp
    }

    fn step(&mut self, ctx: &SynthContext) -> Step {
        let starved = ctx.spec.unknowns.iter().any(|u| pool_size(u.in_arity, 0, ctx.params.c) == 0);
        if starved {
            return Step::Unsupported;
        }
        self.incremental_seed(ctx, ctx.cfg.population);
        match gp_step(self, ctx) {
            Some(p) => Step::Found(p),
            None => Step::Continue,
        }
    }
}
