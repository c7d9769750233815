//! Synthesis as one satisfiability query over a program template.
//!
//! Each instruction slot gets a one-hot opcode selector and three one-hot
//! operand selectors over inputs, earlier temporaries and constants; each
//! output gets a one-hot selector too, and constants are free words. The
//! template is instantiated once per test in the bank.

use super::{Step, Strategy, StrategyKind, SynthContext};
use crate::bitblast::{encode_body, Circuit, Lit, SatSolver, SolveStatus, Word, TRUE};
use crate::lvm::{Instruction, Opcode, Operand, Program, WordWidth};

struct Template {
    arity: usize,
    opsel: Vec<Vec<Lit>>,
    argsel: Vec<[Vec<Lit>; 3]>,
    outsel: Vec<Vec<Lit>>,
    consts: Vec<Word>,
}

pub struct Symbolic {
    state: Option<(SatSolver, Vec<Template>)>,
    ops: Vec<Opcode>,
}

impl Default for Symbolic {
    fn default() -> Self {
        Self::new()
    }
}

fn select(c: &mut Circuit, sel: &[Lit], pool: &[&Word], bits: usize) -> Word {
    (0..bits)
        .map(|b| {
            let terms: Vec<Lit> = sel.iter().zip(pool).map(|(&s, w)| c.and(s, w[b])).collect();
            c.or_all(terms)
        })
        .collect()
}

fn instantiate(c: &mut Circuit, t: &Template, ops: &[Opcode], args: &[Word], w: WordWidth) -> Vec<Word> {
    let bits = w.bits() as usize;
    let mut temps: Vec<Word> = Vec::new();
    for (i, sel) in t.opsel.iter().enumerate() {
        let pool: Vec<&Word> = args.iter().chain(&temps[..i]).chain(&t.consts).collect();
        let a: Vec<Word> = t.argsel[i].iter().map(|s| select(c, s, &pool, bits)).collect();
        let results: Vec<Word> = ops.iter().map(|&op| c.opcode(op, &a[0], &a[1], &a[2])).collect();
        let r: Word = (0..bits)
            .map(|b| {
                let terms: Vec<Lit> = sel.iter().zip(&results).map(|(&s, r)| c.and(s, r[b])).collect();
                c.or_all(terms)
            })
            .collect();
        temps.push(r);
    }
    let pool: Vec<&Word> = args.iter().chain(&temps).chain(&t.consts).collect();
    t.outsel.iter().map(|s| select(c, s, &pool, bits)).collect()
}

impl Symbolic {
    pub fn new() -> Self {
        Symbolic { state: None, ops: Vec::new() }
    }

    fn build(&mut self, ctx: &SynthContext) -> (SatSolver, Vec<Template>) {
        let p = ctx.params;
        let w = p.w_syn;
        self.ops = ctx.cfg.opcodes.clone();
        let mut c = Circuit::new();
        let mut constraints = Vec::new();
        let mut templates = Vec::new();
        for u in &ctx.spec.unknowns {
            let consts: Vec<Word> = (0..p.c).map(|_| c.input_word(w.bits())).collect();
            let mut t = Template { arity: u.in_arity, opsel: vec![], argsel: vec![], outsel: vec![], consts };
            for i in 0..p.l {
                let n = u.in_arity + i + p.c;
                let opsel: Vec<Lit> = self.ops.iter().map(|_| c.input()).collect();
                constraints.push(c.exactly_one(&opsel));
                let argsel: [Vec<Lit>; 3] = std::array::from_fn(|_| (0..n).map(|_| c.input()).collect());
                for s in &argsel {
                    constraints.push(c.exactly_one(s));
                }
                t.opsel.push(opsel);
                t.argsel.push(argsel);
            }
            for _ in 0..u.out_arity {
                let s: Vec<Lit> = (0..u.in_arity + p.l + p.c).map(|_| c.input()).collect();
                constraints.push(c.exactly_one(&s));
                t.outsel.push(s);
            }
            templates.push(t);
        }
        for test in ctx.bank {
            let vars: Vec<Word> = test.iter().map(|&v| c.constant(v & w.mask(), w.bits())).collect();
            let ops = &self.ops;
            let holds = encode_body(&mut c, ctx.spec, w, &vars, &mut |c, u, args| {
                instantiate(c, &templates[u], ops, args, w)
            });
            constraints.push(holds);
        }
        let mut sat = SatSolver::new();
        sat.set_deadline(ctx.deadline);
        for l in constraints {
            if l != TRUE {
                sat.assert(&c, l);
            }
        }
        (sat, templates)
    }

    fn decode(&self, sat: &SatSolver, templates: &[Template], w: WordWidth) -> Vec<Program> {
        let pick = |sel: &[Lit]| sel.iter().position(|&s| sat.value(s)).expect("one-hot");
        templates
            .iter()
            .map(|t| {
                let k = t.consts.len();
                let operand = |j: usize, temps: usize| {
                    if j < t.arity {
                        Operand::Input(j)
                    } else if j < t.arity + temps {
                        Operand::Temp(j - t.arity)
                    } else {
                        Operand::Const(j - t.arity - temps)
                    }
                };
                let instructions = (0..t.opsel.len())
                    .map(|i| {
                        let op = self.ops[pick(&t.opsel[i])];
                        let args: Vec<Operand> = t.argsel[i][..op.arity()].iter().map(|s| operand(pick(s), i)).collect();
                        Instruction::new(op, args)
                    })
                    .collect();
                let outputs = t.outsel.iter().map(|s| operand(pick(s), t.opsel.len())).collect();
                let constants = (0..k).map(|j| sat.word_value(&t.consts[j]) & w.mask()).collect();
                Program::new(t.arity, instructions, constants, outputs)
            })
            .collect()
    }
}

impl Strategy for Symbolic {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Symbolic
    }

    fn step(&mut self, ctx: &SynthContext) -> Step {
        if ctx.cfg.opcodes.iter().any(|o| ctx.cfg.symbolic_disable.contains(o)) {
            return Step::Unsupported;
        }
        let (mut sat, templates) = match self.state.take() {
            Some(s) => s,
            None => self.build(ctx),
        };
        match sat.solve(Some(ctx.cfg.symbolic_conflicts)) {
            SolveStatus::Unsat => Step::Exhausted,
            SolveStatus::Sat => Step::Found(self.decode(&sat, &templates, ctx.params.w_syn)),
            SolveStatus::Unknown => {
                self.state = Some((sat, templates));
                Step::Continue
            }
        }
    }
}
