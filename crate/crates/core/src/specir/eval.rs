use super::{BinOp, Expr, SpecProblem, UnOp, UnknownSig};
use crate::lvm::{mask_bits, validate, Program, WordWidth};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

pub type NodeId = u32;

/// A node of the hash-consed body DAG. Children always precede parents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Lit(u64),
    Width,
    Var(usize),
    /// Result `index` of call site `call`.
    Apply { call: usize, index: usize },
    Un(UnOp, NodeId),
    Bin(BinOp, NodeId, NodeId),
    Ite(NodeId, NodeId, NodeId),
}

/// One distinct application `unknown(args)`; shared by all result indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Call {
    pub unknown: usize,
    pub args: Vec<NodeId>,
}

/// The body of a problem lowered to a DAG for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledSpec {
    pub unknowns: Vec<UnknownSig>,
    /// Declared widths of the variables, in assignment order.
    pub var_widths: Vec<u32>,
    pub nodes: Vec<Node>,
    pub calls: Vec<Call>,
    pub root: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no witness for unknown `{0}`")]
    MissingWitness(String),
    #[error("witness for `{name}` has arity {arity} and {outputs} output(s), expected {want_arity} and {want_outputs}")]
    WitnessShape { name: String, arity: usize, outputs: usize, want_arity: usize, want_outputs: usize },
    #[error("witness for `{0}` is ill-formed: {1}")]
    IllFormed(String, String),
    #[error("no value for variable `{0}`")]
    MissingVar(String),
    #[error("value {value} of `{name}` does not fit in {bits} bits")]
    ValueOutOfRange { name: String, value: u64, bits: u32 },
}

/// Reusable buffers for [`CompiledSpec::eval`].
#[derive(Default, Clone, Debug)]
pub struct Scratch {
    vals: Vec<u64>,
    call_out: Vec<Vec<u64>>,
    temps: Vec<u64>,
    args: Vec<u64>,
    done: Vec<bool>,
}

impl CompiledSpec {
    pub fn new(p: &SpecProblem) -> Self {
        Self::compile(&p.unknowns, &p.universals, &p.body)
    }

    /// Lowers `body` over the given variables. Panics on names that are not
    /// declared, which parsed specifications never contain.
    pub fn compile(unknowns: &[UnknownSig], vars: &[(String, u32)], body: &Expr) -> Self {
        let mut b = Builder {
            unknowns,
            vars,
            nodes: Vec::new(),
            calls: Vec::new(),
            node_ids: HashMap::new(),
            call_ids: HashMap::new(),
        };
        let root = b.lower(body);
        CompiledSpec {
            unknowns: unknowns.to_vec(),
            var_widths: vars.iter().map(|(_, w)| *w).collect(),
            nodes: b.nodes,
            calls: b.calls,
            root,
        }
    }

    /// Checks that `programs` line up with the unknowns.
    pub fn check_witness(&self, programs: &[&Program]) -> Result<(), EvalError> {
        for (u, p) in self.unknowns.iter().zip(programs) {
            if p.arity != u.in_arity || p.outputs.len() != u.out_arity {
                return Err(EvalError::WitnessShape {
                    name: u.name.clone(),
                    arity: p.arity,
                    outputs: p.outputs.len(),
                    want_arity: u.in_arity,
                    want_outputs: u.out_arity,
                });
            }
            if let Some(v) = validate(p).first() {
                return Err(EvalError::IllFormed(u.name.clone(), v.to_string()));
            }
        }
        if programs.len() < self.unknowns.len() {
            return Err(EvalError::MissingWitness(self.unknowns[programs.len()].name.clone()));
        }
        Ok(())
    }

    /// Mask applied to variable `i` at width `w`.
    pub fn var_mask(&self, i: usize, w: WordWidth) -> u64 {
        mask_bits(self.var_widths[i].min(w.bits()))
    }

    /// Mask applied to the results of unknown `u` at width `w`.
    pub fn result_mask(&self, u: usize, w: WordWidth) -> u64 {
        match self.unknowns[u].result_width {
            Some(k) => mask_bits(k.min(w.bits())),
            None => w.mask(),
        }
    }

    /// Truth of the body under `programs` (one per unknown, in order) and
    /// `inputs` (one per variable). Inputs are truncated to their widths.
    pub fn eval(&self, programs: &[&Program], inputs: &[u64], w: WordWidth, s: &mut Scratch) -> bool {
        self.eval_root(programs, inputs, w, s) != 0
    }

    fn eval_root(&self, programs: &[&Program], inputs: &[u64], w: WordWidth, s: &mut Scratch) -> u64 {
        let Scratch { vals, call_out, temps, args, done } = s;
        vals.clear();
        call_out.resize_with(self.calls.len(), Vec::new);
        done.clear();
        done.resize(self.calls.len(), false);
        let mask = w.mask();
        for n in &self.nodes {
            let v = match *n {
                Node::Lit(v) => v & mask,
                Node::Width => w.bits() as u64 & mask,
                Node::Var(i) => inputs[i] & self.var_mask(i, w),
                Node::Apply { call, index } => {
                    if !done[call] {
                        let c = &self.calls[call];
                        args.clear();
                        args.extend(c.args.iter().map(|&a| vals[a as usize]));
                        let p = programs[c.unknown];
                        p.run_into(args, w, temps);
                        let rm = self.result_mask(c.unknown, w);
                        let out = &mut call_out[call];
                        out.clear();
                        out.extend((0..p.outputs.len()).map(|k| p.output_from(k, args, temps, w) & rm));
                        done[call] = true;
                    }
                    call_out[call][index]
                }
                Node::Un(op, a) => op.eval(vals[a as usize], w),
                Node::Bin(op, a, b) => op.eval(vals[a as usize], vals[b as usize], w),
                Node::Ite(c, a, b) => {
                    if vals[c as usize] != 0 {
                        vals[a as usize]
                    } else {
                        vals[b as usize]
                    }
                }
            };
            vals.push(v);
        }
        vals[self.root as usize]
    }
}

struct Builder<'a> {
    unknowns: &'a [UnknownSig],
    vars: &'a [(String, u32)],
    nodes: Vec<Node>,
    calls: Vec<Call>,
    node_ids: HashMap<Node, NodeId>,
    call_ids: HashMap<Call, usize>,
}

impl Builder<'_> {
    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.node_ids.get(&n) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(n.clone());
        self.node_ids.insert(n, id);
        id
    }

    fn lower(&mut self, e: &Expr) -> NodeId {
        match e {
            Expr::Lit(v) => self.intern(Node::Lit(*v)),
            Expr::Width => self.intern(Node::Width),
            Expr::Var(name) => {
                let i = self
                    .vars
                    .iter()
                    .position(|(v, _)| v == name)
                    .unwrap_or_else(|| panic!("undeclared variable `{name}`"));
                self.intern(Node::Var(i))
            }
            Expr::Apply { name, args, index } => {
                let unknown = self
                    .unknowns
                    .iter()
                    .position(|u| &u.name == name)
                    .unwrap_or_else(|| panic!("undeclared unknown `{name}`"));
                let args: Vec<NodeId> = args.iter().map(|a| self.lower(a)).collect();
                let c = Call { unknown, args };
                let call = match self.call_ids.get(&c) {
                    Some(&i) => i,
                    None => {
                        self.calls.push(c.clone());
                        self.call_ids.insert(c, self.calls.len() - 1);
                        self.calls.len() - 1
                    }
                };
                self.intern(Node::Apply { call, index: *index })
            }
            Expr::Un(op, a) => {
                let a = self.lower(a);
                self.intern(Node::Un(*op, a))
            }
            Expr::Bin(op, a, b) => {
                let a = self.lower(a);
                let b = self.lower(b);
                self.intern(Node::Bin(*op, a, b))
            }
            Expr::Ite(c, a, b) => {
                let c = self.lower(c);
                let a = self.lower(a);
                let b = self.lower(b);
                self.intern(Node::Ite(c, a, b))
            }
        }
    }
}

/// Truth of the body for named witnesses and a named assignment at width `w`.
pub fn eval_sigma(
    prob: &SpecProblem,
    witness: &BTreeMap<String, Program>,
    assignment: &BTreeMap<String, u64>,
    w: WordWidth,
) -> Result<bool, EvalError> {
    let programs = prob
        .unknowns
        .iter()
        .map(|u| witness.get(&u.name).ok_or_else(|| EvalError::MissingWitness(u.name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut inputs = Vec::with_capacity(prob.universals.len());
    for (name, k) in &prob.universals {
        let v = *assignment.get(name).ok_or_else(|| EvalError::MissingVar(name.clone()))?;
        let bits = (*k).min(w.bits());
        if v > mask_bits(bits) {
            return Err(EvalError::ValueOutOfRange { name: name.clone(), value: v, bits });
        }
        inputs.push(v);
    }
    let c = CompiledSpec::new(prob);
    c.check_witness(&programs)?;
    Ok(c.eval(&programs, &inputs, w, &mut Scratch::default()))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("domain of 2^{bits} points exceeds the exhaustive cap of 2^{cap}")]
    CapExceeded { bits: u32, cap: u32 },
}

/// All assignments of variables with the given bit counts; the first
/// variable varies fastest.
#[derive(Clone, Debug)]
pub struct DomainIter {
    bits: Vec<u32>,
    next: Option<Vec<u64>>,
}

impl DomainIter {
    pub fn new(bits: Vec<u32>) -> Self {
        let start = vec![0; bits.len()];
        DomainIter { bits, next: Some(start) }
    }
}

impl Iterator for DomainIter {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut carry = true;
        for (v, &b) in succ.iter_mut().zip(&self.bits) {
            if *v == mask_bits(b) {
                *v = 0;
            } else {
                *v += 1;
                carry = false;
                break;
            }
        }
        if !carry {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

/// Every assignment of the universals at width `w`, provided the domain has
/// at most `2^cap_bits` points.
pub fn enumerate_domain(prob: &SpecProblem, w: WordWidth, cap_bits: u32) -> Result<DomainIter, DomainError> {
    let bits = prob.input_bits_at(w);
    if bits > cap_bits {
        return Err(DomainError::CapExceeded { bits, cap: cap_bits });
    }
    Ok(DomainIter::new(prob.universals.iter().map(|(_, k)| (*k).min(w.bits())).collect()))
}

#[cfg(test)]
mod tests {
    use super::super::{parse_spec, skolemize};
    use super::*;
    use crate::lvm::{Instruction, Opcode, Operand};

    fn constant(v: u64) -> Program {
        Program::new(1, vec![], vec![v], vec![Operand::Const(0)])
    }

    fn geq() -> SpecProblem {
        skolemize(&parse_spec("fun P(1)->1; forall x:8; P(x) >=u x").unwrap())
    }

    fn run(p: &SpecProblem, wit: Program, x: u64) -> bool {
        let witness = BTreeMap::from([("P".to_string(), wit)]);
        let a = BTreeMap::from([("x".to_string(), x)]);
        eval_sigma(p, &witness, &a, WordWidth::of(8)).unwrap()
    }

    #[test]
    fn return_eight() {
        let p = geq();
        assert!(run(&p, constant(8), 7));
        assert!(run(&p, constant(8), 3));
        assert!(!run(&p, constant(5), 7));
    }

    #[test]
    fn tautology_any_witness() {
        let p = skolemize(&parse_spec("fun P(1)->1; forall x:4; P(x) = P(x)").unwrap());
        let neg = Program::new(1, vec![Instruction::new(Opcode::Neg, [Operand::Input(0)])], vec![], vec![Operand::Temp(0)]);
        let c = CompiledSpec::new(&p);
        assert_eq!(c.calls.len(), 1);
        for x in 0..16 {
            assert!(c.eval(&[&neg], &[x], WordWidth::of(4), &mut Scratch::default()));
        }
    }

    #[test]
    fn contract_errors() {
        let p = geq();
        let w = WordWidth::of(8);
        let a = BTreeMap::from([("x".to_string(), 300)]);
        let wit = BTreeMap::from([("P".to_string(), constant(1))]);
        assert!(matches!(eval_sigma(&p, &wit, &a, w), Err(EvalError::ValueOutOfRange { .. })));
        let a = BTreeMap::from([("x".to_string(), 3)]);
        assert!(matches!(eval_sigma(&p, &BTreeMap::new(), &a, w), Err(EvalError::MissingWitness(_))));
        let bad = BTreeMap::from([("P".to_string(), Program::new(2, vec![], vec![0], vec![Operand::Const(0)]))]);
        assert!(matches!(eval_sigma(&p, &bad, &a, w), Err(EvalError::WitnessShape { .. })));
    }

    #[test]
    fn narrow_widths_and_literals() {
        // At width 2 the literal 7 reads as 3 and x:4 ranges over 0..4.
        let p = skolemize(&parse_spec("forall x:4; x <=u 7 && WIDTH = 2").unwrap());
        let c = CompiledSpec::new(&p);
        let w = WordWidth::of(2);
        assert_eq!(p.input_bits_at(w), 2);
        for x in 0..16 {
            assert!(c.eval(&[], &[x], w, &mut Scratch::default()));
        }
    }

    #[test]
    fn skolem_result_width_truncates() {
        let p = skolemize(&parse_spec("exists y:2; forall x:4; y <u 4").unwrap());
        let c = CompiledSpec::new(&p);
        let f = Program::new(0, vec![], vec![15], vec![Operand::Const(0)]);
        assert!(c.eval(&[&f], &[9], WordWidth::of(4), &mut Scratch::default()));
    }

    #[test]
    fn domain_enumeration() {
        let one = skolemize(&parse_spec("forall x:2; x = x").unwrap());
        let all: Vec<_> = enumerate_domain(&one, WordWidth::of(2), 20).unwrap().collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2], vec![3]]);

        let two = skolemize(&parse_spec("forall a:1, b:2; a = b").unwrap());
        let all: Vec<_> = enumerate_domain(&two, WordWidth::of(2), 20).unwrap().collect();
        assert_eq!(all.len(), 8);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 8);

        let wide = skolemize(&parse_spec("forall x:64; x = x").unwrap());
        assert_eq!(
            enumerate_domain(&wide, WordWidth::of(64), 20).unwrap_err(),
            DomainError::CapExceeded { bits: 64, cap: 20 }
        );
        let none = skolemize(&parse_spec("1 = 1").unwrap());
        assert_eq!(enumerate_domain(&none, WordWidth::of(8), 20).unwrap().count(), 1);
    }
}
