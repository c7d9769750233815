//! Encodings of loop analyses and superoptimisation into specifications.

mod loopfile;

pub use loopfile::{parse_loop, LoopParseError};

use crate::lvm::{exec, Opcode, Operand, Program, WordWidth};
use crate::specir::{BinOp, Binder, Expr, Quantifier, RawSpec, UnOp, UnknownSig};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

/// The transition of a loop body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    /// One next-state expression per state variable, over unprimed variables.
    Functional(Vec<Expr>),
    /// A boolean expression over primed and unprimed variables.
    Relation(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSystem {
    pub state: Vec<(String, u32)>,
    pub init: Expr,
    pub guard: Expr,
    pub body: Body,
    pub assertion: Option<Expr>,
    /// The analysis the file asks for, if any.
    pub task: Option<TaskKind>,
    /// Components of a lexicographic rank.
    pub rank_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Safety,
    Termination,
    NonTermination,
    /// Termination or non-termination, whichever holds.
    Auto,
    Superopt,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Safety => "safety",
            TaskKind::Termination => "terminate",
            TaskKind::NonTermination => "nonterminate",
            TaskKind::Auto => "auto",
            TaskKind::Superopt => "superopt",
        }
    }

    /// The category used in benchmark reports.
    pub fn category(self) -> &'static str {
        match self {
            TaskKind::Safety => "safety",
            TaskKind::Termination | TaskKind::NonTermination | TaskKind::Auto => "termination",
            TaskKind::Superopt => "superopt",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "safety" => Ok(TaskKind::Safety),
            "terminate" | "termination" => Ok(TaskKind::Termination),
            "nonterminate" | "nontermination" => Ok(TaskKind::NonTermination),
            "auto" => Ok(TaskKind::Auto),
            "superopt" => Ok(TaskKind::Superopt),
            _ => Err(format!("unknown task `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Loop(LoopSystem),
    Reference { program: Program, width: WordWidth },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisTask {
    pub kind: TaskKind,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("safety analysis needs an `assert` statement")]
    MissingAssertion,
    #[error("task `{0}` does not apply to this input")]
    Mismatch(TaskKind),
}

/// Names of the unknowns an encoding introduced, after clash renaming.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roles {
    pub invariant: Option<String>,
    pub rank: Option<String>,
    pub rank_invariant: Option<String>,
    pub recurrence: Option<String>,
    pub successor: Option<String>,
    /// Existential initial-state variables, one per state variable.
    pub initial: Vec<String>,
    pub selector: Option<String>,
    pub program: Option<String>,
}

/// An encoded task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoded {
    pub spec: RawSpec,
    pub roles: Roles,
}

struct Names {
    taken: HashSet<String>,
}

impl Names {
    fn new(sys: &LoopSystem) -> Self {
        let mut taken: HashSet<String> = sys.state.iter().map(|(n, _)| n.clone()).collect();
        taken.extend(sys.state.iter().map(|(n, _)| format!("{n}'")));
        Names { taken }
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut k = 2;
        while self.taken.contains(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }
}

fn unprimed(sys: &LoopSystem) -> Vec<Expr> {
    sys.state.iter().map(|(n, _)| Expr::var(n.clone())).collect()
}

fn primed(sys: &LoopSystem) -> Vec<Expr> {
    sys.state.iter().map(|(n, _)| Expr::var(format!("{n}'"))).collect()
}

fn forall(sys: &LoopSystem, with_primes: bool) -> Vec<Binder> {
    let mut b: Vec<Binder> =
        sys.state.iter().map(|(n, w)| Binder { quantifier: Quantifier::Forall, name: n.clone(), width: *w }).collect();
    if with_primes {
        b.extend(sys.state.iter().map(|(n, w)| Binder { quantifier: Quantifier::Forall, name: format!("{n}'"), width: *w }));
    }
    b
}

/// `B(x, next)`: the transition with the primed variables replaced by `next`.
pub fn transition(sys: &LoopSystem, next: &[Expr]) -> Expr {
    match &sys.body {
        Body::Functional(updates) => {
            Expr::all(next.iter().zip(updates).map(|(n, u)| Expr::bin(BinOp::Eq, n.clone(), u.clone())))
        }
        Body::Relation(r) => {
            let names: Vec<String> = sys.state.iter().map(|(n, _)| format!("{n}'")).collect();
            r.substitute(&|v| names.iter().position(|n| n == v).map(|k| next[k].clone()))
        }
    }
}

/// `a > b` in the lexicographic order on equal-length unsigned tuples.
pub fn lex_greater(a: &[Expr], b: &[Expr]) -> Expr {
    let last = a.len() - 1;
    let mut e = Expr::bin(BinOp::Ugt, a[last].clone(), b[last].clone());
    for i in (0..last).rev() {
        e = Expr::or(
            Expr::bin(BinOp::Ugt, a[i].clone(), b[i].clone()),
            Expr::and(Expr::bin(BinOp::Eq, a[i].clone(), b[i].clone()), e),
        );
    }
    e
}

fn call(name: &str, args: Vec<Expr>) -> Expr {
    Expr::apply(name, args)
}

fn results(name: &str, args: &[Expr], n: usize) -> Vec<Expr> {
    (0..n).map(|k| Expr::apply_k(name, args.to_vec(), k)).collect()
}

fn sig(name: &str, i: usize, o: usize) -> UnknownSig {
    UnknownSig::new(name, i, o)
}

/// `S(x)` with `I(x) => S(x)`, `S(x) && G(x) && B(x, x') => S(x')` and `S(x) && !G(x) => A(x)`.
pub fn encode_safety(sys: &LoopSystem) -> Result<Encoded, EncodeError> {
    let a = sys.assertion.clone().ok_or(EncodeError::MissingAssertion)?;
    let mut names = Names::new(sys);
    let s = names.fresh("S");
    let (x, xp) = (unprimed(sys), primed(sys));
    let sx = call(&s, x.clone());
    let body = Expr::all([
        Expr::implies(sys.init.clone(), sx.clone()),
        Expr::implies(Expr::all([sx.clone(), sys.guard.clone(), transition(sys, &xp)]), call(&s, xp.clone())),
        Expr::implies(Expr::and(sx, Expr::not(sys.guard.clone())), a),
    ]);
    let spec = RawSpec { unknowns: vec![sig(&s, x.len(), 1)], prefix: forall(sys, true), body };
    Ok(Encoded { spec, roles: Roles { invariant: Some(s), ..Roles::default() } })
}

fn termination_parts(sys: &LoopSystem, names: &mut Names) -> (Vec<UnknownSig>, Expr, Roles) {
    let (r, w) = (names.fresh("R"), names.fresh("W"));
    let (x, xp) = (unprimed(sys), primed(sys));
    let d = sys.rank_dim.max(1);
    let (rx, rxp) = (results(&r, &x, d), results(&r, &xp, d));
    let zero = vec![Expr::Lit(0); d];
    let wx = call(&w, x.clone());
    let body = Expr::and(
        Expr::implies(Expr::and(sys.init.clone(), sys.guard.clone()), wx.clone()),
        Expr::implies(
            Expr::all([sys.guard.clone(), wx, transition(sys, &xp)]),
            Expr::all([call(&w, xp.clone()), lex_greater(&rx, &zero), lex_greater(&rx, &rxp)]),
        ),
    );
    let roles = Roles { rank: Some(r.clone()), rank_invariant: Some(w.clone()), ..Roles::default() };
    (vec![sig(&r, x.len(), d), sig(&w, x.len(), 1)], body, roles)
}

fn nontermination_parts(sys: &LoopSystem, names: &mut Names) -> (Vec<UnknownSig>, Vec<Binder>, Expr, Roles) {
    let (n, c) = (names.fresh("N"), names.fresh("C"));
    let x = unprimed(sys);
    let x0: Vec<String> = sys.state.iter().map(|(v, _)| names.fresh(&format!("{v}0"))).collect();
    let binders = x0
        .iter()
        .zip(&sys.state)
        .map(|(name, (_, w))| Binder { quantifier: Quantifier::Exists, name: name.clone(), width: *w })
        .collect();
    let cx = results(&c, &x, x.len());
    let nx = call(&n, x.clone());
    let body = Expr::all([
        call(&n, x0.iter().map(|v| Expr::var(v.clone())).collect()),
        Expr::implies(nx.clone(), sys.guard.clone()),
        Expr::implies(nx, Expr::and(transition(sys, &cx), call(&n, cx.clone()))),
    ]);
    let roles = Roles { recurrence: Some(n.clone()), successor: Some(c.clone()), initial: x0, ..Roles::default() };
    (vec![sig(&n, x.len(), 1), sig(&c, x.len(), x.len())], binders, body, roles)
}

/// Rank `R` and invariant `W` with `I && G => W(x)` and
/// `G && W(x) && B(x, x') => W(x') && R(x) > 0 && R(x) > R(x')`.
pub fn encode_termination(sys: &LoopSystem) -> Encoded {
    let mut names = Names::new(sys);
    let (unknowns, body, roles) = termination_parts(sys, &mut names);
    Encoded { spec: RawSpec { unknowns, prefix: forall(sys, true), body }, roles }
}

/// Recurrence set `N`, successor `C` and start `x0` with
/// `N(x0) && (N(x) => G(x)) && (N(x) => B(x, C(x)) && N(C(x)))`.
pub fn encode_nontermination(sys: &LoopSystem) -> Encoded {
    let mut names = Names::new(sys);
    let (unknowns, mut prefix, body, roles) = nontermination_parts(sys, &mut names);
    prefix.extend(forall(sys, false));
    Encoded { spec: RawSpec { unknowns, prefix, body }, roles }
}

/// Either proof, picked by a constant selector `D`: `D() != 0` selects termination.
///
/// Both halves share the universal prefix, so a bare disjunction would let
/// the choice vary with `x`; the 0-ary selector makes it one global choice.
pub fn encode_auto(sys: &LoopSystem) -> Encoded {
    let mut names = Names::new(sys);
    let (mut unknowns, t, troles) = termination_parts(sys, &mut names);
    let (nu, mut prefix, n, nroles) = nontermination_parts(sys, &mut names);
    let d = names.fresh("D");
    unknowns.extend(nu);
    unknowns.push(sig(&d, 0, 1));
    prefix.extend(forall(sys, true));
    let sel = call(&d, vec![]);
    let body = Expr::or(
        Expr::and(Expr::bin(BinOp::Ne, sel.clone(), Expr::Lit(0)), t),
        Expr::and(Expr::bin(BinOp::Eq, sel, Expr::Lit(0)), n),
    );
    let roles = Roles { selector: Some(d), ..Roles { rank: troles.rank, rank_invariant: troles.rank_invariant, ..nroles } };
    Encoded { spec: RawSpec { unknowns, prefix, body }, roles }
}

/// The expression a reference program computes for output `k`.
pub fn program_expr(p: &Program, inputs: &[Expr], k: usize) -> Expr {
    let mut temps: Vec<Expr> = Vec::with_capacity(p.instructions.len());
    let read = |o: &Operand, temps: &[Expr]| match *o {
        Operand::Input(i) => inputs[i].clone(),
        Operand::Temp(t) => temps[t].clone(),
        Operand::Const(c) => Expr::Lit(p.constants[c]),
    };
    for ins in &p.instructions {
        let a: Vec<Expr> = ins.operands.iter().map(|o| read(o, &temps)).collect();
        let bin = |op| Expr::bin(op, a[0].clone(), a[1].clone());
        let e = match ins.opcode {
            Opcode::Add => bin(BinOp::Add),
            Opcode::Sub => bin(BinOp::Sub),
            Opcode::Mul => bin(BinOp::Mul),
            Opcode::Div => bin(BinOp::UDiv),
            Opcode::Neg => Expr::un(UnOp::Neg, a[0].clone()),
            Opcode::Mod => bin(BinOp::URem),
            Opcode::Min => bin(BinOp::Min),
            Opcode::Max => bin(BinOp::Max),
            Opcode::And => bin(BinOp::And),
            Opcode::Or => bin(BinOp::Or),
            Opcode::Xor => bin(BinOp::Xor),
            Opcode::Lshr => bin(BinOp::LShr),
            Opcode::Ashr => bin(BinOp::AShr),
            Opcode::Not => Expr::un(UnOp::BitNot, a[0].clone()),
            Opcode::Le => bin(BinOp::Ule),
            Opcode::Lt => bin(BinOp::Ult),
            Opcode::Sle => bin(BinOp::Sle),
            Opcode::Slt => bin(BinOp::Slt),
            Opcode::Eq => bin(BinOp::Eq),
            Opcode::Neq => bin(BinOp::Ne),
            Opcode::Implies => bin(BinOp::Implies),
            Opcode::Ite => Expr::ite(a[0].clone(), a[1].clone(), a[2].clone()),
        };
        temps.push(e);
    }
    read(&p.outputs[k], &temps)
}

/// `P(x) = reference(x)` for every output, with the reference folded in.
pub fn encode_superopt(reference: &Program, w_target: WordWidth) -> Encoded {
    let n = reference.arity;
    let vars: Vec<String> = if n == 1 { vec!["x".into()] } else { (0..n).map(|i| format!("x{i}")).collect() };
    let args: Vec<Expr> = vars.iter().map(|v| Expr::var(v.clone())).collect();
    let m = reference.outputs.len();
    let body = Expr::all((0..m).map(|k| {
        Expr::bin(BinOp::Eq, Expr::apply_k("P", args.clone(), k), program_expr(reference, &args, k))
    }));
    let prefix = vars
        .into_iter()
        .map(|name| Binder { quantifier: Quantifier::Forall, name, width: w_target.bits() })
        .collect();
    Encoded {
        spec: RawSpec { unknowns: vec![sig("P", n, m)], prefix, body },
        roles: Roles { program: Some("P".into()), ..Roles::default() },
    }
}

/// Encodes `task`, checking that its kind fits the payload.
pub fn encode(task: &AnalysisTask) -> Result<Encoded, EncodeError> {
    match (&task.payload, task.kind) {
        (Payload::Loop(s), TaskKind::Safety) => encode_safety(s),
        (Payload::Loop(s), TaskKind::Termination) => Ok(encode_termination(s)),
        (Payload::Loop(s), TaskKind::NonTermination) => Ok(encode_nontermination(s)),
        (Payload::Loop(s), TaskKind::Auto) => Ok(encode_auto(s)),
        (Payload::Reference { program, width }, TaskKind::Superopt) => Ok(encode_superopt(program, *width)),
        (_, k) => Err(EncodeError::Mismatch(k)),
    }
}

/// Which half of an `auto` encoding a witness proves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Disjunct {
    Terminating,
    NonTerminating,
}

impl fmt::Display for Disjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Disjunct::Terminating => "terminating",
            Disjunct::NonTerminating => "non-terminating",
        })
    }
}

/// Reads the selector of an `auto` witness.
pub fn auto_disjunct(roles: &Roles, witness: &[(String, Program)], w: WordWidth) -> Option<Disjunct> {
    let d = roles.selector.as_ref()?;
    let (_, p) = witness.iter().find(|(n, _)| n == d)?;
    Some(if exec(p, &[], w)[0] != 0 { Disjunct::Terminating } else { Disjunct::NonTerminating })
}
