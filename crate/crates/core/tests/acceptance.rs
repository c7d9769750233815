//! End-to-end acceptance checks, one line per criterion.
//!
//! Witnesses are re-checked with the interpreter in `common` and the loop
//! conditions written out below, not with the solver's own evaluator.

mod common;

use common::{random_spec, run, run1};
use fsynth::cegis::{
    falsify, refinement_loop, Explicit, Outcome, SolverConfig, Step, Strategy, StrategyKind, Symbolic, SynthContext,
    Verdict,
};
use fsynth::frontends::{parse_loop, Body, LoopSystem, Roles, TaskKind};
use fsynth::harness::{self, load_instance};
use fsynth::lattice::{generalize, Generalized, ParamSet};
use fsynth::lvm::{compile_table, parse_program, parse_programs, Program, WordWidth};
use fsynth::specir::{parse_spec, skolemize, CompiledSpec, Expr, Quantifier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

type Witness = HashMap<String, Program>;

fn mask(bits: u32) -> u64 {
    if bits == 64 {
        u64::MAX
    } else {
        (1 << bits) - 1
    }
}

/// Direct expression evaluation; unknowns are run through the witness.
fn eval(e: &Expr, env: &HashMap<String, u64>, wit: &Witness, w: u32) -> u64 {
    let m = mask(w);
    let signed = |v: u64| ((v << (64 - w)) as i64) >> (64 - w);
    match e {
        Expr::Lit(v) => v & m,
        Expr::Width => w as u64 & m,
        Expr::Var(n) => env[n],
        Expr::Apply { name, args, index } => {
            let a: Vec<u64> = args.iter().map(|x| eval(x, env, wit, w)).collect();
            run(&wit[name], &a, w)[*index]
        }
        Expr::Un(op, a) => {
            let a = eval(a, env, wit, w);
            use fsynth::specir::UnOp::*;
            match op {
                Not => (a == 0) as u64,
                BitNot => !a & m,
                Neg => a.wrapping_neg() & m,
            }
        }
        Expr::Ite(c, a, b) => {
            if eval(c, env, wit, w) != 0 {
                eval(a, env, wit, w)
            } else {
                eval(b, env, wit, w)
            }
        }
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval(a, env, wit, w), eval(b, env, wit, w));
            use fsynth::specir::BinOp::*;
            let v = match op {
                Add => a.wrapping_add(b),
                Sub => a.wrapping_sub(b),
                Mul => a.wrapping_mul(b),
                UDiv => a.checked_div(b).unwrap_or(m),
                URem => a.checked_rem(b).unwrap_or(a),
                And => a & b,
                Or => a | b,
                Xor => a ^ b,
                Shl => if b >= w as u64 { 0 } else { a << b },
                LShr => if b >= w as u64 { 0 } else { a >> b },
                AShr => (signed(a) >> b.min(w as u64 - 1)) as u64,
                Min => a.min(b),
                Max => a.max(b),
                Eq => (a == b) as u64,
                Ne => (a != b) as u64,
                Ult => (a < b) as u64,
                Ule => (a <= b) as u64,
                Ugt => (a > b) as u64,
                Uge => (a >= b) as u64,
                Slt => (signed(a) < signed(b)) as u64,
                Sle => (signed(a) <= signed(b)) as u64,
                Sgt => (signed(a) > signed(b)) as u64,
                Sge => (signed(a) >= signed(b)) as u64,
                LAnd => (a != 0 && b != 0) as u64,
                LOr => (a != 0 || b != 0) as u64,
                Implies => (a == 0 || b != 0) as u64,
            };
            v & m
        }
    }
}

/// Every assignment of the given widths.
fn assignments(widths: &[u32]) -> impl Iterator<Item = Vec<u64>> + '_ {
    let total: u32 = widths.iter().sum();
    assert!(total <= 24, "domain too large to enumerate");
    (0..1u64 << total).map(move |mut k| {
        widths
            .iter()
            .map(|&b| {
                let v = k & mask(b);
                k >>= b;
                v
            })
            .collect()
    })
}

fn witness_map(w: &[(String, Program)]) -> Witness {
    w.iter().cloned().collect()
}

/// The loop conditions of each task, checked over every state pair.
struct LoopChecker<'a> {
    sys: &'a LoopSystem,
    w: u32,
}

impl LoopChecker<'_> {
    fn env(&self, x: &[u64], xp: &[u64]) -> HashMap<String, u64> {
        let mut env = HashMap::new();
        for (k, (n, _)) in self.sys.state.iter().enumerate() {
            env.insert(n.clone(), x[k]);
            env.insert(format!("{n}'"), xp.get(k).copied().unwrap_or(0));
        }
        env
    }

    fn widths(&self) -> Vec<u32> {
        self.sys.state.iter().map(|(_, b)| (*b).min(self.w)).collect()
    }

    fn pairs(&self) -> Vec<(Vec<u64>, Vec<u64>)> {
        let ws = self.widths();
        let both: Vec<u32> = ws.iter().chain(&ws).copied().collect();
        assignments(&both).map(|a| (a[..ws.len()].to_vec(), a[ws.len()..].to_vec())).collect()
    }

    fn holds(&self, e: &Expr, x: &[u64], xp: &[u64], wit: &Witness) -> bool {
        eval(e, &self.env(x, xp), wit, self.w) != 0
    }

    fn step(&self, x: &[u64], xp: &[u64], wit: &Witness) -> bool {
        match &self.sys.body {
            Body::Functional(es) => {
                es.iter().zip(xp).zip(self.widths()).all(|((e, &v), b)| eval(e, &self.env(x, &[]), wit, self.w) & mask(b) == v)
            }
            Body::Relation(r) => self.holds(r, x, xp, wit),
        }
    }

    fn safety(&self, s: &Program) -> bool {
        let wit = Witness::new();
        let sat = |x: &[u64]| run1(s, x, self.w) != 0;
        self.pairs().iter().all(|(x, xp)| {
            let g = self.holds(&self.sys.guard, x, xp, &wit);
            (!self.holds(&self.sys.init, x, xp, &wit) || sat(x))
                && (!(sat(x) && g && self.step(x, xp, &wit)) || sat(xp))
                && (!(sat(x) && !g) || self.holds(self.sys.assertion.as_ref().unwrap(), x, xp, &wit))
        })
    }

    fn termination(&self, r: &Program, inv: &Program) -> bool {
        let wit = Witness::new();
        let lex_gt = |a: &[u64], b: &[u64]| {
            for (p, q) in a.iter().zip(b) {
                if p != q {
                    return p > q;
                }
            }
            false
        };
        let dim = self.sys.rank_dim;
        self.pairs().iter().all(|(x, xp)| {
            let g = self.holds(&self.sys.guard, x, xp, &wit);
            let wx = run1(inv, x, self.w) != 0;
            let init_ok = !(self.holds(&self.sys.init, x, xp, &wit) && g) || wx;
            let (rx, rxp) = (run(r, x, self.w), run(r, xp, self.w));
            let step_ok = !(g && wx && self.step(x, xp, &wit))
                || (run1(inv, xp, self.w) != 0 && lex_gt(&rx, &vec![0; dim]) && lex_gt(&rx, &rxp));
            init_ok && step_ok
        })
    }

    fn nontermination(&self, n: &Program, c: &Program, x0: &[u64]) -> bool {
        let wit = Witness::new();
        let ws = self.widths();
        let inn = |x: &[u64]| run1(n, x, self.w) != 0;
        inn(x0)
            && assignments(&ws).all(|x| {
                let cx: Vec<u64> = run(c, &x, self.w).iter().zip(&ws).map(|(v, &b)| v & mask(b)).collect();
                !inn(&x) || (self.holds(&self.sys.guard, &x, &cx, &wit) && self.step(&x, &cx, &wit) && inn(&cx))
            })
    }

    /// Checks a witness for `task` by role.
    fn check(&self, task: TaskKind, roles: &Roles, wit: &Witness) -> bool {
        let get = |r: &Option<String>| &wit[r.as_ref().unwrap()];
        let term = || self.termination(get(&roles.rank), get(&roles.rank_invariant));
        let nonterm = || {
            let x0: Vec<u64> = roles
                .initial
                .iter()
                .zip(self.widths())
                .map(|(v, b)| run1(&wit[&format!("F_{v}")], &[], self.w) & mask(b))
                .collect();
            self.nontermination(get(&roles.recurrence), get(&roles.successor), &x0)
        };
        match task {
            TaskKind::Safety => self.safety(get(&roles.invariant)),
            TaskKind::Termination => term(),
            TaskKind::NonTermination => nonterm(),
            TaskKind::Auto => {
                if run1(get(&roles.selector), &[], self.w) != 0 {
                    term()
                } else {
                    nonterm()
                }
            }
            TaskKind::Superopt => unreachable!(),
        }
    }
}

/// Independent re-verification of a corpus witness at the instance's target
/// width. Returns whether the check was exhaustive.
fn recheck(path: &Path, wit: &Witness, target: u32) -> Result<bool, String> {
    let text = std::fs::read_to_string(path).unwrap();
    match path.extension().and_then(|e| e.to_str()).unwrap() {
        "sopt" => {
            let (reference, _) = parse_program(&text).unwrap();
            let p = &wit["P"];
            let bits = reference.arity as u32 * target;
            let ok_at = |x: &[u64]| run(p, x, target) == run(&reference, x, target);
            if bits <= 20 {
                let ws = vec![target; reference.arity];
                return if assignments(&ws).all(|x| ok_at(&x)) { Ok(true) } else { Err("differs from reference".into()) };
            }
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..100_000 {
                let x: Vec<u64> = (0..reference.arity).map(|_| rng.gen::<u64>() & mask(target)).collect();
                if !ok_at(&x) {
                    return Err(format!("differs from reference at {x:?}"));
                }
            }
            Ok(false)
        }
        "spec" => {
            let raw = parse_spec(&text).unwrap();
            assert!(raw.prefix.iter().all(|b| b.quantifier == Quantifier::Forall));
            let ws: Vec<u32> = raw.prefix.iter().map(|b| b.width.min(target)).collect();
            let ok = assignments(&ws).all(|a| {
                let env = raw.prefix.iter().map(|b| b.name.clone()).zip(a).collect();
                eval(&raw.body, &env, wit, target) != 0
            });
            if ok {
                Ok(true)
            } else {
                Err("body fails".into())
            }
        }
        "loop" => {
            let sys = parse_loop(&text).unwrap();
            let task = sys.task.unwrap_or(TaskKind::Auto);
            let inst = load_instance(path, Some(task)).unwrap();
            let checker = LoopChecker { sys: &sys, w: target };
            if checker.check(task, &inst.encoded.roles, wit) {
                Ok(true)
            } else {
                Err(format!("{} conditions fail", task.name()))
            }
        }
        _ => unreachable!(),
    }
}

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn line(&mut self, n: usize, pass: bool, detail: String) {
        if !pass {
            self.failures.push(n);
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        // Written past the test harness's capture so the lines always show.
        let _ = writeln!(std::io::stderr(), "acceptance criterion {n}: {verdict}  {detail}");
    }
}

fn solve_file(name: &str, cfg: &SolverConfig) -> (harness::Instance, fsynth::cegis::SynthesisResult, Duration) {
    let inst = load_instance(&corpus(name), None).unwrap();
    let t = Instant::now();
    let run = harness::solve_instance(&inst, cfg);
    (inst, run.result, t.elapsed())
}

fn exhausted(s: &mut dyn Strategy, ctx: &SynthContext) -> bool {
    loop {
        match s.step(ctx) {
            Step::Found(_) => return false,
            Step::Exhausted => return true,
            Step::Continue => {}
            Step::Unsupported => panic!("unsupported"),
        }
    }
}

fn isolate_lsb(r: &mut Report) {
    let (inst, res, t) = solve_file("isolate-lsb.sopt", &SolverConfig::default());
    let Some(w) = res.witness() else {
        return r.line(1, false, format!("no witness: {}", res.outcome));
    };
    let p = &w[0].1;
    let size = match &res.outcome {
        Outcome::Sat { minimal_length, .. } => *minimal_length,
        _ => 0,
    };
    let at8 = (0..256u64).all(|x| run1(p, &[x], 8) == x & x.wrapping_neg() & 0xff);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let at32 = (0..100_000).all(|_| {
        let x = rng.gen::<u32>() as u64;
        run1(p, &[x], 32) == x & x.wrapping_neg() & 0xffff_ffff
    });
    let spec = CompiledSpec::new(&inst.problem);
    let symbolic = falsify(&spec, std::slice::from_ref(p), WordWidth::of(32), None) == Some(Verdict::Valid);

    // No single instruction with up to two constants matches on the byte domain.
    let spec8 = CompiledSpec::new(&skolemize(&parse_spec("fun P(1)->1; forall x:8; P(x) = x & -x").unwrap()));
    let bank: Vec<Vec<u64>> = (0..256).map(|x| vec![x]).collect();
    let cfg = SolverConfig::default();
    let w8 = WordWidth::of(8);
    let refuted = (0..=2).all(|c| {
        let params = ParamSet { l: 1, c, w_syn: w8, w_target: w8 };
        let ctx = SynthContext { spec: &spec8, bank: &bank, params, cfg: &cfg, deadline: None };
        exhausted(&mut Explicit::new(), &ctx)
    });
    let pass = size == 2 && p.len() == 2 && at8 && at32 && symbolic && refuted && t < Duration::from_secs(120);
    r.line(
        1,
        pass,
        format!(
            "size {size}, byte domain {at8}, 10^5 samples at 32 bits {at32}, symbolic {symbolic}, length 1 refuted {refuted}, {:.2}s",
            t.as_secs_f64()
        ),
    );
}

fn geq(r: &mut Report) {
    let cfg = SolverConfig::from_text("target_width=8").unwrap();
    let (_, res, t) = solve_file("geq.spec", &cfg);
    let Some(w) = res.witness() else {
        return r.line(2, false, format!("no witness: {}", res.outcome));
    };
    let p = &w[0].1;
    let ok = (0..8u64).all(|x| run1(p, &[x], 8) >= x);
    let constant = (0..8u64).map(|x| run1(p, &[x], 8)).collect::<std::collections::HashSet<_>>().len() == 1;
    // The constant program from the worked example is also a witness.
    let eight = parse_program("arity 1\nconsts 8\nt0 := add c0 c0\noutputs c0\n").unwrap().0;
    let eight_ok = (0..8u64).all(|x| run1(&eight, &[x], 8) >= x);
    let pass = p.len() == 1 && ok && eight_ok && t < Duration::from_secs(5);
    r.line(
        2,
        pass,
        format!(
            "length {}, re-verified {ok}, witness {} (`return 8` also valid: {eight_ok}), {:.3}s",
            p.len(),
            if constant { "constant" } else { "is not constant; lattice order reaches c=0 first" },
            t.as_secs_f64()
        ),
    );
}

fn unsat(r: &mut Report) {
    let cfg = SolverConfig::default();
    assert!(cfg.full_opcode_set() && cfg.strategies.contains(&StrategyKind::Symbolic));
    let (_, res, t) = solve_file("unsat2.spec", &cfg);
    let last = res.stats.trajectory.last().map_or(0, |p| p.l);
    let pass = res.outcome == Outcome::Unsat && last == 4 && t < Duration::from_secs(600);
    r.line(3, pass, format!("{} after exhausting length {last}, {:.2}s", res.outcome, t.as_secs_f64()));
}

fn loop_task(n: usize, r: &mut Report, file: &str, task: TaskKind, limit: u64) -> Option<(LoopSystem, Duration)> {
    let path = corpus(file);
    let sys = parse_loop(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let inst = load_instance(&path, Some(task)).unwrap();
    let t = Instant::now();
    let res = harness::solve_instance(&inst, &SolverConfig::default()).result;
    let t = t.elapsed();
    let Some(w) = res.witness() else {
        r.line(n, false, format!("{}: {}", file, res.outcome));
        return None;
    };
    let ok = LoopChecker { sys: &sys, w: res.target_width.bits() }.check(task, &inst.encoded.roles, &witness_map(w));
    let pass = ok && t < Duration::from_secs(limit);
    if n != 5 {
        r.line(n, pass, format!("{file}: {} witness re-checked {ok}, {:.3}s", task.name(), t.as_secs_f64()));
        return None;
    }
    pass.then_some((sys, t))
}

fn nontermination(r: &mut Report) {
    let Some((sys, t)) = loop_task(5, r, "identity.loop", TaskKind::NonTermination, 60) else {
        if !r.failures.contains(&5) {
            r.line(5, false, "non-termination witness failed the re-check".into());
        }
        return;
    };
    assert_eq!(sys.state[0].1, 3);
    let inst = load_instance(&corpus("identity.loop"), Some(TaskKind::Termination)).unwrap();
    let cfg = SolverConfig::from_text("timeout=10s").unwrap();
    let other = harness::solve_instance(&inst, &cfg).result.outcome;
    let exclusive = !matches!(other, Outcome::Sat { .. });
    r.line(
        5,
        exclusive,
        format!("identity.loop: recurrence set re-checked true, {:.3}s; termination encoding gives {other}", t.as_secs_f64()),
    );
}

fn soundness_sweep(r: &mut Report) {
    let recs = harness::bench(&corpus_dir(), &SolverConfig::from_text("timeout=60s").unwrap()).unwrap();
    let (mut sat, mut exhaustive, mut bad) = (0, 0, Vec::new());
    for rec in &recs {
        if rec.verdict != "SAT" {
            continue;
        }
        sat += 1;
        let wit = witness_map(&parse_programs(&rec.witness).unwrap().0);
        match recheck(&corpus(&rec.instance), &wit, rec.target_width) {
            Ok(true) => exhaustive += 1,
            Ok(false) => {}
            Err(e) => bad.push(format!("{}: {e}", rec.instance)),
        }
    }
    let sampled = sat - exhaustive;
    r.line(
        7,
        bad.is_empty() && sat > 0,
        format!(
            "{} instances, {sat} SAT, {exhaustive} re-verified exhaustively, {sampled} above 20 input bits sampled, failures {bad:?}",
            recs.len()
        ),
    );
}

fn properties(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w3 = WordWidth::of(3);

    let universal = (0..100).all(|_| {
        let table: Vec<(u64, u64)> = (0..8).map(|k| (k, rng.gen_range(0..8))).collect();
        let p = compile_table(&table, w3).unwrap();
        table.iter().all(|&(k, v)| run1(&p, &[k], 3) == v)
    });

    let (mut max_iters, mut decided) = (0, 0);
    let bounded = (0..50).all(|_| {
        let prob = skolemize(&parse_spec(&random_spec(&mut rng, 3)).unwrap());
        let res = refinement_loop(&prob, &SolverConfig::from_text("timeout=5s").unwrap());
        max_iters = max_iters.max(res.stats.iterations);
        decided += !matches!(res.outcome, Outcome::BoundExhausted(_)) as usize;
        res.stats.iterations <= 8
    });

    let mut found = 0;
    let agree = (0..20).all(|_| {
        let prob = skolemize(&parse_spec(&random_spec(&mut rng, 3)).unwrap());
        let spec = CompiledSpec::new(&prob);
        let bank: Vec<Vec<u64>> = (0..8).filter(|_| rng.gen_bool(0.5)).map(|x| vec![x]).collect();
        let params = ParamSet { l: rng.gen_range(1..=2), c: rng.gen_range(0..=1), w_syn: w3, w_target: w3 };
        let cfg = SolverConfig::default();
        let ctx = SynthContext { spec: &spec, bank: &bank, params, cfg: &cfg, deadline: None };
        let e = exhausted(&mut Explicit::new(), &ctx);
        found += !e as usize;
        e == exhausted(&mut Symbolic::new(), &ctx)
    });

    // Shift right by width-1 found at 8 bits lifts to 32 bits by the `m-1 -> n-1` rule.
    let prob = skolemize(&parse_spec("fun P(1)->1; forall x:32; P(x) = ((x <s 0) ? 1 : 0)").unwrap());
    let spec = CompiledSpec::new(&prob);
    let small = parse_program("arity 1\nconsts 7\nt0 := lshr in0 c0\noutputs t0\n").unwrap().0;
    let cfg = SolverConfig::default();
    let lifted = generalize(std::slice::from_ref(&small), WordWidth::of(8), WordWidth::of(32), cfg.generalize_cap, |ps| {
        fsynth::cegis::verify(&spec, ps, WordWidth::of(32), &cfg, None).verdict
    });
    let lift_ok = match &lifted {
        Generalized::Valid(ps) => {
            ps[0].constants == [31] && falsify(&spec, ps, WordWidth::of(32), None) == Some(Verdict::Valid)
        }
        Generalized::Failed(_) => false,
    };
    let e2e = refinement_loop(&prob, &SolverConfig::from_text("opcodes=lshr\ninitial_width=8").unwrap());
    let e2e_const = e2e.witness().map(|w| w[0].1.constants.clone());

    r.line(
        8,
        universal && bounded && agree && lift_ok && e2e_const == Some(vec![31]),
        format!(
            "(a) 100 tables exact {universal}; (b) 50 specs, max {max_iters} iterations, {decided} decided, bound held {bounded}; \
             (c) 20 triples agree {agree} ({found} with a program); (d) 7 lifts to 31 {lift_ok}, end to end constants {e2e_const:?}"
        ),
    );
}

fn determinism(r: &mut Report) {
    let cfg = SolverConfig::from_text("seed=5\ntimeout=60s").unwrap();
    let a = harness::bench(&corpus_dir(), &cfg).unwrap();
    let b = harness::bench(&corpus_dir(), &cfg).unwrap();
    let same = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.without_times() == y.without_times());
    r.line(9, same && !a.is_empty(), format!("{} records, identical apart from times {same}", a.len()));
}

#[test]
fn acceptance_criteria() {
    let mut r = Report { failures: Vec::new() };
    isolate_lsb(&mut r);
    geq(&mut r);
    unsat(&mut r);
    loop_task(4, &mut r, "countdown.loop", TaskKind::Termination, 120);
    nontermination(&mut r);
    loop_task(6, &mut r, "count-to-ten.loop", TaskKind::Safety, 120);
    soundness_sweep(&mut r);
    properties(&mut r);
    determinism(&mut r);
    assert!(r.failures.is_empty(), "failed criteria: {:?}", r.failures);
}
