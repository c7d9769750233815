//! The counterexample-guided refinement loop and its candidate generators.

mod config;
pub mod explicit;
pub mod gp;
pub mod race;
pub mod symbolic;
mod verify;

pub use config::{parse_duration, ConfigError, Scheduler, SolverConfig, StrategyKind};
pub use explicit::Explicit;
pub use gp::GpPopulation;
pub use race::{synth, SynthOutcome};
pub use symbolic::Symbolic;
pub use verify::{falsify, verify, Method, Verdict, Verification};

use crate::lattice::{generalize, next_params, Generalized, Next, ParamSet, SearchOutcome};
use crate::lvm::{max_length_bound, Program, WordWidth};
use crate::specir::{CompiledSpec, SpecProblem};
use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

/// What one unit of strategy work produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Programs satisfying every test in the bank, one per unknown.
    Found(Vec<Program>),
    /// No program vector at these parameters satisfies the bank.
    Exhausted,
    /// The strategy cannot run on this problem and drops out.
    Unsupported,
    Continue,
}

/// Everything a strategy may look at during one synthesis call.
#[derive(Clone, Copy)]
pub struct SynthContext<'a> {
    pub spec: &'a CompiledSpec,
    pub bank: &'a [Vec<u64>],
    pub params: ParamSet,
    pub cfg: &'a SolverConfig,
    pub deadline: Option<Instant>,
}

impl SynthContext<'_> {
    pub fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// A resumable candidate generator. Each `step` does a bounded amount of work.
pub trait Strategy {
    fn kind(&self) -> StrategyKind;
    fn step(&mut self, ctx: &SynthContext) -> Step;
}

impl<S: Strategy + ?Sized> Strategy for &mut S {
    fn kind(&self) -> StrategyKind {
        (**self).kind()
    }

    fn step(&mut self, ctx: &SynthContext) -> Step {
        (**self).step(ctx)
    }
}

/// Test inputs collected from counterexamples, in insertion order.
#[derive(Clone, Debug, Default)]
pub struct InputBank {
    tests: Vec<Vec<u64>>,
    seen: HashSet<Vec<u64>>,
}

impl InputBank {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `t`; false if it was already present.
    pub fn insert(&mut self, t: Vec<u64>) -> bool {
        if self.seen.insert(t.clone()) {
            self.tests.push(t);
            true
        } else {
            false
        }
    }

    pub fn tests(&self) -> &[Vec<u64>] {
        &self.tests
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub programs: Vec<Program>,
    pub params: ParamSet,
    pub producer: StrategyKind,
}

/// Why a run ended without a definite answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Timeout,
    /// The length bound ran out but it does not prove UNSAT: the opcode set is
    /// restricted or the maximum length is below the universality bound.
    LengthBound,
    /// A candidate could be neither refuted nor proved at the target width.
    VerificationIncomplete,
    /// Every enabled strategy declined the problem.
    NoStrategy,
}

impl Reason {
    pub fn name(self) -> &'static str {
        match self {
            Reason::Timeout => "timeout",
            Reason::LengthBound => "length-bound",
            Reason::VerificationIncomplete => "verification-incomplete",
            Reason::NoStrategy => "no-strategy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat { witness: Vec<(String, Program)>, minimal_length: usize },
    Unsat,
    BoundExhausted(Reason),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Sat { .. } => f.write_str("SAT"),
            Outcome::Unsat => f.write_str("UNSAT"),
            Outcome::BoundExhausted(_) => f.write_str("BOUND_EXHAUSTED"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Candidates produced by synthesis.
    pub iterations: u64,
    /// Decisive synthesis answers per strategy, indexed like [`StrategyKind::ALL`].
    pub synth_wins: [u64; 3],
    /// Decisive verification answers: explicit (enumeration or sampling) and symbolic.
    pub verif_wins: [u64; 3],
    pub synth_time: Duration,
    pub verif_time: Duration,
    pub generalize_time: Duration,
    pub total_time: Duration,
    /// Every parameter point visited, in order.
    pub trajectory: Vec<ParamSet>,
    pub bank_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisResult {
    pub outcome: Outcome,
    pub target_width: WordWidth,
    pub stats: Stats,
}

impl SynthesisResult {
    pub fn witness(&self) -> Option<&[(String, Program)]> {
        match &self.outcome {
            Outcome::Sat { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

fn record_verification(stats: &mut Stats, v: &Verification) {
    match v.method {
        Some(Method::Exhaustive | Method::Sampling) => stats.verif_wins[0] += 1,
        Some(Method::Symbolic) => stats.verif_wins[1] += 1,
        None => {}
    }
}

/// Target width for `prob` under `cfg`.
pub fn target_width(prob: &SpecProblem, cfg: &SolverConfig) -> WordWidth {
    cfg.target_width.map(WordWidth::of).unwrap_or_else(|| prob.default_target_width())
}

/// Solves `prob`: synthesize a candidate for the bank, verify it, and either
/// return it or learn a counterexample, walking the parameter lattice on failure.
pub fn refinement_loop(prob: &SpecProblem, cfg: &SolverConfig) -> SynthesisResult {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    let spec = CompiledSpec::new(prob);
    let target = target_width(prob, cfg);
    let full_bound = max_length_bound(prob.input_bits_at(target));
    let bound = cfg.max_length.map_or(full_bound, |m| m.min(full_bound));
    let names: Vec<String> = prob.unknowns.iter().map(|u| u.name.clone()).collect();

    let mut stats = Stats::default();
    let mut bank = InputBank::new();
    bank.insert(vec![0; spec.var_widths.len()]);
    let mut gp = GpPopulation::new(cfg.seed);
    let mut params = ParamSet::initial(target, cfg.initial_width);

    let finish = |outcome: Outcome, mut stats: Stats, bank: &InputBank| {
        stats.total_time = start.elapsed();
        stats.bank_size = bank.len();
        SynthesisResult { outcome, target_width: target, stats }
    };
    let timed_out = || deadline.is_some_and(|d| Instant::now() >= d);

    loop {
        if stats.trajectory.last() != Some(&params) {
            stats.trajectory.push(params);
        }
        if timed_out() {
            return finish(Outcome::BoundExhausted(Reason::Timeout), stats, &bank);
        }

        let t = Instant::now();
        let ctx = SynthContext { spec: &spec, bank: bank.tests(), params, cfg, deadline };
        let res = synth(&ctx, &mut gp);
        stats.synth_time += t.elapsed();
        let cand = match res {
            SynthOutcome::Timeout => return finish(Outcome::BoundExhausted(Reason::Timeout), stats, &bank),
            SynthOutcome::Incomplete => return finish(Outcome::BoundExhausted(Reason::NoStrategy), stats, &bank),
            SynthOutcome::None(by) => {
                stats.synth_wins[by as usize] += 1;
                let at_target = params.w_syn == target;
                let b = if at_target { bound } else { bound.min(max_length_bound(prob.input_bits_at(params.w_syn))) };
                match next_params(params, SearchOutcome::SynthFailed, b) {
                    Next::Params(q) => params = q,
                    // A failure below the target width refutes nothing at the target.
                    Next::Exhausted if !at_target => {
                        params = ParamSet { l: 1, c: 0, w_syn: WordWidth::of(params.w_syn.bits() + 1), w_target: target };
                    }
                    Next::Exhausted => {
                        let proves = cfg.full_opcode_set() && bound == full_bound;
                        let o = if proves { Outcome::Unsat } else { Outcome::BoundExhausted(Reason::LengthBound) };
                        return finish(o, stats, &bank);
                    }
                }
                continue;
            }
            SynthOutcome::Found(c) => c,
        };
        stats.synth_wins[cand.producer as usize] += 1;
        stats.iterations += 1;

        let t = Instant::now();
        let v = verify(&spec, &cand.programs, target, cfg, deadline);
        stats.verif_time += t.elapsed();
        record_verification(&mut stats, &v);
        let target_cex = match v.verdict {
            Verdict::Valid => return finish(sat(&names, cand.programs), stats, &bank),
            Verdict::Counterexample(a) => Some(a),
            Verdict::Incomplete if timed_out() => {
                return finish(Outcome::BoundExhausted(Reason::Timeout), stats, &bank)
            }
            Verdict::Incomplete => None,
        };
        if params.w_syn == target {
            match target_cex {
                Some(a) => {
                    bank.insert(a);
                    continue;
                }
                None => return finish(Outcome::BoundExhausted(Reason::VerificationIncomplete), stats, &bank),
            }
        }

        let t = Instant::now();
        let v = verify(&spec, &cand.programs, params.w_syn, cfg, deadline);
        stats.verif_time += t.elapsed();
        record_verification(&mut stats, &v);
        if let Verdict::Counterexample(a) = v.verdict {
            bank.insert(a);
            continue;
        }

        let t = Instant::now();
        let mut sub = Stats::default();
        let g = generalize(&cand.programs, params.w_syn, target, cfg.generalize_cap, |ps| {
            let v = verify(&spec, ps, target, cfg, deadline);
            record_verification(&mut sub, &v);
            v.verdict
        });
        stats.generalize_time += t.elapsed();
        for k in 0..3 {
            stats.verif_wins[k] += sub.verif_wins[k];
        }
        match g {
            Generalized::Valid(ps) => return finish(sat(&names, ps), stats, &bank),
            Generalized::Failed(cex) => {
                if let Some(a) = target_cex.or(cex) {
                    bank.insert(a);
                }
                if let Next::Params(q) = next_params(params, SearchOutcome::VerifSmallOkGenFailed, usize::MAX) {
                    params = q;
                }
            }
        }
    }
}

fn sat(names: &[String], programs: Vec<Program>) -> Outcome {
    let minimal_length = programs.iter().map(Program::len).sum();
    Outcome::Sat { witness: names.iter().cloned().zip(programs).collect(), minimal_length }
}
