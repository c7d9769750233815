//! Running the enabled strategies against each other on one synthesis query.

use super::{Candidate, Explicit, GpPopulation, Scheduler, Step, Strategy, StrategyKind, Symbolic, SynthContext};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynthOutcome {
    Found(Candidate),
    /// A complete strategy showed that no program vector fits the bank.
    None(StrategyKind),
    /// Every strategy dropped out without an answer.
    Incomplete,
    Timeout,
}

fn outcome(ctx: &SynthContext, kind: StrategyKind, step: Step) -> SynthOutcome {
    match step {
        Step::Found(programs) => SynthOutcome::Found(Candidate { programs, params: ctx.params, producer: kind }),
        Step::Exhausted => SynthOutcome::None(kind),
        Step::Unsupported | Step::Continue => unreachable!("not an answer"),
    }
}

fn fresh(kind: StrategyKind) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Explicit => Box::new(Explicit::new()),
        StrategyKind::Symbolic => Box::new(Symbolic::new()),
        StrategyKind::Gp => unreachable!("the population is passed in"),
    }
}

/// Races the strategies of `ctx.cfg`; the first definitive answer wins.
///
/// Explicit and symbolic search start afresh on each call. The GP population
/// is carried across calls, which is what makes its evolution incremental.
pub fn synth(ctx: &SynthContext, gp: &mut GpPopulation) -> SynthOutcome {
    match ctx.cfg.scheduler {
        Scheduler::Lockstep => lockstep(ctx, gp),
        Scheduler::Threaded => threaded(ctx, gp),
    }
}

fn lockstep(ctx: &SynthContext, gp: &mut GpPopulation) -> SynthOutcome {
    let mut gp = Some(gp);
    let mut active: Vec<Box<dyn Strategy + '_>> = Vec::new();
    for &k in &ctx.cfg.strategies {
        match k {
            StrategyKind::Gp => {
                if let Some(g) = gp.take() {
                    active.push(Box::new(g));
                }
            }
            _ => active.push(fresh(k)),
        }
    }
    while !active.is_empty() {
        let mut i = 0;
        while i < active.len() {
            if ctx.timed_out() {
                return SynthOutcome::Timeout;
            }
            match active[i].step(ctx) {
                Step::Continue => i += 1,
                Step::Unsupported => {
                    active.remove(i);
                }
                s => return outcome(ctx, active[i].kind(), s),
            }
        }
    }
    SynthOutcome::Incomplete
}

fn threaded(ctx: &SynthContext, gp: &mut GpPopulation) -> SynthOutcome {
    let cancel = AtomicBool::new(false);
    let answer: Mutex<Option<(StrategyKind, Step)>> = Mutex::new(None);
    let mut gp = Some(gp);
    std::thread::scope(|scope| {
        for &k in &ctx.cfg.strategies {
            let g = if k == StrategyKind::Gp {
                match gp.take() {
                    Some(g) => Some(g),
                    None => continue,
                }
            } else {
                None
            };
            let (cancel, answer) = (&cancel, &answer);
            scope.spawn(move || {
                let mut s: Box<dyn Strategy + '_> = match g {
                    Some(g) => Box::new(g),
                    None => fresh(k),
                };
                while !cancel.load(Ordering::Relaxed) && !ctx.timed_out() {
                    match s.step(ctx) {
                        Step::Continue => {}
                        Step::Unsupported => return,
                        r => {
                            let mut a = answer.lock().expect("no panics while held");
                            if a.is_none() {
                                *a = Some((k, r));
                            }
                            cancel.store(true, Ordering::Relaxed);
                            return;
                        }
                    }
                }
            });
        }
    });
    match answer.into_inner().expect("no panics while held") {
        Some((k, s)) => outcome(ctx, k, s),
        None if ctx.timed_out() => SynthOutcome::Timeout,
        None => SynthOutcome::Incomplete,
    }
}
