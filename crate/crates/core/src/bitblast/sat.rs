use super::{var_of, Circuit, Gate, Lit};
use std::time::Instant;

/// Stops a solve call once a deadline passes.
pub struct Deadline(Option<Instant>);

impl cadical::Callbacks for Deadline {
    fn terminate(&mut self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    /// The conflict budget or the deadline ran out; calling again resumes.
    Unknown,
}

/// Incremental Tseitin encoding of circuit cones into CaDiCaL.
///
/// Only gates reachable from asserted literals are encoded, and each gate
/// at most once, so a circuit may keep growing between solve calls.
pub struct SatSolver {
    solver: cadical::Solver<Deadline>,
    map: Vec<i32>,
    next: i32,
    deadline: Option<Instant>,
}

impl Default for SatSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl SatSolver {
    pub fn new() -> Self {
        let mut solver = cadical::Solver::new();
        // Variable 1 stands for circuit variable 0, the constant false.
        solver.add_clause([-1]);
        SatSolver { solver, map: vec![1], next: 2, deadline: None }
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    fn sat_lit(&self, l: Lit) -> i32 {
        let v = self.map[var_of(l) as usize];
        if l & 1 == 1 {
            -v
        } else {
            v
        }
    }

    /// Encodes the cone of `l` and returns its solver literal.
    pub fn encode(&mut self, c: &Circuit, l: Lit) -> i32 {
        if self.map.len() < c.num_vars() {
            self.map.resize(c.num_vars(), 0);
        }
        let mut stack = vec![var_of(l)];
        while let Some(&v) = stack.last() {
            if self.map[v as usize] != 0 {
                stack.pop();
                continue;
            }
            match c.gate(v) {
                Gate::False => unreachable!("constant is pre-mapped"),
                Gate::Input => {
                    self.map[v as usize] = self.fresh();
                    stack.pop();
                }
                Gate::And(a, b) => {
                    let (ma, mb) = (self.map[var_of(a) as usize], self.map[var_of(b) as usize]);
                    if ma == 0 || mb == 0 {
                        if ma == 0 {
                            stack.push(var_of(a));
                        }
                        if mb == 0 {
                            stack.push(var_of(b));
                        }
                        continue;
                    }
                    let x = self.fresh();
                    self.map[v as usize] = x;
                    let (la, lb) = (self.sat_lit(a), self.sat_lit(b));
                    self.solver.add_clause([-x, la]);
                    self.solver.add_clause([-x, lb]);
                    self.solver.add_clause([x, -la, -lb]);
                    stack.pop();
                }
            }
        }
        self.sat_lit(l)
    }

    fn fresh(&mut self) -> i32 {
        let v = self.next;
        self.next += 1;
        v
    }

    /// Adds `l` as a permanent constraint.
    pub fn assert(&mut self, c: &Circuit, l: Lit) {
        let s = self.encode(c, l);
        self.solver.add_clause([s]);
    }

    /// Adds the clause `l1 ∨ … ∨ lk` over circuit literals.
    pub fn assert_any(&mut self, c: &Circuit, lits: &[Lit]) {
        let clause: Vec<i32> = lits.iter().map(|&l| self.encode(c, l)).collect();
        self.solver.add_clause(clause);
    }

    /// Solves with an optional conflict budget for this call.
    pub fn solve(&mut self, conflicts: Option<i32>) -> SolveStatus {
        if let Some(n) = conflicts {
            // Limits are reset by every solve call, so this always applies.
            let _ = self.solver.set_limit("conflicts", n);
        }
        self.solver.set_callbacks(Some(Deadline(self.deadline)));
        match self.solver.solve() {
            Some(true) => SolveStatus::Sat,
            Some(false) => SolveStatus::Unsat,
            None => SolveStatus::Unknown,
        }
    }

    /// Model value of a circuit literal after [`SolveStatus::Sat`]. Literals
    /// outside every encoded cone read as false.
    pub fn value(&self, l: Lit) -> bool {
        let v = self.map.get(var_of(l) as usize).copied().unwrap_or(0);
        let val = if v == 0 { false } else { self.solver.value(v).unwrap_or(false) };
        val ^ (l & 1 == 1)
    }

    pub fn word_value(&self, w: &[Lit]) -> u64 {
        w.iter().enumerate().fold(0, |acc, (i, &l)| acc | (self.value(l) as u64) << i)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Circuit, FALSE, TRUE};
    use super::*;

    #[test]
    fn factor_small_product() {
        let mut c = Circuit::new();
        let a = c.input_word(6);
        let b = c.input_word(6);
        let p = c.mul(&a, &b);
        let target = c.constant(35, 6);
        let eq = c.eq(&p, &target);
        let one = c.constant(1, 6);
        let a_big = c.ult(&one, &a);
        let b_big = c.ult(&one, &b);
        let mut s = SatSolver::new();
        s.assert(&c, eq);
        s.assert(&c, a_big);
        s.assert(&c, b_big);
        assert_eq!(s.solve(None), SolveStatus::Sat);
        let (va, vb) = (s.word_value(&a), s.word_value(&b));
        assert_eq!((va * vb) % 64, 35);
        assert!(va > 1 && vb > 1);
    }

    #[test]
    fn unsat_and_constants() {
        let mut c = Circuit::new();
        let x = c.input_word(4);
        let y = c.add(&x, &x);
        let bit0_set = y[0];
        let mut s = SatSolver::new();
        s.assert(&c, bit0_set);
        assert_eq!(s.solve(Some(1000)), SolveStatus::Unsat);

        let mut s = SatSolver::new();
        s.assert(&c, TRUE);
        assert_eq!(s.solve(None), SolveStatus::Sat);
        assert!(!s.value(FALSE));
        assert!(s.value(TRUE));
        s.assert(&c, FALSE);
        assert_eq!(s.solve(None), SolveStatus::Unsat);
    }
}
