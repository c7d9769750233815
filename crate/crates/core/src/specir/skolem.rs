use super::{Expr, Quantifier, RawSpec, SpecProblem, UnknownSig};
use std::collections::{HashMap, HashSet};

/// Replaces each existential variable `y` by a fresh unknown `F_y` applied to
/// the universals that precede it.
pub fn skolemize(s: &RawSpec) -> SpecProblem {
    let mut taken: HashSet<String> = s.unknowns.iter().map(|u| u.name.clone()).collect();
    taken.extend(s.prefix.iter().map(|b| b.name.clone()));
    let mut unknowns = s.unknowns.clone();
    let mut universals: Vec<(String, u32)> = Vec::new();
    let mut replace: HashMap<String, Expr> = HashMap::new();
    for b in &s.prefix {
        match b.quantifier {
            Quantifier::Forall => universals.push((b.name.clone(), b.width)),
            Quantifier::Exists => {
                let mut name = format!("F_{}", b.name);
                let mut k = 2;
                while taken.contains(&name) {
                    name = format!("F_{}_{k}", b.name);
                    k += 1;
                }
                taken.insert(name.clone());
                let args = universals.iter().map(|(v, _)| Expr::var(v.clone())).collect();
                replace.insert(b.name.clone(), Expr::apply(name.clone(), args));
                unknowns.push(UnknownSig {
                    name,
                    in_arity: universals.len(),
                    out_arity: 1,
                    result_width: Some(b.width),
                });
            }
        }
    }
    let body = if replace.is_empty() { s.body.clone() } else { s.body.substitute(&|v| replace.get(v).cloned()) };
    SpecProblem::new(unknowns, universals, body)
}
