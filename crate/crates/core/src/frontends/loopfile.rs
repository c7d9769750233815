//! The loop-system text format.
//!
//! ```text
//! state x:4, y:4;
//! init: x = 0;
//! guard: x <u 10;
//! body: x' = x + 1;
//! assert: x = 10;
//! ```
//!
//! `body-rel: <expr>` gives the transition as a relation over primed and
//! unprimed variables instead. Optional `task: safety|terminate|nonterminate|auto;`
//! and `rank: <dimension>;` statements steer the analysis.

use super::{Body, LoopSystem, TaskKind};
use crate::specir::{parse_expr, Expr, SpecError};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for LoopParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for LoopParseError {}

fn spec_err(e: SpecError) -> LoopParseError {
    let line = match &e {
        SpecError::Syntax { line, .. }
        | SpecError::Arity { line, .. }
        | SpecError::ResultIndex { line, .. }
        | SpecError::Undeclared { line, .. }
        | SpecError::Duplicate { line, .. }
        | SpecError::Width { line, .. } => *line,
    };
    LoopParseError { line, msg: e.to_string() }
}

/// `text` with everything outside `range` blanked, so that positions in
/// errors refer to the original file.
fn isolate(text: &str, range: std::ops::Range<usize>) -> String {
    text.char_indices()
        .map(|(i, ch)| if range.contains(&i) || ch == '\n' { ch } else { ' ' })
        .collect()
}

fn line_of(text: &str, at: usize) -> usize {
    text[..at].matches('\n').count() + 1
}

/// Splits at commas outside parentheses.
fn split_top(s: &str, offset: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((offset + start, &s[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((offset + start, &s[start..]));
    out
}

pub fn parse_loop(text: &str) -> Result<LoopSystem, LoopParseError> {
    // Blank out comments first; statements end at `;`.
    let clean: String = text
        .split_inclusive('\n')
        .map(|l| match l.find('#') {
            Some(k) => format!("{}{}", &l[..k], l[k..].chars().map(|c| if c == '\n' { c } else { ' ' }).collect::<String>()),
            None => l.to_string(),
        })
        .collect();
    let mut state: Option<Vec<(String, u32)>> = None;
    let (mut init, mut guard, mut body, mut assertion, mut task, mut rank) = (None, None, None, None, None, 1usize);
    let mut pos = 0;
    for stmt in clean.split(';') {
        let start = pos;
        pos += stmt.len() + 1;
        let trimmed = stmt.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let at = start + (stmt.len() - trimmed.len());
        let line = line_of(&clean, at);
        let err = |msg: String| LoopParseError { line, msg };
        let (key, rest_at) = if let Some(r) = trimmed.strip_prefix("state") {
            ("state", at + trimmed.len() - r.len())
        } else {
            let colon = trimmed.find(':').ok_or_else(|| err("expected `key: value`".into()))?;
            (trimmed[..colon].trim(), at + colon + 1)
        };
        let rest = &clean[rest_at..start + stmt.len()];
        let expr = |vars: &[(String, u32)]| parse_expr(&isolate(&clean, rest_at..start + stmt.len()), vars, &[]).map_err(spec_err);
        let dup = |seen: bool| if seen { Err(err(format!("`{key}` given twice"))) } else { Ok(()) };
        if key != "state" && key != "task" && key != "rank" && state.is_none() {
            return Err(err("`state` must come first".into()));
        }
        let vars = state.clone().unwrap_or_default();
        match key {
            "state" => {
                dup(state.is_some())?;
                let mut vs = Vec::new();
                for (_, item) in split_top(rest, 0) {
                    let (name, width) = item.split_once(':').ok_or_else(|| err(format!("expected `name:width`, found `{}`", item.trim())))?;
                    let name = name.trim();
                    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || name.starts_with(|c: char| c.is_ascii_digit()) {
                        return Err(err(format!("bad state variable name `{name}`")));
                    }
                    let width: u32 = width.trim().parse().ok().filter(|w| (1..=64).contains(w)).ok_or_else(|| err(format!("bad width `{}`", width.trim())))?;
                    if vs.iter().any(|(n, _)| n == name) {
                        return Err(err(format!("state variable `{name}` declared twice")));
                    }
                    vs.push((name.to_string(), width));
                }
                state = Some(vs);
            }
            "init" => {
                dup(init.is_some())?;
                init = Some(expr(&vars)?);
            }
            "guard" => {
                dup(guard.is_some())?;
                guard = Some(expr(&vars)?);
            }
            "assert" => {
                dup(assertion.is_some())?;
                assertion = Some(expr(&vars)?);
            }
            "body-rel" => {
                dup(body.is_some())?;
                let mut both = vars.clone();
                both.extend(vars.iter().map(|(n, w)| (format!("{n}'"), *w)));
                body = Some(Body::Relation(expr(&both)?));
            }
            "body" => {
                dup(body.is_some())?;
                let mut updates: Vec<Option<Expr>> = vec![None; vars.len()];
                for (off, item) in split_top(rest, rest_at) {
                    let eq = item.find('=').ok_or_else(|| err(format!("expected `x' = expr`, found `{}`", item.trim())))?;
                    let lhs = item[..eq].trim();
                    let name = lhs.strip_suffix('\'').ok_or_else(|| err(format!("left side `{lhs}` must be a primed state variable")))?;
                    let k = vars.iter().position(|(n, _)| n == name).ok_or_else(|| err(format!("unknown state variable `{name}`")))?;
                    if updates[k].is_some() {
                        return Err(err(format!("`{lhs}` assigned twice")));
                    }
                    let e = parse_expr(&isolate(&clean, off + eq + 1..off + item.len()), &vars, &[]).map_err(spec_err)?;
                    updates[k] = Some(e);
                }
                // Variables without an update keep their value.
                let updates = updates.into_iter().zip(&vars).map(|(u, (n, _))| u.unwrap_or_else(|| Expr::var(n.clone()))).collect();
                body = Some(Body::Functional(updates));
            }
            "task" => {
                dup(task.is_some())?;
                task = Some(rest.trim().parse::<TaskKind>().map_err(err)?);
            }
            "rank" => {
                rank = rest.trim().parse().ok().filter(|&d| d >= 1).ok_or_else(|| err(format!("bad rank dimension `{}`", rest.trim())))?;
            }
            _ => return Err(err(format!("unknown statement `{key}`"))),
        }
    }
    let state = state.ok_or(LoopParseError { line: 1, msg: "missing `state`".into() })?;
    let body = body.ok_or(LoopParseError { line: line_of(&clean, clean.len()), msg: "missing `body` or `body-rel`".into() })?;
    Ok(LoopSystem {
        state,
        init: init.unwrap_or(Expr::Lit(1)),
        guard: guard.unwrap_or(Expr::Lit(1)),
        body,
        assertion,
        task,
        rank_dim: rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specir::BinOp;

    #[test]
    fn counting_loop() {
        let s = parse_loop("# count to ten\nstate x:4;\ninit: x = 0;\nguard: x <u 10;\nbody: x' = x + 1;\nassert: x = 10;\ntask: safety;\n").unwrap();
        assert_eq!(s.state, vec![("x".to_string(), 4)]);
        assert_eq!(s.guard, Expr::bin(BinOp::Ult, Expr::var("x"), Expr::Lit(10)));
        assert_eq!(s.body, Body::Functional(vec![Expr::bin(BinOp::Add, Expr::var("x"), Expr::Lit(1))]));
        assert_eq!(s.task, Some(TaskKind::Safety));
    }

    #[test]
    fn frame_and_relations() {
        let s = parse_loop("state x:3, y:3; body: y' = min(x, y);").unwrap();
        assert_eq!(s.body, Body::Functional(vec![Expr::var("x"), Expr::bin(BinOp::Min, Expr::var("x"), Expr::var("y"))]));
        assert_eq!(s.init, Expr::Lit(1));
        let r = parse_loop("state x:3; guard: true; body-rel: x' <u x;").unwrap();
        assert_eq!(r.body, Body::Relation(Expr::bin(BinOp::Ult, Expr::var("x'"), Expr::var("x"))));
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_loop("state x:4;\ninit: y = 0;\nbody: x' = x;").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains('y'), "{e}");
        assert_eq!(parse_loop("state x:4;\n\nguard: x >u 0;").unwrap_err().msg, "missing `body` or `body-rel`");
        assert!(parse_loop("guard: true; state x:4; body: x'=x;").is_err());
        assert!(parse_loop("state x:99; body: x'=x;").is_err());
        assert!(parse_loop("state x:4; body: y'=x;").is_err());
        assert!(parse_loop("state x:4; body: x'=x; task: fly;").is_err());
        assert_eq!(parse_loop("state x:4;\nbody: x' = x +;").unwrap_err().line, 2);
    }
}
