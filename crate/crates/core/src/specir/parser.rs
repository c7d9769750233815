use super::lexer::{lex, Tok, Token};
use super::{BinOp, Binder, Expr, Quantifier, RawSpec, SpecError, UnOp, UnknownSig};
use std::collections::HashMap;

const RESERVED: &[&str] = &["fun", "forall", "exists", "min", "max", "true", "false", "WIDTH"];

/// Parses the specification language.
///
/// ```text
/// fun P(1)->1;
/// forall x:8;
/// P(x) >=u x
/// ```
pub fn parse_spec(text: &str) -> Result<RawSpec, SpecError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, unknowns: Vec::new(), vars: HashMap::new() };
    p.spec()
}

/// Parses one expression over the given variables and unknowns.
pub fn parse_expr(text: &str, vars: &[(String, u32)], unknowns: &[UnknownSig]) -> Result<Expr, SpecError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, unknowns: unknowns.to_vec(), vars: vars.iter().cloned().collect() };
    let e = p.ternary()?;
    if *p.peek() != Tok::Eof {
        return p.fail(format!("unexpected {} after the expression", Parser::describe(p.peek())));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    unknowns: Vec<UnknownSig>,
    vars: HashMap<String, u32>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, SpecError> {
        let (l, c) = self.here();
        Err(SpecError::syntax(l, c, msg))
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), SpecError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.fail(format!("expected `{s}`, found {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), SpecError> {
        let (l, c) = self.here();
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok((s, l, c))
            }
            t => self.fail(format!("expected identifier, found {}", Self::describe(&t))),
        }
    }

    fn int(&mut self) -> Result<(u64, usize, usize), SpecError> {
        let (l, c) = self.here();
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok((v, l, c))
            }
            ref t => self.fail(format!("expected integer, found {}", Self::describe(t))),
        }
    }

    fn declared(&self, name: &str) -> bool {
        self.vars.contains_key(name) || self.unknowns.iter().any(|u| u.name == name)
    }

    fn spec(&mut self) -> Result<RawSpec, SpecError> {
        while self.is_kw("fun") {
            self.bump();
            let (name, l, c) = self.ident()?;
            if self.declared(&name) {
                return Err(SpecError::Duplicate { line: l, col: c, name });
            }
            self.expect("(")?;
            let (ins, _, _) = self.int()?;
            self.expect(")")?;
            self.expect("->")?;
            let (outs, ol, oc) = self.int()?;
            if outs == 0 {
                return Err(SpecError::syntax(ol, oc, "an unknown needs at least one result"));
            }
            self.expect(";")?;
            self.unknowns.push(UnknownSig::new(name, ins as usize, outs as usize));
        }
        let mut prefix = Vec::new();
        while self.is_kw("forall") || self.is_kw("exists") {
            let quantifier = if self.is_kw("forall") { Quantifier::Forall } else { Quantifier::Exists };
            self.bump();
            loop {
                let (name, l, c) = self.ident()?;
                if self.declared(&name) {
                    return Err(SpecError::Duplicate { line: l, col: c, name });
                }
                self.expect(":")?;
                let (width, wl, wc) = self.int()?;
                if !(1..=64).contains(&width) {
                    return Err(SpecError::Width { line: wl, col: wc, width });
                }
                self.vars.insert(name.clone(), width as u32);
                prefix.push(Binder { quantifier, name, width: width as u32 });
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(";")?;
        }
        if self.is_kw("fun") {
            return self.fail("unknowns must be declared before the quantifier prefix");
        }
        let body = self.ternary()?;
        self.eat(";");
        if *self.peek() != Tok::Eof {
            return self.fail(format!("unexpected {} after the body", Self::describe(self.peek())));
        }
        Ok(RawSpec { unknowns: std::mem::take(&mut self.unknowns), prefix, body })
    }

    fn ternary(&mut self) -> Result<Expr, SpecError> {
        let c = self.implication()?;
        if self.eat("?") {
            let a = self.ternary()?;
            self.expect(":")?;
            let b = self.ternary()?;
            return Ok(Expr::ite(c, a, b));
        }
        Ok(c)
    }

    fn implication(&mut self) -> Result<Expr, SpecError> {
        let a = self.left_assoc(0)?;
        if self.eat("=>") {
            let b = self.implication()?;
            return Ok(Expr::implies(a, b));
        }
        Ok(a)
    }

    /// Binary levels from loosest to tightest; comparisons do not chain.
    fn left_assoc(&mut self, level: usize) -> Result<Expr, SpecError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::LOr)],
            &[("&&", BinOp::LAnd)],
            &[
                ("=", BinOp::Eq),
                ("!=", BinOp::Ne),
                ("<u", BinOp::Ult),
                ("<=u", BinOp::Ule),
                (">u", BinOp::Ugt),
                (">=u", BinOp::Uge),
                ("<s", BinOp::Slt),
                ("<=s", BinOp::Sle),
                (">s", BinOp::Sgt),
                (">=s", BinOp::Sge),
            ],
            &[("|", BinOp::Or)],
            &[("^", BinOp::Xor)],
            &[("&", BinOp::And)],
            &[("<<", BinOp::Shl), (">>u", BinOp::LShr), (">>s", BinOp::AShr)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/u", BinOp::UDiv), ("%u", BinOp::URem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let comparison = level == 2;
        let mut lhs = self.left_assoc(level + 1)?;
        while let Some(&(_, op)) = LEVELS[level].iter().find(|(s, _)| self.is_sym(s)) {
            self.bump();
            let rhs = self.left_assoc(level + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
            if comparison && LEVELS[level].iter().any(|(s, _)| self.is_sym(s)) {
                return self.fail("comparisons do not chain; add parentheses");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SpecError> {
        for (s, op) in [("!", UnOp::Not), ("~", UnOp::BitNot), ("-", UnOp::Neg)] {
            if self.eat(s) {
                return Ok(Expr::un(op, self.unary()?));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SpecError> {
        let (l, c) = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.ternary()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "true" => Ok(Expr::Lit(1)),
                    "false" => Ok(Expr::Lit(0)),
                    "WIDTH" => Ok(Expr::Width),
                    "min" | "max" => {
                        let op = if s == "min" { BinOp::Min } else { BinOp::Max };
                        self.expect("(")?;
                        let a = self.ternary()?;
                        self.expect(",")?;
                        let b = self.ternary()?;
                        self.expect(")")?;
                        Ok(Expr::bin(op, a, b))
                    }
                    "fun" | "forall" | "exists" => {
                        Err(SpecError::syntax(l, c, format!("`{s}` is not allowed inside the body")))
                    }
                    _ if self.is_sym("(") => self.application(s, l, c),
                    _ if self.vars.contains_key(&s) => Ok(Expr::Var(s)),
                    _ => Err(SpecError::Undeclared { line: l, col: c, name: s }),
                }
            }
            t => self.fail(format!("expected expression, found {}", Self::describe(&t))),
        }
    }

    fn application(&mut self, name: String, l: usize, c: usize) -> Result<Expr, SpecError> {
        let Some(sig) = self.unknowns.iter().find(|u| u.name == name).cloned() else {
            return Err(SpecError::Undeclared { line: l, col: c, name });
        };
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.ternary()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        if args.len() != sig.in_arity {
            return Err(SpecError::Arity { line: l, col: c, name, expected: sig.in_arity, found: args.len() });
        }
        let mut index = 0;
        if self.eat(".") {
            index = self.int()?.0 as usize;
            if index >= sig.out_arity {
                return Err(SpecError::ResultIndex { line: l, col: c, name, out_arity: sig.out_arity, index });
            }
        }
        Ok(Expr::Apply { name, args, index })
    }
}
