use super::SpecError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest match first.
const SYMBOLS: &[&str] = &[
    "<=u", "<=s", ">=u", ">=s", ">>u", ">>s", "->", "&&", "||", "=>", "!=", "<u", "<s", ">u", ">s", "/u", "%u", "<<",
    "=", "!", "~", "+", "-", "*", "&", "|", "^", "?", ":", ";", ",", "(", ")", ".",
];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                s.push('\'');
                i += 1;
            }
            col += s.chars().count();
            out.push(Token { tok: Tok::Ident(s), line: start.0, col: start.1 });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
            }
            col += s.len();
            let digits = s.replace('_', "");
            let parsed = if let Some(h) = digits.strip_prefix("0x") {
                u64::from_str_radix(h, 16)
            } else if let Some(b) = digits.strip_prefix("0b") {
                u64::from_str_radix(b, 2)
            } else {
                digits.parse::<u64>()
            };
            match parsed {
                Ok(v) => out.push(Token { tok: Tok::Int(v), line: start.0, col: start.1 }),
                Err(_) => return Err(SpecError::syntax(start.0, start.1, format!("bad integer literal `{s}`"))),
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Token { tok: Tok::Sym(sym), line: start.0, col: start.1 });
            }
            None => {
                let hint = match c {
                    '<' | '>' | '/' | '%' => " (comparisons, division and right shifts need a `u` or `s` suffix)",
                    _ => "",
                };
                return Err(SpecError::syntax(start.0, start.1, format!("unexpected character `{c}`{hint}")));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
