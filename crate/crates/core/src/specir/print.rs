use super::{BinOp, Expr, RawSpec, UnOp};
use std::fmt::Write as _;

/// Prints a specification that [`super::parse_spec`] reads back to an equal value.
pub fn print_spec(s: &RawSpec) -> String {
    let mut out = String::new();
    for u in &s.unknowns {
        let _ = writeln!(out, "fun {}({})->{};", u.name, u.in_arity, u.out_arity);
    }
    for b in &s.prefix {
        let _ = writeln!(out, "{} {}:{};", b.quantifier, b.name, b.width);
    }
    out.push_str(&print_expr(&s.body));
    out.push('\n');
    out
}

/// Prints an expression with every compound subterm parenthesized.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, true);
    s
}

fn write_expr(s: &mut String, e: &Expr, top: bool) {
    let open = |s: &mut String| {
        if !top {
            s.push('(');
        }
    };
    let close = |s: &mut String| {
        if !top {
            s.push(')');
        }
    };
    match e {
        Expr::Lit(v) => {
            let _ = write!(s, "{v}");
        }
        Expr::Width => s.push_str("WIDTH"),
        Expr::Var(v) => s.push_str(v),
        Expr::Apply { name, args, index } => {
            s.push_str(name);
            s.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_expr(s, a, true);
            }
            s.push(')');
            if *index != 0 {
                let _ = write!(s, ".{index}");
            }
        }
        Expr::Un(op, a) => {
            s.push(match op {
                UnOp::Not => '!',
                UnOp::BitNot => '~',
                UnOp::Neg => '-',
            });
            write_expr(s, a, false);
        }
        Expr::Bin(op @ (BinOp::Min | BinOp::Max), a, b) => {
            let _ = write!(s, "{}(", op.symbol());
            write_expr(s, a, true);
            s.push_str(", ");
            write_expr(s, b, true);
            s.push(')');
        }
        Expr::Bin(op, a, b) => {
            open(s);
            write_expr(s, a, false);
            let _ = write!(s, " {} ", op.symbol());
            write_expr(s, b, false);
            close(s);
        }
        Expr::Ite(c, a, b) => {
            open(s);
            write_expr(s, c, false);
            s.push_str(" ? ");
            write_expr(s, a, false);
            s.push_str(" : ");
            write_expr(s, b, false);
            close(s);
        }
    }
}
