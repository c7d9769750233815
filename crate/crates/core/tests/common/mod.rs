#![allow(dead_code)]

use fsynth::lvm::{Opcode, Operand, Program};
use fsynth::specir::{BinOp, Expr, UnOp};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A second interpreter for straight-line programs, written from the opcode
/// table rather than shared with the solver.
pub fn run(p: &Program, inputs: &[u64], bits: u32) -> Vec<u64> {
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let signed = |v: u64| -> i64 { ((v << (64 - bits)) as i64) >> (64 - bits) };
    let mut t: Vec<u64> = Vec::new();
    let get = |t: &[u64], o: &Operand| match *o {
        Operand::Input(i) => inputs[i] & mask,
        Operand::Temp(i) => t[i],
        Operand::Const(i) => p.constants[i] & mask,
    };
    for ins in &p.instructions {
        let a = get(&t, &ins.operands[0]);
        let b = ins.operands.get(1).map_or(0, |o| get(&t, o));
        let c = ins.operands.get(2).map_or(0, |o| get(&t, o));
        let v = match ins.opcode {
            Opcode::Add => a.wrapping_add(b),
            Opcode::Sub => a.wrapping_sub(b),
            Opcode::Mul => a.wrapping_mul(b),
            Opcode::Div => a.checked_div(b).unwrap_or(mask),
            Opcode::Mod => a.checked_rem(b).unwrap_or(a),
            Opcode::Neg => 0u64.wrapping_sub(a),
            Opcode::Min => a.min(b),
            Opcode::Max => a.max(b),
            Opcode::And => a & b,
            Opcode::Or => a | b,
            Opcode::Xor => a ^ b,
            Opcode::Not => !a,
            Opcode::Lshr => a.checked_shr(b as u32).filter(|_| b < bits as u64).unwrap_or(0),
            Opcode::Ashr => (signed(a) >> b.min(bits as u64 - 1)) as u64,
            Opcode::Le => (a <= b) as u64,
            Opcode::Lt => (a < b) as u64,
            Opcode::Sle => (signed(a) <= signed(b)) as u64,
            Opcode::Slt => (signed(a) < signed(b)) as u64,
            Opcode::Eq => (a == b) as u64,
            Opcode::Neq => (a != b) as u64,
            Opcode::Implies => (a == 0 || b != 0) as u64,
            Opcode::Ite => {
                if a != 0 {
                    b
                } else {
                    c
                }
            }
        };
        t.push(v & mask);
    }
    p.outputs.iter().map(|o| get(&t, o)).collect()
}

pub fn run1(p: &Program, inputs: &[u64], bits: u32) -> u64 {
    run(p, inputs, bits)[0]
}

const ARITH: [BinOp; 9] =
    [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::And, BinOp::Or, BinOp::Xor, BinOp::LShr, BinOp::Min, BinOp::Max];
const CMP: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Ult, BinOp::Ule, BinOp::Ugt, BinOp::Sge];

/// A random word-valued term over `leaves` and small literals.
pub fn term(rng: &mut ChaCha8Rng, leaves: &[Expr], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.7) { leaves.choose(rng).unwrap().clone() } else { Expr::Lit(rng.gen_range(0..8)) };
    }
    match rng.gen_range(0..10) {
        0 => Expr::un(*[UnOp::Neg, UnOp::BitNot].choose(rng).unwrap(), term(rng, leaves, depth - 1)),
        1 => Expr::ite(cond(rng, leaves, depth - 1), term(rng, leaves, depth - 1), term(rng, leaves, depth - 1)),
        _ => Expr::bin(*ARITH.choose(rng).unwrap(), term(rng, leaves, depth - 1), term(rng, leaves, depth - 1)),
    }
}

/// A random comparison, possibly negated or combined with another.
pub fn cond(rng: &mut ChaCha8Rng, leaves: &[Expr], depth: u32) -> Expr {
    let c = Expr::bin(*CMP.choose(rng).unwrap(), term(rng, leaves, depth), term(rng, leaves, depth));
    match rng.gen_range(0..6) {
        0 => Expr::not(c),
        1 => Expr::and(c, cond(rng, leaves, depth.saturating_sub(1))),
        2 => Expr::or(c, cond(rng, leaves, depth.saturating_sub(1))),
        _ => c,
    }
}

/// A single-unknown spec `fun P(1)->1; forall x:<bits>; ...` whose body
/// constrains `P(x)` against a random term.
pub fn random_spec(rng: &mut ChaCha8Rng, bits: u32) -> String {
    let x = Expr::var("x");
    let px = Expr::apply("P", vec![x.clone()]);
    let rhs = term(rng, std::slice::from_ref(&x), 2);
    let rel = *[BinOp::Eq, BinOp::Uge, BinOp::Ule, BinOp::Ne].choose(rng).unwrap();
    let mut body = Expr::bin(rel, px.clone(), rhs);
    if rng.gen_bool(0.3) {
        body = Expr::or(body, cond(rng, &[x, px], 1));
    }
    format!("fun P(1)->1;\nforall x:{bits};\n{}\n", fsynth::specir::print_expr(&body))
}
