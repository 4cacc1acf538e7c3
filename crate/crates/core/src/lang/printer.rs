//! Pretty printer producing source the parser reads back to the same tree.

use std::fmt::Write as _;

use num_traits::Signed;

use crate::expectation::Expectation;
use crate::lang::ast::{Arith, Bool, Inst, Prog, Q};

// Binding strength: sums < products < unary minus < powers < atoms.
const SUM: u8 = 1;
const PROD: u8 = 2;
const UNARY: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn const_prec(c: &Q) -> u8 {
    if !c.is_integer() {
        PROD
    } else if c.is_negative() {
        UNARY
    } else {
        ATOM
    }
}

fn arith_prec(a: &Arith) -> u8 {
    match a {
        Arith::Const(c) => const_prec(c),
        Arith::Var(_) | Arith::Iverson(_) => ATOM,
        Arith::Neg(_) => UNARY,
        Arith::Add(..) | Arith::Sub(..) => SUM,
        Arith::Mul(..) | Arith::Div(..) => PROD,
        Arith::Pow(..) => POW,
    }
}

fn paren(out: &mut String, wrap: bool, f: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    f(out);
    if wrap {
        out.push(')');
    }
}

fn write_arith(out: &mut String, a: &Arith, min: u8) {
    paren(out, arith_prec(a) < min, |out| match a {
        Arith::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Arith::Var(x) => out.push_str(x),
        Arith::Neg(e) => {
            out.push('-');
            write_arith(out, e, UNARY);
        }
        Arith::Add(l, r) | Arith::Sub(l, r) => {
            write_arith(out, l, SUM);
            out.push_str(if matches!(a, Arith::Add(..)) { " + " } else { " - " });
            write_arith(out, r, PROD);
        }
        Arith::Mul(l, r) | Arith::Div(l, r) => {
            write_arith(out, l, PROD);
            out.push(if matches!(a, Arith::Mul(..)) { '*' } else { '/' });
            write_arith(out, r, UNARY);
        }
        Arith::Pow(l, r) => {
            write_arith(out, l, ATOM);
            out.push('^');
            write_arith(out, r, UNARY);
        }
        Arith::Iverson(b) => {
            out.push('[');
            write_bool(out, b, 1);
            out.push(']');
        }
    })
}

fn bool_prec(b: &Bool) -> u8 {
    match b {
        Bool::Or(..) => 1,
        Bool::And(..) => 2,
        Bool::Not(_) => 3,
        _ => 4,
    }
}

fn write_bool(out: &mut String, b: &Bool, min: u8) {
    paren(out, bool_prec(b) < min, |out| match b {
        Bool::True => out.push_str("true"),
        Bool::False => out.push_str("false"),
        Bool::Cmp(op, l, r) => {
            write_arith(out, l, SUM);
            let _ = write!(out, " {} ", op.symbol());
            write_arith(out, r, SUM);
        }
        Bool::Not(e) => {
            out.push('!');
            // `!(x = 1)` reads better than `!x = 1`
            write_bool(out, e, if matches!(**e, Bool::Cmp(..)) { 5 } else { 3 });
        }
        Bool::And(l, r) => {
            write_bool(out, l, 2);
            out.push_str(" && ");
            write_bool(out, r, 3);
        }
        Bool::Or(l, r) => {
            write_bool(out, l, 1);
            out.push_str(" || ");
            write_bool(out, r, 2);
        }
    })
}

fn exp_prec(e: &Expectation) -> u8 {
    match e {
        Expectation::Const(c) => const_prec(c),
        Expectation::Iverson(_) => ATOM,
        Expectation::Sum(ts) if ts.len() == 1 => exp_prec(&ts[0]),
        Expectation::Sum(ts) if ts.is_empty() => ATOM,
        Expectation::Sum(_) => SUM,
        Expectation::Scale(..) | Expectation::Product(..) => PROD,
        Expectation::Term(a) => arith_prec(a),
    }
}

fn write_exp(out: &mut String, e: &Expectation, min: u8) {
    paren(out, exp_prec(e) < min, |out| match e {
        Expectation::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expectation::Iverson(b) => {
            out.push('[');
            write_bool(out, b, 1);
            out.push(']');
        }
        Expectation::Sum(ts) if ts.is_empty() => out.push('0'),
        Expectation::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                write_exp(out, t, if i == 0 { SUM } else { PROD });
            }
        }
        Expectation::Scale(c, x) => {
            write_arith(out, &Arith::Const(c.clone()), PROD);
            out.push_str(" * ");
            write_exp(out, x, UNARY);
        }
        Expectation::Product(l, r) => {
            write_exp(out, l, PROD);
            out.push_str(" * ");
            write_exp(out, r, UNARY);
        }
        Expectation::Term(a) => write_arith(out, a, min),
    })
}

pub fn arith_to_string(a: &Arith) -> String {
    let mut s = String::new();
    write_arith(&mut s, a, SUM);
    s
}

pub fn bool_to_string(b: &Bool) -> String {
    let mut s = String::new();
    write_bool(&mut s, b, 1);
    s
}

pub fn expectation_to_string(e: &Expectation) -> String {
    let mut s = String::new();
    write_exp(&mut s, e, SUM);
    s
}

fn is_atomic_single(p: &Prog) -> bool {
    matches!(p.insts(), [Inst::Skip | Inst::Assign(..)])
}

fn write_block(out: &mut String, p: &Prog, indent: usize) {
    if is_atomic_single(p) {
        out.push_str("{ ");
        write_prog(out, p, indent);
        out.push_str(" }");
    } else {
        out.push_str("{\n");
        push_indent(out, indent + 1);
        write_prog(out, p, indent + 1);
        out.push('\n');
        push_indent(out, indent);
        out.push('}');
    }
}

fn push_indent(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_inst(out: &mut String, i: &Inst, indent: usize) {
    match i {
        Inst::Skip => out.push_str("skip"),
        Inst::Assign(x, e) => {
            out.push_str(x);
            out.push_str(" := ");
            write_arith(out, e, SUM);
        }
        Inst::Cond(g, a, b) => {
            out.push_str("if (");
            write_bool(out, g, 1);
            out.push_str(") ");
            write_block(out, a, indent);
            out.push_str(" else ");
            match b.insts() {
                [inner @ Inst::Cond(..)] => write_inst(out, inner, indent),
                _ => write_block(out, b, indent),
            }
        }
        Inst::PChoice(a, p, b) => {
            write_block(out, a, indent);
            out.push_str(" [");
            write_arith(out, &Arith::Const(p.clone()), SUM);
            out.push_str("] ");
            write_block(out, b, indent);
        }
        Inst::While { guard, invariant, total, body } => {
            out.push_str("while (");
            write_bool(out, guard, 1);
            out.push_str(") @invariant{");
            write_exp(out, invariant, SUM);
            out.push('}');
            if let Some(t) = total {
                out.push_str(" @terminates{");
                write_bool(out, &t.term, 1);
                out.push_str("} @variant{");
                write_arith(out, &t.variant, SUM);
                let _ = write!(out, "}} @bounds{{{}, {}}} @eps{{{}}}", t.lower, t.upper, t.eps);
            }
            out.push_str(" do {\n");
            push_indent(out, indent + 1);
            write_prog(out, body, indent + 1);
            out.push('\n');
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn write_prog(out: &mut String, p: &Prog, indent: usize) {
    for (k, i) in p.insts().iter().enumerate() {
        if k > 0 {
            out.push_str(";\n");
            push_indent(out, indent);
        }
        write_inst(out, i, indent);
    }
}

pub fn pretty_print(p: &Prog) -> String {
    let mut s = String::new();
    write_prog(&mut s, p, 0);
    s
}

pub fn inst_to_string(i: &Inst) -> String {
    let mut s = String::new();
    write_inst(&mut s, i, 0);
    s
}
