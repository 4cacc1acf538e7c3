//! Value-preserving clean-up of expectations and expressions.
//!
//! Used after every substitution so that backward propagation does not
//! drag along dead branches like `[0 = 1] * ...`.

use num_traits::{One, ToPrimitive, Zero};

use super::Expectation;
use crate::lang::ast::{Arith, Bool, Q};

fn bin(f: fn(Box<Arith>, Box<Arith>) -> Arith, a: Arith, b: Arith) -> Arith {
    f(Box::new(a), Box::new(b))
}

pub fn simplify_arith(a: &Arith) -> Arith {
    use Arith::*;
    match a {
        Const(_) | Var(_) => a.clone(),
        Neg(x) => match simplify_arith(x) {
            Const(c) => Const(-c),
            Neg(y) => *y,
            y => Neg(Box::new(y)),
        },
        Add(x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Const(c), Const(d)) => Const(c + d),
            (Const(c), e) | (e, Const(c)) if c.is_zero() => e,
            (e, f) => bin(Add, e, f),
        },
        Sub(x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Const(c), Const(d)) => Const(c - d),
            (e, Const(c)) if c.is_zero() => e,
            (e, f) => bin(Sub, e, f),
        },
        Mul(x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Const(c), Const(d)) => Const(c * d),
            (Const(c), _) | (_, Const(c)) if c.is_zero() => Const(Q::zero()),
            (Const(c), e) | (e, Const(c)) if c.is_one() => e,
            (e, f) => bin(Mul, e, f),
        },
        Div(x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Const(c), Const(d)) if !d.is_zero() => Const(c / d),
            (e, Const(d)) if d.is_one() => e,
            (e, f) => bin(Div, e, f),
        },
        Pow(x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Const(c), Const(d)) if d.is_integer() && (!c.is_zero() || d >= Q::zero()) => {
                match d.to_integer().to_i32().filter(|n| n.abs() <= 64) {
                    Some(n) => Const(num_traits::Pow::pow(c, n)),
                    None => bin(Pow, Const(c), Const(d)),
                }
            }
            (e, Const(d)) if d.is_one() => e,
            (e, f) => bin(Pow, e, f),
        },
        Iverson(b) => match simplify_bool(b) {
            Bool::True => Const(Q::one()),
            Bool::False => Const(Q::zero()),
            c => Iverson(Box::new(c)),
        },
    }
}

pub fn simplify_bool(b: &Bool) -> Bool {
    match b {
        Bool::True | Bool::False => b.clone(),
        Bool::Cmp(op, x, y) => match (simplify_arith(x), simplify_arith(y)) {
            (Arith::Const(c), Arith::Const(d)) => {
                if op.holds(&c, &d) {
                    Bool::True
                } else {
                    Bool::False
                }
            }
            (x, y) => Bool::Cmp(*op, x, y),
        },
        Bool::Not(x) => negate(simplify_bool(x)),
        Bool::And(x, y) => match (simplify_bool(x), simplify_bool(y)) {
            (Bool::False, _) | (_, Bool::False) => Bool::False,
            (Bool::True, e) | (e, Bool::True) => e,
            (e, f) if e == f => e,
            (e, f) => Bool::and(e, f),
        },
        Bool::Or(x, y) => match (simplify_bool(x), simplify_bool(y)) {
            (Bool::True, _) | (_, Bool::True) => Bool::True,
            (Bool::False, e) | (e, Bool::False) => e,
            (e, f) if e == f => e,
            (e, f) => Bool::or(e, f),
        },
    }
}

/// Negation of an already simplified formula.
fn negate(b: Bool) -> Bool {
    match b {
        Bool::True => Bool::False,
        Bool::False => Bool::True,
        Bool::Cmp(op, x, y) => Bool::Cmp(op.negate(), x, y),
        Bool::Not(x) => *x,
        other => Bool::not(other),
    }
}

pub fn simplify(e: &Expectation) -> Expectation {
    match e {
        Expectation::Const(_) => e.clone(),
        Expectation::Iverson(b) => iverson(simplify_bool(b)),
        Expectation::Term(a) => match simplify_arith(a) {
            Arith::Const(c) => Expectation::Const(c),
            Arith::Iverson(b) => Expectation::Iverson(*b),
            a => Expectation::Term(a),
        },
        Expectation::Scale(c, x) => scale(c.clone(), simplify(x)),
        Expectation::Product(a, b) => product(simplify(a), simplify(b)),
        Expectation::Sum(ts) => sum(ts.iter().map(simplify).collect()),
    }
}

fn iverson(b: Bool) -> Expectation {
    match b {
        Bool::True => Expectation::one(),
        Bool::False => Expectation::zero(),
        b => Expectation::Iverson(b),
    }
}

// The helpers below assume simplified arguments.

fn scale(c: Q, x: Expectation) -> Expectation {
    if c.is_zero() {
        return Expectation::zero();
    }
    if c.is_one() {
        return x;
    }
    match x {
        Expectation::Const(d) => Expectation::Const(c * d),
        Expectation::Scale(d, y) => scale(c * d, *y),
        Expectation::Sum(ts) => sum(ts.into_iter().map(|t| scale(c.clone(), t)).collect()),
        x => Expectation::scale(c, x),
    }
}

fn product(a: Expectation, b: Expectation) -> Expectation {
    match (a, b) {
        (Expectation::Const(c), x) | (x, Expectation::Const(c)) => scale(c, x),
        (Expectation::Scale(c, x), y) | (y, Expectation::Scale(c, x)) => scale(c, product(*x, y)),
        (Expectation::Iverson(g), Expectation::Iverson(h)) => iverson(simplify_bool(&Bool::and(g, h))),
        (a, b) => Expectation::product(a, b),
    }
}

fn sum(ts: Vec<Expectation>) -> Expectation {
    // (coefficient, core) with like cores merged in first-occurrence order
    let mut groups: Vec<(Q, Expectation)> = Vec::new();
    let mut add = |c: Q, core: Expectation| match groups.iter_mut().find(|(_, k)| *k == core) {
        Some(slot) => slot.0 += c,
        None => groups.push((c, core)),
    };
    fn walk(t: Expectation, add: &mut dyn FnMut(Q, Expectation)) {
        match t {
            Expectation::Sum(inner) => inner.into_iter().for_each(|u| walk(u, add)),
            Expectation::Const(c) => add(c, Expectation::one()),
            Expectation::Scale(c, x) => add(c, *x),
            x => add(Q::one(), x),
        }
    }
    for t in ts {
        walk(t, &mut add);
    }
    let mut out: Vec<Expectation> = groups
        .into_iter()
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, core)| match core {
            Expectation::Const(_) => Expectation::Const(c),
            core => scale(c, core),
        })
        .collect();
    match out.len() {
        0 => Expectation::zero(),
        1 => out.pop().expect("one term"),
        _ => Expectation::Sum(out),
    }
}
