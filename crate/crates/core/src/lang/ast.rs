//! Abstract syntax of the probabilistic language.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expectation::Expectation;
use crate::lang::state::Env;

/// Exact rational number used for constants, probabilities and state values.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Largest exponent magnitude accepted by `^`.
const MAX_EXPONENT: i64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent {0} is not a small integer")]
    BadExponent(Q),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arith {
    Const(Q),
    Var(String),
    Neg(Box<Arith>),
    Add(Box<Arith>, Box<Arith>),
    Sub(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
    Div(Box<Arith>, Box<Arith>),
    /// Integer power; `y^2` is the square used by the examples.
    Pow(Box<Arith>, Box<Arith>),
    /// `[B]` used inside arithmetic, e.g. as a variant `[a != b]`.
    Iverson(Box<Bool>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, a: &Q, b: &Q) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bool {
    True,
    False,
    Cmp(CmpOp, Arith, Arith),
    Not(Box<Bool>),
    And(Box<Bool>, Box<Bool>),
    Or(Box<Bool>, Box<Bool>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TotalAnnotation {
    pub term: Bool,
    pub variant: Arith,
    pub lower: i64,
    pub upper: i64,
    pub eps: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Inst {
    Skip,
    Assign(String, Arith),
    Cond(Bool, Prog, Prog),
    /// `{c1} [p] {c2}`: run `c1` with probability `p`, `c2` otherwise.
    PChoice(Prog, Q, Prog),
    While {
        guard: Bool,
        invariant: Expectation,
        total: Option<TotalAnnotation>,
        body: Prog,
    },
}

/// Nonempty instruction sequence `i1; ...; in`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prog(Vec<Inst>);

impl Prog {
    /// Panics on an empty vector; programs are never empty.
    pub fn new(insts: Vec<Inst>) -> Prog {
        assert!(!insts.is_empty(), "a program has at least one instruction");
        Prog(insts)
    }

    pub fn skip() -> Prog {
        Prog(vec![Inst::Skip])
    }

    pub fn single(i: Inst) -> Prog {
        Prog(vec![i])
    }

    pub fn insts(&self) -> &[Inst] {
        &self.0
    }

    pub fn into_insts(self) -> Vec<Inst> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Instruction `i_j`, 1-based.
    pub fn get(&self, j: usize) -> Option<&Inst> {
        j.checked_sub(1).and_then(|i| self.0.get(i))
    }

    pub fn is_skip(&self) -> bool {
        self.0.len() == 1 && self.0[0] == Inst::Skip
    }

    pub fn has_loops(&self) -> bool {
        self.0.iter().any(|i| match i {
            Inst::While { .. } => true,
            Inst::Cond(_, a, b) | Inst::PChoice(a, _, b) => a.has_loops() || b.has_loops(),
            _ => false,
        })
    }

    /// Number of atomic instructions (skip and assignments).
    pub fn atomic_count(&self) -> usize {
        self.0
            .iter()
            .map(|i| match i {
                Inst::Skip | Inst::Assign(..) => 1,
                Inst::Cond(_, a, b) | Inst::PChoice(a, _, b) => a.atomic_count() + b.atomic_count(),
                Inst::While { body, .. } => body.atomic_count(),
            })
            .sum()
    }

    /// Variables occurring anywhere: assignments, guards, annotations.
    pub fn vars(&self, out: &mut Vec<String>) {
        for i in &self.0 {
            match i {
                Inst::Skip => {}
                Inst::Assign(x, e) => {
                    push_unique(out, x);
                    e.vars(out);
                }
                Inst::Cond(g, a, b) => {
                    g.vars(out);
                    a.vars(out);
                    b.vars(out);
                }
                Inst::PChoice(a, _, b) => {
                    a.vars(out);
                    b.vars(out);
                }
                Inst::While { guard, invariant, total, body } => {
                    guard.vars(out);
                    invariant.vars(out);
                    if let Some(t) = total {
                        t.term.vars(out);
                        t.variant.vars(out);
                    }
                    body.vars(out);
                }
            }
        }
    }
}

pub(crate) fn push_unique(out: &mut Vec<String>, x: &str) {
    if !out.iter().any(|y| y == x) {
        out.push(x.to_string());
    }
}

fn pow(base: Q, e: &Q) -> Result<Q, EvalError> {
    if !e.is_integer() {
        return Err(EvalError::BadExponent(e.clone()));
    }
    let n = e
        .to_integer()
        .to_i64()
        .filter(|n| n.abs() <= MAX_EXPONENT)
        .ok_or_else(|| EvalError::BadExponent(e.clone()))?;
    if n < 0 && base.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    Ok(num_traits::Pow::pow(base, n as i32))
}

impl Arith {
    pub fn var(x: &str) -> Arith {
        Arith::Var(x.to_string())
    }

    pub fn int(n: i64) -> Arith {
        Arith::Const(q(n))
    }

    pub fn eval(&self, env: &impl Env) -> Result<Q, EvalError> {
        Ok(match self {
            Arith::Const(c) => c.clone(),
            Arith::Var(x) => env.lookup(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone()))?,
            Arith::Neg(a) => -a.eval(env)?,
            Arith::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Arith::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Arith::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Arith::Div(a, b) => {
                let d = b.eval(env)?;
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(env)? / d
            }
            Arith::Pow(a, b) => pow(a.eval(env)?, &b.eval(env)?)?,
            Arith::Iverson(b) => {
                if b.eval(env)? {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
        })
    }

    pub fn subst(&self, x: &str, e: &Arith) -> Arith {
        match self {
            Arith::Var(y) if y == x => e.clone(),
            Arith::Const(_) | Arith::Var(_) => self.clone(),
            Arith::Neg(a) => Arith::Neg(Box::new(a.subst(x, e))),
            Arith::Add(a, b) => Arith::Add(Box::new(a.subst(x, e)), Box::new(b.subst(x, e))),
            Arith::Sub(a, b) => Arith::Sub(Box::new(a.subst(x, e)), Box::new(b.subst(x, e))),
            Arith::Mul(a, b) => Arith::Mul(Box::new(a.subst(x, e)), Box::new(b.subst(x, e))),
            Arith::Div(a, b) => Arith::Div(Box::new(a.subst(x, e)), Box::new(b.subst(x, e))),
            Arith::Pow(a, b) => Arith::Pow(Box::new(a.subst(x, e)), Box::new(b.subst(x, e))),
            Arith::Iverson(b) => Arith::Iverson(Box::new(b.subst(x, e))),
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Arith::Const(_) => {}
            Arith::Var(x) => push_unique(out, x),
            Arith::Neg(a) => a.vars(out),
            Arith::Add(a, b) | Arith::Sub(a, b) | Arith::Mul(a, b) | Arith::Div(a, b) | Arith::Pow(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Arith::Iverson(b) => b.vars(out),
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        let mut v = Vec::new();
        self.vars(&mut v);
        v.iter().any(|y| y == x)
    }

    pub fn as_const(&self) -> Option<&Q> {
        match self {
            Arith::Const(c) => Some(c),
            _ => None,
        }
    }
}

impl Bool {
    pub fn cmp(op: CmpOp, a: Arith, b: Arith) -> Bool {
        Bool::Cmp(op, a, b)
    }

    pub fn not(b: Bool) -> Bool {
        Bool::Not(Box::new(b))
    }

    pub fn and(a: Bool, b: Bool) -> Bool {
        Bool::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Bool, b: Bool) -> Bool {
        Bool::Or(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, env: &impl Env) -> Result<bool, EvalError> {
        Ok(match self {
            Bool::True => true,
            Bool::False => false,
            Bool::Cmp(op, a, b) => op.holds(&a.eval(env)?, &b.eval(env)?),
            Bool::Not(b) => !b.eval(env)?,
            Bool::And(a, b) => a.eval(env)? && b.eval(env)?,
            Bool::Or(a, b) => a.eval(env)? || b.eval(env)?,
        })
    }

    pub fn subst(&self, x: &str, e: &Arith) -> Bool {
        match self {
            Bool::True | Bool::False => self.clone(),
            Bool::Cmp(op, a, b) => Bool::Cmp(*op, a.subst(x, e), b.subst(x, e)),
            Bool::Not(b) => Bool::not(b.subst(x, e)),
            Bool::And(a, b) => Bool::and(a.subst(x, e), b.subst(x, e)),
            Bool::Or(a, b) => Bool::or(a.subst(x, e), b.subst(x, e)),
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Bool::True | Bool::False => {}
            Bool::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Bool::Not(b) => b.vars(out),
            Bool::And(a, b) | Bool::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

impl TotalAnnotation {
    /// Basic sanity of the numeric parameters: `0 < eps <= 1`, `lower <= upper`.
    pub fn well_formed(&self) -> bool {
        self.eps.is_positive() && self.eps <= Q::one() && self.lower <= self.upper
    }
}
