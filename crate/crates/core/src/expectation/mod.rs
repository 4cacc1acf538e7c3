//! Symbolic expectations: maps from states to [0,1].

mod entail;
mod simplify;

use num_traits::{One, Signed, Zero};

use crate::lang::ast::{push_unique, Arith, Bool, EvalError, Q};
use crate::lang::state::Env;
use crate::lang::printer::expectation_to_string;

pub use entail::{entails, Entailment, LogicalBinding, Side};
pub use simplify::{simplify, simplify_arith, simplify_bool};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expectation {
    Const(Q),
    Iverson(Bool),
    Sum(Vec<Expectation>),
    Scale(Q, Box<Expectation>),
    /// Pointwise product, typically a guard `[G]` times an expectation.
    Product(Box<Expectation>, Box<Expectation>),
    /// Arithmetic leaf such as `2^(n - K)`.
    Term(Arith),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExpectationError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("value {0} lies outside [0, 1]")]
    Range(Q),
}

impl Expectation {
    pub fn zero() -> Expectation {
        Expectation::Const(Q::zero())
    }

    pub fn one() -> Expectation {
        Expectation::Const(Q::one())
    }

    pub fn constant(c: Q) -> Expectation {
        Expectation::Const(c)
    }

    pub fn iverson(b: Bool) -> Expectation {
        Expectation::Iverson(b)
    }

    pub fn scale(c: Q, e: Expectation) -> Expectation {
        Expectation::Scale(c, Box::new(e))
    }

    pub fn product(a: Expectation, b: Expectation) -> Expectation {
        Expectation::Product(Box::new(a), Box::new(b))
    }

    pub fn sum(ts: Vec<Expectation>) -> Expectation {
        Expectation::Sum(ts)
    }

    /// `[b] * e`
    pub fn guarded(b: Bool, e: Expectation) -> Expectation {
        Expectation::product(Expectation::Iverson(b), e)
    }

    /// Reads an arithmetic tree as an expectation: `+` becomes a sum,
    /// `*` a product (or scaling by a literal), `[B]` a bracket, and any
    /// other shape an arithmetic leaf.
    pub fn from_arith(a: Arith) -> Expectation {
        match a {
            Arith::Const(c) => Expectation::Const(c),
            Arith::Iverson(b) => Expectation::Iverson(*b),
            Arith::Add(l, r) => {
                let mut ts = Vec::new();
                for side in [*l, *r] {
                    match Expectation::from_arith(side) {
                        Expectation::Sum(inner) => ts.extend(inner),
                        e => ts.push(e),
                    }
                }
                Expectation::Sum(ts)
            }
            Arith::Mul(l, r) => match (*l, *r) {
                (Arith::Const(c), e) | (e, Arith::Const(c)) => Expectation::scale(c, Expectation::from_arith(e)),
                (l, r) => Expectation::product(Expectation::from_arith(l), Expectation::from_arith(r)),
            },
            other => Expectation::Term(other),
        }
    }

    /// Raw value, without the range check.
    pub fn value(&self, env: &impl Env) -> Result<Q, EvalError> {
        Ok(match self {
            Expectation::Const(c) => c.clone(),
            Expectation::Iverson(b) => {
                if b.eval(env)? {
                    Q::one()
                } else {
                    Q::zero()
                }
            }
            Expectation::Sum(ts) => {
                let mut acc = Q::zero();
                for t in ts {
                    acc += t.value(env)?;
                }
                acc
            }
            Expectation::Scale(c, e) => {
                if c.is_zero() {
                    Q::zero()
                } else {
                    c * e.value(env)?
                }
            }
            Expectation::Product(a, b) => {
                let x = a.value(env)?;
                if x.is_zero() {
                    Q::zero()
                } else {
                    x * b.value(env)?
                }
            }
            Expectation::Term(a) => a.eval(env)?,
        })
    }

    /// Value at a state; values outside [0,1] are reported, never clamped.
    pub fn evaluate(&self, env: &impl Env) -> Result<Q, ExpectationError> {
        let v = self.value(env)?;
        if v.is_negative() || v > Q::one() {
            return Err(ExpectationError::Range(v));
        }
        Ok(v)
    }

    /// `e[x/E]`, by structural replacement inside brackets and arithmetic.
    pub fn subst(&self, x: &str, e: &Arith) -> Expectation {
        match self {
            Expectation::Const(_) => self.clone(),
            Expectation::Iverson(b) => Expectation::Iverson(b.subst(x, e)),
            Expectation::Sum(ts) => Expectation::Sum(ts.iter().map(|t| t.subst(x, e)).collect()),
            Expectation::Scale(c, t) => Expectation::scale(c.clone(), t.subst(x, e)),
            Expectation::Product(a, b) => Expectation::product(a.subst(x, e), b.subst(x, e)),
            Expectation::Term(a) => Expectation::Term(a.subst(x, e)),
        }
    }

    /// Substitution followed by simplification.
    pub fn substitute(&self, x: &str, e: &Arith) -> Expectation {
        if !self.mentions(x) {
            return self.clone();
        }
        simplify(&self.subst(x, e))
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expectation::Const(_) => {}
            Expectation::Iverson(b) => b.vars(out),
            Expectation::Sum(ts) => ts.iter().for_each(|t| t.vars(out)),
            Expectation::Scale(_, t) => t.vars(out),
            Expectation::Product(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expectation::Term(a) => a.vars(out),
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.vars(&mut v);
        v
    }

    pub fn mentions(&self, x: &str) -> bool {
        self.free_vars().iter().any(|y| y == x)
    }

    /// Node count, for diagnostics.
    pub fn size(&self) -> usize {
        1 + match self {
            Expectation::Sum(ts) => ts.iter().map(Expectation::size).sum(),
            Expectation::Scale(_, t) => t.size(),
            Expectation::Product(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&expectation_to_string(self))
    }
}

pub(crate) fn collect_vars(es: &[&Expectation]) -> Vec<String> {
    let mut out = Vec::new();
    for e in es {
        for v in e.free_vars() {
            push_unique(&mut out, &v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{q, qr};
    use crate::lang::parser::{parse_arith, parse_bool, parse_expectation};
    use crate::lang::state::State;

    fn st(pairs: &[(&str, Q)]) -> State {
        State::from_pairs(pairs.iter().cloned())
    }

    #[test]
    fn brackets() {
        let s = st(&[("x", q(-1)), ("y", qr(7, 10))]);
        assert_eq!(Expectation::iverson(Bool::True).evaluate(&s).unwrap(), q(1));
        assert_eq!(parse_expectation("[x >= 0]").unwrap().evaluate(&s).unwrap(), q(0));
        // 49/100 <= 50/100
        assert_eq!(parse_expectation("[y*y <= 1/2]").unwrap().evaluate(&s).unwrap(), q(1));
    }

    #[test]
    fn example_one_substitution() {
        let g = parse_expectation("[x >= 0]").unwrap();
        let e = parse_arith("1.5 - y*y").unwrap();
        assert_eq!(g.subst("x", &e), Expectation::iverson(parse_bool("3/2 - y*y >= 0").unwrap()));
        let h = parse_expectation("1/2*[x >= 1] + 1/2*[x >= 2]").unwrap();
        let got = h.subst("x", &e);
        let want = parse_expectation("1/2*[y*y <= 1/2] + 1/2*[y*y <= -1/2]").unwrap();
        for y in [q(-1), qr(-7, 10), q(0), qr(7, 10), q(1)] {
            let s = st(&[("y", y)]);
            assert_eq!(got.evaluate(&s).unwrap(), want.evaluate(&s).unwrap());
        }
    }

    #[test]
    fn substitution_frame() {
        let g = parse_expectation("1/3 * [y = 2]").unwrap();
        assert_eq!(g.subst("x", &Arith::int(5)), g);
        assert_eq!(g.substitute("x", &Arith::int(5)), g);
    }

    #[test]
    fn example_one_value() {
        let f = parse_expectation("1/2 * [y*y <= 1/2]").unwrap();
        assert_eq!(f.evaluate(&st(&[("y", q(0))])).unwrap(), qr(1, 2));
    }

    #[test]
    fn range_is_checked_not_clamped() {
        let e = parse_expectation("3/4*[b = 1] + 3/4*[b != 1]").unwrap();
        assert_eq!(e.evaluate(&st(&[("b", q(1))])).unwrap(), qr(3, 4));
        let over = parse_expectation("3/4*[b >= 0] + 3/4*[b >= 1]").unwrap();
        assert_eq!(over.evaluate(&st(&[("b", q(0))])).unwrap(), qr(3, 4));
        assert_eq!(over.evaluate(&st(&[("b", q(1))])), Err(ExpectationError::Range(qr(3, 2))));
    }

    #[test]
    fn arithmetic_leaves() {
        let e = parse_expectation("[n < K]*2^(n - K)").unwrap();
        assert!(matches!(e, Expectation::Product(_, ref t) if matches!(**t, Expectation::Term(_))));
        assert_eq!(e.evaluate(&st(&[("n", q(1)), ("K", q(3))])).unwrap(), qr(1, 4));
        assert_eq!(e.evaluate(&st(&[("n", q(4)), ("K", q(3))])).unwrap(), q(0));
    }
}
