//! Entailment `f ⇛ g` decided by enumerating a finite state space.

use serde_json::{json, Value};

use super::{Expectation, ExpectationError};
use crate::lang::ast::{q, EvalError, Q};
use crate::lang::state::{State, StateSpace, VarDomain};

/// A logical variable (such as a variant snapshot `v0`) ranging over finitely many integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogicalBinding {
    pub var: String,
    pub values: Vec<Q>,
}

impl LogicalBinding {
    /// Integers `lo..=hi`.
    pub fn range(var: impl Into<String>, lo: i64, hi: i64) -> LogicalBinding {
        LogicalBinding { var: var.into(), values: (lo..=hi).map(q).collect() }
    }

    fn domain(&self) -> VarDomain {
        VarDomain { var: self.var.clone(), values: self.values.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Lhs => "lhs",
            Side::Rhs => "rhs",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment {
    Valid,
    /// First state (in enumeration order) with `lhs > rhs`.
    Invalid { state: State, lhs: Q, rhs: Q },
    /// One side leaves [0,1] at `state`.
    RangeError { state: State, side: Side, value: Q },
    /// One side cannot be evaluated at `state` (e.g. division by zero).
    EvalError { state: State, side: Side, error: EvalError },
}

impl Entailment {
    pub fn is_valid(&self) -> bool {
        matches!(self, Entailment::Valid)
    }

    pub fn to_json(&self) -> Value {
        fn state_json(s: &State) -> Value {
            Value::Object(s.iter().map(|(x, v)| (x.to_string(), Value::String(v.to_string()))).collect())
        }
        match self {
            Entailment::Valid => json!({"status": "valid"}),
            Entailment::Invalid { state, lhs, rhs } => json!({
                "status": "invalid",
                "state": state_json(state),
                "lhs": lhs.to_string(),
                "rhs": rhs.to_string(),
            }),
            Entailment::RangeError { state, side, value } => json!({
                "status": "range-error",
                "state": state_json(state),
                "side": side.to_string(),
                "value": value.to_string(),
            }),
            Entailment::EvalError { state, side, error } => json!({
                "status": "eval-error",
                "state": state_json(state),
                "side": side.to_string(),
                "error": error.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for Entailment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Entailment::Valid => write!(f, "valid"),
            Entailment::Invalid { state, lhs, rhs } => write!(f, "invalid at {state}: {lhs} > {rhs}"),
            Entailment::RangeError { state, side, value } => {
                write!(f, "{side} evaluates to {value} at {state}, outside [0, 1]")
            }
            Entailment::EvalError { state, side, error } => write!(f, "{side} undefined at {state}: {error}"),
        }
    }
}

fn eval_side(e: &Expectation, s: &State, side: Side) -> Result<Q, Entailment> {
    e.evaluate(s).map_err(|err| match err {
        ExpectationError::Range(value) => Entailment::RangeError { state: s.clone(), side, value },
        ExpectationError::Eval(error) => Entailment::EvalError { state: s.clone(), side, error },
    })
}

/// Checks `f(s) <= g(s)` at every state of `space × bindings`.
///
/// Binding variables that clash with a declared variable are an error of
/// the caller; they are skipped here and the declared domain wins.
pub fn entails(f: &Expectation, g: &Expectation, space: &StateSpace, bindings: &[LogicalBinding]) -> Entailment {
    let extra: Vec<VarDomain> = bindings
        .iter()
        .filter(|b| space.domain(&b.var).is_none())
        .map(LogicalBinding::domain)
        .collect();
    let full;
    let space = if extra.is_empty() {
        space
    } else {
        full = space.extended(extra).expect("bindings have distinct names");
        &full
    };
    for s in space.enumerate() {
        let lhs = match eval_side(f, &s, Side::Lhs) {
            Ok(v) => v,
            Err(e) => return e,
        };
        let rhs = match eval_side(g, &s, Side::Rhs) {
            Ok(v) => v,
            Err(e) => return e,
        };
        if lhs > rhs {
            return Entailment::Invalid { state: s, lhs, rhs };
        }
    }
    Entailment::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::qr;
    use crate::lang::parser::parse_expectation;

    fn x_grid() -> StateSpace {
        StateSpace::new(vec![VarDomain {
            var: "x".into(),
            values: vec![q(-1), q(0), qr(1, 2), q(1), qr(3, 2), q(2), q(3)],
        }])
        .unwrap()
    }

    fn e(s: &str) -> Expectation {
        parse_expectation(s).unwrap()
    }

    #[test]
    fn zero_is_bottom() {
        assert!(entails(&Expectation::zero(), &e("[x = 1]"), &x_grid(), &[]).is_valid());
    }

    #[test]
    fn example_two_direction() {
        let halves = e("1/2*[x >= 1] + 1/2*[x >= 2]");
        let nonneg = e("[x >= 0]");
        assert!(entails(&halves, &nonneg, &x_grid(), &[]).is_valid());
        assert_eq!(
            entails(&nonneg, &halves, &x_grid(), &[]),
            Entailment::Invalid { state: State::from_pairs([("x", q(0))]), lhs: q(1), rhs: q(0) }
        );
    }

    #[test]
    fn json_shape() {
        let r = entails(&e("1/2"), &e("[x = 1]"), &x_grid(), &[]);
        assert_eq!(
            r.to_json().to_string(),
            r#"{"status":"invalid","state":{"x":"-1"},"lhs":"1/2","rhs":"0"}"#
        );
    }

    #[test]
    fn bindings_extend_the_space() {
        let b = LogicalBinding::range("v0", 0, 1);
        // [x < v0] <= [x <= 1] for v0 in {0,1}
        assert!(entails(&e("[x < v0]"), &e("[x <= 1]"), &x_grid(), std::slice::from_ref(&b)).is_valid());
        let r = entails(&e("[x < v0]"), &e("[x < 0]"), &x_grid(), &[b]);
        let Entailment::Invalid { state, .. } = r else { panic!("{r:?}") };
        assert_eq!(state.get("x"), Some(&q(0)));
        assert_eq!(state.get("v0"), Some(&q(1)));
    }

    #[test]
    fn range_errors_surface() {
        let r = entails(&e("[x >= 0] + [x >= 1]"), &Expectation::one(), &x_grid(), &[]);
        assert!(matches!(r, Entailment::RangeError { side: Side::Lhs, .. }));
    }
}
