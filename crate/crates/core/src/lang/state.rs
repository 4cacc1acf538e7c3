//! Program states and finite state spaces.

use std::collections::HashMap;
use std::fmt;

use crate::lang::ast::Q;

/// Variable lookup used by the evaluators.
pub trait Env {
    fn lookup(&self, x: &str) -> Option<&Q>;
}

/// A total assignment of values to variables, kept in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct State {
    vals: Vec<(String, Q)>,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> State
    where
        I: IntoIterator<Item = (S, Q)>,
        S: Into<String>,
    {
        let mut s = State::new();
        for (x, v) in pairs {
            s.set(&x.into(), v);
        }
        s
    }

    pub fn get(&self, x: &str) -> Option<&Q> {
        self.vals.iter().find(|(y, _)| y == x).map(|(_, v)| v)
    }

    /// In-place update; appends `x` if it is not bound yet.
    pub fn set(&mut self, x: &str, v: Q) {
        match self.vals.iter_mut().find(|(y, _)| y == x) {
            Some(slot) => slot.1 = v,
            None => self.vals.push((x.to_string(), v)),
        }
    }

    /// `s[x/v]`
    pub fn update(&self, x: &str, v: Q) -> State {
        let mut s = self.clone();
        s.set(x, v);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Q)> {
        self.vals.iter().map(|(x, v)| (x.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }
}

impl Env for State {
    fn lookup(&self, x: &str) -> Option<&Q> {
        self.get(x)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, v)) in self.vals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} = {v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDomain {
    pub var: String,
    pub values: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("domain of `{0}` is empty")]
    Empty(String),
    #[error("domain of `{0}` lists {1} twice")]
    Duplicate(String, Q),
    #[error("variable `{0}` declared twice")]
    Redeclared(String),
}

/// Cartesian product of finite per-variable domains.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StateSpace {
    domains: Vec<VarDomain>,
}

impl StateSpace {
    pub fn new(domains: Vec<VarDomain>) -> Result<StateSpace, DomainError> {
        let mut sp = StateSpace::default();
        for d in domains {
            sp.push(d)?;
        }
        Ok(sp)
    }

    pub fn push(&mut self, d: VarDomain) -> Result<(), DomainError> {
        if self.domains.iter().any(|e| e.var == d.var) {
            return Err(DomainError::Redeclared(d.var));
        }
        if d.values.is_empty() {
            return Err(DomainError::Empty(d.var));
        }
        for (i, v) in d.values.iter().enumerate() {
            if d.values[..i].contains(v) {
                return Err(DomainError::Duplicate(d.var.clone(), v.clone()));
            }
        }
        self.domains.push(d);
        Ok(())
    }

    pub fn domains(&self) -> &[VarDomain] {
        &self.domains
    }

    pub fn domain(&self, x: &str) -> Option<&VarDomain> {
        self.domains.iter().find(|d| d.var == x)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.domains.iter().map(|d| d.var.as_str())
    }

    pub fn contains(&self, x: &str, v: &Q) -> bool {
        self.domain(x).is_some_and(|d| d.values.contains(v))
    }

    /// Number of states; saturates instead of overflowing.
    pub fn size(&self) -> usize {
        self.domains
            .iter()
            .fold(1usize, |acc, d| acc.saturating_mul(d.values.len()))
    }

    /// All states, first declared variable most significant, values in declared order.
    pub fn enumerate(&self) -> StateIter<'_> {
        StateIter { space: self, idx: vec![0; self.domains.len()], done: false }
    }

    /// Position of a state in `enumerate` order, if every value lies in its domain.
    pub fn index_of(&self, s: &State) -> Option<usize> {
        let mut idx = 0usize;
        for d in &self.domains {
            let v = s.get(&d.var)?;
            let k = d.values.iter().position(|w| w == v)?;
            idx = idx * d.values.len() + k;
        }
        Some(idx)
    }

    /// Extends the space with extra variables appended after the declared ones.
    pub fn extended(&self, extra: impl IntoIterator<Item = VarDomain>) -> Result<StateSpace, DomainError> {
        let mut sp = self.clone();
        for d in extra {
            sp.push(d)?;
        }
        Ok(sp)
    }
}

pub struct StateIter<'a> {
    space: &'a StateSpace,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for StateIter<'_> {
    type Item = State;

    fn next(&mut self) -> Option<State> {
        if self.done {
            return None;
        }
        let s = State {
            vals: self
                .space
                .domains
                .iter()
                .zip(&self.idx)
                .map(|(d, &i)| (d.var.clone(), d.values[i].clone()))
                .collect(),
        };
        // odometer, last variable fastest
        let mut k = self.idx.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.idx[k] += 1;
            if self.idx[k] < self.space.domains[k].values.len() {
                break;
            }
            self.idx[k] = 0;
        }
        Some(s)
    }
}

/// Value-to-position lookup for moving between state indices.
pub(crate) struct Indexer {
    radix: Vec<usize>,
    stride: Vec<usize>,
    pos: Vec<HashMap<Q, usize>>,
    names: Vec<String>,
}

impl Indexer {
    pub(crate) fn new(space: &StateSpace) -> Indexer {
        let radix: Vec<usize> = space.domains.iter().map(|d| d.values.len()).collect();
        let mut stride = vec![1usize; radix.len()];
        for k in (0..radix.len().saturating_sub(1)).rev() {
            stride[k] = stride[k + 1] * radix[k + 1];
        }
        Indexer {
            radix,
            stride,
            pos: space
                .domains
                .iter()
                .map(|d| d.values.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect())
                .collect(),
            names: space.domains.iter().map(|d| d.var.clone()).collect(),
        }
    }

    pub(crate) fn var_position(&self, x: &str) -> Option<usize> {
        self.names.iter().position(|y| y == x)
    }

    /// Index of `idx` with variable number `k` set to `v`, if `v` is in its domain.
    pub(crate) fn with_value(&self, idx: usize, k: usize, v: &Q) -> Option<usize> {
        let new = *self.pos[k].get(v)?;
        let old = (idx / self.stride[k]) % self.radix[k];
        Some(idx - old * self.stride[k] + new * self.stride[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{q, qr};

    fn sp() -> StateSpace {
        StateSpace::new(vec![
            VarDomain { var: "x".into(), values: vec![q(0), q(1), q(2)] },
            VarDomain { var: "y".into(), values: vec![qr(-1, 2), q(3)] },
        ])
        .unwrap()
    }

    #[test]
    fn enumerate_is_full_product_in_order() {
        let s = sp();
        let all: Vec<State> = s.enumerate().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(s.size(), 6);
        assert_eq!(all[0].get("x"), Some(&q(0)));
        assert_eq!(all[0].get("y"), Some(&qr(-1, 2)));
        assert_eq!(all[1].get("y"), Some(&q(3)));
        assert_eq!(all[2].get("x"), Some(&q(1)));
        for (i, st) in all.iter().enumerate() {
            assert_eq!(s.index_of(st), Some(i));
            let ix = Indexer::new(&s);
            assert_eq!(ix.with_value(i, 1, &q(3)), s.index_of(&st.update("y", q(3))));
            assert_eq!(ix.with_value(i, 0, &q(2)), s.index_of(&st.update("x", q(2))));
            assert_eq!(ix.with_value(i, 0, &q(7)), None);
            assert!(!all[..i].contains(st));
        }
    }

    #[test]
    fn update_laws() {
        let s = State::from_pairs([("x", q(0)), ("y", q(5))]);
        assert_eq!(s.update("x", q(2)).get("x"), Some(&q(2)));
        assert_eq!(s.update("x", q(2)).get("y"), Some(&q(5)));
        assert_eq!(s.update("x", q(2)).update("x", q(0)), s);
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(StateSpace::new(vec![VarDomain { var: "x".into(), values: vec![] }]).is_err());
        assert!(StateSpace::new(vec![VarDomain { var: "x".into(), values: vec![q(1), q(1)] }]).is_err());
        let d = VarDomain { var: "x".into(), values: vec![q(1)] };
        assert!(StateSpace::new(vec![d.clone(), d]).is_err());
    }

    #[test]
    fn empty_space_has_one_state() {
        let s = StateSpace::default();
        assert_eq!(s.enumerate().count(), 1);
    }
}
