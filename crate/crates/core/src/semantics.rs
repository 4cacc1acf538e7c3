//! Reference semantics: `wp` and `wlp` tabulated over a finite state
//! space, and a seeded sampler.
//!
//! Programs are compiled to a small control-flow graph. Evaluation runs
//! over the configurations (node, state) reachable from every state of the
//! space, so an assignment only has to stay in its domain where it actually
//! executes. Loop-free programs are evaluated exactly; loops go through
//! value iteration in floating point.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::expectation::{Expectation, ExpectationError};
use crate::lang::ast::{Arith, Bool, EvalError, Inst, Prog, Q};
use crate::lang::state::{Indexer, State, StateSpace};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Executed steps after which a sampled run is censored.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SemanticsError {
    #[error("assignment at {path} sets {var} to {value}, outside its domain, from state {state}")]
    OutOfDomain { path: String, var: String, value: Q, state: State },
    #[error("variable {var} assigned at {path} is not declared")]
    Undeclared { path: String, var: String },
    #[error("instruction at {path} cannot be evaluated in state {state}: {error}")]
    Eval { path: String, state: State, error: EvalError },
    #[error("post-expectation at state {state}: {error}")]
    Post { state: State, error: ExpectationError },
}

/// A table entry: exact on loop-free programs, approximate after value iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Q),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Q> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Approx(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Approx(x) => write!(f, "{x:.12}"),
        }
    }
}

/// An expectation given by its value at every state of a space.
#[derive(Clone, Debug)]
pub struct TabulatedExpectation {
    space: StateSpace,
    values: Vec<Value>,
    /// False when any loop was iterated.
    pub exact: bool,
    /// False when iteration stopped at `max_iter` before reaching the tolerance.
    pub converged: bool,
    pub iterations: usize,
}

impl TabulatedExpectation {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn get(&self, s: &State) -> Option<&Value> {
        self.space.index_of(s).map(|i| &self.values[i])
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, &Value)> {
        self.space.enumerate().zip(self.values.iter())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().map(Value::to_f64).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "version": 1,
            "exact": self.exact,
            "converged": self.converged,
            "iterations": self.iterations,
            "rows": self.iter().map(|(s, v)| {
                let mut row: serde_json::Map<String, Json> =
                    s.iter().map(|(x, q)| (x.to_string(), Json::String(q.to_string()))).collect();
                row.insert("value".into(), Json::String(v.to_string()));
                Json::Object(row)
            }).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out: String = self.space.vars().map(|x| format!("{x},")).collect();
        out.push_str("value\n");
        for (s, v) in self.iter() {
            for (_, q) in s.iter() {
                out.push_str(&format!("{q},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Control-flow graph. Node 0 is the exit. Successor ids are smaller than the
// node's own id except for the edge from a loop head into its body.

type NodeId = usize;

enum Node {
    Exit,
    Assign { var: String, expr: Arith, next: NodeId, path: String },
    Branch { guard: Bool, then: NodeId, other: NodeId, path: String },
    Choice { p: Q, left: NodeId, right: NodeId },
    Loop { guard: Bool, body: NodeId, exit: NodeId, path: String },
}

struct Cfg {
    nodes: Vec<Node>,
    entry: NodeId,
}

impl Cfg {
    fn compile(p: &Prog) -> Cfg {
        let mut cfg = Cfg { nodes: vec![Node::Exit], entry: 0 };
        cfg.entry = cfg.block(p.insts(), 0, "");
        cfg
    }

    fn push(&mut self, n: Node) -> NodeId {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn block(&mut self, insts: &[Inst], cont: NodeId, prefix: &str) -> NodeId {
        let mut cont = cont;
        for (k, i) in insts.iter().enumerate().rev() {
            cont = self.inst(i, cont, &format!("{prefix}[{}]", k + 1));
        }
        cont
    }

    fn inst(&mut self, i: &Inst, cont: NodeId, path: &str) -> NodeId {
        match i {
            Inst::Skip => cont,
            Inst::Assign(x, e) => {
                self.push(Node::Assign { var: x.clone(), expr: e.clone(), next: cont, path: path.to_string() })
            }
            Inst::Cond(g, a, b) => {
                let then = self.block(a.insts(), cont, &format!("{path}.then"));
                let other = self.block(b.insts(), cont, &format!("{path}.else"));
                self.push(Node::Branch { guard: g.clone(), then, other, path: path.to_string() })
            }
            Inst::PChoice(a, p, b) => {
                let left = self.block(a.insts(), cont, &format!("{path}.left"));
                let right = self.block(b.insts(), cont, &format!("{path}.right"));
                self.push(Node::Choice { p: p.clone(), left, right })
            }
            Inst::While { guard, body, .. } => {
                let head = self.push(Node::Loop { guard: guard.clone(), body: 0, exit: cont, path: path.to_string() });
                let entry = self.block(body.insts(), head, &format!("{path}.body"));
                if let Node::Loop { body, .. } = &mut self.nodes[head] {
                    *body = entry;
                }
                head
            }
        }
    }
}

/// Successor of a configuration: another configuration, or termination in a state.
#[derive(Clone, Copy)]
enum Target {
    Config(usize),
    Done(usize),
}

/// Reachable configurations with their outgoing weighted transitions.
struct System {
    configs: Vec<(NodeId, usize)>,
    succ: Vec<Vec<(Q, Target)>>,
    /// configuration of (entry, s) for each state index s
    roots: Vec<Target>,
}

struct Builder<'a> {
    cfg: &'a Cfg,
    ix: Indexer,
    states: Vec<State>,
    ids: HashMap<(NodeId, usize), usize>,
    sys: System,
    work: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn target(&mut self, node: NodeId, s: usize) -> Target {
        if node == 0 {
            return Target::Done(s);
        }
        if let Some(&c) = self.ids.get(&(node, s)) {
            return Target::Config(c);
        }
        let c = self.sys.configs.len();
        self.sys.configs.push((node, s));
        self.sys.succ.push(Vec::new());
        self.ids.insert((node, s), c);
        self.work.push(c);
        Target::Config(c)
    }

    fn guard(&self, g: &Bool, s: usize, path: &str) -> Result<bool, SemanticsError> {
        g.eval(&self.states[s]).map_err(|error| SemanticsError::Eval {
            path: path.to_string(),
            state: self.states[s].clone(),
            error,
        })
    }

    fn expand(&mut self, c: usize) -> Result<(), SemanticsError> {
        let (node, s) = self.sys.configs[c];
        let one = Q::one();
        let succ = match &self.cfg.nodes[node] {
            Node::Exit => unreachable!("exit is never a configuration"),
            Node::Assign { var, expr, next, path } => {
                let state = &self.states[s];
                let v = expr.eval(state).map_err(|error| SemanticsError::Eval {
                    path: path.clone(),
                    state: state.clone(),
                    error,
                })?;
                let k = self
                    .ix
                    .var_position(var)
                    .ok_or_else(|| SemanticsError::Undeclared { path: path.clone(), var: var.clone() })?;
                let t = self.ix.with_value(s, k, &v).ok_or_else(|| SemanticsError::OutOfDomain {
                    path: path.clone(),
                    var: var.clone(),
                    value: v.clone(),
                    state: state.clone(),
                })?;
                let next = *next;
                vec![(one, self.target(next, t))]
            }
            Node::Branch { guard, then, other, path } => {
                let n = if self.guard(guard, s, path)? { *then } else { *other };
                vec![(one, self.target(n, s))]
            }
            Node::Choice { p, left, right } => {
                let (p, l, r) = (p.clone(), *left, *right);
                let mut out = Vec::new();
                if !p.is_zero() {
                    out.push((p.clone(), self.target(l, s)));
                }
                if !p.is_one() {
                    out.push((Q::one() - &p, self.target(r, s)));
                }
                out
            }
            Node::Loop { guard, body, exit, path } => {
                let n = if self.guard(guard, s, path)? { *body } else { *exit };
                vec![(one, self.target(n, s))]
            }
        };
        self.sys.succ[c] = succ;
        Ok(())
    }
}

fn build(cfg: &Cfg, space: &StateSpace) -> Result<(System, Vec<State>), SemanticsError> {
    let states: Vec<State> = space.enumerate().collect();
    let mut b = Builder {
        cfg,
        ix: Indexer::new(space),
        states,
        ids: HashMap::new(),
        sys: System { configs: Vec::new(), succ: Vec::new(), roots: Vec::new() },
        work: Vec::new(),
    };
    for s in 0..b.states.len() {
        let t = b.target(cfg.entry, s);
        b.sys.roots.push(t);
        while let Some(c) = b.work.pop() {
            b.expand(c)?;
        }
    }
    Ok((b.sys, b.states))
}

fn post_values(g: &Expectation, states: &[State]) -> Result<Vec<Q>, SemanticsError> {
    states
        .iter()
        .map(|s| g.evaluate(s).map_err(|error| SemanticsError::Post { state: s.clone(), error }))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fixpoint {
    Least,
    Greatest,
}

fn eval(p: &Prog, g: &Expectation, space: &StateSpace, tol: f64, max_iter: usize, fp: Fixpoint) -> Result<TabulatedExpectation, SemanticsError> {
    let cfg = Cfg::compile(p);
    let (sys, states) = build(&cfg, space)?;
    let post = post_values(g, &states)?;

    if !p.has_loops() {
        // successors have smaller node ids, so ascending node order is a valid schedule
        let mut order: Vec<usize> = (0..sys.configs.len()).collect();
        order.sort_by_key(|&c| sys.configs[c].0);
        let mut val = vec![Q::zero(); sys.configs.len()];
        for c in order {
            let mut acc = Q::zero();
            for (w, t) in &sys.succ[c] {
                acc += w * match *t {
                    Target::Config(d) => &val[d],
                    Target::Done(s) => &post[s],
                };
            }
            val[c] = acc;
        }
        let values = sys
            .roots
            .iter()
            .map(|t| {
                Value::Exact(match *t {
                    Target::Config(c) => val[c].clone(),
                    Target::Done(s) => post[s].clone(),
                })
            })
            .collect();
        return Ok(TabulatedExpectation { space: space.clone(), values, exact: true, converged: true, iterations: 0 });
    }

    let post: Vec<f64> = post.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
    let succ: Vec<Vec<(f64, Target)>> = sys
        .succ
        .iter()
        .map(|ts| ts.iter().map(|(w, t)| (w.to_f64().unwrap_or(f64::NAN), *t)).collect())
        .collect();
    let start = if fp == Fixpoint::Least { 0.0 } else { 1.0 };
    let mut val = vec![start; succ.len()];
    // configurations were discovered depth-first from the entry; sweeping in
    // reverse propagates values from the exits in few passes
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut delta: f64 = 0.0;
        for c in (0..succ.len()).rev() {
            let mut acc = 0.0;
            for (w, t) in &succ[c] {
                acc += w * match *t {
                    Target::Config(d) => val[d],
                    Target::Done(s) => post[s],
                };
            }
            delta = delta.max((acc - val[c]).abs());
            val[c] = acc;
        }
        if delta < tol {
            converged = true;
            break;
        }
    }
    let values = sys
        .roots
        .iter()
        .map(|t| {
            Value::Approx(match *t {
                Target::Config(c) => val[c],
                Target::Done(s) => post[s],
            })
        })
        .collect();
    Ok(TabulatedExpectation { space: space.clone(), values, exact: false, converged, iterations })
}

/// Weakest pre-expectation (least fixpoint for loops, iterated up from 0).
pub fn wp_eval(p: &Prog, g: &Expectation, space: &StateSpace, tol: f64, max_iter: usize) -> Result<TabulatedExpectation, SemanticsError> {
    eval(p, g, space, tol, max_iter, Fixpoint::Least)
}

/// Weakest liberal pre-expectation (greatest fixpoint, iterated down from 1).
pub fn wlp_eval(p: &Prog, g: &Expectation, space: &StateSpace, tol: f64, max_iter: usize) -> Result<TabulatedExpectation, SemanticsError> {
    eval(p, g, space, tol, max_iter, Fixpoint::Greatest)
}

// ---------------------------------------------------------------------------

/// Final-state counts of sampled runs.
#[derive(Clone, Debug, Default)]
pub struct Simulation {
    counts: Vec<(State, u64)>,
    /// Runs that hit the step cap.
    pub censored: u64,
}

impl Simulation {
    pub fn count(&self, s: &State) -> u64 {
        self.counts.iter().find(|(t, _)| t == s).map_or(0, |(_, n)| *n)
    }

    /// Distinct final states in order of first occurrence.
    pub fn outcomes(&self) -> &[(State, u64)] {
        &self.counts
    }

    pub fn completed(&self) -> u64 {
        self.counts.iter().map(|(_, n)| n).sum()
    }

    /// Completed runs whose final state satisfies `pred`.
    pub fn count_where(&self, mut pred: impl FnMut(&State) -> bool) -> u64 {
        self.counts.iter().filter(|(s, _)| pred(s)).map(|(_, n)| n).sum()
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    steps: u64,
    cap: u64,
}

enum Run {
    Done,
    Censored,
}

impl Sampler {
    /// Exact comparison of a 53-bit uniform dyadic rational with `p`.
    fn coin(&mut self, p: &Q) -> bool {
        let u = Q::new(BigInt::from(self.rng.next_u64() >> 11), BigInt::from(1u64 << 53));
        u < *p
    }

    fn tick(&mut self) -> bool {
        self.steps += 1;
        self.steps <= self.cap
    }

    fn block(&mut self, insts: &[Inst], s: &mut State, prefix: &str) -> Result<Run, SemanticsError> {
        for (k, i) in insts.iter().enumerate() {
            let path = format!("{prefix}[{}]", k + 1);
            if let Run::Censored = self.inst(i, s, &path)? {
                return Ok(Run::Censored);
            }
        }
        Ok(Run::Done)
    }

    fn test(g: &Bool, s: &State, path: &str) -> Result<bool, SemanticsError> {
        g.eval(s).map_err(|error| SemanticsError::Eval { path: path.to_string(), state: s.clone(), error })
    }

    fn inst(&mut self, i: &Inst, s: &mut State, path: &str) -> Result<Run, SemanticsError> {
        if !self.tick() {
            return Ok(Run::Censored);
        }
        match i {
            Inst::Skip => Ok(Run::Done),
            Inst::Assign(x, e) => {
                let v = e.eval(s).map_err(|error| SemanticsError::Eval {
                    path: path.to_string(),
                    state: s.clone(),
                    error,
                })?;
                s.set(x, v);
                Ok(Run::Done)
            }
            Inst::Cond(g, a, b) => {
                if Self::test(g, s, path)? {
                    self.block(a.insts(), s, &format!("{path}.then"))
                } else {
                    self.block(b.insts(), s, &format!("{path}.else"))
                }
            }
            Inst::PChoice(a, p, b) => {
                if self.coin(p) {
                    self.block(a.insts(), s, &format!("{path}.left"))
                } else {
                    self.block(b.insts(), s, &format!("{path}.right"))
                }
            }
            Inst::While { guard, body, .. } => {
                let body_path = format!("{path}.body");
                while Self::test(guard, s, path)? {
                    if let Run::Censored = self.block(body.insts(), s, &body_path)? {
                        return Ok(Run::Censored);
                    }
                    if !self.tick() {
                        return Ok(Run::Censored);
                    }
                }
                Ok(Run::Done)
            }
        }
    }
}

/// Runs `p` from `s` `n` times with a seeded generator; runs longer than
/// `step_cap` steps are censored.
pub fn simulate_with_cap(p: &Prog, s: &State, n: u64, seed: u64, step_cap: u64) -> Result<Simulation, SemanticsError> {
    let mut sampler = Sampler { rng: ChaCha8Rng::seed_from_u64(seed), steps: 0, cap: step_cap };
    let mut out = Simulation::default();
    let mut index: HashMap<State, usize> = HashMap::new();
    for _ in 0..n {
        sampler.steps = 0;
        let mut t = s.clone();
        match sampler.block(p.insts(), &mut t, "")? {
            Run::Censored => out.censored += 1,
            Run::Done => match index.get(&t) {
                Some(&k) => out.counts[k].1 += 1,
                None => {
                    index.insert(t.clone(), out.counts.len());
                    out.counts.push((t, 1));
                }
            },
        }
    }
    Ok(out)
}

pub fn simulate(p: &Prog, s: &State, n: u64, seed: u64) -> Result<Simulation, SemanticsError> {
    simulate_with_cap(p, s, n, seed, DEFAULT_STEP_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{q, qr};
    use crate::lang::parser::{parse_expectation, parse_prog};
    use crate::lang::state::VarDomain;

    fn space(doms: &[(&str, Vec<Q>)]) -> StateSpace {
        StateSpace::new(doms.iter().map(|(x, v)| VarDomain { var: x.to_string(), values: v.clone() }).collect()).unwrap()
    }

    #[test]
    fn skip_returns_post() {
        let sp = space(&[("x", vec![q(0), q(1)])]);
        let g = parse_expectation("[x = 1]").unwrap();
        let t = wp_eval(&Prog::skip(), &g, &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(t.exact);
        let vals: Vec<Q> = t.values().iter().map(|v| v.exact().unwrap().clone()).collect();
        assert_eq!(vals, vec![q(0), q(1)]);
    }

    #[test]
    fn only_reachable_assignments_need_domains() {
        let sp = space(&[("x", vec![q(0), q(1)])]);
        let p = parse_prog("x := 0; x := x + 1").unwrap();
        let g = parse_expectation("[x = 1]").unwrap();
        let t = wp_eval(&p, &g, &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(t.values().iter().all(|v| v == &Value::Exact(q(1))));
        let bad = parse_prog("x := x + 1").unwrap();
        let err = wp_eval(&bad, &g, &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap_err();
        assert_eq!(
            err,
            SemanticsError::OutOfDomain { path: "[1]".into(), var: "x".into(), value: q(2), state: State::from_pairs([("x", q(1))]) }
        );
    }

    #[test]
    fn nonterminating_loop() {
        let sp = space(&[("x", vec![q(0)])]);
        let p = parse_prog("while (true) @invariant{1} do { skip }").unwrap();
        let g = parse_expectation("[x = 5]").unwrap();
        let wlp = wlp_eval(&p, &g, &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(wlp.values(), &[Value::Approx(1.0)]);
        let wp = wp_eval(&p, &g, &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(wp.values(), &[Value::Approx(0.0)]);
        assert!(wp.converged && !wp.exact);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let sp = space(&[("c", vec![q(0), q(1)])]);
        let p = parse_prog("while (c = 1) @invariant{1} do { { c := 0 } [1/2] { c := 1 } }").unwrap();
        let t = wp_eval(&p, &Expectation::one(), &sp, 0.0, 5).unwrap();
        assert!(!t.converged);
        assert_eq!(t.iterations, 5);
    }

    #[test]
    fn sampler_is_deterministic_and_exact_on_halves() {
        let p = parse_prog("{ x := 0 } [1/2] { x := 1 }").unwrap();
        let s = State::from_pairs([("x", q(7))]);
        let a = simulate(&p, &s, 1000, 3).unwrap();
        let b = simulate(&p, &s, 1000, 3).unwrap();
        assert_eq!(a.outcomes(), b.outcomes());
        assert_eq!(a.completed(), 1000);
        let heads = a.count(&State::from_pairs([("x", q(0))]));
        // 3 sigma for Binomial(1000, 1/2)
        assert!((heads as f64 - 500.0).abs() < 3.0 * (250.0f64).sqrt(), "{heads}");
    }

    #[test]
    fn censoring() {
        let p = parse_prog("while (true) @invariant{1} do { skip }").unwrap();
        let r = simulate_with_cap(&p, &State::new(), 4, 0, 100).unwrap();
        assert_eq!((r.completed(), r.censored), (0, 4));
    }

    #[test]
    fn table_exports() {
        let sp = space(&[("x", vec![qr(-1, 2), q(1)])]);
        let t = wp_eval(&Prog::skip(), &parse_expectation("[x > 0]").unwrap(), &sp, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(t.to_csv(), "x,value\n-1/2,0\n1,1\n");
        assert_eq!(t.to_json()["rows"][1]["value"], "1");
    }
}
