//! Annotation-based transformers `wpre`/`wpre↓`, verification conditions
//! `vc`/`vc↓` and the generators `VCG`/`VCG↓`, with suffix and prefix
//! variants over instruction positions.

use std::collections::HashSet;
use std::fmt;

use num_traits::One;
use serde_json::{json, Value};

use crate::expectation::{entails, simplify, simplify_bool, Entailment, Expectation, LogicalBinding};
use crate::lang::ast::{Arith, Bool, CmpOp, Inst, Prog, Q};
use crate::lang::state::StateSpace;
use crate::lang::Mode;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VcError {
    #[error("loop at {0} has no termination annotation")]
    MissingTotalAnnotation(String),
    #[error("index {j} out of range {lo}..={hi}")]
    Index { j: usize, lo: usize, hi: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `f ⇛ wpre(c)(g)`
    Pre,
    /// `[G]·I ⇛ wpre(body)(I)`
    InvariantPreservation,
    /// `[¬G]·I ⇛ g`
    LoopExit,
    /// `[G∧T] ⇛ wpre↓(body)([T])`
    TerminationPreservation,
    /// `ε·[G∧T∧v=v0] ⇛ wpre↓(body)([v<v0])`
    VariantDecrease,
    /// `[G∧T] ⇛ [l ≤ v ≤ u]`
    VariantBounds,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Pre => "pre-entailment",
            Rule::InvariantPreservation => "loop-invariant-preservation",
            Rule::LoopExit => "loop-exit",
            Rule::TerminationPreservation => "termination-preservation",
            Rule::VariantDecrease => "variant-decrease",
            Rule::VariantBounds => "variant-bounds",
        }
    }
}

/// Which rule produced a VC, for which instruction, under which correctness notion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Origin {
    pub rule: Rule,
    pub kind: Mode,
    /// Instruction path such as `[3].body[2]`; empty for the whole program.
    pub path: String,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "root" } else { &self.path };
        write!(f, "{} @ {} ({})", self.rule.name(), path, self.kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vc {
    pub lhs: Expectation,
    pub rhs: Expectation,
    pub bindings: Vec<LogicalBinding>,
    pub origins: Vec<Origin>,
}

impl Vc {
    pub fn check(&self, space: &StateSpace) -> Entailment {
        entails(&self.lhs, &self.rhs, space, &self.bindings)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lhs": self.lhs.to_string(),
            "rhs": self.rhs.to_string(),
            "bindings": self.bindings.iter().map(|b| json!({
                "var": b.var,
                "values": b.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "origins": self.origins.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Vc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.lhs, self.rhs)?;
        for b in &self.bindings {
            write!(f, " for {} in {{", b.var)?;
            for (i, v) in b.values.iter().enumerate() {
                write!(f, "{}{v}", if i > 0 { ", " } else { "" })?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Ordered set of VCs; structurally equal claims are merged and keep all origins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VcSet {
    vcs: Vec<Vc>,
}

impl VcSet {
    pub fn new() -> VcSet {
        VcSet::default()
    }

    pub fn insert(&mut self, vc: Vc) {
        match self
            .vcs
            .iter_mut()
            .find(|v| v.lhs == vc.lhs && v.rhs == vc.rhs && v.bindings == vc.bindings)
        {
            Some(existing) => {
                for o in vc.origins {
                    if !existing.origins.contains(&o) {
                        existing.origins.push(o);
                    }
                }
            }
            None => self.vcs.push(vc),
        }
    }

    pub fn extend(&mut self, other: VcSet) {
        for vc in other.vcs {
            self.insert(vc);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vc> {
        self.vcs.iter()
    }

    pub fn len(&self) -> usize {
        self.vcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vcs.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": 1,
            "vcs": self.vcs.iter().map(Vc::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Per-VC verdicts.
#[derive(Clone, Debug)]
pub struct Discharge {
    pub results: Vec<(Vc, Entailment)>,
}

impl Discharge {
    pub fn is_valid(&self) -> bool {
        self.results.iter().all(|(_, r)| r.is_valid())
    }

    pub fn failures(&self) -> impl Iterator<Item = &(Vc, Entailment)> {
        self.results.iter().filter(|(_, r)| !r.is_valid())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": 1,
            "valid": self.is_valid(),
            "vcs": self.results.iter().map(|(vc, r)| {
                let mut v = vc.to_json();
                v["result"] = r.to_json();
                v
            }).collect::<Vec<_>>(),
        })
    }
}

/// Checks every VC by enumeration over `space` and its own bindings.
pub fn discharge(vcs: &VcSet, space: &StateSpace) -> Discharge {
    Discharge { results: vcs.iter().map(|vc| (vc.clone(), vc.check(space))).collect() }
}

// ---------------------------------------------------------------------------

/// Fresh logical variables and the bindings in scope.
struct Ctx {
    taken: HashSet<String>,
    counter: usize,
    bindings: Vec<LogicalBinding>,
}

impl Ctx {
    fn new(p: &[Inst], es: &[&Expectation], outer: &[LogicalBinding]) -> Ctx {
        let mut vars = Vec::new();
        Prog::new(if p.is_empty() { vec![Inst::Skip] } else { p.to_vec() }).vars(&mut vars);
        for e in es {
            e.vars(&mut vars);
        }
        let mut taken: HashSet<String> = vars.into_iter().collect();
        taken.extend(outer.iter().map(|b| b.var.clone()));
        Ctx { taken, counter: 0, bindings: outer.to_vec() }
    }

    fn fresh(&mut self, lo: i64, hi: i64) -> String {
        loop {
            self.counter += 1;
            let name = format!("v0_{}", self.counter);
            if self.taken.insert(name.clone()) {
                self.bindings.push(LogicalBinding::range(name.clone(), lo, hi));
                return name;
            }
        }
    }

    fn vc(&self, lhs: Expectation, rhs: Expectation, rule: Rule, kind: Mode, path: &str) -> Vc {
        let lhs = simplify(&lhs);
        let rhs = simplify(&rhs);
        let free = crate::expectation::collect_vars(&[&lhs, &rhs]);
        let bindings = self.bindings.iter().filter(|b| free.contains(&b.var)).cloned().collect();
        Vc { lhs, rhs, bindings, origins: vec![Origin { rule, kind, path: path.to_string() }] }
    }

    fn wpre(&mut self, mode: Mode, insts: &[Inst], g: &Expectation, prefix: &str, offset: usize) -> Result<Expectation, VcError> {
        let mut post = g.clone();
        for (k, i) in insts.iter().enumerate().rev() {
            post = self.wpre_inst(mode, i, &post, &step(prefix, offset + k + 1))?;
        }
        Ok(post)
    }

    fn wpre_inst(&mut self, mode: Mode, i: &Inst, g: &Expectation, here: &str) -> Result<Expectation, VcError> {
        Ok(match i {
            Inst::Skip => g.clone(),
            Inst::Assign(x, e) => g.substitute(x, e),
            Inst::Cond(guard, a, b) => {
                let wa = self.wpre(mode, a.insts(), g, &format!("{here}.then"), 0)?;
                let wb = self.wpre(mode, b.insts(), g, &format!("{here}.else"), 0)?;
                guarded_choice(guard, wa, wb)
            }
            Inst::PChoice(a, p, b) => {
                let wa = self.wpre(mode, a.insts(), g, &format!("{here}.left"), 0)?;
                let wb = self.wpre(mode, b.insts(), g, &format!("{here}.right"), 0)?;
                prob_choice(p, wa, wb)
            }
            Inst::While { invariant, total, .. } => match mode {
                Mode::Partial => invariant.clone(),
                Mode::Total => {
                    let t = total.as_ref().ok_or_else(|| VcError::MissingTotalAnnotation(here.to_string()))?;
                    simplify(&Expectation::guarded(t.term.clone(), invariant.clone()))
                }
            },
        })
    }

    fn vcs(&mut self, mode: Mode, insts: &[Inst], g: &Expectation, prefix: &str, offset: usize) -> Result<VcSet, VcError> {
        // posts[k] is the post-expectation of instruction k
        let mut posts = vec![g.clone(); insts.len()];
        let mut post = g.clone();
        for (k, i) in insts.iter().enumerate().rev() {
            posts[k] = post.clone();
            post = self.wpre_inst(mode, i, &post, &step(prefix, offset + k + 1))?;
        }
        let mut out = VcSet::new();
        for (k, i) in insts.iter().enumerate() {
            out.extend(self.vc_inst(mode, i, &posts[k], &step(prefix, offset + k + 1))?);
        }
        Ok(out)
    }

    fn vc_inst(&mut self, mode: Mode, i: &Inst, g: &Expectation, here: &str) -> Result<VcSet, VcError> {
        let mut out = VcSet::new();
        match i {
            Inst::Skip | Inst::Assign(..) => {}
            Inst::Cond(_, a, b) => {
                out.extend(self.vcs(mode, a.insts(), g, &format!("{here}.then"), 0)?);
                out.extend(self.vcs(mode, b.insts(), g, &format!("{here}.else"), 0)?);
            }
            Inst::PChoice(a, _, b) => {
                out.extend(self.vcs(mode, a.insts(), g, &format!("{here}.left"), 0)?);
                out.extend(self.vcs(mode, b.insts(), g, &format!("{here}.right"), 0)?);
            }
            Inst::While { guard, invariant, total, body } => {
                let body_path = format!("{here}.body");
                if mode == Mode::Total {
                    let t = total.as_ref().ok_or_else(|| VcError::MissingTotalAnnotation(here.to_string()))?;
                    let g_and_t = Bool::and(guard.clone(), t.term.clone());
                    let v0 = self.fresh(t.lower, t.upper);
                    let v0_var = Arith::Var(v0);
                    let at_v0 = Bool::cmp(CmpOp::Eq, t.variant.clone(), v0_var.clone());
                    let below_v0 = Expectation::iverson(Bool::cmp(CmpOp::Lt, t.variant.clone(), v0_var));
                    let term_post = Expectation::iverson(t.term.clone());
                    let in_bounds = Bool::and(
                        Bool::cmp(CmpOp::Le, Arith::int(t.lower), t.variant.clone()),
                        Bool::cmp(CmpOp::Le, t.variant.clone(), Arith::int(t.upper)),
                    );
                    let w_term = self.wpre(Mode::Total, body.insts(), &term_post, &body_path, 0)?;
                    out.insert(self.vc(
                        Expectation::iverson(g_and_t.clone()),
                        w_term,
                        Rule::TerminationPreservation,
                        Mode::Total,
                        here,
                    ));
                    let w_var = self.wpre(Mode::Total, body.insts(), &below_v0, &body_path, 0)?;
                    out.insert(self.vc(
                        Expectation::scale(t.eps.clone(), Expectation::iverson(Bool::and(g_and_t.clone(), at_v0))),
                        w_var,
                        Rule::VariantDecrease,
                        Mode::Total,
                        here,
                    ));
                    out.insert(self.vc(
                        Expectation::iverson(g_and_t),
                        Expectation::iverson(in_bounds),
                        Rule::VariantBounds,
                        Mode::Total,
                        here,
                    ));
                    out.extend(self.vcs(Mode::Total, body.insts(), &term_post, &body_path, 0)?);
                    out.extend(self.vcs(Mode::Total, body.insts(), &below_v0, &body_path, 0)?);
                }
                // invariant obligations are partial in both modes
                let w_inv = self.wpre(Mode::Partial, body.insts(), invariant, &body_path, 0)?;
                out.insert(self.vc(
                    Expectation::guarded(guard.clone(), invariant.clone()),
                    w_inv,
                    Rule::InvariantPreservation,
                    Mode::Partial,
                    here,
                ));
                out.insert(self.vc(
                    Expectation::guarded(Bool::not(guard.clone()), invariant.clone()),
                    g.clone(),
                    Rule::LoopExit,
                    Mode::Partial,
                    here,
                ));
                out.extend(self.vcs(Mode::Partial, body.insts(), invariant, &body_path, 0)?);
            }
        }
        Ok(out)
    }

    fn vcg(&mut self, mode: Mode, f: &Expectation, insts: &[Inst], g: &Expectation, prefix: &str, offset: usize) -> Result<VcSet, VcError> {
        let w = self.wpre(mode, insts, g, prefix, offset)?;
        let mut out = VcSet::new();
        out.insert(self.vc(f.clone(), w, Rule::Pre, mode, prefix));
        out.extend(self.vcs(mode, insts, g, prefix, offset)?);
        Ok(out)
    }
}

fn step(prefix: &str, j: usize) -> String {
    format!("{prefix}[{j}]")
}

/// `[G]·a + [¬G]·b`, collapsing when both branches agree.
pub fn guarded_choice(guard: &Bool, a: Expectation, b: Expectation) -> Expectation {
    if a == b {
        return a;
    }
    let neg = simplify_bool(&Bool::not(guard.clone()));
    simplify(&Expectation::sum(vec![
        Expectation::guarded(guard.clone(), a),
        Expectation::guarded(neg, b),
    ]))
}

/// `p·a + (1-p)·b`, collapsing when both branches agree.
pub fn prob_choice(p: &Q, a: Expectation, b: Expectation) -> Expectation {
    if a == b {
        return a;
    }
    simplify(&Expectation::sum(vec![
        Expectation::scale(p.clone(), a),
        Expectation::scale(Q::one() - p, b),
    ]))
}

fn check_range(j: usize, lo: usize, hi: usize) -> Result<(), VcError> {
    if j < lo || j > hi {
        return Err(VcError::Index { j, lo, hi });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Mode-generic entry points. `bindings` are logical variables already
// free in `f`/`g` (e.g. from a local specification).

pub fn wpre_in(mode: Mode, p: &Prog, g: &Expectation) -> Result<Expectation, VcError> {
    Ctx::new(p.insts(), &[g], &[]).wpre(mode, p.insts(), g, "", 0)
}

pub fn vc_in(mode: Mode, p: &Prog, g: &Expectation, bindings: &[LogicalBinding]) -> Result<VcSet, VcError> {
    Ctx::new(p.insts(), &[g], bindings).vcs(mode, p.insts(), g, "", 0)
}

pub fn vcg_in(
    mode: Mode,
    f: &Expectation,
    p: &Prog,
    g: &Expectation,
    bindings: &[LogicalBinding],
) -> Result<VcSet, VcError> {
    Ctx::new(p.insts(), &[f, g], bindings).vcg(mode, f, p.insts(), g, "", 0)
}

/// `wpre^j(c)(g)` for `1 <= j <= n+1`.
pub fn wpre_suffix_in(mode: Mode, j: usize, p: &Prog, g: &Expectation) -> Result<Expectation, VcError> {
    check_range(j, 1, p.len() + 1)?;
    Ctx::new(p.insts(), &[g], &[]).wpre(mode, &p.insts()[j - 1..], g, "", j - 1)
}

/// `[wpre^1, ..., wpre^{n+1}]` in one backward pass.
pub fn wpre_suffixes_in(mode: Mode, p: &Prog, g: &Expectation) -> Result<Vec<Expectation>, VcError> {
    let mut ctx = Ctx::new(p.insts(), &[g], &[]);
    let mut out = vec![g.clone()];
    for (k, i) in p.insts().iter().enumerate().rev() {
        let w = ctx.wpre_inst(mode, i, &out[0], &step("", k + 1))?;
        out.insert(0, w);
    }
    Ok(out)
}

/// `vc^j(c)(g)` for `1 <= j <= n+1`.
pub fn vc_suffix_in(mode: Mode, j: usize, p: &Prog, g: &Expectation, bindings: &[LogicalBinding]) -> Result<VcSet, VcError> {
    check_range(j, 1, p.len() + 1)?;
    Ctx::new(p.insts(), &[g], bindings).vcs(mode, &p.insts()[j - 1..], g, "", j - 1)
}

/// `VCG^j(f)(c)(g)` for `1 <= j <= n+1`; empty at `n+1`.
pub fn vcg_suffix_in(
    mode: Mode,
    j: usize,
    f: &Expectation,
    p: &Prog,
    g: &Expectation,
    bindings: &[LogicalBinding],
) -> Result<VcSet, VcError> {
    check_range(j, 1, p.len() + 1)?;
    if j == p.len() + 1 {
        return Ok(VcSet::new());
    }
    Ctx::new(p.insts(), &[f, g], bindings).vcg(mode, f, &p.insts()[j - 1..], g, "", j - 1)
}

/// `VCG_j(f)(c)(g)` for `0 <= j <= n`; `{f ⇛ g}` at `0`.
pub fn vcg_prefix_in(
    mode: Mode,
    j: usize,
    f: &Expectation,
    p: &Prog,
    g: &Expectation,
    bindings: &[LogicalBinding],
) -> Result<VcSet, VcError> {
    check_range(j, 0, p.len())?;
    Ctx::new(p.insts(), &[f, g], bindings).vcg(mode, f, &p.insts()[..j], g, "", 0)
}

// ---------------------------------------------------------------------------
// Partial correctness.

pub fn wpre(p: &Prog, g: &Expectation) -> Expectation {
    wpre_in(Mode::Partial, p, g).expect("partial wpre is total")
}

pub fn vc(p: &Prog, g: &Expectation) -> VcSet {
    vc_in(Mode::Partial, p, g, &[]).expect("partial vc is total")
}

pub fn vcg(f: &Expectation, p: &Prog, g: &Expectation) -> VcSet {
    vcg_in(Mode::Partial, f, p, g, &[]).expect("partial vcg is total")
}

pub fn wpre_suffix(j: usize, p: &Prog, g: &Expectation) -> Result<Expectation, VcError> {
    wpre_suffix_in(Mode::Partial, j, p, g)
}

pub fn vc_suffix(j: usize, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vc_suffix_in(Mode::Partial, j, p, g, &[])
}

pub fn vcg_suffix(j: usize, f: &Expectation, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vcg_suffix_in(Mode::Partial, j, f, p, g, &[])
}

pub fn vcg_prefix(j: usize, f: &Expectation, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vcg_prefix_in(Mode::Partial, j, f, p, g, &[])
}

// ---------------------------------------------------------------------------
// Total correctness.

pub fn wpre_total(p: &Prog, g: &Expectation) -> Result<Expectation, VcError> {
    wpre_in(Mode::Total, p, g)
}

pub fn vc_total(p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vc_in(Mode::Total, p, g, &[])
}

pub fn vcg_total(f: &Expectation, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vcg_in(Mode::Total, f, p, g, &[])
}

pub fn wpre_total_suffix(j: usize, p: &Prog, g: &Expectation) -> Result<Expectation, VcError> {
    wpre_suffix_in(Mode::Total, j, p, g)
}

pub fn vc_total_suffix(j: usize, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vc_suffix_in(Mode::Total, j, p, g, &[])
}

pub fn vcg_total_suffix(j: usize, f: &Expectation, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vcg_suffix_in(Mode::Total, j, f, p, g, &[])
}

pub fn vcg_total_prefix(j: usize, f: &Expectation, p: &Prog, g: &Expectation) -> Result<VcSet, VcError> {
    vcg_prefix_in(Mode::Total, j, f, p, g, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{q, qr};
    use crate::lang::parser::{parse_expectation, parse_prog};
    use crate::lang::state::{State, VarDomain};

    fn e(s: &str) -> Expectation {
        parse_expectation(s).unwrap()
    }

    fn x_space() -> StateSpace {
        StateSpace::new(vec![VarDomain { var: "x".into(), values: (-2..=3).map(q).collect() }]).unwrap()
    }

    fn pointwise_eq(a: &Expectation, b: &Expectation, sp: &StateSpace) {
        for s in sp.enumerate() {
            assert_eq!(a.value(&s).unwrap(), b.value(&s).unwrap(), "{a} vs {b} at {s}");
        }
    }

    #[test]
    fn skip_is_identity() {
        let g = e("[x = 1]");
        assert_eq!(wpre(&Prog::skip(), &g), g);
    }

    #[test]
    fn probabilistic_choice_rule() {
        let p = parse_prog("{ x := x - 1 } [1/2] { x := x - 2 }").unwrap();
        let w = wpre(&p, &e("[x >= 0]"));
        assert_eq!(w, e("1/2 * [x - 1 >= 0] + 1/2 * [x - 2 >= 0]"));
    }

    #[test]
    fn loop_returns_invariant() {
        let p = parse_prog("while (x > 0) @invariant{1/3 * [x >= 0]} do { x := x - 1 }").unwrap();
        assert_eq!(wpre(&p, &e("[x = 0]")), e("1/3 * [x >= 0]"));
        assert_eq!(wpre(&p, &e("0")), e("1/3 * [x >= 0]"));
    }

    #[test]
    fn assignment_has_no_vcs() {
        assert!(vc(&parse_prog("x := 1").unwrap(), &e("[x = 1]")).is_empty());
    }

    #[test]
    fn vcg_of_skip() {
        let vcs = vcg(&Expectation::one(), &Prog::skip(), &Expectation::zero());
        assert_eq!(vcs.len(), 1);
        let d = discharge(&vcs, &x_space());
        assert!(!d.is_valid());
        assert!(matches!(d.results[0].1, Entailment::Invalid { .. }));
    }

    #[test]
    fn suffix_boundaries() {
        let p = parse_prog("x := x + 1; x := 2*x").unwrap();
        let g = e("[x = 2]");
        assert_eq!(wpre_suffix(3, &p, &g).unwrap(), g);
        assert!(vc_suffix(3, &p, &g).unwrap().is_empty());
        assert!(vcg_suffix(3, &Expectation::one(), &p, &g).unwrap().is_empty());
        let pre0 = vcg_prefix(0, &Expectation::one(), &p, &g).unwrap();
        assert_eq!(pre0.len(), 1);
        let vc0 = pre0.iter().next().unwrap();
        assert_eq!((&vc0.lhs, &vc0.rhs), (&Expectation::one(), &g));
        assert!(wpre_suffix(0, &p, &g).is_err());
        assert!(wpre_suffix(4, &p, &g).is_err());
        pointwise_eq(&wpre_suffix(1, &p, &g).unwrap(), &wpre(&p, &g), &x_space());
        pointwise_eq(&wpre_suffix(2, &p, &g).unwrap(), &e("[2*x = 2]"), &x_space());
    }

    #[test]
    fn total_loop_guard_by_termination_predicate() {
        let p = parse_prog(
            "while (x > 0) @invariant{1/2 * [x >= 0]} @terminates{x >= 0} @variant{x} @bounds{0, 3} @eps{1} do { x := x - 1 }",
        )
        .unwrap();
        let w = wpre_total(&p, &e("[x = 0]")).unwrap();
        pointwise_eq(&w, &e("1/2 * [x >= 0]"), &x_space());
        let vcs = vc_total(&p, &e("[x = 0]")).unwrap();
        let rules: Vec<Rule> = vcs.iter().flat_map(|v| v.origins.iter().map(|o| o.rule)).collect();
        for r in [
            Rule::TerminationPreservation,
            Rule::VariantDecrease,
            Rule::VariantBounds,
            Rule::InvariantPreservation,
            Rule::LoopExit,
        ] {
            assert!(rules.contains(&r), "{r:?} missing");
        }
        let dec = vcs.iter().find(|v| v.origins[0].rule == Rule::VariantDecrease).unwrap();
        assert_eq!(dec.bindings, vec![LogicalBinding::range("v0_1", 0, 3)]);
        // x ranges over -2..3 but the loop only runs for x > 0
        assert!(discharge(&vcs, &x_space()).is_valid());
    }

    #[test]
    fn missing_annotation_is_an_error() {
        let p = parse_prog("x := 0; while (x > 0) @invariant{1} do { x := x - 1 }").unwrap();
        assert_eq!(
            wpre_total(&p, &Expectation::one()),
            Err(VcError::MissingTotalAnnotation("[2]".into()))
        );
    }

    #[test]
    fn nested_loops_get_distinct_snapshots() {
        let p = parse_prog(
            "while (x > 0) @invariant{1} @terminates{true} @variant{x} @bounds{0, 3} @eps{1} do {
               while (x > 5) @invariant{1} @terminates{true} @variant{x} @bounds{0, 9} @eps{1} do { x := x - 1 };
               x := x - 1
             }",
        )
        .unwrap();
        let vcs = vc_total(&p, &Expectation::one()).unwrap();
        let mut names: Vec<String> = vcs.iter().flat_map(|v| v.bindings.iter().map(|b| b.var.clone())).collect();
        names.sort();
        names.dedup();
        // the inner loop is visited once per outer post-expectation
        assert_eq!(names, ["v0_1", "v0_2", "v0_3"]);
    }

    #[test]
    fn duplicates_merge_origins() {
        let p = parse_prog("{ while (x > 0) @invariant{1} do { x := x - 1 } } [1/2] { while (x > 0) @invariant{1} do { x := x - 1 } }").unwrap();
        let vcs = vc(&p, &Expectation::one());
        assert_eq!(vcs.len(), 2);
        assert!(vcs.iter().all(|v| v.origins.len() == 2));
    }

    #[test]
    fn origin_display() {
        let o = Origin { rule: Rule::InvariantPreservation, kind: Mode::Partial, path: "[3].body[2]".into() };
        assert_eq!(o.to_string(), "loop-invariant-preservation @ [3].body[2] (partial)");
        let s = State::from_pairs([("x", qr(1, 2))]);
        assert_eq!(s.to_string(), "{x = 1/2}");
    }
}
