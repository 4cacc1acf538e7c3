//! Local specifications induced on nested subprograms, and the entailment
//! checks shared by the greedy slicer and the slice graph.

use std::collections::{HashMap, HashSet};

use serde_json::{json, Value};

use crate::expectation::{entails, simplify, simplify_bool, Expectation, LogicalBinding};
use crate::lang::ast::{Arith, Bool, CmpOp, Inst, Prog};
use crate::lang::state::StateSpace;
use crate::lang::Mode;
use crate::vcgen::{wpre_in, wpre_suffixes_in, VcError};

use super::path::{Step, SubprogramPath};

/// A specification induced on the subprogram at `path`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSpec {
    pub path: SubprogramPath,
    pub kind: Mode,
    pub pre: Expectation,
    pub post: Expectation,
    /// Snapshot variables of enclosing loops free in `pre` or `post`.
    pub bindings: Vec<LogicalBinding>,
}

impl LocalSpec {
    pub fn to_json(&self) -> Value {
        json!({
            "path": self.path.to_string(),
            "kind": self.kind.to_string(),
            "pre": self.pre.to_string(),
            "post": self.post.to_string(),
            "bindings": self.bindings.iter().map(|b| b.var.clone()).collect::<Vec<_>>(),
        })
    }
}

/// A sequence of instructions (the root, a branch or a loop body) with
/// every specification induced on it.
#[derive(Clone, Debug)]
pub(crate) struct Region {
    pub path: SubprogramPath,
    pub prog: Prog,
    pub specs: Vec<LocalSpec>,
    /// `labels[i][j - 1]` is `wpre^j` of `prog` towards `specs[i].post`, for `j = 1..=n+1`.
    pub labels: Vec<Vec<Expectation>>,
    pub loop_body: bool,
    /// Regions nested in instruction j, in branch order.
    pub children: Vec<(usize, Vec<usize>)>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.prog.len()
    }

    pub fn children_of(&self, j: usize) -> &[usize] {
        self.children.iter().find(|(k, _)| *k == j).map_or(&[], |(_, c)| c)
    }

    /// Whole-body removal of a loop checked only for partial correctness.
    pub fn trivially_removable(&self) -> bool {
        self.loop_body && self.specs.iter().all(|s| s.kind == Mode::Partial)
    }
}

struct Analyzer {
    regions: Vec<Region>,
    taken: HashSet<String>,
    counter: usize,
    snapshots: HashMap<SubprogramPath, LogicalBinding>,
}

impl Analyzer {
    fn snapshot(&mut self, loop_path: &SubprogramPath, lo: i64, hi: i64) -> LogicalBinding {
        if let Some(b) = self.snapshots.get(loop_path) {
            return b.clone();
        }
        let name = loop {
            self.counter += 1;
            let name = format!("v0_{}", self.counter);
            if self.taken.insert(name.clone()) {
                break name;
            }
        };
        let b = LogicalBinding::range(name, lo, hi);
        self.snapshots.insert(loop_path.clone(), b.clone());
        b
    }

    fn region(&mut self, path: SubprogramPath, prog: &Prog, specs: Vec<LocalSpec>, loop_body: bool) -> Result<usize, VcError> {
        let labels = specs
            .iter()
            .map(|s| wpre_suffixes_in(s.kind, prog, &s.post))
            .collect::<Result<Vec<_>, _>>()?;
        let idx = self.regions.len();
        self.regions.push(Region { path: path.clone(), prog: prog.clone(), specs: specs.clone(), labels: labels.clone(), loop_body, children: Vec::new() });
        let mut children = Vec::new();
        for (k, inst) in prog.insts().iter().enumerate() {
            let j = k + 1;
            let ipath = path.child(Step::Index(j));
            let mut kids = Vec::new();
            match inst {
                Inst::Skip | Inst::Assign(..) => continue,
                Inst::Cond(g, a, b) => {
                    let neg = simplify_bool(&Bool::not(g.clone()));
                    for (step, sub, guard) in [(Step::Then, a, g.clone()), (Step::Else, b, neg)] {
                        let cpath = ipath.child(step);
                        let mut cs = Vec::new();
                        for (s, l) in specs.iter().zip(&labels) {
                            let post = l[j].clone();
                            let pre = simplify(&Expectation::guarded(guard.clone(), wpre_in(s.kind, sub, &post)?));
                            push_spec(&mut cs, &cpath, s.kind, pre, post, &s.bindings, None);
                        }
                        kids.push(self.region(cpath, sub, cs, false)?);
                    }
                }
                Inst::PChoice(a, _, b) => {
                    for (step, sub) in [(Step::Left, a), (Step::Right, b)] {
                        let cpath = ipath.child(step);
                        let mut cs = Vec::new();
                        for (s, l) in specs.iter().zip(&labels) {
                            let post = l[j].clone();
                            let pre = wpre_in(s.kind, sub, &post)?;
                            push_spec(&mut cs, &cpath, s.kind, pre, post, &s.bindings, None);
                        }
                        kids.push(self.region(cpath, sub, cs, false)?);
                    }
                }
                Inst::While { guard, invariant, total, body } => {
                    let cpath = ipath.child(Step::Body);
                    let mut cs = Vec::new();
                    for s in &specs {
                        let inv_pre = simplify(&Expectation::guarded(guard.clone(), invariant.clone()));
                        push_spec(&mut cs, &cpath, Mode::Partial, inv_pre, invariant.clone(), &s.bindings, None);
                        if s.kind == Mode::Total {
                            let t = total.as_ref().ok_or_else(|| VcError::MissingTotalAnnotation(ipath.to_string()))?;
                            let v0 = self.snapshot(&ipath, t.lower, t.upper);
                            let g_and_t = simplify_bool(&Bool::and(guard.clone(), t.term.clone()));
                            push_spec(
                                &mut cs,
                                &cpath,
                                Mode::Total,
                                Expectation::iverson(g_and_t.clone()),
                                simplify(&Expectation::iverson(t.term.clone())),
                                &s.bindings,
                                None,
                            );
                            let at_v0 = Bool::cmp(CmpOp::Eq, t.variant.clone(), Arith::Var(v0.var.clone()));
                            let below = Bool::cmp(CmpOp::Lt, t.variant.clone(), Arith::Var(v0.var.clone()));
                            push_spec(
                                &mut cs,
                                &cpath,
                                Mode::Total,
                                simplify(&Expectation::scale(t.eps.clone(), Expectation::iverson(Bool::and(g_and_t, at_v0)))),
                                Expectation::iverson(below),
                                &s.bindings,
                                Some(v0),
                            );
                        }
                    }
                    kids.push(self.region(cpath, body, cs, true)?);
                }
            }
            children.push((j, kids));
        }
        self.regions[idx].children = children;
        Ok(idx)
    }
}

fn push_spec(
    out: &mut Vec<LocalSpec>,
    path: &SubprogramPath,
    kind: Mode,
    pre: Expectation,
    post: Expectation,
    outer: &[LogicalBinding],
    extra: Option<LogicalBinding>,
) {
    let mut free = pre.free_vars();
    free.extend(post.free_vars());
    let bindings = outer.iter().cloned().chain(extra).filter(|b| free.contains(&b.var)).collect();
    let spec = LocalSpec { path: path.clone(), kind, pre, post, bindings };
    if !out.contains(&spec) {
        out.push(spec);
    }
}

/// All regions of `p` in pre-order; the root region carries `(f, g)`.
pub(crate) fn analyze(p: &Prog, f: &Expectation, g: &Expectation, mode: Mode) -> Result<Vec<Region>, VcError> {
    let mut taken = Vec::new();
    p.vars(&mut taken);
    f.vars(&mut taken);
    g.vars(&mut taken);
    let mut a = Analyzer { regions: Vec::new(), taken: taken.into_iter().collect(), counter: 0, snapshots: HashMap::new() };
    let root = LocalSpec { path: SubprogramPath::root(), kind: mode, pre: f.clone(), post: g.clone(), bindings: Vec::new() };
    a.region(SubprogramPath::root(), p, vec![root], false)?;
    Ok(a.regions)
}

/// Every local specification induced by `(f, g)` on `p`, root included,
/// grouped by subprogram in pre-order.
pub fn local_specifications(p: &Prog, f: &Expectation, g: &Expectation, mode: Mode) -> Result<Vec<LocalSpec>, VcError> {
    Ok(analyze(p, f, g, mode)?.into_iter().flat_map(|r| r.specs).collect())
}

/// Why a span may be removed under one local specification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    /// `wpre^j ⇛ wpre^{k+1}`
    Labels,
    /// `pre ⇛ wpre^{k+1}` for a span starting at the first instruction.
    Pre,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum From {
    Pre,
    Label(usize),
}

/// Memoised entailment checks over a fixed state space.
pub(crate) struct Checker<'a> {
    space: &'a StateSpace,
    cache: HashMap<(usize, usize, From, usize), bool>,
}

impl<'a> Checker<'a> {
    pub fn new(space: &'a StateSpace) -> Checker<'a> {
        Checker { space, cache: HashMap::new() }
    }

    fn holds(&mut self, regions: &[Region], r: usize, i: usize, from: From, to: usize) -> bool {
        if let Some(&b) = self.cache.get(&(r, i, from, to)) {
            return b;
        }
        let reg = &regions[r];
        let spec = &reg.specs[i];
        let lhs = match from {
            From::Pre => &spec.pre,
            From::Label(j) => &reg.labels[i][j - 1],
        };
        let rhs = &reg.labels[i][to - 1];
        let b = lhs == rhs || entails(lhs, rhs, self.space, &spec.bindings).is_valid();
        self.cache.insert((r, i, from, to), b);
        b
    }

    /// Whether instructions j..=k of region `r` may be removed, with the
    /// justification used for each specification.
    pub fn span(&mut self, regions: &[Region], r: usize, j: usize, k: usize) -> Option<Vec<Reason>> {
        let mut out = Vec::new();
        for i in 0..regions[r].specs.len() {
            if self.holds(regions, r, i, From::Label(j), k + 1) {
                out.push(Reason::Labels);
            } else if j == 1 && self.holds(regions, r, i, From::Pre, k + 1) {
                out.push(Reason::Pre);
            } else {
                return None;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_expectation, parse_prog};

    fn e(s: &str) -> Expectation {
        parse_expectation(s).unwrap()
    }

    #[test]
    fn reflexive_root_spec() {
        let p = parse_prog("x := 1").unwrap();
        let specs = local_specifications(&p, &e("1/2"), &e("[x = 1]"), Mode::Partial).unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!((&specs[0].pre, &specs[0].post), (&e("1/2"), &e("[x = 1]")));
        assert!(specs[0].path.is_root());
    }

    #[test]
    fn branches_get_guarded_or_unguarded_pres() {
        let p = parse_prog("if (y = 1) { x := 1 } else { x := 0 }; { z := 1 } [1/3] { z := 0 }").unwrap();
        let specs = local_specifications(&p, &e("0"), &e("[x = 1]"), Mode::Partial).unwrap();
        let at = |s: &str| specs.iter().find(|l| l.path.to_string() == s).unwrap();
        assert_eq!(at("[1].then").pre, e("[y = 1]"));
        assert_eq!(at("[1].else").pre, e("0"));
        assert_eq!(at("[2].left").pre, e("[x = 1]"));
        assert_eq!(at("[2].left").post, e("[x = 1]"));
    }

    #[test]
    fn total_loop_induces_three_specs() {
        let p = parse_prog(
            "while (c = 1) @invariant{1} @terminates{true} @variant{c} @bounds{0, 1} @eps{1/2} do { { c := 0 } [1/2] { c := 1 } }",
        )
        .unwrap();
        let specs = local_specifications(&p, &e("1"), &e("1"), Mode::Total).unwrap();
        let body: Vec<&LocalSpec> = specs.iter().filter(|s| s.path.to_string() == "[1].body").collect();
        assert_eq!(body.len(), 3);
        assert_eq!(body.iter().filter(|s| s.kind == Mode::Partial).count(), 1);
        assert_eq!(body[2].pre, e("1/2 * [c = 1 && c = v0_1]"));
        assert_eq!(body[2].post, e("[c < v0_1]"));
        assert_eq!(body[2].bindings, vec![LogicalBinding::range("v0_1", 0, 1)]);
        let partial = local_specifications(&p, &e("1"), &e("1"), Mode::Partial).unwrap();
        assert_eq!(partial.iter().filter(|s| s.path.to_string() == "[1].body").count(), 1);
    }
}
