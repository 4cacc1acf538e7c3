//! Checks run over the random corpus, shared by the property tests and
//! the acceptance run.

#![allow(dead_code)]

use std::path::PathBuf;

use pexp_core::corpus::{random_expectation, Case, CorpusConfig};
use pexp_core::expectation::{entails, Expectation, LogicalBinding};
use pexp_core::lang::{qr, Arith, Bool, CmpOp, Inst, Mode, Prog, Q, State};
use pexp_core::semantics::{wlp_eval, wp_eval};
use pexp_core::vcgen::{
    discharge, vc_in, vc_suffix_in, vcg_in, vcg_prefix_in, vcg_suffix_in, wpre_in, wpre_suffix_in, VcSet,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const LOOP_TOL: f64 = 1e-8;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every fixture file name, sorted.
pub fn fixture_names() -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures directory")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".pexp"))
        .collect();
    v.sort();
    v
}

fn valid(vcs: &VcSet, c: &Case) -> bool {
    discharge(vcs, &c.space).is_valid()
}

fn at(e: &Expectation, s: &State) -> Q {
    e.evaluate(s).unwrap_or_else(|err| panic!("{e} at {s}: {err}"))
}

/// `None` when the VCs do not all hold; otherwise the violations of
/// `pre <= w(l)p(prog, post)` against the oracle.
pub fn soundness(c: &Case) -> Option<Vec<String>> {
    let vcs = vcg_in(c.mode, &c.pre, &c.prog, &c.post, &[]).expect("annotated");
    if !valid(&vcs, c) {
        return None;
    }
    let eval = if c.mode == Mode::Total { wp_eval } else { wlp_eval };
    let table = match eval(&c.prog, &c.post, &c.space, 1e-12, 1_000_000) {
        Ok(t) => t,
        Err(e) => return Some(vec![format!("oracle failed on {}: {e}", c.source)]),
    };
    let mut bad = Vec::new();
    if !table.converged {
        bad.push(format!("oracle did not converge on {}", c.source));
    }
    for (s, v) in table.iter() {
        let f = at(&c.pre, &s);
        let ok = match v.exact() {
            Some(w) => f <= *w,
            None => num_traits::ToPrimitive::to_f64(&f).unwrap() <= v.to_f64() + LOOP_TOL,
        };
        if !ok {
            bad.push(format!("{}: pre {f} > oracle {v} at {s} ({} mode)", c.source, c.mode));
        }
    }
    Some(bad)
}

fn pointwise(c: &Case, what: &str, a: &Expectation, b: &Expectation, rel: fn(&Q, &Q) -> bool) -> Vec<String> {
    c.space
        .enumerate()
        .filter_map(|s| {
            let (x, y) = (at(a, &s), at(b, &s));
            (!rel(&x, &y)).then(|| format!("{what} fails at {s} on {}: {x} vs {y}", c.source))
        })
        .collect()
}

/// Monotonicity and linearity of wpre, monotonicity of vc and VCG.
pub fn monotonicity_linearity(c: &Case, rng: &mut impl Rng) -> Vec<String> {
    let cfg = CorpusConfig { vars: c.space.domains().len(), mode: c.mode, ..CorpusConfig::default() };
    let (h, h2) = (random_expectation(rng, &cfg), random_expectation(rng, &cfg));
    let m = c.mode;
    let wp = |g: &Expectation| wpre_in(m, &c.prog, g).expect("annotated");
    let mut bad = Vec::new();

    let lo = Expectation::product(c.post.clone(), h.clone());
    let hi = c.post.clone();
    assert!(entails(&lo, &hi, &c.space, &[]).is_valid());
    bad.extend(pointwise(c, "wpre monotonicity", &wp(&lo), &wp(&hi), |x, y| x <= y));

    let p = [Q::from_integer(0.into()), qr(1, 3), qr(1, 2), Q::from_integer(1.into())]
        .choose(rng)
        .cloned()
        .unwrap();
    let one_minus = Q::from_integer(1.into()) - &p;
    let mix = Expectation::sum(vec![Expectation::scale(p.clone(), c.post.clone()), Expectation::scale(one_minus.clone(), h.clone())]);
    let split = Expectation::sum(vec![Expectation::scale(p, wp(&c.post)), Expectation::scale(one_minus, wp(&h))]);
    bad.extend(pointwise(c, "wpre linearity", &wp(&mix), &split, |x, y| x == y));

    let vc_lo = valid(&vc_in(m, &c.prog, &lo, &[]).unwrap(), c);
    if vc_lo && !valid(&vc_in(m, &c.prog, &hi, &[]).unwrap(), c) {
        bad.push(format!("vc monotonicity fails on {}", c.source));
    }
    let f2 = Expectation::product(c.pre.clone(), h2);
    let vcg_lo = valid(&vcg_in(m, &c.pre, &c.prog, &lo, &[]).unwrap(), c);
    if vcg_lo && !valid(&vcg_in(m, &f2, &c.prog, &hi, &[]).unwrap(), c) {
        bad.push(format!("VCG monotonicity fails on {}", c.source));
    }
    bad
}

#[derive(Debug, Default)]
pub struct Decomposition {
    pub checked: usize,
    pub violations: Vec<String>,
    /// Loops in last position where the displayed form (with an empty
    /// suffix) disagrees with the whole verdict.
    pub last_loop_refuted: usize,
}

fn v0_name(c: &Case) -> String {
    let mut name = "w0".to_string();
    while c.space.domain(&name).is_some() {
        name.push('_');
    }
    name
}

/// Whole-program verdict against the conjunction of the sub-verdicts
/// for a compound instruction at each position.
pub fn decomposition(c: &Case) -> Decomposition {
    let (m, p, f, g) = (c.mode, &c.prog, &c.pre, &c.post);
    let n = p.len();
    let whole = valid(&vcg_in(m, f, p, g, &[]).unwrap(), c);
    let mut out = Decomposition::default();
    for j in 1..=n {
        let parts: Vec<bool> = match &p.insts()[j - 1] {
            Inst::Cond(_, p1, p2) | Inst::PChoice(p1, _, p2) => {
                let post_j = wpre_suffix_in(m, j + 1, p, g).unwrap();
                vec![
                    valid(&vc_suffix_in(m, j + 1, p, g, &[]).unwrap(), c),
                    valid(&vc_in(m, p1, &post_j, &[]).unwrap(), c),
                    valid(&vc_in(m, p2, &post_j, &[]).unwrap(), c),
                    valid(&vcg_prefix_in(m, j - 1, f, p, &wpre_suffix_in(m, j, p, g).unwrap(), &[]).unwrap(), c),
                ]
            }
            Inst::While { guard, invariant, total, body } => {
                let inv = invariant.clone();
                let exit_pre = Expectation::guarded(Bool::not(guard.clone()), inv.clone());
                let suffix = vcg_suffix_in(m, j + 1, &exit_pre, p, g, &[]).unwrap();
                let mut v = vec![
                    valid(&vcg_in(Mode::Partial, &Expectation::guarded(guard.clone(), inv.clone()), body, &inv, &[]).unwrap(), c),
                ];
                let prefix_post = match (m, total) {
                    (Mode::Total, Some(t)) => Expectation::guarded(t.term.clone(), inv.clone()),
                    _ => inv.clone(),
                };
                v.push(valid(&vcg_prefix_in(m, j - 1, f, p, &prefix_post, &[]).unwrap(), c));
                if let (Mode::Total, Some(t)) = (m, total) {
                    let gt = Bool::and(guard.clone(), t.term.clone());
                    v.push(valid(&vcg_in(Mode::Total, &Expectation::iverson(gt.clone()), body, &Expectation::iverson(t.term.clone()), &[]).unwrap(), c));
                    let w0 = v0_name(c);
                    let snap = Bool::cmp(CmpOp::Eq, t.variant.clone(), Arith::var(&w0));
                    let dec_pre = Expectation::scale(t.eps.clone(), Expectation::iverson(Bool::and(gt.clone(), snap)));
                    let dec_post = Expectation::iverson(Bool::cmp(CmpOp::Lt, t.variant.clone(), Arith::var(&w0)));
                    let binding = LogicalBinding::range(w0, t.lower, t.upper);
                    v.push(valid(&vcg_in(Mode::Total, &dec_pre, body, &dec_post, &[binding]).unwrap(), c));
                    let bounds = Bool::and(
                        Bool::cmp(CmpOp::Le, Arith::int(t.lower), t.variant.clone()),
                        Bool::cmp(CmpOp::Le, t.variant.clone(), Arith::int(t.upper)),
                    );
                    v.push(entails(&Expectation::iverson(gt), &Expectation::iverson(bounds), &c.space, &[]).is_valid());
                }
                if j < n {
                    v.push(valid(&suffix, c));
                } else {
                    // the displayed suffix is empty here and loses the exit condition
                    let displayed = v.iter().all(|b| *b);
                    if displayed != whole {
                        out.last_loop_refuted += 1;
                    }
                    v.push(entails(&exit_pre, g, &c.space, &[]).is_valid());
                }
                v
            }
            _ => continue,
        };
        out.checked += 1;
        let conj = parts.iter().all(|b| *b);
        if conj != whole {
            out.violations.push(format!(
                "position {j} of {} ({} mode): whole {whole}, parts {parts:?}",
                c.source, c.mode
            ));
        }
    }
    out
}

/// Straight-line helper for tests: `p` with only instruction `j` changed.
pub fn without(p: &Prog, j: usize) -> Prog {
    pexp_core::slicing::remove(j, j, p).unwrap()
}
