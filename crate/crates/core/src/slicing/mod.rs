//! Specification-based slicing: removable top-level spans, local
//! specifications of nested subprograms, a greedy slicer and slice
//! verification.

mod local;
mod path;

use serde_json::{json, Value};

use crate::expectation::{entails, Expectation};
use crate::lang::ast::{Inst, Prog};
use crate::lang::printer::inst_to_string;
use crate::lang::state::StateSpace;
use crate::lang::{is_portion_of, Mode};
use crate::vcgen::{discharge, vcg_in, wpre_suffixes_in, VcError};

pub use local::{local_specifications, LocalSpec, Reason};
pub(crate) use local::{analyze, Checker, Region};
pub use path::{remove, replace_subprogram, Step, SubprogramPath};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("no subprogram at {0}")]
    Path(String),
    #[error("span {j}..{k} is not within 1..{n}")]
    Span { j: usize, k: usize, n: usize },
    #[error(transparent)]
    Vc(#[from] VcError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SliceOptions {
    /// Permit replacing a loop body by `skip` when only partial
    /// correctness constrains it.
    pub allow_trivial_loop_slices: bool,
}

/// One removed span and the entailments that justify it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    /// Region path followed by the removed span.
    pub path: SubprogramPath,
    pub removed: Vec<String>,
    pub justification: String,
}

impl Removal {
    pub fn to_json(&self) -> Value {
        json!({
            "path": self.path.to_string(),
            "removed": self.removed,
            "justification": self.justification,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SliceResult {
    pub program: Prog,
    pub removals: Vec<Removal>,
    /// Passes run until nothing more was removable (the last pass removes nothing).
    pub passes: usize,
}

pub(crate) fn justify(region: &Region, j: usize, k: usize, reasons: &[Reason]) -> String {
    reasons
        .iter()
        .zip(&region.specs)
        .map(|(r, s)| match r {
            Reason::Labels => format!("{}: wpre^{j} => wpre^{}", s.kind, k + 1),
            Reason::Pre => format!("{}: pre => wpre^{}", s.kind, k + 1),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Structural limits on removing instructions j..=k of a region.
pub(crate) fn span_allowed(region: &Region, j: usize, k: usize, opts: &SliceOptions) -> bool {
    let n = region.len();
    // removing a lone skip changes nothing
    if n == 1 && region.prog.is_skip() {
        return false;
    }
    !(j == 1 && k == n && region.trivially_removable() && !opts.allow_trivial_loop_slices)
}

/// Spans `(j, k)` with `wpre^j ⇛ wpre^{k+1}` (for `mode`) over `space`.
pub fn top_level_candidates(p: &Prog, g: &Expectation, mode: Mode, space: &StateSpace) -> Result<Vec<(usize, usize)>, SliceError> {
    let labels = wpre_suffixes_in(mode, p, g)?;
    let n = p.len();
    let mut out = Vec::new();
    for j in 1..=n {
        for k in j..=n {
            let (a, b) = (&labels[j - 1], &labels[k]);
            if a == b || entails(a, b, space, &[]).is_valid() {
                out.push((j, k));
            }
        }
    }
    Ok(out)
}

struct Greedy<'a> {
    regions: Vec<Region>,
    checker: Checker<'a>,
    opts: SliceOptions,
    removals: Vec<Removal>,
}

impl Greedy<'_> {
    fn region(&mut self, r: usize) -> Prog {
        let n = self.regions[r].len();
        let mut kept: Vec<Inst> = Vec::new();
        let mut j = 1;
        while j <= n {
            let mut chosen = None;
            for k in (j..=n).rev() {
                let reg = &self.regions[r];
                if !span_allowed(reg, j, k, &self.opts) {
                    continue;
                }
                // never empty a gated loop body piecewise
                if kept.is_empty() && k == n && reg.trivially_removable() && !self.opts.allow_trivial_loop_slices {
                    continue;
                }
                if let Some(reasons) = self.checker.span(&self.regions, r, j, k) {
                    chosen = Some((k, reasons));
                    break;
                }
            }
            if let Some((k, reasons)) = chosen {
                let reg = &self.regions[r];
                self.removals.push(Removal {
                    path: reg.path.child(Step::Span(j, k)),
                    removed: reg.prog.insts()[j - 1..k].iter().map(inst_to_string).collect(),
                    justification: justify(reg, j, k, &reasons),
                });
                j = k + 1;
                continue;
            }
            let inst = self.regions[r].prog.insts()[j - 1].clone();
            let kids: Vec<usize> = self.regions[r].children_of(j).to_vec();
            kept.push(match inst {
                Inst::Cond(g, _, _) => Inst::Cond(g, self.region(kids[0]), self.region(kids[1])),
                Inst::PChoice(_, p, _) => Inst::PChoice(self.region(kids[0]), p, self.region(kids[1])),
                Inst::While { guard, invariant, total, .. } => {
                    Inst::While { guard, invariant, total, body: self.region(kids[0]) }
                }
                atomic => atomic,
            });
            j += 1;
        }
        if kept.is_empty() {
            Prog::skip()
        } else {
            Prog::new(kept)
        }
    }
}

/// One greedy pass: leftmost-longest removable span first in each
/// sequence, then nested subprograms of the instructions kept, all
/// judged against the local specifications of `p`.
pub fn slice_once(
    p: &Prog,
    f: &Expectation,
    g: &Expectation,
    mode: Mode,
    space: &StateSpace,
    opts: &SliceOptions,
) -> Result<(Prog, Vec<Removal>), SliceError> {
    let regions = analyze(p, f, g, mode)?;
    let mut gr = Greedy { regions, checker: Checker::new(space), opts: *opts, removals: Vec::new() };
    let out = gr.region(0);
    Ok((out, gr.removals))
}

/// Greedy passes until none removes anything. Removal paths of later
/// passes refer to the program produced by the pass before.
pub fn slice_fixpoint(
    p: &Prog,
    f: &Expectation,
    g: &Expectation,
    mode: Mode,
    space: &StateSpace,
    opts: &SliceOptions,
) -> Result<SliceResult, SliceError> {
    let mut cur = p.clone();
    let mut removals = Vec::new();
    let mut passes = 0;
    loop {
        passes += 1;
        let (next, rs) = slice_once(&cur, f, g, mode, space, opts)?;
        if rs.is_empty() {
            return Ok(SliceResult { program: cur, removals, passes });
        }
        removals.extend(rs);
        cur = next;
    }
}

/// Whether every VC of `vcg[mode](f)(p)(g)` holds over `space`.
pub fn satisfies(f: &Expectation, p: &Prog, g: &Expectation, mode: Mode, space: &StateSpace) -> Result<bool, SliceError> {
    Ok(discharge(&vcg_in(mode, f, p, g, &[])?, space).is_valid())
}

/// `candidate` is a portion of `original` and keeps the verdict of its VCs.
pub fn verify_slice(
    candidate: &Prog,
    f: &Expectation,
    g: &Expectation,
    original: &Prog,
    mode: Mode,
    space: &StateSpace,
) -> Result<bool, SliceError> {
    if !is_portion_of(candidate, original) {
        return Ok(false);
    }
    Ok(!satisfies(f, original, g, mode, space)? || satisfies(f, candidate, g, mode, space)?)
}
