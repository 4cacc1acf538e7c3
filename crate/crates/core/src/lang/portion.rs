//! The is-portion-of relation between programs.

use crate::lang::ast::{Inst, Prog};

/// Decides `candidate ≼ original`.
///
/// A derivation always amounts to keeping a nonempty subsequence of the
/// instructions and shrinking each kept instruction in place (possibly to
/// `skip`), or to replacing the whole sequence by `skip`. The check embeds
/// the candidate sequence into the original with a small DP.
pub fn is_portion_of(candidate: &Prog, original: &Prog) -> bool {
    if candidate.is_skip() {
        return true;
    }
    let c = candidate.insts();
    let o = original.insts();
    if c.len() > o.len() {
        return false;
    }
    // fits[i][j]: c[i..] embeds into o[j..]
    let mut fits = vec![vec![false; o.len() + 1]; c.len() + 1];
    for row in fits.iter_mut().skip(c.len()) {
        row.fill(true);
    }
    for i in (0..c.len()).rev() {
        for j in (0..o.len()).rev() {
            fits[i][j] = fits[i][j + 1] || (fits[i + 1][j + 1] && inst_portion(&c[i], &o[j]));
        }
    }
    fits[0][0]
}

fn inst_portion(c: &Inst, o: &Inst) -> bool {
    match (c, o) {
        (Inst::Skip, _) => true,
        (Inst::Assign(x, e), Inst::Assign(y, f)) => x == y && e == f,
        (Inst::Cond(g, a, b), Inst::Cond(h, a2, b2)) => g == h && is_portion_of(a, a2) && is_portion_of(b, b2),
        (Inst::PChoice(a, p, b), Inst::PChoice(a2, p2, b2)) => p == p2 && is_portion_of(a, a2) && is_portion_of(b, b2),
        (
            Inst::While { guard, invariant, total, body },
            Inst::While { guard: g2, invariant: i2, total: t2, body: b2 },
        ) => guard == g2 && invariant == i2 && total == t2 && is_portion_of(body, b2),
        _ => false,
    }
}
