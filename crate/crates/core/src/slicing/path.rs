//! Addresses of subprograms and structural rewriting.

use std::fmt;

use crate::lang::ast::{Inst, Prog};

use super::SliceError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// The j-th instruction (1-based) of the current sequence.
    Index(usize),
    Then,
    Else,
    Left,
    Right,
    Body,
    /// Instructions j..=k of the current sequence.
    Span(usize, usize),
}

/// Path from the root program to a subprogram. The empty path is the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubprogramPath(pub Vec<Step>);

impl SubprogramPath {
    pub fn root() -> SubprogramPath {
        SubprogramPath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.0
    }

    pub fn child(&self, s: Step) -> SubprogramPath {
        let mut v = self.0.clone();
        v.push(s);
        SubprogramPath(v)
    }

    /// The subprogram at this path, as a program.
    pub fn resolve(&self, p: &Prog) -> Result<Prog, SliceError> {
        let mut cur = Cursor::Seq(p.insts());
        for s in &self.0 {
            cur = match (cur, s) {
                (Cursor::Seq(is), Step::Index(j)) => match is.get(j.wrapping_sub(1)) {
                    Some(i) => Cursor::Inst(i),
                    None => return Err(self.bad()),
                },
                (Cursor::Seq(is), Step::Span(j, k)) if 1 <= *j && j <= k && *k <= is.len() => {
                    Cursor::Seq(&is[j - 1..*k])
                }
                (Cursor::Inst(Inst::Cond(_, a, _)), Step::Then) => Cursor::Seq(a.insts()),
                (Cursor::Inst(Inst::Cond(_, _, b)), Step::Else) => Cursor::Seq(b.insts()),
                (Cursor::Inst(Inst::PChoice(a, _, _)), Step::Left) => Cursor::Seq(a.insts()),
                (Cursor::Inst(Inst::PChoice(_, _, b)), Step::Right) => Cursor::Seq(b.insts()),
                (Cursor::Inst(Inst::While { body, .. }), Step::Body) => Cursor::Seq(body.insts()),
                _ => return Err(self.bad()),
            };
        }
        Ok(match cur {
            Cursor::Seq(is) => Prog::new(is.to_vec()),
            Cursor::Inst(i) => Prog::single(i.clone()),
        })
    }

    fn bad(&self) -> SliceError {
        SliceError::Path(self.to_string())
    }
}

#[derive(Clone, Copy)]
enum Cursor<'a> {
    Seq(&'a [Inst]),
    Inst(&'a Inst),
}

impl fmt::Display for SubprogramPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for s in &self.0 {
            match s {
                Step::Index(j) => write!(f, "[{j}]")?,
                Step::Span(j, k) if j == k => write!(f, "[{j}]")?,
                Step::Span(j, k) => write!(f, "[{j}..{k}]")?,
                Step::Then => f.write_str(".then")?,
                Step::Else => f.write_str(".else")?,
                Step::Left => f.write_str(".left")?,
                Step::Right => f.write_str(".right")?,
                Step::Body => f.write_str(".body")?,
            }
        }
        Ok(())
    }
}

/// `remove(j, k, p)`: drops instructions j..=k, leaving `skip` when nothing remains.
pub fn remove(j: usize, k: usize, p: &Prog) -> Result<Prog, SliceError> {
    let n = p.len();
    if j < 1 || j > k || k > n {
        return Err(SliceError::Span { j, k, n });
    }
    if j == 1 && k == n {
        return Ok(Prog::skip());
    }
    let is = p.insts();
    Ok(Prog::new(is[..j - 1].iter().chain(&is[k..]).cloned().collect()))
}

/// `p[c'/c'']` where `c'` is the subprogram at `path`. An instruction or
/// span is replaced by the instructions of `replacement`; a branch or body
/// is replaced wholesale.
pub fn replace_subprogram(p: &Prog, path: &SubprogramPath, replacement: &Prog) -> Result<Prog, SliceError> {
    replace_in(p, path.steps(), replacement).ok_or_else(|| SliceError::Path(path.to_string()))
}

fn replace_in(p: &Prog, steps: &[Step], r: &Prog) -> Option<Prog> {
    let Some((first, rest)) = steps.split_first() else {
        return Some(r.clone());
    };
    let is = p.insts();
    let splice = |j: usize, k: usize, mid: &[Inst]| -> Prog {
        Prog::new(is[..j - 1].iter().chain(mid).chain(&is[k..]).cloned().collect())
    };
    match *first {
        Step::Span(j, k) if rest.is_empty() && 1 <= j && j <= k && k <= is.len() => Some(splice(j, k, r.insts())),
        Step::Index(j) if (1..=is.len()).contains(&j) => {
            if rest.is_empty() {
                return Some(splice(j, j, r.insts()));
            }
            let inst = replace_inst(&is[j - 1], rest, r)?;
            Some(splice(j, j, &[inst]))
        }
        _ => None,
    }
}

fn replace_inst(i: &Inst, steps: &[Step], r: &Prog) -> Option<Inst> {
    let (first, rest) = steps.split_first()?;
    Some(match (i, first) {
        (Inst::Cond(g, a, b), Step::Then) => Inst::Cond(g.clone(), replace_in(a, rest, r)?, b.clone()),
        (Inst::Cond(g, a, b), Step::Else) => Inst::Cond(g.clone(), a.clone(), replace_in(b, rest, r)?),
        (Inst::PChoice(a, p, b), Step::Left) => Inst::PChoice(replace_in(a, rest, r)?, p.clone(), b.clone()),
        (Inst::PChoice(a, p, b), Step::Right) => Inst::PChoice(a.clone(), p.clone(), replace_in(b, rest, r)?),
        (Inst::While { guard, invariant, total, body }, Step::Body) => Inst::While {
            guard: guard.clone(),
            invariant: invariant.clone(),
            total: total.clone(),
            body: replace_in(body, rest, r)?,
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_prog;
    use crate::lang::printer::pretty_print;

    #[test]
    fn remove_cases() {
        let p = parse_prog("x := 1; y := 2; z := 3").unwrap();
        assert_eq!(remove(1, 3, &p).unwrap(), Prog::skip());
        assert_eq!(pretty_print(&remove(2, 2, &p).unwrap()), "x := 1;\nz := 3");
        assert!(remove(2, 1, &p).is_err());
        assert!(remove(0, 1, &p).is_err());
        assert!(remove(1, 4, &p).is_err());
    }

    #[test]
    fn paths_resolve_and_print() {
        let p = parse_prog("x := 0; { y := 1 } [1/2] { if (x = 0) { z := 1; z := 2 } else { skip } }").unwrap();
        let path = SubprogramPath(vec![Step::Index(2), Step::Right, Step::Index(1), Step::Then, Step::Span(1, 2)]);
        assert_eq!(path.to_string(), "[2].right[1].then[1..2]");
        assert_eq!(pretty_print(&path.resolve(&p).unwrap()), "z := 1;\nz := 2");
        assert!(SubprogramPath(vec![Step::Index(1), Step::Then]).resolve(&p).is_err());
        assert_eq!(SubprogramPath::root().resolve(&p).unwrap(), p);
    }

    #[test]
    fn replacing_with_itself_is_identity() {
        let p = parse_prog("x := 0; { y := 1 } [1/2] { y := 2 }").unwrap();
        let path = SubprogramPath(vec![Step::Index(2), Step::Left]);
        let same = path.resolve(&p).unwrap();
        assert_eq!(replace_subprogram(&p, &path, &same).unwrap(), p);
        let r = replace_subprogram(&p, &path, &Prog::skip()).unwrap();
        assert_eq!(pretty_print(&r), "x := 0;\n{ skip } [1/2] { y := 2 }");
    }
}
