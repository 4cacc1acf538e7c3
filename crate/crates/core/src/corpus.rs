//! Random annotated programs over tiny domains, for property testing.
//!
//! Programs are generated as source text and parsed, so every case is also
//! a parser round trip. Assignments map `{0, 1, 2}` onto itself, which keeps
//! every execution inside the declared domains.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::expectation::Expectation;
use crate::lang::parser::{parse_expectation, parse_prog};
use crate::lang::state::{StateSpace, VarDomain};
use crate::lang::{q, Mode, Prog};
use crate::vcgen::wpre_in;

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    /// Nesting depth of compound instructions.
    pub max_depth: usize,
    /// 1 or 2 variables, each ranging over `{0, 1, 2}`.
    pub vars: usize,
    pub max_len: usize,
    pub loops: bool,
    pub mode: Mode,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { max_depth: 3, vars: 2, max_len: 3, loops: true, mode: Mode::Partial }
    }
}

#[derive(Clone, Debug)]
pub struct Case {
    pub source: String,
    pub prog: Prog,
    pub space: StateSpace,
    pub pre: Expectation,
    pub post: Expectation,
    pub mode: Mode,
}

const NAMES: [&str; 2] = ["x", "y"];
const PROBS: [&str; 6] = ["0", "1/4", "1/3", "1/2", "2/3", "1"];

struct Gen<'a, R> {
    rng: &'a mut R,
    cfg: &'a CorpusConfig,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> &'static str {
        NAMES[self.rng.gen_range(0..self.cfg.vars)]
    }

    fn atom(&mut self) -> String {
        let x = self.var();
        let c = self.rng.gen_range(0..3);
        match self.rng.gen_range(0..6) {
            0 => format!("{x} = {c}"),
            1 => format!("{x} <= {c}"),
            2 => format!("{x} != {c}"),
            3 => format!("{x} != {}", self.var()),
            4 => format!("{x} + {} >= {}", self.var(), c + 1),
            _ => format!("{x} > {c}"),
        }
    }

    fn guard(&mut self) -> String {
        match self.rng.gen_range(0..5) {
            0 => format!("{} && {}", self.atom(), self.atom()),
            1 => format!("!({})", self.atom()),
            _ => self.atom(),
        }
    }

    /// Sum of guarded terms whose coefficients add up to at most 1.
    pub fn expectation(&mut self) -> String {
        match self.rng.gen_range(0..8) {
            0 => return "0".into(),
            1 => return "1".into(),
            _ => {}
        }
        let t = self.rng.gen_range(1..=2);
        let terms: Vec<String> = (0..t)
            .map(|_| {
                let k = self.rng.gen_range(1..=3);
                format!("{k}/{} * [{}]", 3 * t, self.guard())
            })
            .collect();
        terms.join(" + ")
    }

    fn assign(&mut self) -> String {
        let x = self.var();
        let rhs = match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..3).to_string(),
            1 => self.var().to_string(),
            2 => format!("2 - {}", self.var()),
            _ => {
                let y = self.var();
                format!("{y} + 1 - 3*[{y} >= 2]")
            }
        };
        format!("{x} := {rhs}")
    }

    fn annotations(&mut self, guard: &str) -> String {
        let mut s = format!(" @invariant{{{}}}", self.expectation());
        if self.cfg.mode == Mode::Total {
            let term = ["true".to_string(), self.atom(), guard.to_string()].choose(self.rng).cloned().unwrap_or_default();
            let v = self.var();
            let variant = [v.to_string(), format!("2 - {v}"), format!("[{guard}]")].choose(self.rng).cloned().unwrap_or_default();
            let eps = ["1/3", "1/2", "1"].choose(self.rng).copied().unwrap_or("1/2");
            s.push_str(&format!(" @terminates{{{term}}} @variant{{{variant}}} @bounds{{0, 2}} @eps{{{eps}}}"));
        }
        s
    }

    fn inst(&mut self, depth: usize) -> String {
        let pick = if depth == 0 { self.rng.gen_range(0..10) } else { self.rng.gen_range(0..20) };
        match pick {
            0 => "skip".into(),
            1..=9 => self.assign(),
            10..=13 => {
                format!("if ({}) {{ {} }} else {{ {} }}", self.guard(), self.seq(depth - 1), self.seq(depth - 1))
            }
            14..=17 => {
                let p = PROBS.choose(self.rng).copied().unwrap_or("1/2");
                format!("{{ {} }} [{p}] {{ {} }}", self.seq(depth - 1), self.seq(depth - 1))
            }
            _ if self.cfg.loops => {
                let g = self.guard();
                let ann = self.annotations(&g);
                format!("while ({g}){ann} do {{ {} }}", self.seq(depth - 1))
            }
            _ => self.assign(),
        }
    }

    fn seq(&mut self, depth: usize) -> String {
        let n = self.rng.gen_range(1..=self.cfg.max_len);
        (0..n).map(|_| self.inst(depth)).collect::<Vec<_>>().join("; ")
    }
}

/// The space `{0, 1, 2}^vars` over the first `vars` of `x`, `y`.
pub fn corpus_space(vars: usize) -> StateSpace {
    StateSpace::new(
        NAMES[..vars].iter().map(|x| VarDomain { var: x.to_string(), values: (0..3).map(q).collect() }).collect(),
    )
    .expect("distinct names")
}

/// A random expectation over the corpus variables.
pub fn random_expectation(rng: &mut impl Rng, cfg: &CorpusConfig) -> Expectation {
    let src = Gen { rng, cfg }.expectation();
    parse_expectation(&src).expect("generated expectations parse")
}

/// A random annotated program with a post-expectation and a pre-expectation
/// that is either random or a fraction of the computed pre-expectation.
pub fn random_case(rng: &mut impl Rng, cfg: &CorpusConfig) -> Case {
    let mut g = Gen { rng, cfg };
    let source = g.seq(cfg.max_depth);
    let post_src = g.expectation();
    let prog = parse_prog(&source).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{source}"));
    let post = parse_expectation(&post_src).expect("generated expectations parse");
    let pre = if rng.gen_bool(0.6) {
        let w = wpre_in(cfg.mode, &prog, &post).expect("generated loops carry the annotations of their mode");
        let k = [q(1), crate::lang::qr(1, 2), crate::lang::qr(2, 3)].choose(rng).cloned().unwrap_or_else(|| q(1));
        Expectation::scale(k, w)
    } else {
        random_expectation(rng, cfg)
    };
    Case { source, prog, space: corpus_space(cfg.vars), pre, post, mode: cfg.mode }
}
