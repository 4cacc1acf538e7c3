//! Lexer and recursive-descent parser for program files.
//!
//! ```text
//! domains { y in {-1, 0, 1}; r in {0..15}; }
//! spec partial pre{ 1/2 * [y*y <= 1/2] } post{ [x >= 0] }
//! program { x := 3/2 - y*y; { x := x - 1 } [1/2] { x := x - 2 } }
//! ```

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::expectation::Expectation;
use crate::lang::ast::{Arith, Bool, CmpOp, Inst, Prog, TotalAnnotation, Q};
use crate::lang::state::{DomainError, StateSpace, VarDomain};
use crate::lang::Mode;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("loop at {0} has no termination annotation (@terminates/@variant/@bounds/@eps), required in total mode")]
    MissingTotalAnnotation(String),
    #[error("{0}")]
    Domain(#[from] DomainError),
}

/// A parsed program file.
#[derive(Clone, Debug)]
pub struct Program {
    pub prog: Prog,
    pub space: StateSpace,
    pub pre: Expectation,
    pub post: Expectation,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Q),
    Sym(&'static str),
    At(String),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[(&str, &str)] = &[
    (":=", ":="),
    ("..", ".."),
    ("==", "="),
    ("!=", "!="),
    ("<=", "<="),
    (">=", ">="),
    ("&&", "&&"),
    ("||", "||"),
    ("≤", "<="),
    ("≥", ">="),
    ("≠", "!="),
    ("∧", "&&"),
    ("∨", "||"),
    ("¬", "!"),
    ("·", "*"),
    ("−", "-"),
    ("{", "{"),
    ("}", "}"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    (";", ";"),
    (",", ","),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("/", "/"),
    ("^", "^"),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("!", "!"),
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = src;
    'outer: while let Some(c) = rest.chars().next() {
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if rest.starts_with("//") {
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() {
            let mut end = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            let int_part = &rest[..end];
            let mut value = Q::from_integer(int_part.parse::<BigInt>().expect("digits"));
            let after = &rest[end..];
            if after.starts_with('.') && after[1..].starts_with(|ch: char| ch.is_ascii_digit()) {
                let frac_len = after[1..].find(|ch: char| !ch.is_ascii_digit()).unwrap_or(after.len() - 1);
                let frac = &after[1..1 + frac_len];
                let num: BigInt = frac.parse().expect("digits");
                let den = num_traits::pow(BigInt::from(10), frac_len);
                value += Q::new(num, den);
                end += 1 + frac_len;
            }
            out.push(Token { tok: Tok::Num(value), line: l0, col: c0 });
            col += end;
            rest = &rest[end..];
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '@' {
            let start = if c == '@' { 1 } else { 0 };
            let end = rest[start..]
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
                .map(|e| e + start)
                .unwrap_or(rest.len());
            let word = &rest[start..end];
            if c == '@' {
                if word.is_empty() {
                    return Err(syntax(l0, c0, "expected annotation name after `@`"));
                }
                out.push(Token { tok: Tok::At(word.to_string()), line: l0, col: c0 });
            } else {
                out.push(Token { tok: Tok::Ident(word.to_string()), line: l0, col: c0 });
            }
            col += rest[..end].chars().count();
            rest = &rest[end..];
            continue;
        }
        for (text, sym) in SYMBOLS {
            if rest.starts_with(text) {
                out.push(Token { tok: Tok::Sym(sym), line: l0, col: c0 });
                col += text.chars().count();
                rest = &rest[text.len()..];
                continue 'outer;
            }
        }
        return Err(syntax(l0, c0, &format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn syntax(line: usize, col: usize, msg: &str) -> ParseError {
    ParseError::Syntax { line, col, msg: msg.to_string() }
}

const KEYWORDS: &[&str] = &[
    "skip", "if", "else", "while", "do", "true", "false", "domains", "in", "spec", "pre", "post", "program",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl AsRef<str>) -> PResult<T> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(x) => format!("`{x}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::At(a) => format!("`@{a}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(syntax(t.line, t.col, &format!("{}, found {found}", msg.as_ref())))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(x) if !KEYWORDS.contains(&x.as_str()) => {
                self.bump();
                Ok(x)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err("expected end of input")
        }
    }

    // ---- arithmetic ----

    fn arith(&mut self) -> PResult<Arith> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.product()?;
                lhs = Arith::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("-") {
                let rhs = self.product()?;
                lhs = Arith::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> PResult<Arith> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym("*") {
                let rhs = self.unary()?;
                lhs = Arith::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("/") {
                let rhs = self.unary()?;
                lhs = match (lhs, rhs) {
                    // literal fractions such as 3/2 become constants
                    (Arith::Const(a), Arith::Const(b)) if !b.is_zero() => Arith::Const(a / b),
                    (a, b) => Arith::Div(Box::new(a), Box::new(b)),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<Arith> {
        if self.eat_sym("-") {
            return Ok(match self.unary()? {
                Arith::Const(c) => Arith::Const(-c),
                a => Arith::Neg(Box::new(a)),
            });
        }
        let base = self.primary()?;
        if self.eat_sym("^") {
            let e = self.unary()?;
            return Ok(Arith::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Arith> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Arith::Const(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let a = self.arith()?;
                self.expect_sym(")")?;
                Ok(a)
            }
            Tok::Sym("[") => {
                self.bump();
                let b = self.boolean()?;
                self.expect_sym("]")?;
                Ok(Arith::Iverson(Box::new(b)))
            }
            Tok::Ident(_) => Ok(Arith::Var(self.ident()?)),
            _ => self.err("expected expression"),
        }
    }

    fn constant(&mut self, what: &str) -> PResult<Q> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        match self.arith()? {
            Arith::Const(c) => Ok(c),
            _ => Err(syntax(line, col, &format!("{what} must be a numeric literal"))),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<i64> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        let c = self.constant(what)?;
        if !c.is_integer() {
            return Err(syntax(line, col, &format!("{what} must be an integer")));
        }
        c.to_integer()
            .to_i64()
            .ok_or_else(|| syntax(line, col, &format!("{what} is out of range")))
    }

    // ---- booleans ----

    fn boolean(&mut self) -> PResult<Bool> {
        let mut lhs = self.conj()?;
        while self.eat_sym("||") {
            let rhs = self.conj()?;
            lhs = Bool::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Bool> {
        let mut lhs = self.negation()?;
        while self.eat_sym("&&") {
            let rhs = self.negation()?;
            lhs = Bool::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> PResult<Bool> {
        if self.eat_sym("!") {
            return Ok(Bool::not(self.negation()?));
        }
        self.bool_atom()
    }

    fn bool_atom(&mut self) -> PResult<Bool> {
        if self.is_kw("true") {
            self.bump();
            return Ok(Bool::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Bool::False);
        }
        if self.is_sym("(") {
            // either a parenthesised formula or a comparison whose left side starts with `(`
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.boolean() {
                if self.eat_sym(")") && !self.at_cmp_op() && !self.at_arith_op() {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let a = self.arith()?;
        let op = self.cmp_op()?;
        let b = self.arith()?;
        Ok(Bool::Cmp(op, a, b))
    }

    fn at_cmp_op(&self) -> bool {
        matches!(self.peek(), Tok::Sym("=" | "!=" | "<" | "<=" | ">" | ">="))
    }

    fn at_arith_op(&self) -> bool {
        matches!(self.peek(), Tok::Sym("+" | "-" | "*" | "/" | "^"))
    }

    fn cmp_op(&mut self) -> PResult<CmpOp> {
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return self.err("expected comparison operator"),
        };
        self.bump();
        Ok(op)
    }

    fn expectation(&mut self) -> PResult<Expectation> {
        Ok(Expectation::from_arith(self.arith()?))
    }

    // ---- programs ----

    fn prog(&mut self) -> PResult<Prog> {
        let mut insts = vec![self.inst()?];
        while self.eat_sym(";") {
            if self.is_sym("}") || *self.peek() == Tok::Eof {
                break;
            }
            insts.push(self.inst()?);
        }
        Ok(Prog::new(insts))
    }

    fn block(&mut self) -> PResult<Prog> {
        self.expect_sym("{")?;
        let p = self.prog()?;
        self.expect_sym("}")?;
        Ok(p)
    }

    fn inst(&mut self) -> PResult<Inst> {
        if self.is_kw("skip") {
            self.bump();
            return Ok(Inst::Skip);
        }
        if self.is_kw("if") {
            return self.cond();
        }
        if self.is_kw("while") {
            return self.while_loop();
        }
        if self.is_sym("{") {
            let left = self.block()?;
            self.expect_sym("[")?;
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            let p = self.constant("probability")?;
            if p < Q::zero() || p > Q::from_integer(1.into()) {
                return Err(syntax(line, col, "probability must lie in [0, 1]"));
            }
            self.expect_sym("]")?;
            let right = self.block()?;
            return Ok(Inst::PChoice(left, p, right));
        }
        if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym(":=")) {
            let x = self.ident()?;
            self.bump();
            let e = self.arith()?;
            return Ok(Inst::Assign(x, e));
        }
        self.err("expected instruction")
    }

    fn cond(&mut self) -> PResult<Inst> {
        self.expect_kw("if")?;
        self.expect_sym("(")?;
        let g = self.boolean()?;
        self.expect_sym(")")?;
        let then = self.block()?;
        self.expect_kw("else")?;
        let els = if self.is_kw("if") { Prog::single(self.cond()?) } else { self.block()? };
        Ok(Inst::Cond(g, then, els))
    }

    fn while_loop(&mut self) -> PResult<Inst> {
        self.expect_kw("while")?;
        self.expect_sym("(")?;
        let guard = self.boolean()?;
        self.expect_sym(")")?;
        let mut invariant = None;
        let mut term = None;
        let mut variant = None;
        let mut bounds = None;
        let mut eps = None;
        while let Tok::At(name) = self.peek().clone() {
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            self.bump();
            self.expect_sym("{")?;
            let dup = match name.as_str() {
                "invariant" => invariant.replace(self.expectation()?).is_some(),
                "terminates" => term.replace(self.boolean()?).is_some(),
                "variant" => variant.replace(self.arith()?).is_some(),
                "bounds" => {
                    let l = self.integer("lower bound")?;
                    self.expect_sym(",")?;
                    let u = self.integer("upper bound")?;
                    bounds.replace((l, u)).is_some()
                }
                "eps" => eps.replace(self.constant("eps")?).is_some(),
                other => return Err(syntax(line, col, &format!("unknown annotation `@{other}`"))),
            };
            if dup {
                return Err(syntax(line, col, &format!("annotation `@{name}` given twice")));
            }
            self.expect_sym("}")?;
        }
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        let Some(invariant) = invariant else {
            return Err(syntax(line, col, "loop needs an `@invariant{...}` annotation"));
        };
        let total = match (term, variant, bounds, eps) {
            (None, None, None, None) => None,
            (Some(term), Some(variant), Some((lower, upper)), Some(eps)) => {
                let t = TotalAnnotation { term, variant, lower, upper, eps };
                if !t.well_formed() {
                    return Err(syntax(line, col, "need 0 < eps <= 1 and lower <= upper"));
                }
                Some(t)
            }
            _ => {
                return Err(syntax(
                    line,
                    col,
                    "termination annotation needs all of @terminates, @variant, @bounds and @eps",
                ))
            }
        };
        self.expect_kw("do")?;
        let body = self.block()?;
        Ok(Inst::While { guard, invariant, total, body })
    }

    fn domain(&mut self) -> PResult<VarDomain> {
        let var = self.ident()?;
        self.expect_kw("in")?;
        self.expect_sym("{")?;
        let mut values = Vec::new();
        loop {
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            let lo = self.constant("domain value")?;
            if self.eat_sym("..") {
                let hi = self.constant("range bound")?;
                if !lo.is_integer() || !hi.is_integer() {
                    return Err(syntax(line, col, "range bounds must be integers"));
                }
                let (mut k, hi) = (lo.to_integer(), hi.to_integer());
                while k <= hi {
                    values.push(Q::from_integer(k.clone()));
                    k += 1;
                }
            } else {
                values.push(lo);
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        Ok(VarDomain { var, values })
    }

    fn file(&mut self) -> PResult<Program> {
        self.expect_kw("domains")?;
        self.expect_sym("{")?;
        let mut space = StateSpace::default();
        while !self.is_sym("}") {
            space.push(self.domain()?)?;
            if !self.eat_sym(";") && !self.is_sym("}") {
                return self.err("expected `;`");
            }
        }
        self.expect_sym("}")?;
        self.expect_kw("spec")?;
        let mode = match self.peek() {
            Tok::Ident(m) if m == "partial" => Mode::Partial,
            Tok::Ident(m) if m == "total" => Mode::Total,
            _ => return self.err("expected `partial` or `total`"),
        };
        self.bump();
        self.expect_kw("pre")?;
        self.expect_sym("{")?;
        let pre = self.expectation()?;
        self.expect_sym("}")?;
        self.expect_kw("post")?;
        self.expect_sym("{")?;
        let post = self.expectation()?;
        self.expect_sym("}")?;
        self.expect_kw("program")?;
        let prog = self.block()?;
        self.expect_eof()?;
        Ok(Program { prog, space, pre, post, mode })
    }
}

/// Parses a complete program file and checks declarations and annotations.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let file = p.file()?;
    let mut used = Vec::new();
    file.prog.vars(&mut used);
    file.pre.vars(&mut used);
    file.post.vars(&mut used);
    for x in &used {
        if file.space.domain(x).is_none() {
            return Err(ParseError::Undeclared(x.clone()));
        }
    }
    if file.mode == Mode::Total {
        check_total_annotations(&file.prog)?;
    }
    Ok(file)
}

/// Every loop carries a termination annotation.
pub fn check_total_annotations(p: &Prog) -> Result<(), ParseError> {
    fn go(p: &Prog, path: &str) -> Result<(), ParseError> {
        for (j, i) in p.insts().iter().enumerate() {
            let here = format!("{path}[{}]", j + 1);
            match i {
                Inst::Cond(_, a, b) => {
                    go(a, &format!("{here}.then"))?;
                    go(b, &format!("{here}.else"))?;
                }
                Inst::PChoice(a, _, b) => {
                    go(a, &format!("{here}.left"))?;
                    go(b, &format!("{here}.right"))?;
                }
                Inst::While { total, body, .. } => {
                    if total.is_none() {
                        return Err(ParseError::MissingTotalAnnotation(here));
                    }
                    go(body, &format!("{here}.body"))?;
                }
                _ => {}
            }
        }
        Ok(())
    }
    go(p, "")
}

/// Parses a bare instruction sequence (no header).
pub fn parse_prog(src: &str) -> Result<Prog, ParseError> {
    let mut p = Parser::new(src)?;
    let prog = p.prog()?;
    p.expect_eof()?;
    Ok(prog)
}

pub fn parse_expectation(src: &str) -> Result<Expectation, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expectation()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_arith(src: &str) -> Result<Arith, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.arith()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_bool(src: &str) -> Result<Bool, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.boolean()?;
    p.expect_eof()?;
    Ok(e)
}
