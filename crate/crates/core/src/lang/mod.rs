//! Syntax, states and the is-portion-of relation.

pub mod ast;
pub mod parser;
pub mod portion;
pub mod printer;
pub mod state;

pub use ast::{q, qr, Arith, Bool, CmpOp, EvalError, Inst, Prog, TotalAnnotation, Q};
pub use parser::{parse_arith, parse_bool, parse_expectation, parse_prog, parse_program, ParseError, Program};
pub use portion::is_portion_of;
pub use printer::{arith_to_string, bool_to_string, expectation_to_string, inst_to_string, pretty_print};
pub use state::{Env, State, StateSpace, VarDomain};

/// Correctness notion a specification is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Partial,
    Total,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Partial => "partial",
            Mode::Total => "total",
        })
    }
}
