//! Linear temporal logic over finite alphabets of letters: syntax, parsing,
//! semantics on ultimately periodic words and translation to Büchi automata.

mod alphabet;
mod eval;
mod formula;
mod nba;
mod parser;

pub use alphabet::{Alphabet, Letter, LetterSet, Sort, Word};
pub use eval::{eval_lasso, LtlEvaluator};
pub use formula::{Expr, Formula};
pub use nba::{ltl_to_nba, ltl_to_nba_with_budget, simplify, Nba};
pub use parser::parse_ltl;
