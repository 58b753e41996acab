//! Deterministic parity automata, parity games and controller synthesis.

mod determinize;
mod dpw;
mod game;
mod qnp_dpw;
mod synthesis;
mod zielonka;

pub use determinize::{nba_to_dpw, nba_to_dpw_with_budget};
pub use dpw::{Dpw, DpwFile};
pub use game::{build_parity_game, build_parity_game_with_budget, NodeInfo, ParityGame, Player};
pub use qnp_dpw::{qnp_dpw_direct, qnp_dpw_for_problem, QnpLetters};
pub use synthesis::{
    goal_formula, synthesize, synthesize_with_budget, synthesize_with_dpw, Counterstrategy, SynthesisResult,
    SynthesisStats,
};
pub use zielonka::{solve_parity, verify_strategy, Solution};

/// Builds the pipeline automaton of an LTL formula.
pub fn ltl_to_dpw(f: &crate::ltl::Formula, budget: usize) -> crate::error::Result<Dpw> {
    let nba = crate::ltl::ltl_to_nba_with_budget(f, budget)?;
    Ok(nba_to_dpw_with_budget(&nba, budget)?.reduce())
}
