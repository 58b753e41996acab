use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::dpw::Dpw;
use super::game::{build_parity_game_with_budget, NodeInfo, ParityGame, Player};
use super::zielonka::{solve_parity, Solution};
use super::{nba_to_dpw_with_budget, verify_strategy};
use crate::constraints::TrajectoryConstraint;
use crate::error::{Error, Result};
use crate::ltl::{ltl_to_nba_with_budget, Expr, Formula};
use crate::model::verify::DEFAULT_BUDGET;
use crate::model::{FiniteTrajectory, Lasso, Level, Policy, Pondp, StateId, Step, Trajectory};

/// Sizes of the intermediate objects of a synthesis run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SynthesisStats {
    pub formula: String,
    pub nba_states: usize,
    pub dpw_states: usize,
    pub priorities: usize,
    pub game_nodes: usize,
}

#[derive(Clone, Debug)]
pub enum SynthesisResult {
    /// A policy whose memory states are automaton states.
    Realizable {
        policy: Policy,
        stats: SynthesisStats,
    },
    Unrealizable(Counterstrategy),
}

impl SynthesisResult {
    pub fn is_realizable(&self) -> bool {
        matches!(self, SynthesisResult::Realizable { .. })
    }

    pub fn policy(&self) -> Option<&Policy> {
        match self {
            SynthesisResult::Realizable { policy, .. } => Some(policy),
            SynthesisResult::Unrealizable(_) => None,
        }
    }

    pub fn stats(&self) -> &SynthesisStats {
        match self {
            SynthesisResult::Realizable { stats, .. } => stats,
            SynthesisResult::Unrealizable(c) => &c.stats,
        }
    }
}

/// The environment's winning strategy in the synthesis game.
#[derive(Clone, Debug)]
pub struct Counterstrategy {
    pub stats: SynthesisStats,
    pub game: ParityGame,
    pub solution: Solution,
    pub dpw: Dpw,
}

impl Counterstrategy {
    /// Initial states from which no policy can win.
    pub fn losing_initial_states(&self) -> Vec<StateId> {
        self.game
            .initial
            .iter()
            .filter(|&&v| self.solution.winner[v] == Player::Odd)
            .filter_map(|&v| match self.game.info[v] {
                NodeInfo::Controller { state, .. } => Some(state),
                _ => None,
            })
            .collect()
    }

    /// Plays `mu` against the environment strategy and returns the
    /// resulting trajectory: it satisfies the constraint yet never reaches
    /// the goal, or stops outside it.
    pub fn refute(&self, p: &Pondp, mu: &Policy) -> Result<Trajectory> {
        let g = &self.game;
        let start = g
            .initial
            .iter()
            .copied()
            .find(|&v| self.solution.winner[v] == Player::Odd)
            .ok_or_else(|| Error::InvalidProblem("the controller wins every initial state".into()))?;
        let mut v = start;
        let mut m = mu.initial();
        let mut steps: Vec<Step> = Vec::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        loop {
            let NodeInfo::Controller { state, .. } = g.info[v] else {
                return Err(Error::InvalidProblem("play left the controller nodes".into()));
            };
            if let Some(&j) = seen.get(&(v, m)) {
                let cycle = steps.split_off(j);
                return Ok(Trajectory::Lasso(Lasso::new(Level::State, steps, cycle)));
            }
            seen.insert((v, m), steps.len());
            let obs = p.obs_name(p.obs(state));
            let Some(name) = mu.output(m, obs) else {
                return Ok(Trajectory::Finite(FiniteTrajectory::new(Level::State, steps, state)));
            };
            let a = p.action_id(name).filter(|&a| p.is_available(state, a)).ok_or_else(|| {
                Error::InvalidPolicy(format!("`{name}` is not available at `{}`", p.state_name(state)))
            })?;
            let env = g.succ[v]
                .iter()
                .copied()
                .find(|&w| matches!(g.info[w], NodeInfo::Environment { action, .. } if action == a))
                .expect("every available action has an environment node");
            let next = self.solution.strategy[env].expect("environment strategy is total on its region");
            steps.push(Step::new(state, a));
            m = mu.next_memory(m, obs);
            if !matches!(g.info[next], NodeInfo::Controller { .. }) {
                let last = state;
                steps.pop();
                return Ok(Trajectory::Finite(FiniteTrajectory::new(Level::State, steps, last)));
            }
            v = next;
        }
    }
}

/// `psi -> F goal` over the state-level alphabet of `p`.
pub fn goal_formula(p: &Pondp, psi: &TrajectoryConstraint) -> Result<Formula> {
    let f = psi.to_formula(p)?;
    let goal = Expr::letters(p.goal_states().filter_map(|s| f.alphabet.index(p.state_name(s))));
    let expr = match f.expr {
        Expr::True => goal.eventually(),
        e => e.implies(goal.eventually()),
    };
    Ok(Formula::new(f.alphabet, expr))
}

/// Synthesizes a policy for the fully observable problem `p` that reaches
/// the goal on every trajectory satisfying `psi`.
pub fn synthesize(p: &Pondp, psi: &TrajectoryConstraint) -> Result<SynthesisResult> {
    synthesize_with_budget(p, psi, DEFAULT_BUDGET)
}

pub fn synthesize_with_budget(p: &Pondp, psi: &TrajectoryConstraint, budget: usize) -> Result<SynthesisResult> {
    let phi = goal_formula(p, psi)?;
    let nba = ltl_to_nba_with_budget(&phi, budget)?;
    let dpw = nba_to_dpw_with_budget(&nba, budget)?.reduce();
    let stats = SynthesisStats {
        formula: phi.to_string(),
        nba_states: nba.num_states(),
        ..Default::default()
    };
    solve_with(p, dpw, stats, budget)
}

/// Synthesis against a ready-made automaton for the winning condition.
pub fn synthesize_with_dpw(p: &Pondp, dpw: Dpw) -> Result<SynthesisResult> {
    solve_with(p, dpw, SynthesisStats::default(), DEFAULT_BUDGET)
}

fn solve_with(p: &Pondp, dpw: Dpw, mut stats: SynthesisStats, budget: usize) -> Result<SynthesisResult> {
    let game = build_parity_game_with_budget(p, &dpw, budget)?;
    let solution = solve_parity(&game);
    debug_assert!(verify_strategy(&game, &solution, Player::Even));
    debug_assert!(verify_strategy(&game, &solution, Player::Odd));
    stats.dpw_states = dpw.num_states();
    stats.priorities = dpw.priorities().len();
    stats.game_nodes = game.len();
    if game.initial.iter().all(|&v| solution.winner[v] == Player::Even) {
        let policy = extract_policy(p, &dpw, &game, &solution);
        Ok(SynthesisResult::Realizable { policy, stats })
    } else {
        Ok(SynthesisResult::Unrealizable(Counterstrategy {
            stats,
            game,
            solution,
            dpw,
        }))
    }
}

/// Follows the controller's strategy from the initial nodes. The memory
/// state is the automaton state before reading the observation.
fn extract_policy(p: &Pondp, dpw: &Dpw, g: &ParityGame, sol: &Solution) -> Policy {
    let mut mem: HashMap<u32, usize> = HashMap::new();
    let mut names: Vec<u32> = Vec::new();
    let mut intern = |q: u32, names: &mut Vec<u32>| -> usize {
        *mem.entry(q).or_insert_with(|| {
            names.push(q);
            names.len() - 1
        })
    };
    let mut entries: Vec<(usize, String, String, usize)> = Vec::new();
    let mut seen = vec![false; g.len()];
    let mut queue: VecDeque<usize> = g.initial.iter().copied().collect();
    intern(dpw.initial, &mut names);
    for &v in &g.initial {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        let NodeInfo::Controller { state, dpw: q } = g.info[v] else {
            continue;
        };
        if p.is_goal(state) {
            continue;
        }
        let env = sol.strategy[v].expect("controller strategy is total on its region");
        let NodeInfo::Environment { dpw: q1, action, .. } = g.info[env] else {
            continue;
        };
        let letter = dpw.alphabet.index(p.action_name(action)).expect("action letter");
        let m = intern(q, &mut names);
        let m2 = intern(dpw.step(q1, letter), &mut names);
        entries.push((
            m,
            p.obs_name(p.obs(state)).to_string(),
            p.action_name(action).to_string(),
            m2,
        ));
        for &w in &g.succ[env] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    let mut policy = Policy::new(names.iter().map(|q| format!("q{q}")), 0);
    for (m, o, a, m2) in entries {
        policy.set_output(m, o.clone(), a);
        if m2 != m {
            policy.set_update(m, o, m2);
        }
    }
    policy
}
