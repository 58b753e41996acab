use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActionId, Pondp};
use crate::error::{Error, Result};

/// Whether trajectory elements are states of a problem or observations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    State,
    Observation,
}

/// One round `s_i a_i` of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: ActionId,
}

impl Step {
    pub fn new(state: usize, action: ActionId) -> Self {
        Step { state, action }
    }
}

/// `s_0 a_0 ... s_{n-1} a_{n-1} s_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteTrajectory {
    pub level: Level,
    pub steps: Vec<Step>,
    pub last: usize,
}

/// Ultimately periodic trajectory `prefix (cycle)^ω`. The last action of the
/// cycle leads back to the first state of the cycle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lasso {
    pub level: Level,
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    Finite(FiniteTrajectory),
    Lasso(Lasso),
}

impl FiniteTrajectory {
    pub fn new(level: Level, steps: Vec<Step>, last: usize) -> Self {
        FiniteTrajectory { level, steps, last }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Visited elements, including the final one.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.state).chain(Some(self.last))
    }
}

impl Lasso {
    pub fn new(level: Level, prefix: Vec<Step>, cycle: Vec<Step>) -> Self {
        Lasso { level, prefix, cycle }
    }

    pub fn loop_state(&self) -> usize {
        self.cycle[0].state
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.prefix.iter().chain(&self.cycle).map(|s| s.state)
    }

    /// All `(s, a, s')` triples, prefix first, then the cycle.
    pub fn triples(&self) -> Vec<(usize, ActionId, usize)> {
        let all: Vec<&Step> = self.prefix.iter().chain(&self.cycle).collect();
        let mut out = Vec::with_capacity(all.len());
        for i in 0..all.len() {
            let next = if i + 1 < all.len() {
                all[i + 1].state
            } else {
                self.cycle[0].state
            };
            out.push((all[i].state, all[i].action, next));
        }
        out
    }

    /// The triples occurring infinitely often.
    pub fn cycle_triples(&self) -> Vec<(usize, ActionId, usize)> {
        let n = self.cycle.len();
        (0..n)
            .map(|i| (self.cycle[i].state, self.cycle[i].action, self.cycle[(i + 1) % n].state))
            .collect()
    }
}

impl Trajectory {
    pub fn level(&self) -> Level {
        match self {
            Trajectory::Finite(t) => t.level,
            Trajectory::Lasso(l) => l.level,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Trajectory::Finite(_))
    }

    pub fn as_lasso(&self) -> Option<&Lasso> {
        match self {
            Trajectory::Lasso(l) => Some(l),
            Trajectory::Finite(_) => None,
        }
    }

    pub fn states(&self) -> Vec<usize> {
        match self {
            Trajectory::Finite(t) => t.states().collect(),
            Trajectory::Lasso(l) => l.states().collect(),
        }
    }

    /// Checks that the trajectory is one of `p` at the given level: starts
    /// in an initial element and follows the transition relation. For the
    /// observation level, `p` is expected to be the observation projection.
    pub fn check_in(&self, p: &Pondp) -> Result<()> {
        let (steps, tail): (Vec<&Step>, Option<usize>) = match self {
            Trajectory::Finite(t) => (t.steps.iter().collect(), Some(t.last)),
            Trajectory::Lasso(l) => {
                if l.cycle.is_empty() {
                    return Err(Error::NotATrajectory("lasso cycle is empty".into()));
                }
                (l.prefix.iter().chain(&l.cycle).collect(), None)
            }
        };
        let n = p.num_states();
        let first = steps.first().map(|s| s.state).or(tail).unwrap();
        if first >= n || !p.init().contains(&first) {
            return Err(Error::NotATrajectory(format!(
                "trajectory does not start in an initial state (element {first})"
            )));
        }
        for i in 0..steps.len() {
            let s = steps[i].state;
            let a = steps[i].action;
            let next = match steps.get(i + 1) {
                Some(st) => st.state,
                None => match (tail, self) {
                    (Some(last), _) => last,
                    (None, Trajectory::Lasso(l)) => l.cycle[0].state,
                    _ => unreachable!(),
                },
            };
            if s >= n || next >= n || a >= p.actions().len() {
                return Err(Error::NotATrajectory(format!("index out of range at step {i}")));
            }
            if !p.is_available(s, a) || !p.successors(s, a).contains(&next) {
                return Err(Error::NotATrajectory(format!(
                    "step {i}: ({}, {}, {}) is not a transition",
                    p.state_name(s),
                    p.action_name(a),
                    p.state_name(next)
                )));
            }
        }
        Ok(())
    }

    /// Renders the trajectory with names from `p`.
    pub fn display<'a>(&'a self, p: &'a Pondp) -> TrajectoryDisplay<'a> {
        TrajectoryDisplay { t: self, p }
    }
}

impl From<FiniteTrajectory> for Trajectory {
    fn from(t: FiniteTrajectory) -> Self {
        Trajectory::Finite(t)
    }
}

impl From<Lasso> for Trajectory {
    fn from(l: Lasso) -> Self {
        Trajectory::Lasso(l)
    }
}

pub struct TrajectoryDisplay<'a> {
    t: &'a Trajectory,
    p: &'a Pondp,
}

impl fmt::Display for TrajectoryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |x: usize, level: Level| match level {
            Level::State => self.p.state_name(x),
            Level::Observation => self.p.obs_name(x),
        };
        let write_steps = |f: &mut fmt::Formatter<'_>, steps: &[Step], level| -> fmt::Result {
            for s in steps {
                write!(f, "{} {} ", name(s.state, level), self.p.action_name(s.action))?;
            }
            Ok(())
        };
        match self.t {
            Trajectory::Finite(t) => {
                write_steps(f, &t.steps, t.level)?;
                write!(f, "{}", name(t.last, t.level))
            }
            Trajectory::Lasso(l) => {
                write_steps(f, &l.prefix, l.level)?;
                write!(f, "( ")?;
                write_steps(f, &l.cycle, l.level)?;
                write!(f, ")^w")
            }
        }
    }
}
