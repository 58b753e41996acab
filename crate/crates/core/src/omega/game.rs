use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use super::dpw::Dpw;
use crate::error::{Error, Result};
use crate::model::{ActionId, Pondp, StateId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Player {
    /// The controller; wins plays whose largest recurring priority is even.
    Even,
    /// The environment.
    Odd,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Even => Player::Odd,
            Player::Odd => Player::Even,
        }
    }

    pub fn of_priority(p: u32) -> Player {
        if p.is_multiple_of(2) {
            Player::Even
        } else {
            Player::Odd
        }
    }
}

/// Provenance of a game node built from a problem and an automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NodeInfo {
    /// The controller picks an action at `state`; `dpw` is the automaton
    /// state before reading the state letter.
    Controller { state: StateId, dpw: u32 },
    /// The environment picks a successor of `action` at `state`; `dpw` is
    /// the automaton state after reading the state letter.
    Environment { state: StateId, dpw: u32, action: ActionId },
    /// Reached after stopping in a goal state.
    Win,
    /// Reached after stopping outside the goal.
    Lose,
    /// Node of a game built directly from a graph.
    Plain,
}

/// Two-player parity game; every node has at least one successor.
#[derive(Clone, Debug, Serialize)]
pub struct ParityGame {
    pub owner: Vec<Player>,
    pub priority: Vec<u32>,
    pub succ: Vec<Vec<usize>>,
    pub initial: Vec<usize>,
    pub info: Vec<NodeInfo>,
}

impl ParityGame {
    pub fn new(owner: Vec<Player>, priority: Vec<u32>, succ: Vec<Vec<usize>>) -> Self {
        let n = owner.len();
        assert_eq!(priority.len(), n);
        assert_eq!(succ.len(), n);
        assert!(succ.iter().all(|s| !s.is_empty()), "dead end in parity game");
        ParityGame {
            owner,
            priority,
            succ,
            initial: Vec::new(),
            info: vec![NodeInfo::Plain; n],
        }
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (v, ws) in self.succ.iter().enumerate() {
            for &w in ws {
                pred[w].push(v);
            }
        }
        pred
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph game {\n");
        for v in 0..self.len() {
            let shape = match self.owner[v] {
                Player::Even => "box",
                Player::Odd => "diamond",
            };
            let label = match self.info[v] {
                NodeInfo::Controller { state, dpw } => format!("s{state},q{dpw}"),
                NodeInfo::Environment { state, dpw, action } => format!("s{state},q{dpw},a{action}"),
                NodeInfo::Win => "win".into(),
                NodeInfo::Lose => "lose".into(),
                NodeInfo::Plain => format!("{v}"),
            };
            let _ = writeln!(s, "  v{v} [shape={shape}, label=\"{label}\\n{}\"];", self.priority[v]);
        }
        for (v, ws) in self.succ.iter().enumerate() {
            for w in ws {
                let _ = writeln!(s, "  v{v} -> v{w};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Letter indices of a fully observable problem in an automaton alphabet.
pub(crate) struct LetterMap {
    pub state: Vec<usize>,
    pub action: Vec<usize>,
}

impl LetterMap {
    pub fn new(p: &Pondp, d: &Dpw) -> Result<Self> {
        let find = |name: &str| {
            d.alphabet
                .index(name)
                .ok_or_else(|| Error::AlphabetMismatch(format!("`{name}` is not in the automaton alphabet")))
        };
        Ok(LetterMap {
            state: p.states().iter().map(|s| find(s)).collect::<Result<_>>()?,
            action: p.actions().iter().map(|a| find(a)).collect::<Result<_>>()?,
        })
    }
}

/// Builds the game in which the controller picks actions and the
/// environment picks outcomes, tracked by the automaton `d`.
///
/// Goal states offer only a stop move to a winning sink; non-goal states
/// without actions lead to a losing sink. Node 0 is the winning sink and
/// node 1 the losing sink.
pub fn build_parity_game(p: &Pondp, d: &Dpw) -> Result<ParityGame> {
    build_parity_game_with_budget(p, d, crate::model::verify::DEFAULT_BUDGET)
}

pub fn build_parity_game_with_budget(p: &Pondp, d: &Dpw, budget: usize) -> Result<ParityGame> {
    if !p.is_fully_observable() {
        return Err(Error::InvalidProblem(
            "parity games are built over fully observable problems".into(),
        ));
    }
    let letters = LetterMap::new(p, d)?;
    let mut owner = vec![Player::Even, Player::Odd];
    let mut priority = vec![0, 1];
    let mut succ: Vec<Vec<usize>> = vec![vec![0], vec![1]];
    let mut info = vec![NodeInfo::Win, NodeInfo::Lose];
    let mut index: HashMap<NodeInfo, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let mut add = |node: NodeInfo,
                   owner: &mut Vec<Player>,
                   priority: &mut Vec<u32>,
                   succ: &mut Vec<Vec<usize>>,
                   info: &mut Vec<NodeInfo>,
                   queue: &mut VecDeque<usize>|
     -> Result<usize> {
        if let Some(&i) = index.get(&node) {
            return Ok(i);
        }
        if owner.len() >= budget {
            return Err(Error::SizeBudgetExceeded {
                what: "parity game",
                budget,
            });
        }
        let i = owner.len();
        let (who, pr) = match node {
            NodeInfo::Controller { dpw, .. } => (Player::Even, d.priority[dpw as usize]),
            NodeInfo::Environment { dpw, .. } => (Player::Odd, d.priority[dpw as usize]),
            _ => unreachable!(),
        };
        owner.push(who);
        priority.push(pr);
        succ.push(Vec::new());
        info.push(node);
        index.insert(node, i);
        queue.push_back(i);
        Ok(i)
    };

    let mut initial = Vec::new();
    for &s in p.init() {
        let v = add(
            NodeInfo::Controller {
                state: s,
                dpw: d.initial,
            },
            &mut owner,
            &mut priority,
            &mut succ,
            &mut info,
            &mut queue,
        )?;
        initial.push(v);
    }
    while let Some(v) = queue.pop_front() {
        let mut out = Vec::new();
        match info[v] {
            NodeInfo::Controller { state, dpw } => {
                if p.is_goal(state) {
                    out.push(0);
                } else if p.avail(state).is_empty() {
                    out.push(1);
                } else {
                    let q1 = d.step(dpw, letters.state[state]);
                    for &a in p.avail(state) {
                        let w = add(
                            NodeInfo::Environment {
                                state,
                                dpw: q1,
                                action: a,
                            },
                            &mut owner,
                            &mut priority,
                            &mut succ,
                            &mut info,
                            &mut queue,
                        )?;
                        out.push(w);
                    }
                }
            }
            NodeInfo::Environment { state, dpw, action } => {
                let q2 = d.step(dpw, letters.action[action]);
                for &t in p.successors(state, action) {
                    let w = add(
                        NodeInfo::Controller { state: t, dpw: q2 },
                        &mut owner,
                        &mut priority,
                        &mut succ,
                        &mut info,
                        &mut queue,
                    )?;
                    out.push(w);
                }
                if out.is_empty() {
                    out.push(1);
                }
            }
            _ => unreachable!(),
        }
        succ[v] = out;
    }
    Ok(ParityGame {
        owner,
        priority,
        succ,
        initial,
        info,
    })
}
