use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::policy::BoundOutput;
use super::{ActionId, FiniteTrajectory, Lasso, Level, Policy, Pondp, StateId, Step, Trajectory};
use crate::constraints::TrajectoryConstraint;
use crate::error::Result;
use crate::graph;
use crate::product::{self, BaseGraph, Component};

/// Default cap on product and automaton sizes.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    Strong,
    Fair,
    Under(&'a TrajectoryConstraint),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trajectory: Trajectory,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvalidPolicyWitness {
    /// Trajectory reaching the state where the invalid choice is made.
    pub trajectory: FiniteTrajectory,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    StrongSolution,
    FairSolution,
    SolvesUnderConstraint { constraint: String },
    NotASolution(Counterexample),
    InvalidPolicy(InvalidPolicyWitness),
}

impl Verdict {
    pub fn is_solution(&self) -> bool {
        matches!(
            self,
            Verdict::StrongSolution | Verdict::FairSolution | Verdict::SolvesUnderConstraint { .. }
        )
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::NotASolution(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::StrongSolution => f.write_str("STRONG_SOLUTION"),
            Verdict::FairSolution => f.write_str("FAIR_SOLUTION"),
            Verdict::SolvesUnderConstraint { constraint } => {
                write!(f, "SOLVES_UNDER_CONSTRAINT({constraint})")
            }
            Verdict::NotASolution(c) => write!(f, "NOT_A_SOLUTION: {}", c.reason),
            Verdict::InvalidPolicy(w) => write!(f, "INVALID_POLICY: action `{}`", w.action),
        }
    }
}

/// The product of a problem and a policy: nodes are reachable
/// (state, memory) pairs.
#[derive(Clone, Debug)]
pub struct ProductGraph {
    pub nodes: Vec<(StateId, usize)>,
    /// Policy choice at each node; `None` where the policy is undefined.
    pub action: Vec<Option<ActionId>>,
    pub succ: Vec<Vec<usize>>,
    pub init: Vec<usize>,
    /// Nodes reachable from the initial nodes without passing through a goal.
    pub pre_goal: Vec<bool>,
}

impl ProductGraph {
    /// Builds the product, or returns the witness of an invalid choice.
    pub fn build(p: &Pondp, mu: &Policy) -> std::result::Result<Self, InvalidPolicyWitness> {
        let bp = mu.bind_to(p);
        let mut index: HashMap<(StateId, usize), usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut parent: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        let mut init = Vec::new();
        for &s in p.init() {
            let key = (s, bp.initial);
            index.insert(key, nodes.len());
            init.push(nodes.len());
            nodes.push(key);
            parent.push(usize::MAX);
            queue.push_back(nodes.len() - 1);
        }
        let mut action = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let path_steps = |nodes: &[(StateId, usize)], parent: &[usize], action: &[Option<ActionId>], v: usize| {
            let mut chain = vec![v];
            while parent[*chain.last().unwrap()] != usize::MAX {
                chain.push(parent[*chain.last().unwrap()]);
            }
            chain.reverse();
            let steps = chain[..chain.len() - 1]
                .iter()
                .map(|&i| Step::new(nodes[i].0, action[i].unwrap()))
                .collect();
            FiniteTrajectory::new(Level::State, steps, nodes[v].0)
        };
        while let Some(v) = queue.pop_front() {
            let (s, m) = nodes[v];
            let o = p.obs(s);
            let chosen = match bp.output(m, o) {
                BoundOutput::Undefined => None,
                BoundOutput::Unknown => {
                    let name = bp.unknown_name(m, p.obs_name(o)).unwrap_or("?").to_string();
                    return Err(InvalidPolicyWitness {
                        trajectory: path_steps(&nodes, &parent, &action, v),
                        action: name,
                    });
                }
                BoundOutput::Action(a) if !p.is_available(s, a) => {
                    return Err(InvalidPolicyWitness {
                        trajectory: path_steps(&nodes, &parent, &action, v),
                        action: p.action_name(a).to_string(),
                    });
                }
                BoundOutput::Action(a) => Some(a),
            };
            action.push(chosen);
            debug_assert_eq!(action.len(), v + 1);
            let mut out = Vec::new();
            if let Some(a) = chosen {
                let m2 = bp.next(m, o);
                for &t in p.successors(s, a) {
                    let key = (t, m2);
                    let w = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        parent.push(v);
                        queue.push_back(nodes.len() - 1);
                        nodes.len() - 1
                    });
                    out.push(w);
                }
            }
            succ.push(out);
        }
        let mut pre_goal = vec![false; nodes.len()];
        let mut queue: VecDeque<usize> = init.iter().copied().collect();
        for &i in &init {
            pre_goal[i] = true;
        }
        while let Some(v) = queue.pop_front() {
            if p.is_goal(nodes[v].0) {
                continue;
            }
            for &w in &succ[v] {
                if !pre_goal[w] {
                    pre_goal[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(ProductGraph {
            nodes,
            action,
            succ,
            init,
            pre_goal,
        })
    }

    /// Nodes where a trajectory can still fail: before the goal, not a goal.
    fn open(&self, p: &Pondp, v: usize) -> bool {
        self.pre_goal[v] && !p.is_goal(self.nodes[v].0)
    }

    fn finite_path(&self, p: &Pondp, target: usize) -> FiniteTrajectory {
        let path = graph::bfs_path(
            &self.succ,
            &self.init,
            |v| self.open(p, v) || v == target,
            |v| v == target,
        )
        .expect("target is reachable");
        let steps = path[..path.len() - 1]
            .iter()
            .map(|&i| Step::new(self.nodes[i].0, self.action[i].unwrap()))
            .collect();
        FiniteTrajectory::new(Level::State, steps, self.nodes[target].0)
    }

    fn base_graph(&self, p: &Pondp) -> BaseGraph {
        BaseGraph {
            state: self.nodes.iter().map(|n| n.0).collect(),
            action: self.action.iter().map(|a| a.unwrap_or(0)).collect(),
            succ: self.succ.clone(),
            init: self.init.clone(),
            active: (0..self.nodes.len())
                .map(|v| self.open(p, v) && self.action[v].is_some())
                .collect(),
        }
    }
}

/// Decides whether `mu` solves `p` in the given mode.
pub fn check_solution(p: &Pondp, mu: &Policy, mode: Mode<'_>) -> Result<Verdict> {
    check_solution_with_budget(p, mu, mode, DEFAULT_BUDGET)
}

pub fn check_solution_with_budget(p: &Pondp, mu: &Policy, mode: Mode<'_>, budget: usize) -> Result<Verdict> {
    let g = match ProductGraph::build(p, mu) {
        Ok(g) => g,
        Err(w) => return Ok(Verdict::InvalidPolicy(w)),
    };
    for v in 0..g.nodes.len() {
        if g.open(p, v) && (g.action[v].is_none() || g.succ[v].is_empty()) {
            return Ok(Verdict::NotASolution(Counterexample {
                trajectory: Trajectory::Finite(g.finite_path(p, v)),
                reason: format!("policy stops at non-goal state `{}`", p.state_name(g.nodes[v].0)),
            }));
        }
    }
    let base = g.base_graph(p);
    let (found, success) = match mode {
        Mode::Strong => (
            product::find_lasso(p, &base, &[], false, budget)?,
            Verdict::StrongSolution,
        ),
        Mode::Fair => (product::find_lasso(p, &base, &[], true, budget)?, Verdict::FairSolution),
        Mode::Under(c) => {
            let parts = c.parts();
            let dpws = parts
                .ltl
                .iter()
                .map(|(f, level)| Ok((c.dpw_for(f, budget)?, *level)))
                .collect::<Result<Vec<_>>>()?;
            let comps = dpws
                .iter()
                .map(|(d, level)| Component::new(d, p, *level))
                .collect::<Result<Vec<_>>>()?;
            let mut found = product::find_lasso(p, &base, &comps, parts.fairness, budget)?;
            if found.is_none() && !parts.explicit.is_empty() {
                found = explicit_search(
                    p,
                    &g,
                    &base,
                    &comps,
                    parts.fairness,
                    |l| parts.explicit.iter().all(|e| e.holds(p, l)),
                    budget,
                )?;
            }
            (
                found,
                Verdict::SolvesUnderConstraint {
                    constraint: c.name.clone(),
                },
            )
        }
    };
    Ok(match found {
        None => success,
        Some(lasso) => Verdict::NotASolution(Counterexample {
            reason: match mode {
                Mode::Strong => "trajectory loops forever without reaching the goal".into(),
                Mode::Fair => "fair trajectory loops forever without reaching the goal".into(),
                Mode::Under(c) => format!("trajectory satisfying `{}` never reaches the goal", c.name),
            },
            trajectory: Trajectory::Lasso(lasso),
        }),
    })
}

/// Explicit predicates cannot be compiled into automata; candidate lassos
/// built from simple cycles of the product are tested one by one.
fn explicit_search(
    p: &Pondp,
    g: &ProductGraph,
    base: &BaseGraph,
    comps: &[Component<'_>],
    fair: bool,
    pred: impl Fn(&Lasso) -> bool,
    budget: usize,
) -> Result<Option<Lasso>> {
    const MAX_CYCLES: usize = 100_000;
    let active: Vec<usize> = (0..g.nodes.len()).filter(|&v| base.active[v]).collect();
    let step = |i: usize| Step::new(g.nodes[i].0, g.action[i].unwrap());
    let mut budget_left = MAX_CYCLES;
    for scc in graph::sccs_of(&g.succ, &active) {
        if !graph::is_nontrivial(&g.succ, &scc) {
            continue;
        }
        let mut member = vec![false; g.nodes.len()];
        for &v in &scc {
            member[v] = true;
        }
        for &start in &scc {
            let prefix =
                graph::bfs_path(&g.succ, &g.init, |v| base.active[v], |v| v == start).expect("component is reachable");
            let mut cycles = Vec::new();
            simple_cycles_from(&g.succ, &member, start, &mut cycles, &mut budget_left);
            for cyc in cycles {
                let lasso = Lasso::new(
                    Level::State,
                    prefix[..prefix.len() - 1].iter().map(|&i| step(i)).collect(),
                    cyc.iter().map(|&i| step(i)).collect(),
                );
                if !pred(&lasso) {
                    continue;
                }
                let t = Trajectory::Lasso(lasso.clone());
                if fair && !super::is_fair(p, &t)? {
                    continue;
                }
                if !comps.is_empty() {
                    let sub = lasso_graph(&lasso);
                    if product::find_lasso(p, &sub, comps, false, budget)?.is_none() {
                        continue;
                    }
                }
                return Ok(Some(lasso));
            }
        }
    }
    Ok(None)
}

/// The lasso itself as a base graph, so that automata can be run on it.
fn lasso_graph(l: &Lasso) -> BaseGraph {
    let all: Vec<&Step> = l.prefix.iter().chain(&l.cycle).collect();
    let n = all.len();
    let k = l.prefix.len();
    BaseGraph {
        state: all.iter().map(|s| s.state).collect(),
        action: all.iter().map(|s| s.action).collect(),
        succ: (0..n).map(|i| vec![if i + 1 < n { i + 1 } else { k }]).collect(),
        init: vec![0],
        active: vec![true; n],
    }
}

/// Simple cycles through `start` that only use members with index >= start.
fn simple_cycles_from(
    succ: &[Vec<usize>],
    member: &[bool],
    start: usize,
    out: &mut Vec<Vec<usize>>,
    budget: &mut usize,
) {
    let mut path = vec![start];
    let mut on_path = BTreeSet::from([start]);
    let mut iters = vec![0usize];
    while let Some(&v) = path.last() {
        if *budget == 0 {
            return;
        }
        let i = iters.last_mut().unwrap();
        if *i >= succ[v].len() {
            path.pop();
            iters.pop();
            on_path.remove(&v);
            continue;
        }
        let w = succ[v][*i];
        *i += 1;
        if !member[w] || w < start {
            continue;
        }
        if w == start {
            out.push(path.clone());
            *budget -= 1;
        } else if !on_path.contains(&w) {
            path.push(w);
            on_path.insert(w);
            iters.push(0);
        }
    }
}

/// The `(observation, action)` pairs the policy actually uses on `p`,
/// over all reachable (state, memory) pairs before the goal.
pub fn reachable_outputs(p: &Pondp, mu: &Policy) -> Result<BTreeSet<(String, String)>> {
    let g = ProductGraph::build(p, mu)
        .map_err(|w| crate::error::Error::InvalidPolicy(format!("invalid choice `{}`", w.action)))?;
    Ok((0..g.nodes.len())
        .filter(|&v| g.open(p, v))
        .filter_map(|v| {
            g.action[v].map(|a| {
                (
                    p.obs_name(p.obs(g.nodes[v].0)).to_string(),
                    p.action_name(a).to_string(),
                )
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::constraints;
    use crate::model::{is_fair, is_goal_reaching};

    #[test]
    fn dec_policy_is_fair_but_not_strong_on_the_projection() {
        let po = catalog::counter_projection();
        let mu = Policy::memoryless([("X>0", "Dec")]);
        let v = check_solution(&po, &mu, Mode::Strong).unwrap();
        let c = v.counterexample().expect("not strong");
        let l = c.trajectory.as_lasso().unwrap();
        assert_eq!(l.cycle.len(), 1);
        assert_eq!(po.state_name(l.cycle[0].state), "X>0");
        assert!(!is_goal_reaching(&po, &c.trajectory).unwrap());
        assert_eq!(check_solution(&po, &mu, Mode::Fair).unwrap(), Verdict::FairSolution);
    }

    #[test]
    fn dec_policy_solves_the_projection_under_qnp_constraint() {
        let po = catalog::counter_projection();
        let mu = Policy::memoryless([("X>0", "Dec")]);
        let cx = constraints::qnp_constraint(&po, "X").unwrap();
        assert!(check_solution(&po, &mu, Mode::Under(&cx)).unwrap().is_solution());
    }

    #[test]
    fn inc_policy_fails_fairly() {
        let po = catalog::counter_projection();
        let mu = Policy::memoryless([("X>0", "Inc")]);
        let v = check_solution(&po, &mu, Mode::Fair).unwrap();
        let c = v.counterexample().unwrap();
        assert!(is_fair(&po, &c.trajectory).unwrap());
        assert!(!is_goal_reaching(&po, &c.trajectory).unwrap());
    }

    #[test]
    fn invalid_choice_is_reported_with_a_witness() {
        let p = catalog::counter_problem(2, 5);
        let mu = Policy::memoryless([("X>0", "Dec"), ("X=0", "Dec")]);
        // Dec at X=0 is available in the concrete counter, so this is valid.
        assert!(check_solution(&p, &mu, Mode::Strong).unwrap().is_solution());
        let bad = Policy::memoryless([("X>0", "Jump")]);
        let v = check_solution(&p, &bad, Mode::Strong).unwrap();
        let Verdict::InvalidPolicy(w) = v else { panic!("{v:?}") };
        assert_eq!(w.action, "Jump");
        assert!(w.trajectory.steps.is_empty());
    }

    #[test]
    fn stopping_early_is_a_finite_counterexample() {
        let p = catalog::counter_problem(3, 5);
        let mu = Policy::memoryless(Vec::<(String, String)>::new());
        let v = check_solution(&p, &mu, Mode::Fair).unwrap();
        assert!(v.counterexample().unwrap().trajectory.is_finite());
    }

    #[test]
    fn reachable_outputs_of_the_dec_policy() {
        let po = catalog::counter_projection();
        let mu = Policy::memoryless([("X>0", "Dec"), ("X=0", "Inc")]);
        let outs = reachable_outputs(&po, &mu).unwrap();
        assert_eq!(outs, BTreeSet::from([("X>0".to_string(), "Dec".to_string())]));
    }
}
