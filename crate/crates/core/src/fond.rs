//! Strong-cyclic planning for fully observable nondeterministic problems.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{check_solution, ActionId, Fondp, Mode, Policy, StateId, Verdict};

/// A memoryless policy under which every fair trajectory reaches the goal,
/// or `None` if some initial state has none. Ties are broken towards the
/// lowest action index; the policy is defined on the non-goal states it
/// reaches.
pub fn strong_cyclic_plan(p: &Fondp) -> Result<Option<Policy>> {
    if !p.is_fully_observable() {
        return Err(Error::InvalidProblem(
            "strong-cyclic planning needs a fully observable problem".into(),
        ));
    }
    let n = p.num_states();
    let mut good = vec![true; n];
    let dist = loop {
        let safe = safe_actions(p, &good);
        let dist = distances(p, &good, &safe);
        let next: Vec<bool> = dist.iter().map(Option::is_some).collect();
        if next == good {
            break dist;
        }
        good = next;
    };
    if p.init().iter().any(|&s| !good[s]) {
        return Ok(None);
    }
    let safe = safe_actions(p, &good);
    let choice: Vec<Option<ActionId>> = (0..n)
        .map(|s| {
            let d = dist[s]?;
            if p.is_goal(s) {
                return None;
            }
            safe[s]
                .iter()
                .copied()
                .find(|&a| p.successors(s, a).iter().any(|&t| dist[t].is_some_and(|dt| dt < d)))
        })
        .collect();

    let mut seen = vec![false; n];
    let mut queue: VecDeque<StateId> = p.init().iter().copied().collect();
    for &s in p.init() {
        seen[s] = true;
    }
    let mut pairs = Vec::new();
    while let Some(s) = queue.pop_front() {
        let Some(a) = choice[s] else { continue };
        pairs.push((p.obs_name(p.obs(s)).to_string(), p.action_name(a).to_string()));
        for &t in p.successors(s, a) {
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    Ok(Some(Policy::memoryless(pairs)))
}

/// Per state, the available actions whose successors all lie in `good`.
fn safe_actions(p: &Fondp, good: &[bool]) -> Vec<Vec<ActionId>> {
    (0..p.num_states())
        .map(|s| {
            if !good[s] {
                return Vec::new();
            }
            p.avail(s)
                .iter()
                .copied()
                .filter(|&a| {
                    let succ = p.successors(s, a);
                    !succ.is_empty() && succ.iter().all(|&t| good[t])
                })
                .collect()
        })
        .collect()
}

/// Distance to a goal in `good`, moving along any successor of a safe action.
fn distances(p: &Fondp, good: &[bool], safe: &[Vec<ActionId>]) -> Vec<Option<usize>> {
    let n = p.num_states();
    let mut pred: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (s, acts) in safe.iter().enumerate() {
        for &a in acts {
            for &t in p.successors(s, a) {
                pred[t].push(s);
            }
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for s in p.goal_states().filter(|&s| good[s]) {
        dist[s] = Some(0);
        queue.push_back(s);
    }
    while let Some(t) = queue.pop_front() {
        let d = dist[t].expect("queued states have a distance");
        for &s in &pred[t] {
            if dist[s].is_none() {
                dist[s] = Some(d + 1);
                queue.push_back(s);
            }
        }
    }
    dist
}

/// Checks that every fair trajectory of `mu` reaches the goal.
pub fn verify_strong_cyclic(p: &Fondp, mu: &Policy) -> Result<Verdict> {
    check_solution(p, mu, Mode::Fair)
}
