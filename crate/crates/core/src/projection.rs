//! Observation projections of explicit classes.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    from_parts, ActionId, ClassInfo, Diagnostic, DiagnosticKind, FiniteTrajectory, Fondp, Lasso, Level, ObsId, Pondp,
    PondpClass, StateId, Step, Trajectory,
};

/// A member transition witnessing an abstract one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub member: usize,
    pub from: String,
    pub action: String,
    pub to: String,
}

#[derive(Clone, Debug)]
pub struct Projection {
    /// States are the class observations, in the class's order.
    pub problem: Fondp,
    /// One witness per abstract transition `(ω, a, ω')`.
    pub provenance: BTreeMap<(ObsId, ActionId, ObsId), Witness>,
    /// Actions excluded at observations where no member state witnesses them.
    pub diagnostics: Vec<Diagnostic>,
}

/// The fully observable problem over the observations of `class`: an
/// observation is initial (a goal) if some member state observing it is,
/// actions are those available at the observation, and `ω'` succeeds `ω`
/// under `a` if some member has such a transition.
pub fn observation_projection(class: &PondpClass) -> Result<Projection> {
    if let Some((i, d)) = class.validate().into_iter().next() {
        return Err(Error::InvalidClass(if i == usize::MAX {
            d.message
        } else {
            format!("member {i}: {}", d.message)
        }));
    }
    let n = class.observations.len();
    let mut init = BTreeSet::new();
    let mut succ: Vec<BTreeMap<ActionId, BTreeSet<ObsId>>> = vec![BTreeMap::new(); n];
    let mut provenance = BTreeMap::new();
    for (mi, m) in class.members.iter().enumerate() {
        if m.actions() != class.actions.as_slice() || m.observations() != class.observations.as_slice() {
            return Err(Error::InvalidClass(format!(
                "member {mi} does not share the class's actions and observations"
            )));
        }
        init.extend(m.init().iter().map(|&s| m.obs(s)));
        for (s, a, t) in m.transitions() {
            let (o, o2) = (m.obs(s), m.obs(t));
            succ[o].entry(a).or_default().insert(o2);
            provenance.entry((o, a, o2)).or_insert_with(|| Witness {
                member: mi,
                from: m.state_name(s).to_string(),
                action: m.action_name(a).to_string(),
                to: m.state_name(t).to_string(),
            });
        }
    }
    let mut diagnostics = Vec::new();
    let mut avail: Vec<BTreeSet<ActionId>> = vec![BTreeSet::new(); n];
    for o in 0..n {
        for &a in &class.avail_by_obs[o] {
            if succ[o].contains_key(&a) {
                avail[o].insert(a);
            } else {
                diagnostics.push(Diagnostic::new(
                    DiagnosticKind::EmptySuccessorSet,
                    format!(
                        "action `{}` at observation `{}` has no witnessed transition and is excluded",
                        class.actions[a], class.observations[o]
                    ),
                ));
            }
        }
    }
    let goal = (0..n).map(|o| class.goal_observations.contains(&o)).collect();
    let succ = succ
        .into_iter()
        .map(|m| m.into_iter().map(|(a, ts)| (a, ts.into_iter().collect())).collect())
        .collect();
    let mut p = from_parts(
        class.observations.clone(),
        init,
        class.observations.clone(),
        class.actions.clone(),
        goal,
        avail.clone(),
        (0..n).collect(),
        succ,
    );
    p.set_class_info(Some(ClassInfo {
        goal_observations: class.goal_observations.clone(),
        avail_by_obs: avail,
    }));
    p.set_qnp_labels(class.members[0].qnp_labels().cloned());
    Ok(Projection {
        problem: p,
        provenance,
        diagnostics,
    })
}

/// `obs(τ)`: the observation-level image of a state-level trajectory.
pub fn lift_trajectory(p: &Pondp, t: &Trajectory) -> Result<Trajectory> {
    if t.level() != Level::State {
        return Err(Error::NotATrajectory("expected a state-level trajectory".into()));
    }
    t.check_in(p)?;
    let lift = |steps: &[Step]| -> Vec<Step> { steps.iter().map(|s| Step::new(p.obs(s.state), s.action)).collect() };
    Ok(match t {
        Trajectory::Finite(f) => {
            Trajectory::Finite(FiniteTrajectory::new(Level::Observation, lift(&f.steps), p.obs(f.last)))
        }
        Trajectory::Lasso(l) => Trajectory::Lasso(Lasso::new(Level::Observation, lift(&l.prefix), lift(&l.cycle))),
    })
}

/// The part of `p` reachable from its initial states, with states in
/// breadth-first order. Observations are kept.
pub fn restrict_to_reachable(p: &Pondp) -> Pondp {
    let mut order: Vec<StateId> = Vec::new();
    let mut index: HashMap<StateId, StateId> = HashMap::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for &s in p.init() {
        index.insert(s, order.len());
        order.push(s);
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        for &a in p.avail(s) {
            for &t in p.successors(s, a) {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(t) {
                    e.insert(order.len());
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
    }
    let names = order.iter().map(|&s| p.state_name(s).to_string()).collect();
    let init = p.init().iter().map(|s| index[s]).collect();
    let goal = order.iter().map(|&s| p.is_goal(s)).collect();
    let avail = order.iter().map(|&s| p.avail(s).clone()).collect();
    let obs = order.iter().map(|&s| p.obs(s)).collect();
    let succ = order
        .iter()
        .map(|&s| {
            p.avail(s)
                .iter()
                .map(|&a| {
                    let mut ts: Vec<StateId> = p.successors(s, a).iter().map(|t| index[t]).collect();
                    ts.sort_unstable();
                    (a, ts)
                })
                .collect()
        })
        .collect();
    let mut r = from_parts(
        names,
        init,
        p.observations().to_vec(),
        p.actions().to_vec(),
        goal,
        avail,
        obs,
        succ,
    );
    r.set_class_info(p.class_info().cloned());
    r.set_qnp_labels(p.qnp_labels().cloned());
    r
}

type Named<'a> = (
    BTreeSet<&'a str>,
    BTreeSet<&'a str>,
    BTreeSet<&'a str>,
    BTreeSet<(&'a str, &'a str)>,
    BTreeSet<(&'a str, &'a str, &'a str)>,
);

/// Whether two problems have the same states (by name), initial states,
/// goals, availability and transitions.
pub fn same_problem(p: &Pondp, q: &Pondp) -> bool {
    fn named(x: &Pondp) -> Named<'_> {
        let init: BTreeSet<&str> = x.init().iter().map(|&s| x.state_name(s)).collect();
        let goal: BTreeSet<&str> = x.goal_states().map(|s| x.state_name(s)).collect();
        let states: BTreeSet<&str> = x.states().iter().map(String::as_str).collect();
        let avail: BTreeSet<(&str, &str)> = (0..x.num_states())
            .flat_map(|s| x.avail(s).iter().map(move |&a| (x.state_name(s), x.action_name(a))))
            .collect();
        let trans: BTreeSet<(&str, &str, &str)> = x
            .transitions()
            .map(|(s, a, t)| (x.state_name(s), x.action_name(a), x.state_name(t)))
            .collect();
        (states, init, goal, avail, trans)
    }
    named(p) == named(q)
}
