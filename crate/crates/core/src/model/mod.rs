//! Finite partially observable nondeterministic planning problems, their
//! trajectories and policies, and policy verification.

mod policy;
mod simulate;
mod trajectory;
pub(crate) mod verify;

pub use policy::{BoundPolicy, Policy};
pub use simulate::{
    is_fair, is_generated_by, is_goal_reaching, run_policy, simulate, Resolver, RunOptions, RunOutcome, SimRun,
    TransitionSystem,
};
pub use trajectory::{FiniteTrajectory, Lasso, Level, Step, Trajectory};
pub use verify::{
    check_solution, check_solution_with_budget, reachable_outputs, Counterexample, InvalidPolicyWitness, Mode,
    ProductGraph, Verdict, DEFAULT_BUDGET,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ObsId = usize;
pub type ActionId = usize;

/// A fully observable problem is a [`Pondp`] whose observation function is
/// the identity on state names.
pub type Fondp = Pondp;

/// Class-level metadata carried by a problem: observable goals and
/// observable action preconditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub goal_observations: BTreeSet<ObsId>,
    pub avail_by_obs: Vec<BTreeSet<ActionId>>,
}

/// Letter sets that name the qualitative numerical atoms of a problem, so
/// that `qnp(X)` constraints can be built without knowing the QNP itself.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QnpLabels {
    pub variables: Vec<String>,
    /// Per variable, observations in which the variable is zero.
    pub zero: Vec<BTreeSet<ObsId>>,
    /// Per variable, actions carrying an `Inc` effect on it.
    pub inc: Vec<BTreeSet<ActionId>>,
    /// Per variable, actions carrying a `Dec` effect on it.
    pub dec: Vec<BTreeSet<ActionId>>,
}

impl QnpLabels {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }
}

/// Finite PONDP `<S, I, Obs, Act, T, A, obs, F>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pondp {
    states: Vec<String>,
    init: BTreeSet<StateId>,
    observations: Vec<String>,
    actions: Vec<String>,
    goal: Vec<bool>,
    avail: Vec<BTreeSet<ActionId>>,
    obs: Vec<ObsId>,
    succ: Vec<BTreeMap<ActionId, Vec<StateId>>>,
    class: Option<ClassInfo>,
    qnp: Option<QnpLabels>,
    state_index: HashMap<String, StateId>,
    obs_index: HashMap<String, ObsId>,
    action_index: HashMap<String, ActionId>,
}

impl Pondp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn init(&self) -> &BTreeSet<StateId> {
        &self.init
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn obs_name(&self, o: ObsId) -> &str {
        &self.observations[o]
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn obs_id(&self, name: &str) -> Option<ObsId> {
        self.obs_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goal[s]
    }

    pub fn goal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(|&s| self.goal[s])
    }

    pub fn obs(&self, s: StateId) -> ObsId {
        self.obs[s]
    }

    pub fn avail(&self, s: StateId) -> &BTreeSet<ActionId> {
        &self.avail[s]
    }

    pub fn is_available(&self, s: StateId, a: ActionId) -> bool {
        self.avail[s].contains(&a)
    }

    /// Successor set `F(a, s)`; empty when undefined.
    pub fn successors(&self, s: StateId, a: ActionId) -> &[StateId] {
        self.succ[s].get(&a).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn class_info(&self) -> Option<&ClassInfo> {
        self.class.as_ref()
    }

    pub fn qnp_labels(&self) -> Option<&QnpLabels> {
        self.qnp.as_ref()
    }

    pub fn set_class_info(&mut self, info: Option<ClassInfo>) {
        self.class = info;
    }

    pub fn set_qnp_labels(&mut self, labels: Option<QnpLabels>) {
        self.qnp = labels;
    }

    /// All transitions `(s, a, s')` of the problem.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, ActionId, StateId)> + '_ {
        self.succ.iter().enumerate().flat_map(|(s, m)| {
            m.iter()
                .flat_map(move |(&a, succs)| succs.iter().map(move |&t| (s, a, t)))
        })
    }

    /// True when states are their own observations (same names, identity map).
    pub fn is_fully_observable(&self) -> bool {
        self.states.len() == self.observations.len()
            && (0..self.states.len()).all(|s| self.observations[self.obs[s]] == self.states[s])
    }

    /// `step(p, s, a)`: the successor set, or an error if `a` is unavailable.
    pub fn step(&self, s: StateId, a: ActionId) -> Result<&[StateId]> {
        if !self.is_available(s, a) {
            return Err(Error::UnavailableAction {
                state: self.states[s].clone(),
                action: self.actions[a].clone(),
            });
        }
        Ok(self.successors(s, a))
    }

    /// Name-based variant of [`Pondp::step`].
    pub fn step_named(&self, s: &str, a: &str) -> Result<Vec<&str>> {
        let sid = self
            .state_id(s)
            .ok_or_else(|| Error::InvalidProblem(format!("unknown state `{s}`")))?;
        let aid = self.action_id(a).ok_or_else(|| Error::UnavailableAction {
            state: s.to_string(),
            action: a.to_string(),
        })?;
        Ok(self.step(sid, aid)?.iter().map(|&t| self.state_name(t)).collect())
    }

    /// Checks the problem invariants, plus the class invariants when a class
    /// is supplied or the problem carries class metadata.
    pub fn validate(&self, class: Option<&PondpClass>) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.init.is_empty() {
            out.push(Diagnostic::new(DiagnosticKind::EmptyInit, "no initial states"));
        }
        for s in 0..self.states.len() {
            for &a in &self.avail[s] {
                if self.successors(s, a).is_empty() {
                    out.push(Diagnostic::new(
                        DiagnosticKind::EmptySuccessorSet,
                        format!(
                            "empty successor set for available action `{}` in state `{}`",
                            self.actions[a], self.states[s]
                        ),
                    ));
                }
            }
            for &a in self.succ[s].keys() {
                if !self.avail[s].contains(&a) {
                    out.push(Diagnostic::new(
                        DiagnosticKind::SuccessorForUnavailableAction,
                        format!(
                            "successors defined for unavailable action `{}` in state `{}`",
                            self.actions[a], self.states[s]
                        ),
                    ));
                }
            }
        }

        let meta = match class {
            Some(c) => {
                if c.observations != self.observations {
                    out.push(Diagnostic::new(
                        DiagnosticKind::ClassMismatch,
                        "observations differ from the class observations",
                    ));
                }
                if c.actions != self.actions {
                    out.push(Diagnostic::new(
                        DiagnosticKind::ClassMismatch,
                        "actions differ from the class actions",
                    ));
                }
                c.info()
            }
            None => match &self.class {
                Some(info) => info.clone(),
                None => return out,
            },
        };
        for s in 0..self.states.len() {
            let o = self.obs[s];
            let goal_obs = meta.goal_observations.contains(&o);
            if goal_obs != self.goal[s] {
                out.push(Diagnostic::new(
                    DiagnosticKind::GoalNotObservable,
                    format!(
                        "goal not observable: state `{}` is {}a goal but observation `{}` is {}a goal observation",
                        self.states[s],
                        if self.goal[s] { "" } else { "not " },
                        self.observations.get(o).map(String::as_str).unwrap_or("?"),
                        if goal_obs { "" } else { "not " },
                    ),
                ));
            }
            if meta.avail_by_obs.get(o) != Some(&self.avail[s]) {
                out.push(Diagnostic::new(
                    DiagnosticKind::PreconditionNotObservable,
                    format!(
                        "precondition not observable: actions available in `{}` differ from those of observation `{}`",
                        self.states[s],
                        self.observations.get(o).map(String::as_str).unwrap_or("?"),
                    ),
                ));
            }
        }
        out
    }

    /// Starts a builder for a problem with the given name-based pieces.
    pub fn builder() -> PondpBuilder {
        PondpBuilder::default()
    }
}

impl fmt::Display for Pondp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "problem: {} states, {} observations, {} actions",
            self.states.len(),
            self.observations.len(),
            self.actions.len()
        )?;
        for s in 0..self.states.len() {
            let mark = match (self.init.contains(&s), self.goal[s]) {
                (true, true) => "I,T",
                (true, false) => "I",
                (false, true) => "T",
                _ => "",
            };
            writeln!(
                f,
                "  {} [{}] obs={}",
                self.states[s], mark, self.observations[self.obs[s]]
            )?;
            for (&a, succ) in &self.succ[s] {
                let names: Vec<&str> = succ.iter().map(|&t| self.states[t].as_str()).collect();
                writeln!(f, "    {} -> {{{}}}", self.actions[a], names.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Builds a [`Pondp`] from names. States, observations and actions are
/// registered in first-mention order unless declared up front.
#[derive(Clone, Debug, Default)]
pub struct PondpBuilder {
    states: Vec<String>,
    state_obs: Vec<Option<String>>,
    observations: Vec<String>,
    actions: Vec<String>,
    init: BTreeSet<String>,
    goal: BTreeSet<String>,
    avail: BTreeSet<(String, String)>,
    succ: BTreeMap<(String, String), BTreeSet<String>>,
    goal_observations: Option<BTreeSet<String>>,
    avail_by_obs: Option<BTreeMap<String, BTreeSet<String>>>,
    qnp: Option<QnpLabels>,
}

fn intern(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|x| x == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

impl PondpBuilder {
    pub fn observations<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for n in names {
            intern(&mut self.observations, n.as_ref());
        }
        self
    }

    pub fn actions<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for n in names {
            intern(&mut self.actions, n.as_ref());
        }
        self
    }

    /// Declares a state and its observation.
    pub fn state(mut self, name: &str, observation: &str) -> Self {
        let i = intern(&mut self.states, name);
        if self.state_obs.len() <= i {
            self.state_obs.resize(i + 1, None);
        }
        self.state_obs[i] = Some(observation.to_string());
        intern(&mut self.observations, observation);
        self
    }

    /// Declares a fully observable state (observation = state name).
    pub fn fo_state(self, name: &str) -> Self {
        self.state(name, name)
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.init.insert(name.to_string());
        self
    }

    pub fn goal(mut self, name: &str) -> Self {
        self.goal.insert(name.to_string());
        self
    }

    /// Marks `action` available in `state` without adding successors.
    pub fn available(mut self, state: &str, action: &str) -> Self {
        intern(&mut self.actions, action);
        self.avail.insert((state.to_string(), action.to_string()));
        self
    }

    /// Adds successors to `F(action, state)` and makes the action available.
    pub fn transition<I, S>(mut self, state: &str, action: &str, succ: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        intern(&mut self.actions, action);
        self.avail.insert((state.to_string(), action.to_string()));
        let entry = self.succ.entry((state.to_string(), action.to_string())).or_default();
        for t in succ {
            entry.insert(t.as_ref().to_string());
        }
        self
    }

    pub fn class_info<I, S>(mut self, goal_observations: I, avail_by_obs: BTreeMap<String, BTreeSet<String>>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.goal_observations = Some(goal_observations.into_iter().map(|s| s.as_ref().to_string()).collect());
        self.avail_by_obs = Some(avail_by_obs);
        self
    }

    pub fn qnp_labels(mut self, labels: QnpLabels) -> Self {
        self.qnp = Some(labels);
        self
    }

    pub fn build(self) -> Result<Pondp> {
        let PondpBuilder {
            states,
            state_obs,
            mut observations,
            actions,
            init,
            goal,
            avail,
            succ,
            goal_observations,
            avail_by_obs,
            qnp,
        } = self;
        let state_index: HashMap<String, StateId> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let lookup = |name: &str| {
            state_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidProblem(format!("undeclared state `{name}`")))
        };
        let mut obs = Vec::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            let o = state_obs
                .get(i)
                .cloned()
                .flatten()
                .ok_or_else(|| Error::InvalidProblem(format!("state `{s}` has no observation")))?;
            obs.push(intern(&mut observations, &o));
        }
        let action_index: HashMap<String, ActionId> = actions.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let obs_index: HashMap<String, ObsId> = observations.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();

        let n = states.len();
        let mut init_ids = BTreeSet::new();
        for s in &init {
            init_ids.insert(lookup(s)?);
        }
        let mut goal_v = vec![false; n];
        for s in &goal {
            goal_v[lookup(s)?] = true;
        }
        let mut avail_v = vec![BTreeSet::new(); n];
        for (s, a) in &avail {
            avail_v[lookup(s)?].insert(action_index[a]);
        }
        let mut succ_v = vec![BTreeMap::new(); n];
        for ((s, a), targets) in &succ {
            let mut ids = targets.iter().map(|t| lookup(t)).collect::<Result<Vec<_>>>()?;
            ids.sort_unstable();
            succ_v[lookup(s)?].insert(action_index[a], ids);
        }
        let class = match (goal_observations, avail_by_obs) {
            (Some(goals), Some(by_obs)) => {
                let find_obs = |o: &str| {
                    obs_index
                        .get(o)
                        .copied()
                        .ok_or_else(|| Error::InvalidProblem(format!("unknown observation `{o}`")))
                };
                let find_act = |a: &str| {
                    action_index
                        .get(a)
                        .copied()
                        .ok_or_else(|| Error::InvalidProblem(format!("unknown action `{a}`")))
                };
                let goal_observations = goals.iter().map(|o| find_obs(o)).collect::<Result<BTreeSet<_>>>()?;
                let mut avail_by_obs = vec![BTreeSet::new(); observations.len()];
                for (o, acts) in &by_obs {
                    let oi = find_obs(o)?;
                    for a in acts {
                        avail_by_obs[oi].insert(find_act(a)?);
                    }
                }
                Some(ClassInfo {
                    goal_observations,
                    avail_by_obs,
                })
            }
            (None, None) => None,
            _ => {
                return Err(Error::InvalidProblem(
                    "class metadata needs both goal observations and avail_by_obs".into(),
                ))
            }
        };
        Ok(Pondp {
            states,
            init: init_ids,
            observations,
            actions,
            goal: goal_v,
            avail: avail_v,
            obs,
            succ: succ_v,
            class,
            qnp,
            state_index,
            obs_index,
            action_index,
        })
    }
}

/// Index-based constructor used by generators that already work with ids.
#[allow(clippy::too_many_arguments)]
pub(crate) fn from_parts(
    states: Vec<String>,
    init: BTreeSet<StateId>,
    observations: Vec<String>,
    actions: Vec<String>,
    goal: Vec<bool>,
    avail: Vec<BTreeSet<ActionId>>,
    obs: Vec<ObsId>,
    succ: Vec<BTreeMap<ActionId, Vec<StateId>>>,
) -> Pondp {
    let state_index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let obs_index = observations.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let action_index = actions.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Pondp {
        states,
        init,
        observations,
        actions,
        goal,
        avail,
        obs,
        succ,
        class: None,
        qnp: None,
        state_index,
        obs_index,
        action_index,
    }
}

/// An explicit finite class of PONDPs sharing actions, observations,
/// goal observations and per-observation action sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PondpClass {
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub goal_observations: BTreeSet<ObsId>,
    pub avail_by_obs: Vec<BTreeSet<ActionId>>,
    pub members: Vec<Pondp>,
}

impl PondpClass {
    /// Builds a class whose metadata is that of the first member. When the
    /// first member carries none, goal observations and per-observation
    /// actions are read off the members' states, first occurrence winning;
    /// [`PondpClass::validate`] reports any disagreement.
    pub fn from_members(members: Vec<Pondp>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidClass("class has no members".into()))?;
        let info = match first.class_info() {
            Some(info) => info.clone(),
            None => infer_class_info(&members),
        };
        Ok(PondpClass {
            actions: first.actions.clone(),
            observations: first.observations.clone(),
            goal_observations: info.goal_observations,
            avail_by_obs: info.avail_by_obs,
            members,
        })
    }

    pub fn info(&self) -> ClassInfo {
        ClassInfo {
            goal_observations: self.goal_observations.clone(),
            avail_by_obs: self.avail_by_obs.clone(),
        }
    }

    /// Diagnostics for all members, tagged with the member index.
    pub fn validate(&self) -> Vec<(usize, Diagnostic)> {
        let mut out = Vec::new();
        if self.avail_by_obs.len() != self.observations.len() {
            out.push((
                usize::MAX,
                Diagnostic::new(
                    DiagnosticKind::ClassMismatch,
                    "avail_by_obs does not cover every observation",
                ),
            ));
        }
        for (i, m) in self.members.iter().enumerate() {
            out.extend(m.validate(Some(self)).into_iter().map(|d| (i, d)));
        }
        out
    }
}

fn infer_class_info(members: &[Pondp]) -> ClassInfo {
    let n = members[0].observations.len();
    let mut goal_observations = BTreeSet::new();
    let mut avail_by_obs: Vec<Option<BTreeSet<ActionId>>> = vec![None; n];
    for m in members {
        for s in 0..m.num_states() {
            let o = m.obs(s);
            if o >= n {
                continue;
            }
            if m.is_goal(s) {
                goal_observations.insert(o);
            }
            avail_by_obs[o].get_or_insert_with(|| m.avail(s).clone());
        }
    }
    ClassInfo {
        goal_observations,
        avail_by_obs: avail_by_obs.into_iter().map(Option::unwrap_or_default).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    EmptyInit,
    EmptySuccessorSet,
    SuccessorForUnavailableAction,
    GoalNotObservable,
    PreconditionNotObservable,
    ClassMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
