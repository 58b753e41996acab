use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Effect, InitValues, Literal, Qnp, QnpAction, Semantics};
use crate::error::{Error, Result};
use crate::model::{from_parts, ActionId, ClassInfo, Pondp, QnpLabels, StateId, TransitionSystem};

const MAX_OBSERVATIONS: usize = 1 << 16;
const MAX_STATES: usize = 1 << 20;

/// A concrete state: fluent values and variable values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QnpState {
    pub fluents: Vec<bool>,
    pub values: Vec<u64>,
}

/// A finite instance of a QNP.
#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: Pondp,
    /// Some increment was cut off at the bound, so the instance may lack
    /// behaviours of the unbounded one.
    pub capped: bool,
}

impl Qnp {
    pub(crate) fn holds(&self, lit: &Literal, fluents: &[bool], positive: &[bool]) -> bool {
        match lit {
            Literal::Fluent { name, value } => fluents[self.fluent_index(name).expect("validated fluent")] == *value,
            Literal::Zero(x) => !positive[self.var_index(x).expect("validated variable")],
            Literal::Positive(x) => positive[self.var_index(x).expect("validated variable")],
        }
    }

    pub(crate) fn applicable(&self, a: &QnpAction, fluents: &[bool], positive: &[bool]) -> bool {
        a.pre.iter().all(|l| self.holds(l, fluents, positive))
    }

    pub(crate) fn is_goal_valuation(&self, fluents: &[bool], positive: &[bool]) -> bool {
        self.goal.iter().all(|l| self.holds(l, fluents, positive))
    }

    pub(crate) fn apply_fluents(&self, a: &QnpAction, fluents: &[bool]) -> Vec<bool> {
        let mut out = fluents.to_vec();
        for f in &a.del {
            out[self.fluent_index(f).expect("validated fluent")] = false;
        }
        for f in &a.add {
            out[self.fluent_index(f).expect("validated fluent")] = true;
        }
        out
    }

    /// Name of a boolean valuation, e.g. `p,!q,X>0,Y=0`.
    pub(crate) fn valuation_name(&self, fluents: &[bool], positive: &[bool]) -> String {
        let parts: Vec<String> = self
            .fluents
            .iter()
            .zip(fluents)
            .map(|(f, &v)| if v { f.clone() } else { format!("!{f}") })
            .chain(
                self.variables
                    .iter()
                    .zip(positive)
                    .map(|(x, &p)| if p { format!("{x}>0") } else { format!("{x}=0") }),
            )
            .collect();
        if parts.is_empty() {
            "true".into()
        } else {
            parts.join(",")
        }
    }

    fn state_name(&self, s: &QnpState) -> String {
        let parts: Vec<String> = self
            .fluents
            .iter()
            .zip(&s.fluents)
            .map(|(f, &v)| if v { f.clone() } else { format!("!{f}") })
            .chain(self.variables.iter().zip(&s.values).map(|(x, v)| format!("{x}={v}")))
            .collect();
        if parts.is_empty() {
            "true".into()
        } else {
            parts.join(",")
        }
    }

    fn initial_fluents(&self) -> Vec<bool> {
        self.fluents.iter().map(|f| self.init.contains(f)).collect()
    }

    /// Every boolean valuation over fluents and zero/positive atoms, in
    /// counting order.
    pub(crate) fn all_valuations(&self) -> Result<Vec<(Vec<bool>, Vec<bool>)>> {
        let nf = self.fluents.len();
        let n = nf + self.variables.len();
        if n >= 16 || 1usize << n > MAX_OBSERVATIONS {
            return Err(Error::SizeBudgetExceeded {
                what: "observation space",
                budget: MAX_OBSERVATIONS,
            });
        }
        Ok((0..1usize << n)
            .map(|bits| {
                let b: Vec<bool> = (0..n).map(|i| bits >> (n - 1 - i) & 1 == 1).collect();
                (b[..nf].to_vec(), b[nf..].to_vec())
            })
            .collect())
    }
}

fn positive(values: &[u64]) -> Vec<bool> {
    values.iter().map(|&v| v > 0).collect()
}

/// Concrete successors of `s` under `a`; values above `cap` are clipped.
fn successors(q: &Qnp, s: &QnpState, a: &QnpAction, cap: Option<u64>, capped: &mut bool) -> Vec<QnpState> {
    let fluents = q.apply_fluents(a, &s.fluents);
    let mut choices: Vec<Vec<u64>> = Vec::with_capacity(s.values.len());
    for (i, x) in q.variables.iter().enumerate() {
        let v = s.values[i];
        let sem = q.semantics[i];
        let opts = match a.effect(x) {
            None => vec![v],
            Some(Effect::Dec) => sem.dec(v),
            Some(Effect::Inc) => {
                let mut o: Vec<u64> = sem
                    .inc(v)
                    .into_iter()
                    .map(|w| match cap {
                        Some(c) if w > c => {
                            *capped = true;
                            c
                        }
                        _ => w,
                    })
                    .collect();
                o.sort_unstable();
                o.dedup();
                o
            }
        };
        choices.push(opts);
    }
    let mut out = vec![Vec::new()];
    for opts in &choices {
        out = out
            .into_iter()
            .flat_map(|pre: Vec<u64>| {
                opts.iter().map(move |&v| {
                    let mut w = pre.clone();
                    w.push(v);
                    w
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|values| QnpState {
            fluents: fluents.clone(),
            values,
        })
        .collect()
}

/// The instance starting from the given variable values.
pub fn instantiate(q: &Qnp, values: &BTreeMap<String, u64>, bound: u64) -> Result<Instance> {
    q.validate()?;
    build(q, vec![initial_values(q, values)?], bound)
}

fn initial_values(q: &Qnp, values: &BTreeMap<String, u64>) -> Result<Vec<u64>> {
    if let Some(x) = values.keys().find(|x| q.var_index(x).is_none()) {
        return Err(Error::UnknownVariable(x.clone()));
    }
    let mut init = Vec::with_capacity(q.variables.len());
    for (i, x) in q.variables.iter().enumerate() {
        let v = *values
            .get(x)
            .ok_or_else(|| Error::Semantic(format!("no initial value for `{x}`")))?;
        if !q.init_values[i].contains(v) {
            return Err(Error::OutOfRange {
                var: x.clone(),
                value: v,
            });
        }
        init.push(v);
    }
    Ok(init)
}

/// The instance whose initial states are all combinations of the declared
/// initial values.
pub fn instantiate_all(q: &Qnp, bound: u64) -> Result<Instance> {
    q.validate()?;
    let mut inits = vec![Vec::new()];
    for iv in &q.init_values {
        let vals = iv.values();
        inits = inits
            .into_iter()
            .flat_map(|pre: Vec<u64>| {
                vals.iter().map(move |&v| {
                    let mut w = pre.clone();
                    w.push(v);
                    w
                })
            })
            .collect();
        if inits.len() > MAX_STATES {
            return Err(Error::SizeBudgetExceeded {
                what: "initial states",
                budget: MAX_STATES,
            });
        }
    }
    build(q, inits, bound)
}

/// A copy of `q` in which every variable ranges over `{0, 1}`, decrements
/// may or may not reach zero and increments give one.
pub fn two_valued_instance(q: &Qnp) -> Qnp {
    let mut t = q.clone();
    t.semantics = vec![Semantics::TwoValued; q.variables.len()];
    t.init_values = q
        .init_values
        .iter()
        .map(|iv| {
            let mut s = BTreeSet::new();
            if iv.zero_possible() {
                s.insert(0);
            }
            if iv.positive_possible() {
                s.insert(1);
            }
            InitValues::Set(s)
        })
        .collect();
    t
}

fn build(q: &Qnp, inits: Vec<Vec<u64>>, bound: u64) -> Result<Instance> {
    for v in &inits {
        for (i, &x) in v.iter().enumerate() {
            if x > bound || bound == 0 {
                return Err(Error::BoundTooSmall {
                    var: q.variables[i].clone(),
                    value: x.max(1),
                    bound,
                });
            }
        }
    }
    let valuations = q.all_valuations()?;
    let observations: Vec<String> = valuations.iter().map(|(f, p)| q.valuation_name(f, p)).collect();
    let obs_index: HashMap<&str, usize> = observations.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
    let actions: Vec<String> = q.actions.iter().map(|a| a.name.clone()).collect();

    let f0 = q.initial_fluents();
    let mut index: HashMap<QnpState, StateId> = HashMap::new();
    let mut states: Vec<QnpState> = Vec::new();
    let mut queue = VecDeque::new();
    let mut init = BTreeSet::new();
    for values in inits {
        let s = QnpState {
            fluents: f0.clone(),
            values,
        };
        let id = *index.entry(s.clone()).or_insert_with(|| {
            states.push(s.clone());
            queue.push_back(states.len() - 1);
            states.len() - 1
        });
        init.insert(id);
    }
    let mut capped = false;
    let mut avail: Vec<BTreeSet<ActionId>> = Vec::new();
    let mut succ: Vec<BTreeMap<ActionId, Vec<StateId>>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        let pos = positive(&s.values);
        let mut av = BTreeSet::new();
        let mut row = BTreeMap::new();
        for (ai, a) in q.actions.iter().enumerate() {
            if !q.applicable(a, &s.fluents, &pos) {
                continue;
            }
            av.insert(ai);
            let mut ids = Vec::new();
            for t in successors(q, &s, a, Some(bound), &mut capped) {
                let id = match index.get(&t) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= MAX_STATES {
                            return Err(Error::SizeBudgetExceeded {
                                what: "QNP instance",
                                budget: MAX_STATES,
                            });
                        }
                        states.push(t.clone());
                        index.insert(t, states.len() - 1);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    }
                };
                ids.push(id);
            }
            ids.sort_unstable();
            ids.dedup();
            row.insert(ai, ids);
        }
        if avail.len() <= i {
            avail.resize(i + 1, BTreeSet::new());
            succ.resize(i + 1, BTreeMap::new());
        }
        avail[i] = av;
        succ[i] = row;
    }

    let names: Vec<String> = states.iter().map(|s| q.state_name(s)).collect();
    let obs: Vec<usize> = states
        .iter()
        .map(|s| obs_index[q.valuation_name(&s.fluents, &positive(&s.values)).as_str()])
        .collect();
    let goal: Vec<bool> = states
        .iter()
        .map(|s| q.is_goal_valuation(&s.fluents, &positive(&s.values)))
        .collect();
    let mut p = from_parts(names, init, observations, actions, goal, avail, obs, succ);
    p.set_class_info(Some(class_info(q, &valuations)));
    p.set_qnp_labels(Some(qnp_labels(q, &valuations, Some)));
    Ok(Instance { problem: p, capped })
}

fn class_info(q: &Qnp, valuations: &[(Vec<bool>, Vec<bool>)]) -> ClassInfo {
    ClassInfo {
        goal_observations: valuations
            .iter()
            .enumerate()
            .filter(|(_, (f, p))| q.is_goal_valuation(f, p))
            .map(|(i, _)| i)
            .collect(),
        avail_by_obs: valuations
            .iter()
            .map(|(f, p)| {
                q.actions
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| q.applicable(a, f, p))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect(),
    }
}

/// Labels for the numerical atoms; `obs_id` maps a valuation index to the
/// problem's observation id, if the observation exists there.
pub(crate) fn qnp_labels<F>(q: &Qnp, valuations: &[(Vec<bool>, Vec<bool>)], obs_id: F) -> QnpLabels
where
    F: Fn(usize) -> Option<usize>,
{
    let effect = |x: &str, e: Effect| -> BTreeSet<ActionId> {
        q.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.effect(x) == Some(e))
            .map(|(i, _)| i)
            .collect()
    };
    QnpLabels {
        variables: q.variables.clone(),
        zero: (0..q.variables.len())
            .map(|i| {
                valuations
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, p))| !p[i])
                    .filter_map(|(j, _)| obs_id(j))
                    .collect()
            })
            .collect(),
        inc: q.variables.iter().map(|x| effect(x, Effect::Inc)).collect(),
        dec: q.variables.iter().map(|x| effect(x, Effect::Dec)).collect(),
    }
}

/// The unbounded system of a QNP from fixed initial values, for simulation.
#[derive(Clone, Debug)]
pub struct QnpSystem {
    qnp: Qnp,
    init: QnpState,
}

impl QnpSystem {
    pub fn new(q: &Qnp, values: &BTreeMap<String, u64>) -> Result<Self> {
        q.validate()?;
        let init = initial_values(q, values)?;
        Ok(QnpSystem {
            init: QnpState {
                fluents: q.initial_fluents(),
                values: init,
            },
            qnp: q.clone(),
        })
    }

    /// Initial values drawn uniformly from the declared initial values.
    pub fn sample<R: rand::Rng>(q: &Qnp, rng: &mut R) -> Result<Self> {
        let values = q
            .variables
            .iter()
            .zip(&q.init_values)
            .map(|(x, iv)| {
                let v = match iv {
                    InitValues::Set(s) => {
                        let all: Vec<u64> = s.iter().copied().collect();
                        all[rng.random_range(0..all.len())]
                    }
                    InitValues::Range { lo, hi } => rng.random_range(*lo..=*hi),
                };
                (x.clone(), v)
            })
            .collect();
        QnpSystem::new(q, &values)
    }

    pub fn initial(&self) -> &QnpState {
        &self.init
    }

    pub fn qnp(&self) -> &Qnp {
        &self.qnp
    }
}

impl TransitionSystem for QnpSystem {
    type State = QnpState;

    fn initial_states(&self) -> Vec<QnpState> {
        vec![self.init.clone()]
    }

    fn observation(&self, s: &QnpState) -> String {
        self.qnp.valuation_name(&s.fluents, &positive(&s.values))
    }

    fn is_goal(&self, s: &QnpState) -> bool {
        self.qnp.is_goal_valuation(&s.fluents, &positive(&s.values))
    }

    fn is_available(&self, s: &QnpState, action: &str) -> bool {
        self.qnp
            .action(action)
            .is_some_and(|a| self.qnp.applicable(a, &s.fluents, &positive(&s.values)))
    }

    fn successors(&self, s: &QnpState, action: &str) -> Vec<QnpState> {
        let a = self.qnp.action(action).expect("available action");
        successors(&self.qnp, s, a, None, &mut false)
    }

    fn label(&self, s: &QnpState) -> String {
        self.qnp.state_name(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::model::{run_policy, simulate, Resolver, RunOptions, SimRun};

    fn vals(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(x, v)| (x.to_string(), *v)).collect()
    }

    #[test]
    fn counter_instance_has_six_reachable_states() {
        let q = catalog::counter_qnp(InitValues::single(5));
        let inst = instantiate(&q, &vals(&[("X", 5)]), 10).unwrap();
        let p = &inst.problem;
        assert_eq!(p.num_states(), 6);
        assert!(!inst.capped);
        for s in 0..p.num_states() {
            let want = if p.state_name(s) == "X=0" { "X=0" } else { "X>0" };
            assert_eq!(p.obs_name(p.obs(s)), want);
            for &a in p.avail(s) {
                assert_eq!(p.successors(s, a).len(), 1);
            }
        }
    }

    #[test]
    fn zero_start_is_a_goal() {
        let q = catalog::counter_qnp(InitValues::Set(BTreeSet::from([0, 3])));
        let p = instantiate(&q, &vals(&[("X", 0)]), 3).unwrap().problem;
        let s0 = *p.init().iter().next().unwrap();
        assert!(p.is_goal(s0));
    }

    #[test]
    fn bad_initial_values_are_rejected() {
        let q = catalog::counter_qnp(InitValues::Range { lo: 5, hi: 10 });
        assert!(matches!(
            instantiate(&q, &vals(&[("X", 3)]), 10),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            instantiate(&q, &vals(&[("X", 7)]), 6),
            Err(Error::BoundTooSmall { .. })
        ));
    }

    #[test]
    fn canonical_two_variable_policy_takes_seventy_steps() {
        let q = catalog::two_variable_qnp(InitValues::single(20), InitValues::single(30));
        let p = instantiate(&q, &vals(&[("X", 20), ("Y", 30)]), 64).unwrap().problem;
        let mu = catalog::two_variable_policy();
        let out = run_policy(&p, &mu, &mut Resolver::First, RunOptions::default()).unwrap();
        assert_eq!(out.len(), 70);
        let sys = QnpSystem::new(&q, &vals(&[("X", 20), ("Y", 30)])).unwrap();
        let run = simulate(&sys, &mu, &mut Resolver::First, RunOptions::default()).unwrap();
        let SimRun::Finite { steps, last } = run else {
            panic!("expected a finite run");
        };
        assert_eq!(steps.len(), 70);
        assert!(sys.is_goal(&last));
    }

    #[test]
    fn increments_at_the_bound_are_capped() {
        let q = catalog::two_variable_qnp(InitValues::single(2), InitValues::single(3));
        let inst = instantiate(&q, &vals(&[("X", 2), ("Y", 3)]), 3).unwrap();
        assert!(inst.capped);
    }

    #[test]
    fn step_semantics_branch() {
        let mut q = catalog::counter_qnp(InitValues::single(4));
        q.semantics[0] = Semantics::Steps { lo: 1, hi: 2 };
        let p = instantiate(&q, &vals(&[("X", 4)]), 4).unwrap().problem;
        let s = p.state_id("X=4").unwrap();
        let dec = p.action_id("Dec").unwrap();
        let succ: Vec<&str> = p.successors(s, dec).iter().map(|&t| p.state_name(t)).collect();
        assert_eq!(succ, vec!["X=2", "X=3"]);
    }
}
