use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FiniteTrajectory, Lasso, Level, Policy, Pondp, StateId, Step, Trajectory};
use crate::error::{Error, Result};

/// A (possibly infinite) nondeterministic system that policies can be run on.
pub trait TransitionSystem {
    type State: Clone + Eq + Hash;

    fn initial_states(&self) -> Vec<Self::State>;
    fn observation(&self, s: &Self::State) -> String;
    fn is_goal(&self, s: &Self::State) -> bool;
    fn is_available(&self, s: &Self::State, action: &str) -> bool;
    /// Successors of an available action, in a deterministic order.
    fn successors(&self, s: &Self::State, action: &str) -> Vec<Self::State>;
    fn label(&self, s: &Self::State) -> String;
}

impl TransitionSystem for Pondp {
    type State = StateId;

    fn initial_states(&self) -> Vec<StateId> {
        self.init().iter().copied().collect()
    }

    fn observation(&self, s: &StateId) -> String {
        self.obs_name(self.obs(*s)).to_string()
    }

    fn is_goal(&self, s: &StateId) -> bool {
        Pondp::is_goal(self, *s)
    }

    fn is_available(&self, s: &StateId, action: &str) -> bool {
        self.action_id(action).is_some_and(|a| Pondp::is_available(self, *s, a))
    }

    fn successors(&self, s: &StateId, action: &str) -> Vec<StateId> {
        self.action_id(action)
            .map(|a| Pondp::successors(self, *s, a).to_vec())
            .unwrap_or_default()
    }

    fn label(&self, s: &StateId) -> String {
        self.state_name(*s).to_string()
    }
}

/// Resolves nondeterministic choices (initial state and action outcomes).
#[derive(Clone, Debug)]
pub enum Resolver {
    /// Uniform choices from a seeded generator.
    Seeded(Box<ChaCha8Rng>),
    /// Named choices consumed in order, one per choice point with more than
    /// one option.
    Scripted(VecDeque<String>),
    /// Always the first option.
    First,
}

impl Resolver {
    pub fn seeded(seed: u64) -> Self {
        Resolver::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn scripted<I, S>(choices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Resolver::Scripted(choices.into_iter().map(Into::into).collect())
    }

    fn choose(&mut self, labels: &[String], step: usize) -> Result<usize> {
        if labels.len() == 1 {
            return Ok(0);
        }
        match self {
            Resolver::Seeded(rng) => Ok(rng.random_range(0..labels.len())),
            Resolver::First => Ok(0),
            Resolver::Scripted(choices) => {
                let c = choices.pop_front().ok_or(Error::ResolverExhausted(step))?;
                labels.iter().position(|l| *l == c).ok_or_else(|| {
                    Error::NotATrajectory(format!("scripted choice `{c}` is not among {labels:?} at step {step}"))
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_steps: usize,
    /// End the run as soon as a goal state is reached.
    pub stop_at_goal: bool,
    /// Return a lasso when a (state, memory) pair repeats.
    pub detect_lasso: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_steps: 10_000,
            stop_at_goal: false,
            detect_lasso: true,
        }
    }
}

/// A run over an arbitrary [`TransitionSystem`], with action names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimRun<S> {
    /// Maximal finite run: the policy is undefined at `last`, or the run
    /// stopped at a goal.
    Finite { steps: Vec<(S, String)>, last: S },
    /// A (state, memory) pair repeated; the cycle can be pumped forever.
    Lasso {
        prefix: Vec<(S, String)>,
        cycle: Vec<(S, String)>,
    },
    /// `max_steps` reached.
    Truncated { steps: Vec<(S, String)>, last: S },
}

impl<S> SimRun<S> {
    pub fn steps(&self) -> usize {
        match self {
            SimRun::Finite { steps, .. } | SimRun::Truncated { steps, .. } => steps.len(),
            SimRun::Lasso { prefix, cycle } => prefix.len() + cycle.len(),
        }
    }

    pub fn last(&self) -> Option<&S> {
        match self {
            SimRun::Finite { last, .. } | SimRun::Truncated { last, .. } => Some(last),
            SimRun::Lasso { .. } => None,
        }
    }
}

/// Runs `mu` on `sys`, resolving nondeterminism with `resolver`.
pub fn simulate<T: TransitionSystem>(
    sys: &T,
    mu: &Policy,
    resolver: &mut Resolver,
    opts: RunOptions,
) -> Result<SimRun<T::State>> {
    let inits = sys.initial_states();
    if inits.is_empty() {
        return Err(Error::InvalidProblem("no initial states".into()));
    }
    let labels: Vec<String> = inits.iter().map(|s| sys.label(s)).collect();
    let mut s = inits[resolver.choose(&labels, 0)?].clone();
    let mut m = mu.initial();
    let mut steps: Vec<(T::State, String)> = Vec::new();
    let mut seen: HashMap<(T::State, usize), usize> = HashMap::new();
    loop {
        if opts.stop_at_goal && sys.is_goal(&s) {
            return Ok(SimRun::Finite { steps, last: s });
        }
        if opts.detect_lasso {
            if let Some(&j) = seen.get(&(s.clone(), m)) {
                let cycle = steps.split_off(j);
                return Ok(SimRun::Lasso { prefix: steps, cycle });
            }
            seen.insert((s.clone(), m), steps.len());
        }
        let o = sys.observation(&s);
        let Some(a) = mu.output(m, &o) else {
            return Ok(SimRun::Finite { steps, last: s });
        };
        if steps.len() >= opts.max_steps {
            return Ok(SimRun::Truncated { steps, last: s });
        }
        if !sys.is_available(&s, a) {
            return Err(Error::InvalidPolicy(format!(
                "action `{a}` selected at state `{}` (observation `{o}`) after {} steps is not available",
                sys.label(&s),
                steps.len()
            )));
        }
        let succ = sys.successors(&s, a);
        if succ.is_empty() {
            return Err(Error::InvalidProblem(format!(
                "empty successor set for `{a}` at `{}`",
                sys.label(&s)
            )));
        }
        let labels: Vec<String> = succ.iter().map(|t| sys.label(t)).collect();
        let next = succ[resolver.choose(&labels, steps.len())?].clone();
        m = mu.next_memory(m, &o);
        steps.push((s, a.to_string()));
        s = next;
    }
}

/// Outcome of [`run_policy`] on a finite problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Finite(FiniteTrajectory),
    Lasso(Lasso),
    Truncated(FiniteTrajectory),
}

impl RunOutcome {
    pub fn trajectory(&self) -> Trajectory {
        match self {
            RunOutcome::Finite(t) | RunOutcome::Truncated(t) => Trajectory::Finite(t.clone()),
            RunOutcome::Lasso(l) => Trajectory::Lasso(l.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RunOutcome::Finite(t) | RunOutcome::Truncated(t) => t.len(),
            RunOutcome::Lasso(l) => l.prefix.len() + l.cycle.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs `mu` on the finite problem `p` and returns a state-level trajectory.
pub fn run_policy(p: &Pondp, mu: &Policy, resolver: &mut Resolver, opts: RunOptions) -> Result<RunOutcome> {
    let conv = |steps: Vec<(StateId, String)>| -> Vec<Step> {
        steps
            .into_iter()
            .map(|(s, a)| Step::new(s, p.action_id(&a).expect("available action")))
            .collect()
    };
    Ok(match simulate(p, mu, resolver, opts)? {
        SimRun::Finite { steps, last } => RunOutcome::Finite(FiniteTrajectory::new(Level::State, conv(steps), last)),
        SimRun::Truncated { steps, last } => {
            RunOutcome::Truncated(FiniteTrajectory::new(Level::State, conv(steps), last))
        }
        SimRun::Lasso { prefix, cycle } => RunOutcome::Lasso(Lasso::new(Level::State, conv(prefix), conv(cycle))),
    })
}

/// True iff some visited element of `t` is a goal of `p`.
pub fn is_goal_reaching(p: &Pondp, t: &Trajectory) -> Result<bool> {
    t.check_in(p)?;
    Ok(t.states().into_iter().any(|s| p.is_goal(s)))
}

/// True iff every nondeterministic transition occurring infinitely often in
/// `t` is accompanied by all its sibling outcomes. Finite trajectories are fair.
pub fn is_fair(p: &Pondp, t: &Trajectory) -> Result<bool> {
    t.check_in(p)?;
    let Trajectory::Lasso(l) = t else {
        return Ok(true);
    };
    let inf: HashSet<(usize, usize, usize)> = l.cycle_triples().into_iter().collect();
    Ok(inf
        .iter()
        .all(|&(s, a, _)| p.successors(s, a).iter().all(|&t2| inf.contains(&(s, a, t2)))))
}

/// True iff `t` is a μ-trajectory of `p`: every action is the policy's
/// choice on the observation history and, for finite trajectories, the
/// policy is undefined at the end.
pub fn is_generated_by(p: &Pondp, mu: &Policy, t: &Trajectory) -> Result<bool> {
    t.check_in(p)?;
    let obs_name = |x: usize| match t.level() {
        Level::State => p.obs_name(p.obs(x)).to_string(),
        Level::Observation => p.obs_name(x).to_string(),
    };
    let mut m = mu.initial();
    let follow = |step: &Step, m: &mut usize| -> bool {
        let o = obs_name(step.state);
        let ok = mu.output(*m, &o) == Some(p.action_name(step.action));
        *m = mu.next_memory(*m, &o);
        ok
    };
    match t {
        Trajectory::Finite(f) => {
            for st in &f.steps {
                if !follow(st, &mut m) {
                    return Ok(false);
                }
            }
            Ok(mu.output(m, &obs_name(f.last)).is_none())
        }
        Trajectory::Lasso(l) => {
            for st in &l.prefix {
                if !follow(st, &mut m) {
                    return Ok(false);
                }
            }
            let mut seen = HashSet::new();
            while seen.insert(m) {
                for st in &l.cycle {
                    if !follow(st, &mut m) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn dec_policy() -> Policy {
        Policy::memoryless([("X>0", "Dec")])
    }

    #[test]
    fn counter_run_takes_x0_steps() {
        let p = catalog::counter_problem(5, 10);
        let out = run_policy(&p, &dec_policy(), &mut Resolver::First, RunOptions::default()).unwrap();
        let RunOutcome::Finite(t) = out else { panic!("{out:?}") };
        assert_eq!(t.len(), 5);
        assert_eq!(p.state_name(t.last), "X=0");
        assert!(is_goal_reaching(&p, &Trajectory::Finite(t)).unwrap());
    }

    #[test]
    fn undefined_policy_gives_empty_trajectory() {
        let p = catalog::counter_problem(5, 10);
        let mu = Policy::memoryless(Vec::<(String, String)>::new());
        let out = run_policy(&p, &mu, &mut Resolver::First, RunOptions::default()).unwrap();
        let RunOutcome::Finite(t) = out else { panic!() };
        assert!(t.is_empty());
        assert_eq!(p.state_name(t.last), "X=5");
    }

    #[test]
    fn scripted_resolver_finds_the_unfair_lasso() {
        let po = catalog::counter_projection();
        let mut r = Resolver::scripted(["X>0"]);
        let out = run_policy(&po, &dec_policy(), &mut r, RunOptions::default()).unwrap();
        let RunOutcome::Lasso(l) = out else { panic!("{out:?}") };
        assert!(l.prefix.is_empty());
        assert_eq!(l.cycle.len(), 1);
        assert_eq!(po.state_name(l.cycle[0].state), "X>0");
        assert_eq!(po.action_name(l.cycle[0].action), "Dec");
        let t = Trajectory::Lasso(l);
        assert!(!is_goal_reaching(&po, &t).unwrap());
        assert!(!is_fair(&po, &t).unwrap());
        assert!(is_generated_by(&po, &dec_policy(), &t).unwrap());
    }

    #[test]
    fn scripted_resolver_can_run_out() {
        let po = catalog::counter_projection();
        let mut r = Resolver::scripted(Vec::<String>::new());
        let err = run_policy(&po, &dec_policy(), &mut r, RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ResolverExhausted(0)));
    }

    #[test]
    fn invalid_policy_is_an_error() {
        let p = catalog::counter_problem(0, 3);
        let mu = Policy::memoryless([("X=0", "Fly")]);
        let err = run_policy(&p, &mu, &mut Resolver::First, RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidPolicy(_)));
    }

    #[test]
    fn fairness_of_lassos() {
        let po = catalog::counter_projection();
        let pos = po.state_id("X>0").unwrap();
        let zero = po.state_id("X=0").unwrap();
        let dec = po.action_id("Dec").unwrap();
        let inc = po.action_id("Inc").unwrap();
        // (X>0 Dec X>0 Dec X=0 Inc)^ω covers both Dec outcomes.
        let both = Trajectory::Lasso(Lasso::new(
            Level::State,
            vec![],
            vec![Step::new(pos, dec), Step::new(pos, dec), Step::new(zero, inc)],
        ));
        assert!(is_fair(&po, &both).unwrap());
        let fin = Trajectory::Finite(FiniteTrajectory::new(Level::State, vec![], pos));
        assert!(is_fair(&po, &fin).unwrap());
    }

    #[test]
    fn goal_in_prefix_counts() {
        let po = catalog::counter_projection();
        let pos = po.state_id("X>0").unwrap();
        let zero = po.state_id("X=0").unwrap();
        let dec = po.action_id("Dec").unwrap();
        let inc = po.action_id("Inc").unwrap();
        let t = Trajectory::Lasso(Lasso::new(
            Level::State,
            vec![Step::new(pos, dec), Step::new(zero, inc)],
            vec![Step::new(pos, inc)],
        ));
        assert!(is_goal_reaching(&po, &t).unwrap());
    }

    #[test]
    fn malformed_trajectories_are_rejected() {
        let po = catalog::counter_projection();
        let zero = po.state_id("X=0").unwrap();
        let pos = po.state_id("X>0").unwrap();
        let inc = po.action_id("Inc").unwrap();
        // Inc from X>0 cannot lead to X=0.
        let t = Trajectory::Finite(FiniteTrajectory::new(Level::State, vec![Step::new(pos, inc)], zero));
        assert!(matches!(is_goal_reaching(&po, &t), Err(Error::NotATrajectory(_))));
    }
}
