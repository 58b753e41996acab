//! Trajectory constraints: LTL formulas over the interleaved alphabet of a
//! problem, the structural fairness constraint, QNP constraints and
//! explicit predicates used as test oracles.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ltl::{eval_lasso, ltl_to_nba_with_budget, parse_ltl, Alphabet, Expr, Formula, Word};
use crate::model::{is_fair, ActionId, Lasso, Level, ObsId, Pondp, Trajectory};
use crate::omega::{nba_to_dpw_with_budget, Dpw};
use crate::product::{self, BaseGraph, Component};

type Predicate = dyn Fn(&Pondp, &Lasso) -> bool + Send + Sync;

/// A constraint given by an arbitrary predicate on lassos.
#[derive(Clone)]
pub struct ExplicitPredicate(Arc<Predicate>);

impl ExplicitPredicate {
    pub fn new(f: impl Fn(&Pondp, &Lasso) -> bool + Send + Sync + 'static) -> Self {
        ExplicitPredicate(Arc::new(f))
    }

    pub fn holds(&self, p: &Pondp, l: &Lasso) -> bool {
        (self.0)(p, l)
    }
}

impl fmt::Debug for ExplicitPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExplicitPredicate(..)")
    }
}

#[derive(Clone, Debug)]
pub enum ConstraintKind {
    Ltl {
        formula: Formula,
        level: Level,
    },
    /// Every nondeterministic transition taken infinitely often sees all
    /// of its outcomes infinitely often.
    Fairness,
    Explicit(ExplicitPredicate),
    /// Conjunction.
    All(Vec<TrajectoryConstraint>),
}

/// A set of infinite trajectories. Finite trajectories satisfy every
/// constraint.
#[derive(Clone, Debug)]
pub struct TrajectoryConstraint {
    pub name: String,
    pub kind: ConstraintKind,
    cache: Arc<Mutex<HashMap<String, Arc<Dpw>>>>,
}

/// The leaves of a constraint, flattened.
pub struct Parts<'a> {
    pub ltl: Vec<(&'a Formula, Level)>,
    pub fairness: bool,
    pub explicit: Vec<&'a ExplicitPredicate>,
}

impl TrajectoryConstraint {
    fn with_kind(name: impl Into<String>, kind: ConstraintKind) -> Self {
        TrajectoryConstraint {
            name: name.into(),
            kind,
            cache: Arc::default(),
        }
    }

    pub fn ltl(name: impl Into<String>, formula: Formula, level: Level) -> Self {
        Self::with_kind(name, ConstraintKind::Ltl { formula, level })
    }

    pub fn fairness() -> Self {
        Self::with_kind("fairness", ConstraintKind::Fairness)
    }

    pub fn explicit(name: impl Into<String>, f: impl Fn(&Pondp, &Lasso) -> bool + Send + Sync + 'static) -> Self {
        Self::with_kind(name, ConstraintKind::Explicit(ExplicitPredicate::new(f)))
    }

    /// Conjunction; the empty conjunction admits every trajectory.
    pub fn all(name: impl Into<String>, parts: Vec<TrajectoryConstraint>) -> Self {
        Self::with_kind(name, ConstraintKind::All(parts))
    }

    /// The constraint admitting every trajectory.
    pub fn trivial() -> Self {
        Self::all("true", Vec::new())
    }

    pub fn and(self, other: TrajectoryConstraint) -> Self {
        let name = format!("{} & {}", self.name, other.name);
        Self::all(name, vec![self, other])
    }

    /// Parses a builtin name (`qnp(X)`, `qnp`, `qnp-strong(X)`, `fairness`,
    /// `true`) or an LTL formula over the problem's alphabet at `level`.
    pub fn from_text(p: &Pondp, text: &str, level: Level) -> Result<Self> {
        let t = text.trim();
        if t == "fairness" {
            return Ok(Self::fairness());
        }
        if t == "qnp" {
            return qnp_constraints(p);
        }
        if let Some(var) = t.strip_prefix("qnp(").and_then(|r| r.strip_suffix(')')) {
            return qnp_constraint(p, var.trim());
        }
        if let Some(var) = t.strip_prefix("qnp-strong(").and_then(|r| r.strip_suffix(')')) {
            return qnp_strong_constraint(p, var.trim());
        }
        let alphabet = Arc::new(Alphabet::for_problem(p, level)?);
        let f = parse_ltl(t, &alphabet)?;
        Ok(Self::ltl(t, f, level))
    }

    pub fn parts(&self) -> Parts<'_> {
        let mut parts = Parts {
            ltl: Vec::new(),
            fairness: false,
            explicit: Vec::new(),
        };
        self.collect(&mut parts);
        parts
    }

    fn collect<'a>(&'a self, parts: &mut Parts<'a>) {
        match &self.kind {
            ConstraintKind::Ltl { formula, level } => parts.ltl.push((formula, *level)),
            ConstraintKind::Fairness => parts.fairness = true,
            ConstraintKind::Explicit(e) => parts.explicit.push(e),
            ConstraintKind::All(cs) => cs.iter().for_each(|c| c.collect(parts)),
        }
    }

    pub fn is_ltl(&self) -> bool {
        let parts = self.parts();
        !parts.fairness && parts.explicit.is_empty()
    }

    /// Pipeline automaton of `f`, cached per constraint.
    pub fn dpw_for(&self, f: &Formula, budget: usize) -> Result<Arc<Dpw>> {
        let key = format!("{}|{}", f.alphabet, f);
        if let Some(d) = self.cache.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let nba = ltl_to_nba_with_budget(f, budget)?;
        let d = Arc::new(nba_to_dpw_with_budget(&nba, budget)?.reduce());
        self.cache.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    /// The constraint as a single state-level formula over `p`, encoding
    /// fairness structurally. Explicit predicates are not expressible.
    pub fn to_formula(&self, p: &Pondp) -> Result<Formula> {
        let alphabet = Arc::new(Alphabet::for_problem(p, Level::State)?);
        let parts = self.parts();
        if !parts.explicit.is_empty() {
            return Err(Error::NotLtlExpressible(format!(
                "`{}` contains an explicit predicate",
                self.name
            )));
        }
        let mut conj: Vec<Expr> = parts
            .ltl
            .iter()
            .map(|(f, level)| to_state_level(p, f, *level, &alphabet).expr)
            .collect();
        if parts.fairness {
            conj.push(fairness_as_ltl(p)?.expr);
        }
        Ok(Formula::new(alphabet, Expr::all(conj)))
    }
}

impl fmt::Display for TrajectoryConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConstraintKind::Ltl { formula, .. } if formula.to_string() != self.name => {
                write!(f, "{}: {}", self.name, formula)
            }
            _ => f.write_str(&self.name),
        }
    }
}

/// Rewrites `f` (read at `level` over `p`) into the state-level alphabet:
/// an observation letter becomes the set of states that emit it.
pub(crate) fn to_state_level(p: &Pondp, f: &Formula, level: Level, target: &Arc<Alphabet>) -> Formula {
    let map: Vec<Vec<usize>> = f
        .alphabet
        .letters()
        .iter()
        .map(|l| {
            if let Some(a) = p.action_id(&l.name) {
                return target.index(p.action_name(a)).into_iter().collect();
            }
            match level {
                Level::State => target.index(&l.name).into_iter().collect(),
                Level::Observation => match p.obs_id(&l.name) {
                    Some(o) => (0..p.num_states())
                        .filter(|&s| p.obs(s) == o)
                        .filter_map(|s| target.index(p.state_name(s)))
                        .collect(),
                    None => Vec::new(),
                },
            }
        })
        .collect();
    f.substitute(target, &map)
}

/// Whether `t` satisfies `c`. State-level lassos are read at the
/// constraint's level.
pub fn satisfies(p: &Pondp, t: &Trajectory, c: &TrajectoryConstraint) -> Result<bool> {
    t.check_in(p)?;
    let Trajectory::Lasso(l) = t else {
        return Ok(true);
    };
    let parts = c.parts();
    for (f, level) in &parts.ltl {
        let w = Word::from_lasso(&f.alphabet, p, l, *level)?;
        if !eval_lasso(f, &w)? {
            return Ok(false);
        }
    }
    if parts.fairness && !is_fair(p, t)? {
        return Ok(false);
    }
    Ok(parts.explicit.iter().all(|e| e.holds(p, l)))
}

/// Letter sets of the numerical atoms of one variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QnpAtoms {
    pub var: String,
    pub zero: BTreeSet<ObsId>,
    pub inc: BTreeSet<ActionId>,
    pub dec: BTreeSet<ActionId>,
}

fn mentions(name: &str, var: &str, tag: &str) -> bool {
    name == format!("{tag}({var})")
        || name == format!("{tag}_{var}")
        || name.split([' ', ',', ';']).any(|part| part == format!("{tag}({var})"))
}

fn zero_by_name(name: &str, var: &str) -> bool {
    let atom = format!("{var}=0");
    name == atom || name.split([',', ' ', ';', '&']).any(|part| part.trim() == atom)
}

/// Atoms of `var`, from the problem's QNP labels when present, otherwise
/// from naming conventions: observations containing `X=0`, actions named
/// `Inc(X)`/`Dec(X)` (or `Inc`/`Dec` when the problem has a single
/// variable).
pub fn qnp_atoms(p: &Pondp, var: &str) -> Result<QnpAtoms> {
    if let Some(lab) = p.qnp_labels() {
        let i = lab
            .var_index(var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))?;
        return Ok(QnpAtoms {
            var: var.to_string(),
            zero: lab.zero[i].clone(),
            inc: lab.inc[i].clone(),
            dec: lab.dec[i].clone(),
        });
    }
    let zero: BTreeSet<ObsId> = (0..p.observations().len())
        .filter(|&o| zero_by_name(p.obs_name(o), var))
        .collect();
    if zero.is_empty() {
        return Err(Error::UnknownVariable(var.to_string()));
    }
    let single = inferred_variables(p).len() == 1;
    let by_tag = |tag: &str| -> BTreeSet<ActionId> {
        (0..p.actions().len())
            .filter(|&a| {
                let n = p.action_name(a);
                mentions(n, var, tag) || (single && n == tag)
            })
            .collect()
    };
    Ok(QnpAtoms {
        var: var.to_string(),
        zero,
        inc: by_tag("Inc"),
        dec: by_tag("Dec"),
    })
}

fn inferred_variables(p: &Pondp) -> Vec<String> {
    let mut vars = BTreeSet::new();
    for o in p.observations() {
        for part in o.split([',', ' ', ';', '&']) {
            if let Some(v) = part.trim().strip_suffix("=0") {
                if !v.is_empty() {
                    vars.insert(v.to_string());
                }
            }
        }
    }
    vars.into_iter().collect()
}

/// Variables of a problem: from QNP labels, or inferred from `X=0`
/// observation names.
pub fn qnp_variables(p: &Pondp) -> Vec<String> {
    match p.qnp_labels() {
        Some(lab) => lab.variables.clone(),
        None => inferred_variables(p),
    }
}

fn qnp_formula(p: &Pondp, var: &str, strong: bool) -> Result<Formula> {
    let atoms = qnp_atoms(p, var)?;
    let alphabet = Arc::new(Alphabet::for_problem(p, Level::Observation)?);
    let letters = |names: Vec<&str>| Expr::letters(names.into_iter().filter_map(|n| alphabet.index(n)));
    let inc = letters(atoms.inc.iter().map(|&a| p.action_name(a)).collect());
    let dec = letters(atoms.dec.iter().map(|&a| p.action_name(a)).collect());
    let zero = letters(atoms.zero.iter().map(|&o| p.obs_name(o)).collect());
    let lhs = inc.not().always().eventually().and(dec.eventually().always());
    let rhs = if strong {
        zero.always().eventually()
    } else {
        zero.eventually().always()
    };
    Ok(Formula::new(alphabet, lhs.implies(rhs)))
}

/// `(F G !Inc(X) & G F Dec(X)) -> G F X=0` at the observation level.
pub fn qnp_constraint(p: &Pondp, var: &str) -> Result<TrajectoryConstraint> {
    let f = qnp_formula(p, var, false)?;
    Ok(TrajectoryConstraint::ltl(format!("qnp({var})"), f, Level::Observation))
}

/// Variant with consequent `F G X=0`.
pub fn qnp_strong_constraint(p: &Pondp, var: &str) -> Result<TrajectoryConstraint> {
    let f = qnp_formula(p, var, true)?;
    Ok(TrajectoryConstraint::ltl(
        format!("qnp-strong({var})"),
        f,
        Level::Observation,
    ))
}

/// Conjunction of the QNP constraints of all variables.
pub fn qnp_constraints(p: &Pondp) -> Result<TrajectoryConstraint> {
    let parts = qnp_variables(p)
        .iter()
        .map(|v| qnp_constraint(p, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryConstraint::all("qnp", parts))
}

pub fn fairness_constraint() -> TrajectoryConstraint {
    TrajectoryConstraint::fairness()
}

/// Largest formula [`fairness_as_ltl`] builds.
pub const FAIRNESS_LTL_LIMIT: usize = 64;

/// Fairness as a state-level formula: for every nondeterministic `(s, a)`
/// and outcome `t`, `G F (s & X a) -> G F (s & X (a & X t))`.
pub fn fairness_as_ltl(p: &Pondp) -> Result<Formula> {
    let alphabet = Arc::new(Alphabet::for_problem(p, Level::State)?);
    let l = |n: &str| Expr::letter(alphabet.index(n).expect("letter of the problem"));
    let mut conj = Vec::new();
    for s in 0..p.num_states() {
        for &a in p.avail(s) {
            let succ = p.successors(s, a);
            if succ.len() < 2 {
                continue;
            }
            let taken = l(p.state_name(s)).and(l(p.action_name(a)).next());
            for &t in succ {
                let outcome = l(p.state_name(s)).and(l(p.action_name(a)).and(l(p.state_name(t)).next()).next());
                conj.push(
                    taken
                        .clone()
                        .eventually()
                        .always()
                        .implies(outcome.eventually().always()),
                );
            }
        }
    }
    if conj.len() > FAIRNESS_LTL_LIMIT {
        return Err(Error::NotLtlExpressible(format!(
            "fairness needs {} conjuncts (limit {FAIRNESS_LTL_LIMIT})",
            conj.len()
        )));
    }
    Ok(Formula::new(alphabet, Expr::all(conj)))
}

/// Outcome of an implication check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Implication {
    pub holds: bool,
    /// A trajectory of the problem satisfying the premise but not the
    /// conclusion.
    pub witness: Option<Lasso>,
}

/// Whether every infinite trajectory of `p` that satisfies `c` also
/// satisfies `c2`.
pub fn implies(p: &Pondp, c: &TrajectoryConstraint, c2: &TrajectoryConstraint, budget: usize) -> Result<Implication> {
    let premise = c.parts();
    if !premise.explicit.is_empty() {
        return Err(Error::NotLtlExpressible(format!(
            "`{}` contains an explicit predicate",
            c.name
        )));
    }
    let base = full_graph(p);
    let dpws = premise
        .ltl
        .iter()
        .map(|(f, level)| Ok((c.dpw_for(f, budget)?, *level)))
        .collect::<Result<Vec<_>>>()?;

    let conclusion = c2.parts();
    if !conclusion.explicit.is_empty() {
        return Err(Error::NotLtlExpressible(format!(
            "`{}` contains an explicit predicate",
            c2.name
        )));
    }
    let mut targets: Vec<(Formula, Level)> = conclusion.ltl.iter().map(|(f, level)| ((*f).clone(), *level)).collect();
    if conclusion.fairness && !premise.fairness {
        targets.push((fairness_as_ltl(p)?, Level::State));
    }
    for (f, level) in targets {
        let neg = c2.dpw_for(&f.negate(), budget)?;
        let mut comps = dpws
            .iter()
            .map(|(d, lv)| Component::new(d, p, *lv))
            .collect::<Result<Vec<_>>>()?;
        comps.push(Component::new(&neg, p, level)?);
        if let Some(l) = product::find_lasso(p, &base, &comps, premise.fairness, budget)? {
            return Ok(Implication {
                holds: false,
                witness: Some(l),
            });
        }
    }
    Ok(Implication {
        holds: true,
        witness: None,
    })
}

/// All `(s, a)` pairs reachable from the initial states, linked by the
/// transition relation.
fn full_graph(p: &Pondp) -> BaseGraph {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut state = Vec::new();
    let mut action = Vec::new();
    let mut seen = vec![false; p.num_states()];
    let mut stack: Vec<usize> = p.init().iter().copied().collect();
    for &s in &stack {
        seen[s] = true;
    }
    let mut order = Vec::new();
    while let Some(s) = stack.pop() {
        order.push(s);
        for &a in p.avail(s) {
            for &t in p.successors(s, a) {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    order.sort_unstable();
    for &s in &order {
        for &a in p.avail(s) {
            index.insert((s, a), state.len());
            state.push(s);
            action.push(a);
        }
    }
    let index = &index;
    let succ = (0..state.len())
        .map(|v| {
            p.successors(state[v], action[v])
                .iter()
                .flat_map(|&t| p.avail(t).iter().map(move |&b| index[&(t, b)]))
                .collect()
        })
        .collect();
    let init = p
        .init()
        .iter()
        .flat_map(|&s| p.avail(s).iter().map(move |&a| (s, a)))
        .map(|k| index[&k])
        .collect();
    let active = vec![true; state.len()];
    BaseGraph {
        state,
        action,
        succ,
        init,
        active,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::model::Step;

    fn obs_lasso(po: &Pondp, prefix: &[(&str, &str)], cycle: &[(&str, &str)]) -> Trajectory {
        let conv = |xs: &[(&str, &str)]| {
            xs.iter()
                .map(|(s, a)| Step::new(po.state_id(s).unwrap(), po.action_id(a).unwrap()))
                .collect()
        };
        Trajectory::Lasso(Lasso::new(Level::State, conv(prefix), conv(cycle)))
    }

    #[test]
    fn qnp_constraint_on_projection_lassos() {
        let po = catalog::counter_projection();
        let cx = qnp_constraint(&po, "X").unwrap();
        assert_eq!(cx.name, "qnp(X)");
        let dec = obs_lasso(&po, &[], &[("X>0", "Dec")]);
        let inc = obs_lasso(&po, &[], &[("X>0", "Inc")]);
        assert!(!satisfies(&po, &dec, &cx).unwrap());
        assert!(satisfies(&po, &inc, &cx).unwrap());
        assert!(satisfies(&po, &dec, &TrajectoryConstraint::trivial()).unwrap());
    }

    #[test]
    fn finite_trajectories_satisfy_everything() {
        let po = catalog::counter_projection();
        let t = Trajectory::Finite(crate::model::FiniteTrajectory::new(
            Level::State,
            vec![Step::new(po.state_id("X>0").unwrap(), po.action_id("Dec").unwrap())],
            po.state_id("X=0").unwrap(),
        ));
        for c in [
            qnp_constraint(&po, "X").unwrap(),
            fairness_constraint(),
            TrajectoryConstraint::explicit("never", |_, _| false),
        ] {
            assert!(satisfies(&po, &t, &c).unwrap());
        }
    }

    #[test]
    fn unknown_variable_is_reported() {
        let po = catalog::counter_projection();
        assert!(matches!(qnp_constraint(&po, "Y"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn unfair_dec_loop_violates_fairness() {
        let po = catalog::counter_projection();
        let dec = obs_lasso(&po, &[], &[("X>0", "Dec")]);
        assert!(!satisfies(&po, &dec, &fairness_constraint()).unwrap());
        let f = TrajectoryConstraint::ltl("fair-ltl", fairness_as_ltl(&po).unwrap(), Level::State);
        assert!(!satisfies(&po, &dec, &f).unwrap());
    }

    #[test]
    fn fairness_implies_qnp_on_concrete_counter() {
        let p = catalog::counter_problem(3, 4);
        let cx = qnp_constraint(&p, "X").unwrap();
        let r = implies(&p, &fairness_constraint(), &cx, 100_000).unwrap();
        assert!(r.holds, "{:?}", r.witness);
        assert!(implies(&p, &cx, &cx, 100_000).unwrap().holds);
    }

    #[test]
    fn unconstrained_projection_does_not_imply_qnp() {
        let po = catalog::counter_projection();
        let cx = qnp_constraint(&po, "X").unwrap();
        let r = implies(&po, &TrajectoryConstraint::trivial(), &cx, 100_000).unwrap();
        assert!(!r.holds);
        let w = Trajectory::Lasso(r.witness.unwrap());
        assert!(!satisfies(&po, &w, &cx).unwrap());
    }

    #[test]
    fn builtin_names_parse() {
        let po = catalog::counter_projection();
        for t in ["qnp(X)", "qnp", "fairness", "qnp-strong(X)", "G F Dec"] {
            TrajectoryConstraint::from_text(&po, t, Level::Observation).unwrap();
        }
    }
}
