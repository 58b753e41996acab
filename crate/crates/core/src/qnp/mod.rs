//! Qualitative numerical problems: STRIPS fluents plus non-negative
//! numerical variables that actions increment or decrement by unspecified
//! amounts, observed only as `X=0` or `X>0`.

mod instantiate;
mod parser;
mod project;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Policy;

pub use instantiate::{instantiate, instantiate_all, two_valued_instance, Instance, QnpState, QnpSystem};
pub use parser::parse_qnp;
pub use project::{describe_projection, syntactic_projection};

/// A literal of a condition: a fluent with its required truth value, or a
/// qualitative atom over a variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    Fluent { name: String, value: bool },
    Zero(String),
    Positive(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Fluent { name, value: true } => f.write_str(name),
            Literal::Fluent { name, value: false } => write!(f, "!{name}"),
            Literal::Zero(x) => write!(f, "{x}=0"),
            Literal::Positive(x) => write!(f, "{x}>0"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Inc,
    Dec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QnpAction {
    pub name: String,
    pub pre: Vec<Literal>,
    pub add: Vec<String>,
    pub del: Vec<String>,
    /// Numerical effects by variable.
    pub effects: BTreeMap<String, Effect>,
}

impl QnpAction {
    pub fn new(name: impl Into<String>) -> Self {
        QnpAction {
            name: name.into(),
            pre: Vec::new(),
            add: Vec::new(),
            del: Vec::new(),
            effects: BTreeMap::new(),
        }
    }

    pub fn effect(&self, var: &str) -> Option<Effect> {
        self.effects.get(var).copied()
    }

    fn decrements(&self) -> impl Iterator<Item = &str> {
        self.effects
            .iter()
            .filter(|(_, e)| **e == Effect::Dec)
            .map(|(v, _)| v.as_str())
    }
}

/// Possible initial values of a variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitValues {
    Set(BTreeSet<u64>),
    Range { lo: u64, hi: u64 },
}

impl InitValues {
    pub fn single(v: u64) -> Self {
        InitValues::Set(BTreeSet::from([v]))
    }

    pub fn contains(&self, v: u64) -> bool {
        match self {
            InitValues::Set(s) => s.contains(&v),
            InitValues::Range { lo, hi } => (*lo..=*hi).contains(&v),
        }
    }

    pub fn zero_possible(&self) -> bool {
        self.contains(0)
    }

    pub fn positive_possible(&self) -> bool {
        match self {
            InitValues::Set(s) => s.iter().any(|&v| v > 0),
            InitValues::Range { hi, .. } => *hi > 0,
        }
    }

    pub fn values(&self) -> Vec<u64> {
        match self {
            InitValues::Set(s) => s.iter().copied().collect(),
            InitValues::Range { lo, hi } => (*lo..=*hi).collect(),
        }
    }

    pub fn max(&self) -> u64 {
        match self {
            InitValues::Set(s) => s.iter().copied().max().unwrap_or(0),
            InitValues::Range { hi, .. } => *hi,
        }
    }
}

impl fmt::Display for InitValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitValues::Set(s) => {
                let v: Vec<String> = s.iter().map(u64::to_string).collect();
                write!(f, "{{{}}}", v.join(","))
            }
            InitValues::Range { lo, hi } => write!(f, "[{lo},{hi}]"),
        }
    }
}

/// How concrete instances change a variable. Amounts are in grid units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// `x + 1` and `max(x - 1, 0)`.
    #[default]
    Unit,
    /// Steps of any size in `lo..=hi`, with `lo >= 1`; decrements stop at 0.
    Steps { lo: u64, hi: u64 },
    /// Values in `{0, 1}`: decrements give `{0, x}`, increments give `1`.
    TwoValued,
}

impl Semantics {
    /// Possible values after an increment of `x`, before capping.
    pub fn inc(&self, x: u64) -> Vec<u64> {
        match *self {
            Semantics::Unit => vec![x + 1],
            Semantics::Steps { lo, hi } => (lo..=hi).map(|k| x + k).collect(),
            Semantics::TwoValued => vec![1],
        }
    }

    /// Possible values after a decrement of `x`.
    pub fn dec(&self, x: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match *self {
            Semantics::Unit => vec![x.saturating_sub(1)],
            Semantics::Steps { lo, hi } => (lo..=hi).map(|k| x.saturating_sub(k)).collect(),
            Semantics::TwoValued => vec![0, x],
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qnp {
    pub fluents: Vec<String>,
    /// Fluents initially true; the rest are false.
    pub init: BTreeSet<String>,
    pub variables: Vec<String>,
    pub init_values: Vec<InitValues>,
    pub semantics: Vec<Semantics>,
    pub actions: Vec<QnpAction>,
    pub goal: Vec<Literal>,
}

impl Qnp {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.fluents.iter().position(|f| f == name)
    }

    pub fn action(&self, name: &str) -> Option<&QnpAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Checks names, effect descriptors and conditions.
    pub fn validate(&self) -> Result<()> {
        let semantic = |m: String| Err(Error::Semantic(m));
        if self.init_values.len() != self.variables.len() || self.semantics.len() != self.variables.len() {
            return semantic("every variable needs initial values and semantics".into());
        }
        let mut names = BTreeSet::new();
        for n in self.fluents.iter().chain(&self.variables) {
            if !names.insert(n) {
                return semantic(format!("`{n}` is declared twice"));
            }
        }
        for f in &self.init {
            if self.fluent_index(f).is_none() {
                return semantic(format!("unknown fluent `{f}` in init"));
            }
        }
        for (x, s) in self.variables.iter().zip(&self.semantics) {
            if let Semantics::Steps { lo, hi } = s {
                if *lo == 0 || lo > hi {
                    return semantic(format!("step range of `{x}` must satisfy 1 <= lo <= hi"));
                }
            }
        }
        let mut actions = BTreeSet::new();
        for a in &self.actions {
            if !actions.insert(&a.name) {
                return semantic(format!("action `{}` is declared twice", a.name));
            }
            self.check_condition(&a.pre, &format!("precondition of `{}`", a.name))?;
            for f in a.add.iter().chain(&a.del) {
                if self.fluent_index(f).is_none() {
                    return semantic(format!("unknown fluent `{f}` in action `{}`", a.name));
                }
            }
            for x in a.effects.keys() {
                if self.var_index(x).is_none() {
                    return semantic(format!("unknown variable `{x}` in action `{}`", a.name));
                }
            }
        }
        self.check_condition(&self.goal, "goal")
    }

    fn check_condition(&self, lits: &[Literal], what: &str) -> Result<()> {
        let mut seen: BTreeMap<&str, bool> = BTreeMap::new();
        for l in lits {
            let (key, val) = match l {
                Literal::Fluent { name, value } => {
                    if self.fluent_index(name).is_none() {
                        return Err(Error::Semantic(format!("unknown fluent `{name}` in {what}")));
                    }
                    (name.as_str(), *value)
                }
                Literal::Zero(x) | Literal::Positive(x) => {
                    if self.var_index(x).is_none() {
                        return Err(Error::Semantic(format!("unknown variable `{x}` in {what}")));
                    }
                    (x.as_str(), matches!(l, Literal::Positive(_)))
                }
            };
            if seen.insert(key, val).is_some_and(|old| old != val) {
                return Err(Error::Semantic(format!("contradictory literals on `{key}` in {what}")));
            }
        }
        Ok(())
    }

    /// Reasons why the closure transformation does not apply.
    pub fn closure_issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.actions {
            let decs: Vec<&str> = a.decrements().collect();
            if decs.len() > 1 {
                out.push(format!("action `{}` decrements {} variables", a.name, decs.len()));
            }
            for x in decs {
                if !a.pre.contains(&Literal::Positive(x.to_string())) {
                    out.push(format!(
                        "action `{}` decrements `{x}` without precondition {x}>0",
                        a.name
                    ));
                }
            }
        }
        out
    }
}

/// Same fluents, initial fluents, actions (names, conditions and effect
/// kinds), goal and variables, with the same possibility of starting at
/// zero and above zero for every variable. Concrete semantics and initial
/// values may differ otherwise.
pub fn similar(q1: &Qnp, q2: &Qnp) -> bool {
    q1.fluents == q2.fluents
        && q1.init == q2.init
        && q1.actions == q2.actions
        && q1.goal == q2.goal
        && q1.variables == q2.variables
        && q1
            .init_values
            .iter()
            .zip(&q2.init_values)
            .all(|(a, b)| a.zero_possible() == b.zero_possible() && a.positive_possible() == b.positive_possible())
}

/// Name of the commitment fluent of `var` in closed problems.
pub fn commitment_fluent(var: &str) -> String {
    format!("q_{var}")
}

/// Adds a commitment fluent `q_X` per variable, actions `set(X)` (adds it)
/// and `unset(X)` (needs `X=0`, deletes it), requires `q_X` for decrements
/// of `X` and forbids it for increments of `X`.
pub fn close_qnp(q: &Qnp) -> Result<Qnp> {
    if let Some(issue) = q.closure_issues().into_iter().next() {
        return Err(Error::NotClosureEligible(issue));
    }
    let mut c = q.clone();
    for x in &q.variables {
        c.fluents.push(commitment_fluent(x));
    }
    for a in &mut c.actions {
        for (x, e) in &a.effects {
            a.pre.push(Literal::Fluent {
                name: commitment_fluent(x),
                value: *e == Effect::Dec,
            });
        }
    }
    for x in &q.variables {
        let mut set = QnpAction::new(format!("set({x})"));
        set.add.push(commitment_fluent(x));
        let mut unset = QnpAction::new(format!("unset({x})"));
        unset.pre.push(Literal::Zero(x.clone()));
        unset.del.push(commitment_fluent(x));
        c.actions.push(set);
        c.actions.push(unset);
    }
    c.validate()?;
    Ok(c)
}

/// Whether `name` is a `set(X)` or `unset(X)` action added by [`close_qnp`].
pub fn is_closure_action(name: &str) -> bool {
    (name.starts_with("set(") || name.starts_with("unset(")) && name.ends_with(')')
}

/// Turns a memoryless policy for the projection of `close_qnp(q)` into a
/// finite-memory policy for the projection of `q`. The memory holds the
/// commitment fluents; `set` and `unset` steps are carried out internally
/// before each real action.
pub fn erase_commitments(q: &Qnp, closed: &Policy) -> Result<Policy> {
    let closed = closed
        .to_memoryless()
        .ok_or_else(|| Error::InvalidPolicy("expected a memoryless policy".into()))?;
    let c = close_qnp(q)?;
    let nv = q.variables.len();
    let mems: Vec<Vec<bool>> = (0..1usize << nv)
        .map(|bits| (0..nv).map(|i| bits >> i & 1 == 1).collect())
        .collect();
    let names = mems.iter().map(|m| {
        let on: Vec<&str> = q
            .variables
            .iter()
            .zip(m)
            .filter(|(_, &b)| b)
            .map(|(x, _)| x.as_str())
            .collect();
        format!("q[{}]", on.join(","))
    });
    let mut mu = Policy::new(names, 0);
    for (mi, m) in mems.iter().enumerate() {
        for (f, pos) in q.all_valuations()? {
            let mut cur = m.clone();
            let mut out = None;
            for _ in 0..=2 * nv {
                let mut cf = f.clone();
                cf.extend(&cur);
                let Some(a) = closed.output(0, &c.valuation_name(&cf, &pos)) else {
                    break;
                };
                let var = |prefix: &str| {
                    a.strip_prefix(prefix)
                        .and_then(|r| r.strip_suffix(')'))
                        .and_then(|x| q.var_index(x))
                };
                if let Some(i) = var("set(") {
                    cur[i] = true;
                } else if let Some(i) = var("unset(") {
                    if pos[i] {
                        break;
                    }
                    cur[i] = false;
                } else {
                    out = Some(a.to_string());
                    break;
                }
            }
            if let Some(a) = out {
                let obs = q.valuation_name(&f, &pos);
                let m2 = cur.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum();
                mu.set_output(mi, obs.clone(), a);
                if m2 != mi {
                    mu.set_update(mi, obs, m2);
                }
            }
        }
    }
    Ok(mu)
}

impl fmt::Display for Qnp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.fluents.is_empty() {
            writeln!(f, "fluents {}", self.fluents.join(" "))?;
        }
        if !self.variables.is_empty() {
            writeln!(f, "vars {}", self.variables.join(" "))?;
        }
        if !self.init.is_empty() {
            let v: Vec<&str> = self.init.iter().map(String::as_str).collect();
            writeln!(f, "init {}", v.join(" "))?;
        }
        for (i, x) in self.variables.iter().enumerate() {
            writeln!(f, "init_values {x} in {}", self.init_values[i])?;
            match self.semantics[i] {
                Semantics::Unit => {}
                Semantics::Steps { lo, hi } => writeln!(f, "semantics {x} steps {lo} {hi}")?,
                Semantics::TwoValued => writeln!(f, "semantics {x} two_valued")?,
            }
        }
        for a in &self.actions {
            writeln!(f, "action {}", a.name)?;
            let join = |v: Vec<String>| v.join(" ");
            if !a.pre.is_empty() {
                writeln!(f, "  pre {}", join(a.pre.iter().map(|l| l.to_string()).collect()))?;
            }
            if !a.add.is_empty() {
                writeln!(f, "  add {}", a.add.join(" "))?;
            }
            if !a.del.is_empty() {
                writeln!(f, "  del {}", a.del.join(" "))?;
            }
            for (tag, kind) in [("inc", Effect::Inc), ("dec", Effect::Dec)] {
                let xs: Vec<&str> = a
                    .effects
                    .iter()
                    .filter(|(_, e)| **e == kind)
                    .map(|(x, _)| x.as_str())
                    .collect();
                if !xs.is_empty() {
                    writeln!(f, "  {tag} {}", xs.join(" "))?;
                }
            }
        }
        let g: Vec<String> = self.goal.iter().map(|l| l.to_string()).collect();
        writeln!(f, "goal {}", g.join(" "))
    }
}
