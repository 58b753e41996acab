use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActionId, ObsId, Pondp};
use crate::error::{Error, Result};

/// Finite-memory policy: a transducer from observation sequences to actions.
///
/// The action at round `i` is `output(m_i, ω_i)` and the memory advances to
/// `update(m_i, ω_i)`. A missing update entry keeps the memory unchanged; a
/// missing output entry means the policy is undefined there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFile", into = "PolicyFile")]
pub struct Policy {
    memory: Vec<String>,
    initial: usize,
    update: BTreeMap<(usize, String), usize>,
    output: BTreeMap<(usize, String), String>,
}

impl Policy {
    /// A policy with the given memory states and no entries.
    pub fn new<I, S>(memory: I, initial: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let memory: Vec<String> = memory.into_iter().map(Into::into).collect();
        assert!(initial < memory.len(), "initial memory state out of range");
        Policy {
            memory,
            initial,
            update: BTreeMap::new(),
            output: BTreeMap::new(),
        }
    }

    /// A memoryless policy from `(observation, action)` pairs.
    pub fn memoryless<I, O, A>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (O, A)>,
        O: Into<String>,
        A: Into<String>,
    {
        let mut p = Policy::new(["m0"], 0);
        for (o, a) in pairs {
            p.set_output(0, o, a);
        }
        p
    }

    pub fn memory_states(&self) -> &[String] {
        &self.memory
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_memoryless(&self) -> bool {
        self.memory.len() == 1
    }

    pub fn set_output(&mut self, m: usize, obs: impl Into<String>, action: impl Into<String>) {
        self.output.insert((m, obs.into()), action.into());
    }

    pub fn set_update(&mut self, m: usize, obs: impl Into<String>, next: usize) {
        assert!(next < self.memory.len(), "memory state out of range");
        self.update.insert((m, obs.into()), next);
    }

    pub fn output(&self, m: usize, obs: &str) -> Option<&str> {
        self.output.get(&(m, obs.to_string())).map(String::as_str)
    }

    pub fn next_memory(&self, m: usize, obs: &str) -> usize {
        self.update.get(&(m, obs.to_string())).copied().unwrap_or(m)
    }

    pub fn outputs(&self) -> impl Iterator<Item = (usize, &str, &str)> {
        self.output.iter().map(|((m, o), a)| (*m, o.as_str(), a.as_str()))
    }

    pub fn updates(&self) -> impl Iterator<Item = (usize, &str, usize)> {
        self.update.iter().map(|((m, o), n)| (*m, o.as_str(), *n))
    }

    /// `μ(ω_0 ... ω_n)`: runs the memory along the sequence and reads the
    /// output at the last observation.
    pub fn act<S: AsRef<str>>(&self, observations: &[S]) -> Option<&str> {
        let (last, init) = observations.split_last()?;
        let m = init.iter().fold(self.initial, |m, o| self.next_memory(m, o.as_ref()));
        self.output(m, last.as_ref())
    }

    /// Collapses to a memoryless policy when the output never depends on
    /// the memory state.
    pub fn to_memoryless(&self) -> Option<Policy> {
        let mut merged: BTreeMap<&str, &str> = BTreeMap::new();
        for ((_, o), a) in &self.output {
            if let Some(prev) = merged.insert(o.as_str(), a.as_str()) {
                if prev != a {
                    return None;
                }
            }
        }
        Some(Policy::memoryless(merged))
    }

    /// Resolves names against the observation and action lists of a problem.
    /// Entries naming unknown observations are dropped (they can never
    /// fire); outputs naming unknown actions are kept as invalid choices.
    pub fn bind(&self, observations: &[String], actions: &[String]) -> BoundPolicy {
        let n_obs = observations.len();
        let obs_index: std::collections::HashMap<&str, ObsId> =
            observations.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
        let act_index: std::collections::HashMap<&str, ActionId> =
            actions.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let nm = self.memory.len();
        let mut update: Vec<usize> = (0..nm * n_obs).map(|i| i / n_obs.max(1)).collect();
        let mut output = vec![BoundOutput::Undefined; nm * n_obs];
        for ((m, o), &next) in &self.update {
            if let Some(&oi) = obs_index.get(o.as_str()) {
                update[m * n_obs + oi] = next;
            }
        }
        for ((m, o), a) in &self.output {
            if let Some(&oi) = obs_index.get(o.as_str()) {
                output[m * n_obs + oi] = match act_index.get(a.as_str()) {
                    Some(&ai) => BoundOutput::Action(ai),
                    None => BoundOutput::Unknown,
                };
            }
        }
        BoundPolicy {
            memory: nm,
            initial: self.initial,
            n_obs,
            update,
            output,
            unknown_names: self
                .output
                .iter()
                .filter(|(_, a)| !act_index.contains_key(a.as_str()))
                .map(|((m, o), a)| (*m, o.clone(), a.clone()))
                .collect(),
        }
    }

    pub fn bind_to(&self, p: &Pondp) -> BoundPolicy {
        self.bind(p.observations(), p.actions())
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((m, o), a) in &self.output {
            if self.is_memoryless() {
                writeln!(f, "{o} -> {a}")?;
            } else {
                let next = self.next_memory(*m, o);
                writeln!(f, "{}, {o} -> {a} / {}", self.memory[*m], self.memory[next])?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundOutput {
    Undefined,
    Action(ActionId),
    /// The policy names an action the problem does not have.
    Unknown,
}

/// A policy resolved to the index space of one problem.
#[derive(Clone, Debug)]
pub struct BoundPolicy {
    pub memory: usize,
    pub initial: usize,
    n_obs: usize,
    update: Vec<usize>,
    output: Vec<BoundOutput>,
    unknown_names: Vec<(usize, String, String)>,
}

impl BoundPolicy {
    pub fn output(&self, m: usize, o: ObsId) -> BoundOutput {
        self.output[m * self.n_obs + o]
    }

    pub fn next(&self, m: usize, o: ObsId) -> usize {
        self.update[m * self.n_obs + o]
    }

    pub fn unknown_name(&self, m: usize, obs: &str) -> Option<&str> {
        self.unknown_names
            .iter()
            .find(|(mm, o, _)| *mm == m && o == obs)
            .map(|(_, _, a)| a.as_str())
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    memory_states: Vec<String>,
    initial: String,
    #[serde(default)]
    update: Vec<(String, String, String)>,
    #[serde(default)]
    output: Vec<(String, String, String)>,
}

impl From<Policy> for PolicyFile {
    fn from(p: Policy) -> Self {
        let name = |m: usize| p.memory[m].clone();
        PolicyFile {
            initial: name(p.initial),
            update: p
                .update
                .iter()
                .map(|((m, o), n)| (name(*m), o.clone(), name(*n)))
                .collect(),
            output: p
                .output
                .iter()
                .map(|((m, o), a)| (name(*m), o.clone(), a.clone()))
                .collect(),
            memory_states: p.memory.clone(),
        }
    }
}

impl TryFrom<PolicyFile> for Policy {
    type Error = Error;

    fn try_from(f: PolicyFile) -> Result<Self> {
        let find = |m: &str| {
            f.memory_states
                .iter()
                .position(|x| x == m)
                .ok_or_else(|| Error::InvalidPolicy(format!("unknown memory state `{m}`")))
        };
        if f.memory_states.is_empty() {
            return Err(Error::InvalidPolicy("policy has no memory states".into()));
        }
        let mut p = Policy::new(f.memory_states.clone(), find(&f.initial)?);
        for (m, o, n) in &f.update {
            p.set_update(find(m)?, o.clone(), find(n)?);
        }
        for (m, o, a) in &f.output {
            p.set_output(find(m)?, o.clone(), a.clone());
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_runs_memory_along_the_sequence() {
        let mut p = Policy::new(["even", "odd"], 0);
        p.set_update(0, "o", 1);
        p.set_update(1, "o", 0);
        p.set_output(0, "o", "a");
        p.set_output(1, "o", "b");
        assert_eq!(p.act(&["o"]), Some("a"));
        assert_eq!(p.act(&["o", "o"]), Some("b"));
        assert_eq!(p.act(&["o", "o", "o"]), Some("a"));
        assert_eq!(p.act::<&str>(&[]), None);
        assert_eq!(p.act(&["x"]), None);
    }

    #[test]
    fn json_round_trip() {
        let mut p = Policy::new(["q0", "q1"], 1);
        p.set_update(1, "X>0", 0);
        p.set_output(0, "X>0", "Dec");
        let text = serde_json::to_string(&p).unwrap();
        let back: Policy = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn collapse_to_memoryless() {
        let mut p = Policy::new(["q0", "q1"], 0);
        p.set_update(0, "X>0", 1);
        p.set_output(0, "X>0", "Dec");
        p.set_output(1, "X>0", "Dec");
        assert_eq!(p.to_memoryless(), Some(Policy::memoryless([("X>0", "Dec")])));
        p.set_output(1, "X>0", "Inc");
        assert_eq!(p.to_memoryless(), None);
    }
}
