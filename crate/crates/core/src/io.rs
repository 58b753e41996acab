//! JSON files for problems and classes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Pondp, PondpClass, QnpLabels};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub state: String,
    pub action: String,
    pub succ: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFile {
    pub goal_observations: Vec<String>,
    pub avail_by_obs: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QnpLabelsFile {
    pub variables: Vec<String>,
    pub zero: Vec<Vec<String>>,
    pub inc: Vec<Vec<String>>,
    pub dec: Vec<Vec<String>>,
}

/// A problem by names. `observations` and `obs` are omitted for fully
/// observable problems.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub obs: BTreeMap<String, String>,
    pub actions: Vec<String>,
    pub init: Vec<String>,
    pub goal: Vec<String>,
    pub transitions: Vec<TransitionEntry>,
    /// `[state, action]` pairs available without successors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub available: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qnp: Option<QnpLabelsFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMembersFile {
    pub members: Vec<ProblemFile>,
}

impl From<&Pondp> for ProblemFile {
    fn from(p: &Pondp) -> Self {
        let identity = p.observations() == p.states() && (0..p.num_states()).all(|s| p.obs(s) == s);
        let names = |ids: &BTreeSet<usize>, f: &dyn Fn(usize) -> String| ids.iter().map(|&i| f(i)).collect();
        let mut transitions = Vec::new();
        let mut available = Vec::new();
        for s in 0..p.num_states() {
            for &a in p.avail(s) {
                let succ = p.successors(s, a);
                if succ.is_empty() {
                    available.push((p.state_name(s).to_string(), p.action_name(a).to_string()));
                } else {
                    transitions.push(TransitionEntry {
                        state: p.state_name(s).to_string(),
                        action: p.action_name(a).to_string(),
                        succ: succ.iter().map(|&t| p.state_name(t).to_string()).collect(),
                    });
                }
            }
        }
        let obs_name = |o: usize| p.obs_name(o).to_string();
        let act_name = |a: usize| p.action_name(a).to_string();
        ProblemFile {
            states: p.states().to_vec(),
            observations: (!identity).then(|| p.observations().to_vec()),
            obs: if identity {
                BTreeMap::new()
            } else {
                (0..p.num_states())
                    .map(|s| (p.state_name(s).to_string(), p.obs_name(p.obs(s)).to_string()))
                    .collect()
            },
            actions: p.actions().to_vec(),
            init: p.init().iter().map(|&s| p.state_name(s).to_string()).collect(),
            goal: p.goal_states().map(|s| p.state_name(s).to_string()).collect(),
            transitions,
            available,
            class: p.class_info().map(|c| ClassFile {
                goal_observations: names(&c.goal_observations, &obs_name),
                avail_by_obs: c
                    .avail_by_obs
                    .iter()
                    .enumerate()
                    .map(|(o, acts)| (obs_name(o), names(acts, &act_name)))
                    .collect(),
            }),
            qnp: p.qnp_labels().map(|l| QnpLabelsFile {
                variables: l.variables.clone(),
                zero: l.zero.iter().map(|z| names(z, &obs_name)).collect(),
                inc: l.inc.iter().map(|z| names(z, &act_name)).collect(),
                dec: l.dec.iter().map(|z| names(z, &act_name)).collect(),
            }),
        }
    }
}

impl TryFrom<ProblemFile> for Pondp {
    type Error = Error;

    fn try_from(f: ProblemFile) -> Result<Pondp> {
        let mut b = Pondp::builder();
        if let Some(obs) = &f.observations {
            b = b.observations(obs);
        }
        b = b.actions(&f.actions);
        for s in &f.states {
            let o = f.obs.get(s).map(String::as_str).unwrap_or(s);
            b = b.state(s, o);
        }
        if let Some(s) = f.obs.keys().find(|s| !f.states.contains(s)) {
            return Err(Error::InvalidProblem(format!(
                "observation given for undeclared state `{s}`"
            )));
        }
        for s in &f.init {
            b = b.initial(s);
        }
        for s in &f.goal {
            b = b.goal(s);
        }
        for t in &f.transitions {
            b = b.transition(&t.state, &t.action, &t.succ);
        }
        for (s, a) in &f.available {
            b = b.available(s, a);
        }
        if let Some(c) = &f.class {
            let by_obs = c
                .avail_by_obs
                .iter()
                .map(|(o, acts)| (o.clone(), acts.iter().cloned().collect()))
                .collect();
            b = b.class_info(&c.goal_observations, by_obs);
        }
        let mut p = b.build()?;
        if p.actions().len() != f.actions.len() {
            return Err(Error::InvalidProblem("transitions mention undeclared actions".into()));
        }
        if let Some(q) = &f.qnp {
            let obs = |names: &Vec<String>| -> Result<BTreeSet<usize>> {
                names
                    .iter()
                    .map(|n| {
                        p.obs_id(n)
                            .ok_or_else(|| Error::InvalidProblem(format!("unknown observation `{n}`")))
                    })
                    .collect()
            };
            let act = |names: &Vec<String>| -> Result<BTreeSet<usize>> {
                names
                    .iter()
                    .map(|n| {
                        p.action_id(n)
                            .ok_or_else(|| Error::InvalidProblem(format!("unknown action `{n}`")))
                    })
                    .collect()
            };
            let n = q.variables.len();
            if q.zero.len() != n || q.inc.len() != n || q.dec.len() != n {
                return Err(Error::InvalidProblem("qnp labels need one entry per variable".into()));
            }
            let labels = QnpLabels {
                variables: q.variables.clone(),
                zero: q.zero.iter().map(obs).collect::<Result<_>>()?,
                inc: q.inc.iter().map(act).collect::<Result<_>>()?,
                dec: q.dec.iter().map(act).collect::<Result<_>>()?,
            };
            p.set_qnp_labels(Some(labels));
        }
        Ok(p)
    }
}

pub fn problem_to_json(p: &Pondp) -> String {
    serde_json::to_string_pretty(&ProblemFile::from(p)).expect("problem files serialize")
}

pub fn problem_from_json(text: &str) -> Result<Pondp> {
    let f: ProblemFile = serde_json::from_str(text)?;
    f.try_into()
}

pub fn class_to_json(c: &PondpClass) -> String {
    let f = ClassMembersFile {
        members: c.members.iter().map(ProblemFile::from).collect(),
    };
    serde_json::to_string_pretty(&f).expect("class files serialize")
}

/// Reads `{"members": [...]}`; a single problem is a class of one.
pub fn class_from_json(text: &str) -> Result<PondpClass> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let members = if v.get("members").is_some() {
        let f: ClassMembersFile = serde_json::from_value(v)?;
        f.members.into_iter().map(Pondp::try_from).collect::<Result<Vec<_>>>()?
    } else {
        vec![problem_from_json(text)?]
    };
    PondpClass::from_members(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::qnp::{instantiate, InitValues};

    #[test]
    fn problems_round_trip() {
        let q = catalog::two_variable_qnp(InitValues::single(2), InitValues::single(1));
        let v = [("X".to_string(), 2), ("Y".to_string(), 1)].into();
        for p in [
            catalog::counter_problem(3, 5),
            catalog::counter_projection(),
            instantiate(&q, &v, 4).unwrap().problem,
        ] {
            let text = problem_to_json(&p);
            let back = problem_from_json(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(problem_to_json(&back), text);
        }
    }

    #[test]
    fn fully_observable_problems_omit_observations() {
        let text = problem_to_json(&catalog::counter_projection());
        assert!(!text.contains("\"observations\""));
        assert!(problem_to_json(&catalog::counter_problem(1, 2)).contains("\"observations\""));
    }

    #[test]
    fn classes_round_trip() {
        let c = catalog::counter_class(&[1, 2], 3).unwrap();
        let back = class_from_json(&class_to_json(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn malformed_files_are_errors() {
        assert!(matches!(problem_from_json("{"), Err(Error::Json(_))));
        let bad = r#"{"states":["a"],"actions":[],"init":["b"],"goal":[],"transitions":[]}"#;
        assert!(matches!(problem_from_json(bad), Err(Error::InvalidProblem(_))));
    }
}
