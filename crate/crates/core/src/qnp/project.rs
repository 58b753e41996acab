use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use super::instantiate::qnp_labels;
use super::{Effect, Literal, Qnp};
use crate::error::Result;
use crate::model::{from_parts, ActionId, Fondp, StateId};

type Valuation = (Vec<bool>, Vec<bool>);

/// The fully observable boolean abstraction of `q`: states are the
/// valuations of the fluents and of the atoms `X>0` reachable from the
/// initial ones. Increments make a variable positive; decrements of a
/// positive variable may or may not reach zero. State and observation names
/// agree with the observations of [`instantiate`](super::instantiate).
pub fn syntactic_projection(q: &Qnp) -> Result<Fondp> {
    q.validate()?;
    let f0: Vec<bool> = q.fluents.iter().map(|f| q.init.contains(f)).collect();
    let mut inits: Vec<Vec<bool>> = vec![Vec::new()];
    for iv in &q.init_values {
        let opts: Vec<bool> = [(iv.zero_possible(), false), (iv.positive_possible(), true)]
            .into_iter()
            .filter(|(possible, _)| *possible)
            .map(|(_, b)| b)
            .collect();
        inits = inits
            .into_iter()
            .flat_map(|pre| {
                opts.iter().map(move |&b| {
                    let mut w = pre.clone();
                    w.push(b);
                    w
                })
            })
            .collect();
    }

    let mut index: HashMap<Valuation, StateId> = HashMap::new();
    let mut states: Vec<Valuation> = Vec::new();
    let mut queue = VecDeque::new();
    let mut init = BTreeSet::new();
    for pos in inits {
        let v = (f0.clone(), pos);
        let id = *index.entry(v.clone()).or_insert_with(|| {
            states.push(v);
            queue.push_back(states.len() - 1);
            states.len() - 1
        });
        init.insert(id);
    }
    let mut avail: Vec<BTreeSet<ActionId>> = Vec::new();
    let mut succ: Vec<BTreeMap<ActionId, Vec<StateId>>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (fl, pos) = states[i].clone();
        let mut av = BTreeSet::new();
        let mut row = BTreeMap::new();
        for (ai, a) in q.actions.iter().enumerate() {
            if !q.applicable(a, &fl, &pos) {
                continue;
            }
            av.insert(ai);
            let fl2 = q.apply_fluents(a, &fl);
            let mut outs: Vec<Vec<bool>> = vec![Vec::new()];
            for (xi, x) in q.variables.iter().enumerate() {
                let opts: &[bool] = match (a.effect(x), pos[xi]) {
                    (Some(Effect::Inc), _) => &[true],
                    (Some(Effect::Dec), true) => &[true, false],
                    (_, b) => {
                        if b {
                            &[true]
                        } else {
                            &[false]
                        }
                    }
                };
                outs = outs
                    .into_iter()
                    .flat_map(|pre| {
                        opts.iter().map(move |&b| {
                            let mut w = pre.clone();
                            w.push(b);
                            w
                        })
                    })
                    .collect();
            }
            let mut ids = Vec::new();
            for p2 in outs {
                let v = (fl2.clone(), p2);
                let id = match index.get(&v) {
                    Some(&id) => id,
                    None => {
                        states.push(v.clone());
                        index.insert(v, states.len() - 1);
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

    let names: Vec<String> = states.iter().map(|(f, p)| q.valuation_name(f, p)).collect();
    let goal = states.iter().map(|(f, p)| q.is_goal_valuation(f, p)).collect();
    let obs = (0..states.len()).collect();
    let actions = q.actions.iter().map(|a| a.name.clone()).collect();
    let mut p = from_parts(names.clone(), init, names, actions, goal, avail, obs, succ);
    p.set_qnp_labels(Some(qnp_labels(q, &states, Some)));
    Ok(p)
}

/// The boolean abstraction as a planning description with nondeterministic
/// effects.
pub fn describe_projection(q: &Qnp) -> String {
    let mut out = String::new();
    let mut atoms: Vec<String> = q.fluents.clone();
    for x in &q.variables {
        atoms.push(format!("{x}=0"));
        atoms.push(format!("{x}>0"));
    }
    let _ = writeln!(out, "atoms {}", atoms.join(" "));
    let mut init: Vec<String> = q.init.iter().cloned().collect();
    for (x, iv) in q.variables.iter().zip(&q.init_values) {
        match (iv.zero_possible(), iv.positive_possible()) {
            (true, true) => init.push(format!("({x}=0 | {x}>0)")),
            (true, false) => init.push(format!("{x}=0")),
            _ => init.push(format!("{x}>0")),
        }
    }
    let _ = writeln!(out, "init {}", init.join(" "));
    for a in &q.actions {
        let pre: Vec<String> = a.pre.iter().map(Literal::to_string).collect();
        let _ = writeln!(out, "action {}", a.name);
        if !pre.is_empty() {
            let _ = writeln!(out, "  pre {}", pre.join(" "));
        }
        let mut eff: Vec<String> = a.add.clone();
        eff.extend(a.del.iter().map(|f| format!("!{f}")));
        for (x, e) in &a.effects {
            eff.push(match e {
                Effect::Inc => format!("{x}>0 !{x}=0"),
                Effect::Dec => format!("(when {x}>0 ({x}>0 | {x}=0))"),
            });
        }
        if !eff.is_empty() {
            let _ = writeln!(out, "  eff {}", eff.join(" "));
        }
    }
    let goal: Vec<String> = q.goal.iter().map(Literal::to_string).collect();
    let _ = writeln!(out, "goal {}", goal.join(" "));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::qnp::{instantiate_all, similar, two_valued_instance, InitValues};

    #[test]
    fn counter_projection_is_the_two_state_problem() {
        let q = catalog::counter_qnp(InitValues::single(5));
        let p = syntactic_projection(&q).unwrap();
        let names: Vec<&str> = p.states().iter().map(String::as_str).collect();
        assert_eq!(names, vec!["X>0", "X=0"]);
        assert_eq!(p.step_named("X>0", "Dec").unwrap(), vec!["X>0", "X=0"]);
        assert!(p.is_fully_observable());
        assert_eq!(p.init().len(), 1);
    }

    #[test]
    fn zero_or_positive_start_gives_two_initial_states() {
        let q = catalog::counter_qnp(InitValues::Set(BTreeSet::from([0, 3])));
        assert_eq!(syntactic_projection(&q).unwrap().init().len(), 2);
    }

    #[test]
    fn two_variable_projection() {
        let q = catalog::two_variable_qnp(InitValues::single(20), InitValues::single(30));
        let p = syntactic_projection(&q).unwrap();
        assert_eq!(p.num_states(), 4);
        let mut a = p.step_named("X>0,Y=0", "a").unwrap();
        a.sort();
        assert_eq!(a, vec!["X=0,Y>0", "X>0,Y>0"]);
    }

    #[test]
    fn two_valued_instance_matches_projection() {
        for entry in catalog::qnp_suite() {
            let q = entry.qnp;
            let t = two_valued_instance(&q);
            assert!(similar(&q, &t));
            let inst = instantiate_all(&t, 1).unwrap().problem;
            let proj = syntactic_projection(&q).unwrap();
            assert_eq!(inst.num_states(), proj.num_states(), "{}", entry.name);
            let rename = |s: &str| s.replace("=1", ">0");
            for (s, a, t) in inst.transitions() {
                let ps = proj.state_id(&rename(inst.state_name(s))).unwrap();
                let pt = rename(inst.state_name(t));
                let pa = proj.action_id(inst.action_name(a)).unwrap();
                assert!(proj.successors(ps, pa).iter().any(|&u| proj.state_name(u) == pt));
            }
            assert_eq!(inst.transitions().count(), proj.transitions().count(), "{}", entry.name);
        }
    }

    #[test]
    fn description_mentions_the_nondeterministic_decrement() {
        let q = catalog::counter_qnp(InitValues::single(5));
        let d = describe_projection(&q);
        assert!(d.contains("(when X>0 (X>0 | X=0))"), "{d}");
    }
}
