//! Ready-made problems: the counter and its projection, small QNPs, and a
//! suite of QNPs with known solvability.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::Result;
use crate::ltl::Alphabet;
use crate::model::{Policy, Pondp, PondpClass, QnpLabels};
use crate::omega::Dpw;
use crate::qnp::{parse_qnp, Effect, InitValues, Literal, Qnp, QnpAction, Semantics};

fn counter_labels(p: &Pondp) -> QnpLabels {
    QnpLabels {
        variables: vec!["X".into()],
        zero: vec![p.obs_id("X=0").into_iter().collect()],
        inc: vec![p.action_id("Inc").into_iter().collect()],
        dec: vec![p.action_id("Dec").into_iter().collect()],
    }
}

fn counter_avail() -> BTreeMap<String, BTreeSet<String>> {
    let both: BTreeSet<String> = ["Inc", "Dec"].map(String::from).into();
    BTreeMap::from([("X=0".into(), both.clone()), ("X>0".into(), both)])
}

/// A counter starting at `x0` with values `0..=bound`. `Inc` at the bound
/// and `Dec` at zero leave the value unchanged. The goal is `X=0`.
pub fn counter_problem(x0: u64, bound: u64) -> Pondp {
    assert!(x0 <= bound && bound >= 1, "counter needs x0 <= bound and bound >= 1");
    let name = |v: u64| format!("X={v}");
    let mut b = Pondp::builder().observations(["X=0", "X>0"]).actions(["Inc", "Dec"]);
    for v in 0..=bound {
        b = b.state(&name(v), if v == 0 { "X=0" } else { "X>0" });
    }
    for v in 0..=bound {
        b = b.transition(&name(v), "Inc", [name((v + 1).min(bound))]).transition(
            &name(v),
            "Dec",
            [name(v.saturating_sub(1))],
        );
    }
    let mut p = b
        .initial(&name(x0))
        .goal("X=0")
        .class_info(["X=0"], counter_avail())
        .build()
        .expect("well-formed counter");
    let labels = counter_labels(&p);
    p.set_qnp_labels(Some(labels));
    p
}

/// The two-state abstraction of the counter: `Dec` at `X>0` may or may not
/// reach zero.
pub fn counter_projection() -> Pondp {
    let mut p = Pondp::builder()
        .fo_state("X>0")
        .fo_state("X=0")
        .actions(["Inc", "Dec"])
        .initial("X>0")
        .goal("X=0")
        .transition("X>0", "Dec", ["X>0", "X=0"])
        .transition("X=0", "Dec", ["X=0"])
        .transition("X>0", "Inc", ["X>0"])
        .transition("X=0", "Inc", ["X>0"])
        .class_info(["X=0"], counter_avail())
        .build()
        .expect("well-formed projection");
    let labels = counter_labels(&p);
    p.set_qnp_labels(Some(labels));
    p
}

/// Counters with the given starting values, as one class.
pub fn counter_class(starts: &[u64], bound: u64) -> Result<PondpClass> {
    PondpClass::from_members(starts.iter().map(|&x| counter_problem(x, bound)).collect())
}

/// Hand-built parity automaton for `((F G !Inc & G F Dec) -> G F X=0) -> F X=0`
/// over letters `X=0`, `X>0`, `Inc`, `Dec`: a waiting state, one state per
/// last letter with priorities 1 (`X>0`), 3 (`Inc`) and 2 (`Dec`), and an
/// accepting sink entered on `X=0`. Other letters act like `X>0`.
pub fn counter_dpw(alphabet: Arc<Alphabet>) -> Result<Dpw> {
    let zero = alphabet.letter("X=0")?;
    let inc = alphabet.letter("Inc")?;
    let dec = alphabet.letter("Dec")?;
    const SINK: u32 = 4;
    let row: Vec<u32> = (0..alphabet.len())
        .map(|l| match l {
            _ if l == zero => SINK,
            _ if l == inc => 2,
            _ if l == dec => 3,
            _ => 1,
        })
        .collect();
    Ok(Dpw {
        delta: vec![row.clone(), row.clone(), row.clone(), row, vec![SINK; alphabet.len()]],
        alphabet,
        initial: 0,
        priority: vec![1, 1, 3, 2, 2],
    })
}

/// One variable `X`, a single action `Dec` with precondition `X>0`, goal `X=0`.
pub fn counter_qnp(init: InitValues) -> Qnp {
    let mut dec = QnpAction::new("Dec");
    dec.pre.push(Literal::Positive("X".into()));
    dec.effects.insert("X".into(), Effect::Dec);
    Qnp {
        fluents: Vec::new(),
        init: BTreeSet::new(),
        variables: vec!["X".into()],
        init_values: vec![init],
        semantics: vec![Semantics::Unit],
        actions: vec![dec],
        goal: vec![Literal::Zero("X".into())],
    }
}

/// Variables `X` and `Y`; `a` decrements `X` and increments `Y`, `b`
/// decrements `Y`; goal `X=0, Y=0`.
pub fn two_variable_qnp(x: InitValues, y: InitValues) -> Qnp {
    let mut a = QnpAction::new("a");
    a.pre.push(Literal::Positive("X".into()));
    a.effects.insert("X".into(), Effect::Dec);
    a.effects.insert("Y".into(), Effect::Inc);
    let mut b = QnpAction::new("b");
    b.pre.push(Literal::Positive("Y".into()));
    b.effects.insert("Y".into(), Effect::Dec);
    Qnp {
        fluents: Vec::new(),
        init: BTreeSet::new(),
        variables: vec!["X".into(), "Y".into()],
        init_values: vec![x, y],
        semantics: vec![Semantics::Unit; 2],
        actions: vec![a, b],
        goal: vec![Literal::Zero("X".into()), Literal::Zero("Y".into())],
    }
}

/// `a` when `X>0` and `Y=0`, `b` when `Y>0`.
pub fn two_variable_policy() -> Policy {
    Policy::memoryless([("X>0,Y=0", "a"), ("X>0,Y>0", "b"), ("X=0,Y>0", "b")])
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub qnp: Qnp,
    /// Whether some policy reaches the goal under the QNP constraints.
    pub solvable: bool,
}

const SUITE: &[(&str, bool, &str)] = &[
    (
        "counter",
        true,
        "vars X\ninit_values X in {5}\naction Dec pre X>0 dec X\ngoal X=0\n",
    ),
    (
        "counter-maybe-zero",
        true,
        "vars X\ninit_values X in {0,3}\naction Dec pre X>0 dec X\ngoal X=0\n",
    ),
    (
        "increment-only",
        false,
        "vars X\ninit_values X in [1,4]\naction Up inc X\ngoal X=0\n",
    ),
    (
        "two-counters",
        true,
        "vars X Y\ninit_values X in {20}\ninit_values Y in {30}\n\
         action a pre X>0 dec X inc Y\naction b pre Y>0 dec Y\ngoal X=0 Y=0\n",
    ),
    (
        "two-counters-x-goal",
        true,
        "vars X Y\ninit_values X in [1,5]\ninit_values Y in {0}\n\
         action a pre X>0 dec X inc Y\naction b pre Y>0 dec Y\ngoal X=0\n",
    ),
    (
        "ping-pong",
        false,
        "vars X Y\ninit_values X in {3}\ninit_values Y in {0}\n\
         action a pre X>0 dec X inc Y\naction b pre Y>0 dec Y inc X\ngoal X=0 Y=0\n",
    ),
    (
        "three-counters",
        true,
        "vars X Y Z\ninit_values X in {2}\ninit_values Y in {1}\ninit_values Z in {0}\n\
         action a pre X>0 dec X inc Y\naction b pre Y>0 dec Y inc Z\naction c pre Z>0 dec Z\n\
         goal X=0 Y=0 Z=0\n",
    ),
    (
        "gripper",
        true,
        "fluents holding\nvars X\ninit_values X in [1,10]\n\
         action pick pre !holding X>0 add holding dec X\naction drop pre holding del holding\n\
         goal !holding X=0\n",
    ),
    (
        "door",
        true,
        "fluents open\nvars X\ninit_values X in {4}\n\
         action open_door pre !open add open\naction pass pre open X>0 del open dec X\ngoal X=0\n",
    ),
    (
        "jammed",
        false,
        "fluents broken\nvars X\ninit broken\ninit_values X in {2}\n\
         action smash add broken\naction Dec pre X>0 !broken dec X\ngoal X=0\n",
    ),
    (
        "reach-positive",
        true,
        "vars X\ninit_values X in {0}\naction Up inc X\ngoal X>0\n",
    ),
    (
        "fill-then-drain",
        true,
        "fluents p\nvars X\ninit_values X in {0,2}\n\
         action fill pre !p add p inc X\naction Dec pre X>0 dec X\ngoal p X=0\n",
    ),
    (
        "refill-forced",
        false,
        "fluents p\nvars X\ninit_values X in {3}\n\
         action a pre X>0 !p add p dec X\naction b pre p del p inc X\ngoal X=0\n",
    ),
    (
        "two-independent",
        true,
        "vars X Y\ninit_values X in [1,5]\ninit_values Y in {0,2}\n\
         action a pre X>0 dec X\naction b pre Y>0 dec Y\ngoal X=0 Y=0\n",
    ),
];

/// Closure-eligible QNPs with at most three variables, solvable and not.
pub fn qnp_suite() -> Vec<SuiteEntry> {
    SUITE
        .iter()
        .map(|&(name, solvable, text)| SuiteEntry {
            name,
            qnp: parse_qnp(text).expect("suite entries parse"),
            solvable,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_lasso, parse_ltl, Word};

    #[test]
    fn counter_dpw_has_five_states_and_three_priorities() {
        let s = Arc::new(Alphabet::interleaved(["X=0", "X>0"], ["Inc", "Dec"]).unwrap());
        let d = counter_dpw(s.clone()).unwrap();
        assert_eq!(d.num_states(), 5);
        assert_eq!(d.priorities(), vec![1, 2, 3]);
        let f = parse_ltl("((F G !Inc & G F Dec) -> G F X=0) -> F X=0", &s).unwrap();
        for (p, c) in [
            (vec![], vec![1, 3]),
            (vec![1, 2], vec![1, 3]),
            (vec![], vec![1, 2]),
            (vec![1, 3, 0], vec![1, 2]),
        ] {
            let w = Word::new(p, c);
            assert_eq!(d.accepts(&w).unwrap(), eval_lasso(&f, &w).unwrap());
        }
    }

    #[test]
    fn suite_is_closure_eligible() {
        let suite = qnp_suite();
        assert!(suite.len() >= 10);
        for e in &suite {
            assert!(e.qnp.closure_issues().is_empty(), "{}", e.name);
            assert!(e.qnp.variables.len() <= 3);
        }
        assert!(suite.iter().any(|e| !e.solvable));
    }

    #[test]
    fn counter_class_validates() {
        let c = counter_class(&[1, 3, 5], 6).unwrap();
        assert!(c.validate().is_empty());
    }
}
