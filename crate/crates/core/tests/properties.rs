use std::collections::{BTreeMap, VecDeque};

use genplan_core::catalog;
use genplan_core::constraints::qnp_constraints;
use genplan_core::fond::{strong_cyclic_plan, verify_strong_cyclic};
use genplan_core::io::{problem_from_json, problem_to_json};
use genplan_core::model::{check_solution, run_policy, Mode, Policy, Resolver, RunOptions};
use genplan_core::omega::{solve_parity, verify_strategy, ParityGame, Player};
use genplan_core::projection::{lift_trajectory, observation_projection, same_problem};
use genplan_core::qnp::{instantiate, parse_qnp, InitValues};
use genplan_core::Fondp;
use proptest::prelude::*;

/// `(n, transitions)` where `transitions[s][a]` is `None` when
/// `a` is unavailable at `s` and otherwise a nonempty successor set.
type Raw = (usize, Vec<Vec<Option<Vec<usize>>>>);

fn raw_problem() -> impl Strategy<Value = Raw> {
    (2usize..=5).prop_flat_map(|n| {
        let succ = prop::collection::btree_set(0..n, 1..=n).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        let row = prop::collection::vec(prop::option::weighted(0.7, succ), 2);
        (Just(n), prop::collection::vec(row, n))
    })
}

/// State 0 is initial and state `n-1` the goal.
fn build(raw: &Raw) -> Fondp {
    let (n, rows) = raw;
    let name = |i: usize| format!("s{i}");
    let mut b = Fondp::builder().actions(["a0", "a1"]);
    for i in 0..*n {
        b = b.fo_state(&name(i));
    }
    for (s, row) in rows.iter().enumerate() {
        for (a, succ) in row.iter().enumerate() {
            if let Some(ts) = succ {
                b = b.transition(&name(s), &format!("a{a}"), ts.iter().map(|&t| name(t)));
            }
        }
    }
    b.initial("s0").goal(&name(n - 1)).build().unwrap()
}

/// Whether the memoryless choice `pick` is a fair solution: every state it
/// reaches is a goal or has a chosen action, and a goal stays reachable from
/// each of them.
fn fair_by_hand(raw: &Raw, pick: &[Option<usize>]) -> bool {
    let (n, rows) = raw;
    let goal = n - 1;
    let next = |s: usize| -> Vec<usize> {
        if s == goal {
            return Vec::new();
        }
        pick[s].map(|a| rows[s][a].clone().unwrap()).unwrap_or_default()
    };
    let reach = |from: usize| {
        let mut seen = vec![false; *n];
        let mut q = VecDeque::from([from]);
        seen[from] = true;
        while let Some(s) = q.pop_front() {
            for t in next(s) {
                if !seen[t] {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        seen
    };
    let from_init = reach(0);
    (0..*n)
        .filter(|&s| from_init[s])
        .all(|s| (s == goal || pick[s].is_some()) && reach(s)[goal])
}

fn exists_fair_policy(raw: &Raw) -> bool {
    let (n, rows) = raw;
    let options: Vec<Vec<Option<usize>>> = rows
        .iter()
        .map(|row| {
            let acts: Vec<Option<usize>> = (0..row.len()).filter(|&a| row[a].is_some()).map(Some).collect();
            if acts.is_empty() {
                vec![None]
            } else {
                acts
            }
        })
        .collect();
    let mut idx = vec![0usize; *n];
    loop {
        let pick: Vec<Option<usize>> = (0..*n).map(|s| options[s][idx[s]]).collect();
        if fair_by_hand(raw, &pick) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == *n {
                return false;
            }
            idx[i] += 1;
            if idx[i] < options[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn game() -> impl Strategy<Value = ParityGame> {
    (1usize..=7).prop_flat_map(|n| {
        let node = (any::<bool>(), 0u32..5, prop::collection::btree_set(0..n, 1..=3));
        prop::collection::vec(node, n).prop_map(|nodes| {
            let owner = nodes
                .iter()
                .map(|(e, _, _)| if *e { Player::Even } else { Player::Odd })
                .collect();
            let priority = nodes.iter().map(|(_, p, _)| *p).collect();
            let succ = nodes.into_iter().map(|(_, _, s)| s.into_iter().collect()).collect();
            ParityGame::new(owner, priority, succ)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn planner_matches_policy_enumeration(raw in raw_problem()) {
        let p = build(&raw);
        let plan = strong_cyclic_plan(&p).unwrap();
        prop_assert_eq!(plan.is_some(), exists_fair_policy(&raw));
        if let Some(mu) = plan {
            prop_assert!(verify_strong_cyclic(&p, &mu).unwrap().is_solution());
        }
    }

    #[test]
    fn fair_verification_matches_hand_check(raw in raw_problem(), choice in prop::collection::vec(0usize..2, 5)) {
        let p = build(&raw);
        let pick: Vec<Option<usize>> = (0..raw.0)
            .map(|s| {
                let c = choice[s];
                [c, 1 - c].into_iter().find(|&a| raw.1[s][a].is_some())
            })
            .collect();
        let pairs: Vec<(String, String)> = pick
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != raw.0 - 1)
            .filter_map(|(s, a)| a.map(|a| (format!("s{s}"), format!("a{a}"))))
            .collect();
        let mu = Policy::memoryless(pairs);
        let v = check_solution(&p, &mu, Mode::Fair).unwrap();
        prop_assert_eq!(v.is_solution(), fair_by_hand(&raw, &pick));
    }

    #[test]
    fn problems_survive_json(raw in raw_problem()) {
        let p = build(&raw);
        let back = problem_from_json(&problem_to_json(&p)).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn zielonka_regions_come_with_winning_strategies(g in game()) {
        let sol = solve_parity(&g);
        prop_assert!(verify_strategy(&g, &sol, Player::Even));
        prop_assert!(verify_strategy(&g, &sol, Player::Odd));
    }

    #[test]
    fn counter_classes_project_to_the_abstraction(starts in prop::collection::btree_set(1u64..12, 1..5)) {
        let starts: Vec<u64> = starts.into_iter().collect();
        let class = catalog::counter_class(&starts, 12).unwrap();
        let proj = observation_projection(&class).unwrap();
        prop_assert!(same_problem(&proj.problem, &catalog::counter_projection()));
    }

    #[test]
    fn lifted_runs_keep_length_and_goal(x in 0u64..6, y in 0u64..6, seed in any::<u64>()) {
        let q = catalog::two_variable_qnp(InitValues::Range { lo: 0, hi: 5 }, InitValues::Range { lo: 0, hi: 5 });
        let v: BTreeMap<String, u64> = [("X".to_string(), x), ("Y".to_string(), y)].into();
        let m = instantiate(&q, &v, 6).unwrap().problem;
        let mu = catalog::two_variable_policy();
        let opts = RunOptions { max_steps: 100, ..RunOptions::default() };
        let out = run_policy(&m, &mu, &mut Resolver::seeded(seed), opts).unwrap();
        let t = out.trajectory();
        let lt = lift_trajectory(&m, &t).unwrap();
        prop_assert_eq!(lt.states().len(), t.states().len());
        prop_assert_eq!(lt.is_finite(), t.is_finite());
        prop_assert_eq!(out.len(), (2 * x + y) as usize);
    }

    #[test]
    fn canonical_policy_solves_every_two_variable_instance(x in 0u64..5, y in 0u64..5) {
        let q = catalog::two_variable_qnp(InitValues::Range { lo: 0, hi: 4 }, InitValues::Range { lo: 0, hi: 4 });
        let v: BTreeMap<String, u64> = [("X".to_string(), x), ("Y".to_string(), y)].into();
        let m = instantiate(&q, &v, 5).unwrap().problem;
        let c = qnp_constraints(&m).unwrap();
        let verdict = check_solution(&m, &catalog::two_variable_policy(), Mode::Under(&c)).unwrap();
        prop_assert!(verdict.is_solution());
    }

    #[test]
    fn qnp_text_round_trips(lo in 0u64..4, width in 0u64..4, inc in any::<bool>(), goal_zero in any::<bool>()) {
        let text = format!(
            "fluents p\nvars X\ninit p\ninit_values X in [{lo},{}]\naction go pre p X>0 dec X\naction back pre !p {} del p\ngoal {}\n",
            lo + width,
            if inc { "inc X" } else { "" },
            if goal_zero { "X=0" } else { "X>0" },
        );
        let q = parse_qnp(&text).unwrap();
        prop_assert_eq!(parse_qnp(&q.to_string()).unwrap(), q);
    }
}
