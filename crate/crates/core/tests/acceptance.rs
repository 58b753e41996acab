//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use genplan_core::catalog;
use genplan_core::constraints::{qnp_constraint, qnp_constraints};
use genplan_core::fond::{strong_cyclic_plan, verify_strong_cyclic};
use genplan_core::ltl::{eval_lasso, ltl_to_nba, parse_ltl, Alphabet, Expr, Formula, LtlEvaluator, Word};
use genplan_core::model::{
    check_solution, is_generated_by, is_goal_reaching, run_policy, simulate, Mode, Policy, Resolver, RunOptions,
    SimRun, TransitionSystem, Verdict,
};
use genplan_core::omega::{ltl_to_dpw, nba_to_dpw, solve_parity, synthesize, ParityGame, Player};
use genplan_core::projection::{lift_trajectory, observation_projection};
use genplan_core::qnp::{close_qnp, erase_commitments, instantiate, syntactic_projection, InitValues, QnpSystem};
use genplan_core::{PondpClass, TrajectoryConstraint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn vals(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Every word of length `len` over `k` letters, as the base-`k` digits of `i`.
fn nth_word(mut i: usize, len: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    for _ in 0..len {
        out.push(i % k);
        i /= k;
    }
}

fn counter_automaton() -> Outcome {
    let sigma = Arc::new(Alphabet::interleaved(["X=0", "X>0"], ["Inc", "Dec"]).map_err(|e| e.to_string())?);
    let phi = parse_ltl("((F G !Inc & G F Dec) -> G F X=0) -> F X=0", &sigma).map_err(|e| e.to_string())?;
    let pipeline = ltl_to_dpw(&phi, 1_000_000).map_err(|e| e.to_string())?;
    let hand = catalog::counter_dpw(sigma.clone()).map_err(|e| e.to_string())?;
    ensure!(
        hand.num_states() == 5 && hand.priorities().len() == 3,
        "hand-coded automaton is not 5 states / 3 priorities"
    );
    let mut eval = LtlEvaluator::new(&phi);
    let (mut prefix, mut cycle) = (Vec::new(), Vec::new());
    let mut checked = 0usize;
    for pl in 0..=6 {
        for pi in 0..4usize.pow(pl as u32) {
            nth_word(pi, pl, 4, &mut prefix);
            for cl in 1..=6 {
                for ci in 0..4usize.pow(cl as u32) {
                    nth_word(ci, cl, 4, &mut cycle);
                    let want = eval.eval(&prefix, &cycle);
                    // The bitmask evaluator is cross-checked against the reference one on a sample.
                    if checked.is_multiple_of(4099) {
                        let w = Word::new(prefix.clone(), cycle.clone());
                        ensure!(
                            eval_lasso(&phi, &w).unwrap() == want,
                            "evaluators disagree on {prefix:?} ({cycle:?})^w"
                        );
                    }
                    ensure!(
                        pipeline.accepts_unchecked(&prefix, &cycle) == want,
                        "pipeline DPW wrong on {prefix:?} ({cycle:?})^w"
                    );
                    ensure!(
                        hand.accepts_unchecked(&prefix, &cycle) == want,
                        "hand-coded DPW wrong on {prefix:?} ({cycle:?})^w"
                    );
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} lassos; pipeline DPW has {} states, priorities {:?}",
        pipeline.num_states(),
        pipeline.priorities()
    ))
}

fn counter_synthesis() -> Outcome {
    let po = catalog::counter_projection();
    let psi = qnp_constraint(&po, "X").map_err(|e| e.to_string())?;
    let r = synthesize(&po, &psi).map_err(|e| e.to_string())?;
    let mu = r
        .policy()
        .ok_or("synthesis under the QNP constraint is unrealizable")?
        .clone();
    let v = check_solution(&po, &mu, Mode::Under(&psi)).map_err(|e| e.to_string())?;
    ensure!(v.is_solution(), "synthesized policy fails verification: {v}");
    for x0 in [1u64, 5, 10, 100] {
        let p = catalog::counter_problem(x0, x0);
        let opts = RunOptions {
            stop_at_goal: true,
            ..RunOptions::default()
        };
        let out = run_policy(&p, &mu, &mut Resolver::First, opts).map_err(|e| e.to_string())?;
        let t = out.trajectory();
        ensure!(is_goal_reaching(&p, &t).unwrap(), "X0={x0}: goal not reached");
        ensure!(out.len() == x0 as usize, "X0={x0}: {} steps", out.len());
    }
    let r = synthesize(&po, &TrajectoryConstraint::trivial()).map_err(|e| e.to_string())?;
    ensure!(!r.is_realizable(), "synthesis without constraint is realizable");
    Ok(format!(
        "policy with {} memory states; X0 in {{1,5,10,100}} take X0 steps",
        mu.memory_states().len()
    ))
}

fn two_variable() -> Outcome {
    let q = catalog::two_variable_qnp(
        InitValues::Range { lo: 10, hi: 20 },
        InitValues::Range { lo: 15, hi: 30 },
    );
    let closed = close_qnp(&q).map_err(|e| e.to_string())?;
    let pc = syntactic_projection(&closed).map_err(|e| e.to_string())?;
    let mu = strong_cyclic_plan(&pc)
        .map_err(|e| e.to_string())?
        .ok_or("no strong-cyclic plan")?;
    let v = verify_strong_cyclic(&pc, &mu).map_err(|e| e.to_string())?;
    ensure!(v == Verdict::FairSolution, "plan verdict {v}");

    let canonical = catalog::two_variable_policy();
    let sys = QnpSystem::new(&q, &vals(&[("X", 20), ("Y", 30)])).map_err(|e| e.to_string())?;
    let run = simulate(&sys, &canonical, &mut Resolver::First, RunOptions::default()).map_err(|e| e.to_string())?;
    let SimRun::Finite { steps, last } = run else {
        return Err("canonical run from X=20, Y=30 does not terminate".into());
    };
    ensure!(
        sys.is_goal(&last) && steps.len() == 70,
        "canonical run: {} steps",
        steps.len()
    );

    let planned = erase_commitments(&q, &mu).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = RunOptions {
        max_steps: 100_000,
        stop_at_goal: true,
        detect_lasso: true,
    };
    for seed in 0..10 {
        let sys = QnpSystem::sample(&q, &mut rng).map_err(|e| e.to_string())?;
        for policy in [&canonical, &planned] {
            let run = simulate(&sys, policy, &mut Resolver::seeded(seed), opts).map_err(|e| e.to_string())?;
            match run {
                SimRun::Finite { last, .. } if sys.is_goal(&last) => {}
                other => {
                    return Err(format!(
                        "seed {seed}: run from {:?} ends without goal after {} steps",
                        sys.initial(),
                        other.steps()
                    ))
                }
            }
        }
    }
    Ok(format!(
        "plan of {} rules is FAIR_SOLUTION; 70 steps from (20,30); 10 sampled runs reach the goal",
        mu.outputs().count()
    ))
}

fn cross_engine() -> Outcome {
    let suite = catalog::qnp_suite();
    ensure!(suite.len() >= 10, "suite has {} entries", suite.len());
    let mut solvable = 0;
    for e in &suite {
        ensure!(
            e.qnp.variables.len() <= 3 && e.qnp.closure_issues().is_empty(),
            "{}: not closure-eligible",
            e.name
        );
        let pc = syntactic_projection(&close_qnp(&e.qnp).map_err(|x| x.to_string())?).map_err(|x| x.to_string())?;
        let fond = strong_cyclic_plan(&pc).map_err(|x| x.to_string())?;
        if let Some(mu) = &fond {
            let v = verify_strong_cyclic(&pc, mu).map_err(|x| x.to_string())?;
            ensure!(v.is_solution(), "{}: FOND plan fails verification: {v}", e.name);
        }
        let p = syntactic_projection(&e.qnp).map_err(|x| x.to_string())?;
        let c = qnp_constraints(&p).map_err(|x| x.to_string())?;
        let r = synthesize(&p, &c).map_err(|x| format!("{}: {x}", e.name))?;
        if let Some(mu) = r.policy() {
            let v = check_solution(&p, mu, Mode::Under(&c)).map_err(|x| x.to_string())?;
            ensure!(
                v.is_solution(),
                "{}: synthesized policy fails verification: {v}",
                e.name
            );
        }
        ensure!(
            fond.is_some() == r.is_realizable(),
            "{}: FOND says {}, synthesis says {}",
            e.name,
            fond.is_some(),
            r.is_realizable()
        );
        ensure!(
            fond.is_some() == e.solvable,
            "{}: expected solvable = {}",
            e.name,
            e.solvable
        );
        if let Some(mu) = &fond {
            let erased = erase_commitments(&e.qnp, mu).map_err(|x| x.to_string())?;
            let v = check_solution(&p, &erased, Mode::Under(&c)).map_err(|x| x.to_string())?;
            ensure!(
                v.is_solution(),
                "{}: FOND plan without commitments fails under C_V: {v}",
                e.name
            );
        }
        solvable += usize::from(e.solvable);
    }
    Ok(format!("{} QNPs ({solvable} solvable) agree", suite.len()))
}

fn random_game(rng: &mut ChaCha8Rng) -> ParityGame {
    let n = rng.random_range(1..=8);
    let owner = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                Player::Even
            } else {
                Player::Odd
            }
        })
        .collect();
    let priority = (0..n).map(|_| rng.random_range(0..4)).collect();
    let succ = (0..n)
        .map(|_| {
            let d = rng.random_range(1..=3);
            let mut s: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    ParityGame::new(owner, priority, succ)
}

/// Nodes from which Even wins: some positional Even strategy leaves no
/// reachable cycle whose largest priority is odd. Such a cycle exists iff
/// some node with odd priority `p` lies on a cycle through nodes of
/// priority at most `p`.
fn brute_force_even(g: &ParityGame) -> Vec<bool> {
    let n = g.priority.len();
    let even: Vec<usize> = (0..n).filter(|&v| g.owner[v] == Player::Even).collect();
    let mut win = vec![false; n];
    let mut choice = vec![0usize; even.len()];
    loop {
        let mut succ = g.succ.clone();
        for (i, &v) in even.iter().enumerate() {
            succ[v] = vec![g.succ[v][choice[i]]];
        }
        let reach = |from: usize, allowed: &dyn Fn(usize) -> bool| -> Vec<bool> {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            seen[from] = true;
            while let Some(v) = stack.pop() {
                for &w in &succ[v] {
                    if !seen[w] && allowed(w) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let bad: Vec<bool> = (0..n)
            .map(|v| {
                let p = g.priority[v];
                p % 2 == 1 && {
                    let ok = |w: usize| g.priority[w] <= p;
                    succ[v].iter().any(|&w| ok(w) && reach(w, &ok)[v])
                }
            })
            .collect();
        for (v, w) in win.iter_mut().enumerate() {
            if !*w && !reach(v, &|_| true).iter().enumerate().any(|(u, &r)| r && bad[u]) {
                *w = true;
            }
        }
        let mut i = 0;
        loop {
            if i == even.len() {
                return win;
            }
            choice[i] += 1;
            if choice[i] < g.succ[even[i]].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn parity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..200 {
        let g = random_game(&mut rng);
        let sol = solve_parity(&g);
        let want = brute_force_even(&g);
        for (v, &even) in want.iter().enumerate() {
            ensure!(
                sol.wins(Player::Even, v) == even,
                "game {k}, node {v}: solver and enumeration disagree"
            );
        }
    }
    Ok("200 games agree".into())
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize, letters: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..10) {
            0 => Expr::True,
            1 => Expr::False,
            2 => Expr::letters((0..letters).filter(|_| rng.random_bool(0.5))),
            _ => Expr::letter(rng.random_range(0..letters)),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..10) {
        0 => random_expr(rng, d, letters).not(),
        1 => random_expr(rng, d, letters).and(random_expr(rng, d, letters)),
        2 => random_expr(rng, d, letters).or(random_expr(rng, d, letters)),
        3 => random_expr(rng, d, letters).implies(random_expr(rng, d, letters)),
        4 => random_expr(rng, d, letters).next(),
        5 => random_expr(rng, d, letters).until(random_expr(rng, d, letters)),
        6 => random_expr(rng, d, letters).release(random_expr(rng, d, letters)),
        7 => random_expr(rng, d, letters).eventually(),
        8 => random_expr(rng, d, letters).always(),
        _ if d > 0 => random_expr(rng, d - 1, letters).always().eventually(),
        _ => random_expr(rng, d, letters).eventually(),
    }
}

fn ltl_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let names = ["a", "b", "c", "d"];
    let mut checks = 0;
    for k in 0..1000 {
        let size = rng.random_range(1..=4);
        let sigma = Arc::new(Alphabet::plain(names[..size].iter().copied()).map_err(|e| e.to_string())?);
        let f = Formula::new(sigma, random_expr(&mut rng, 4, size));
        ensure!(f.expr.depth() <= 4, "generator produced depth {}", f.expr.depth());
        let nba = ltl_to_nba(&f).map_err(|e| e.to_string())?;
        let dpw = nba_to_dpw(&nba).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let pl = rng.random_range(0..=6);
            let cl = rng.random_range(1..=6);
            let w = Word::new(
                (0..pl).map(|_| rng.random_range(0..size)).collect(),
                (0..cl).map(|_| rng.random_range(0..size)).collect(),
            );
            let want = eval_lasso(&f, &w).unwrap();
            ensure!(
                nba.accepts(&w).unwrap() == want,
                "formula {k} `{f}`: NBA wrong on {w:?}"
            );
            ensure!(
                dpw.accepts(&w).unwrap() == want,
                "formula {k} `{f}`: DPW wrong on {w:?}"
            );
            checks += 1;
        }
    }
    Ok(format!("{checks} checks agree"))
}

fn sample_class(rng: &mut ChaCha8Rng) -> PondpClass {
    let members = rng.random_range(1..=3);
    if rng.random_bool(0.5) {
        let bound = rng.random_range(2..=12);
        let starts: Vec<u64> = (0..members).map(|_| rng.random_range(0..=bound)).collect();
        catalog::counter_class(&starts, bound).unwrap()
    } else {
        let bound = rng.random_range(2..=6);
        let q = catalog::two_variable_qnp(
            InitValues::Range { lo: 0, hi: bound },
            InitValues::Range { lo: 0, hi: bound },
        );
        let ms = (0..members)
            .map(|_| {
                let v = vals(&[("X", rng.random_range(0..=bound)), ("Y", rng.random_range(0..=bound))]);
                instantiate(&q, &v, bound).unwrap().problem
            })
            .collect();
        PondpClass::from_members(ms).unwrap()
    }
}

fn random_policy(rng: &mut ChaCha8Rng, po: &genplan_core::Fondp) -> Policy {
    let pairs: Vec<(String, String)> = (0..po.num_states())
        .filter_map(|o| {
            let acts: Vec<usize> = po.avail(o).iter().copied().collect();
            (!acts.is_empty()).then(|| {
                let a = acts[rng.random_range(0..acts.len())];
                (po.obs_name(o).to_string(), po.action_name(a).to_string())
            })
        })
        .collect();
    Policy::memoryless(pairs)
}

fn projection_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut trajectories, mut transfers) = (0, 0);
    for k in 0..20 {
        let class = sample_class(&mut rng);
        let po = observation_projection(&class).map_err(|e| e.to_string())?.problem;
        let c = qnp_constraints(&po).map_err(|e| e.to_string())?;
        let mut policies: Vec<Policy> = (0..5).map(|_| random_policy(&mut rng, &po)).collect();
        if let Some(mu) = synthesize(&po, &c).map_err(|e| e.to_string())?.policy() {
            policies.push(mu.clone());
        }
        if po.qnp_labels().is_some_and(|l| l.variables.len() == 2) {
            policies.push(catalog::two_variable_policy());
        }
        for mu in &policies {
            let on_projection = check_solution(&po, mu, Mode::Under(&c)).map_err(|e| e.to_string())?;
            for (mi, m) in class.members.iter().enumerate() {
                for seed in 0..3 {
                    let opts = RunOptions {
                        max_steps: 200,
                        ..RunOptions::default()
                    };
                    let t = run_policy(m, mu, &mut Resolver::seeded(seed), opts)
                        .map_err(|e| e.to_string())?
                        .trajectory();
                    let lt = lift_trajectory(m, &t).map_err(|e| e.to_string())?;
                    ensure!(
                        lt.check_in(&po).is_ok(),
                        "sample {k}: lifted run is not a projection trajectory"
                    );
                    ensure!(
                        is_goal_reaching(m, &t).unwrap() == is_goal_reaching(&po, &lt).unwrap(),
                        "sample {k}: goal-reaching differs after lifting"
                    );
                    ensure!(
                        is_generated_by(m, mu, &t).unwrap(),
                        "sample {k}: run not generated by its policy"
                    );
                    ensure!(
                        is_generated_by(&po, mu, &lt).unwrap(),
                        "sample {k}: lifted run not generated by the policy"
                    );
                    trajectories += 1;
                }
                if on_projection.is_solution() {
                    let cm = qnp_constraints(m).map_err(|e| e.to_string())?;
                    let v = check_solution(m, mu, Mode::Under(&cm)).map_err(|e| e.to_string())?;
                    ensure!(
                        v.is_solution(),
                        "sample {k}, member {mi}: solution of the projection fails: {v}"
                    );
                    transfers += 1;
                }
            }
        }
    }
    Ok(format!(
        "{trajectories} trajectories lifted; {transfers} member verdicts transferred"
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "1 counter automaton, exhaustive lassos",
            counter_automaton,
            Duration::from_secs(30),
        ),
        ("2 counter synthesis", counter_synthesis, Duration::from_secs(5)),
        ("3 two-variable QNP", two_variable, Duration::from_secs(120)),
        ("4 cross-engine agreement", cross_engine, Duration::from_secs(120)),
        ("5 parity solver vs enumeration", parity_oracle, Duration::from_secs(10)),
        ("6 LTL pipeline agreement", ltl_pipeline, Duration::from_secs(120)),
        (
            "7 projection properties",
            projection_properties,
            Duration::from_secs(120),
        ),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f, limit) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let r = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let r = match r {
            Ok(_) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            r => r,
        };
        match r {
            Ok(detail) => println!("PASS [{name}] {detail} ({took:.2?}, limit {limit:?})"),
            Err(e) => {
                failed += 1;
                println!("FAIL [{name}] {e} ({took:.2?})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
