use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use genplan_core::constraints::TrajectoryConstraint;
use genplan_core::dot::{escape, policy_to_dot, problem_to_dot};
use genplan_core::fond::strong_cyclic_plan;
use genplan_core::io::{class_from_json, problem_from_json, problem_to_json};
use genplan_core::ltl::{parse_ltl, Alphabet};
use genplan_core::model::{
    check_solution_with_budget, simulate, Level, Mode, Policy, Pondp, Resolver, RunOptions, SimRun, StateId,
    TransitionSystem, Verdict,
};
use genplan_core::omega::{ltl_to_dpw, synthesize_with_budget, Dpw, DpwFile, SynthesisResult};
use genplan_core::projection::observation_projection;
use genplan_core::qnp::{close_qnp, parse_qnp, syntactic_projection, QnpSystem};
use genplan_core::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Cli, Command, Format, Global, LevelArg, VerifyMode};

/// How a command ended, short of an input error.
enum Done {
    /// Text for stdout.
    Ok(String),
    /// A negative answer and its reason.
    Negative(Value),
}

/// Bad input: unreadable files, malformed documents, unknown names.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<Done, Failure>;

pub fn run(cli: Cli) -> u8 {
    let g = cli.global;
    let r = match cli.command {
        Command::Project { class, output } => project(&g, &class, output.as_deref()),
        Command::Synthesize {
            problem,
            constraint,
            level,
            output,
        } => synthesize(&g, &problem, &constraint, level, output.as_deref()),
        Command::Qnp2fond { qnp, close, output } => qnp2fond(&g, &qnp, close, output.as_deref()),
        Command::Plan { problem, output } => plan(&g, &problem, output.as_deref()),
        Command::Verify {
            mode,
            problem,
            policy,
            constraint,
            level,
        } => verify(&g, mode, &problem, &policy, constraint.as_deref(), level),
        Command::Simulate {
            problem,
            policy,
            init,
            max_steps,
        } => run_simulation(&g, &problem, &policy, init.as_deref(), max_steps),
        Command::Ltl2dpw {
            formula,
            alphabet,
            problem,
            level,
            output,
        } => ltl2dpw(
            &g,
            &formula,
            alphabet.as_deref(),
            problem.as_deref(),
            level,
            output.as_deref(),
        ),
        Command::Show { file, output } => show(&file, output.as_deref()),
    };
    let (text, code) = match r {
        Ok(Done::Ok(text)) => (text, 0),
        Ok(Done::Negative(reason)) => (format!("{}\n", pretty(&reason)), 1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            let text = match g.format {
                Format::Json => format!("{}\n", pretty(&json!({ "error": msg }))),
                Format::Dot => String::new(),
            };
            (text, 2)
        }
    };
    let _ = std::io::stdout().write_all(text.as_bytes());
    code
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<Pondp, Failure> {
    Ok(problem_from_json(&read(path)?)?)
}

fn load_policy(path: &Path) -> Result<Policy, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn level(l: LevelArg) -> Level {
    match l {
        LevelArg::State => Level::State,
        LevelArg::Observation => Level::Observation,
    }
}

/// Writes `artifact` to `output` and returns a short report, or returns the
/// artifact itself for stdout.
fn deliver(output: Option<&Path>, artifact: String, report: Value) -> Outcome {
    match output {
        Some(path) => {
            fs::write(path, ensure_newline(artifact)).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let mut report = report;
            report["output"] = json!(path.display().to_string());
            Ok(Done::Ok(format!("{}\n", pretty(&report))))
        }
        None => Ok(Done::Ok(ensure_newline(artifact))),
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn problem_artifact(g: &Global, p: &Pondp) -> String {
    match g.format {
        Format::Json => problem_to_json(p),
        Format::Dot => problem_to_dot(p),
    }
}

fn policy_artifact(g: &Global, mu: &Policy) -> String {
    match g.format {
        Format::Json => serde_json::to_string_pretty(mu).expect("policies serialize"),
        Format::Dot => policy_to_dot(mu),
    }
}

fn project(g: &Global, class: &Path, output: Option<&Path>) -> Outcome {
    let class = class_from_json(&read(class)?)?;
    let proj = observation_projection(&class)?;
    let diagnostics: Vec<&str> = proj.diagnostics.iter().map(|d| d.message.as_str()).collect();
    if g.verbose {
        eprintln!(
            "projection: {} observations, {} members",
            proj.problem.num_states(),
            class.members.len()
        );
        for d in &diagnostics {
            eprintln!("diagnostic: {d}");
        }
    }
    let report = json!({
        "states": proj.problem.num_states(),
        "members": class.members.len(),
        "diagnostics": diagnostics,
    });
    deliver(output, problem_artifact(g, &proj.problem), report)
}

fn constraint_of(p: &Pondp, texts: &[String], lvl: LevelArg) -> Result<TrajectoryConstraint, Failure> {
    let parts = texts
        .iter()
        .filter(|t| t.trim() != "true")
        .map(|t| TrajectoryConstraint::from_text(p, t, level(lvl)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match parts.len() {
        0 => TrajectoryConstraint::trivial(),
        1 => parts.into_iter().next().expect("one part"),
        _ => TrajectoryConstraint::all(texts.join(" & "), parts),
    })
}

fn synthesize(g: &Global, problem: &Path, texts: &[String], lvl: LevelArg, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    let c = constraint_of(&p, texts, lvl)?;
    let r = synthesize_with_budget(&p, &c, g.budget)?;
    if g.verbose {
        eprintln!(
            "synthesis: {}",
            serde_json::to_string(r.stats()).expect("stats serialize")
        );
    }
    match r {
        SynthesisResult::Realizable { policy, stats } => {
            let verdict = check_solution_with_budget(&p, &policy, Mode::Under(&c), g.budget)?;
            let mut report = json!({
                "result": "REALIZABLE",
                "constraint": c.name,
                "verification": verdict.to_string(),
                "stats": stats,
            });
            match output {
                Some(_) => deliver(output, policy_artifact(g, &policy), report),
                None if g.format == Format::Dot => Ok(Done::Ok(policy_to_dot(&policy))),
                None => {
                    report["policy"] = serde_json::to_value(&policy).expect("policies serialize");
                    Ok(Done::Ok(format!("{}\n", pretty(&report))))
                }
            }
        }
        SynthesisResult::Unrealizable(cs) => {
            let losing: Vec<&str> = cs
                .losing_initial_states()
                .into_iter()
                .map(|s| p.state_name(s))
                .collect();
            Ok(Done::Negative(json!({
                "result": "UNREALIZABLE",
                "constraint": c.name,
                "losing_initial_states": losing,
                "stats": cs.stats,
            })))
        }
    }
}

fn qnp2fond(g: &Global, path: &Path, close: bool, output: Option<&Path>) -> Outcome {
    let mut q = parse_qnp(&read(path)?)?;
    if close {
        q = close_qnp(&q)?;
    }
    let p = syntactic_projection(&q)?;
    if g.verbose {
        eprintln!("abstraction: {} states, {} actions", p.num_states(), p.actions().len());
    }
    let report = json!({ "states": p.num_states(), "actions": p.actions(), "closed": close });
    deliver(output, problem_artifact(g, &p), report)
}

fn plan(g: &Global, problem: &Path, output: Option<&Path>) -> Outcome {
    let p = load_problem(problem)?;
    let Some(mu) = strong_cyclic_plan(&p)? else {
        return Ok(Done::Negative(json!({
            "result": "UNSOLVABLE",
            "reason": "some initial state cannot reach the goal on every fair trajectory",
        })));
    };
    let verdict = check_solution_with_budget(&p, &mu, Mode::Fair, g.budget)?;
    let mut report = json!({ "result": "SOLVABLE", "verification": verdict.to_string() });
    match output {
        Some(_) => deliver(output, policy_artifact(g, &mu), report),
        None if g.format == Format::Dot => Ok(Done::Ok(policy_to_dot(&mu))),
        None => {
            report["policy"] = serde_json::to_value(&mu).expect("policies serialize");
            Ok(Done::Ok(format!("{}\n", pretty(&report))))
        }
    }
}

fn verify(
    g: &Global,
    mode: VerifyMode,
    problem: &Path,
    policy: &Path,
    constraint: Option<&str>,
    lvl: LevelArg,
) -> Outcome {
    let p = load_problem(problem)?;
    let mu = load_policy(policy)?;
    let c;
    let m = match mode {
        VerifyMode::Fair => Mode::Fair,
        VerifyMode::Strong => Mode::Strong,
        VerifyMode::Constraint => {
            let text = constraint.ok_or_else(|| Failure("--mode constraint needs a constraint".into()))?;
            c = constraint_of(&p, &[text.to_string()], lvl)?;
            Mode::Under(&c)
        }
    };
    let verdict = check_solution_with_budget(&p, &mu, m, g.budget)?;
    let mut report = serde_json::to_value(&verdict).expect("verdicts serialize");
    report["summary"] = json!(verdict.to_string());
    match &verdict {
        Verdict::NotASolution(cx) => {
            report["trajectory"] = json!(cx.trajectory.display(&p).to_string());
            Ok(Done::Negative(report))
        }
        Verdict::InvalidPolicy(w) => {
            report["trajectory"] = json!(genplan_core::model::Trajectory::Finite(w.trajectory.clone())
                .display(&p)
                .to_string());
            Ok(Done::Negative(report))
        }
        _ => Ok(Done::Ok(format!("{}\n", pretty(&report)))),
    }
}

/// A problem started from one chosen state.
struct StartingAt<'a> {
    p: &'a Pondp,
    start: StateId,
}

impl TransitionSystem for StartingAt<'_> {
    type State = StateId;

    fn initial_states(&self) -> Vec<StateId> {
        vec![self.start]
    }
    fn observation(&self, s: &StateId) -> String {
        self.p.observation(s)
    }
    fn is_goal(&self, s: &StateId) -> bool {
        self.p.is_goal(*s)
    }
    fn is_available(&self, s: &StateId, action: &str) -> bool {
        TransitionSystem::is_available(self.p, s, action)
    }
    fn successors(&self, s: &StateId, action: &str) -> Vec<StateId> {
        TransitionSystem::successors(self.p, s, action)
    }
    fn label(&self, s: &StateId) -> String {
        self.p.label(s)
    }
}

fn parse_values(text: &str) -> Result<BTreeMap<String, u64>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure(format!("expected VAR=VALUE, got `{kv}`")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| Failure(format!("`{v}` is not a natural number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn run_simulation(g: &Global, path: &Path, policy: &Path, init: Option<&str>, max_steps: usize) -> Outcome {
    let mu = load_policy(policy)?;
    let opts = RunOptions {
        max_steps,
        stop_at_goal: true,
        detect_lasso: true,
    };
    let mut resolver = Resolver::seeded(g.seed);
    if path.extension().is_some_and(|e| e == "qnp") {
        let q = parse_qnp(&read(path)?)?;
        let sys = match init {
            Some(text) => QnpSystem::new(&q, &parse_values(text)?)?,
            None => QnpSystem::sample(&q, &mut ChaCha8Rng::seed_from_u64(g.seed))?,
        };
        let run = simulate(&sys, &mu, &mut resolver, opts)?;
        trace_report(g, &sys, run)
    } else {
        let p = load_problem(path)?;
        match init {
            Some(name) => {
                let start = p
                    .state_id(name)
                    .ok_or_else(|| Failure(format!("unknown state `{name}`")))?;
                let sys = StartingAt { p: &p, start };
                let run = simulate(&sys, &mu, &mut resolver, opts)?;
                trace_report(g, &sys, run)
            }
            None => {
                let run = simulate(&p, &mu, &mut resolver, opts)?;
                trace_report(g, &p, run)
            }
        }
    }
}

fn trace_report<T: TransitionSystem>(g: &Global, sys: &T, run: SimRun<T::State>) -> Outcome {
    let row = |s: &T::State, a: Option<&str>| {
        let mut v = json!({ "state": sys.label(s), "observation": sys.observation(s) });
        if let Some(a) = a {
            v["action"] = json!(a);
        }
        v
    };
    let (outcome, steps, tail, loop_start) = match run {
        SimRun::Finite { steps, last } => {
            let o = if sys.is_goal(&last) { "goal" } else { "stuck" };
            (o, steps, Some(last), None)
        }
        SimRun::Truncated { steps, last } => ("truncated", steps, Some(last), None),
        SimRun::Lasso { mut prefix, cycle } => {
            let k = prefix.len();
            prefix.extend(cycle);
            ("lasso", prefix, None, Some(k))
        }
    };
    if g.format == Format::Dot {
        let mut s = String::from("digraph trace {\n  rankdir=LR;\n");
        let mut names: Vec<String> = steps.iter().map(|(st, _)| sys.label(st)).collect();
        if let Some(t) = &tail {
            names.push(sys.label(t));
        }
        for (i, n) in names.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", escape(n));
        }
        for (i, (_, a)) in steps.iter().enumerate() {
            let to = match loop_start {
                Some(k) if i + 1 == steps.len() => k,
                _ => i + 1,
            };
            let _ = writeln!(s, "  n{i} -> n{to} [label=\"{}\"];", escape(a));
        }
        s.push_str("}\n");
        return if outcome == "goal" {
            Ok(Done::Ok(s))
        } else {
            Ok(Done::Negative(
                json!({ "result": "GOAL_NOT_REACHED", "outcome": outcome }),
            ))
        };
    }
    let mut trace: Vec<Value> = steps.iter().map(|(s, a)| row(s, Some(a))).collect();
    if let Some(t) = &tail {
        trace.push(row(t, None));
    }
    let mut report = json!({ "outcome": outcome, "steps": steps.len(), "trace": trace });
    if let Some(k) = loop_start {
        report["loop_start"] = json!(k);
    }
    if outcome == "goal" {
        Ok(Done::Ok(format!("{}\n", pretty(&report))))
    } else {
        report["result"] = json!("GOAL_NOT_REACHED");
        Ok(Done::Negative(report))
    }
}

fn ltl2dpw(
    g: &Global,
    formula: &str,
    letters: Option<&str>,
    problem: Option<&Path>,
    lvl: LevelArg,
    output: Option<&Path>,
) -> Outcome {
    let alphabet = match (letters, problem) {
        (Some(ls), _) => Alphabet::plain(ls.split(',').map(str::trim).filter(|s| !s.is_empty()))?,
        (None, Some(path)) => Alphabet::for_problem(&load_problem(path)?, level(lvl))?,
        (None, None) => return Err(Failure("give --alphabet or --problem".into())),
    };
    let f = parse_ltl(formula, &Arc::new(alphabet))?;
    let dpw = ltl_to_dpw(&f, g.budget)?;
    if g.verbose {
        eprintln!(
            "automaton: {} states, priorities {:?}",
            dpw.num_states(),
            dpw.priorities()
        );
    }
    let artifact = match g.format {
        Format::Json => serde_json::to_string_pretty(&dpw.to_json()).expect("automata serialize"),
        Format::Dot => dpw.to_dot(),
    };
    let report = json!({ "states": dpw.num_states(), "priorities": dpw.priorities() });
    deliver(output, artifact, report)
}

fn show(file: &Path, output: Option<&Path>) -> Outcome {
    let text = read(file)?;
    let dot = if file.extension().is_some_and(|e| e == "qnp") {
        problem_to_dot(&syntactic_projection(&parse_qnp(&text)?)?)
    } else {
        let v: Value = serde_json::from_str(&text).map_err(Error::from)?;
        if v.get("memory_states").is_some() {
            policy_to_dot(&serde_json::from_value(v).map_err(Error::from)?)
        } else if v.get("delta").is_some() {
            let f: DpwFile = serde_json::from_value(v).map_err(Error::from)?;
            let alphabet = Arc::new(Alphabet::plain(f.alphabet.iter().cloned())?);
            Dpw::from_json(&f, alphabet)?.to_dot()
        } else if v.get("members").is_some() {
            problem_to_dot(&observation_projection(&class_from_json(&text)?)?.problem)
        } else {
            problem_to_dot(&problem_from_json(&text)?)
        }
    };
    deliver(output, dot, json!({}))
}
