//! Graphviz output.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{Policy, Pondp, Trajectory};

/// Escapes a string for use inside a double-quoted DOT identifier.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// States as nodes (goals doubly circled, observations in the label when
/// they differ from the state name) and one edge per action and successor.
pub fn problem_to_dot(p: &Pondp) -> String {
    let mut s = String::from("digraph problem {\n  rankdir=LR;\n");
    for (i, name) in p.states().iter().enumerate() {
        let shape = if p.is_goal(i) { "doublecircle" } else { "circle" };
        let obs = p.obs_name(p.obs(i));
        let label = if obs == name {
            escape(name)
        } else {
            format!("{}\\n[{}]", escape(name), escape(obs))
        };
        let _ = writeln!(s, "  s{i} [shape={shape}, label=\"{label}\"];");
    }
    for (k, &i) in p.init().iter().enumerate() {
        let _ = writeln!(s, "  init{k} [shape=point];\n  init{k} -> s{i};");
    }
    let mut edges: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (a, b, t) in p.transitions() {
        edges.entry((a, t)).or_default().push(p.action_name(b));
    }
    for ((a, t), names) in edges {
        let _ = writeln!(s, "  s{a} -> s{t} [label=\"{}\"];", escape(&names.join(",")));
    }
    s.push_str("}\n");
    s
}

/// Memory states as nodes; edges labelled `observation / action`.
pub fn policy_to_dot(mu: &Policy) -> String {
    let mut s = String::from("digraph policy {\n  rankdir=LR;\n  init [shape=point];\n");
    for (i, m) in mu.memory_states().iter().enumerate() {
        let _ = writeln!(s, "  m{i} [shape=box, label=\"{}\"];", escape(m));
    }
    let _ = writeln!(s, "  init -> m{};", mu.initial());
    for (m, o, a) in mu.outputs() {
        let next = mu.next_memory(m, o);
        let _ = writeln!(s, "  m{m} -> m{next} [label=\"{}\"];", escape(&format!("{o} / {a}")));
    }
    s.push_str("}\n");
    s
}

/// A trajectory as a chain of nodes; lassos close their cycle.
pub fn trajectory_to_dot(p: &Pondp, t: &Trajectory) -> String {
    let mut s = String::from("digraph trajectory {\n  rankdir=LR;\n");
    let (steps, last, back) = match t {
        Trajectory::Finite(f) => (f.steps.clone(), Some(f.last), None),
        Trajectory::Lasso(l) => {
            let mut all = l.prefix.clone();
            all.extend(&l.cycle);
            (all, None, Some(l.prefix.len()))
        }
    };
    let name = |i: usize| match t.level() {
        crate::model::Level::State => p.state_name(i),
        crate::model::Level::Observation => p.obs_name(i),
    };
    for (k, st) in steps.iter().enumerate() {
        let _ = writeln!(s, "  n{k} [label=\"{}\"];", escape(name(st.state)));
    }
    if let Some(l) = last {
        let _ = writeln!(s, "  n{} [label=\"{}\"];", steps.len(), escape(name(l)));
    }
    for (k, st) in steps.iter().enumerate() {
        let to = match (back, k + 1 == steps.len()) {
            (Some(b), true) => b,
            _ => k + 1,
        };
        let _ = writeln!(s, "  n{k} -> n{to} [label=\"{}\"];", escape(p.action_name(st.action)));
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn escaping() {
        assert_eq!(escape(r#"a"b\c"#), r#"a\"b\\c"#);
    }

    #[test]
    fn counter_projection_graph() {
        let d = problem_to_dot(&catalog::counter_projection());
        assert!(d.starts_with("digraph problem {"));
        assert!(d.contains("s0 -> s1 [label=\"Dec\"]"), "{d}");
        assert!(d.contains("doublecircle"));
        assert_eq!(d.matches('{').count(), d.matches('}').count());
    }

    #[test]
    fn policy_graph() {
        let d = policy_to_dot(&Policy::memoryless([("X>0", "Dec")]));
        assert!(d.contains("X>0 / Dec"));
    }
}
