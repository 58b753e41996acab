use std::collections::{BTreeMap, BTreeSet};

use super::{Effect, InitValues, Literal, Qnp, QnpAction, Semantics};
use crate::error::{Error, Result};

/// Parses the line-based QNP format:
///
/// ```text
/// fluents p q
/// vars X Y
/// init p
/// init_values X in {20}
/// init_values Y in [15,30]
/// semantics Y steps 1 3
/// action a pre X>0 dec X inc Y
/// action b
///   pre Y>0
///   dec Y
/// goal X=0 Y=0
/// ```
///
/// `#` starts a comment. The result is validated.
pub fn parse_qnp(text: &str) -> Result<Qnp> {
    let mut fluents: Vec<String> = Vec::new();
    let mut variables: Vec<String> = Vec::new();
    let mut init = BTreeSet::new();
    let mut init_values: BTreeMap<String, InitValues> = BTreeMap::new();
    let mut semantics: BTreeMap<String, Semantics> = BTreeMap::new();
    let mut actions: Vec<QnpAction> = Vec::new();
    let mut goal: Option<Vec<Literal>> = None;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(line_no, msg);
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let words = || {
            rest.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|w| !w.is_empty())
        };
        match kw {
            "fluents" => fluents.extend(words().map(str::to_string)),
            "vars" => variables.extend(words().map(str::to_string)),
            "init" => init.extend(words().map(str::to_string)),
            "init_values" => {
                let (x, spec) = rest
                    .split_once(" in ")
                    .ok_or_else(|| err("expected `init_values X in {..}` or `[lo,hi]`".into()))?;
                let x = x.trim().to_string();
                let iv = parse_init_values(spec.trim()).map_err(err)?;
                if init_values.insert(x.clone(), iv).is_some() {
                    return Err(err(format!("initial values of `{x}` given twice")));
                }
            }
            "semantics" => {
                let w: Vec<&str> = words().collect();
                let sem = match w.as_slice() {
                    [_, "unit"] => Semantics::Unit,
                    [_, "two_valued"] => Semantics::TwoValued,
                    [_, "steps", lo, hi] => Semantics::Steps {
                        lo: number(lo).map_err(err)?,
                        hi: number(hi).map_err(err)?,
                    },
                    _ => return Err(err("expected `semantics X unit|two_valued|steps lo hi`".into())),
                };
                semantics.insert(w[0].to_string(), sem);
            }
            "action" => {
                let mut it = words();
                let name = it.next().ok_or_else(|| err("action needs a name".into()))?;
                actions.push(QnpAction::new(name));
                let tail: Vec<&str> = it.collect();
                if let Some((first, more)) = tail.split_first() {
                    let a = actions.last_mut().expect("just pushed");
                    let mut section = *first;
                    let mut items = Vec::new();
                    for &w in more {
                        if matches!(w, "pre" | "add" | "del" | "inc" | "dec") {
                            action_section(a, section, &items, &variables).map_err(err)?;
                            section = w;
                            items.clear();
                        } else {
                            items.push(w);
                        }
                    }
                    action_section(a, section, &items, &variables).map_err(err)?;
                }
            }
            "pre" | "add" | "del" | "inc" | "dec" => {
                let a = actions
                    .last_mut()
                    .ok_or_else(|| err(format!("`{kw}` outside an action")))?;
                let items: Vec<&str> = words().collect();
                action_section(a, kw, &items, &variables).map_err(err)?;
            }
            "goal" => {
                let lits = words()
                    .map(|w| literal(w, &variables))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(err)?;
                goal.get_or_insert_with(Vec::new).extend(lits);
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }

    let goal = goal.ok_or_else(|| Error::parse(0, "missing `goal` line"))?;
    if let Some(x) = init_values
        .keys()
        .chain(semantics.keys())
        .find(|x| !variables.contains(x))
    {
        return Err(Error::Semantic(format!("unknown variable `{x}`")));
    }
    let mut ivs = Vec::new();
    for x in &variables {
        ivs.push(
            init_values
                .remove(x)
                .ok_or_else(|| Error::Semantic(format!("no initial values for `{x}`")))?,
        );
    }
    let q = Qnp {
        semantics: variables
            .iter()
            .map(|x| semantics.get(x).copied().unwrap_or_default())
            .collect(),
        fluents,
        init,
        variables,
        init_values: ivs,
        actions,
        goal,
    };
    q.validate()?;
    Ok(q)
}

fn action_section(
    a: &mut QnpAction,
    section: &str,
    items: &[&str],
    vars: &[String],
) -> std::result::Result<(), String> {
    match section {
        "pre" => {
            for w in items {
                a.pre.push(literal(w, vars)?);
            }
        }
        "add" => a.add.extend(items.iter().map(|w| w.to_string())),
        "del" => a.del.extend(items.iter().map(|w| w.to_string())),
        "inc" | "dec" => {
            let e = if section == "inc" { Effect::Inc } else { Effect::Dec };
            for &x in items {
                if let Some(old) = a.effects.insert(x.to_string(), e) {
                    if old != e {
                        return Err(format!("action `{}` both increments and decrements `{x}`", a.name));
                    }
                }
            }
        }
        other => return Err(format!("unknown action section `{other}`")),
    }
    Ok(())
}

fn literal(w: &str, vars: &[String]) -> std::result::Result<Literal, String> {
    if let Some(x) = w.strip_suffix("=0") {
        return Ok(Literal::Zero(x.to_string()));
    }
    if let Some(x) = w.strip_suffix(">0") {
        return Ok(Literal::Positive(x.to_string()));
    }
    let (name, value) = match w.strip_prefix('!') {
        Some(n) => (n, false),
        None => (w, true),
    };
    if name.is_empty() {
        return Err("empty literal".into());
    }
    if vars.iter().any(|v| v == name) {
        return Err(format!("variable `{name}` must be written `{name}=0` or `{name}>0`"));
    }
    Ok(Literal::Fluent {
        name: name.to_string(),
        value,
    })
}

fn number(w: &str) -> std::result::Result<u64, String> {
    w.trim()
        .parse()
        .map_err(|_| format!("expected a non-negative integer, found `{w}`"))
}

fn parse_init_values(spec: &str) -> std::result::Result<InitValues, String> {
    if let Some(inner) = spec.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        let vals = inner
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(number)
            .collect::<std::result::Result<BTreeSet<u64>, _>>()?;
        if vals.is_empty() {
            return Err("empty set of initial values".into());
        }
        return Ok(InitValues::Set(vals));
    }
    if let Some(inner) = spec.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let (lo, hi) = inner.split_once(',').ok_or("expected `[lo,hi]`")?;
        let (lo, hi) = (number(lo)?, number(hi)?);
        if lo > hi {
            return Err(format!("empty range [{lo},{hi}]"));
        }
        return Ok(InitValues::Range { lo, hi });
    }
    Err(format!("expected `{{..}}` or `[lo,hi]`, found `{spec}`"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    const TWO_VARS: &str = "\
# two counters
vars X Y
init_values X in {20}
init_values Y in {30}
action a pre X>0 dec X inc Y
action b
  pre Y>0
  dec Y
goal X=0 Y=0
";

    #[test]
    fn two_variable_example_parses() {
        let q = parse_qnp(TWO_VARS).unwrap();
        assert_eq!(
            q,
            catalog::two_variable_qnp(InitValues::single(20), InitValues::single(30))
        );
        assert!(q.closure_issues().is_empty());
    }

    #[test]
    fn display_round_trips() {
        for q in catalog::qnp_suite() {
            let text = q.qnp.to_string();
            assert_eq!(parse_qnp(&text).unwrap(), q.qnp, "{text}");
        }
    }

    #[test]
    fn counter_parses() {
        let q = parse_qnp("vars X\ninit_values X in [5,10]\naction Dec pre X>0 dec X\ngoal X=0\n").unwrap();
        assert_eq!(q.init_values[0], InitValues::Range { lo: 5, hi: 10 });
        assert_eq!(q.semantics, vec![Semantics::Unit]);
    }

    #[test]
    fn inc_and_dec_of_one_variable_is_an_error() {
        let e = parse_qnp("vars X\ninit_values X in {1}\naction a inc X dec X\ngoal X=0\n");
        assert!(matches!(e, Err(Error::Parse { pos: 3, .. })), "{e:?}");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(matches!(parse_qnp("vars X\nbogus\n"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_qnp("vars X\ngoal X=0\n"), Err(Error::Semantic(_))));
        assert!(matches!(
            parse_qnp("vars X\ninit_values X in {1}\naction a pre Z>0\ngoal X=0\n"),
            Err(Error::Semantic(_))
        ));
        assert!(matches!(
            parse_qnp("vars X\ninit_values X in {1}\ngoal X=0 X>0\n"),
            Err(Error::Semantic(_))
        ));
    }

    #[test]
    fn fluents_and_steps() {
        let q = parse_qnp(
            "fluents holding\nvars X\ninit holding\ninit_values X in {0,3}\nsemantics X steps 1 2\n\
             action drop pre holding del holding\naction pick pre !holding X>0 add holding dec X\n\
             goal !holding X=0\n",
        )
        .unwrap();
        assert_eq!(q.semantics[0], Semantics::Steps { lo: 1, hi: 2 });
        assert_eq!(
            q.action("pick").unwrap().pre[0],
            Literal::Fluent {
                name: "holding".into(),
                value: false
            }
        );
    }
}
