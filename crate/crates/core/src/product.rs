//! Products of a state-action graph of a problem with deterministic parity
//! automata, and the lasso search on them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{self, Fairness};
use crate::model::{ActionId, Lasso, Level, Pondp, StateId, Step};
use crate::omega::Dpw;

/// A graph whose nodes commit to a problem state and the action taken there.
/// Only `active` nodes take part in the search.
pub(crate) struct BaseGraph {
    pub state: Vec<StateId>,
    pub action: Vec<ActionId>,
    pub succ: Vec<Vec<usize>>,
    pub init: Vec<usize>,
    pub active: Vec<bool>,
}

/// A DPW component read through a letter map of the problem.
pub(crate) struct Component<'a> {
    pub dpw: &'a Dpw,
    pub state_letter: Vec<usize>,
    pub action_letter: Vec<usize>,
}

impl<'a> Component<'a> {
    /// Maps the problem's letters (state or observation names, and action
    /// names) into the automaton alphabet.
    pub fn new(dpw: &'a Dpw, p: &Pondp, level: Level) -> Result<Self> {
        let lookup = |name: &str| {
            dpw.alphabet
                .index(name)
                .ok_or_else(|| Error::AlphabetMismatch(format!("letter `{name}` is not in the constraint alphabet")))
        };
        let state_letter = (0..p.num_states())
            .map(|s| match level {
                Level::State => lookup(p.state_name(s)),
                Level::Observation => lookup(p.obs_name(p.obs(s))),
            })
            .collect::<Result<Vec<_>>>()?;
        let action_letter = p.actions().iter().map(|a| lookup(a)).collect::<Result<Vec<_>>>()?;
        Ok(Component {
            dpw,
            state_letter,
            action_letter,
        })
    }
}

/// Searches the product of `base` with all `components` for a lasso that
/// every component accepts and, when `fair` is set, that is fair with
/// respect to the problem's nondeterminism.
pub(crate) fn find_lasso(
    p: &Pondp,
    base: &BaseGraph,
    components: &[Component<'_>],
    fair: bool,
    budget: usize,
) -> Result<Option<Lasso>> {
    let k = components.len();
    let mut index: HashMap<(usize, Vec<u32>), usize> = HashMap::new();
    let mut nodes: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut labels: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut queue = std::collections::VecDeque::new();

    let start: Vec<u32> = components.iter().map(|c| c.dpw.initial).collect();
    let mut init = Vec::new();
    for &b in &base.init {
        if !base.active[b] {
            continue;
        }
        let key = (b, start.clone());
        if let Some(&i) = index.get(&key) {
            init.push(i);
            continue;
        }
        let i = nodes.len();
        index.insert(key.clone(), i);
        nodes.push(key);
        succ.push(Vec::new());
        init.push(i);
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        let (b, qs) = nodes[i].clone();
        let s = base.state[b];
        let a = base.action[b];
        let mut after = Vec::with_capacity(k);
        for (j, c) in components.iter().enumerate() {
            let q1 = c.dpw.delta[qs[j] as usize][c.state_letter[s]];
            let q2 = c.dpw.delta[q1 as usize][c.action_letter[a]];
            labels[j].push(c.dpw.priority[q1 as usize].max(c.dpw.priority[q2 as usize]));
            after.push(q2);
        }
        let mut out = Vec::new();
        for &b2 in &base.succ[b] {
            if !base.active[b2] {
                continue;
            }
            let key = (b2, after.clone());
            let t = match index.get(&key) {
                Some(&t) => t,
                None => {
                    let t = nodes.len();
                    if t >= budget {
                        return Err(Error::SizeBudgetExceeded {
                            what: "product graph",
                            budget,
                        });
                    }
                    index.insert(key.clone(), t);
                    nodes.push(key);
                    succ.push(Vec::new());
                    queue.push_back(t);
                    t
                }
            };
            out.push(t);
        }
        out.sort_unstable();
        out.dedup();
        succ[i] = out;
    }

    let all: Vec<usize> = (0..nodes.len()).collect();
    let label_refs: Vec<&[u32]> = labels.iter().map(Vec::as_slice).collect();

    let n_act = p.actions().len();
    let mut group_ids: HashMap<usize, usize> = HashMap::new();
    let mut required: Vec<Vec<usize>> = Vec::new();
    let mut group = vec![None; nodes.len()];
    let mut outcome = vec![0; nodes.len()];
    if fair {
        for (i, (b, _)) in nodes.iter().enumerate() {
            let s = base.state[*b];
            let a = base.action[*b];
            outcome[i] = s;
            let key = s * n_act + a;
            let g = *group_ids.entry(key).or_insert_with(|| {
                required.push(p.successors(s, a).to_vec());
                required.len() - 1
            });
            group[i] = Some(g);
        }
    }
    let fairness = Fairness {
        group: &group,
        outcome: &outcome,
        required: &required,
    };
    let Some(scc) = graph::find_accepting_scc(&succ, &all, &label_refs, if fair { Some(&fairness) } else { None })
    else {
        return Ok(None);
    };
    let mut in_scc = vec![false; nodes.len()];
    for &v in &scc {
        in_scc[v] = true;
    }
    let path = graph::bfs_path(&succ, &init, |_| true, |v| in_scc[v]).expect("accepting component is reachable");
    let entry = *path.last().unwrap();
    let walk = graph::covering_walk(&succ, &scc, entry);
    let step = |i: usize| {
        let b = nodes[i].0;
        Step::new(base.state[b], base.action[b])
    };
    Ok(Some(Lasso::new(
        Level::State,
        path[..path.len() - 1].iter().map(|&i| step(i)).collect(),
        walk.iter().map(|&i| step(i)).collect(),
    )))
}
