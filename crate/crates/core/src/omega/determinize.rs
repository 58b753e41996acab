use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::dpw::Dpw;
use crate::error::{Error, Result};
use crate::ltl::Nba;

/// Node of a compact Safra tree; a node's name is its index plus one and
/// parents always precede their children.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TreeNode {
    parent: Option<u32>,
    label: FixedBitSet,
}

type Tree = Vec<TreeNode>;

struct Work {
    parent: Option<usize>,
    label: FixedBitSet,
    alive: bool,
    flagged: bool,
}

struct Determinizer<'a> {
    nba: &'a Nba,
    post: Vec<Vec<FixedBitSet>>,
    n: usize,
}

impl Determinizer<'_> {
    fn image(&self, set: &FixedBitSet, letter: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n);
        for q in set.ones() {
            out.union_with(&self.post[q][letter]);
        }
        out
    }

    /// One step of the construction; returns the successor tree and the
    /// priority of the step in the max-parity convention.
    fn step(&self, tree: &Tree, letter: usize) -> (Tree, u32) {
        let old = tree.len();
        let mut w: Vec<Work> = tree
            .iter()
            .map(|t| Work {
                parent: t.parent.map(|p| p as usize),
                label: self.image(&t.label, letter),
                alive: true,
                flagged: false,
            })
            .collect();
        for i in 0..old {
            let mut acc = w[i].label.clone();
            acc.intersect_with(&self.nba.accepting);
            if !acc.is_clear() {
                w.push(Work {
                    parent: Some(i),
                    label: acc,
                    alive: true,
                    flagged: false,
                });
            }
        }
        // Horizontal merge: a state stays only in the oldest sibling and
        // within its parent's label.
        let mut claimed: HashMap<Option<usize>, FixedBitSet> = HashMap::new();
        for i in 0..w.len() {
            if let Some(p) = w[i].parent {
                let pl = w[p].label.clone();
                w[i].label.intersect_with(&pl);
            }
            let c = claimed
                .entry(w[i].parent)
                .or_insert_with(|| FixedBitSet::with_capacity(self.n));
            w[i].label.difference_with(c);
            c.union_with(&w[i].label);
        }
        for x in &mut w {
            if x.label.is_clear() {
                x.alive = false;
            }
        }
        // Vertical merge: a node covered by its children absorbs them.
        for i in 0..w.len() {
            if !w[i].alive {
                continue;
            }
            let mut union = FixedBitSet::with_capacity(self.n);
            let mut has_child = false;
            for node in &w[i + 1..] {
                if node.alive && node.parent == Some(i) {
                    union.union_with(&node.label);
                    has_child = true;
                }
            }
            if has_child && union == w[i].label {
                w[i].flagged = true;
                let mut gone = vec![false; w.len()];
                gone[i] = true;
                for j in i + 1..w.len() {
                    if let Some(p) = w[j].parent {
                        if gone[p] {
                            gone[j] = true;
                            w[j].alive = false;
                        }
                    }
                }
            }
        }
        let removed = (0..old).find(|&i| !w[i].alive).map(|i| i + 1);
        let flagged = (0..w.len()).find(|&i| w[i].flagged).map(|i| i + 1);
        let min_parity = match (flagged, removed) {
            (Some(e), Some(f)) if e < f => 2 * e,
            (Some(e), None) => 2 * e,
            (_, Some(f)) => 2 * f - 1,
            (None, None) => 2 * self.n + 1,
        };
        let priority = (2 * self.n + 2 - min_parity) as u32;

        let mut rename = vec![u32::MAX; w.len()];
        let mut out = Vec::new();
        for (i, x) in w.into_iter().enumerate() {
            if x.alive {
                rename[i] = out.len() as u32;
                out.push(TreeNode {
                    parent: x.parent.map(|p| rename[p]),
                    label: x.label,
                });
            }
        }
        (out, priority)
    }
}

/// Safra–Piterman determinization into a max-parity automaton with
/// compacted priorities.
pub fn nba_to_dpw(nba: &Nba) -> Result<Dpw> {
    nba_to_dpw_with_budget(nba, crate::model::verify::DEFAULT_BUDGET)
}

pub fn nba_to_dpw_with_budget(nba: &Nba, budget: usize) -> Result<Dpw> {
    let n = nba.num_states();
    let k = nba.alphabet.len();
    let mut post = vec![vec![FixedBitSet::with_capacity(n); k]; n];
    for (q, ts) in nba.transitions.iter().enumerate() {
        for (ls, t) in ts {
            for l in ls.ones() {
                post[q][l].insert(*t);
            }
        }
    }
    let det = Determinizer { nba, post, n };

    let mut init_label = FixedBitSet::with_capacity(n);
    for &q in &nba.initial {
        init_label.insert(q);
    }
    let init_tree: Tree = if init_label.is_clear() {
        Vec::new()
    } else {
        vec![TreeNode {
            parent: None,
            label: init_label,
        }]
    };
    let mut index: HashMap<(Tree, u32), u32> = HashMap::new();
    let mut states: Vec<(Tree, u32)> = vec![(init_tree.clone(), 1)];
    index.insert((init_tree, 1), 0);
    let mut delta: Vec<Vec<u32>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let tree = states[i].0.clone();
        let mut row = Vec::with_capacity(k);
        for l in 0..k {
            let key = det.step(&tree, l);
            let t = match index.get(&key) {
                Some(&t) => t,
                None => {
                    if states.len() >= budget {
                        return Err(Error::SizeBudgetExceeded {
                            what: "parity automaton",
                            budget,
                        });
                    }
                    let t = states.len() as u32;
                    index.insert(key.clone(), t);
                    states.push(key);
                    t
                }
            };
            row.push(t);
        }
        delta.push(row);
        i += 1;
    }
    let mut dpw = Dpw {
        alphabet: nba.alphabet.clone(),
        delta,
        initial: 0,
        priority: states.iter().map(|(_, p)| *p).collect(),
    };
    dpw.compact_priorities();
    Ok(dpw)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ltl::{eval_lasso, ltl_to_nba, parse_ltl, Alphabet, Word};

    fn words(n_letters: usize, max_len: usize) -> Vec<Word> {
        let mut seqs: Vec<Vec<usize>> = vec![vec![]];
        let mut all = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for s in &seqs {
                for l in 0..n_letters {
                    let mut t = s.clone();
                    t.push(l);
                    next.push(t);
                }
            }
            all.extend(next.iter().cloned());
            seqs = next;
        }
        let mut out = Vec::new();
        for p in &all {
            for c in &all {
                if !c.is_empty() && p.len() + c.len() <= max_len + 1 {
                    out.push(Word::new(p.clone(), c.clone()));
                }
            }
        }
        out
    }

    #[test]
    fn eventually_goal_gives_two_states() {
        let s = Arc::new(Alphabet::plain(["goal", "other"]).unwrap());
        let f = parse_ltl("F goal", &s).unwrap();
        let d = nba_to_dpw(&ltl_to_nba(&f).unwrap()).unwrap().reduce();
        assert_eq!(d.num_states(), 2);
        for w in words(2, 3) {
            assert_eq!(d.accepts(&w).unwrap(), eval_lasso(&f, &w).unwrap());
        }
    }

    #[test]
    fn empty_language_rejects_everything() {
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        let f = parse_ltl("false", &s).unwrap();
        let d = nba_to_dpw(&ltl_to_nba(&f).unwrap()).unwrap();
        for w in words(2, 3) {
            assert!(!d.accepts(&w).unwrap());
        }
    }

    #[test]
    fn persistence_and_recurrence_formulas() {
        let s = Arc::new(Alphabet::plain(["a", "b", "c"]).unwrap());
        for text in [
            "F G a",
            "G F a -> G F b",
            "(F G !a & G F b) -> G F c",
            "a U (b R c)",
            "F G (a | X b)",
            "!(G F a & F G b)",
        ] {
            let f = parse_ltl(text, &s).unwrap();
            let d = nba_to_dpw(&ltl_to_nba(&f).unwrap()).unwrap();
            for w in words(3, 4) {
                assert_eq!(
                    d.accepts(&w).unwrap(),
                    eval_lasso(&f, &w).unwrap(),
                    "{text} on {}",
                    w.display(&s)
                );
            }
        }
    }
}
