use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltl::{Alphabet, Word};

/// Deterministic parity word automaton. A word is accepted iff the largest
/// priority seen infinitely often along its run is even.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dpw {
    pub alphabet: Arc<Alphabet>,
    /// `delta[q][letter]`.
    pub delta: Vec<Vec<u32>>,
    pub initial: u32,
    pub priority: Vec<u32>,
}

impl Dpw {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn step(&self, q: u32, letter: usize) -> u32 {
        self.delta[q as usize][letter]
    }

    /// Distinct priorities in increasing order.
    pub fn priorities(&self) -> Vec<u32> {
        let mut p = self.priority.clone();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Runs the prefix, then the cycle until the state at the cycle start
    /// repeats, and checks the largest priority on the loop.
    pub fn accepts(&self, w: &Word) -> Result<bool> {
        w.check(&self.alphabet)?;
        Ok(self.accepts_unchecked(&w.prefix, &w.cycle))
    }

    pub fn accepts_unchecked(&self, prefix: &[usize], cycle: &[usize]) -> bool {
        let mut q = self.initial;
        for &l in prefix {
            q = self.step(q, l);
        }
        // States at successive cycle starts; the run is periodic once one repeats.
        let mut starts: Vec<u32> = Vec::new();
        let mut trace: Vec<u32> = Vec::new();
        loop {
            if let Some(j) = starts.iter().position(|&s| s == q) {
                let max = trace[j..].iter().copied().max().expect("nonempty loop");
                return max % 2 == 0;
            }
            starts.push(q);
            let mut best = 0;
            for &l in cycle {
                q = self.step(q, l);
                best = best.max(self.priority[q as usize]);
            }
            trace.push(best);
        }
    }

    /// The automaton for the complement language.
    pub fn complement(&self) -> Dpw {
        Dpw {
            priority: self.priority.iter().map(|p| p + 1).collect(),
            ..self.clone()
        }
    }

    /// Keeps only states reachable from the initial state.
    pub fn trim(&self) -> Dpw {
        let mut map = vec![u32::MAX; self.num_states()];
        let mut order = vec![self.initial];
        map[self.initial as usize] = 0;
        let mut i = 0;
        while i < order.len() {
            let q = order[i] as usize;
            for &t in &self.delta[q] {
                if map[t as usize] == u32::MAX {
                    map[t as usize] = order.len() as u32;
                    order.push(t);
                }
            }
            i += 1;
        }
        Dpw {
            alphabet: self.alphabet.clone(),
            delta: order
                .iter()
                .map(|&q| self.delta[q as usize].iter().map(|&t| map[t as usize]).collect())
                .collect(),
            initial: 0,
            priority: order.iter().map(|&q| self.priority[q as usize]).collect(),
        }
    }

    /// A smaller automaton for the same language: reachable states only,
    /// bisimilar states merged, and states outside every cycle (whose
    /// priority never recurs) merged into states with the same successors.
    pub fn reduce(&self) -> Dpw {
        let mut d = self.trim();
        loop {
            let n = d.num_states();
            let class = d.bisimulation_classes();
            let mut first: HashMap<u32, u32> = HashMap::new();
            let rep: Vec<u32> = class
                .iter()
                .enumerate()
                .map(|(q, &c)| *first.entry(c).or_insert(q as u32))
                .collect();
            let mut merged = d.quotient(&rep);
            let succ: Vec<Vec<usize>> = merged
                .delta
                .iter()
                .map(|row| row.iter().map(|&t| t as usize).collect())
                .collect();
            let nodes: Vec<usize> = (0..succ.len()).collect();
            let mut cyclic = vec![false; succ.len()];
            for c in crate::graph::sccs_of(&succ, &nodes) {
                if crate::graph::is_nontrivial(&succ, &c) {
                    for q in c {
                        cyclic[q] = true;
                    }
                }
            }
            let mut by_row: HashMap<&[u32], usize> = HashMap::new();
            for q in (0..succ.len()).filter(|&q| cyclic[q]) {
                by_row.entry(merged.delta[q].as_slice()).or_insert(q);
            }
            let mut target: Vec<usize> = (0..succ.len()).collect();
            for q in (0..succ.len()).filter(|&q| !cyclic[q]) {
                match by_row.get(merged.delta[q].as_slice()) {
                    Some(&r) => target[q] = r,
                    None => {
                        by_row.insert(merged.delta[q].as_slice(), q);
                    }
                }
            }
            if target.iter().enumerate().any(|(q, &t)| q != t) {
                let target: Vec<u32> = target.iter().map(|&t| t as u32).collect();
                merged = merged.quotient(&target);
            }
            d = merged.trim();
            if d.num_states() == n {
                return d;
            }
        }
    }

    /// Coarsest partition respecting priorities and transitions.
    fn bisimulation_classes(&self) -> Vec<u32> {
        let mut class: Vec<u32> = self.priority.clone();
        let mut count = usize::MAX;
        loop {
            let mut ids: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
            let next: Vec<u32> = (0..self.num_states())
                .map(|q| {
                    let sig = (class[q], self.delta[q].iter().map(|&t| class[t as usize]).collect());
                    let k = ids.len() as u32;
                    *ids.entry(sig).or_insert(k)
                })
                .collect();
            if ids.len() == count {
                return next;
            }
            count = ids.len();
            class = next;
        }
    }

    /// Redirects every state `q` to `rep[q]`, a state with the same future
    /// behaviour and `rep[rep[q]] == rep[q]`.
    fn quotient(&self, rep: &[u32]) -> Dpw {
        let r = |q: u32| rep[q as usize];
        Dpw {
            alphabet: self.alphabet.clone(),
            delta: (0..self.num_states())
                .map(|q| self.delta[r(q as u32) as usize].iter().map(|&t| r(t)).collect())
                .collect(),
            initial: r(self.initial),
            priority: (0..self.num_states())
                .map(|q| self.priority[r(q as u32) as usize])
                .collect(),
        }
    }

    /// Renumbers priorities to a contiguous range without changing the
    /// language: adjacent distinct priorities of equal parity are merged.
    pub fn compact_priorities(&mut self) {
        let ps = self.priorities();
        let mut map = HashMap::new();
        let mut cur = 0u32;
        for (i, &p) in ps.iter().enumerate() {
            if i == 0 {
                cur = p % 2;
            } else if p % 2 != ps[i - 1] % 2 {
                cur += 1;
            }
            map.insert(p, cur);
        }
        for p in &mut self.priority {
            *p = map[p];
        }
    }

    pub fn to_json(&self) -> DpwFile {
        DpwFile {
            states: self.num_states(),
            alphabet: self.alphabet.letters().iter().map(|l| l.name.clone()).collect(),
            delta: self.delta.clone(),
            initial: self.initial,
            priority: self.priority.clone(),
        }
    }

    pub fn from_json(f: &DpwFile, alphabet: Arc<Alphabet>) -> Result<Dpw> {
        let names: Vec<&str> = alphabet.letters().iter().map(|l| l.name.as_str()).collect();
        if names != f.alphabet.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::AlphabetMismatch("DPW alphabet differs".into()));
        }
        if f.delta.len() != f.states
            || f.priority.len() != f.states
            || f.initial as usize >= f.states
            || f.delta
                .iter()
                .any(|row| row.len() != names.len() || row.iter().any(|&t| t as usize >= f.states))
        {
            return Err(Error::InvalidProblem("malformed DPW".into()));
        }
        Ok(Dpw {
            alphabet,
            delta: f.delta.clone(),
            initial: f.initial,
            priority: f.priority.clone(),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph dpw {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.num_states() {
            let _ = writeln!(s, "  q{q} [shape=circle, label=\"q{q}\\n{}\"];", self.priority[q]);
        }
        let _ = writeln!(s, "  init -> q{};", self.initial);
        for (q, row) in self.delta.iter().enumerate() {
            let mut by_target: std::collections::BTreeMap<u32, Vec<&str>> = Default::default();
            for (l, &t) in row.iter().enumerate() {
                by_target.entry(t).or_default().push(self.alphabet.name(l));
            }
            for (t, ls) in by_target {
                let _ = writeln!(s, "  q{q} -> q{t} [label=\"{}\"];", crate::dot::escape(&ls.join(",")));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// JSON form `{states, alphabet, delta, initial, priority}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpwFile {
    pub states: usize,
    pub alphabet: Vec<String>,
    pub delta: Vec<Vec<u32>>,
    pub initial: u32,
    pub priority: Vec<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> Dpw {
        // Accepts words with infinitely many `b`.
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        Dpw {
            alphabet: s,
            delta: vec![vec![0, 1], vec![0, 1]],
            initial: 0,
            priority: vec![1, 2],
        }
    }

    #[test]
    fn acceptance_reads_the_loop() {
        let d = two_state();
        assert!(d.accepts(&Word::new(vec![0, 0], vec![0, 1])).unwrap());
        assert!(!d.accepts(&Word::new(vec![1, 1], vec![0])).unwrap());
        assert!(d.complement().accepts(&Word::new(vec![1], vec![0])).unwrap());
    }

    #[test]
    fn compaction_keeps_parity_order() {
        let mut d = two_state();
        d.priority = vec![3, 6];
        d.compact_priorities();
        assert_eq!(d.priority, vec![1, 2]);
        d.priority = vec![4, 8];
        d.compact_priorities();
        assert_eq!(d.priority, vec![0, 0]);
    }

    #[test]
    fn json_round_trip() {
        let d = two_state();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let f: DpwFile = serde_json::from_str(&text).unwrap();
        assert_eq!(Dpw::from_json(&f, d.alphabet.clone()).unwrap(), d);
    }

    #[test]
    fn reduction_preserves_the_language() {
        use rand::{Rng, SeedableRng};
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..=7);
            let d = Dpw {
                alphabet: s.clone(),
                delta: (0..n)
                    .map(|_| (0..2).map(|_| rng.random_range(0..n) as u32).collect())
                    .collect(),
                initial: 0,
                priority: (0..n).map(|_| rng.random_range(0..4)).collect(),
            };
            let r = d.reduce();
            assert!(r.num_states() <= d.trim().num_states());
            for _ in 0..60 {
                let p: Vec<usize> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..2)).collect();
                let c: Vec<usize> = (0..rng.random_range(1..5)).map(|_| rng.random_range(0..2)).collect();
                let w = Word::new(p, c);
                assert_eq!(r.accepts(&w).unwrap(), d.accepts(&w).unwrap());
            }
        }
    }

    #[test]
    fn reduction_merges_a_transient_start() {
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        let d = Dpw {
            alphabet: s,
            delta: vec![vec![1, 2], vec![1, 2], vec![2, 2]],
            initial: 0,
            priority: vec![0, 1, 2],
        };
        assert_eq!(d.reduce().num_states(), 2);
    }
}
