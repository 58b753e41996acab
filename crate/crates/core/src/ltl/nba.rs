use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::alphabet::{Alphabet, LetterSet, Word};
use super::formula::{Expr, Formula};
use crate::error::{Error, Result};
use crate::graph;

/// Nondeterministic Büchi automaton with letter-set labelled transitions and
/// state-based acceptance.
#[derive(Clone, Debug)]
pub struct Nba {
    pub alphabet: Arc<Alphabet>,
    pub initial: Vec<usize>,
    pub accepting: FixedBitSet,
    pub transitions: Vec<Vec<(LetterSet, usize)>>,
}

impl Nba {
    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    /// Successor set of `q` on letter `l`.
    pub fn post(&self, q: usize, l: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions[q]
            .iter()
            .filter(move |(ls, _)| ls.contains(l))
            .map(|&(_, t)| t)
    }

    /// Lasso membership: searches the product with the word for a reachable
    /// cycle through an accepting state.
    pub fn accepts(&self, w: &Word) -> Result<bool> {
        w.check(&self.alphabet)?;
        let n = w.len();
        let id = |q: usize, i: usize| q * n + i;
        let total = self.num_states() * n;
        let mut succ = vec![Vec::new(); total];
        let mut seen = vec![false; total];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &q in &self.initial {
            let v = id(q, 0);
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
        let mut reach = Vec::new();
        while let Some(v) = queue.pop_front() {
            reach.push(v);
            let (q, i) = (v / n, v % n);
            let j = w.next(i);
            for t in self.post(q, w.at(i)) {
                let u = id(t, j);
                succ[v].push(u);
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        let label: Vec<u32> = (0..total)
            .map(|v| if self.accepting.contains(v / n) { 2 } else { 1 })
            .collect();
        Ok(graph::find_accepting_scc(&succ, &reach, &[&label], None).is_some())
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph nba {\n  rankdir=LR;\n");
        for q in 0..self.num_states() {
            let shape = if self.accepting.contains(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(s, "  n{q} [shape={shape}, label=\"{q}\"];");
        }
        for &q in &self.initial {
            let _ = writeln!(s, "  init{q} [shape=point];\n  init{q} -> n{q};");
        }
        for (q, ts) in self.transitions.iter().enumerate() {
            for (ls, t) in ts {
                let names: Vec<&str> = ls.ones().map(|l| self.alphabet.name(l)).collect();
                let _ = writeln!(
                    s,
                    "  n{q} -> n{t} [label=\"{}\"];",
                    crate::dot::escape(&names.join(","))
                );
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Negation normal form node, hash-consed in [`Nnf`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(LetterSet),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

struct Nnf {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
    full: LetterSet,
}

impl Nnf {
    fn new(alphabet: &Alphabet) -> Self {
        let mut n = Nnf {
            nodes: Vec::new(),
            index: HashMap::new(),
            full: alphabet.full_set(),
        };
        n.intern(Node::True);
        n.intern(Node::False);
        n
    }

    const TRUE: u32 = 0;
    const FALSE: u32 = 1;

    fn intern(&mut self, node: Node) -> u32 {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(node.clone());
        self.index.insert(node, i);
        i
    }

    fn lit(&mut self, ls: LetterSet) -> u32 {
        if ls.is_clear() {
            Self::FALSE
        } else if ls == self.full {
            Self::TRUE
        } else {
            self.intern(Node::Lit(ls))
        }
    }

    fn and(&mut self, a: u32, b: u32) -> u32 {
        match (a, b) {
            (Self::FALSE, _) | (_, Self::FALSE) => Self::FALSE,
            (Self::TRUE, x) | (x, Self::TRUE) => x,
            _ if a == b => a,
            _ => {
                if let (Node::Lit(x), Node::Lit(y)) = (&self.nodes[a as usize], &self.nodes[b as usize]) {
                    let mut z = x.clone();
                    z.intersect_with(y);
                    return self.lit(z);
                }
                self.intern(Node::And(a.min(b), a.max(b)))
            }
        }
    }

    fn or(&mut self, a: u32, b: u32) -> u32 {
        match (a, b) {
            (Self::TRUE, _) | (_, Self::TRUE) => Self::TRUE,
            (Self::FALSE, x) | (x, Self::FALSE) => x,
            _ if a == b => a,
            _ => {
                if let (Node::Lit(x), Node::Lit(y)) = (&self.nodes[a as usize], &self.nodes[b as usize]) {
                    let mut z = x.clone();
                    z.union_with(y);
                    return self.lit(z);
                }
                self.intern(Node::Or(a.min(b), a.max(b)))
            }
        }
    }

    fn next(&mut self, a: u32) -> u32 {
        match a {
            Self::TRUE | Self::FALSE => a,
            _ => self.intern(Node::Next(a)),
        }
    }

    fn until(&mut self, a: u32, b: u32) -> u32 {
        match b {
            Self::TRUE | Self::FALSE => return b,
            _ => {}
        }
        if a == Self::FALSE || a == b {
            return b;
        }
        // F F x = F x
        if a == Self::TRUE {
            if let Node::Until(Self::TRUE, _) = self.nodes[b as usize] {
                return b;
            }
        }
        self.intern(Node::Until(a, b))
    }

    fn release(&mut self, a: u32, b: u32) -> u32 {
        match b {
            Self::TRUE | Self::FALSE => return b,
            _ => {}
        }
        if a == Self::TRUE || a == b {
            return b;
        }
        // G G x = G x
        if a == Self::FALSE {
            if let Node::Release(Self::FALSE, _) = self.nodes[b as usize] {
                return b;
            }
        }
        self.intern(Node::Release(a, b))
    }

    fn build(&mut self, e: &Expr, neg: bool, alphabet: &Alphabet) -> u32 {
        match (e, neg) {
            (Expr::True, false) | (Expr::False, true) => Self::TRUE,
            (Expr::True, true) | (Expr::False, false) => Self::FALSE,
            (Expr::Letters(ls), _) => {
                let mut set = alphabet.empty_set();
                for &l in ls {
                    set.insert(l);
                }
                if neg {
                    set.toggle_range(..);
                }
                self.lit(set)
            }
            (Expr::Not(a), _) => self.build(a, !neg, alphabet),
            (Expr::And(a, b), false) | (Expr::Or(a, b), true) => {
                let x = self.build(a, neg, alphabet);
                let y = self.build(b, neg, alphabet);
                self.and(x, y)
            }
            (Expr::Or(a, b), false) | (Expr::And(a, b), true) => {
                let x = self.build(a, neg, alphabet);
                let y = self.build(b, neg, alphabet);
                self.or(x, y)
            }
            (Expr::Implies(a, b), false) => {
                let x = self.build(a, true, alphabet);
                let y = self.build(b, false, alphabet);
                self.or(x, y)
            }
            (Expr::Implies(a, b), true) => {
                let x = self.build(a, false, alphabet);
                let y = self.build(b, true, alphabet);
                self.and(x, y)
            }
            (Expr::Next(a), _) => {
                let x = self.build(a, neg, alphabet);
                self.next(x)
            }
            (Expr::Until(a, b), false) | (Expr::Release(a, b), true) => {
                let x = self.build(a, neg, alphabet);
                let y = self.build(b, neg, alphabet);
                self.until(x, y)
            }
            (Expr::Release(a, b), false) | (Expr::Until(a, b), true) => {
                let x = self.build(a, neg, alphabet);
                let y = self.build(b, neg, alphabet);
                self.release(x, y)
            }
            (Expr::Eventually(a), false) | (Expr::Always(a), true) => {
                let y = self.build(a, neg, alphabet);
                self.until(Self::TRUE, y)
            }
            (Expr::Always(a), false) | (Expr::Eventually(a), true) => {
                let y = self.build(a, neg, alphabet);
                self.release(Self::FALSE, y)
            }
        }
    }
}

/// One way of satisfying a set of obligations for one step.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Move {
    letters: LetterSet,
    next: BTreeSet<u32>,
    postponed: BTreeSet<u32>,
}

fn expand(nnf: &Nnf, state: &BTreeSet<u32>) -> Vec<Move> {
    let mut out = Vec::new();
    let todo: Vec<u32> = state.iter().copied().collect();
    let start = Move {
        letters: nnf.full.clone(),
        next: BTreeSet::new(),
        postponed: BTreeSet::new(),
    };
    expand_rec(nnf, todo, BTreeSet::new(), start, &mut out);
    out
}

fn expand_rec(nnf: &Nnf, mut todo: Vec<u32>, mut done: BTreeSet<u32>, mut m: Move, out: &mut Vec<Move>) {
    while let Some(f) = todo.pop() {
        if !done.insert(f) {
            continue;
        }
        match &nnf.nodes[f as usize] {
            Node::True => {}
            Node::False => return,
            Node::Lit(ls) => {
                m.letters.intersect_with(ls);
                if m.letters.is_clear() {
                    return;
                }
            }
            Node::And(a, b) => {
                todo.push(*a);
                todo.push(*b);
            }
            Node::Or(a, b) => {
                let mut t2 = todo.clone();
                t2.push(*b);
                expand_rec(nnf, t2, done.clone(), m.clone(), out);
                todo.push(*a);
            }
            Node::Next(a) => {
                m.next.insert(*a);
            }
            Node::Until(a, b) => {
                let mut t2 = todo.clone();
                t2.push(*a);
                let mut m2 = m.clone();
                m2.next.insert(f);
                m2.postponed.insert(f);
                expand_rec(nnf, t2, done.clone(), m2, out);
                todo.push(*b);
            }
            Node::Release(a, b) => {
                let mut t2 = todo.clone();
                t2.push(*b);
                let mut m2 = m.clone();
                m2.next.insert(f);
                expand_rec(nnf, t2, done.clone(), m2, out);
                todo.push(*a);
                todo.push(*b);
            }
        }
    }
    out.push(m);
}

/// Merges moves with equal targets and drops moves dominated by another
/// move with more letters, fewer obligations and fewer postponed untils.
fn reduce(moves: Vec<Move>) -> Vec<Move> {
    let mut merged: BTreeMap<(BTreeSet<u32>, BTreeSet<u32>), LetterSet> = BTreeMap::new();
    for m in moves {
        merged
            .entry((m.next, m.postponed))
            .and_modify(|ls| ls.union_with(&m.letters))
            .or_insert(m.letters);
    }
    let moves: Vec<Move> = merged
        .into_iter()
        .map(|((next, postponed), letters)| Move {
            letters,
            next,
            postponed,
        })
        .collect();
    let dominated = |a: &Move, b: &Move| {
        a.letters.is_subset(&b.letters) && b.next.is_subset(&a.next) && b.postponed.is_subset(&a.postponed)
    };
    let mut keep = vec![true; moves.len()];
    for i in 0..moves.len() {
        for j in 0..moves.len() {
            if i != j && keep[j] && dominated(&moves[i], &moves[j]) {
                keep[i] = false;
                break;
            }
        }
    }
    moves
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(m, _)| m)
        .collect()
}

/// Translates `f` into a Büchi automaton with the obligation-set tableau:
/// states are sets of pending obligations, untils are tracked as a
/// generalized Büchi condition on moves that do not postpone them, and the
/// result is degeneralized with a counter.
pub fn ltl_to_nba(f: &Formula) -> Result<Nba> {
    ltl_to_nba_with_budget(f, crate::model::verify::DEFAULT_BUDGET)
}

pub fn ltl_to_nba_with_budget(f: &Formula, budget: usize) -> Result<Nba> {
    let alphabet = &f.alphabet;
    let mut nnf = Nnf::new(alphabet);
    let root = nnf.build(&f.expr, false, alphabet);

    let mut states: Vec<BTreeSet<u32>> = Vec::new();
    let mut index: HashMap<BTreeSet<u32>, usize> = HashMap::new();
    let mut moves: Vec<Vec<(Move, usize)>> = Vec::new();
    let first: BTreeSet<u32> = if root == Nnf::TRUE {
        BTreeSet::new()
    } else {
        BTreeSet::from([root])
    };
    let mut queue = VecDeque::new();
    index.insert(first.clone(), 0);
    states.push(first);
    queue.push_back(0);
    while let Some(i) = queue.pop_front() {
        let ms = reduce(expand(&nnf, &states[i]));
        let mut out = Vec::with_capacity(ms.len());
        for m in ms {
            let t = match index.get(&m.next) {
                Some(&t) => t,
                None => {
                    if states.len() >= budget {
                        return Err(Error::SizeBudgetExceeded {
                            what: "Büchi automaton",
                            budget,
                        });
                    }
                    let t = states.len();
                    index.insert(m.next.clone(), t);
                    states.push(m.next.clone());
                    queue.push_back(t);
                    t
                }
            };
            out.push((m, t));
        }
        moves.push(out);
    }

    let untils: Vec<u32> = moves
        .iter()
        .flatten()
        .flat_map(|(m, _)| m.postponed.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let k = untils.len();

    // Degeneralized states (tableau state, counter); counter k is accepting.
    let mut dindex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut dstates: Vec<(usize, usize)> = Vec::new();
    let mut trans: Vec<Vec<(LetterSet, usize)>> = Vec::new();
    dindex.insert((0, 0), 0);
    dstates.push((0, 0));
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (t, c) = dstates[i];
        let mut out = Vec::new();
        for (m, target) in &moves[t] {
            let c2 = if k == 0 {
                0
            } else {
                let mut c2 = if c == k { 0 } else { c };
                while c2 < k && !m.postponed.contains(&untils[c2]) {
                    c2 += 1;
                }
                c2
            };
            let key = (*target, c2);
            let j = match dindex.get(&key) {
                Some(&j) => j,
                None => {
                    if dstates.len() >= budget {
                        return Err(Error::SizeBudgetExceeded {
                            what: "Büchi automaton",
                            budget,
                        });
                    }
                    let j = dstates.len();
                    dindex.insert(key, j);
                    dstates.push(key);
                    queue.push_back(j);
                    j
                }
            };
            out.push((m.letters.clone(), j));
        }
        trans.push(out);
    }
    let mut accepting = FixedBitSet::with_capacity(dstates.len());
    for (i, &(_, c)) in dstates.iter().enumerate() {
        if c == k {
            accepting.insert(i);
        }
    }
    let nba = Nba {
        alphabet: alphabet.clone(),
        initial: vec![0],
        accepting,
        transitions: trans,
    };
    Ok(simplify(&nba))
}

/// A state's class with its outgoing letters grouped by target class.
type Signature = (usize, Vec<(usize, Vec<usize>)>);

/// Removes states that cannot lie on an accepting run and merges states
/// with identical behaviour (coarsest forward bisimulation).
pub fn simplify(nba: &Nba) -> Nba {
    let n = nba.num_states();
    let succ: Vec<Vec<usize>> = nba
        .transitions
        .iter()
        .map(|ts| ts.iter().map(|&(_, t)| t).collect())
        .collect();
    let all: Vec<usize> = (0..n).collect();
    // States on an accepting cycle.
    let mut good = vec![false; n];
    for c in graph::sccs_of(&succ, &all) {
        if graph::is_nontrivial(&succ, &c) && c.iter().any(|&q| nba.accepting.contains(q)) {
            for q in c {
                good[q] = true;
            }
        }
    }
    // Backward closure: states that can reach an accepting cycle.
    let mut pred = vec![Vec::new(); n];
    for (q, ts) in succ.iter().enumerate() {
        for &t in ts {
            pred[t].push(q);
        }
    }
    let mut live = good.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&q| good[q]).collect();
    while let Some(q) = stack.pop() {
        for &p in &pred[q] {
            if !live[p] {
                live[p] = true;
                stack.push(p);
            }
        }
    }
    // Forward reachability among live states.
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = nba.initial.iter().copied().filter(|&q| live[q]).collect();
    for &q in &stack {
        reach[q] = true;
    }
    while let Some(q) = stack.pop() {
        for &t in &succ[q] {
            if live[t] && !reach[t] {
                reach[t] = true;
                stack.push(t);
            }
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&q| reach[q]).collect();
    if kept.is_empty() {
        return Nba {
            alphabet: nba.alphabet.clone(),
            initial: Vec::new(),
            accepting: FixedBitSet::new(),
            transitions: Vec::new(),
        };
    }

    // Partition refinement, starting from the accepting/non-accepting split.
    let mut class: HashMap<usize, usize> = kept
        .iter()
        .map(|&q| (q, usize::from(nba.accepting.contains(q))))
        .collect();
    loop {
        let mut sigs: HashMap<Signature, usize> = HashMap::new();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &q in &kept {
            let mut by_class: BTreeMap<usize, LetterSet> = BTreeMap::new();
            for (ls, t) in &nba.transitions[q] {
                if let Some(&c) = class.get(t) {
                    by_class
                        .entry(c)
                        .and_modify(|x| x.union_with(ls))
                        .or_insert_with(|| ls.clone());
                }
            }
            let sig = (
                class[&q],
                by_class.into_iter().map(|(c, ls)| (c, ls.ones().collect())).collect(),
            );
            let len = sigs.len();
            let id = *sigs.entry(sig).or_insert(len);
            next.insert(q, id);
        }
        let stable = sigs.len() == class.values().collect::<BTreeSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }
    // Renumber classes in order of first reachable representative.
    let mut order: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rep: Vec<usize> = Vec::new();
    let init_class = class[&nba.initial.iter().copied().find(|q| reach[*q]).unwrap()];
    let mut queue = VecDeque::from([init_class]);
    let first_of: HashMap<usize, usize> = kept.iter().rev().map(|&q| (class[&q], q)).collect();
    order.insert(init_class, 0);
    rep.push(first_of[&init_class]);
    while let Some(c) = queue.pop_front() {
        let q = first_of[&c];
        for (_, t) in &nba.transitions[q] {
            if let Some(&ct) = class.get(t) {
                if let std::collections::btree_map::Entry::Vacant(e) = order.entry(ct) {
                    e.insert(rep.len());
                    rep.push(first_of[&ct]);
                    queue.push_back(ct);
                }
            }
        }
    }
    let m = rep.len();
    let mut accepting = FixedBitSet::with_capacity(m);
    let mut transitions = Vec::with_capacity(m);
    for (i, &q) in rep.iter().enumerate() {
        if nba.accepting.contains(q) {
            accepting.insert(i);
        }
        let mut by_target: BTreeMap<usize, LetterSet> = BTreeMap::new();
        for (ls, t) in &nba.transitions[q] {
            if let Some(c) = class.get(t) {
                by_target
                    .entry(order[c])
                    .and_modify(|x| x.union_with(ls))
                    .or_insert_with(|| ls.clone());
            }
        }
        transitions.push(by_target.into_iter().map(|(t, ls)| (ls, t)).collect());
    }
    let mut initial: Vec<usize> = nba
        .initial
        .iter()
        .filter_map(|q| class.get(q).map(|c| order[c]))
        .collect();
    initial.sort_unstable();
    initial.dedup();
    Nba {
        alphabet: nba.alphabet.clone(),
        initial,
        accepting,
        transitions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{eval_lasso, parse_ltl};

    fn all_words(n_letters: usize, max_prefix: usize, max_cycle: usize) -> Vec<Word> {
        let mut seqs: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
        for len in 1..=max_prefix.max(max_cycle) {
            let mut next = Vec::new();
            for s in &seqs[len - 1] {
                for l in 0..n_letters {
                    let mut t = s.clone();
                    t.push(l);
                    next.push(t);
                }
            }
            seqs.push(next);
        }
        let mut out = Vec::new();
        for pl in 0..=max_prefix {
            for cl in 1..=max_cycle {
                for p in &seqs[pl] {
                    for c in &seqs[cl] {
                        out.push(Word::new(p.clone(), c.clone()));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn eventually_goal_has_two_states() {
        let s = Arc::new(Alphabet::plain(["goal", "other"]).unwrap());
        let f = parse_ltl("F goal", &s).unwrap();
        let nba = ltl_to_nba(&f).unwrap();
        assert_eq!(nba.num_states(), 2);
        for w in all_words(2, 3, 3) {
            assert_eq!(nba.accepts(&w).unwrap(), eval_lasso(&f, &w).unwrap());
        }
    }

    #[test]
    fn true_is_one_universal_state() {
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        let nba = ltl_to_nba(&parse_ltl("true", &s).unwrap()).unwrap();
        assert_eq!(nba.num_states(), 1);
        assert!(nba.accepting.contains(0));
        assert_eq!(nba.transitions[0].len(), 1);
        assert_eq!(nba.transitions[0][0].0.count_ones(..), 2);
    }

    #[test]
    fn false_is_empty() {
        let s = Arc::new(Alphabet::plain(["a", "b"]).unwrap());
        let nba = ltl_to_nba(&parse_ltl("G a & F b", &s).unwrap()).unwrap();
        assert_eq!(nba.num_states(), 0);
        assert!(!nba.accepts(&Word::new(vec![], vec![0])).unwrap());
    }

    #[test]
    fn agrees_with_semantics_on_small_words() {
        let s = Arc::new(Alphabet::plain(["a", "b", "c"]).unwrap());
        for text in [
            "a U b",
            "G F a",
            "F G !a",
            "(F G !a & G F b) -> G F c",
            "X (a R b)",
            "G (a -> X F b)",
            "!(a U (b U c))",
            "G F a & G F b",
        ] {
            let f = parse_ltl(text, &s).unwrap();
            let nba = ltl_to_nba(&f).unwrap();
            for w in all_words(3, 2, 3) {
                assert_eq!(
                    nba.accepts(&w).unwrap(),
                    eval_lasso(&f, &w).unwrap(),
                    "{text} on {}",
                    w.display(&s)
                );
            }
        }
    }
}
