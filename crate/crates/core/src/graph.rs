//! Small graph utilities over adjacency lists: strongly connected
//! components, shortest paths, edge-covering closed walks and the
//! accepting-cycle search shared by all emptiness checks.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// Strongly connected components of the subgraph induced by `nodes`.
pub fn sccs_of(succ: &[Vec<usize>], nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut local = vec![usize::MAX; succ.len()];
    let mut g: DiGraph<usize, ()> = DiGraph::with_capacity(nodes.len(), nodes.len());
    for &v in nodes {
        local[v] = g.add_node(v).index();
    }
    for &v in nodes {
        for &w in &succ[v] {
            if local[w] != usize::MAX {
                g.add_edge(NodeIndex::new(local[v]), NodeIndex::new(local[w]), ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|i| g[i]).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// True when the component contains a cycle.
pub fn is_nontrivial(succ: &[Vec<usize>], scc: &[usize]) -> bool {
    scc.len() > 1 || succ[scc[0]].contains(&scc[0])
}

/// Shortest path from any of `sources` to a node satisfying `target`,
/// moving only through nodes allowed by `allowed`.
pub fn bfs_path(
    succ: &[Vec<usize>],
    sources: &[usize],
    allowed: impl Fn(usize) -> bool,
    target: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; succ.len()];
    let mut seen = vec![false; succ.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if allowed(s) && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if target(v) {
            let mut path = vec![v];
            let mut cur = v;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &w in &succ[v] {
            if allowed(w) && !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// A closed walk from `start` that traverses every edge inside `set` and
/// returns to `start`. The returned sequence starts at `start` and omits the
/// final return to it. `set` must be strongly connected and nontrivial.
pub fn covering_walk(succ: &[Vec<usize>], set: &[usize], start: usize) -> Vec<usize> {
    let mut member = vec![false; succ.len()];
    for &v in set {
        member[v] = true;
    }
    let inside = |v: usize| member[v];
    let mut walk = vec![start];
    let mut cur = start;
    for &x in set {
        for &y in &succ[x] {
            if !member[y] {
                continue;
            }
            let to_x = bfs_path(succ, &[cur], inside, |v| v == x).expect("set is strongly connected");
            walk.extend_from_slice(&to_x[1..]);
            walk.push(y);
            cur = y;
        }
    }
    let back = if cur == start {
        vec![start]
    } else {
        bfs_path(succ, &[cur], inside, |v| v == start).expect("set is strongly connected")
    };
    walk.extend_from_slice(&back[1..]);
    walk.pop();
    if walk.is_empty() {
        walk.push(start);
    }
    walk
}

/// Fairness side condition for [`find_accepting_scc`]: every node may belong
/// to a group whose member edges must, inside an accepting component, cover
/// all `required` outcomes of that group.
pub struct Fairness<'a> {
    pub group: &'a [Option<usize>],
    pub outcome: &'a [usize],
    pub required: &'a [Vec<usize>],
}

/// Finds a nontrivial strongly connected set of nodes, reachable within
/// `nodes`, such that for every labeling the largest priority in the set is
/// even and every fairness group present in it covers all its outcomes.
/// Any closed walk traversing all edges of the returned set is then an
/// accepting cycle.
pub fn find_accepting_scc(
    succ: &[Vec<usize>],
    nodes: &[usize],
    labelings: &[&[u32]],
    fairness: Option<&Fairness<'_>>,
) -> Option<Vec<usize>> {
    let mut stack = sccs_of(succ, nodes);
    let mut member = vec![false; succ.len()];
    while let Some(c) = stack.pop() {
        if !is_nontrivial(succ, &c) {
            continue;
        }
        let mut remove = vec![false; c.len()];
        let mut any = false;
        for lab in labelings {
            let max = c.iter().map(|&v| lab[v]).max().unwrap();
            if max % 2 == 1 {
                for (i, &v) in c.iter().enumerate() {
                    if lab[v] == max {
                        remove[i] = true;
                        any = true;
                    }
                }
            }
        }
        if !any {
            if let Some(f) = fairness {
                for &v in &c {
                    member[v] = true;
                }
                let mut covered: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
                for &v in &c {
                    if let Some(g) = f.group[v] {
                        let e = covered.entry(g).or_default();
                        for &w in &succ[v] {
                            if member[w] {
                                e.push(f.outcome[w]);
                            }
                        }
                    }
                }
                let mut bad_groups = Vec::new();
                for (g, mut outs) in covered {
                    outs.sort_unstable();
                    outs.dedup();
                    if f.required[g].iter().any(|o| outs.binary_search(o).is_err()) {
                        bad_groups.push(g);
                    }
                }
                for &v in &c {
                    member[v] = false;
                }
                if !bad_groups.is_empty() {
                    for (i, &v) in c.iter().enumerate() {
                        if f.group[v].is_some_and(|g| bad_groups.contains(&g)) {
                            remove[i] = true;
                            any = true;
                        }
                    }
                }
            }
        }
        if !any {
            return Some(c);
        }
        let rest: Vec<usize> = c.iter().zip(&remove).filter(|(_, &r)| !r).map(|(&v, _)| v).collect();
        if !rest.is_empty() {
            stack.extend(sccs_of(succ, &rest));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); n];
        for &(a, b) in edges {
            g[a].push(b);
        }
        g
    }

    #[test]
    fn sccs_split_a_chain_of_cycles() {
        let g = graph(5, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (4, 4)]);
        let mut c = sccs_of(&g, &[0, 1, 2, 3, 4]);
        c.sort();
        assert_eq!(c, vec![vec![0, 1], vec![2, 3], vec![4]]);
        assert!(is_nontrivial(&g, &[4]));
        let g2 = graph(1, &[]);
        assert!(!is_nontrivial(&g2, &[0]));
    }

    #[test]
    fn covering_walk_visits_every_edge() {
        let g = graph(3, &[(0, 1), (1, 0), (1, 2), (2, 0), (2, 2)]);
        let w = covering_walk(&g, &[0, 1, 2], 0);
        let mut edges = Vec::new();
        for i in 0..w.len() {
            edges.push((w[i], w[(i + 1) % w.len()]));
        }
        for e in [(0, 1), (1, 0), (1, 2), (2, 0), (2, 2)] {
            assert!(edges.contains(&e), "{e:?} missing from {w:?}");
        }
        for (a, b) in edges {
            assert!(g[a].contains(&b));
        }
    }

    #[test]
    fn parity_refinement_drops_odd_maxima() {
        // 0 <-> 1 with priorities 3 and 2; 1 has an even self-loop.
        let g = graph(2, &[(0, 1), (1, 0), (1, 1)]);
        let pr = [3, 2];
        let found = find_accepting_scc(&g, &[0, 1], &[&pr], None).unwrap();
        assert_eq!(found, vec![1]);
        let pr_odd = [3, 1];
        assert!(find_accepting_scc(&g, &[0, 1], &[&pr_odd], None).is_none());
    }

    #[test]
    fn fairness_refinement_removes_uncovered_groups() {
        // Node 0 in group 0 must see outcomes {1, 2}; only 1 loops back.
        let g = graph(3, &[(0, 1), (0, 2), (1, 0)]);
        let group = [Some(0), None, None];
        let outcome = [0, 1, 2];
        let required = [vec![1, 2]];
        let f = Fairness {
            group: &group,
            outcome: &outcome,
            required: &required,
        };
        assert!(find_accepting_scc(&g, &[0, 1, 2], &[], Some(&f)).is_none());
        assert!(find_accepting_scc(&g, &[0, 1, 2], &[], None).is_some());
    }
}
