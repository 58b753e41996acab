use std::collections::VecDeque;

use serde::Serialize;

use super::game::{ParityGame, Player};
use crate::graph::find_accepting_scc;

/// Winning regions and positional strategies of a solved parity game.
///
/// `strategy[v]` is the move of the winner of `v` when `v` belongs to that
/// winner, and `None` otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub winner: Vec<Player>,
    pub strategy: Vec<Option<usize>>,
}

impl Solution {
    pub fn region(&self, player: Player) -> Vec<usize> {
        (0..self.winner.len()).filter(|&v| self.winner[v] == player).collect()
    }

    pub fn wins(&self, player: Player, v: usize) -> bool {
        self.winner[v] == player
    }
}

struct Solver<'a> {
    g: &'a ParityGame,
    pred: Vec<Vec<usize>>,
}

struct Partial {
    even: Vec<bool>,
    odd: Vec<bool>,
    strategy: Vec<Option<usize>>,
}

impl Partial {
    fn empty(n: usize) -> Self {
        Partial {
            even: vec![false; n],
            odd: vec![false; n],
            strategy: vec![None; n],
        }
    }

    fn region(&self, p: Player) -> &Vec<bool> {
        match p {
            Player::Even => &self.even,
            Player::Odd => &self.odd,
        }
    }

    fn region_mut(&mut self, p: Player) -> &mut Vec<bool> {
        match p {
            Player::Even => &mut self.even,
            Player::Odd => &mut self.odd,
        }
    }
}

impl Solver<'_> {
    /// Attractor of `target` for `player` inside `mask`. Attracted nodes of
    /// `player` record the edge that pulled them in.
    fn attractor(&self, mask: &[bool], player: Player, target: &[bool], strategy: &mut [Option<usize>]) -> Vec<bool> {
        let g = self.g;
        let n = g.len();
        let mut attr = vec![false; n];
        let mut count = vec![0usize; n];
        let mut queue = VecDeque::new();
        for v in 0..n {
            if !mask[v] {
                continue;
            }
            count[v] = g.succ[v].iter().filter(|&&w| mask[w]).count();
            if target[v] {
                attr[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(w) = queue.pop_front() {
            for &v in &self.pred[w] {
                if !mask[v] || attr[v] {
                    continue;
                }
                if g.owner[v] == player {
                    attr[v] = true;
                    strategy[v] = Some(w);
                    queue.push_back(v);
                } else {
                    count[v] -= 1;
                    if count[v] == 0 {
                        attr[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        attr
    }

    fn solve(&self, mask: &[bool]) -> Partial {
        let g = self.g;
        let n = g.len();
        let Some(d) = (0..n).filter(|&v| mask[v]).map(|v| g.priority[v]).max() else {
            return Partial::empty(n);
        };
        let p = Player::of_priority(d);
        let top: Vec<bool> = (0..n).map(|v| mask[v] && g.priority[v] == d).collect();
        let mut strat_a = vec![None; n];
        let a = self.attractor(mask, p, &top, &mut strat_a);
        let sub: Vec<bool> = (0..n).map(|v| mask[v] && !a[v]).collect();
        let inner = self.solve(&sub);

        if !inner.region(p.opponent()).iter().any(|&x| x) {
            let mut out = Partial::empty(n);
            for v in 0..n {
                if !mask[v] {
                    continue;
                }
                out.region_mut(p)[v] = true;
                if g.owner[v] != p {
                    continue;
                }
                out.strategy[v] = if sub[v] {
                    inner.strategy[v]
                } else if top[v] {
                    g.succ[v].iter().copied().find(|&w| mask[w])
                } else {
                    strat_a[v]
                };
            }
            return out;
        }

        let q = p.opponent();
        let mut strat_b = vec![None; n];
        let b = self.attractor(mask, q, inner.region(q), &mut strat_b);
        let rest: Vec<bool> = (0..n).map(|v| mask[v] && !b[v]).collect();
        let mut out = self.solve(&rest);
        for v in 0..n {
            if !b[v] {
                continue;
            }
            out.region_mut(q)[v] = true;
            if g.owner[v] == q {
                out.strategy[v] = if inner.region(q)[v] {
                    inner.strategy[v]
                } else {
                    strat_b[v]
                };
            }
        }
        out
    }
}

/// Solves `g` with Zielonka's recursive algorithm. Deterministic: ties are
/// broken by node order.
pub fn solve_parity(g: &ParityGame) -> Solution {
    let solver = Solver {
        g,
        pred: g.predecessors(),
    };
    let all = vec![true; g.len()];
    let part = solver.solve(&all);
    let winner = (0..g.len())
        .map(|v| {
            debug_assert!(part.even[v] != part.odd[v]);
            if part.even[v] {
                Player::Even
            } else {
                Player::Odd
            }
        })
        .collect();
    Solution {
        winner,
        strategy: part.strategy,
    }
}

/// Checks that the strategy of `player` wins from every node of its region:
/// the region is closed under the opponent's moves and under the strategy,
/// and every cycle of the restricted graph has a winning largest priority.
pub fn verify_strategy(g: &ParityGame, sol: &Solution, player: Player) -> bool {
    let n = g.len();
    let inside = |v: usize| sol.winner[v] == player;
    let mut succ = vec![Vec::new(); n];
    for v in (0..n).filter(|&v| inside(v)) {
        if g.owner[v] == player {
            match sol.strategy[v] {
                Some(w) if g.succ[v].contains(&w) && inside(w) => succ[v].push(w),
                _ => return false,
            }
        } else {
            if g.succ[v].iter().any(|&w| !inside(w)) {
                return false;
            }
            succ[v] = g.succ[v].clone();
        }
    }
    let nodes: Vec<usize> = (0..n).filter(|&v| inside(v)).collect();
    // Look for a cycle won by the opponent by shifting its parity to even.
    let shift = match player {
        Player::Even => 1,
        Player::Odd => 0,
    };
    let lab: Vec<u32> = g.priority.iter().map(|p| p + shift).collect();
    find_accepting_scc(&succ, &nodes, &[&lab], None).is_none()
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Winning region of Even by trying every positional Even strategy and
    /// checking that the resulting one-player graph has no odd cycle
    /// reachable from a node.
    fn brute_force_even(g: &ParityGame) -> Vec<bool> {
        let n = g.len();
        let even: Vec<usize> = (0..n).filter(|&v| g.owner[v] == Player::Even).collect();
        let mut choice = vec![0usize; even.len()];
        let mut win = vec![false; n];
        loop {
            let mut succ = g.succ.clone();
            for (i, &v) in even.iter().enumerate() {
                succ[v] = vec![g.succ[v][choice[i]]];
            }
            let lab: Vec<u32> = g.priority.iter().map(|p| p + 1).collect();
            for s in 0..n {
                let mut seen = vec![false; n];
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(v) = stack.pop() {
                    for &w in &succ[v] {
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                let reach: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
                if find_accepting_scc(&succ, &reach, &[&lab], None).is_none() {
                    win[s] = true;
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
                let mut s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
                if s.is_empty() {
                    s.push(rng.random_range(0..n));
                }
                s
            })
            .collect();
        ParityGame::new(owner, priority, succ)
    }

    #[test]
    fn self_loops() {
        let g = ParityGame::new(vec![Player::Even], vec![0], vec![vec![0]]);
        assert_eq!(solve_parity(&g).winner, vec![Player::Even]);
        let g = ParityGame::new(vec![Player::Even], vec![1], vec![vec![0]]);
        assert_eq!(solve_parity(&g).winner, vec![Player::Odd]);
    }

    #[test]
    fn choice_matters() {
        // Even at node 0 can move to an even loop (1) or an odd loop (2).
        let g = ParityGame::new(
            vec![Player::Even, Player::Odd, Player::Odd],
            vec![0, 2, 1],
            vec![vec![1, 2], vec![1], vec![2]],
        );
        let sol = solve_parity(&g);
        assert_eq!(sol.winner, vec![Player::Even, Player::Even, Player::Odd]);
        assert_eq!(sol.strategy[0], Some(1));
        assert!(verify_strategy(&g, &sol, Player::Even));
        assert!(verify_strategy(&g, &sol, Player::Odd));
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_game(&mut rng);
            let sol = solve_parity(&g);
            let bf = brute_force_even(&g);
            for (v, &even) in bf.iter().enumerate() {
                assert_eq!(sol.winner[v] == Player::Even, even, "node {v} of {g:?}");
            }
            assert!(verify_strategy(&g, &sol, Player::Even));
            assert!(verify_strategy(&g, &sol, Player::Odd));
        }
    }
}
