use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::dpw::Dpw;
use crate::constraints::{qnp_atoms, qnp_variables};
use crate::error::Result;
use crate::ltl::Alphabet;
use crate::model::{Level, Pondp};

/// Letters carrying the numerical atoms of one variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QnpLetters {
    pub var: String,
    /// Letters in which the variable is zero.
    pub zero: Vec<usize>,
    pub inc: Vec<usize>,
    pub dec: Vec<usize>,
}

/// Automaton for `(∧_X qnp(X)) -> F goal` built without determinization.
///
/// A variable is spoiled by a letter that increments it or shows it at
/// zero, and helped by a letter that decrements it. States hold the
/// variables ordered by how recently they were spoiled; spoiling the
/// variable at position `i` from the front emits `2i + 3`, helping it emits
/// `2i + 2`. Variables spoiled only finitely often end up at the back, so
/// the largest recurring priority is even iff one of them is helped
/// infinitely often. One variable needs the three priorities 1, 2, 3; in
/// general `2|V| + 1` are used. Goal letters lead to an accepting sink.
pub fn qnp_dpw_direct(alphabet: Arc<Alphabet>, vars: &[QnpLetters], goal: &[usize]) -> Dpw {
    let n = vars.len();
    let k = alphabet.len();
    let mut is_goal = vec![false; k];
    for &l in goal {
        is_goal[l] = true;
    }
    let mut bad = vec![vec![false; n]; k];
    let mut good = vec![vec![false; n]; k];
    for (i, v) in vars.iter().enumerate() {
        for &l in v.zero.iter().chain(&v.inc) {
            bad[l][i] = true;
        }
        for &l in &v.dec {
            good[l][i] = true;
        }
    }

    const SINK: u32 = 0;
    let mut delta: Vec<Vec<u32>> = vec![vec![SINK; k]];
    let mut priority = vec![2];
    let mut states: Vec<Vec<usize>> = vec![Vec::new()];
    let mut index: HashMap<(Vec<usize>, u32), u32> = HashMap::new();
    let start = ((0..n).collect::<Vec<_>>(), 1u32);
    index.insert(start.clone(), 1);
    states.push(start.0);
    priority.push(start.1);
    delta.push(Vec::new());
    let mut i = 1;
    while i < states.len() {
        let perm = states[i].clone();
        let mut row = Vec::with_capacity(k);
        for l in 0..k {
            if is_goal[l] {
                row.push(SINK);
                continue;
            }
            let mut pr = 1;
            for (pos, &x) in perm.iter().enumerate() {
                if bad[l][x] {
                    pr = pr.max(2 * pos as u32 + 3);
                } else if good[l][x] {
                    pr = pr.max(2 * pos as u32 + 2);
                }
            }
            let next: Vec<usize> = perm
                .iter()
                .copied()
                .filter(|&x| bad[l][x])
                .chain(perm.iter().copied().filter(|&x| !bad[l][x]))
                .collect();
            let key = (next, pr);
            let t = match index.get(&key) {
                Some(&t) => t,
                None => {
                    let t = states.len() as u32;
                    index.insert(key.clone(), t);
                    states.push(key.0);
                    priority.push(key.1);
                    delta.push(Vec::new());
                    t
                }
            };
            row.push(t);
        }
        delta[i] = row;
        i += 1;
    }
    Dpw {
        alphabet,
        delta,
        initial: 1,
        priority,
    }
    .trim()
}

/// [`qnp_dpw_direct`] for the observation-level alphabet of `p`, with the
/// problem's variables and the observations of its goal states.
pub fn qnp_dpw_for_problem(p: &Pondp) -> Result<Dpw> {
    let alphabet = Arc::new(Alphabet::for_problem(p, Level::Observation)?);
    let obs_letter = |o: usize| alphabet.index(p.obs_name(o)).expect("observation letter");
    let act_letter = |a: usize| alphabet.index(p.action_name(a)).expect("action letter");
    let mut vars = Vec::new();
    for v in qnp_variables(p) {
        let atoms = qnp_atoms(p, &v)?;
        vars.push(QnpLetters {
            var: v,
            zero: atoms.zero.iter().map(|&o| obs_letter(o)).collect(),
            inc: atoms.inc.iter().map(|&a| act_letter(a)).collect(),
            dec: atoms.dec.iter().map(|&a| act_letter(a)).collect(),
        });
    }
    let goal: BTreeSet<usize> = p.goal_states().map(|s| obs_letter(p.obs(s))).collect();
    let goal: Vec<usize> = goal.into_iter().collect();
    Ok(qnp_dpw_direct(alphabet, &vars, &goal))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ltl::{eval_lasso, ltl_to_nba, parse_ltl, Word};
    use crate::omega::nba_to_dpw;

    fn two_vars() -> (Arc<Alphabet>, Vec<QnpLetters>, Vec<usize>) {
        let s = Arc::new(
            Alphabet::interleaved(
                ["X=0,Y=0", "X=0,Y>0", "X>0,Y=0", "X>0,Y>0"],
                ["incX", "decX", "incY", "decY", "decXY", "noop"],
            )
            .unwrap(),
        );
        let l = |n: &str| s.index(n).unwrap();
        let vars = vec![
            QnpLetters {
                var: "X".into(),
                zero: vec![l("X=0,Y=0"), l("X=0,Y>0")],
                inc: vec![l("incX")],
                dec: vec![l("decX"), l("decXY")],
            },
            QnpLetters {
                var: "Y".into(),
                zero: vec![l("X=0,Y=0"), l("X>0,Y=0")],
                inc: vec![l("incY")],
                dec: vec![l("decY"), l("decXY")],
            },
        ];
        (s.clone(), vars, vec![l("X=0,Y=0")])
    }

    const PHI2: &str = "(((F G !incX & G F {decX, decXY}) -> G F {\"X=0,Y=0\", \"X=0,Y>0\"}) \
        & ((F G !incY & G F {decY, decXY}) -> G F {\"X=0,Y=0\", \"X>0,Y=0\"})) \
        -> F \"X=0,Y=0\"";

    #[test]
    fn single_variable_has_three_priorities() {
        let s = Arc::new(Alphabet::interleaved(["X=0", "X>0"], ["Inc", "Dec"]).unwrap());
        let vars = [QnpLetters {
            var: "X".into(),
            zero: vec![0],
            inc: vec![2],
            dec: vec![3],
        }];
        let d = qnp_dpw_direct(s.clone(), &vars, &[0]);
        assert_eq!(d.priorities(), vec![1, 2, 3]);
        let f = parse_ltl("((F G !Inc & G F Dec) -> G F X=0) -> F X=0", &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let w = random_word(&mut rng, 4, 6);
            assert_eq!(d.accepts(&w).unwrap(), eval_lasso(&f, &w).unwrap());
        }
    }

    #[test]
    fn empty_variable_set_is_eventually_goal() {
        let s = Arc::new(Alphabet::plain(["g", "o"]).unwrap());
        let d = qnp_dpw_direct(s.clone(), &[], &[0]);
        let f = parse_ltl("F g", &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let w = random_word(&mut rng, 2, 5);
            assert_eq!(d.accepts(&w).unwrap(), eval_lasso(&f, &w).unwrap());
        }
    }

    #[test]
    fn two_variables_agree_with_pipeline() {
        let (s, vars, goal) = two_vars();
        let d = qnp_dpw_direct(s.clone(), &vars, &goal);
        assert_eq!(d.priorities(), vec![1, 2, 3, 4, 5]);
        let f = parse_ltl(PHI2, &s).unwrap();
        let generic = nba_to_dpw(&ltl_to_nba(&f).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3000 {
            let w = random_word(&mut rng, s.len(), 6);
            let want = eval_lasso(&f, &w).unwrap();
            assert_eq!(d.accepts(&w).unwrap(), want, "{}", w.display(&s));
            assert_eq!(generic.accepts(&w).unwrap(), want);
        }
    }

    pub(crate) fn random_word(rng: &mut ChaCha8Rng, letters: usize, max: usize) -> Word {
        let p = rng.random_range(0..=max);
        let c = rng.random_range(1..=max);
        Word::new(
            (0..p).map(|_| rng.random_range(0..letters)).collect(),
            (0..c).map(|_| rng.random_range(0..letters)).collect(),
        )
    }
}
