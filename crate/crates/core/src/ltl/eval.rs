use super::alphabet::Word;
use super::formula::{Expr, Formula};
use crate::error::Result;

/// Truth of `f` at position 0 of the ultimately periodic word `w`.
///
/// Each subformula is evaluated at every position of the unrolled
/// representation; until and release are solved as least and greatest
/// fixpoints over the successor map.
pub fn eval_lasso(f: &Formula, w: &Word) -> Result<bool> {
    w.check(&f.alphabet)?;
    Ok(eval(&f.expr, w)[0])
}

fn eval(e: &Expr, w: &Word) -> Vec<bool> {
    let n = w.len();
    match e {
        Expr::True => vec![true; n],
        Expr::False => vec![false; n],
        Expr::Letters(ls) => (0..n).map(|i| ls.binary_search(&w.at(i)).is_ok()).collect(),
        Expr::Not(a) => eval(a, w).into_iter().map(|b| !b).collect(),
        Expr::And(a, b) => zip(eval(a, w), eval(b, w), |x, y| x && y),
        Expr::Or(a, b) => zip(eval(a, w), eval(b, w), |x, y| x || y),
        Expr::Implies(a, b) => zip(eval(a, w), eval(b, w), |x, y| !x || y),
        Expr::Next(a) => {
            let va = eval(a, w);
            (0..n).map(|i| va[w.next(i)]).collect()
        }
        Expr::Until(a, b) => until(&eval(a, w), &eval(b, w), w),
        Expr::Release(a, b) => release(&eval(a, w), &eval(b, w), w),
        Expr::Eventually(a) => until(&vec![true; n], &eval(a, w), w),
        Expr::Always(a) => release(&vec![false; n], &eval(a, w), w),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

fn until(a: &[bool], b: &[bool], w: &Word) -> Vec<bool> {
    let n = w.len();
    let mut v = vec![false; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let x = b[i] || (a[i] && v[w.next(i)]);
            if x != v[i] {
                v[i] = x;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

fn release(a: &[bool], b: &[bool], w: &Word) -> Vec<bool> {
    let n = w.len();
    let mut v = vec![true; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let x = b[i] && (a[i] || v[w.next(i)]);
            if x != v[i] {
                v[i] = x;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    True,
    False,
    Letters(u64),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

/// A compiled evaluator for words of at most 64 positions that works on
/// position bitmasks. Intended for exhaustive enumeration.
#[derive(Clone, Debug)]
pub struct LtlEvaluator {
    ops: Vec<Op>,
    vals: Vec<u64>,
}

impl LtlEvaluator {
    /// Compiles `f`; the alphabet must have at most 64 letters.
    pub fn new(f: &Formula) -> Self {
        assert!(f.alphabet.len() <= 64, "alphabet too large for the bitmask evaluator");
        let mut ops = Vec::new();
        compile(&f.expr, &mut ops);
        let vals = vec![0; ops.len()];
        LtlEvaluator { ops, vals }
    }

    /// Same result as [`eval_lasso`] for words of length at most 64.
    pub fn eval(&mut self, prefix: &[usize], cycle: &[usize]) -> bool {
        let k = prefix.len();
        let n = k + cycle.len();
        assert!(n <= 64 && !cycle.is_empty());
        let all: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let letter = |i: usize| if i < k { prefix[i] } else { cycle[i - k] };
        // next(v) has bit i set iff v has bit next(i) set.
        let next = |v: u64| -> u64 { (v >> 1) | (((v >> k) & 1) << (n - 1)) };
        for j in 0..self.ops.len() {
            let v = match self.ops[j] {
                Op::True => all,
                Op::False => 0,
                Op::Letters(mask) => {
                    let mut v = 0u64;
                    for i in 0..n {
                        v |= ((mask >> letter(i)) & 1) << i;
                    }
                    v
                }
                Op::Not(a) => !self.vals[a] & all,
                Op::And(a, b) => self.vals[a] & self.vals[b],
                Op::Or(a, b) => self.vals[a] | self.vals[b],
                Op::Implies(a, b) => (!self.vals[a] | self.vals[b]) & all,
                Op::Next(a) => next(self.vals[a]),
                Op::Until(a, b) => {
                    let (va, vb) = (self.vals[a], self.vals[b]);
                    let mut v = vb;
                    loop {
                        let x = vb | (va & next(v));
                        if x == v {
                            break v;
                        }
                        v = x;
                    }
                }
                Op::Release(a, b) => {
                    let (va, vb) = (self.vals[a], self.vals[b]);
                    let mut v = vb;
                    loop {
                        let x = vb & (va | next(v));
                        if x == v {
                            break v;
                        }
                        v = x;
                    }
                }
            };
            self.vals[j] = v;
        }
        self.vals.last().unwrap() & 1 == 1
    }
}

fn compile(e: &Expr, ops: &mut Vec<Op>) -> usize {
    let op = match e {
        Expr::True => Op::True,
        Expr::False => Op::False,
        Expr::Letters(ls) => Op::Letters(ls.iter().fold(0u64, |m, &l| m | (1 << l))),
        Expr::Not(a) => Op::Not(compile(a, ops)),
        Expr::And(a, b) => {
            let x = compile(a, ops);
            Op::And(x, compile(b, ops))
        }
        Expr::Or(a, b) => {
            let x = compile(a, ops);
            Op::Or(x, compile(b, ops))
        }
        Expr::Implies(a, b) => {
            let x = compile(a, ops);
            Op::Implies(x, compile(b, ops))
        }
        Expr::Next(a) => Op::Next(compile(a, ops)),
        Expr::Until(a, b) => {
            let x = compile(a, ops);
            Op::Until(x, compile(b, ops))
        }
        Expr::Release(a, b) => {
            let x = compile(a, ops);
            Op::Release(x, compile(b, ops))
        }
        Expr::Eventually(a) => {
            let t = ops.len();
            ops.push(Op::True);
            Op::Until(t, compile(a, ops))
        }
        Expr::Always(a) => {
            let f = ops.len();
            ops.push(Op::False);
            Op::Release(f, compile(a, ops))
        }
    };
    ops.push(op);
    ops.len() - 1
}
