use std::fmt;
use std::sync::Arc;

use super::alphabet::Alphabet;

/// LTL syntax over letters. `Letters` holds a sorted, duplicate-free set of
/// letter indices and is true at a position whose letter is in the set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    True,
    False,
    Letters(Vec<usize>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Next(Box<Expr>),
    Until(Box<Expr>, Box<Expr>),
    Release(Box<Expr>, Box<Expr>),
    Eventually(Box<Expr>),
    Always(Box<Expr>),
}

impl Expr {
    pub fn letter(l: usize) -> Expr {
        Expr::Letters(vec![l])
    }

    pub fn letters<I: IntoIterator<Item = usize>>(ls: I) -> Expr {
        let mut v: Vec<usize> = ls.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Expr::Letters(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn and(self, rhs: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Expr) -> Expr {
        Expr::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Expr) -> Expr {
        Expr::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Expr {
        Expr::Next(Box::new(self))
    }

    pub fn until(self, rhs: Expr) -> Expr {
        Expr::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Expr) -> Expr {
        Expr::Release(Box::new(self), Box::new(rhs))
    }

    pub fn eventually(self) -> Expr {
        Expr::Eventually(Box::new(self))
    }

    pub fn always(self) -> Expr {
        Expr::Always(Box::new(self))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items.into_iter().reduce(Expr::and).unwrap_or(Expr::True)
    }

    /// Disjunction of all items; `false` when empty.
    pub fn any<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items.into_iter().reduce(Expr::or).unwrap_or(Expr::False)
    }

    fn map_letters(&self, map: &[Vec<usize>]) -> Expr {
        let m = |e: &Expr| Box::new(e.map_letters(map));
        match self {
            Expr::True => Expr::True,
            Expr::False => Expr::False,
            Expr::Letters(ls) => Expr::letters(ls.iter().flat_map(|&l| map[l].iter().copied())),
            Expr::Not(a) => Expr::Not(m(a)),
            Expr::And(a, b) => Expr::And(m(a), m(b)),
            Expr::Or(a, b) => Expr::Or(m(a), m(b)),
            Expr::Implies(a, b) => Expr::Implies(m(a), m(b)),
            Expr::Next(a) => Expr::Next(m(a)),
            Expr::Until(a, b) => Expr::Until(m(a), m(b)),
            Expr::Release(a, b) => Expr::Release(m(a), m(b)),
            Expr::Eventually(a) => Expr::Eventually(m(a)),
            Expr::Always(a) => Expr::Always(m(a)),
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::True | Expr::False | Expr::Letters(_) => 0,
            Expr::Not(a) | Expr::Next(a) | Expr::Eventually(a) | Expr::Always(a) => a.size(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(a, b) | Expr::Release(a, b) => {
                a.size() + b.size()
            }
        }
    }

    /// Nesting depth of operators; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::True | Expr::False | Expr::Letters(_) => 0,
            Expr::Not(a) | Expr::Next(a) | Expr::Eventually(a) | Expr::Always(a) => 1 + a.depth(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(a, b) | Expr::Release(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn max_letter(&self) -> Option<usize> {
        match self {
            Expr::True | Expr::False => None,
            Expr::Letters(ls) => ls.last().copied(),
            Expr::Not(a) | Expr::Next(a) | Expr::Eventually(a) | Expr::Always(a) => a.max_letter(),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Implies(a, b) | Expr::Until(a, b) | Expr::Release(a, b) => {
                a.max_letter().max(b.max_letter())
            }
        }
    }
}

/// A formula together with the alphabet its letters refer to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub alphabet: Arc<Alphabet>,
    pub expr: Expr,
}

impl Formula {
    pub fn new(alphabet: Arc<Alphabet>, expr: Expr) -> Self {
        debug_assert!(expr.max_letter().is_none_or(|l| l < alphabet.len()));
        Formula { alphabet, expr }
    }

    pub fn size(&self) -> usize {
        self.expr.size()
    }

    pub fn negate(&self) -> Formula {
        Formula::new(self.alphabet.clone(), self.expr.clone().not())
    }

    /// The same formula over `target`, matching letters by name. Letters
    /// missing from `target` never occur there and are dropped.
    pub fn translate(&self, target: &Arc<Alphabet>) -> Formula {
        if self.alphabet.same_as(target) {
            return Formula::new(target.clone(), self.expr.clone());
        }
        let map: Vec<Vec<usize>> = self
            .alphabet
            .letters()
            .iter()
            .map(|l| target.index(&l.name).into_iter().collect())
            .collect();
        self.substitute(target, &map)
    }

    /// Replaces every letter `l` by the letter set `map[l]` of `target`.
    pub fn substitute(&self, target: &Arc<Alphabet>, map: &[Vec<usize>]) -> Formula {
        Formula::new(target.clone(), self.expr.map_letters(map))
    }
}

const KEYWORDS: [&str; 7] = ["true", "false", "X", "F", "G", "U", "R"];

pub(crate) fn is_bare_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '=' | '<' | '>' | '.')
}

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || KEYWORDS.contains(&name)
        || !name.chars().all(is_bare_char)
        || name.starts_with(['=', '<', '>', '.'])
}

pub(crate) fn write_letter(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if needs_quotes(name) {
        write!(f, "\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        f.write_str(name)
    }
}

struct Show<'a> {
    e: &'a Expr,
    a: &'a Alphabet,
}

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e| Show { e, a: self.a };
        match self.e {
            Expr::True => f.write_str("true"),
            Expr::False => f.write_str("false"),
            Expr::Letters(ls) if ls.len() == 1 => write_letter(f, self.a.name(ls[0])),
            Expr::Letters(ls) => {
                f.write_str("{")?;
                for (i, &l) in ls.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_letter(f, self.a.name(l))?;
                }
                f.write_str("}")
            }
            Expr::Not(a) => write!(f, "!{}", sub(a)),
            Expr::Next(a) => write!(f, "X {}", sub(a)),
            Expr::Eventually(a) => write!(f, "F {}", sub(a)),
            Expr::Always(a) => write!(f, "G {}", sub(a)),
            Expr::And(a, b) => write!(f, "({} & {})", sub(a), sub(b)),
            Expr::Or(a, b) => write!(f, "({} | {})", sub(a), sub(b)),
            Expr::Implies(a, b) => write!(f, "({} -> {})", sub(a), sub(b)),
            Expr::Until(a, b) => write!(f, "({} U {})", sub(a), sub(b)),
            Expr::Release(a, b) => write!(f, "({} R {})", sub(a), sub(b)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Show {
            e: &self.expr,
            a: &self.alphabet,
        }
        .fmt(f)
    }
}
