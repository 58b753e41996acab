use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::model::{Lasso, Level, Pondp};

/// Role of a letter in interleaved words `ω_0 a_0 ω_1 a_1 ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    /// A state or observation letter (even positions).
    Position,
    /// An action letter (odd positions).
    Action,
    /// A letter of an alphabet without the interleaving discipline.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub name: String,
    pub sort: Sort,
}

/// A finite alphabet; exactly one letter holds at every word position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<Letter>,
    index: HashMap<String, usize>,
}

pub type LetterSet = FixedBitSet;

impl Alphabet {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, l) in letters.iter().enumerate() {
            if index.insert(l.name.clone(), i).is_some() {
                return Err(Error::AlphabetMismatch(format!("letter `{}` occurs twice", l.name)));
            }
        }
        Ok(Alphabet { letters, index })
    }

    /// An alphabet of plain letters.
    pub fn plain<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Alphabet::new(
            names
                .into_iter()
                .map(|n| Letter {
                    name: n.into(),
                    sort: Sort::Plain,
                })
                .collect(),
        )
    }

    /// Interleaved alphabet of position letters followed by action letters.
    pub fn interleaved<I, J, S, T>(positions: I, actions: J) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut letters: Vec<Letter> = positions
            .into_iter()
            .map(|n| Letter {
                name: n.into(),
                sort: Sort::Position,
            })
            .collect();
        letters.extend(actions.into_iter().map(|n| Letter {
            name: n.into(),
            sort: Sort::Action,
        }));
        Alphabet::new(letters)
    }

    /// `Ω ∪ Act` of a problem (or `S ∪ Act` at the state level).
    pub fn for_problem(p: &Pondp, level: Level) -> Result<Self> {
        match level {
            Level::Observation => Alphabet::interleaved(p.observations(), p.actions()),
            Level::State => Alphabet::interleaved(p.states(), p.actions()),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn name(&self, i: usize) -> &str {
        &self.letters[i].name
    }

    pub fn sort(&self, i: usize) -> Sort {
        self.letters[i].sort
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn letter(&self, name: &str) -> Result<usize> {
        self.index(name).ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    pub fn is_interleaved(&self) -> bool {
        self.letters.iter().all(|l| l.sort != Sort::Plain)
    }

    pub fn empty_set(&self) -> LetterSet {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> LetterSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    pub fn set_of<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Result<LetterSet> {
        let mut s = self.empty_set();
        for n in names {
            s.insert(self.letter(n)?);
        }
        Ok(s)
    }

    /// Same letters (names and sorts) in the same order.
    pub fn same_as(&self, other: &Alphabet) -> bool {
        self.letters == other.letters
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.letters.iter().map(|l| l.name.as_str()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// An ultimately periodic word `prefix cycle^ω` of letter indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl Word {
    pub fn new(prefix: Vec<usize>, cycle: Vec<usize>) -> Self {
        assert!(!cycle.is_empty(), "word cycle must be nonempty");
        Word { prefix, cycle }
    }

    pub fn parse<S: AsRef<str>>(alphabet: &Alphabet, prefix: &[S], cycle: &[S]) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::NotATrajectory("word cycle must be nonempty".into()));
        }
        let conv = |xs: &[S]| {
            xs.iter()
                .map(|x| alphabet.letter(x.as_ref()))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Word::new(conv(prefix)?, conv(cycle)?))
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[i - self.prefix.len()]
        }
    }

    /// Successor position in the unrolled representation.
    pub fn next(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }

    pub fn check(&self, alphabet: &Alphabet) -> Result<()> {
        match self.prefix.iter().chain(&self.cycle).find(|&&l| l >= alphabet.len()) {
            Some(l) => Err(Error::AlphabetMismatch(format!(
                "letter index {l} outside an alphabet of {} letters",
                alphabet.len()
            ))),
            None => Ok(()),
        }
    }

    /// True when positions alternate between position and action letters,
    /// starting with a position letter.
    pub fn is_interleaved(&self, alphabet: &Alphabet) -> bool {
        if self.cycle.len() % 2 == 1 {
            return false;
        }
        (0..self.len()).all(|i| {
            let want = if i % 2 == 0 { Sort::Position } else { Sort::Action };
            alphabet.sort(self.at(i)) == want
        })
    }

    /// The interleaved word of a trajectory lasso: element letters by name
    /// (at the lasso's own level) followed by action letters.
    pub fn from_lasso(alphabet: &Alphabet, p: &Pondp, l: &Lasso, level: Level) -> Result<Self> {
        let elem = |x: usize| -> Result<usize> {
            let name = match (l.level, level) {
                (Level::State, Level::State) => p.state_name(x),
                (Level::State, Level::Observation) => p.obs_name(p.obs(x)),
                (Level::Observation, Level::Observation) => p.obs_name(x),
                (Level::Observation, Level::State) => {
                    return Err(Error::AlphabetMismatch(
                        "state-level constraint applied to an observation-level trajectory".into(),
                    ))
                }
            };
            alphabet
                .index(name)
                .ok_or_else(|| Error::AlphabetMismatch(format!("`{name}` is not in the constraint alphabet")))
        };
        let act = |a: usize| -> Result<usize> {
            let name = p.action_name(a);
            alphabet
                .index(name)
                .ok_or_else(|| Error::AlphabetMismatch(format!("`{name}` is not in the constraint alphabet")))
        };
        let conv = |steps: &[crate::model::Step]| -> Result<Vec<usize>> {
            let mut out = Vec::with_capacity(2 * steps.len());
            for s in steps {
                out.push(elem(s.state)?);
                out.push(act(s.action)?);
            }
            Ok(out)
        };
        let prefix = conv(&l.prefix)?;
        let cycle = conv(&l.cycle)?;
        Ok(Word::new(prefix, cycle))
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> impl fmt::Display + 'a {
        WordDisplay { w: self, alphabet }
    }
}

struct WordDisplay<'a> {
    w: &'a Word,
    alphabet: &'a Alphabet,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.w.prefix {
            write!(f, "{} ", self.alphabet.name(l))?;
        }
        write!(f, "(")?;
        let names: Vec<&str> = self.w.cycle.iter().map(|&l| self.alphabet.name(l)).collect();
        write!(f, "{})^w", names.join(" "))
    }
}
