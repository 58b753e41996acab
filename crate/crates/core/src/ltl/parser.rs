use std::sync::Arc;

use super::alphabet::Alphabet;
use super::formula::{is_bare_char, Expr, Formula};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '!' => {
                it.next();
                out.push((pos, Tok::Not));
            }
            '&' => {
                it.next();
                if matches!(it.peek(), Some((_, '&'))) {
                    it.next();
                }
                out.push((pos, Tok::And));
            }
            '|' => {
                it.next();
                if matches!(it.peek(), Some((_, '|'))) {
                    it.next();
                }
                out.push((pos, Tok::Or));
            }
            '-' => {
                it.next();
                match it.next() {
                    Some((_, '>')) => out.push((pos, Tok::Implies)),
                    _ => return Err(Error::parse(pos, "expected `->`")),
                }
            }
            '(' => {
                it.next();
                out.push((pos, Tok::LParen));
            }
            ')' => {
                it.next();
                out.push((pos, Tok::RParen));
            }
            '{' => {
                it.next();
                out.push((pos, Tok::LBrace));
            }
            '}' => {
                it.next();
                out.push((pos, Tok::RBrace));
            }
            ',' => {
                it.next();
                out.push((pos, Tok::Comma));
            }
            '"' => {
                it.next();
                let mut s = String::new();
                loop {
                    match it.next() {
                        None => return Err(Error::parse(pos, "unterminated quoted letter")),
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match it.next() {
                            Some((_, c)) => s.push(c),
                            None => return Err(Error::parse(pos, "unterminated quoted letter")),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                out.push((pos, Tok::Quoted(s)));
            }
            c if is_bare_char(c) => {
                let mut s = String::new();
                while let Some(&(_, c)) = it.peek() {
                    if is_bare_char(c) {
                        s.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Ident(s)));
            }
            c => return Err(Error::parse(pos, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            Err(Error::parse(self.pos(), format!("expected {what}")))
        }
    }

    fn implication(&mut self) -> Result<Expr> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.i += 1;
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Expr> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.i += 1;
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr> {
        let mut lhs = self.binary_temporal()?;
        while self.peek() == Some(&Tok::And) {
            self.i += 1;
            lhs = lhs.and(self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Expr> {
        let lhs = self.unary()?;
        if self.is_keyword("U") {
            self.i += 1;
            return Ok(lhs.until(self.binary_temporal()?));
        }
        if self.is_keyword("R") {
            self.i += 1;
            return Ok(lhs.release(self.binary_temporal()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Not) => {
                self.i += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Ident(s)) if s == "X" => {
                self.i += 1;
                Ok(self.unary()?.next())
            }
            Some(Tok::Ident(s)) if s == "F" => {
                self.i += 1;
                Ok(self.unary()?.eventually())
            }
            Some(Tok::Ident(s)) if s == "G" => {
                self.i += 1;
                Ok(self.unary()?.always())
            }
            _ => self.atom(),
        }
    }

    fn letter(&mut self) -> Result<usize> {
        let pos = self.pos();
        let name = match self.peek() {
            Some(Tok::Ident(s)) if !matches!(s.as_str(), "true" | "false" | "X" | "F" | "G" | "U" | "R") => s.clone(),
            Some(Tok::Quoted(s)) => s.clone(),
            _ => return Err(Error::parse(pos, "expected a letter")),
        };
        self.i += 1;
        self.alphabet.index(&name).ok_or(Error::UnknownLetter(name))
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek() {
            None => Err(Error::parse(pos, "unexpected end of formula")),
            Some(Tok::LParen) => {
                self.i += 1;
                let e = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::LBrace) => {
                self.i += 1;
                let mut ls = Vec::new();
                if self.peek() != Some(&Tok::RBrace) {
                    ls.push(self.letter()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.i += 1;
                        ls.push(self.letter()?);
                    }
                }
                self.expect(Tok::RBrace, "`}`")?;
                Ok(Expr::letters(ls))
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.i += 1;
                Ok(Expr::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.i += 1;
                Ok(Expr::False)
            }
            Some(Tok::Ident(_)) | Some(Tok::Quoted(_)) => Ok(Expr::letter(self.letter()?)),
            Some(_) => Err(Error::parse(pos, "expected a formula")),
        }
    }
}

/// Parses an LTL formula over `alphabet`.
///
/// Syntax: `true`, `false`, bare or `"quoted"` letters, letter sets
/// `{a, b}`, prefix operators `! X F G`, infix `U R & | ->` (from tightest
/// to loosest: unary, `U`/`R`, `&`, `|`, `->`; `U`, `R` and `->` associate
/// to the right) and parentheses.
pub fn parse_ltl(text: &str, alphabet: &Arc<Alphabet>) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: text.len(),
        alphabet,
    };
    let e = p.implication()?;
    if p.i < p.toks.len() {
        return Err(Error::parse(p.pos(), "unexpected trailing input"));
    }
    Ok(Formula::new(alphabet.clone(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Arc<Alphabet> {
        Arc::new(Alphabet::plain(["a", "b", "c"]).unwrap())
    }

    #[test]
    fn until_nests_to_the_right() {
        let s = abc();
        let f = parse_ltl("a U (b U c)", &s).unwrap();
        let g = parse_ltl("a U b U c", &s).unwrap();
        let want = Expr::letter(0).until(Expr::letter(1).until(Expr::letter(2)));
        assert_eq!(f.expr, want);
        assert_eq!(g.expr, want);
    }

    #[test]
    fn implication_binds_loosest() {
        let s = Arc::new(Alphabet::plain(["Inc", "Dec", "Zero"]).unwrap());
        let f = parse_ltl("F G !Inc & G F Dec -> G F Zero", &s).unwrap();
        let inc = Expr::letter(0);
        let dec = Expr::letter(1);
        let zero = Expr::letter(2);
        let want = inc
            .not()
            .always()
            .eventually()
            .and(dec.eventually().always())
            .implies(zero.eventually().always());
        assert_eq!(f.expr, want);
    }

    #[test]
    fn constants_and_sets() {
        let s = abc();
        assert_eq!(parse_ltl("true", &s).unwrap().expr, Expr::True);
        assert_eq!(parse_ltl("{c, a}", &s).unwrap().expr, Expr::Letters(vec![0, 2]));
    }

    #[test]
    fn quoted_letters() {
        let s = Arc::new(Alphabet::plain(["X=0", "Inc(X)", "X"]).unwrap());
        let f = parse_ltl("X=0 U (\"Inc(X)\" | \"X\")", &s).unwrap();
        assert_eq!(f.expr, Expr::letter(0).until(Expr::letter(1).or(Expr::letter(2))));
    }

    #[test]
    fn errors_carry_positions() {
        let s = abc();
        match parse_ltl("a & (b | ", &s) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_ltl("a & d", &s), Err(Error::UnknownLetter(l)) if l == "d"));
        assert!(matches!(parse_ltl("a b", &s), Err(Error::Parse { pos: 2, .. })));
    }

    #[test]
    fn printer_round_trips() {
        let s = Arc::new(Alphabet::plain(["a", "X=0", "Inc(X)", "G"]).unwrap());
        for text in [
            "a U X=0",
            "!(a -> X \"Inc(X)\") R {a, \"G\"}",
            "F G !a & G F X=0 -> G F \"Inc(X)\"",
            "true | false",
        ] {
            let f = parse_ltl(text, &s).unwrap();
            let printed = f.to_string();
            let g = parse_ltl(&printed, &s).unwrap();
            assert_eq!(f, g, "{text} printed as {printed}");
        }
    }
}
