//! Regular expressions over explicit pair letters, e.g. `((a1:s2)(a2:s2))*`.
//!
//! Grammar: alternation `|`, concatenation by juxtaposition, postfix `*`,
//! `+` and `?`, parentheses, and letters `in:out` (`<eps>` allowed on one
//! side).

use super::{minimize, Fst, StateId};
use crate::error::{Error, Result};
use crate::symbol::Letter;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Bar,
    Star,
    Plus,
    Question,
    Letter(Letter),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            '|' => Some(Tok::Bar),
            '*' => Some(Tok::Star),
            '+' => Some(Tok::Plus),
            '?' => Some(Tok::Question),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(tok);
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && !"()|*+?".contains(chars[i]) && !chars[i].is_whitespace() {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            let letter = Letter::parse(&token)
                .ok_or_else(|| err(format!("bad letter `{token}` at column {}", start + 1)))?;
            if letter.is_stay() {
                return Err(err(
                    "the stay letter <eps>:<eps> cannot appear in a pattern".into(),
                ));
            }
            out.push(Tok::Letter(letter));
        }
    }
    Ok(out)
}

struct Builder {
    fst: Fst,
    toks: Vec<Tok>,
    pos: usize,
}

type Frag = (StateId, StateId);

impl Builder {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn fresh(&mut self) -> StateId {
        self.fst.add_state()
    }

    fn silent(&mut self, a: StateId, b: StateId) {
        self.fst.add(a, Letter::STAY, b);
    }

    fn alt(&mut self) -> Result<Frag> {
        let first = self.cat()?;
        if self.peek() != Some(&Tok::Bar) {
            return Ok(first);
        }
        let (s, e) = (self.fresh(), self.fresh());
        self.silent(s, first.0);
        self.silent(first.1, e);
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            let f = self.cat()?;
            self.silent(s, f.0);
            self.silent(f.1, e);
        }
        Ok((s, e))
    }

    fn cat(&mut self) -> Result<Frag> {
        let s = self.fresh();
        let mut end = s;
        while matches!(self.peek(), Some(Tok::Open) | Some(Tok::Letter(_))) {
            let f = self.rep()?;
            self.silent(end, f.0);
            end = f.1;
        }
        Ok((s, end))
    }

    fn rep(&mut self) -> Result<Frag> {
        let mut f = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    let (s, e) = (self.fresh(), self.fresh());
                    self.silent(s, f.0);
                    self.silent(s, e);
                    self.silent(f.1, f.0);
                    self.silent(f.1, e);
                    f = (s, e);
                }
                Some(Tok::Plus) => {
                    let e = self.fresh();
                    self.silent(f.1, f.0);
                    self.silent(f.1, e);
                    f = (f.0, e);
                }
                Some(Tok::Question) => {
                    let (s, e) = (self.fresh(), self.fresh());
                    self.silent(s, f.0);
                    self.silent(s, e);
                    self.silent(f.1, e);
                    f = (s, e);
                }
                _ => return Ok(f),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Frag> {
        match self.peek().cloned() {
            Some(Tok::Letter(l)) => {
                self.pos += 1;
                let (s, e) = (self.fresh(), self.fresh());
                self.fst.add(s, l, e);
                Ok((s, e))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let f = self.alt()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "unbalanced parenthesis".into(),
                    });
                }
                self.pos += 1;
                Ok(f)
            }
            other => Err(Error::Parse {
                line: 1,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }
}

/// Builds the minimal deterministic acceptor of a letter pattern.
pub fn parse_pattern(src: &str) -> Result<Fst> {
    let mut b = Builder {
        fst: Fst::new(1, 0),
        toks: lex(src)?,
        pos: 0,
    };
    let (s, e) = b.alt()?;
    if b.pos != b.toks.len() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected token {:?}", b.toks[b.pos]),
        });
    }
    b.silent(0, s);
    b.fst.set_final(e);
    minimize(&b.fst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{equivalent, examples};
    use crate::word::Word;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    #[test]
    fn desired_language_pattern() {
        let k = parse_pattern("((a1:s2)(a2:s2))*").unwrap();
        assert!(k.accepts(&[]));
        assert!(k.accepts_word(&w("a1:s2 a2:s2")));
        assert!(!k.accepts_word(&w("a1:s2")));
        assert!(equivalent(&k.with_all_final(), &examples::desired()).unwrap());
        assert_eq!(k.num_states(), 2);
    }

    #[test]
    fn operators() {
        let f = parse_pattern("x:x (y:y | z:<eps>)+ w:w?").unwrap();
        assert!(f.accepts_word(&w("x:x y:y")));
        assert!(f.accepts_word(&w("x:x z:<eps> y:y w:w")));
        assert!(!f.accepts_word(&w("x:x")));
        assert!(!f.accepts_word(&w("x:x w:w")));
    }

    #[test]
    fn errors() {
        assert!(parse_pattern("(a:b").is_err());
        assert!(parse_pattern("a:b)").is_err());
        assert!(parse_pattern("ab").is_err());
        assert!(parse_pattern("<eps>:<eps>").is_err());
    }

    #[test]
    fn empty_pattern_is_empty_word() {
        let f = parse_pattern("").unwrap();
        assert!(f.accepts(&[]));
        assert_eq!(f.num_transitions(), 0);
    }
}
