//! Concrete syntax:
//!
//! ```text
//! phi ::= "true" | "false" | ident | "!" ident
//!       | phi "&" phi | phi "|" phi | phi "U" phi
//!       | "X" phi | "F" phi | "(" phi ")"
//! ```
//!
//! Precedence from tightest: unary (`!`, `X`, `F`), `U` (right-associative),
//! `&`, `|`. Identifiers match `[A-Za-z_][A-Za-z0-9_#]*` excluding the
//! keywords `true`, `false`, `X`, `F` and `U`.

use thiserror::Error;

use super::formula::Formula;
use super::symbols::SymbolTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("negation applied to a non-atom at byte {pos}")]
    NegatedNonAtom { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    True,
    False,
    Ident(String),
    Not,
    And,
    Or,
    Next,
    Eventually,
    Until,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, i));
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'#') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "X" => Tok::Next,
                "F" => Tok::Eventually,
                "U" => Tok::Until,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, start));
            continue;
        }
        return Err(ParseError::Syntax {
            pos: i,
            msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
        });
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    symbols: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::or(parts) })
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.until()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.until()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::and(parts) })
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let left = self.unary()?;
        if *self.peek() == Tok::Until {
            self.bump();
            let right = self.until()?;
            return Ok(Formula::until(left, right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::Ident(name) => self.resolve(&name, at).map(Formula::atom),
            Tok::Not => match self.bump() {
                (Tok::Ident(name), at) => self.resolve(&name, at).map(Formula::neg_atom),
                (Tok::End, at) => Err(ParseError::Syntax { pos: at, msg: "expected atom after `!`".into() }),
                (_, inner) => Err(ParseError::NegatedNonAtom { pos: inner }),
            },
            Tok::Next => Ok(Formula::next(self.unary()?)),
            Tok::Eventually => Ok(Formula::eventually(self.unary()?)),
            Tok::LParen => {
                let inner = self.or()?;
                if *self.peek() != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::End => Err(ParseError::Syntax { pos: at, msg: "unexpected end of input".into() }),
            other => Err(ParseError::Syntax { pos: at, msg: format!("unexpected token {other:?}") }),
        }
    }

    fn resolve(&self, name: &str, at: usize) -> Result<super::symbols::SymbolId, ParseError> {
        self.symbols
            .lookup(name)
            .ok_or_else(|| ParseError::UnknownSymbol { pos: at, name: name.to_string() })
    }
}

/// Parses formula text against `symbols` and returns its canonical form.
pub fn parse(text: &str, symbols: &SymbolTable) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, symbols };
    let f = p.or()?;
    if *p.peek() != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(f)
}
