//! Recursive-descent parser for the bounded temporal query syntax.
//!
//! ```text
//! formula := or
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U[<=' INT ']' unary)?
//! unary   := '!' unary | 'X' unary | 'F[<=' INT ']' unary | 'G[<=' INT ']' unary | atom
//! atom    := IDENT | 'true' | 'false' | '(' formula ')'
//! ```
//!
//! `U` does not chain: `a U[<=1] b U[<=1] c` is rejected and must be
//! parenthesized.

use thiserror::Error;

use super::ast::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("chained until at {position}: parenthesize one side")]
    NonChainingUntil { position: usize },
}

impl ParseError {
    /// Byte offset into the parsed text.
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::NonChainingUntil { position } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Next,
    Finally(u32),
    Globally(u32),
    Until(u32),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err(&self, position: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position,
            message: message.into(),
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.err(self.pos, format!("expected `{lit}`")))
        }
    }

    /// Parses the `[<= INT ]` suffix of a bounded operator.
    fn bound(&mut self) -> Result<u32, ParseError> {
        self.expect("[")?;
        self.expect("<=")?;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(start, "expected a bound"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let k = text
            .parse::<u32>()
            .map_err(|_| self.err(start, format!("bound `{text}` out of range")))?;
        self.expect("]")?;
        Ok(k)
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((start, t));
        }
        if !c.is_ascii_alphabetic() {
            let ch = std::str::from_utf8(&self.src[start..])
                .ok()
                .and_then(|s| s.chars().next())
                .unwrap_or('?');
            return Err(self.err(start, format!("unexpected character `{ch}`")));
        }
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let tok = match word {
            "true" => Tok::True,
            "false" => Tok::False,
            "X" => Tok::Next,
            "F" | "G" | "U" if self.peek_bracket() => {
                let k = self.bound()?;
                match word {
                    "F" => Tok::Finally(k),
                    "G" => Tok::Globally(k),
                    _ => Tok::Until(k),
                }
            }
            _ => Tok::Ident(word.to_string()),
        };
        Ok((start, tok))
    }

    fn peek_bracket(&self) -> bool {
        self.src[self.pos..]
            .iter()
            .find(|b| !b.is_ascii_whitespace())
            .is_some_and(|b| *b == b'[')
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let (tok_pos, tok) = lexer.next()?;
        Ok(Self { lexer, tok, tok_pos })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (pos, tok) = self.lexer.next()?;
        self.tok = tok;
        self.tok_pos = pos;
        Ok(())
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position: self.tok_pos,
            message: message.into(),
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.tok == Tok::Or {
            self.advance()?;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.tok == Tok::And {
            self.advance()?;
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if let Tok::Until(k) = self.tok {
            self.advance()?;
            let rhs = self.unary()?;
            if matches!(self.tok, Tok::Until(_)) {
                return Err(ParseError::NonChainingUntil {
                    position: self.tok_pos,
                });
            }
            return Ok(Formula::until(k, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.tok {
            Tok::Not => {
                self.advance()?;
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.advance()?;
                Ok(Formula::next(self.unary()?))
            }
            Tok::Finally(k) => {
                self.advance()?;
                Ok(Formula::finally(k, self.unary()?))
            }
            Tok::Globally(k) => {
                self.advance()?;
                Ok(Formula::globally(k, self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let f = match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Ident(name) => Formula::Atom(name),
            Tok::True => Formula::True,
            Tok::False => Formula::False,
            Tok::LParen => {
                self.advance()?;
                let inner = self.or()?;
                if self.tok != Tok::RParen {
                    return Err(self.err("expected `)`"));
                }
                inner
            }
            Tok::End => return Err(self.err("unexpected end of input")),
            other => {
                self.tok = other;
                return Err(self.err("expected an atom or `(`"));
            }
        };
        self.advance()?;
        Ok(f)
    }
}

/// Parses one formula; trailing input is an error.
pub fn parse_query(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.or()?;
    if p.tok != Tok::End {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}
