//! Shared lexer for the formula, world and proof languages.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Star,
    Plus,
    Amp,
    Bang,
    Quest,
    Bar,
    Tilde,
    Colon,
    AtSign,
    Limp,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(s) => write!(f, "`{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Amp => write!(f, "`&`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Quest => write!(f, "`?`"),
            Tok::Bar => write!(f, "`|`"),
            Tok::Tilde => write!(f, "`~`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::AtSign => write!(f, "`@`"),
            Tok::Limp => write!(f, "`-o`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

/// A token plus its byte offset in the source, for error reporting.
#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub pos: usize,
    pub message: String,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                toks.push(Spanned { tok: Tok::LParen, pos: i });
                i += 1;
            }
            ')' => {
                toks.push(Spanned { tok: Tok::RParen, pos: i });
                i += 1;
            }
            '[' => {
                toks.push(Spanned { tok: Tok::LBracket, pos: i });
                i += 1;
            }
            ']' => {
                toks.push(Spanned { tok: Tok::RBracket, pos: i });
                i += 1;
            }
            ',' => {
                toks.push(Spanned { tok: Tok::Comma, pos: i });
                i += 1;
            }
            '.' => {
                toks.push(Spanned { tok: Tok::Dot, pos: i });
                i += 1;
            }
            '*' => {
                toks.push(Spanned { tok: Tok::Star, pos: i });
                i += 1;
            }
            '+' => {
                toks.push(Spanned { tok: Tok::Plus, pos: i });
                i += 1;
            }
            '&' => {
                toks.push(Spanned { tok: Tok::Amp, pos: i });
                i += 1;
            }
            '!' => {
                toks.push(Spanned { tok: Tok::Bang, pos: i });
                i += 1;
            }
            '?' => {
                toks.push(Spanned { tok: Tok::Quest, pos: i });
                i += 1;
            }
            '|' => {
                toks.push(Spanned { tok: Tok::Bar, pos: i });
                i += 1;
            }
            '~' => {
                toks.push(Spanned { tok: Tok::Tilde, pos: i });
                i += 1;
            }
            ':' => {
                toks.push(Spanned { tok: Tok::Colon, pos: i });
                i += 1;
            }
            '@' => {
                toks.push(Spanned { tok: Tok::AtSign, pos: i });
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'o' {
                    toks.push(Spanned { tok: Tok::Limp, pos: i });
                    i += 2;
                } else {
                    return Err(LexError { pos: i, message: "expected `-o`".into() });
                }
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                toks.push(Spanned { tok: Tok::Nat(src[start..i].to_string()), pos: start });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push(Spanned { tok: Tok::Ident(src[start..i].to_string()), pos: start });
            }
            '/' => {
                // only meaningful inside probability constants like 1/2 and
                // arity markers like f/2; tokenized as an identifier-ish dot
                toks.push(Spanned { tok: Tok::Ident("/".into()), pos: i });
                i += 1;
            }
            other => {
                return Err(LexError { pos: i, message: format!("unexpected character `{other}`") })
            }
        }
    }
    toks.push(Spanned { tok: Tok::Eof, pos: src.len() });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_formula_tokens() {
        let toks = lex("pres(a) -o (pres(a) * pres(b))").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("pres".into()));
        assert_eq!(toks[1].tok, Tok::LParen);
        assert_eq!(toks[4].tok, Tok::Limp);
        assert_eq!(toks.last().unwrap().tok, Tok::Eof);
    }

    #[test]
    fn comments_skipped() {
        let toks = lex("p # trailing\nq").unwrap();
        let idents: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(idents, vec!["p", "q"]);
    }
}
