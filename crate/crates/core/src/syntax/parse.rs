//! Recursive-descent parser for the concrete formula grammar.
//!
//! ```text
//! formula := plus ('-o' formula)?
//! plus    := with ('+' with)*
//! with    := tensor ('&' tensor)*
//! tensor  := atexpr ('*' atexpr)*
//! atexpr  := unary ('at' world)*
//! unary   := '!' unary | 'box' unary | 'dia' unary | 'delay' '[' world ']' unary
//!          | binder | primary
//! binder  := ('forall'|'exists') ['world'] IDENT '.' formula | 'down' IDENT '.' formula
//! primary := '1' | '0' | 'top' | IDENT ['(' term,* ')'] | '(' formula ')'
//! world   := watom ('.' watom)*   with watom := constant | 'iota' | IDENT
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::lex::{lex, Spanned, Tok};
use super::{Formula, NameHint, Term, WorldExpr, WorldVar};
use crate::domain::ConstraintDomain;

pub const KEYWORDS: &[&str] =
    &["forall", "exists", "down", "at", "box", "dia", "delay", "top", "iota", "world"];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unbound world variable `{name}` at {pos}")]
    UnboundWorldVar { pos: usize, name: String },
    #[error("arity mismatch for `{name}` at {pos}: expected {expected}, found {found}")]
    ArityMismatch { pos: usize, name: String, expected: usize, found: usize },
}

/// Declared vocabulary guiding identifier resolution. Identifiers that are
/// neither bound nor declared resolve to free term variables (or constants,
/// with `loose_constants`); undeclared identifiers in world position are an
/// error.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    pub constants: BTreeSet<String>,
    pub functions: BTreeMap<String, usize>,
    pub predicates: BTreeMap<String, usize>,
    pub world_vars: BTreeSet<String>,
    /// Treat undeclared identifiers in term position as constants rather
    /// than free variables (handy for one-off command-line goals).
    pub loose_constants: bool,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_constants<I: IntoIterator<Item = S>, S: Into<String>>(mut self, cs: I) -> Self {
        self.constants.extend(cs.into_iter().map(Into::into));
        self
    }

    pub fn declare_function(&mut self, name: impl Into<String>, arity: usize) {
        self.functions.insert(name.into(), arity);
    }

    pub fn declare_predicate(&mut self, name: impl Into<String>, arity: usize) {
        self.predicates.insert(name.into(), arity);
    }

    pub fn declare_world_var(&mut self, name: impl Into<String>) {
        self.world_vars.insert(name.into());
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    at: usize,
    table: &'a SymbolTable,
    domain: &'a dyn ConstraintDomain,
    term_binders: Vec<String>,
    world_binders: Vec<String>,
    seen_preds: BTreeMap<String, usize>,
}

pub fn parse_formula(
    text: &str,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, table, domain)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_term(
    text: &str,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, table, domain)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_world(
    text: &str,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
) -> Result<WorldExpr, ParseError> {
    let mut p = Parser::new(text, table, domain)?;
    let w = p.world()?;
    p.expect_eof()?;
    Ok(w)
}

impl<'a> Parser<'a> {
    fn new(
        text: &str,
        table: &'a SymbolTable,
        domain: &'a dyn ConstraintDomain,
    ) -> Result<Self, ParseError> {
        let toks = lex(text)
            .map_err(|e| ParseError::Syntax { pos: e.pos, message: e.message })?;
        Ok(Parser {
            toks,
            at: 0,
            table,
            domain,
            term_binders: Vec::new(),
            world_binders: Vec::new(),
            seen_preds: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {t}, found {}", self.peek())))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.err(format!("unexpected {}", self.peek())))
        }
    }

    fn err(&self, message: String) -> ParseError {
        ParseError::Syntax { pos: self.pos(), message }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s.as_str()),
            _ => None,
        }
    }

    fn ident(&mut self) -> Result<(String, usize), ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) => Ok((s, pos)),
            other => Err(ParseError::Syntax { pos, message: format!("expected name, found {other}") }),
        }
    }

    fn binder_name(&mut self) -> Result<String, ParseError> {
        let (name, pos) = self.ident()?;
        if KEYWORDS.contains(&name.as_str()) {
            return Err(ParseError::Syntax {
                pos,
                message: format!("`{name}` is reserved and cannot bind a variable"),
            });
        }
        Ok(name)
    }

    // ---- formulas ----

    pub fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.plus()?;
        if self.eat(&Tok::Limp) {
            let rhs = self.formula()?;
            Ok(Formula::Limp(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn plus(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.with()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.with()?;
            f = Formula::Plus(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn with(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.tensor()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.tensor()?;
            f = Formula::With(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn tensor(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.atexpr()?;
        while self.eat(&Tok::Star) {
            let rhs = self.atexpr()?;
            f = Formula::Tensor(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn atexpr(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek_ident() == Some("at") {
            self.bump();
            let w = self.world()?;
            f = Formula::At(Box::new(f), w);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::Bang(Box::new(self.unary()?)));
        }
        match self.peek_ident() {
            Some("box") => {
                self.bump();
                Ok(Formula::BoxModal(Box::new(self.unary()?)))
            }
            Some("dia") => {
                self.bump();
                Ok(Formula::DiaModal(Box::new(self.unary()?)))
            }
            Some("delay") => {
                self.bump();
                self.expect(&Tok::LBracket)?;
                let w = self.world()?;
                self.expect(&Tok::RBracket)?;
                Ok(Formula::Delay(w, Box::new(self.unary()?)))
            }
            Some("down") => {
                self.bump();
                let name = self.binder_name()?;
                self.expect(&Tok::Dot)?;
                self.world_binders.push(name.clone());
                let body = self.formula()?;
                self.world_binders.pop();
                Ok(Formula::Down(NameHint::new(name), Box::new(body)))
            }
            Some(q @ ("forall" | "exists")) => {
                let universal = q == "forall";
                self.bump();
                let world_quant = self.peek_ident() == Some("world");
                if world_quant {
                    self.bump();
                }
                let name = self.binder_name()?;
                self.expect(&Tok::Dot)?;
                if world_quant {
                    self.world_binders.push(name.clone());
                    let body = self.formula()?;
                    self.world_binders.pop();
                    Ok(if universal {
                        Formula::ForallWorld(NameHint::new(name), Box::new(body))
                    } else {
                        Formula::ExistsWorld(NameHint::new(name), Box::new(body))
                    })
                } else {
                    self.term_binders.push(name.clone());
                    let body = self.formula()?;
                    self.term_binders.pop();
                    Ok(if universal {
                        Formula::ForallTerm(NameHint::new(name), Box::new(body))
                    } else {
                        Formula::ExistsTerm(NameHint::new(name), Box::new(body))
                    })
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) if n == "1" => {
                self.bump();
                Ok(Formula::One)
            }
            Tok::Nat(n) if n == "0" => {
                self.bump();
                Ok(Formula::Zero)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) if name == "top" => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Ident(name) => {
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.err(format!("`{name}` is reserved here")));
                }
                let pos = self.pos();
                self.bump();
                let args = if self.eat(&Tok::LParen) {
                    let args = self.term_list()?;
                    self.expect(&Tok::RParen)?;
                    args
                } else {
                    Vec::new()
                };
                self.check_pred_arity(&name, args.len(), pos)?;
                Ok(Formula::Atom(name, args))
            }
            other => Err(self.err(format!("expected a formula, found {other}"))),
        }
    }

    fn check_pred_arity(&mut self, name: &str, found: usize, pos: usize) -> Result<(), ParseError> {
        let expected = self
            .table
            .predicates
            .get(name)
            .copied()
            .or_else(|| self.seen_preds.get(name).copied());
        match expected {
            Some(expected) if expected != found => Err(ParseError::ArityMismatch {
                pos,
                name: name.to_string(),
                expected,
                found,
            }),
            Some(_) => Ok(()),
            None => {
                self.seen_preds.insert(name.to_string(), found);
                Ok(())
            }
        }
    }

    // ---- terms ----

    fn term_list(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut out = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            out.push(self.term()?);
        }
        Ok(out)
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::LBracket => {
                // an inert list literal such as [EPCAM]; kept as an opaque
                // constant with canonical text
                self.bump();
                let mut names = Vec::new();
                if !matches!(self.peek(), Tok::RBracket) {
                    loop {
                        let (n, _) = self.ident()?;
                        names.push(n);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBracket)?;
                Ok(Term::Const(format!("[{}]", names.join(","))))
            }
            Tok::Ident(name) => {
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.err(format!("`{name}` is reserved here")));
                }
                let pos = self.pos();
                self.bump();
                if self.eat(&Tok::LParen) {
                    let args = self.term_list()?;
                    self.expect(&Tok::RParen)?;
                    if let Some(&expected) = self.table.functions.get(&name) {
                        if expected != args.len() {
                            return Err(ParseError::ArityMismatch {
                                pos,
                                name,
                                expected,
                                found: args.len(),
                            });
                        }
                    }
                    return Ok(Term::App(name, args));
                }
                // bare identifier: bound variable, constant, or free variable
                if let Some(idx) = self.term_binders.iter().rev().position(|b| *b == name) {
                    return Ok(Term::Bound(idx));
                }
                if self.table.constants.contains(&name) {
                    return Ok(Term::Const(name));
                }
                if let Some(&expected) = self.table.functions.get(&name) {
                    return Err(ParseError::ArityMismatch { pos, name, expected, found: 0 });
                }
                if self.table.loose_constants {
                    Ok(Term::Const(name))
                } else {
                    Ok(Term::Free(name))
                }
            }
            other => Err(self.err(format!("expected a term, found {other}"))),
        }
    }

    // ---- worlds ----

    pub fn world(&mut self) -> Result<WorldExpr, ParseError> {
        let mut w = self.world_atom()?;
        while self.eat(&Tok::Dot) {
            let rhs = self.world_atom()?;
            w = crate::domain::compose(self.domain, &w, &rhs);
        }
        self.domain.canonicalize(&mut w);
        Ok(w)
    }

    fn world_atom(&mut self) -> Result<WorldExpr, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                let pos = self.pos();
                self.bump();
                // probability constants are written n/d
                let text = if self.peek_ident() == Some("/") {
                    self.bump();
                    match self.bump() {
                        Tok::Nat(d) => format!("{n}/{d}"),
                        other => {
                            return Err(ParseError::Syntax {
                                pos,
                                message: format!("expected denominator, found {other}"),
                            })
                        }
                    }
                } else {
                    n
                };
                match self.domain.parse_const(&text) {
                    Some(c) => Ok(WorldExpr::constant(c)),
                    None => Err(ParseError::Syntax {
                        pos,
                        message: format!(
                            "`{text}` is not a constant of the {} domain",
                            self.domain.name()
                        ),
                    }),
                }
            }
            Tok::Ident(name) if name == "iota" => {
                self.bump();
                Ok(WorldExpr::identity())
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.err(format!("`{name}` is reserved here")));
                }
                self.bump();
                if let Some(idx) = self.world_binders.iter().rev().position(|b| *b == name) {
                    return Ok(WorldExpr::var(WorldVar::Bound(idx)));
                }
                if self.table.world_vars.contains(&name) || name.starts_with("_e") {
                    return Ok(WorldExpr::var(WorldVar::Free(name)));
                }
                Err(ParseError::UnboundWorldVar { pos, name })
            }
            other => Err(self.err(format!("expected a world, found {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;

    fn table() -> SymbolTable {
        SymbolTable::new().with_constants(["a", "b", "c"])
    }

    #[test]
    fn parses_activation_rule() {
        let f = parse_formula("pres(a) -o (pres(a) * pres(b))", &table(), &TEMPORAL).unwrap();
        match f {
            Formula::Limp(lhs, rhs) => {
                assert_eq!(*lhs, Formula::Atom("pres".into(), vec![Term::Const("a".into())]));
                match *rhs {
                    Formula::Tensor(_, _) => {}
                    other => panic!("expected tensor, got {other:?}"),
                }
            }
            other => panic!("expected limp, got {other:?}"),
        }
    }

    #[test]
    fn parses_down_binder_with_composition() {
        let f = parse_formula("down u. (p at u.1)", &table(), &TEMPORAL).unwrap();
        let expect = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::At(
                Box::new(Formula::Atom("p".into(), vec![])),
                WorldExpr {
                    constant: Some(crate::syntax::WorldConst::Nat(1)),
                    vars: vec![WorldVar::Bound(0)],
                },
            )),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn unbound_world_variable_rejected() {
        let err = parse_formula("p at u", &table(), &TEMPORAL).unwrap_err();
        assert!(matches!(err, ParseError::UnboundWorldVar { name, .. } if name == "u"));
    }

    #[test]
    fn declared_world_variable_accepted() {
        let mut t = table();
        t.declare_world_var("u");
        let f = parse_formula("p at u", &t, &TEMPORAL).unwrap();
        assert_eq!(
            f,
            Formula::At(
                Box::new(Formula::Atom("p".into(), vec![])),
                WorldExpr::var(WorldVar::Free("u".into()))
            )
        );
    }

    #[test]
    fn arity_mismatch_detected() {
        let mut t = table();
        t.declare_predicate("pres", 1);
        let err = parse_formula("pres(a, b)", &t, &TEMPORAL).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { expected: 1, found: 2, .. }));
        // inferred within a single parse
        let err = parse_formula("pres(a) * pres(a, b)", &table(), &TEMPORAL).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn precedence_and_units() {
        let f = parse_formula("p * 1 + q & r -o s", &table(), &TEMPORAL).unwrap();
        // -o binds loosest: ((p*1) + (q&r)) -o s
        match f {
            Formula::Limp(lhs, _) => match *lhs {
                Formula::Plus(l, r) => {
                    assert!(matches!(*l, Formula::Tensor(_, _)));
                    assert!(matches!(*r, Formula::With(_, _)));
                }
                other => panic!("expected plus, got {other:?}"),
            },
            other => panic!("expected limp, got {other:?}"),
        }
    }

    #[test]
    fn at_binds_tighter_than_tensor() {
        let f = parse_formula("p at 2 * q", &table(), &TEMPORAL).unwrap();
        assert!(matches!(f, Formula::Tensor(_, _)));
    }

    #[test]
    fn modal_sugar_forms() {
        assert!(matches!(
            parse_formula("box p", &table(), &TEMPORAL).unwrap(),
            Formula::BoxModal(_)
        ));
        assert!(matches!(
            parse_formula("dia p", &table(), &TEMPORAL).unwrap(),
            Formula::DiaModal(_)
        ));
        assert!(matches!(
            parse_formula("delay[2] p", &table(), &TEMPORAL).unwrap(),
            Formula::Delay(_, _)
        ));
    }

    #[test]
    fn nested_binders_shadow() {
        let f = parse_formula("down u. down u. (p at u)", &table(), &TEMPORAL).unwrap();
        // inner `u` wins: index 0 points at the inner binder
        let expect = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::Down(
                NameHint::new("u"),
                Box::new(Formula::At(
                    Box::new(Formula::Atom("p".into(), vec![])),
                    WorldExpr::var(WorldVar::Bound(0)),
                )),
            )),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn list_literals_are_opaque_constants() {
        let mut t = table();
        t.constants.insert("n".into());
        let f = parse_formula("C(n, breast, f, [EPCAM])", &t, &TEMPORAL).unwrap();
        match f {
            Formula::Atom(name, args) => {
                assert_eq!(name, "C");
                assert_eq!(args[3], Term::Const("[EPCAM]".into()));
                // f is undeclared, hence a free variable
                assert_eq!(args[2], Term::Free("f".into()));
            }
            other => panic!("expected atom, got {other:?}"),
        }
    }
}
