//! Concrete syntax for SELL formulas and signature files.
//!
//! ```text
//! formula := par ('-o' formula)?          A -o B reads as ~A | B
//! par     := plus ('|' plus)*
//! plus    := with ('+' with)*
//! with    := tensor ('&' tensor)*
//! tensor  := unary ('*' unary)*
//! unary   := '![label]' unary | '?[label]' unary | '~' unary
//!          | 'forall x.' formula | 'exists x.' formula
//!          | 'all l:label.' formula | 'some l:label.' formula
//!          | 'box[label]' unary | 'dia' unary | primary
//! primary := '1' | '0' | 'top' | 'bot' | IDENT ['(' term,* ')'] | '(' formula ')'
//! ```
//!
//! `~` is negation, pushed to the atoms while parsing. Labels are
//! identifiers or decimal stamps.
//!
//! Signature files are line oriented:
//!
//! ```text
//! labels w v inf copy
//! order w inf
//! unbounded inf copy
//! type v u
//! ```

use crate::syntax::lex::{lex, Spanned, Tok};
use crate::syntax::print::print_term;
use crate::syntax::{NameHint, Term};

use super::{validate_signature, LabelRef, SellFormula, SigError, SubexpSignature};

#[derive(Debug, thiserror::Error)]
pub enum SellParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("line {line}: {message}")]
    SigLine { line: usize, message: String },
    #[error(transparent)]
    Sig(#[from] SigError),
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    term_binders: Vec<String>,
    label_binders: Vec<String>,
}

pub fn parse_sell_formula(text: &str) -> Result<SellFormula, SellParseError> {
    let toks =
        lex(text).map_err(|e| SellParseError::Syntax { pos: e.pos, message: e.message })?;
    let mut p = Parser { toks, at: 0, term_binders: Vec::new(), label_binders: Vec::new() };
    let f = p.formula()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.err(format!("unexpected {}", p.peek())));
    }
    Ok(f)
}

impl Parser {
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

    fn expect(&mut self, t: &Tok) -> Result<(), SellParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {t}, found {}", self.peek())))
        }
    }

    fn err(&self, message: String) -> SellParseError {
        SellParseError::Syntax { pos: self.pos(), message }
    }

    fn label(&mut self) -> Result<LabelRef, SellParseError> {
        match self.bump() {
            Tok::Ident(s) => {
                if let Some(i) = self.label_binders.iter().rev().position(|b| *b == s) {
                    Ok(LabelRef::Bound(i))
                } else {
                    Ok(LabelRef::Const(s))
                }
            }
            Tok::Nat(s) => Ok(LabelRef::Const(s)),
            other => Err(self.err(format!("expected a label, found {other}"))),
        }
    }

    fn formula(&mut self) -> Result<SellFormula, SellParseError> {
        let lhs = self.par()?;
        if self.eat(&Tok::Limp) {
            let rhs = self.formula()?;
            Ok(SellFormula::Par(Box::new(lhs.dual()), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn par(&mut self) -> Result<SellFormula, SellParseError> {
        let mut f = self.plus()?;
        while self.eat(&Tok::Bar) {
            let rhs = self.plus()?;
            f = SellFormula::Par(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn plus(&mut self) -> Result<SellFormula, SellParseError> {
        let mut f = self.with()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.with()?;
            f = SellFormula::Plus(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn with(&mut self) -> Result<SellFormula, SellParseError> {
        let mut f = self.tensor()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.tensor()?;
            f = SellFormula::With(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn tensor(&mut self) -> Result<SellFormula, SellParseError> {
        let mut f = self.unary()?;
        while self.eat(&Tok::Star) {
            let rhs = self.unary()?;
            f = SellFormula::Tensor(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<SellFormula, SellParseError> {
        if self.eat(&Tok::Bang) {
            self.expect(&Tok::LBracket)?;
            let l = self.label()?;
            self.expect(&Tok::RBracket)?;
            return Ok(SellFormula::SubBang(l, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Quest) {
            self.expect(&Tok::LBracket)?;
            let l = self.label()?;
            self.expect(&Tok::RBracket)?;
            return Ok(SellFormula::SubQuest(l, Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Tilde) {
            return Ok(self.unary()?.dual());
        }
        match self.peek().clone() {
            Tok::Ident(w) if w == "box" || w == "dia" => {
                self.bump();
                let ty = if self.eat(&Tok::LBracket) {
                    let l = self.label()?;
                    self.expect(&Tok::RBracket)?;
                    Some(l)
                } else {
                    None
                };
                let body = Box::new(self.unary()?);
                Ok(if w == "box" {
                    SellFormula::BoxMod(ty, body)
                } else {
                    SellFormula::DiaMod(ty, body)
                })
            }
            Tok::Ident(w) if w == "forall" || w == "exists" => {
                self.bump();
                let name = match self.bump() {
                    Tok::Ident(n) => n,
                    other => return Err(self.err(format!("expected a name, found {other}"))),
                };
                self.expect(&Tok::Dot)?;
                self.term_binders.push(name.clone());
                let body = self.formula()?;
                self.term_binders.pop();
                Ok(if w == "forall" {
                    SellFormula::ForallT(NameHint::new(name), Box::new(body))
                } else {
                    SellFormula::ExistsT(NameHint::new(name), Box::new(body))
                })
            }
            Tok::Ident(w) if w == "all" || w == "some" => {
                self.bump();
                let name = match self.bump() {
                    Tok::Ident(n) => n,
                    other => return Err(self.err(format!("expected a label name, found {other}"))),
                };
                self.expect(&Tok::Colon)?;
                let ty = self.label()?;
                self.expect(&Tok::Dot)?;
                self.label_binders.push(name.clone());
                let body = self.formula()?;
                self.label_binders.pop();
                Ok(if w == "all" {
                    SellFormula::InterQ(NameHint::new(name), ty, Box::new(body))
                } else {
                    SellFormula::UnionQ(NameHint::new(name), ty, Box::new(body))
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<SellFormula, SellParseError> {
        match self.peek().clone() {
            Tok::Nat(n) if n == "1" => {
                self.bump();
                Ok(SellFormula::One)
            }
            Tok::Nat(n) if n == "0" => {
                self.bump();
                Ok(SellFormula::Zero)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(w) if w == "top" => {
                self.bump();
                Ok(SellFormula::Top)
            }
            Tok::Ident(w) if w == "bot" => {
                self.bump();
                Ok(SellFormula::Bottom)
            }
            Tok::Ident(name) => {
                self.bump();
                let args = if self.eat(&Tok::LParen) {
                    let mut args = vec![self.term()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.term()?);
                    }
                    self.expect(&Tok::RParen)?;
                    args
                } else {
                    Vec::new()
                };
                Ok(SellFormula::Lit { neg: false, pred: name, args })
            }
            other => Err(self.err(format!("expected a formula, found {other}"))),
        }
    }

    fn term(&mut self) -> Result<Term, SellParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::LBracket => {
                self.bump();
                let mut names = Vec::new();
                if !matches!(self.peek(), Tok::RBracket) {
                    loop {
                        match self.bump() {
                            Tok::Ident(n) => names.push(n),
                            other => {
                                return Err(self.err(format!("expected a name, found {other}")))
                            }
                        }
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RBracket)?;
                Ok(Term::Const(format!("[{}]", names.join(","))))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.term()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.term()?);
                    }
                    self.expect(&Tok::RParen)?;
                    return Ok(Term::App(name, args));
                }
                if let Some(i) = self.term_binders.iter().rev().position(|b| *b == name) {
                    Ok(Term::Bound(i))
                } else {
                    // one-sided goals are closed in practice; bare names
                    // default to constants
                    Ok(Term::Const(name))
                }
            }
            other => Err(self.err(format!("expected a term, found {other}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// printing

pub fn render_sell(f: &SellFormula) -> String {
    let mut env = Renderer { term_env: Vec::new(), label_env: Vec::new() };
    let mut out = String::new();
    env.go(f, 0, &mut out);
    out
}

struct Renderer {
    term_env: Vec<String>,
    label_env: Vec<String>,
}

// precedence: 0 par, 1 plus, 2 with, 3 tensor, 4 unary
impl Renderer {
    fn label(&self, l: &LabelRef, out: &mut String) {
        match l {
            LabelRef::Const(s) => out.push_str(s),
            LabelRef::Bound(i) => match self.label_env.iter().rev().nth(*i) {
                Some(n) => out.push_str(n),
                None => out.push_str(&format!("<l{i}>")),
            },
        }
    }

    fn go(&mut self, f: &SellFormula, prec: u8, out: &mut String) {
        use SellFormula::*;
        match f {
            Lit { neg, pred, args } => {
                if *neg {
                    out.push('~');
                }
                out.push_str(pred);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&self.term_text(a));
                    }
                    out.push(')');
                }
            }
            One => out.push('1'),
            Zero => out.push('0'),
            Top => out.push_str("top"),
            Bottom => out.push_str("bot"),
            Par(a, b) => self.bin(a, " | ", b, prec, 0, out),
            Plus(a, b) => self.bin(a, " + ", b, prec, 1, out),
            With(a, b) => self.bin(a, " & ", b, prec, 2, out),
            Tensor(a, b) => self.bin(a, " * ", b, prec, 3, out),
            SubBang(l, a) => {
                let wrap = prec > 4;
                if wrap {
                    out.push('(');
                }
                out.push_str("![");
                self.label(l, out);
                out.push(']');
                out.push(' ');
                self.go(a, 4, out);
                if wrap {
                    out.push(')');
                }
            }
            SubQuest(l, a) => {
                let wrap = prec > 4;
                if wrap {
                    out.push('(');
                }
                out.push_str("?[");
                self.label(l, out);
                out.push(']');
                out.push(' ');
                self.go(a, 4, out);
                if wrap {
                    out.push(')');
                }
            }
            ExistsT(h, a) => self.binder("exists", &h.0, None, a, prec, true, out),
            ForallT(h, a) => self.binder("forall", &h.0, None, a, prec, true, out),
            UnionQ(h, t, a) => self.binder("some", &h.0, Some(t), a, prec, false, out),
            InterQ(h, t, a) => self.binder("all", &h.0, Some(t), a, prec, false, out),
            BoxMod(t, a) => self.modal("box", t.as_ref(), a, prec, out),
            DiaMod(t, a) => self.modal("dia", t.as_ref(), a, prec, out),
        }
    }

    fn bin(&mut self, a: &SellFormula, op: &str, b: &SellFormula, prec: u8, level: u8, out: &mut String) {
        let wrap = prec > level;
        if wrap {
            out.push('(');
        }
        self.go(a, level, out);
        out.push_str(op);
        self.go(b, level + 1, out);
        if wrap {
            out.push(')');
        }
    }

    fn binder(
        &mut self,
        kw: &str,
        hint: &str,
        ty: Option<&LabelRef>,
        body: &SellFormula,
        prec: u8,
        term: bool,
        out: &mut String,
    ) {
        let wrap = prec > 0;
        if wrap {
            out.push('(');
        }
        let name = self.fresh(hint, term);
        out.push_str(kw);
        out.push(' ');
        out.push_str(&name);
        if let Some(t) = ty {
            out.push(':');
            self.label(t, out);
        }
        out.push_str(". ");
        if term {
            self.term_env.push(name);
        } else {
            self.label_env.push(name);
        }
        self.go(body, 0, out);
        if term {
            self.term_env.pop();
        } else {
            self.label_env.pop();
        }
        if wrap {
            out.push(')');
        }
    }

    fn modal(&mut self, kw: &str, ty: Option<&LabelRef>, body: &SellFormula, prec: u8, out: &mut String) {
        let wrap = prec > 4;
        if wrap {
            out.push('(');
        }
        out.push_str(kw);
        if let Some(t) = ty {
            out.push('[');
            self.label(t, out);
            out.push(']');
        }
        out.push(' ');
        // modal sugar binds a label underneath
        self.label_env.push("_m".into());
        self.go(body, 4, out);
        self.label_env.pop();
        if wrap {
            out.push(')');
        }
    }

    fn fresh(&self, hint: &str, term: bool) -> String {
        let base = if hint.is_empty() { if term { "x" } else { "l" } } else { hint };
        let mut candidate = base.to_string();
        let mut n = 0;
        while self.term_env.contains(&candidate) || self.label_env.contains(&candidate) {
            n += 1;
            candidate = format!("{base}{n}");
        }
        candidate
    }

    fn term_text(&self, t: &Term) -> String {
        match t {
            Term::Bound(i) => self
                .term_env
                .iter()
                .rev()
                .nth(*i)
                .cloned()
                .unwrap_or_else(|| format!("<t{i}>")),
            Term::App(f, args) => {
                let inner: Vec<String> = args.iter().map(|a| self.term_text(a)).collect();
                format!("{f}({})", inner.join(", "))
            }
            _ => print_term(t),
        }
    }
}

// ---------------------------------------------------------------------------
// signature files

pub fn parse_signature_file(text: &str) -> Result<SubexpSignature, SellParseError> {
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut unbounded: Vec<String> = Vec::new();
    let mut types: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => raw[..i].trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        let rest: Vec<&str> = words.collect();
        match head {
            "labels" => labels.extend(rest.iter().map(|s| s.to_string())),
            "order" => {
                if rest.len() != 2 {
                    return Err(SellParseError::SigLine {
                        line: no + 1,
                        message: "order takes exactly two labels (lower upper)".into(),
                    });
                }
                edges.push((rest[0].to_string(), rest[1].to_string()));
            }
            "unbounded" => unbounded.extend(rest.iter().map(|s| s.to_string())),
            "type" => {
                if rest.len() != 2 {
                    return Err(SellParseError::SigLine {
                        line: no + 1,
                        message: "type takes exactly two labels (label type)".into(),
                    });
                }
                types.push((rest[0].to_string(), rest[1].to_string()));
            }
            other => {
                return Err(SellParseError::SigLine {
                    line: no + 1,
                    message: format!("unknown directive `{other}`"),
                })
            }
        }
    }
    Ok(validate_signature(labels, edges, unbounded, types)?)
}

/// One formula per non-empty line.
pub fn parse_sell_file(text: &str) -> Result<Vec<SellFormula>, SellParseError> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => raw[..i].trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        out.push(parse_sell_formula(line)?);
    }
    Ok(out)
}

/// Render a signature in the file format, deterministically.
pub fn render_signature(sig: &SubexpSignature) -> String {
    let labels: Vec<String> = sig.labels().cloned().collect();
    let mut out = format!("labels {}\n", labels.join(" "));
    for a in &labels {
        for b in &labels {
            if a != b && sig.leq(a, b) {
                out.push_str(&format!("order {a} {b}\n"));
            }
        }
    }
    let unbounded: Vec<String> =
        labels.iter().filter(|l| sig.is_unbounded(l)).cloned().collect();
    if !unbounded.is_empty() {
        out.push_str(&format!("unbounded {}\n", unbounded.join(" ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_roundtrip() {
        for src in [
            "~p | p",
            "?[w] ~p * ![v] (p * q)",
            "forall x. (p(x) -o q(x))",
            "some l:u. ![l] p",
            "all l:u. ?[l] ~p",
            "top & 1 + 0",
            "?[copy] (~a | b)",
        ] {
            let f = parse_sell_formula(src).unwrap();
            let printed = render_sell(&f);
            let g = parse_sell_formula(&printed).unwrap();
            assert_eq!(f, g, "roundtrip drifted: {src} -> {printed}");
        }
    }

    #[test]
    fn implication_dualizes() {
        let f = parse_sell_formula("p -o q").unwrap();
        assert_eq!(
            f,
            SellFormula::par(SellFormula::nlit("p", vec![]), SellFormula::lit("q", vec![]))
        );
    }

    #[test]
    fn stamp_labels_parse() {
        let f = parse_sell_formula("![0] a -o ![1] (a * ~b)").unwrap();
        match f {
            SellFormula::Par(lhs, _) => {
                assert_eq!(*lhs, SellFormula::quest("0", SellFormula::nlit("a", vec![])));
            }
            other => panic!("expected par, got {other:?}"),
        }
    }

    #[test]
    fn signature_file_parses() {
        let sig = parse_signature_file(
            "labels w v inf copy\norder w inf\norder v inf\norder copy inf\nunbounded inf copy\n",
        )
        .unwrap();
        assert!(sig.leq("w", "inf"));
        assert!(!sig.leq("w", "v"));
        let rendered = render_signature(&sig);
        let back = parse_signature_file(&rendered).unwrap();
        assert_eq!(sig, back);
    }
}
