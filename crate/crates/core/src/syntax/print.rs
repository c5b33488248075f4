//! Pretty printer. `parse . print` is the identity up to alpha-equivalence;
//! binder hints that would shadow a name in scope are freshened.

use super::{Formula, Term, WorldConst, WorldExpr, WorldVar};

struct Printer {
    term_env: Vec<String>,
    world_env: Vec<String>,
    taken: Vec<String>,
}

pub fn print_formula(f: &Formula) -> String {
    let mut taken = f.free_term_names();
    taken.extend(f.free_world_names());
    let mut p = Printer { term_env: Vec::new(), world_env: Vec::new(), taken };
    let mut out = String::new();
    p.formula(f, 0, &mut out);
    out
}

pub fn print_term(t: &Term) -> String {
    let mut p = Printer { term_env: Vec::new(), world_env: Vec::new(), taken: Vec::new() };
    let mut out = String::new();
    p.term(t, &mut out);
    out
}

pub fn print_world(w: &WorldExpr) -> String {
    let mut p = Printer { term_env: Vec::new(), world_env: Vec::new(), taken: Vec::new() };
    let mut out = String::new();
    p.world(w, &mut out);
    out
}

pub fn render_const(c: &WorldConst) -> String {
    match c {
        WorldConst::Nat(n) => n.to_string(),
        WorldConst::Prob(r) if r.is_integer() => r.numer().to_string(),
        WorldConst::Prob(r) => format!("{}/{}", r.numer(), r.denom()),
    }
}

// precedence levels: 0 formula/limp, 1 plus, 2 with, 3 tensor, 4 at, 5 unary
impl Printer {
    fn fresh(&mut self, hint: &str) -> String {
        let base = if hint.is_empty() { "u" } else { hint };
        let mut candidate = base.to_string();
        let mut n = 0;
        while self.taken.contains(&candidate)
            || self.term_env.contains(&candidate)
            || self.world_env.contains(&candidate)
        {
            n += 1;
            candidate = format!("{base}{n}");
        }
        candidate
    }

    fn formula(&mut self, f: &Formula, prec: u8, out: &mut String) {
        match f {
            Formula::Atom(name, args) => {
                out.push_str(name);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        self.term(a, out);
                    }
                    out.push(')');
                }
            }
            Formula::One => out.push('1'),
            Formula::Zero => out.push('0'),
            Formula::Top => out.push_str("top"),
            Formula::Limp(a, b) => self.binary(a, " -o ", b, prec, 0, 1, 0, out),
            Formula::Plus(a, b) => self.binary(a, " + ", b, prec, 1, 1, 2, out),
            Formula::With(a, b) => self.binary(a, " & ", b, prec, 2, 2, 3, out),
            Formula::Tensor(a, b) => self.binary(a, " * ", b, prec, 3, 3, 4, out),
            Formula::At(a, w) => {
                let wrap = prec > 4;
                if wrap {
                    out.push('(');
                }
                self.formula(a, 5, out);
                out.push_str(" at ");
                self.world(w, out);
                if wrap {
                    out.push(')');
                }
            }
            Formula::Bang(a) => self.prefix("!", a, prec, out),
            Formula::BoxModal(a) => self.prefix("box ", a, prec, out),
            Formula::DiaModal(a) => self.prefix("dia ", a, prec, out),
            Formula::Delay(w, a) => {
                let wrap = prec > 4;
                if wrap {
                    out.push('(');
                }
                out.push_str("delay[");
                self.world(w, out);
                out.push(']');
                out.push(' ');
                self.formula(a, 5, out);
                if wrap {
                    out.push(')');
                }
            }
            Formula::ForallTerm(h, a) => self.term_binder("forall", &h.0, a, prec, out),
            Formula::ExistsTerm(h, a) => self.term_binder("exists", &h.0, a, prec, out),
            Formula::Down(h, a) => self.world_binder("down", &h.0, a, prec, out),
            Formula::ForallWorld(h, a) => self.world_binder("forall world", &h.0, a, prec, out),
            Formula::ExistsWorld(h, a) => self.world_binder("exists world", &h.0, a, prec, out),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn binary(
        &mut self,
        a: &Formula,
        op: &str,
        b: &Formula,
        prec: u8,
        level: u8,
        lp: u8,
        rp: u8,
        out: &mut String,
    ) {
        let wrap = prec > level;
        if wrap {
            out.push('(');
        }
        self.formula(a, lp, out);
        out.push_str(op);
        self.formula(b, rp, out);
        if wrap {
            out.push(')');
        }
    }

    fn prefix(&mut self, op: &str, a: &Formula, prec: u8, out: &mut String) {
        let wrap = prec > 5;
        if wrap {
            out.push('(');
        }
        out.push_str(op);
        self.formula(a, 5, out);
        if wrap {
            out.push(')');
        }
    }

    fn term_binder(&mut self, kw: &str, hint: &str, body: &Formula, prec: u8, out: &mut String) {
        let wrap = prec > 0;
        if wrap {
            out.push('(');
        }
        let name = self.fresh(hint);
        out.push_str(kw);
        out.push(' ');
        out.push_str(&name);
        out.push_str(". ");
        self.term_env.push(name);
        self.formula(body, 0, out);
        self.term_env.pop();
        if wrap {
            out.push(')');
        }
    }

    fn world_binder(&mut self, kw: &str, hint: &str, body: &Formula, prec: u8, out: &mut String) {
        let wrap = prec > 0;
        if wrap {
            out.push('(');
        }
        let name = self.fresh(hint);
        out.push_str(kw);
        out.push(' ');
        out.push_str(&name);
        out.push_str(". ");
        self.world_env.push(name);
        self.formula(body, 0, out);
        self.world_env.pop();
        if wrap {
            out.push(')');
        }
    }

    fn term(&mut self, t: &Term, out: &mut String) {
        match t {
            Term::Const(c) => out.push_str(c),
            Term::Free(v) => out.push_str(v),
            Term::Bound(i) => {
                match self.term_env.iter().rev().nth(*i) {
                    Some(name) => out.push_str(name),
                    // a dangling index can only come from printing an open
                    // subterm in a diagnostic; make it visible
                    None => out.push_str(&format!("<t{i}>")),
                }
            }
            Term::App(f, args) => {
                out.push_str(f);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.term(a, out);
                }
                out.push(')');
            }
        }
    }

    fn world(&mut self, w: &WorldExpr, out: &mut String) {
        if w.is_identity() {
            out.push_str("iota");
            return;
        }
        let mut first = true;
        let sep = |out: &mut String, first: &mut bool| {
            if !*first {
                out.push('.');
            }
            *first = false;
        };
        for v in &w.vars {
            sep(out, &mut first);
            match v {
                WorldVar::Free(n) => out.push_str(n),
                WorldVar::Bound(i) => match self.world_env.iter().rev().nth(*i) {
                    Some(name) => out.push_str(name),
                    None => out.push_str(&format!("<w{i}>")),
                },
            }
        }
        if let Some(c) = &w.constant {
            sep(out, &mut first);
            out.push_str(&render_const(c));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;
    use crate::syntax::{parse_formula, NameHint, SymbolTable};

    fn roundtrip(text: &str) {
        let table = SymbolTable::new().with_constants(["a", "b", "c"]);
        let f = parse_formula(text, &table, &TEMPORAL).unwrap();
        let printed = print_formula(&f);
        let g = parse_formula(&printed, &table, &TEMPORAL).unwrap();
        assert_eq!(f, g, "print/parse drifted: {text} -> {printed}");
    }

    #[test]
    fn simple_prints() {
        let table = SymbolTable::new();
        let f = parse_formula("p * 1", &table, &TEMPORAL).unwrap();
        assert_eq!(print_formula(&f), "p * 1");
        let f = parse_formula("down u. (p at u)", &table, &TEMPORAL).unwrap();
        assert_eq!(print_formula(&f), "down u. p at u");
    }

    #[test]
    fn roundtrips() {
        for text in [
            "pres(a) -o (pres(a) * pres(b))",
            "down u. (p at u.1)",
            "p * q + r & s -o t",
            "forall x. exists y. p(x, y)",
            "forall world u. exists world v. (p at u.v)",
            "box (p -o q)",
            "delay[3] (p * q)",
            "!(p -o delay[1] (p * q))",
            "(p at 2) * (q at 3)",
            "p at 2 at 3",
            "top & 0 + 1",
        ] {
            roundtrip(text);
        }
    }

    #[test]
    fn shadowed_binders_freshen() {
        // two binders with the same hint print with distinct names
        let inner = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::At(
                Box::new(Formula::Atom("p".into(), vec![])),
                crate::syntax::WorldExpr {
                    constant: None,
                    vars: vec![
                        crate::syntax::WorldVar::Bound(0),
                        crate::syntax::WorldVar::Bound(1),
                    ],
                },
            )),
        );
        let f = Formula::Down(NameHint::new("u"), Box::new(inner));
        let printed = print_formula(&f);
        assert_eq!(printed, "down u. down u1. p at u1.u");
        let table = SymbolTable::new();
        let g = parse_formula(&printed, &table, &TEMPORAL).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn free_name_collision_freshens() {
        // binder hint collides with a free world variable in the body
        let body = Formula::At(
            Box::new(Formula::Atom("p".into(), vec![])),
            crate::syntax::WorldExpr {
                constant: None,
                vars: vec![
                    crate::syntax::WorldVar::Bound(0),
                    crate::syntax::WorldVar::Free("u".into()),
                ],
            },
        );
        let f = Formula::Down(NameHint::new("u"), Box::new(body));
        let printed = print_formula(&f);
        assert_eq!(printed, "down u1. p at u1.u");
    }
}
