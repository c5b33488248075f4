//! Abstract syntax for terms, worlds and formulas.
//!
//! Bound variables (term and world alike) are de Bruijn indices, so
//! structural equality is alpha-equivalence. Binder names are kept only as
//! printing hints and are ignored by `Eq`/`Ord`/`Hash`.

pub mod lex;
pub mod parse;
pub mod print;

use std::hash::{Hash, Hasher};

use num_rational::Ratio;

pub use parse::{parse_formula, parse_term, parse_world, ParseError, SymbolTable};
pub use print::{print_formula, print_term, print_world};

/// A binder name hint. Compares equal to every other hint so that derived
/// equality on formulas is alpha-equivalence.
#[derive(Clone, Debug)]
pub struct NameHint(pub String);

impl NameHint {
    pub fn new(s: impl Into<String>) -> Self {
        NameHint(s.into())
    }
}

impl PartialEq for NameHint {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for NameHint {}
impl PartialOrd for NameHint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NameHint {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}
impl Hash for NameHint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// First-order terms over an untyped signature.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Declared constant (arity 0).
    Const(String),
    /// Free (named) term variable.
    Free(String),
    /// Bound term variable, de Bruijn index into enclosing term binders.
    Bound(usize),
    /// Function application, arity >= 1.
    App(String, Vec<Term>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Free(_) | Term::Bound(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// All subterms, including `self`.
    pub fn subterms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        if let Term::App(_, args) = self {
            for a in args {
                a.subterms(out);
            }
        }
    }
}

/// A ground constant of some constraint domain, kept in canonical form.
/// `Nat` belongs to the temporal domain `(N, +, 0)`, `Prob` to the
/// probabilistic domain `([0,1], *, 1)`. Identity constants are never stored
/// inside a [`WorldExpr`]; they normalize to an absent constant part.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WorldConst {
    Nat(u64),
    Prob(Ratio<u64>),
}

impl WorldConst {
    pub fn is_identity(&self) -> bool {
        match self {
            WorldConst::Nat(n) => *n == 0,
            WorldConst::Prob(r) => *r == Ratio::from_integer(1),
        }
    }
}

/// A world variable occurrence inside a world expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WorldVar {
    /// Bound by an enclosing world binder (down / forall / exists), de Bruijn.
    Bound(usize),
    /// Free named world variable (declared, or an eigenvariable).
    Free(String),
}

/// An element of the world monoid in canonical form: an optional constant
/// part plus a sorted multiset of world variables. The identity `iota` is
/// the expression with no constant and no variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldExpr {
    pub constant: Option<WorldConst>,
    pub vars: Vec<WorldVar>,
}

impl WorldExpr {
    pub fn identity() -> Self {
        WorldExpr { constant: None, vars: Vec::new() }
    }

    pub fn constant(c: WorldConst) -> Self {
        let mut w = WorldExpr { constant: Some(c), vars: Vec::new() };
        w.normalize();
        w
    }

    pub fn var(v: WorldVar) -> Self {
        WorldExpr { constant: None, vars: vec![v] }
    }

    pub fn nat(n: u64) -> Self {
        WorldExpr::constant(WorldConst::Nat(n))
    }

    pub fn is_identity(&self) -> bool {
        self.constant.is_none() && self.vars.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.vars.is_empty()
    }

    /// Restore the canonical invariants: sorted variables, identity constants
    /// dropped. Idempotent.
    pub fn normalize(&mut self) {
        self.vars.sort();
        if self.constant.as_ref().is_some_and(WorldConst::is_identity) {
            self.constant = None;
        }
    }

    /// The natural-number value of a ground temporal expression.
    pub fn as_nat(&self) -> Option<u64> {
        if !self.vars.is_empty() {
            return None;
        }
        match &self.constant {
            None => Some(0),
            Some(WorldConst::Nat(n)) => Some(*n),
            Some(_) => None,
        }
    }

    fn shift_bound(&mut self, by: usize, cutoff: usize) {
        for v in &mut self.vars {
            if let WorldVar::Bound(i) = v {
                if *i >= cutoff {
                    *i += by;
                }
            }
        }
        self.vars.sort();
    }
}

/// A HyLL proposition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String, Vec<Term>),
    One,
    Zero,
    Top,
    Tensor(Box<Formula>, Box<Formula>),
    Limp(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
    Bang(Box<Formula>),
    ForallTerm(NameHint, Box<Formula>),
    ExistsTerm(NameHint, Box<Formula>),
    /// Satisfaction: `A at w`.
    At(Box<Formula>, WorldExpr),
    /// Localization: binds a name for the current world.
    Down(NameHint, Box<Formula>),
    ForallWorld(NameHint, Box<Formula>),
    ExistsWorld(NameHint, Box<Formula>),
    /// Surface sugar, rewritten away by [`expand_modal`].
    BoxModal(Box<Formula>),
    DiaModal(Box<Formula>),
    Delay(WorldExpr, Box<Formula>),
}

/// Polarity classes of the focused system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Polarity of a formula. Tensor, 1, plus, 0, exists and bang are positive;
/// limp, with, top and forall are negative; atoms take `atom_default`;
/// `at`, `down` and delay are transparent (polarity of the body).
pub fn polarity_of(f: &Formula, atom_default: Polarity) -> Polarity {
    match f {
        Formula::Atom(_, _) => atom_default,
        Formula::One | Formula::Zero => Polarity::Positive,
        Formula::Tensor(_, _) | Formula::Plus(_, _) | Formula::Bang(_) => Polarity::Positive,
        Formula::ExistsTerm(_, _) | Formula::ExistsWorld(_, _) => Polarity::Positive,
        Formula::Top | Formula::Limp(_, _) | Formula::With(_, _) => Polarity::Negative,
        Formula::ForallTerm(_, _) | Formula::ForallWorld(_, _) => Polarity::Negative,
        Formula::At(b, _) | Formula::Down(_, b) | Formula::Delay(_, b) => {
            polarity_of(b, atom_default)
        }
        // box expands to down/forall, dia to down/exists
        Formula::BoxModal(_) => Polarity::Negative,
        Formula::DiaModal(_) => Polarity::Positive,
    }
}

/// A located truth judgment `A @ w`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Judgment {
    pub formula: Formula,
    pub world: WorldExpr,
}

impl Judgment {
    pub fn new(formula: Formula, mut world: WorldExpr) -> Self {
        world.normalize();
        Judgment { formula, world }
    }
}

// ---------------------------------------------------------------------------
// traversals

impl Formula {
    /// Apply `f` to every world expression in the formula, with the number of
    /// enclosing world binders.
    pub fn map_worlds(&mut self, depth: usize, f: &mut impl FnMut(&mut WorldExpr, usize)) {
        match self {
            Formula::Atom(_, _) | Formula::One | Formula::Zero | Formula::Top => {}
            Formula::Tensor(a, b)
            | Formula::Limp(a, b)
            | Formula::With(a, b)
            | Formula::Plus(a, b) => {
                a.map_worlds(depth, f);
                b.map_worlds(depth, f);
            }
            Formula::Bang(a)
            | Formula::ForallTerm(_, a)
            | Formula::ExistsTerm(_, a)
            | Formula::BoxModal(a)
            | Formula::DiaModal(a) => a.map_worlds(depth, f),
            Formula::At(a, w) => {
                f(w, depth);
                a.map_worlds(depth, f);
            }
            Formula::Delay(w, a) => {
                f(w, depth);
                a.map_worlds(depth, f);
            }
            Formula::Down(_, a) | Formula::ForallWorld(_, a) | Formula::ExistsWorld(_, a) => {
                a.map_worlds(depth + 1, f)
            }
        }
    }

    /// Apply `f` to every term in the formula, with the number of enclosing
    /// term binders.
    pub fn map_terms(&mut self, depth: usize, f: &mut impl FnMut(&mut Term, usize)) {
        match self {
            Formula::Atom(_, args) => {
                for t in args {
                    f(t, depth);
                }
            }
            Formula::One | Formula::Zero | Formula::Top => {}
            Formula::Tensor(a, b)
            | Formula::Limp(a, b)
            | Formula::With(a, b)
            | Formula::Plus(a, b) => {
                a.map_terms(depth, f);
                b.map_terms(depth, f);
            }
            Formula::Bang(a)
            | Formula::At(a, _)
            | Formula::Down(_, a)
            | Formula::ForallWorld(_, a)
            | Formula::ExistsWorld(_, a)
            | Formula::BoxModal(a)
            | Formula::DiaModal(a) => a.map_terms(depth, f),
            Formula::Delay(_, a) => a.map_terms(depth, f),
            Formula::ForallTerm(_, a) | Formula::ExistsTerm(_, a) => a.map_terms(depth + 1, f),
        }
    }

    fn shift_world_bound(&mut self, by: usize) {
        self.map_worlds(0, &mut |w, depth| w.shift_bound(by, depth));
    }

    pub fn size(&self) -> usize {
        let mut n = 1;
        match self {
            Formula::Atom(_, _) | Formula::One | Formula::Zero | Formula::Top => {}
            Formula::Tensor(a, b)
            | Formula::Limp(a, b)
            | Formula::With(a, b)
            | Formula::Plus(a, b) => n += a.size() + b.size(),
            Formula::Bang(a)
            | Formula::ForallTerm(_, a)
            | Formula::ExistsTerm(_, a)
            | Formula::At(a, _)
            | Formula::Down(_, a)
            | Formula::ForallWorld(_, a)
            | Formula::ExistsWorld(_, a)
            | Formula::BoxModal(a)
            | Formula::DiaModal(a)
            | Formula::Delay(_, a) => n += a.size(),
        }
        n
    }

    /// Free world-variable names (not bound by any enclosing binder).
    pub fn free_world_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut clone = self.clone();
        clone.map_worlds(0, &mut |w, _| {
            for v in &w.vars {
                if let WorldVar::Free(n) = v {
                    if !names.contains(n) {
                        names.push(n.clone());
                    }
                }
            }
        });
        names
    }

    /// Free term-variable names.
    pub fn free_term_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut clone = self.clone();
        clone.map_terms(0, &mut |t, _| collect_free_term_names(t, &mut names));
        names
    }

    /// True when no world variable occurs with an index pointing past the
    /// enclosing binders and no term variable does either; free *named*
    /// variables are fine.
    pub fn is_closed_at(&self, term_depth: usize, world_depth: usize) -> bool {
        let mut ok = true;
        let mut clone = self.clone();
        clone.map_worlds(world_depth, &mut |w, d| {
            for v in &w.vars {
                if let WorldVar::Bound(i) = v {
                    if *i >= d {
                        ok = false;
                    }
                }
            }
        });
        let mut clone = self.clone();
        clone.map_terms(term_depth, &mut |t, d| {
            if term_index_escapes(t, d) {
                ok = false;
            }
        });
        ok
    }
}

fn collect_free_term_names(t: &Term, names: &mut Vec<String>) {
    match t {
        Term::Free(n) => {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        Term::App(_, args) => {
            for a in args {
                collect_free_term_names(a, names);
            }
        }
        _ => {}
    }
}

fn term_index_escapes(t: &Term, depth: usize) -> bool {
    match t {
        Term::Bound(i) => *i >= depth,
        Term::App(_, args) => args.iter().any(|a| term_index_escapes(a, depth)),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// substitution

/// Multiply a world expression into another `times` times, combining constant
/// parts with `combine`. Used when a substituted variable occurs with
/// multiplicity greater than one.
fn splice_world(
    target: &mut WorldExpr,
    value: &WorldExpr,
    times: usize,
    combine: &impl Fn(&WorldConst, &WorldConst) -> WorldConst,
) {
    for _ in 0..times {
        for v in &value.vars {
            target.vars.push(v.clone());
        }
        if let Some(c) = &value.constant {
            target.constant = Some(match &target.constant {
                None => c.clone(),
                Some(t) => combine(t, c),
            });
        }
    }
    target.normalize();
}

/// Replace the free world variable `name` by `value` throughout a world
/// expression. `value` must not contain bound variables.
pub fn subst_world_in_expr(
    expr: &mut WorldExpr,
    name: &str,
    value: &WorldExpr,
    combine: &impl Fn(&WorldConst, &WorldConst) -> WorldConst,
) {
    let before = expr.vars.len();
    expr.vars.retain(|v| !matches!(v, WorldVar::Free(n) if n == name));
    let occurrences = before - expr.vars.len();
    splice_world(expr, value, occurrences, combine);
}

/// Open a world binder body: replace index 0 at the binding depth by `value`
/// and shift deeper indices down. `value` must be closed with respect to
/// world binders (free names and constants only).
pub fn open_world_expr(
    expr: &mut WorldExpr,
    depth: usize,
    value: &WorldExpr,
    combine: &impl Fn(&WorldConst, &WorldConst) -> WorldConst,
) {
    let before = expr.vars.len();
    expr.vars.retain(|v| !matches!(v, WorldVar::Bound(i) if *i == depth));
    let occurrences = before - expr.vars.len();
    for v in &mut expr.vars {
        if let WorldVar::Bound(i) = v {
            if *i > depth {
                *i -= 1;
            }
        }
    }
    splice_world(expr, value, occurrences, combine);
}

/// Capture-avoiding substitution of a free world variable. Substituting a
/// name that is shadowed by a binder is a no-op by construction, since bound
/// occurrences are indices, never names.
pub fn subst_world(
    f: &Formula,
    name: &str,
    value: &WorldExpr,
    combine: &impl Fn(&WorldConst, &WorldConst) -> WorldConst,
) -> Formula {
    let mut out = f.clone();
    out.map_worlds(0, &mut |w, _| subst_world_in_expr(w, name, value, combine));
    out
}

/// Open the body of a world binder with `value` (which must contain no bound
/// world variables, e.g. a ground world or a world built from free names).
pub fn open_world(
    body: &Formula,
    value: &WorldExpr,
    combine: &impl Fn(&WorldConst, &WorldConst) -> WorldConst,
) -> Formula {
    let mut out = body.clone();
    out.map_worlds(0, &mut |w, depth| open_world_expr(w, depth, value, combine));
    out
}

fn subst_term_in(t: &mut Term, name: &str, value: &Term) {
    match t {
        Term::Free(n) if n == name => *t = value.clone(),
        Term::App(_, args) => {
            for a in args {
                subst_term_in(a, name, value);
            }
        }
        _ => {}
    }
}

fn open_term_in(t: &mut Term, depth: usize, value: &Term) {
    match t {
        Term::Bound(i) if *i == depth => *t = value.clone(),
        Term::Bound(i) if *i > depth => *t = Term::Bound(*i - 1),
        Term::App(_, args) => {
            for a in args {
                open_term_in(a, depth, value);
            }
        }
        _ => {}
    }
}

/// Capture-avoiding substitution of a free term variable.
pub fn subst_term(f: &Formula, name: &str, value: &Term) -> Formula {
    let mut out = f.clone();
    out.map_terms(0, &mut |t, _| subst_term_in(t, name, value));
    out
}

/// Open the body of a term binder with `value` (a closed term: constants,
/// applications and free names only).
pub fn open_term(body: &Formula, value: &Term) -> Formula {
    let mut out = body.clone();
    out.map_terms(0, &mut |t, depth| open_term_in(t, depth, value));
    out
}

// ---------------------------------------------------------------------------
// modal expansion

/// Rewrite the surface modalities into the hybrid primitives:
/// `box A = down u. forall world w. (A at u.w)`,
/// `dia A = down u. exists world w. (A at u.w)`,
/// `delay[v] A = down u. (A at u.v)`.
/// Idempotent and size-linear.
pub fn expand_modal(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_, _) | Formula::One | Formula::Zero | Formula::Top => f.clone(),
        Formula::Tensor(a, b) => {
            Formula::Tensor(Box::new(expand_modal(a)), Box::new(expand_modal(b)))
        }
        Formula::Limp(a, b) => Formula::Limp(Box::new(expand_modal(a)), Box::new(expand_modal(b))),
        Formula::With(a, b) => Formula::With(Box::new(expand_modal(a)), Box::new(expand_modal(b))),
        Formula::Plus(a, b) => Formula::Plus(Box::new(expand_modal(a)), Box::new(expand_modal(b))),
        Formula::Bang(a) => Formula::Bang(Box::new(expand_modal(a))),
        Formula::ForallTerm(h, a) => Formula::ForallTerm(h.clone(), Box::new(expand_modal(a))),
        Formula::ExistsTerm(h, a) => Formula::ExistsTerm(h.clone(), Box::new(expand_modal(a))),
        Formula::At(a, w) => Formula::At(Box::new(expand_modal(a)), w.clone()),
        Formula::Down(h, a) => Formula::Down(h.clone(), Box::new(expand_modal(a))),
        Formula::ForallWorld(h, a) => Formula::ForallWorld(h.clone(), Box::new(expand_modal(a))),
        Formula::ExistsWorld(h, a) => Formula::ExistsWorld(h.clone(), Box::new(expand_modal(a))),
        Formula::BoxModal(a) => expand_box_like(a, true),
        Formula::DiaModal(a) => expand_box_like(a, false),
        Formula::Delay(v, a) => {
            let mut body = expand_modal(a);
            body.shift_world_bound(1);
            let mut at_world = v.clone();
            at_world.shift_bound(1, 0);
            at_world.vars.push(WorldVar::Bound(0));
            at_world.normalize();
            Formula::Down(NameHint::new("u"), Box::new(Formula::At(Box::new(body), at_world)))
        }
    }
}

fn expand_box_like(body: &Formula, universal: bool) -> Formula {
    let mut inner = expand_modal(body);
    inner.shift_world_bound(2);
    let at_world = WorldExpr {
        constant: None,
        vars: vec![WorldVar::Bound(0), WorldVar::Bound(1)],
    };
    let at = Formula::At(Box::new(inner), at_world);
    let quant = if universal {
        Formula::ForallWorld(NameHint::new("w"), Box::new(at))
    } else {
        Formula::ExistsWorld(NameHint::new("w"), Box::new(at))
    };
    Formula::Down(NameHint::new("u"), Box::new(quant))
}

/// True if the formula contains no surface modal sugar.
pub fn modal_free(f: &Formula) -> bool {
    match f {
        Formula::BoxModal(_) | Formula::DiaModal(_) | Formula::Delay(_, _) => false,
        Formula::Atom(_, _) | Formula::One | Formula::Zero | Formula::Top => true,
        Formula::Tensor(a, b)
        | Formula::Limp(a, b)
        | Formula::With(a, b)
        | Formula::Plus(a, b) => modal_free(a) && modal_free(b),
        Formula::Bang(a)
        | Formula::ForallTerm(_, a)
        | Formula::ExistsTerm(_, a)
        | Formula::At(a, _)
        | Formula::Down(_, a)
        | Formula::ForallWorld(_, a)
        | Formula::ExistsWorld(_, a) => modal_free(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(name: &str) -> Formula {
        Formula::Atom(name.into(), vec![])
    }

    #[test]
    fn alpha_equivalence_ignores_hints() {
        let a = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::At(Box::new(atom("p")), WorldExpr::var(WorldVar::Bound(0)))),
        );
        let b = Formula::Down(
            NameHint::new("v"),
            Box::new(Formula::At(Box::new(atom("p")), WorldExpr::var(WorldVar::Bound(0)))),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn polarity_table() {
        let p = atom("p");
        let q = atom("q");
        let tensor = Formula::Tensor(Box::new(p.clone()), Box::new(q.clone()));
        assert_eq!(polarity_of(&tensor, Polarity::Negative), Polarity::Positive);
        let with = Formula::With(Box::new(p.clone()), Box::new(q.clone()));
        assert_eq!(polarity_of(&with, Polarity::Negative), Polarity::Negative);
        // at is transparent
        let at = Formula::At(Box::new(tensor), WorldExpr::nat(1));
        assert_eq!(polarity_of(&at, Polarity::Negative), Polarity::Positive);
        assert_eq!(polarity_of(&p, Polarity::Negative), Polarity::Negative);
        assert_eq!(polarity_of(&p, Polarity::Positive), Polarity::Positive);
    }

    fn nat_add(a: &WorldConst, b: &WorldConst) -> WorldConst {
        match (a, b) {
            (WorldConst::Nat(x), WorldConst::Nat(y)) => WorldConst::Nat(x + y),
            _ => panic!("mixed domains"),
        }
    }

    #[test]
    fn subst_world_basic() {
        // (p at u)[u := 3] = p at 3
        let f = Formula::At(Box::new(atom("p")), WorldExpr::var(WorldVar::Free("u".into())));
        let got = subst_world(&f, "u", &WorldExpr::nat(3), &nat_add);
        assert_eq!(got, Formula::At(Box::new(atom("p")), WorldExpr::nat(3)));
    }

    #[test]
    fn subst_world_respects_binders() {
        // (down u. p at u)[u := 3] unchanged: the bound occurrence is an index
        let f = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::At(Box::new(atom("p")), WorldExpr::var(WorldVar::Bound(0)))),
        );
        let got = subst_world(&f, "u", &WorldExpr::nat(3), &nat_add);
        assert_eq!(got, f);
    }

    #[test]
    fn subst_world_normalizes_composition() {
        // (p at u.v)[u := 2] = p at v.2
        let w = WorldExpr {
            constant: None,
            vars: vec![WorldVar::Free("u".into()), WorldVar::Free("v".into())],
        };
        let f = Formula::At(Box::new(atom("p")), w);
        let got = subst_world(&f, "u", &WorldExpr::nat(2), &nat_add);
        let expect = Formula::At(
            Box::new(atom("p")),
            WorldExpr { constant: Some(WorldConst::Nat(2)), vars: vec![WorldVar::Free("v".into())] },
        );
        assert_eq!(got, expect);
    }

    #[test]
    fn subst_term_basic() {
        let f = Formula::Atom("p".into(), vec![Term::Free("x".into())]);
        let got = subst_term(&f, "x", &Term::Const("c".into()));
        assert_eq!(got, Formula::Atom("p".into(), vec![Term::Const("c".into())]));

        // under a binder of the same name: bound occurrences are indices
        let g = Formula::ForallTerm(
            NameHint::new("x"),
            Box::new(Formula::Atom("p".into(), vec![Term::Bound(0)])),
        );
        assert_eq!(subst_term(&g, "x", &Term::Const("c".into())), g);

        // in an annotated judgment position
        let h = Formula::At(
            Box::new(Formula::Atom("p".into(), vec![Term::Free("x".into())])),
            WorldExpr::var(WorldVar::Free("w".into())),
        );
        let ht = subst_term(&h, "x", &Term::App("f".into(), vec![Term::Const("c".into())]));
        assert_eq!(
            ht,
            Formula::At(
                Box::new(Formula::Atom(
                    "p".into(),
                    vec![Term::App("f".into(), vec![Term::Const("c".into())])]
                )),
                WorldExpr::var(WorldVar::Free("w".into())),
            )
        );
    }

    #[test]
    fn expand_modal_box() {
        // box A = down u. forall w. (A at u.w)
        let f = Formula::BoxModal(Box::new(atom("p")));
        let got = expand_modal(&f);
        let expect = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::ForallWorld(
                NameHint::new("w"),
                Box::new(Formula::At(
                    Box::new(atom("p")),
                    WorldExpr { constant: None, vars: vec![WorldVar::Bound(0), WorldVar::Bound(1)] },
                )),
            )),
        );
        assert_eq!(got, expect);
        assert!(modal_free(&got));
    }

    #[test]
    fn expand_modal_dia_and_delay() {
        let f = Formula::DiaModal(Box::new(atom("p")));
        let got = expand_modal(&f);
        match &got {
            Formula::Down(_, inner) => match inner.as_ref() {
                Formula::ExistsWorld(_, _) => {}
                other => panic!("unexpected dia expansion: {other:?}"),
            },
            other => panic!("unexpected dia expansion: {other:?}"),
        }

        // delay[v] A = down u. (A at u.v)
        let d = Formula::Delay(WorldExpr::nat(2), Box::new(atom("p")));
        let got = expand_modal(&d);
        let expect = Formula::Down(
            NameHint::new("u"),
            Box::new(Formula::At(
                Box::new(atom("p")),
                WorldExpr { constant: Some(WorldConst::Nat(2)), vars: vec![WorldVar::Bound(0)] },
            )),
        );
        assert_eq!(got, expect);
    }

    #[test]
    fn expand_modal_idempotent_and_linear() {
        let f = Formula::BoxModal(Box::new(Formula::Delay(
            WorldExpr::nat(1),
            Box::new(Formula::Tensor(Box::new(atom("p")), Box::new(atom("q")))),
        )));
        let once = expand_modal(&f);
        let twice = expand_modal(&once);
        assert_eq!(once, twice);
        assert!(once.size() <= 4 * f.size());
    }
}
