//! Classical one-sided linear logic with subexponentials.
//!
//! A signature declares the available subexponential labels, a preorder
//! over them, and which admit weakening and contraction. Formulas are kept
//! in negation normal form; label binders (the subexponential quantifiers)
//! use de Bruijn indices like the term binders elsewhere.

pub mod encode;
pub mod kernel;
pub mod parse;
pub mod prover;

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{NameHint, Term};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SigError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unbounded set not upward closed: {lower} is unbounded, {upper} above it is not")]
    NotUpwardClosed { lower: String, upper: String },
}

/// A subexponential signature: labels, a preorder (stored as its
/// reflexive-transitive closure), the upward-closed set of unbounded labels,
/// and optional label typings (`v : u` also contributes the edge `v <= u`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubexpSignature {
    labels: BTreeSet<String>,
    closure: BTreeSet<(String, String)>,
    unbounded: BTreeSet<String>,
    types: BTreeMap<String, String>,
}

/// Check label existence, compute the reflexive-transitive closure of the
/// declared edges (plus typing edges), and verify that the unbounded set is
/// upward closed.
pub fn validate_signature(
    labels: impl IntoIterator<Item = String>,
    edges: impl IntoIterator<Item = (String, String)>,
    unbounded: impl IntoIterator<Item = String>,
    types: impl IntoIterator<Item = (String, String)>,
) -> Result<SubexpSignature, SigError> {
    let labels: BTreeSet<String> = labels.into_iter().collect();
    let check = |l: &String| -> Result<(), SigError> {
        if labels.contains(l) {
            Ok(())
        } else {
            Err(SigError::UnknownLabel(l.clone()))
        }
    };

    let mut closure: BTreeSet<(String, String)> = BTreeSet::new();
    for l in &labels {
        closure.insert((l.clone(), l.clone()));
    }
    let types: BTreeMap<String, String> = types.into_iter().collect();
    let mut pending: Vec<(String, String)> = Vec::new();
    for (a, b) in edges {
        check(&a)?;
        check(&b)?;
        pending.push((a, b));
    }
    for (l, t) in &types {
        check(l)?;
        check(t)?;
        pending.push((l.clone(), t.clone()));
    }
    closure.extend(pending);
    // transitive closure; label sets are tiny
    loop {
        let mut grew = false;
        let pairs: Vec<(String, String)> = closure.iter().cloned().collect();
        for (a, b) in &pairs {
            for (c, d) in &pairs {
                if b == c && closure.insert((a.clone(), d.clone())) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }

    let unbounded: BTreeSet<String> = unbounded.into_iter().collect();
    for u in &unbounded {
        check(u)?;
    }
    for u in &unbounded {
        for l in &labels {
            if closure.contains(&(u.clone(), l.clone())) && !unbounded.contains(l) {
                return Err(SigError::NotUpwardClosed { lower: u.clone(), upper: l.clone() });
            }
        }
    }
    Ok(SubexpSignature { labels, closure, unbounded, types })
}

impl SubexpSignature {
    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.labels.iter()
    }

    pub fn has_label(&self, l: &str) -> bool {
        self.labels.contains(l)
    }

    pub fn leq(&self, a: &str, b: &str) -> bool {
        a == b || self.closure.contains(&(a.to_string(), b.to_string()))
    }

    pub fn is_unbounded(&self, l: &str) -> bool {
        self.unbounded.contains(l)
    }

    pub fn declared_type(&self, l: &str) -> Option<&str> {
        self.types.get(l).map(String::as_str)
    }
}

/// Fresh labels introduced by the universal label quantifier extend the
/// signature within a branch: label `_lN` of some bounding type. An
/// extension sits below its type and above nothing, and is always linear.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SigExt {
    pub entries: Vec<(String, String)>,
}

impl SigExt {
    pub fn type_of(&self, l: &str) -> Option<&str> {
        self.entries.iter().find(|(n, _)| n == l).map(|(_, t)| t.as_str())
    }
}

/// The preorder over base labels and extensions: an extension is below
/// exactly what its bounding type is below (and itself).
pub fn leq_ext(sig: &SubexpSignature, ext: &SigExt, a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    if let Some(t) = ext.type_of(a) {
        return leq_ext(sig, ext, t, b);
    }
    if ext.type_of(b).is_some() {
        // nothing but an extension itself sits below it
        return false;
    }
    sig.leq(a, b)
}

pub fn unbounded_ext(sig: &SubexpSignature, ext: &SigExt, l: &str) -> bool {
    ext.type_of(l).is_none() && sig.is_unbounded(l)
}

pub fn label_known(sig: &SubexpSignature, ext: &SigExt, l: &str) -> bool {
    sig.has_label(l) || ext.type_of(l).is_some()
}

/// A subexponential label position: a constant or a variable bound by a
/// label quantifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelRef {
    Const(String),
    Bound(usize),
}

/// One-sided SELL propositions in negation normal form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SellFormula {
    Lit { neg: bool, pred: String, args: Vec<Term> },
    One,
    Bottom,
    Top,
    Zero,
    Tensor(Box<SellFormula>, Box<SellFormula>),
    Par(Box<SellFormula>, Box<SellFormula>),
    With(Box<SellFormula>, Box<SellFormula>),
    Plus(Box<SellFormula>, Box<SellFormula>),
    ExistsT(NameHint, Box<SellFormula>),
    ForallT(NameHint, Box<SellFormula>),
    SubBang(LabelRef, Box<SellFormula>),
    SubQuest(LabelRef, Box<SellFormula>),
    /// Existential label quantifier (union): the binder ranges over the
    /// ideal of the type label.
    UnionQ(NameHint, LabelRef, Box<SellFormula>),
    /// Universal label quantifier (intersection): introduces a fresh label
    /// of the given type.
    InterQ(NameHint, LabelRef, Box<SellFormula>),
    /// Surface modal sugar, rewritten by [`encode::expand_sell_modal`]; the
    /// label is the bounding type, `None` meaning the top label `inf`.
    BoxMod(Option<LabelRef>, Box<SellFormula>),
    DiaMod(Option<LabelRef>, Box<SellFormula>),
}

impl SellFormula {
    pub fn lit(pred: impl Into<String>, args: Vec<Term>) -> Self {
        SellFormula::Lit { neg: false, pred: pred.into(), args }
    }

    pub fn nlit(pred: impl Into<String>, args: Vec<Term>) -> Self {
        SellFormula::Lit { neg: true, pred: pred.into(), args }
    }

    pub fn tensor(a: SellFormula, b: SellFormula) -> Self {
        SellFormula::Tensor(Box::new(a), Box::new(b))
    }

    pub fn par(a: SellFormula, b: SellFormula) -> Self {
        SellFormula::Par(Box::new(a), Box::new(b))
    }

    pub fn bang(l: impl Into<String>, f: SellFormula) -> Self {
        SellFormula::SubBang(LabelRef::Const(l.into()), Box::new(f))
    }

    pub fn quest(l: impl Into<String>, f: SellFormula) -> Self {
        SellFormula::SubQuest(LabelRef::Const(l.into()), Box::new(f))
    }

    /// The de Morgan dual.
    pub fn dual(&self) -> SellFormula {
        use SellFormula::*;
        match self {
            Lit { neg, pred, args } => Lit { neg: !neg, pred: pred.clone(), args: args.clone() },
            One => Bottom,
            Bottom => One,
            Top => Zero,
            Zero => Top,
            Tensor(a, b) => Par(Box::new(a.dual()), Box::new(b.dual())),
            Par(a, b) => Tensor(Box::new(a.dual()), Box::new(b.dual())),
            With(a, b) => Plus(Box::new(a.dual()), Box::new(b.dual())),
            Plus(a, b) => With(Box::new(a.dual()), Box::new(b.dual())),
            ExistsT(h, a) => ForallT(h.clone(), Box::new(a.dual())),
            ForallT(h, a) => ExistsT(h.clone(), Box::new(a.dual())),
            SubBang(l, a) => SubQuest(l.clone(), Box::new(a.dual())),
            SubQuest(l, a) => SubBang(l.clone(), Box::new(a.dual())),
            UnionQ(h, t, a) => InterQ(h.clone(), t.clone(), Box::new(a.dual())),
            InterQ(h, t, a) => UnionQ(h.clone(), t.clone(), Box::new(a.dual())),
            BoxMod(t, a) => DiaMod(t.clone(), Box::new(a.dual())),
            DiaMod(t, a) => BoxMod(t.clone(), Box::new(a.dual())),
        }
    }

    /// Apply `f` to every label reference with the number of enclosing label
    /// binders.
    pub fn map_labels(&mut self, depth: usize, f: &mut impl FnMut(&mut LabelRef, usize)) {
        use SellFormula::*;
        match self {
            Lit { .. } | One | Bottom | Top | Zero => {}
            Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
                a.map_labels(depth, f);
                b.map_labels(depth, f);
            }
            ExistsT(_, a) | ForallT(_, a) => a.map_labels(depth, f),
            SubBang(l, a) | SubQuest(l, a) => {
                f(l, depth);
                a.map_labels(depth, f);
            }
            UnionQ(_, t, a) | InterQ(_, t, a) => {
                f(t, depth);
                a.map_labels(depth + 1, f);
            }
            BoxMod(t, a) | DiaMod(t, a) => {
                if let Some(t) = t {
                    f(t, depth);
                }
                a.map_labels(depth + 1, f);
            }
        }
    }

    /// Open a label binder body with a concrete label name.
    pub fn open_label(&self, name: &str) -> SellFormula {
        let mut out = self.clone();
        out.map_labels(0, &mut |l, depth| match l {
            LabelRef::Bound(i) if *i == depth => *l = LabelRef::Const(name.to_string()),
            LabelRef::Bound(i) if *i > depth => *l = LabelRef::Bound(*i - 1),
            _ => {}
        });
        out
    }

    /// Apply `f` to every term with the number of enclosing term binders.
    pub fn map_terms(&mut self, depth: usize, f: &mut impl FnMut(&mut Term, usize)) {
        use SellFormula::*;
        match self {
            Lit { args, .. } => {
                for t in args {
                    f(t, depth);
                }
            }
            One | Bottom | Top | Zero => {}
            Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
                a.map_terms(depth, f);
                b.map_terms(depth, f);
            }
            ExistsT(_, a) | ForallT(_, a) => a.map_terms(depth + 1, f),
            SubBang(_, a) | SubQuest(_, a) => a.map_terms(depth, f),
            UnionQ(_, _, a) | InterQ(_, _, a) => a.map_terms(depth, f),
            BoxMod(_, a) | DiaMod(_, a) => a.map_terms(depth, f),
        }
    }

    /// Open a term binder body with a closed term.
    pub fn open_term(&self, value: &Term) -> SellFormula {
        let mut out = self.clone();
        out.map_terms(0, &mut |t, depth| open_term_in(t, depth, value));
        out
    }

    pub fn modal_free(&self) -> bool {
        use SellFormula::*;
        match self {
            BoxMod(_, _) | DiaMod(_, _) => false,
            Lit { .. } | One | Bottom | Top | Zero => true,
            Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => a.modal_free() && b.modal_free(),
            ExistsT(_, a) | ForallT(_, a) | SubBang(_, a) | SubQuest(_, a) => a.modal_free(),
            UnionQ(_, _, a) | InterQ(_, _, a) => a.modal_free(),
        }
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

/// Polarity in the one-sided discipline; literals are treated as focusable
/// directly (an init attempt), so only connectives matter here.
pub fn sell_positive(f: &SellFormula) -> bool {
    use SellFormula::*;
    matches!(
        f,
        Lit { .. }
            | One
            | Zero
            | Tensor(_, _)
            | Plus(_, _)
            | ExistsT(_, _)
            | SubBang(_, _)
            | UnionQ(_, _, _)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(
        labels: &[&str],
        edges: &[(&str, &str)],
        unbounded: &[&str],
    ) -> Result<SubexpSignature, SigError> {
        validate_signature(
            labels.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
            unbounded.iter().map(|s| s.to_string()),
            [],
        )
    }

    #[test]
    fn closure_and_upward_closure_checked() {
        let s = sig(&["a", "b"], &[("a", "b")], &["b"]).unwrap();
        assert!(s.leq("a", "b"));
        assert!(s.leq("a", "a"));
        assert!(!s.leq("b", "a"));
        assert!(s.is_unbounded("b"));

        let err = sig(&["a", "b"], &[("a", "b")], &["a"]).unwrap_err();
        assert_eq!(err, SigError::NotUpwardClosed { lower: "a".into(), upper: "b".into() });
    }

    #[test]
    fn transitive_closure() {
        let s = sig(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &[]).unwrap();
        assert!(s.leq("a", "c"));
        assert!(!s.leq("c", "a"));
    }

    #[test]
    fn encoding_signature_shape() {
        // stamps discrete below inf; copy unbounded, related only to inf
        let s = sig(
            &["w", "v", "inf", "copy"],
            &[("w", "inf"), ("v", "inf"), ("copy", "inf")],
            &["inf", "copy"],
        )
        .unwrap();
        assert!(s.leq("w", "inf"));
        assert!(!s.leq("w", "v"));
        assert!(!s.leq("w", "copy"));
        assert!(s.is_unbounded("copy"));
    }

    #[test]
    fn typed_labels_join_the_order() {
        let s = validate_signature(
            ["u", "v"].map(String::from),
            [],
            [],
            [("v".to_string(), "u".to_string())],
        )
        .unwrap();
        assert!(s.leq("v", "u"));
        assert_eq!(s.declared_type("v"), Some("u"));
    }

    #[test]
    fn extension_labels_sit_below_their_type() {
        let s = sig(&["u", "inf"], &[("u", "inf")], &["inf"]).unwrap();
        let ext = SigExt { entries: vec![("_l0".into(), "u".into())] };
        assert!(leq_ext(&s, &ext, "_l0", "u"));
        assert!(leq_ext(&s, &ext, "_l0", "inf"));
        assert!(!leq_ext(&s, &ext, "u", "_l0"));
        assert!(!unbounded_ext(&s, &ext, "_l0"));
    }

    #[test]
    fn dual_is_involutive() {
        let f = SellFormula::par(
            SellFormula::quest("w", SellFormula::nlit("p", vec![])),
            SellFormula::bang(
                "v",
                SellFormula::tensor(SellFormula::lit("q", vec![]), SellFormula::One),
            ),
        );
        assert_eq!(f.dual().dual(), f);
    }
}
