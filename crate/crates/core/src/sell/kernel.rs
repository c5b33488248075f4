//! The SELL rule kernel: one-sided dyadic sequents, premise computation per
//! rule, and a checker for explicit proof trees. Cut-free by construction —
//! there is no cut rule to apply.
//!
//! Storage under a subexponential is explicit: `?a G` stores `G` at label
//! `a` (into the persistent map when `a` admits weakening and contraction,
//! into a tagged linear slot otherwise), and a stored linear formula is
//! consumed by an explicit activation step. Promotion checks its side
//! condition against every nonempty zone, dropping unbounded zones whose
//! label fails it (weakening) and rejecting linear ones by name.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::Term;

use super::{
    label_known, leq_ext, unbounded_ext, LabelRef, SellFormula, SigExt, SubexpSignature,
};

/// A stored or active linear item: `None` tags the workspace (active zone),
/// `Some(a)` a formula stored at linear label `a`.
pub type LinearItem = (Option<String>, SellFormula);

/// A one-sided dyadic sequent `|- Theta ; Gamma`. Unbounded storage has set
/// semantics per label; everything linear (workspace and bounded storage)
/// lives in one sorted multiset so splits can address it uniformly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SellSequent {
    persistent: BTreeMap<String, BTreeSet<SellFormula>>,
    linear: Vec<LinearItem>,
}

impl SellSequent {
    pub fn new(
        persistent: impl IntoIterator<Item = (String, SellFormula)>,
        linear: impl IntoIterator<Item = LinearItem>,
    ) -> Self {
        let mut map: BTreeMap<String, BTreeSet<SellFormula>> = BTreeMap::new();
        for (l, f) in persistent {
            map.entry(l).or_default().insert(f);
        }
        let mut linear: Vec<LinearItem> = linear.into_iter().collect();
        linear.sort();
        SellSequent { persistent: map, linear }
    }

    /// The initial sequent for a list of goal formulas.
    pub fn start(formulas: impl IntoIterator<Item = SellFormula>) -> Self {
        SellSequent::new([], formulas.into_iter().map(|f| (None, f)))
    }

    pub fn linear(&self) -> &[LinearItem] {
        &self.linear
    }

    pub fn persistent(&self) -> &BTreeMap<String, BTreeSet<SellFormula>> {
        &self.persistent
    }

    pub fn persistent_at(&self, label: &str, idx: usize) -> Option<&SellFormula> {
        self.persistent.get(label).and_then(|set| set.iter().nth(idx))
    }

    fn replace_linear(&self, i: usize, with: impl IntoIterator<Item = LinearItem>) -> Self {
        let mut linear = self.linear.clone();
        linear.remove(i);
        linear.extend(with);
        linear.sort();
        SellSequent { persistent: self.persistent.clone(), linear }
    }

    fn push_linear(&self, item: LinearItem) -> Self {
        let mut linear = self.linear.clone();
        linear.push(item);
        linear.sort();
        SellSequent { persistent: self.persistent.clone(), linear }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SellRule {
    Init,
    One,
    Bottom,
    Par,
    Tensor,
    With,
    Top,
    Plus1,
    Plus2,
    Zero,
    Forall,
    Exists,
    Quest,
    Bang,
    Inter,
    Union,
    Activate,
    CopyU,
}

impl SellRule {
    pub fn name(self) -> &'static str {
        match self {
            SellRule::Init => "init",
            SellRule::One => "one",
            SellRule::Bottom => "bottom",
            SellRule::Par => "par",
            SellRule::Tensor => "tensor",
            SellRule::With => "with",
            SellRule::Top => "top",
            SellRule::Plus1 => "plus1",
            SellRule::Plus2 => "plus2",
            SellRule::Zero => "zero",
            SellRule::Forall => "forall",
            SellRule::Exists => "exists",
            SellRule::Quest => "quest",
            SellRule::Bang => "bang",
            SellRule::Inter => "inter",
            SellRule::Union => "union",
            SellRule::Activate => "activate",
            SellRule::CopyU => "copy",
        }
    }

    pub fn is_axiom(self) -> bool {
        matches!(self, SellRule::Init | SellRule::One | SellRule::Top)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SellPrincipal {
    Linear(usize),
    /// A persistent formula addressed by label and position in its set.
    Persistent(String, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SellWitness {
    Term(Term),
    Label(String),
    Split(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SellProofNode {
    pub rule: SellRule,
    pub principal: SellPrincipal,
    pub witness: Option<SellWitness>,
    pub premises: Vec<SellProofNode>,
}

impl SellProofNode {
    pub fn leaf(rule: SellRule, principal: SellPrincipal) -> Self {
        SellProofNode { rule, principal, witness: None, premises: Vec::new() }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(SellProofNode::size).sum::<usize>()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SellProofNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.premises.iter());
            Some(node)
        })
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum SellError {
    #[error("rule {0} does not apply to the designated formula")]
    ShapeMismatch(&'static str),
    #[error("principal position out of range")]
    PrincipalOutOfRange,
    #[error("rule {rule} needs a {need} witness")]
    MissingWitness { rule: &'static str, need: &'static str },
    #[error("split index {0} out of range or repeated")]
    BadSplit(usize),
    #[error("init requires exactly two dual literals in the workspace")]
    InitMismatch,
    #[error("promotion blocked: the workspace still holds an active formula")]
    WorkspaceNotEmpty,
    #[error("promotion side condition fails at context label `{label}`")]
    SideCondition { label: String },
    #[error("unknown subexponential label `{0}`")]
    UnknownLabel(String),
    #[error("witness label `{witness}` is outside the ideal of `{ideal}`")]
    OutsideIdeal { witness: String, ideal: String },
    #[error("label binder type must be a concrete label")]
    OpenLabelBinder,
    #[error("witness mentions eigenvariable `{0}` that is not yet in scope")]
    EigenNotFresh(String),
}

/// Per-branch freshness state threaded by the checker and the prover: the
/// term eigenvariable counter and the label extensions introduced so far.
#[derive(Clone, Debug, Default)]
pub struct Freshness {
    pub eigen: usize,
    pub ext: SigExt,
}

impl Freshness {
    pub fn fresh_label_name(&self) -> String {
        format!("_l{}", self.ext.entries.len())
    }
}

fn const_label(l: &LabelRef) -> Result<&str, SellError> {
    match l {
        LabelRef::Const(s) => Ok(s),
        LabelRef::Bound(_) => Err(SellError::OpenLabelBinder),
    }
}

fn linear_principal<'s>(
    seq: &'s SellSequent,
    principal: &SellPrincipal,
    rule: SellRule,
) -> Result<(usize, &'s SellFormula), SellError> {
    match principal {
        SellPrincipal::Linear(i) => match seq.linear.get(*i) {
            Some((None, f)) => Ok((*i, f)),
            Some((Some(_), _)) => Err(SellError::ShapeMismatch(rule.name())),
            None => Err(SellError::PrincipalOutOfRange),
        },
        _ => Err(SellError::ShapeMismatch(rule.name())),
    }
}

fn scan_eigens(t: &Term, counter: usize) -> Result<(), SellError> {
    match t {
        Term::Free(n) => {
            if let Some(rest) = n.strip_prefix("_e") {
                if let Ok(k) = rest.parse::<usize>() {
                    if k >= counter {
                        return Err(SellError::EigenNotFresh(n.clone()));
                    }
                }
            }
            Ok(())
        }
        Term::App(_, args) => {
            for a in args {
                scan_eigens(a, counter)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// The premises of one SELL rule instance.
pub fn sell_rule_premises(
    sig: &SubexpSignature,
    rule: SellRule,
    seq: &SellSequent,
    principal: &SellPrincipal,
    witness: Option<&SellWitness>,
    fresh: &Freshness,
) -> Result<Vec<SellSequent>, SellError> {
    match rule {
        SellRule::Init => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            if !matches!(f, SellFormula::Lit { .. }) || seq.linear.len() != 2 {
                return Err(SellError::InitMismatch);
            }
            let other = seq.linear.iter().enumerate().find(|(k, _)| *k != i).unwrap().1;
            match other {
                (None, g) if *g == f.dual() => Ok(Vec::new()),
                _ => Err(SellError::InitMismatch),
            }
        }
        SellRule::One => {
            let (_, f) = linear_principal(seq, principal, rule)?;
            if !matches!(f, SellFormula::One) {
                return Err(SellError::ShapeMismatch(rule.name()));
            }
            if seq.linear.len() != 1 {
                return Err(SellError::ShapeMismatch(rule.name()));
            }
            Ok(Vec::new())
        }
        SellRule::Top => {
            let (_, f) = linear_principal(seq, principal, rule)?;
            if !matches!(f, SellFormula::Top) {
                return Err(SellError::ShapeMismatch(rule.name()));
            }
            Ok(Vec::new())
        }
        SellRule::Zero => Err(SellError::ShapeMismatch(rule.name())),
        SellRule::Bottom => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            if !matches!(f, SellFormula::Bottom) {
                return Err(SellError::ShapeMismatch(rule.name()));
            }
            Ok(vec![seq.replace_linear(i, [])])
        }
        SellRule::Par => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (a, b) = match f {
                SellFormula::Par(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            Ok(vec![seq.replace_linear(i, [(None, a), (None, b)])])
        }
        SellRule::Tensor => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (a, b) = match f {
                SellFormula::Tensor(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            let indices = match witness {
                Some(SellWitness::Split(ix)) => ix,
                _ => {
                    return Err(SellError::MissingWitness { rule: rule.name(), need: "split" })
                }
            };
            let mut mask = vec![false; seq.linear.len()];
            for &k in indices {
                if k >= seq.linear.len() || mask[k] || k == i {
                    return Err(SellError::BadSplit(k));
                }
                mask[k] = true;
            }
            let mut left = vec![(None, a)];
            let mut right = vec![(None, b)];
            for (k, item) in seq.linear.iter().enumerate() {
                if k == i {
                    continue;
                }
                if mask[k] {
                    left.push(item.clone());
                } else {
                    right.push(item.clone());
                }
            }
            Ok(vec![
                SellSequent::new(flatten(&seq.persistent), left),
                SellSequent::new(flatten(&seq.persistent), right),
            ])
        }
        SellRule::With => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (a, b) = match f {
                SellFormula::With(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            Ok(vec![
                seq.replace_linear(i, [(None, a)]),
                seq.replace_linear(i, [(None, b)]),
            ])
        }
        SellRule::Plus1 | SellRule::Plus2 => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (a, b) = match f {
                SellFormula::Plus(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            let kept = if rule == SellRule::Plus1 { a } else { b };
            Ok(vec![seq.replace_linear(i, [(None, kept)])])
        }
        SellRule::Forall => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let body = match f {
                SellFormula::ForallT(_, a) => a.as_ref().clone(),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            let t = Term::Free(format!("_e{}", fresh.eigen));
            Ok(vec![seq.replace_linear(i, [(None, body.open_term(&t))])])
        }
        SellRule::Exists => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let body = match f {
                SellFormula::ExistsT(_, a) => a.as_ref().clone(),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            let t = match witness {
                Some(SellWitness::Term(t)) => t,
                _ => return Err(SellError::MissingWitness { rule: rule.name(), need: "term" }),
            };
            scan_eigens(t, fresh.eigen)?;
            Ok(vec![seq.replace_linear(i, [(None, body.open_term(t))])])
        }
        SellRule::Quest => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (label, body) = match f {
                SellFormula::SubQuest(l, a) => (const_label(l)?.to_string(), a.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            if !label_known(sig, &fresh.ext, &label) {
                return Err(SellError::UnknownLabel(label));
            }
            if unbounded_ext(sig, &fresh.ext, &label) {
                let mut premise = seq.replace_linear(i, []);
                premise.persistent.entry(label).or_default().insert(body);
                Ok(vec![premise])
            } else {
                Ok(vec![seq.replace_linear(i, [(Some(label), body)])])
            }
        }
        SellRule::Activate => match principal {
            SellPrincipal::Linear(i) => match seq.linear.get(*i) {
                Some((Some(_), f)) => {
                    let f = f.clone();
                    Ok(vec![seq.replace_linear(*i, [(None, f)])])
                }
                Some((None, _)) => Err(SellError::ShapeMismatch(rule.name())),
                None => Err(SellError::PrincipalOutOfRange),
            },
            _ => Err(SellError::ShapeMismatch(rule.name())),
        },
        SellRule::CopyU => match principal {
            SellPrincipal::Persistent(label, idx) => {
                if !unbounded_ext(sig, &fresh.ext, label) {
                    return Err(SellError::ShapeMismatch(rule.name()));
                }
                let f = seq
                    .persistent_at(label, *idx)
                    .ok_or(SellError::PrincipalOutOfRange)?
                    .clone();
                Ok(vec![seq.push_linear((None, f))])
            }
            _ => Err(SellError::ShapeMismatch(rule.name())),
        },
        SellRule::Bang => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (label, body) = match f {
                SellFormula::SubBang(l, a) => (const_label(l)?.to_string(), a.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            if !label_known(sig, &fresh.ext, &label) {
                return Err(SellError::UnknownLabel(label));
            }
            let mut kept = vec![(None, body)];
            for (k, (tag, g)) in seq.linear.iter().enumerate() {
                if k == i {
                    continue;
                }
                match tag {
                    None => return Err(SellError::WorkspaceNotEmpty),
                    Some(b) => {
                        if !leq_ext(sig, &fresh.ext, &label, b) {
                            return Err(SellError::SideCondition { label: b.clone() });
                        }
                        kept.push((Some(b.clone()), g.clone()));
                    }
                }
            }
            // unbounded zones whose label fails the side condition are
            // weakened away; the rest are carried into the premise
            let persistent: Vec<(String, SellFormula)> = seq
                .persistent
                .iter()
                .filter(|(c, set)| !set.is_empty() && leq_ext(sig, &fresh.ext, &label, c))
                .flat_map(|(c, set)| set.iter().map(move |g| (c.clone(), g.clone())))
                .collect();
            Ok(vec![SellSequent::new(persistent, kept)])
        }
        SellRule::Inter => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (ty, body) = match f {
                SellFormula::InterQ(_, t, a) => (const_label(t)?.to_string(), a.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            if !label_known(sig, &fresh.ext, &ty) {
                return Err(SellError::UnknownLabel(ty));
            }
            let name = fresh.fresh_label_name();
            Ok(vec![seq.replace_linear(i, [(None, body.open_label(&name))])])
        }
        SellRule::Union => {
            let (i, f) = linear_principal(seq, principal, rule)?;
            let (ty, body) = match f {
                SellFormula::UnionQ(_, t, a) => (const_label(t)?.to_string(), a.as_ref().clone()),
                _ => return Err(SellError::ShapeMismatch(rule.name())),
            };
            let w = match witness {
                Some(SellWitness::Label(w)) => w.clone(),
                _ => return Err(SellError::MissingWitness { rule: rule.name(), need: "label" }),
            };
            if !label_known(sig, &fresh.ext, &w) {
                return Err(SellError::UnknownLabel(w));
            }
            if !leq_ext(sig, &fresh.ext, &w, &ty) {
                return Err(SellError::OutsideIdeal { witness: w, ideal: ty });
            }
            Ok(vec![seq.replace_linear(i, [(None, body.open_label(&w))])])
        }
    }
}

fn flatten(map: &BTreeMap<String, BTreeSet<SellFormula>>) -> Vec<(String, SellFormula)> {
    map.iter()
        .flat_map(|(l, set)| set.iter().map(move |f| (l.clone(), f.clone())))
        .collect()
}

/// Convenience wrapper for the promotion rule: focus on the bang at linear
/// position `i` and compute the premise, or the named violation.
pub fn promote(
    sig: &SubexpSignature,
    seq: &SellSequent,
    i: usize,
) -> Result<SellSequent, SellError> {
    let mut premises = sell_rule_premises(
        sig,
        SellRule::Bang,
        seq,
        &SellPrincipal::Linear(i),
        None,
        &Freshness::default(),
    )?;
    Ok(premises.remove(0))
}

/// Convenience wrapper for the question-mark rule: store the body of the
/// `?a` formula at linear position `i` into the matching zone.
pub fn dereliction_store(
    sig: &SubexpSignature,
    seq: &SellSequent,
    i: usize,
) -> Result<SellSequent, SellError> {
    let mut premises = sell_rule_premises(
        sig,
        SellRule::Quest,
        seq,
        &SellPrincipal::Linear(i),
        None,
        &Freshness::default(),
    )?;
    Ok(premises.remove(0))
}

/// Convenience wrapper for the subexponential quantifiers: instantiate the
/// quantifier at linear position `i` with the witness label (union) or a
/// fresh label of its type (intersection).
pub fn instantiate_quant(
    sig: &SubexpSignature,
    seq: &SellSequent,
    i: usize,
    witness: Option<&str>,
    fresh: &Freshness,
) -> Result<SellSequent, SellError> {
    let is_union = matches!(
        seq.linear.get(i),
        Some((None, SellFormula::UnionQ(_, _, _)))
    );
    let (rule, wit) = if is_union {
        let w = witness.ok_or(SellError::MissingWitness { rule: "union", need: "label" })?;
        (SellRule::Union, Some(SellWitness::Label(w.to_string())))
    } else {
        (SellRule::Inter, None)
    };
    let mut premises =
        sell_rule_premises(sig, rule, seq, &SellPrincipal::Linear(i), wit.as_ref(), fresh)?;
    Ok(premises.remove(0))
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid proof at {path:?}: {reason}")]
pub struct SellProofError {
    pub path: Vec<usize>,
    pub reason: SellProofErrorReason,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum SellProofErrorReason {
    #[error("{0}")]
    Rule(#[from] SellError),
    #[error("non-axiom rule {0} has no premises")]
    NonAxiomLeaf(&'static str),
    #[error("expected {expected} premises, found {found}")]
    PremiseCount { expected: usize, found: usize },
}

/// Check an explicit SELL proof against a sequent under a signature.
pub fn check_sell_proof(
    sig: &SubexpSignature,
    proof: &SellProofNode,
    seq: &SellSequent,
) -> Result<(), SellProofError> {
    let fresh = Freshness { eigen: eigen_floor_sell(seq), ext: SigExt::default() };
    let mut path = Vec::new();
    check_node(sig, proof, seq, &fresh, &mut path)
}

fn eigen_floor_sell(seq: &SellSequent) -> usize {
    let mut max: Option<usize> = None;
    let mut see = |t: &Term| {
        if let Term::Free(n) = t {
            if let Some(rest) = n.strip_prefix("_e") {
                if let Ok(k) = rest.parse::<usize>() {
                    max = Some(max.map_or(k, |m| m.max(k)));
                }
            }
        }
    };
    let mut scan = |f: &SellFormula| {
        let mut f = f.clone();
        f.map_terms(0, &mut |t, _| walk_terms(t, &mut see));
    };
    for (_, f) in &seq.linear {
        scan(f);
    }
    for set in seq.persistent.values() {
        for f in set {
            scan(f);
        }
    }
    max.map_or(0, |m| m + 1)
}

fn walk_terms(t: &Term, see: &mut impl FnMut(&Term)) {
    see(t);
    if let Term::App(_, args) = t {
        for a in args {
            walk_terms(a, see);
        }
    }
}

fn check_node(
    sig: &SubexpSignature,
    node: &SellProofNode,
    seq: &SellSequent,
    fresh: &Freshness,
    path: &mut Vec<usize>,
) -> Result<(), SellProofError> {
    let premises = sell_rule_premises(
        sig,
        node.rule,
        seq,
        &node.principal,
        node.witness.as_ref(),
        fresh,
    )
    .map_err(|reason| SellProofError { path: path.clone(), reason: reason.into() })?;
    if node.premises.len() != premises.len() {
        let reason = if node.premises.is_empty() {
            SellProofErrorReason::NonAxiomLeaf(node.rule.name())
        } else {
            SellProofErrorReason::PremiseCount {
                expected: premises.len(),
                found: node.premises.len(),
            }
        };
        return Err(SellProofError { path: path.clone(), reason });
    }
    let mut child_fresh = fresh.clone();
    match node.rule {
        SellRule::Forall => child_fresh.eigen += 1,
        SellRule::Inter => {
            // reconstruct the extension introduced by this node
            if let Ok((_, SellFormula::InterQ(_, t, _))) =
                linear_principal(seq, &node.principal, node.rule)
            {
                if let LabelRef::Const(ty) = t {
                    let name = fresh.fresh_label_name();
                    child_fresh.ext.entries.push((name, ty.clone()));
                }
            }
        }
        _ => {}
    }
    for (i, (child, premise)) in node.premises.iter().zip(premises.iter()).enumerate() {
        path.push(i);
        check_node(sig, child, premise, &child_fresh, path)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sell::validate_signature;

    fn sig2() -> SubexpSignature {
        validate_signature(
            ["a", "b", "c"].map(String::from),
            [("a".to_string(), "b".to_string())],
            ["b".to_string()].map(String::from),
            [],
        )
        .unwrap()
    }

    #[test]
    fn promote_respects_order() {
        let sig = sig2();
        // Theta[b] = {F}, focus !a G with a <= b: premise keeps the zone
        let seq = SellSequent::new(
            [("b".to_string(), SellFormula::lit("f", vec![]))],
            [(None, SellFormula::bang("a", SellFormula::lit("g", vec![])))],
        );
        let premise = promote(&sig, &seq, 0).unwrap();
        assert_eq!(premise.linear(), &[(None, SellFormula::lit("g", vec![]))]);
        assert!(premise.persistent().get("b").is_some_and(|s| s.len() == 1));

        // Theta[c] = {F} with a and c unrelated: rejection names c
        let seq = SellSequent::new(
            [],
            [
                (Some("c".to_string()), SellFormula::lit("f", vec![])),
                (None, SellFormula::bang("a", SellFormula::lit("g", vec![]))),
            ],
        );
        let bang_idx = seq.linear().iter().position(|(t, _)| t.is_none()).unwrap();
        let err = promote(&sig, &seq, bang_idx).unwrap_err();
        assert_eq!(err, SellError::SideCondition { label: "c".into() });

        // all zones empty: plain premise
        let seq = SellSequent::start([SellFormula::bang("a", SellFormula::lit("g", vec![]))]);
        let premise = promote(&sig, &seq, 0).unwrap();
        assert_eq!(premise.linear(), &[(None, SellFormula::lit("g", vec![]))]);
    }

    #[test]
    fn promotion_weakens_incompatible_unbounded_zones() {
        // b is unbounded and unrelated from above to a? a <= b holds here,
        // so use a fresh unrelated unbounded label instead
        let sig = validate_signature(
            ["a", "u"].map(String::from),
            [],
            ["u".to_string()].map(String::from),
            [],
        )
        .unwrap();
        let seq = SellSequent::new(
            [("u".to_string(), SellFormula::lit("f", vec![]))],
            [(None, SellFormula::bang("a", SellFormula::lit("g", vec![])))],
        );
        let premise = promote(&sig, &seq, 0).unwrap();
        assert!(premise.persistent().get("u").is_none_or(|s| s.is_empty()));
    }

    #[test]
    fn dereliction_stores_by_zone_kind() {
        let sig = sig2();
        // linear label: tagged storage
        let seq = SellSequent::start([SellFormula::quest("a", SellFormula::lit("p", vec![]))]);
        let premise = dereliction_store(&sig, &seq, 0).unwrap();
        assert_eq!(
            premise.linear(),
            &[(Some("a".to_string()), SellFormula::lit("p", vec![]))]
        );
        // unbounded label: persistent storage, weakening free at leaves
        let seq = SellSequent::start([SellFormula::quest("b", SellFormula::lit("p", vec![]))]);
        let premise = dereliction_store(&sig, &seq, 0).unwrap();
        assert!(premise.linear().is_empty());
        assert!(premise.persistent().get("b").is_some_and(|s| s.len() == 1));
    }

    #[test]
    fn linear_storage_blocks_init() {
        // an unconsumed linear stored formula violates init
        let seq = SellSequent::new(
            [],
            [
                (None, SellFormula::lit("p", vec![])),
                (None, SellFormula::nlit("p", vec![])),
                (Some("a".to_string()), SellFormula::lit("q", vec![])),
            ],
        );
        let i = seq
            .linear()
            .iter()
            .position(|(t, f)| t.is_none() && matches!(f, SellFormula::Lit { neg: false, .. }))
            .unwrap();
        let err = sell_rule_premises(
            &sig2(),
            SellRule::Init,
            &seq,
            &SellPrincipal::Linear(i),
            None,
            &Freshness::default(),
        )
        .unwrap_err();
        assert_eq!(err, SellError::InitMismatch);
    }

    #[test]
    fn quantifier_instantiation() {
        let sig = validate_signature(
            ["u", "v", "c"].map(String::from),
            [],
            [],
            [("v".to_string(), "u".to_string())],
        )
        .unwrap();
        // inter: fresh label of the type
        let body = SellFormula::SubBang(
            LabelRef::Bound(0),
            Box::new(SellFormula::lit("p", vec![])),
        );
        let seq = SellSequent::start([SellFormula::InterQ(
            crate::syntax::NameHint::new("l"),
            LabelRef::Const("u".into()),
            Box::new(body.clone()),
        )]);
        let premise = instantiate_quant(&sig, &seq, 0, None, &Freshness::default()).unwrap();
        assert_eq!(
            premise.linear(),
            &[(None, SellFormula::bang("_l0", SellFormula::lit("p", vec![])))]
        );

        // union with a witness in the ideal
        let seq = SellSequent::start([SellFormula::UnionQ(
            crate::syntax::NameHint::new("l"),
            LabelRef::Const("u".into()),
            Box::new(body.clone()),
        )]);
        let premise =
            instantiate_quant(&sig, &seq, 0, Some("v"), &Freshness::default()).unwrap();
        assert_eq!(
            premise.linear(),
            &[(None, SellFormula::bang("v", SellFormula::lit("p", vec![])))]
        );

        // witness outside the ideal
        let seq = SellSequent::start([SellFormula::UnionQ(
            crate::syntax::NameHint::new("l"),
            LabelRef::Const("u".into()),
            Box::new(body),
        )]);
        let err = instantiate_quant(&sig, &seq, 0, Some("c"), &Freshness::default()).unwrap_err();
        assert_eq!(err, SellError::OutsideIdeal { witness: "c".into(), ideal: "u".into() });
    }

    #[test]
    fn check_simple_proof() {
        // |- p^ | p via par, then init
        let sig = sig2();
        let f = SellFormula::par(SellFormula::nlit("p", vec![]), SellFormula::lit("p", vec![]));
        let seq = SellSequent::start([f]);
        let proof = SellProofNode {
            rule: SellRule::Par,
            principal: SellPrincipal::Linear(0),
            witness: None,
            premises: vec![SellProofNode::leaf(SellRule::Init, SellPrincipal::Linear(0))],
        };
        check_sell_proof(&sig, &proof, &seq).unwrap();
    }
}
