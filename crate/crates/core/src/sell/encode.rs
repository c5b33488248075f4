//! Modal expansion and the encoding of HyLL judgments into SELL.
//!
//! Modalities are definable through the label quantifiers: a box over type
//! `u` is the universal quantifier binding a fresh label of type `u` under a
//! bang, the diamond its existential dual, and the unsubscripted forms
//! quantify at the top label `inf`.
//!
//! Judgments of the hybrid logic are placed into SELL storage by world:
//! a linear judgment at world `w` becomes `?[w] <body>` and a classical one
//! `?[copy] ?[w] <body>`, where the body is the dualized translation of the
//! formula. The translation covers the rule-based fragment: atoms, tensor,
//! linear implication, and delay shifts rendered as stamp arithmetic on the
//! subexponential markers.

use crate::syntax::{Formula, Judgment, WorldExpr};

use super::{LabelRef, SellFormula, SubexpSignature};

/// The distinguished labels of judgment encodings.
pub const COPY_LABEL: &str = "copy";
pub const INF_LABEL: &str = "inf";

/// Rewrite the surface modalities into label quantifiers:
/// `box[u] A = all l:u. ![l] A`, `dia[u] A = some l:u. ![l] A`, with the
/// unsubscripted forms quantifying at `inf`. Idempotent on expanded input.
pub fn expand_sell_modal(f: &SellFormula) -> SellFormula {
    use SellFormula::*;
    match f {
        Lit { .. } | One | Bottom | Top | Zero => f.clone(),
        Tensor(a, b) => Tensor(Box::new(expand_sell_modal(a)), Box::new(expand_sell_modal(b))),
        Par(a, b) => Par(Box::new(expand_sell_modal(a)), Box::new(expand_sell_modal(b))),
        With(a, b) => With(Box::new(expand_sell_modal(a)), Box::new(expand_sell_modal(b))),
        Plus(a, b) => Plus(Box::new(expand_sell_modal(a)), Box::new(expand_sell_modal(b))),
        ExistsT(h, a) => ExistsT(h.clone(), Box::new(expand_sell_modal(a))),
        ForallT(h, a) => ForallT(h.clone(), Box::new(expand_sell_modal(a))),
        SubBang(l, a) => SubBang(l.clone(), Box::new(expand_sell_modal(a))),
        SubQuest(l, a) => SubQuest(l.clone(), Box::new(expand_sell_modal(a))),
        UnionQ(h, t, a) => UnionQ(h.clone(), t.clone(), Box::new(expand_sell_modal(a))),
        InterQ(h, t, a) => InterQ(h.clone(), t.clone(), Box::new(expand_sell_modal(a))),
        BoxMod(t, a) => expand_modal_quant(t, a, true),
        DiaMod(t, a) => expand_modal_quant(t, a, false),
    }
}

fn expand_modal_quant(ty: &Option<LabelRef>, body: &SellFormula, universal: bool) -> SellFormula {
    // the sugar already binds one label level (see map_labels), so the body
    // keeps its indices
    let ty = ty.clone().unwrap_or(LabelRef::Const(INF_LABEL.into()));
    let inner = SellFormula::SubBang(LabelRef::Bound(0), Box::new(expand_sell_modal(body)));
    let hint = crate::syntax::NameHint::new(if universal { "l" } else { "t" });
    if universal {
        SellFormula::InterQ(hint, ty, Box::new(inner))
    } else {
        SellFormula::UnionQ(hint, ty, Box::new(inner))
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("judgment world must be a ground temporal stamp")]
    NonGroundWorld,
    #[error("world label `{0}` is absent from the signature")]
    MissingWorldLabel(String),
    #[error("the `{0}` connective is outside the encodable rule fragment")]
    Unsupported(&'static str),
}

fn stamp_of(world: &WorldExpr) -> Result<u64, EncodeError> {
    world.as_nat().ok_or(EncodeError::NonGroundWorld)
}

fn stamp_label(sig: &SubexpSignature, stamp: u64) -> Result<String, EncodeError> {
    let name = stamp.to_string();
    if sig.has_label(&name) {
        Ok(name)
    } else {
        Err(EncodeError::MissingWorldLabel(name))
    }
}

/// Translate a formula of the rule fragment as read from the right-hand
/// side at a given stamp: atoms inside rule bodies carry their stamp marker,
/// implications become stamped consumption/production pairs, and delays
/// shift the stamp.
fn translate_positive(
    sig: &SubexpSignature,
    f: &Formula,
    stamp: u64,
) -> Result<SellFormula, EncodeError> {
    match f {
        Formula::Atom(p, args) => Ok(SellFormula::SubBang(
            LabelRef::Const(stamp_label(sig, stamp)?),
            Box::new(SellFormula::lit(p.clone(), args.clone())),
        )),
        Formula::One => Ok(SellFormula::One),
        Formula::Top => Ok(SellFormula::Top),
        Formula::Tensor(a, b) => Ok(SellFormula::tensor(
            translate_positive(sig, a, stamp)?,
            translate_positive(sig, b, stamp)?,
        )),
        Formula::Limp(a, b) => {
            let lhs = translate_positive(sig, a, stamp)?;
            let rhs = translate_positive(sig, b, stamp)?;
            Ok(SellFormula::par(lhs.dual(), rhs))
        }
        Formula::Delay(v, a) => {
            let shift = v.as_nat().ok_or(EncodeError::NonGroundWorld)?;
            translate_positive(sig, a, stamp + shift)
        }
        Formula::At(a, w) => translate_positive(sig, a, stamp_of(w)?),
        Formula::Zero => Err(EncodeError::Unsupported("0")),
        Formula::Plus(_, _) => Err(EncodeError::Unsupported("plus")),
        Formula::With(_, _) => Err(EncodeError::Unsupported("with")),
        Formula::Bang(_) => Err(EncodeError::Unsupported("bang")),
        Formula::ForallTerm(_, _) | Formula::ExistsTerm(_, _) => {
            Err(EncodeError::Unsupported("term quantifier"))
        }
        Formula::Down(_, _) | Formula::ForallWorld(_, _) | Formula::ExistsWorld(_, _) => {
            Err(EncodeError::Unsupported("world binder"))
        }
        Formula::BoxModal(_) | Formula::DiaModal(_) => {
            Err(EncodeError::Unsupported("modal"))
        }
    }
}

/// Encode one HyLL judgment (an element of the left contexts) as a SELL
/// formula: the dualized translation stored at the judgment's world, under
/// an extra `?[copy]` for classical judgments.
///
/// The inner translation keeps the atom bare for facts — the storage label
/// already localizes them — and renders compound rule bodies with explicit
/// stamp markers.
pub fn encode_hyll_judgment(
    sig: &SubexpSignature,
    j: &Judgment,
    classical: bool,
) -> Result<SellFormula, EncodeError> {
    let stamp = stamp_of(&j.world)?;
    let label = stamp_label(sig, stamp)?;
    let body = match &j.formula {
        // a stored fact: the zone it sits in carries the stamp
        Formula::Atom(p, args) => SellFormula::nlit(p.clone(), args.clone()),
        other => translate_positive(sig, other, stamp)?.dual(),
    };
    let stored = SellFormula::quest(label, body);
    if classical {
        if !sig.has_label(COPY_LABEL) {
            return Err(EncodeError::MissingWorldLabel(COPY_LABEL.into()));
        }
        Ok(SellFormula::quest(COPY_LABEL, stored))
    } else {
        Ok(stored)
    }
}

/// The signature used by judgment encodings: one label per stamp up to the
/// horizon, `inf` above everything, and an unbounded `copy` related only to
/// `inf`.
pub fn encoding_signature(horizon: u64) -> SubexpSignature {
    let mut labels: Vec<String> = (0..=horizon).map(|t| t.to_string()).collect();
    labels.push(INF_LABEL.into());
    labels.push(COPY_LABEL.into());
    let edges: Vec<(String, String)> = labels
        .iter()
        .filter(|l| *l != INF_LABEL)
        .map(|l| (l.clone(), INF_LABEL.to_string()))
        .collect();
    super::validate_signature(
        labels,
        edges,
        [INF_LABEL.to_string(), COPY_LABEL.to_string()],
        [],
    )
    .expect("the encoding signature is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{NameHint, Term};

    #[test]
    fn box_expands_to_inter() {
        // box[u] A = all l:u. ![l] A
        let f = SellFormula::BoxMod(
            Some(LabelRef::Const("u".into())),
            Box::new(SellFormula::lit("p", vec![])),
        );
        let got = expand_sell_modal(&f);
        let expect = SellFormula::InterQ(
            NameHint::new("l"),
            LabelRef::Const("u".into()),
            Box::new(SellFormula::SubBang(
                LabelRef::Bound(0),
                Box::new(SellFormula::lit("p", vec![])),
            )),
        );
        assert_eq!(got, expect);
    }

    #[test]
    fn dia_expands_to_union_at_inf() {
        let f = SellFormula::DiaMod(None, Box::new(SellFormula::lit("p", vec![])));
        let got = expand_sell_modal(&f);
        let expect = SellFormula::UnionQ(
            NameHint::new("t"),
            LabelRef::Const(INF_LABEL.into()),
            Box::new(SellFormula::SubBang(
                LabelRef::Bound(0),
                Box::new(SellFormula::lit("p", vec![])),
            )),
        );
        assert_eq!(got, expect);
        // idempotent on expanded input
        assert_eq!(expand_sell_modal(&got), got);
    }

    #[test]
    fn linear_fact_encodes_to_stored_dual() {
        let sig = encoding_signature(5);
        let j = Judgment::new(
            Formula::Atom("pres".into(), vec![Term::Const("a".into())]),
            WorldExpr::nat(3),
        );
        let got = encode_hyll_judgment(&sig, &j, false).unwrap();
        assert_eq!(
            got,
            SellFormula::quest("3", SellFormula::nlit("pres", vec![Term::Const("a".into())]))
        );
    }

    #[test]
    fn classical_rule_encodes_under_copy() {
        let sig = encoding_signature(3);
        // rule a -o delay[1](a) at world 0, stored classically
        let rule = Formula::Limp(
            Box::new(Formula::Atom("a".into(), vec![])),
            Box::new(Formula::Delay(WorldExpr::nat(1), Box::new(Formula::Atom("a".into(), vec![])))),
        );
        let j = Judgment::new(rule, WorldExpr::nat(0));
        let got = encode_hyll_judgment(&sig, &j, true).unwrap();
        // ?[copy] ?[0] dual(![0]a -o ![1]a) = ?[copy]?[0](![0]a * ?[1]~a)
        let expect = SellFormula::quest(
            "copy",
            SellFormula::quest(
                "0",
                SellFormula::tensor(
                    SellFormula::bang("0", SellFormula::lit("a", vec![])),
                    SellFormula::quest("1", SellFormula::nlit("a", vec![])),
                ),
            ),
        );
        assert_eq!(got, expect);
    }

    #[test]
    fn delta_shift_maps_stamps() {
        // the inhibition shape: ![t]a -o ![t+1](a * ~b) at stamp 2
        let sig = encoding_signature(4);
        let inhib = Formula::Limp(
            Box::new(Formula::Atom("a".into(), vec![])),
            Box::new(Formula::Delay(
                WorldExpr::nat(1),
                Box::new(Formula::Tensor(
                    Box::new(Formula::Atom("a".into(), vec![])),
                    Box::new(Formula::Atom("b".into(), vec![])),
                )),
            )),
        );
        let got = translate_positive(&sig, &inhib, 2).unwrap();
        let expect = SellFormula::par(
            SellFormula::quest("2", SellFormula::nlit("a", vec![])),
            SellFormula::tensor(
                SellFormula::bang("3", SellFormula::lit("a", vec![])),
                SellFormula::bang("3", SellFormula::lit("b", vec![])),
            ),
        );
        assert_eq!(got, expect);
    }

    #[test]
    fn world_label_must_exist() {
        let sig = encoding_signature(2);
        let j = Judgment::new(Formula::Atom("p".into(), vec![]), WorldExpr::nat(9));
        assert_eq!(
            encode_hyll_judgment(&sig, &j, false).unwrap_err(),
            EncodeError::MissingWorldLabel("9".into())
        );
    }
}
