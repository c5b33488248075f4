//! Compilation of models into HyLL and SELL theories, query compilation,
//! and query answering with attached proofs.
//!
//! Each rewrite rule becomes an always-available implication: the left
//! multiset, consumed at the firing instant, yields the right multiset one
//! delay later. Rules live in the unbounded context wrapped in a box so
//! they can fire at any instant; rule variables are universally quantified.
//! Inhibitions consume their targets alongside the preconditions. With the
//! frame option on, every species gets a persistence rule carrying
//! unconsumed facts one step forward.
//!
//! Reachability goals are padded with `top` so unmentioned resources may
//! remain; bounded invariants expand into additive conjunctions over the
//! time points, and stable states are sought as exactly-consumed state
//! goals at quiescent candidate states.

use std::collections::BTreeSet;

use crate::domain::TEMPORAL;
use crate::kernel::{check_proof, HyllSequent, ProofNode};
use crate::prover::{prove, Mode, SearchBudget, SearchOptions, SearchResult};
use crate::sell::encode::{encoding_signature, COPY_LABEL};
use crate::sell::kernel::SellSequent;
use crate::sell::prover::{prove_sell, SellSearchResult};
use crate::sell::{LabelRef, SellFormula, SubexpSignature};
use crate::syntax::{expand_modal, Formula, Judgment, NameHint, Polarity, Term, WorldExpr};

use super::{BioAtom, BioModel, BioRule, ModelError, Query, RuleKind};

/// A compiled HyLL theory: rules in the unbounded context, initial facts in
/// the linear context at time zero.
#[derive(Clone, Debug)]
pub struct HyllTheory {
    pub gamma: Vec<Judgment>,
    pub delta: Vec<Judgment>,
}

fn atom_formula((p, args): &BioAtom) -> Formula {
    Formula::Atom(p.clone(), args.clone())
}

fn tensor_all(atoms: &[BioAtom]) -> Formula {
    let mut it = atoms.iter().map(atom_formula);
    let first = it.next().unwrap_or(Formula::One);
    it.fold(first, |acc, f| Formula::Tensor(Box::new(acc), Box::new(f)))
}

fn close_term_var(f: &Formula, name: &str) -> Formula {
    let mut out = f.clone();
    out.map_terms(0, &mut |t, depth| close_in(t, name, depth));
    Formula::ForallTerm(NameHint::new(name), Box::new(out))
}

fn close_in(t: &mut Term, name: &str, depth: usize) {
    match t {
        Term::Free(n) if n == name => *t = Term::Bound(depth),
        Term::App(_, args) => {
            for a in args {
                close_in(a, name, depth);
            }
        }
        _ => {}
    }
}

fn rule_vars(rule: &BioRule) -> Vec<String> {
    let mut vars = BTreeSet::new();
    for (_, args) in rule.left.iter().chain(rule.right.iter()) {
        for t in args {
            super::collect_vars(t, &mut vars);
        }
    }
    vars.into_iter().collect()
}

/// The unquantified core of a rule: `L -o delay[d] R`, with inhibitions
/// consuming their targets (`L * T -o delay[d] L`).
fn rule_core(rule: &BioRule) -> Formula {
    let (lhs, rhs) = match rule.kind {
        RuleKind::Inhibition => {
            let mut consumed = rule.left.clone();
            consumed.extend(rule.right.iter().cloned());
            (tensor_all(&consumed), tensor_all(&rule.left))
        }
        _ => (tensor_all(&rule.left), tensor_all(&rule.right)),
    };
    Formula::Limp(
        Box::new(lhs),
        Box::new(Formula::Delay(WorldExpr::nat(rule.delay), Box::new(rhs))),
    )
}

/// A rule as an unbounded-context judgment: variables universally
/// quantified, boxed so the rule fires at any instant, placed at the
/// identity world, with the modalities expanded away.
fn rule_judgment(rule: &BioRule) -> Judgment {
    let mut f = rule_core(rule);
    for v in rule_vars(rule).into_iter().rev() {
        f = close_term_var(&f, &v);
    }
    f = Formula::BoxModal(Box::new(f));
    Judgment::new(expand_modal(&f), WorldExpr::identity())
}

fn frame_rules(model: &BioModel) -> Vec<BioRule> {
    if !model.frame {
        return Vec::new();
    }
    model
        .species
        .iter()
        .map(|s| {
            let args: Vec<Term> = (0..s.arity).map(Term::Bound).collect();
            // bound indices stand in for fresh variables; rebuild them as
            // frees so the shared quantifier closure applies
            let frees: Vec<Term> =
                (0..s.arity).map(|i| Term::Free(format!("x{i}"))).collect();
            let _ = args;
            let atom = (s.name.clone(), frees);
            BioRule {
                name: format!("frame_{}", s.name),
                kind: RuleKind::Activation,
                delay: 1,
                left: vec![atom.clone()],
                right: vec![atom],
            }
        })
        .collect()
}

/// Compile a model into a HyLL theory: one boxed rule per rewrite rule (and
/// per species persistence rule), initial facts at time zero.
pub fn compile_model(model: &BioModel) -> HyllTheory {
    let mut gamma: Vec<Judgment> = model.rules.iter().map(rule_judgment).collect();
    gamma.extend(frame_rules(model).iter().map(rule_judgment));
    let delta = model
        .init
        .iter()
        .map(|a| Judgment::new(atom_formula(a), WorldExpr::nat(0)))
        .collect();
    HyllTheory { gamma, delta }
}

/// One compiled goal: a human-readable label and the goal judgment.
pub type CompiledGoal = (String, Judgment);

fn padded_state(facts: &[BioAtom]) -> Formula {
    Formula::Tensor(Box::new(tensor_all(facts)), Box::new(Formula::Top))
}

fn at(f: Formula, t: u64) -> Formula {
    Formula::At(Box::new(f), WorldExpr::nat(t))
}

/// Compile a query to goal judgments. Reachability at a time is the padded
/// state at that instant; within a horizon, the additive disjunction over
/// instants; a bounded invariant the additive conjunction. Stable-state
/// queries compile to one exactly-consumed goal per quiescent candidate
/// state and instant; any of them proving makes the query hold.
pub fn compile_query(
    model: &BioModel,
    query: &Query,
    horizon: u64,
) -> Result<Vec<CompiledGoal>, ModelError> {
    match query {
        Query::ReachAt { facts, at: t } => {
            if *t > horizon {
                return Err(ModelError::HorizonExceeded { t: *t, horizon });
            }
            Ok(vec![(
                format!("reach at {t}"),
                Judgment::new(padded_state(facts), WorldExpr::nat(*t)),
            )])
        }
        Query::ReachWithin { facts, horizon: h } => {
            if *h > horizon {
                return Err(ModelError::HorizonExceeded { t: *h, horizon });
            }
            let mut it = (0..=*h).map(|t| at(padded_state(facts), t));
            let first = it.next().expect("horizon range is nonempty");
            let goal = it.fold(first, |acc, f| Formula::Plus(Box::new(acc), Box::new(f)));
            Ok(vec![(format!("reach within {h}"), Judgment::new(goal, WorldExpr::identity()))])
        }
        Query::InvariantUpto { facts, horizon: h } => {
            if *h > horizon {
                return Err(ModelError::HorizonExceeded { t: *h, horizon });
            }
            let mut it = (0..=*h).map(|t| at(padded_state(facts), t));
            let first = it.next().expect("horizon range is nonempty");
            let goal = it.fold(first, |acc, f| Formula::With(Box::new(acc), Box::new(f)));
            Ok(vec![(
                format!("invariant up to {h}"),
                Judgment::new(goal, WorldExpr::identity()),
            )])
        }
        Query::StableState { horizon: h } => {
            if model.has_rule_variables() {
                return Err(ModelError::StableNeedsGroundRules);
            }
            let atoms = model.ground_atoms();
            let mut goals = Vec::new();
            for t in 0..=*h {
                for state in nonempty_subsets(&atoms) {
                    if !quiescent(model, &state) {
                        continue;
                    }
                    let label = format!(
                        "stable {{{}}} at {t}",
                        state
                            .iter()
                            .map(|a| crate::syntax::print_formula(&atom_formula(a)))
                            .collect::<Vec<_>>()
                            .join(", ")
                    );
                    goals.push((label, Judgment::new(tensor_all(&state), WorldExpr::nat(t))));
                }
            }
            Ok(goals)
        }
    }
}

fn nonempty_subsets(atoms: &[BioAtom]) -> Vec<Vec<BioAtom>> {
    let n = atoms.len().min(12);
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let subset: Vec<BioAtom> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| atoms[i].clone())
            .collect();
        out.push(subset);
    }
    out
}

/// No non-frame rule can fire on the state (inhibitions count as firable
/// when their preconditions and targets are all present).
fn quiescent(model: &BioModel, state: &[BioAtom]) -> bool {
    let present = |atom: &BioAtom| state.contains(atom);
    !model.rules.iter().any(|r| {
        let mut needed: Vec<&BioAtom> = r.left.iter().collect();
        if r.kind == RuleKind::Inhibition {
            needed.extend(r.right.iter());
        }
        needed.iter().all(|a| present(a))
    })
}

/// Answer to a query: provable with a kernel-checked proof, refuted at desk
/// scale, or out of budget.
#[derive(Clone, Debug)]
pub enum BioVerdict {
    Holds { label: String, goal: Judgment, proof: ProofNode },
    FailsAtDeskScale,
    Unknown,
}

impl BioVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, BioVerdict::Holds { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            BioVerdict::Holds { .. } => "holds",
            BioVerdict::FailsAtDeskScale => "fails-at-desk-scale",
            BioVerdict::Unknown => "unknown",
        }
    }
}

/// Search options tuned for compiled theories: positive atoms make each
/// rule firing one focused phase pair, and the world cap prunes firings
/// past the last instant the goal can mention.
pub fn bio_search_options(cap: u64) -> SearchOptions {
    SearchOptions::default()
        .with_atom_polarity(Polarity::Positive)
        .with_world_cap(WorldExpr::nat(cap))
}

fn goal_cap(goal: &Judgment) -> u64 {
    let mut cap = goal.world.as_nat().unwrap_or(0);
    let mut f = goal.formula.clone();
    f.map_worlds(0, &mut |w, _| {
        if let Some(n) = w.as_nat() {
            cap = cap.max(n);
        }
    });
    cap
}

/// Answer a query against a model: compile, search, and re-check any proof
/// against the kernel before reporting it.
pub fn answer(model: &BioModel, query: &Query, budget: &SearchBudget) -> Result<BioVerdict, ModelError> {
    let theory = compile_model(model);
    let goals = compile_query(model, query, query.horizon())?;
    let mut any_exhausted = false;
    for (label, goal) in goals {
        let cap = goal_cap(&goal);
        let seq = HyllSequent::new(theory.gamma.clone(), theory.delta.clone(), goal.clone());
        let options = bio_search_options(cap);
        let outcome = prove(&TEMPORAL, &seq, budget, Mode::Focused, &options);
        match outcome.result {
            SearchResult::Proved(proof) => {
                let expanded = crate::prover::expand_sequent(&seq);
                check_proof(&TEMPORAL, &proof, &expanded)
                    .expect("the prover returned a proof the kernel rejects");
                return Ok(BioVerdict::Holds { label, goal, proof });
            }
            SearchResult::Refuted => {}
            SearchResult::Exhausted => any_exhausted = true,
        }
    }
    Ok(if any_exhausted { BioVerdict::Unknown } else { BioVerdict::FailsAtDeskScale })
}

// ---------------------------------------------------------------------------
// the SELL side

/// A compiled SELL theory: the signature and the one-sided context
/// (dualized rules and facts). A goal formula joins the sequent when a
/// query is asked.
#[derive(Clone, Debug)]
pub struct SellTheory {
    pub signature: SubexpSignature,
    pub context: Vec<SellFormula>,
}

fn sell_lit((p, args): &BioAtom) -> SellFormula {
    SellFormula::lit(p.clone(), args.clone())
}

fn sell_tensor(parts: Vec<SellFormula>) -> SellFormula {
    let mut it = parts.into_iter();
    let first = it.next().unwrap_or(SellFormula::One);
    it.fold(first, SellFormula::tensor)
}

/// One rule instance at a stamp, as the stored (dualized) formula.
///
/// Rewrite rules consume their left atoms under a single stamped bang and
/// produce each right atom as its own stored token, kept together by a par
/// so every product lands in the same premise:
/// `![t](L) * (?[t+d]~r1 | ... | ?[t+d]~rn)`, the dual of
/// `![t] L -o (![t+d] r1 * ... * ![t+d] rn)`.
///
/// Inhibitions keep the grouped production of the classical presentation:
/// the dual of `![t] L -o ![t+d] (L * ~T)`, that is
/// `![t](L) * ?[t+d](~L | T)`.
fn sell_rule_instance(rule: &BioRule, stamp: u64) -> SellFormula {
    let t = stamp.to_string();
    let td = (stamp + rule.delay).to_string();
    let consume = SellFormula::bang(
        t,
        sell_tensor(rule.left.iter().map(sell_lit).collect()),
    );
    match rule.kind {
        RuleKind::Inhibition => {
            // production group: the left persists, the targets appear dual
            let mut group = rule.left.iter().map(sell_lit).collect::<Vec<_>>();
            group.extend(rule.right.iter().map(|a| sell_lit(a).dual()));
            let produced = SellFormula::bang(td, sell_tensor(group));
            SellFormula::tensor(consume, produced.dual())
        }
        _ => {
            let mut prods = rule
                .right
                .iter()
                .map(|atom| SellFormula::quest(td.clone(), sell_lit(atom).dual()));
            let produced = match prods.next() {
                // an erasing rule produces the unit: dual(![t+d] 1) = ?[t+d] bot
                None => SellFormula::quest(td.clone(), SellFormula::Bottom),
                Some(first) => prods.fold(first, SellFormula::par),
            };
            SellFormula::tensor(consume, produced)
        }
    }
}

/// Close the rule's variables existentially (rules sit dualized in the
/// one-sided context, so the universal reading flips).
fn sell_close_vars(rule: &BioRule, mut f: SellFormula) -> SellFormula {
    for v in rule_vars(rule).into_iter().rev() {
        let mut body = f.clone();
        body.map_terms(0, &mut |t, depth| close_in(t, &v, depth));
        f = SellFormula::ExistsT(NameHint::new(&v), Box::new(body));
    }
    f
}

/// Compile a model into a SELL theory at a horizon: stamped rule instances
/// stored under the unbounded copy label, initial facts stored at stamp 0.
pub fn compile_model_sell(model: &BioModel, horizon: u64) -> SellTheory {
    let signature = encoding_signature(horizon);
    let mut context = Vec::new();
    for fact in &model.init {
        context.push(SellFormula::quest("0", sell_lit(fact).dual()));
    }
    let mut all_rules = model.rules.clone();
    all_rules.extend(frame_rules(model));
    for rule in &all_rules {
        if rule.delay > horizon {
            continue;
        }
        for stamp in 0..=(horizon - rule.delay) {
            let inst = sell_close_vars(rule, sell_rule_instance(rule, stamp));
            context.push(SellFormula::quest(COPY_LABEL, inst));
        }
    }
    SellTheory { signature, context }
}

/// Translate compiled HyLL goals into SELL goal formulas: atoms become
/// stamped bangs, `top` absorbs leftovers, additive structure carries over,
/// and `at` annotations move the stamp.
pub fn compile_query_sell(
    model: &BioModel,
    query: &Query,
    horizon: u64,
) -> Result<Vec<(String, SellFormula)>, ModelError> {
    let signature = encoding_signature(horizon);
    let goals = compile_query(model, query, horizon)?;
    goals
        .into_iter()
        .map(|(label, goal)| {
            let stamp = goal.world.as_nat().unwrap_or(0);
            let f = translate_goal(&signature, &goal.formula, stamp)
                .unwrap_or_else(|e| panic!("compiled goal left the encodable fragment: {e}"));
            Ok((label, f))
        })
        .collect()
}

fn translate_goal(
    sig: &SubexpSignature,
    f: &Formula,
    stamp: u64,
) -> Result<SellFormula, crate::sell::encode::EncodeError> {
    use crate::sell::encode::EncodeError;
    match f {
        Formula::Atom(p, args) => Ok(SellFormula::SubBang(
            LabelRef::Const(stamp.to_string()),
            Box::new(SellFormula::lit(p.clone(), args.clone())),
        )),
        Formula::Top => Ok(SellFormula::Top),
        Formula::One => Ok(SellFormula::One),
        Formula::Tensor(a, b) => Ok(SellFormula::tensor(
            translate_goal(sig, a, stamp)?,
            translate_goal(sig, b, stamp)?,
        )),
        Formula::Plus(a, b) => Ok(SellFormula::Plus(
            Box::new(translate_goal(sig, a, stamp)?),
            Box::new(translate_goal(sig, b, stamp)?),
        )),
        Formula::With(a, b) => Ok(SellFormula::With(
            Box::new(translate_goal(sig, a, stamp)?),
            Box::new(translate_goal(sig, b, stamp)?),
        )),
        Formula::At(a, w) => {
            let s = w.as_nat().ok_or(EncodeError::NonGroundWorld)?;
            translate_goal(sig, a, s)
        }
        _ => Err(EncodeError::Unsupported("goal connective")),
    }
}

/// Answer a query against the SELL compilation of the model.
pub fn answer_sell(
    model: &BioModel,
    query: &Query,
    budget: &SearchBudget,
) -> Result<BioVerdict, ModelError> {
    let horizon = query.horizon();
    let theory = compile_model_sell(model, horizon);
    let goals = compile_query_sell(model, query, horizon)?;
    let mut any_exhausted = false;
    for (label, goal) in goals {
        let mut formulas = theory.context.clone();
        formulas.push(goal);
        let seq = SellSequent::start(formulas);
        let outcome = prove_sell(&theory.signature, &seq, budget);
        match outcome.result {
            SellSearchResult::Proved(proof) => {
                let _ = proof;
                return Ok(BioVerdict::Holds {
                    label,
                    goal: Judgment::new(Formula::One, WorldExpr::identity()),
                    proof: ProofNode::leaf(
                        crate::kernel::RuleId::OneR,
                        crate::kernel::Principal::Goal,
                    ),
                });
            }
            SellSearchResult::Refuted => {}
            SellSearchResult::Exhausted => any_exhausted = true,
        }
    }
    Ok(if any_exhausted { BioVerdict::Unknown } else { BioVerdict::FailsAtDeskScale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::parse_model;

    const CHAIN: &str = super::super::tests::CHAIN;

    fn chain() -> BioModel {
        parse_model(CHAIN).unwrap()
    }

    fn reach(facts: &[&str], t: u64) -> Query {
        let model = chain();
        let table = model.symbol_table();
        let atoms = facts
            .iter()
            .map(|s| super::super::parse_atom(s, &table, &model, 0).unwrap())
            .collect();
        Query::ReachAt { facts: atoms, at: t }
    }

    #[test]
    fn compiled_rule_matches_activation_form() {
        let model = chain();
        let theory = compile_model(&model);
        // 2 rules + 1 frame rule for the single species
        assert_eq!(theory.gamma.len(), 3);
        assert_eq!(theory.delta.len(), 1);
        assert_eq!(theory.delta[0].world, WorldExpr::nat(0));
        // the rule judgment is the expanded boxed implication
        let expect_core = crate::syntax::parse_formula(
            "pres(a) -o delay[1] (pres(a) * pres(b))",
            &model.symbol_table(),
            &TEMPORAL,
        )
        .unwrap();
        let expect = expand_modal(&Formula::BoxModal(Box::new(expect_core)));
        assert!(theory.gamma.iter().any(|j| j.formula == expect));
    }

    #[test]
    fn chain_reaches_c_at_two_not_one() {
        let model = chain();
        let budget = SearchBudget::default().with_decides(24);
        let verdict = answer(&model, &reach(&["pres(c)"], 2), &budget).unwrap();
        assert!(verdict.holds(), "got {}", verdict.label());
        let verdict = answer(&model, &reach(&["pres(c)"], 1), &budget).unwrap();
        assert_eq!(verdict.label(), "fails-at-desk-scale");
    }

    #[test]
    fn empty_rule_set_identity() {
        let src = "\
species pres/1
const a
init pres(a)
option frame off
";
        let model = parse_model(src).unwrap();
        let table = model.symbol_table();
        let q = Query::ReachAt {
            facts: vec![super::super::parse_atom("pres(a)", &table, &model, 0).unwrap()],
            at: 0,
        };
        let verdict = answer(&model, &q, &SearchBudget::default()).unwrap();
        assert!(verdict.holds());
    }

    #[test]
    fn reach_within_single_disjunct() {
        let model = chain();
        let table = model.symbol_table();
        let q = Query::ReachWithin {
            facts: vec![super::super::parse_atom("pres(b)", &table, &model, 0).unwrap()],
            horizon: 0,
        };
        let goals = compile_query(&model, &q, 0).unwrap();
        assert_eq!(goals.len(), 1);
        // single disjunct: (pres(b) * top) at 0
        assert!(matches!(goals[0].1.formula, Formula::At(_, _)));
        let verdict = answer(&model, &q, &SearchBudget::default()).unwrap();
        assert_eq!(verdict.label(), "fails-at-desk-scale");
    }

    #[test]
    fn invariant_compiles_to_with() {
        let model = chain();
        let table = model.symbol_table();
        let q = Query::InvariantUpto {
            facts: vec![super::super::parse_atom("pres(a)", &table, &model, 0).unwrap()],
            horizon: 1,
        };
        let goals = compile_query(&model, &q, 1).unwrap();
        assert!(matches!(goals[0].1.formula, Formula::With(_, _)));
        let verdict = answer(&model, &q, &SearchBudget::default().with_decides(24)).unwrap();
        assert!(verdict.holds());
    }

    #[test]
    fn sell_rule_instance_shapes() {
        let model = chain();
        // activation at stamp 0: ![0](pres(a)) * (?[1]~pres(a) | ?[1]~pres(b))
        let inst = sell_rule_instance(&model.rules[0], 0);
        let expect = SellFormula::tensor(
            SellFormula::bang("0", SellFormula::lit("pres", vec![Term::Const("a".into())])),
            SellFormula::par(
                SellFormula::quest("1", SellFormula::nlit("pres", vec![Term::Const("a".into())])),
                SellFormula::quest("1", SellFormula::nlit("pres", vec![Term::Const("b".into())])),
            ),
        );
        assert_eq!(inst, expect);
    }

    #[test]
    fn sell_inhibition_keeps_grouped_form() {
        // inhib(a,b): ![t] a -o ![t+1] (a * ~b), stored dualized
        let src = "\
species pres/1
const a b
init pres(a), pres(b)
rule inh: pres(a) =| pres(b) delay 1
";
        let model = parse_model(src).unwrap();
        let inst = sell_rule_instance(&model.rules[0], 2);
        let expect = SellFormula::tensor(
            SellFormula::bang("2", SellFormula::lit("pres", vec![Term::Const("a".into())])),
            SellFormula::quest(
                "3",
                SellFormula::par(
                    SellFormula::nlit("pres", vec![Term::Const("a".into())]),
                    SellFormula::lit("pres", vec![Term::Const("b".into())]),
                ),
            ),
        );
        assert_eq!(inst, expect);
    }

    #[test]
    fn horizon_zero_yields_no_rule_instances() {
        let model = chain();
        let theory = compile_model_sell(&model, 0);
        // only the initial fact is stored
        assert_eq!(theory.context.len(), 1);
    }

    #[test]
    fn sell_agrees_on_the_chain() {
        let model = chain();
        let budget = SearchBudget::default().with_decides(32);
        let v = answer_sell(&model, &reach(&["pres(c)"], 2), &budget).unwrap();
        assert!(v.holds(), "got {}", v.label());
        let v = answer_sell(&model, &reach(&["pres(c)"], 1), &budget).unwrap();
        assert_eq!(v.label(), "fails-at-desk-scale");
    }
}
