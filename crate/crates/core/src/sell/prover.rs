//! Bounded focused search for one-sided SELL sequents.
//!
//! The engine mirrors the HyLL focused prover: inversion decomposes the
//! asynchronous actives (par, bottom, with, top, forall, the universal label
//! quantifier, and question-mark storage), deciding focuses on a positive
//! active, a stored linear formula (activation) or an unbounded copy, and
//! focus runs synchronous rules until init, promotion or a release. The
//! lazy resource stream covers the workspace and the bounded storage zones
//! together, so multiplicative splits and the promotion side condition read
//! straight off the consumption accounting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use std::time::Instant;

use crate::prover::resources::{additive_join, cap_leftover, Multiset};
use crate::prover::{SearchBudget, SearchStats};
use crate::syntax::Term;

use super::kernel::{
    check_sell_proof, sell_rule_premises, Freshness, LinearItem, SellPrincipal, SellProofNode,
    SellRule, SellSequent, SellWitness,
};
use super::{leq_ext, sell_positive, unbounded_ext, SellFormula, SubexpSignature};

type Persist = Rc<BTreeMap<String, BTreeSet<SellFormula>>>;
type Items = Multiset<LinearItem>;

/// Search outcome for the SELL engine; `Refuted` keeps the same honest
/// semantics as the HyLL prover (fully explored, no cut-offs).
#[derive(Clone, Debug)]
pub enum SellSearchResult {
    Proved(SellProofNode),
    Refuted,
    Exhausted,
}

impl SellSearchResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, SellSearchResult::Proved(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, SellSearchResult::Refuted)
    }

    pub fn proof(&self) -> Option<&SellProofNode> {
        match self {
            SellSearchResult::Proved(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SellSearchResult::Proved(_) => "proved",
            SellSearchResult::Refuted => "refuted",
            SellSearchResult::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SellOutcome {
    pub result: SellSearchResult,
    pub stats: SearchStats,
}

#[derive(Clone, Debug)]
enum PrinRef {
    Linear(LinearItem),
    Persistent(String, SellFormula),
}

#[derive(Clone, Debug)]
struct SNode {
    rule: SellRule,
    prin: PrinRef,
    witness: Option<SellWitness>,
    children: Vec<SNode>,
    used: Items,
    child_extra: Vec<Items>,
    slack: bool,
}

#[derive(Clone, Debug)]
struct Win {
    node: SNode,
    out: Items,
    slack: bool,
}

type Cont<'a, 'd> = &'a mut dyn FnMut(&mut Searcher<'d>, Win) -> bool;

#[derive(Clone, PartialEq, Eq, Hash)]
struct MemoKey {
    persistent: Vec<(String, SellFormula)>,
    input: Items,
}

#[derive(Clone, Copy)]
enum MemoFail {
    Forever,
    AtRemaining(usize),
}

struct Searcher<'d> {
    sig: &'d SubexpSignature,
    deadline: Option<Instant>,
    memo: HashMap<MemoKey, MemoFail>,
    stats: SearchStats,
    cutoff_events: u64,
    timed_out: bool,
}

fn expand_sequent(seq: &SellSequent) -> SellSequent {
    SellSequent::new(
        seq.persistent().iter().flat_map(|(l, set)| {
            set.iter().map(move |f| (l.clone(), super::encode::expand_sell_modal(f)))
        }),
        seq.linear()
            .iter()
            .map(|(tag, f)| (tag.clone(), super::encode::expand_sell_modal(f))),
    )
}

/// Bounded focused search over a one-sided sequent; a proof, when found, has
/// passed the SELL checker.
pub fn prove_sell(sig: &SubexpSignature, seq: &SellSequent, budget: &SearchBudget) -> SellOutcome {
    let seq = expand_sequent(seq);
    let start = Instant::now();
    let mut s = Searcher {
        sig,
        deadline: budget.timeout.map(|t| Instant::now() + t),
        memo: HashMap::new(),
        stats: SearchStats::default(),
        cutoff_events: 0,
        timed_out: false,
    };
    let persistent: Persist = Rc::new(seq.persistent().clone());
    let input: Items = seq.linear().iter().cloned().collect();
    let fresh = Freshness::default();

    let mut final_result = SellSearchResult::Exhausted;
    for depth in 1..=budget.max_decides {
        s.cutoff_events = 0;
        let mut accepted: Option<Win> = None;
        let found = s.invert(&persistent, input.clone(), depth, &fresh, &mut |_, win| {
            if win.out.is_empty() || win.slack {
                accepted = Some(win);
                true
            } else {
                false
            }
        });
        if found {
            let win = accepted.expect("accepted win recorded");
            let extra = win.out.clone();
            let proof = reconstruct(sig, &win.node, &seq, &extra, &fresh)
                .expect("reconstruction of a successful search failed");
            debug_assert!(check_sell_proof(sig, &proof, &seq).is_ok());
            let mut stats = s.stats.clone();
            stats.elapsed = start.elapsed();
            return SellOutcome { result: SellSearchResult::Proved(proof), stats };
        }
        if s.cutoff_events == 0 && !s.timed_out {
            final_result = SellSearchResult::Refuted;
            break;
        }
        if s.timed_out {
            break;
        }
    }
    let mut stats = s.stats;
    stats.elapsed = start.elapsed();
    SellOutcome { result: final_result, stats }
}

fn invertible(f: &SellFormula) -> bool {
    matches!(
        f,
        SellFormula::Par(_, _)
            | SellFormula::Bottom
            | SellFormula::With(_, _)
            | SellFormula::Top
            | SellFormula::ForallT(_, _)
            | SellFormula::InterQ(_, _, _)
            | SellFormula::SubQuest(_, _)
    )
}

impl<'d> Searcher<'d> {
    // ---- negative phase ----

    fn invert(
        &mut self,
        persistent: &Persist,
        input: Items,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        let pos = input
            .iter()
            .position(|(tag, f)| tag.is_none() && invertible(f));
        let i = match pos {
            Some(i) => i,
            None => return self.stable(persistent, input, depth, fresh, k),
        };
        let mut rest = input.clone();
        let (_, f) = rest.remove_at(i);
        let item = input.as_slice()[i].clone();
        let limit = rest.clone();
        match &f {
            SellFormula::Par(a, b) => {
                let c1 = (None, a.as_ref().clone());
                let c2 = (None, b.as_ref().clone());
                self.invert_step(SellRule::Par, item, persistent, rest, vec![c1, c2], depth, fresh, &limit, k)
            }
            SellFormula::Bottom => {
                self.invert_step(SellRule::Bottom, item, persistent, rest, vec![], depth, fresh, &limit, k)
            }
            SellFormula::ForallT(_, a) => {
                let t = Term::Free(format!("_e{}", fresh.eigen));
                let mut f2 = fresh.clone();
                f2.eigen += 1;
                let comp = (None, a.open_term(&t));
                self.invert_step(SellRule::Forall, item, persistent, rest, vec![comp], depth, &f2, &limit, k)
            }
            SellFormula::InterQ(_, _, a) => {
                let name = fresh.fresh_label_name();
                let ty = match &f {
                    SellFormula::InterQ(_, super::LabelRef::Const(t), _) => t.clone(),
                    _ => return false,
                };
                let mut f2 = fresh.clone();
                f2.ext.entries.push((name.clone(), ty));
                let comp = (None, a.open_label(&name));
                self.invert_step(SellRule::Inter, item, persistent, rest, vec![comp], depth, &f2, &limit, k)
            }
            SellFormula::Top => {
                let node = SNode {
                    rule: SellRule::Top,
                    prin: PrinRef::Linear(item),
                    witness: None,
                    children: Vec::new(),
                    used: Multiset::singleton(input.as_slice()[i].clone()),
                    child_extra: Vec::new(),
                    slack: true,
                };
                k(self, Win { node, out: rest, slack: true })
            }
            SellFormula::With(a, b) => {
                let mut in1 = rest.clone();
                in1.insert((None, a.as_ref().clone()));
                let mut in2 = rest.clone();
                in2.insert((None, b.as_ref().clone()));
                let limit2 = limit.clone();
                let item2 = item.clone();
                self.invert(persistent, in1, depth, fresh, &mut |s, w1| {
                    let capped1 = match cap_leftover(&w1.out, &limit2, w1.slack) {
                        Some(c) => c,
                        None => return false,
                    };
                    let w1c = (w1.node.clone(), capped1, w1.slack);
                    s.invert(persistent, in2.clone(), depth, fresh, &mut |s2, w2| {
                        let (flow2, absorbed2) = match cap_leftover(&w2.out, &limit2, w2.slack) {
                            Some(c) => c,
                            None => return false,
                        };
                        let (node1, (flow1, absorbed1), slack1) =
                            (w1c.0.clone(), w1c.1.clone(), w1c.2);
                        let used1 = limit2.minus(&flow1);
                        let used2 = limit2.minus(&flow2);
                        let (joint, e1, e2) =
                            match additive_join(&used1, slack1, &used2, w2.slack) {
                                Some(j) => j,
                                None => return false,
                            };
                        let out = limit2.minus(&joint);
                        let mut used = joint;
                        used.insert(item2.clone());
                        let slack = slack1 && w2.slack;
                        let node = SNode {
                            rule: SellRule::With,
                            prin: PrinRef::Linear(item2.clone()),
                            witness: None,
                            children: vec![node1, w2.node.clone()],
                            used,
                            child_extra: vec![e1.plus(&absorbed1), e2.plus(&absorbed2)],
                            slack,
                        };
                        k(s2, Win { node, out, slack })
                    })
                })
            }
            SellFormula::SubQuest(l, a) => {
                let label = match l {
                    super::LabelRef::Const(s) => s.clone(),
                    super::LabelRef::Bound(_) => return false,
                };
                if !super::label_known(self.sig, &fresh.ext, &label) {
                    return false;
                }
                if unbounded_ext(self.sig, &fresh.ext, &label) {
                    let mut p2 = (**persistent).clone();
                    p2.entry(label).or_default().insert(a.as_ref().clone());
                    let p2 = Rc::new(p2);
                    let item2 = item.clone();
                    let limit2 = limit.clone();
                    self.invert(&p2, rest, depth, fresh, &mut |s, cw| {
                        match wrap_unary(SellRule::Quest, PrinRef::Linear(item2.clone()), None, Some(&item2), &limit2, cw) {
                            Some(win) => k(s, win),
                            None => false,
                        }
                    })
                } else {
                    let comp = (Some(label), a.as_ref().clone());
                    self.invert_step(SellRule::Quest, item, persistent, rest, vec![comp], depth, fresh, &limit, k)
                }
            }
            _ => unreachable!("invertible() admitted a synchronous formula"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn invert_step(
        &mut self,
        rule: SellRule,
        item: LinearItem,
        persistent: &Persist,
        rest: Items,
        components: Vec<LinearItem>,
        depth: usize,
        fresh: &Freshness,
        limit: &Items,
        k: Cont<'_, 'd>,
    ) -> bool {
        let mut next = rest;
        for c in components {
            next.insert(c);
        }
        let limit = limit.clone();
        self.invert(persistent, next, depth, fresh, &mut |s, cw| {
            match wrap_unary(rule, PrinRef::Linear(item.clone()), None, Some(&item), &limit, cw) {
                Some(win) => k(s, win),
                None => false,
            }
        })
    }

    // ---- stable: decide ----

    fn stable(
        &mut self,
        persistent: &Persist,
        input: Items,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                self.timed_out = true;
                self.cutoff_events += 1;
                return false;
            }
        }
        let key = MemoKey {
            persistent: persistent
                .iter()
                .flat_map(|(l, set)| set.iter().map(move |f| (l.clone(), f.clone())))
                .collect(),
            input: input.clone(),
        };
        match self.memo.get(&key) {
            Some(MemoFail::Forever) => {
                self.stats.memo_hits += 1;
                return false;
            }
            Some(MemoFail::AtRemaining(d)) if depth <= *d => {
                self.stats.memo_hits += 1;
                self.cutoff_events += 1;
                return false;
            }
            _ => {}
        }
        if depth == 0 {
            self.cutoff_events += 1;
            return false;
        }

        let cutoffs_before = self.cutoff_events;
        let mut yielded = false;
        {
            let mut yk = |s: &mut Searcher<'d>, win: Win| {
                yielded = true;
                k(s, win)
            };

            // workspace actives: positives and literals
            for (i, (tag, f)) in input.iter().enumerate() {
                if tag.is_some() || !sell_positive(f) {
                    continue;
                }
                let mut rest = input.clone();
                let item = rest.remove_at(i);
                self.stats.decides += 1;
                if self.focus(persistent, rest, &item, depth - 1, fresh, &mut yk) {
                    return true;
                }
            }

            // stored linear formulas: activate, then invert or focus
            for (i, (tag, f)) in input.iter().enumerate() {
                if tag.is_none() {
                    continue;
                }
                let mut rest = input.clone();
                let item = rest.remove_at(i);
                let active = (None, f.clone());
                self.stats.decides += 1;
                let limit = rest.clone();
                let item2 = item.clone();
                let active2 = active.clone();
                let found = self.after_activation(
                    persistent,
                    rest,
                    &active2,
                    depth - 1,
                    fresh,
                    &mut |s, cw| {
                        match wrap_unary(
                            SellRule::Activate,
                            PrinRef::Linear(item2.clone()),
                            None,
                            Some(&item2),
                            &limit,
                            cw,
                        ) {
                            Some(win) => yk(s, win),
                            None => false,
                        }
                    },
                );
                if found {
                    return true;
                }
            }

            // unbounded copies
            let copies: Vec<(String, SellFormula)> = persistent
                .iter()
                .flat_map(|(l, set)| set.iter().map(move |f| (l.clone(), f.clone())))
                .collect();
            for (label, f) in copies {
                if !self.copy_guard(persistent, &input, fresh, &f) {
                    continue;
                }
                self.stats.decides += 1;
                let active = (None, f.clone());
                let limit = input.clone();
                let prin = PrinRef::Persistent(label.clone(), f.clone());
                let found = self.after_activation(
                    persistent,
                    input.clone(),
                    &active,
                    depth - 1,
                    fresh,
                    &mut |s, cw| {
                        match wrap_unary(SellRule::CopyU, prin.clone(), None, None, &limit, cw) {
                            Some(win) => yk(s, win),
                            None => false,
                        }
                    },
                );
                if found {
                    return true;
                }
            }
        }

        if !yielded {
            let entry = if self.cutoff_events == cutoffs_before {
                MemoFail::Forever
            } else {
                MemoFail::AtRemaining(depth)
            };
            self.memo.insert(key, entry);
        }
        false
    }

    /// Continue after introducing a fresh workspace active (activation or
    /// copy): invert it if asynchronous, focus otherwise.
    fn after_activation(
        &mut self,
        persistent: &Persist,
        input: Items,
        active: &LinearItem,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        if invertible(&active.1) {
            let mut with = input;
            with.insert(active.clone());
            self.invert(persistent, with, depth, fresh, k)
        } else {
            self.focus(persistent, input, active, depth, fresh, k)
        }
    }

    /// A safe applicability filter for deciding on an unbounded copy: when
    /// the formula is a plain rule shape (a tensor of banged literal groups
    /// and question-marked stores, no additive or quantifier structure), a
    /// banged group can only close by consuming duals of its literals from
    /// zones at or above its label; if some dual is nowhere available the
    /// decide cannot succeed. Anything structurally richer is never pruned.
    fn copy_guard(
        &self,
        persistent: &Persist,
        input: &Items,
        fresh: &Freshness,
        f: &SellFormula,
    ) -> bool {
        let mut groups: Vec<(String, Vec<SellFormula>)> = Vec::new();
        if !rule_shape(f, &mut groups) {
            return true;
        }
        for (label, lits) in groups {
            for lit in lits {
                let dual = lit.dual();
                let mut found = false;
                for (tag, g) in input.iter() {
                    if let Some(b) = tag {
                        if leq_ext(self.sig, &fresh.ext, &label, b) && contains_lit(g, &dual) {
                            found = true;
                            break;
                        }
                    }
                }
                if !found {
                    for (c, set) in persistent.iter() {
                        if leq_ext(self.sig, &fresh.ext, &label, c)
                            && set.iter().any(|g| contains_lit(g, &dual))
                        {
                            found = true;
                            break;
                        }
                    }
                }
                if !found {
                    return false;
                }
            }
        }
        true
    }

    // ---- positive phase ----

    fn focus(
        &mut self,
        persistent: &Persist,
        input: Items,
        item: &LinearItem,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        let f = &item.1;
        match f {
            SellFormula::Lit { .. } => self.focus_literal(persistent, input, item, k),
            SellFormula::One => {
                let node = SNode {
                    rule: SellRule::One,
                    prin: PrinRef::Linear(item.clone()),
                    witness: None,
                    children: Vec::new(),
                    used: Multiset::singleton(item.clone()),
                    child_extra: Vec::new(),
                    slack: false,
                };
                k(self, Win { node, out: input, slack: false })
            }
            SellFormula::Zero => false,
            SellFormula::Tensor(a, b) => {
                let left = (None, a.as_ref().clone());
                let right = (None, b.as_ref().clone());
                let input2 = input.clone();
                let item2 = item.clone();
                self.focus_or_release(persistent, input, &left, depth, fresh, &mut |s, wa| {
                    let wa = wa.clone();
                    let right2 = right.clone();
                    let item3 = item2.clone();
                    let input3 = input2.clone();
                    s.focus_or_release(persistent, wa.out.clone(), &right2, depth, fresh, &mut |s2, wb| {
                        let (flow, absorbed) = match cap_leftover(&wb.out, &input3, wb.slack) {
                            Some(c) => c,
                            None => return false,
                        };
                        let mut used = input3.minus(&flow);
                        used.insert(item3.clone());
                        let slack = wa.slack || wb.slack;
                        let node = SNode {
                            rule: SellRule::Tensor,
                            prin: PrinRef::Linear(item3.clone()),
                            witness: None,
                            children: vec![wa.node.clone(), wb.node.clone()],
                            used,
                            child_extra: vec![Multiset::new(), absorbed],
                            slack,
                        };
                        k(s2, Win { node, out: flow, slack })
                    })
                })
            }
            SellFormula::Plus(a, b) => {
                let left = (None, a.as_ref().clone());
                if self.focus_step(SellRule::Plus1, persistent, input.clone(), item, &left, None, depth, fresh, &mut *k) {
                    return true;
                }
                let right = (None, b.as_ref().clone());
                self.focus_step(SellRule::Plus2, persistent, input, item, &right, None, depth, fresh, k)
            }
            SellFormula::ExistsT(_, a) => {
                let cands = self.term_candidates_sell(persistent, &input, a);
                for t in cands {
                    let sub = (None, a.open_term(&t));
                    let wit = Some(SellWitness::Term(t));
                    if self.focus_step(SellRule::Exists, persistent, input.clone(), item, &sub, wit, depth, fresh, &mut *k) {
                        return true;
                    }
                }
                false
            }
            SellFormula::UnionQ(_, ty, a) => {
                let ty = match ty {
                    super::LabelRef::Const(t) => t.clone(),
                    super::LabelRef::Bound(_) => return false,
                };
                let mut labels: Vec<String> = self
                    .sig
                    .labels()
                    .filter(|l| self.sig.leq(l, &ty))
                    .cloned()
                    .collect();
                for (name, _) in &fresh.ext.entries {
                    if leq_ext(self.sig, &fresh.ext, name, &ty) {
                        labels.push(name.clone());
                    }
                }
                for l in labels {
                    let sub = (None, a.open_label(&l));
                    let wit = Some(SellWitness::Label(l));
                    if self.focus_step(SellRule::Union, persistent, input.clone(), item, &sub, wit, depth, fresh, &mut *k) {
                        return true;
                    }
                }
                false
            }
            SellFormula::SubBang(l, a) => {
                let label = match l {
                    super::LabelRef::Const(s) => s.clone(),
                    super::LabelRef::Bound(_) => return false,
                };
                if !super::label_known(self.sig, &fresh.ext, &label) {
                    return false;
                }
                // only zones at or above the label enter the premise
                let mut compatible = Multiset::new();
                let mut withheld = Multiset::new();
                for it in input.iter() {
                    match &it.0 {
                        Some(b) if leq_ext(self.sig, &fresh.ext, &label, b) => {
                            compatible.insert(it.clone())
                        }
                        _ => withheld.insert(it.clone()),
                    }
                }
                let filtered: BTreeMap<String, BTreeSet<SellFormula>> = persistent
                    .iter()
                    .filter(|(c, _)| leq_ext(self.sig, &fresh.ext, &label, c))
                    .map(|(c, set)| (c.clone(), set.clone()))
                    .collect();
                let filtered = Rc::new(filtered);
                let mut sub_input = compatible.clone();
                sub_input.insert((None, a.as_ref().clone()));
                let item2 = item.clone();
                let compatible2 = compatible.clone();
                let withheld2 = withheld.clone();
                self.invert(&filtered, sub_input, depth, fresh, &mut |s, cw| {
                    let (flow, absorbed) = match cap_leftover(&cw.out, &compatible2, cw.slack) {
                        Some(c) => c,
                        None => return false,
                    };
                    // absorb-all first: route every compatible leftover into
                    // the subtree's slack (the bio goal pattern), then the
                    // plain reading
                    if cw.slack && !flow.is_empty() {
                        let mut used = compatible2.clone();
                        used.insert(item2.clone());
                        let node = SNode {
                            rule: SellRule::Bang,
                            prin: PrinRef::Linear(item2.clone()),
                            witness: None,
                            children: vec![cw.node.clone()],
                            used,
                            child_extra: vec![absorbed.plus(&flow)],
                            slack: false,
                        };
                        if k(s, Win { node, out: withheld2.clone(), slack: false }) {
                            return true;
                        }
                    }
                    let mut used = compatible2.minus(&flow);
                    used.insert(item2.clone());
                    let node = SNode {
                        rule: SellRule::Bang,
                        prin: PrinRef::Linear(item2.clone()),
                        witness: None,
                        children: vec![cw.node.clone()],
                        used,
                        child_extra: vec![absorbed],
                        slack: false,
                    };
                    k(s, Win { node, out: withheld2.plus(&flow), slack: false })
                })
            }
            // asynchronous under focus: release into inversion
            _ => {
                let mut with = input;
                with.insert(item.clone());
                self.invert(persistent, with, depth, fresh, k)
            }
        }
    }

    fn focus_or_release(
        &mut self,
        persistent: &Persist,
        input: Items,
        item: &LinearItem,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        if invertible(&item.1) {
            let mut with = input;
            with.insert(item.clone());
            self.invert(persistent, with, depth, fresh, k)
        } else {
            self.focus(persistent, input, item, depth, fresh, k)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn focus_step(
        &mut self,
        rule: SellRule,
        persistent: &Persist,
        input: Items,
        item: &LinearItem,
        sub: &LinearItem,
        witness: Option<SellWitness>,
        depth: usize,
        fresh: &Freshness,
        k: Cont<'_, 'd>,
    ) -> bool {
        let limit = input.clone();
        let item2 = item.clone();
        self.focus_or_release(persistent, input, sub, depth, fresh, &mut |s, cw| {
            match wrap_unary(rule, PrinRef::Linear(item2.clone()), witness.clone(), Some(&item2), &limit, cw) {
                Some(win) => k(s, win),
                None => false,
            }
        })
    }

    /// Close a focused literal against an available dual: a workspace
    /// active, a stored linear formula (activation first), or an unbounded
    /// copy.
    fn focus_literal(
        &mut self,
        persistent: &Persist,
        input: Items,
        item: &LinearItem,
        k: Cont<'_, 'd>,
    ) -> bool {
        let dual = item.1.dual();

        // workspace duals
        if let Some(i) = input
            .iter()
            .position(|(tag, f)| tag.is_none() && *f == dual)
        {
            let mut rest = input.clone();
            let dj = rest.remove_at(i);
            let node = SNode {
                rule: SellRule::Init,
                prin: PrinRef::Linear(item.clone()),
                witness: None,
                children: Vec::new(),
                used: Multiset::from_vec(vec![item.clone(), dj]),
                child_extra: Vec::new(),
                slack: false,
            };
            if k(self, Win { node, out: rest, slack: false }) {
                return true;
            }
        }

        // stored linear duals, consumed through activation
        let stored: Vec<usize> = input
            .iter()
            .enumerate()
            .filter(|(_, (tag, f))| tag.is_some() && *f == dual)
            .map(|(i, _)| i)
            .collect();
        for i in stored {
            let mut rest = input.clone();
            let sj = rest.remove_at(i);
            let activated = (None, dual.clone());
            let init = SNode {
                rule: SellRule::Init,
                prin: PrinRef::Linear(item.clone()),
                witness: None,
                children: Vec::new(),
                used: Multiset::from_vec(vec![item.clone(), activated]),
                child_extra: Vec::new(),
                slack: false,
            };
            let node = SNode {
                rule: SellRule::Activate,
                prin: PrinRef::Linear(sj.clone()),
                witness: None,
                children: vec![init],
                used: Multiset::from_vec(vec![item.clone(), sj]),
                child_extra: vec![Multiset::new()],
                slack: false,
            };
            if k(self, Win { node, out: rest, slack: false }) {
                return true;
            }
        }

        // unbounded copies
        for (label, set) in persistent.iter() {
            if set.contains(&dual) {
                let activated = (None, dual.clone());
                let init = SNode {
                    rule: SellRule::Init,
                    prin: PrinRef::Linear(item.clone()),
                    witness: None,
                    children: Vec::new(),
                    used: Multiset::from_vec(vec![item.clone(), activated]),
                    child_extra: Vec::new(),
                    slack: false,
                };
                let node = SNode {
                    rule: SellRule::CopyU,
                    prin: PrinRef::Persistent(label.clone(), dual.clone()),
                    witness: None,
                    children: vec![init],
                    used: Multiset::singleton(item.clone()),
                    child_extra: vec![Multiset::new()],
                    slack: false,
                };
                if k(self, Win { node, out: input.clone(), slack: false }) {
                    return true;
                }
            }
        }
        false
    }

    /// Term witness candidates for the SELL existential: positional matches
    /// of the body's literals against available literals, then the ground
    /// subterm universe.
    fn term_candidates_sell(
        &self,
        persistent: &Persist,
        input: &Items,
        body: &SellFormula,
    ) -> Vec<Term> {
        let mut avail: Vec<(bool, String, Vec<Term>)> = Vec::new();
        let mut collect = |f: &SellFormula| collect_literals(f, &mut avail);
        for (_, f) in input.iter() {
            collect(f);
        }
        for set in persistent.values() {
            for f in set {
                collect(f);
            }
        }
        let mut patterns: Vec<(bool, String, Vec<Term>)> = Vec::new();
        collect_pattern_literals(body, 0, &mut patterns);

        let mut seen: BTreeSet<Term> = BTreeSet::new();
        let mut out: Vec<Term> = Vec::new();
        let push = |t: Term, seen: &mut BTreeSet<Term>, out: &mut Vec<Term>| {
            if seen.insert(t.clone()) {
                out.push(t);
            }
        };
        for (neg, pred, args) in &patterns {
            for (aneg, apred, aargs) in &avail {
                // a body literal meets its dual at init
                if pred != apred || args.len() != aargs.len() || neg == aneg {
                    continue;
                }
                for (pat, actual) in args.iter().zip(aargs.iter()) {
                    collect_pattern_matches(pat, actual, &mut |t| {
                        if t.is_ground() || matches!(t, Term::Free(_)) {
                            push(t.clone(), &mut seen, &mut out);
                        }
                    });
                }
            }
        }
        let mut universe: BTreeSet<Term> = BTreeSet::new();
        for (_, _, args) in &avail {
            for a in args {
                ground_subterms(a, &mut universe);
            }
        }
        for t in universe {
            push(t, &mut seen, &mut out);
        }
        if out.is_empty() {
            out.push(Term::Const("o".into()));
        }
        out
    }
}

fn collect_literals(f: &SellFormula, out: &mut Vec<(bool, String, Vec<Term>)>) {
    use SellFormula::*;
    match f {
        Lit { neg, pred, args } => out.push((*neg, pred.clone(), args.clone())),
        One | Bottom | Top | Zero => {}
        Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
            collect_literals(a, out);
            collect_literals(b, out);
        }
        SubBang(_, a) | SubQuest(_, a) | UnionQ(_, _, a) | InterQ(_, _, a) => {
            collect_literals(a, out)
        }
        BoxMod(_, a) | DiaMod(_, a) => collect_literals(a, out),
        ExistsT(_, _) | ForallT(_, _) => {}
    }
}

fn collect_pattern_literals(f: &SellFormula, depth: usize, out: &mut Vec<(bool, String, Vec<Term>)>) {
    use SellFormula::*;
    match f {
        Lit { neg, pred, args } => {
            if depth == 0 {
                out.push((*neg, pred.clone(), args.clone()));
            }
        }
        One | Bottom | Top | Zero => {}
        Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
            collect_pattern_literals(a, depth, out);
            collect_pattern_literals(b, depth, out);
        }
        SubBang(_, a) | SubQuest(_, a) | UnionQ(_, _, a) | InterQ(_, _, a) => {
            collect_pattern_literals(a, depth, out)
        }
        BoxMod(_, a) | DiaMod(_, a) => collect_pattern_literals(a, depth, out),
        // deeper term binders shift the target index; stop
        ExistsT(_, _) | ForallT(_, _) => {}
    }
}

fn collect_pattern_matches(pat: &Term, actual: &Term, hit: &mut impl FnMut(&Term)) {
    match (pat, actual) {
        (Term::Bound(0), t) => hit(t),
        (Term::App(f, pargs), Term::App(g, aargs)) if f == g && pargs.len() == aargs.len() => {
            for (p, a) in pargs.iter().zip(aargs.iter()) {
                collect_pattern_matches(p, a, hit);
            }
        }
        _ => {}
    }
}

fn ground_subterms(t: &Term, out: &mut BTreeSet<Term>) {
    if t.is_ground() {
        out.insert(t.clone());
    }
    if let Term::App(_, args) = t {
        for a in args {
            ground_subterms(a, out);
        }
    }
}

fn contains_lit(f: &SellFormula, lit: &SellFormula) -> bool {
    if f == lit {
        return true;
    }
    use SellFormula::*;
    match f {
        Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
            contains_lit(a, lit) || contains_lit(b, lit)
        }
        SubBang(_, a) | SubQuest(_, a) | UnionQ(_, _, a) | InterQ(_, _, a) => contains_lit(a, lit),
        BoxMod(_, a) | DiaMod(_, a) => contains_lit(a, lit),
        ExistsT(_, a) | ForallT(_, a) => contains_lit(a, lit),
        _ => false,
    }
}

/// Recognize the dualized rule shape: a tensor tree of banged literal
/// groups, question-marked stores and bare literals, with no additive,
/// quantifier or par structure. Returns false (no guard) otherwise.
fn rule_shape(f: &SellFormula, groups: &mut Vec<(String, Vec<SellFormula>)>) -> bool {
    use SellFormula::*;
    match f {
        Tensor(a, b) => rule_shape(a, groups) && rule_shape(b, groups),
        SubBang(super::LabelRef::Const(l), body) => {
            let mut lits = Vec::new();
            if literal_tensor(body, &mut lits) {
                groups.push((l.clone(), lits));
                true
            } else {
                false
            }
        }
        SubQuest(super::LabelRef::Const(_), body) => literal_only(body),
        Lit { .. } | One => true,
        _ => false,
    }
}

fn literal_tensor(f: &SellFormula, out: &mut Vec<SellFormula>) -> bool {
    use SellFormula::*;
    match f {
        Lit { .. } => {
            out.push(f.clone());
            true
        }
        Tensor(a, b) => literal_tensor(a, out) && literal_tensor(b, out),
        One => true,
        _ => false,
    }
}

fn literal_only(f: &SellFormula) -> bool {
    use SellFormula::*;
    match f {
        Lit { .. } => true,
        Par(a, b) | Tensor(a, b) => literal_only(a) && literal_only(b),
        _ => false,
    }
}

fn wrap_unary(
    rule: SellRule,
    prin: PrinRef,
    witness: Option<SellWitness>,
    principal: Option<&LinearItem>,
    limit: &Items,
    cw: Win,
) -> Option<Win> {
    let (flow, absorbed) = cap_leftover(&cw.out, limit, cw.slack)?;
    let mut used = limit.minus(&flow);
    if let Some(j) = principal {
        used.insert(j.clone());
    }
    let slack = cw.slack;
    let node = SNode {
        rule,
        prin,
        witness,
        children: vec![cw.node],
        used,
        child_extra: vec![absorbed],
        slack,
    };
    Some(Win { node, out: flow, slack })
}

// ---------------------------------------------------------------------------
// reconstruction

fn reconstruct(
    sig: &SubexpSignature,
    node: &SNode,
    seq: &SellSequent,
    extra: &Items,
    fresh: &Freshness,
) -> Result<SellProofNode, String> {
    let linear: Items = seq.linear().iter().cloned().collect();
    debug_assert_eq!(
        linear,
        node.used.plus(extra),
        "kernel context diverged from search accounting for rule {}",
        node.rule.name()
    );

    let principal = match &node.prin {
        PrinRef::Linear(item) => SellPrincipal::Linear(
            seq.linear()
                .iter()
                .position(|x| x == item)
                .ok_or_else(|| format!("principal item missing for {}", node.rule.name()))?,
        ),
        PrinRef::Persistent(label, f) => {
            let idx = seq
                .persistent()
                .get(label)
                .and_then(|set| set.iter().position(|x| x == f))
                .ok_or_else(|| format!("persistent formula missing for {}", node.rule.name()))?;
            SellPrincipal::Persistent(label.clone(), idx)
        }
    };

    let nchildren = node.children.len();
    let mut routed: Vec<Items> = vec![Multiset::new(); nchildren];
    match node.rule {
        SellRule::Tensor => {
            if !extra.is_empty() {
                if node.children[0].slack {
                    routed[0] = extra.clone();
                } else if node.children[1].slack {
                    routed[1] = extra.clone();
                } else {
                    return Err("extra resources with no slack branch".into());
                }
            }
        }
        SellRule::With => {
            for r in routed.iter_mut() {
                *r = extra.clone();
            }
        }
        SellRule::Init | SellRule::One | SellRule::Bang => {
            if !extra.is_empty() {
                return Err(format!("extra resources at {}", node.rule.name()));
            }
        }
        _ => {
            if let Some(r) = routed.first_mut() {
                *r = extra.clone();
            }
        }
    }
    let child_extras: Vec<Items> = node
        .child_extra
        .iter()
        .zip(routed.iter())
        .map(|(a, b)| a.plus(b))
        .collect();

    let witness = match node.rule {
        SellRule::Tensor => {
            let skip = match principal {
                SellPrincipal::Linear(i) => i,
                _ => unreachable!("tensor principal is linear"),
            };
            let mut want = node.children[0].used.plus(&child_extras[0]);
            let mut indices = Vec::new();
            for (i, item) in seq.linear().iter().enumerate() {
                if i == skip {
                    continue;
                }
                if want.remove_one(item) {
                    indices.push(i);
                }
            }
            // anything not found among conclusion items must be a component
            // introduced under the premise itself
            let leftover_ok = want
                .iter()
                .all(|(tag, _)| tag.is_none());
            if !leftover_ok {
                return Err("split reconstruction failed".into());
            }
            Some(SellWitness::Split(indices))
        }
        _ => node.witness.clone(),
    };

    let premises =
        sell_rule_premises(sig, node.rule, seq, &principal, witness.as_ref(), fresh)
            .map_err(|e| format!("{} at reconstruction: {e}", node.rule.name()))?;
    if premises.len() != nchildren {
        return Err(format!(
            "premise count mismatch at {}: kernel {}, search {}",
            node.rule.name(),
            premises.len(),
            nchildren
        ));
    }
    let mut child_fresh = fresh.clone();
    match node.rule {
        SellRule::Forall => child_fresh.eigen += 1,
        SellRule::Inter => {
            if let PrinRef::Linear((_, SellFormula::InterQ(_, super::LabelRef::Const(ty), _))) =
                &node.prin
            {
                let name = fresh.fresh_label_name();
                child_fresh.ext.entries.push((name, ty.clone()));
            }
        }
        _ => {}
    }
    let mut children = Vec::with_capacity(nchildren);
    for ((child, premise), cextra) in
        node.children.iter().zip(premises.iter()).zip(child_extras.iter())
    {
        children.push(reconstruct(sig, child, premise, cextra, &child_fresh)?);
    }
    Ok(SellProofNode { rule: node.rule, principal, witness, premises: children })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sell::validate_signature;

    fn base_sig() -> SubexpSignature {
        validate_signature(
            ["w", "v", "inf", "copy"].map(String::from),
            [
                ("w".to_string(), "inf".to_string()),
                ("v".to_string(), "inf".to_string()),
                ("copy".to_string(), "inf".to_string()),
            ],
            ["inf", "copy"].map(String::from),
            [],
        )
        .unwrap()
    }

    fn run(sig: &SubexpSignature, formulas: Vec<SellFormula>, depth: usize) -> SellOutcome {
        let seq = SellSequent::start(formulas);
        let out = prove_sell(sig, &seq, &SearchBudget::default().with_decides(depth));
        if let SellSearchResult::Proved(p) = &out.result {
            check_sell_proof(sig, p, &expand_sequent(&seq)).unwrap();
        }
        out
    }

    #[test]
    fn par_of_duals_proves() {
        let sig = base_sig();
        let f = SellFormula::par(SellFormula::nlit("p", vec![]), SellFormula::lit("p", vec![]));
        assert!(run(&sig, vec![f], 4).result.is_proved());
    }

    #[test]
    fn tensor_par_interaction() {
        let sig = base_sig();
        // |- (p^ | q^), (p * q)
        let f1 = SellFormula::par(SellFormula::nlit("p", vec![]), SellFormula::nlit("q", vec![]));
        let f2 = SellFormula::tensor(SellFormula::lit("p", vec![]), SellFormula::lit("q", vec![]));
        assert!(run(&sig, vec![f1, f2], 6).result.is_proved());
        // but not (p * p)
        let f1 = SellFormula::par(SellFormula::nlit("p", vec![]), SellFormula::nlit("q", vec![]));
        let f2 = SellFormula::tensor(SellFormula::lit("p", vec![]), SellFormula::lit("p", vec![]));
        assert!(run(&sig, vec![f1, f2], 6).result.is_refuted());
    }

    #[test]
    fn storage_and_promotion() {
        let sig = base_sig();
        // |- ?w p^, !w p
        let f1 = SellFormula::quest("w", SellFormula::nlit("p", vec![]));
        let f2 = SellFormula::bang("w", SellFormula::lit("p", vec![]));
        assert!(run(&sig, vec![f1, f2], 6).result.is_proved());
        // promotion at v with only w-storage present fails
        let f1 = SellFormula::quest("w", SellFormula::nlit("p", vec![]));
        let f2 = SellFormula::bang("v", SellFormula::lit("p", vec![]));
        assert!(run(&sig, vec![f1, f2], 6).result.is_refuted());
    }

    #[test]
    fn confinement_local_inconsistency() {
        // |- ?w !w top, 0  — the one-sided form of "local inconsistency
        // does not leak": refuted with the space fully explored
        let sig = base_sig();
        let f1 = SellFormula::quest("w", SellFormula::bang("w", SellFormula::Top));
        let out = run(&sig, vec![f1, SellFormula::Zero], 8);
        assert!(out.result.is_refuted());
    }

    #[test]
    fn confinement_no_propagation() {
        // |- ?w !w top, !v ?v 0
        let sig = base_sig();
        let f1 = SellFormula::quest("w", SellFormula::bang("w", SellFormula::Top));
        let f2 = SellFormula::bang(
            "v",
            SellFormula::quest("v", SellFormula::Zero),
        );
        let out = run(&sig, vec![f1, f2], 8);
        assert!(out.result.is_refuted());
    }

    #[test]
    fn unbounded_copy_reuses() {
        let sig = base_sig();
        // |- ?copy(p^), p * p : the stored dual is usable twice
        let f1 = SellFormula::quest("copy", SellFormula::nlit("p", vec![]));
        let f2 = SellFormula::tensor(SellFormula::lit("p", vec![]), SellFormula::lit("p", vec![]));
        assert!(run(&sig, vec![f1, f2], 8).result.is_proved());
    }

    #[test]
    fn weakening_only_for_unbounded() {
        let sig = base_sig();
        // |- ?copy(p^), 1 : copy weakens away
        let f1 = SellFormula::quest("copy", SellFormula::nlit("p", vec![]));
        assert!(run(&sig, vec![f1, SellFormula::One], 4).result.is_proved());
        // |- ?w(p^), 1 : linear storage cannot be weakened
        let f1 = SellFormula::quest("w", SellFormula::nlit("p", vec![]));
        assert!(run(&sig, vec![f1, SellFormula::One], 4).result.is_refuted());
    }

    #[test]
    fn label_quantifiers_prove() {
        let sig = base_sig();
        // |- all l:w. some m:w. (?l p^ | !m p)  — instantiating m with the
        // fresh l closes the loop
        use crate::syntax::NameHint;
        use super::super::LabelRef;
        let body = SellFormula::par(
            SellFormula::SubQuest(LabelRef::Bound(1), Box::new(SellFormula::nlit("p", vec![]))),
            SellFormula::SubBang(LabelRef::Bound(0), Box::new(SellFormula::lit("p", vec![]))),
        );
        let f = SellFormula::InterQ(
            NameHint::new("l"),
            LabelRef::Const("w".into()),
            Box::new(SellFormula::UnionQ(
                NameHint::new("m"),
                LabelRef::Const("w".into()),
                Box::new(body),
            )),
        );
        assert!(run(&sig, vec![f], 8).result.is_proved());
    }
}
