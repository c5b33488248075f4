//! The naive reference search: unfocused, exhaustive enumeration of kernel
//! rule instances with explicit context splits. Slower than the focused
//! engine by design; it exists as an independent route for the agreement
//! suite, so it deliberately avoids the lazy resource threading.

use std::collections::HashMap;
use std::time::Instant;

use crate::domain::ConstraintDomain;
use crate::kernel::{
    self, eigen_floor, HyllSequent, Principal, ProofNode, RuleId, Witness,
};
use crate::syntax::Formula;

use super::witness::{term_candidates, world_candidates};
use super::{Outcome, SearchBudget, SearchOptions, SearchResult, SearchStats};

/// Subset enumeration for splits is exponential in the context size; refuse
/// beyond this rather than hang.
const MAX_SPLIT_CONTEXT: usize = 16;

#[derive(Clone, Copy)]
enum Fail {
    Forever,
    AtRemaining(usize),
}

struct Naive<'d> {
    domain: &'d dyn ConstraintDomain,
    options: &'d SearchOptions,
    world_bound: u64,
    deadline: Option<Instant>,
    memo: HashMap<HyllSequent, Fail>,
    stats: SearchStats,
    cutoff: bool,
}

pub fn prove_naive(
    domain: &dyn ConstraintDomain,
    seq: &HyllSequent,
    budget: &SearchBudget,
    options: &SearchOptions,
) -> Outcome {
    let mut n = Naive {
        domain,
        options,
        world_bound: budget.world_bound,
        deadline: budget.timeout.map(|t| Instant::now() + t),
        memo: HashMap::new(),
        stats: SearchStats::default(),
        cutoff: false,
    };
    let eigen = eigen_floor(seq);
    let result = match n.solve(seq, budget.max_decides, eigen) {
        Some(proof) => SearchResult::Proved(proof),
        None if !n.cutoff => SearchResult::Refuted,
        None => SearchResult::Exhausted,
    };
    Outcome { result, stats: n.stats }
}

impl<'d> Naive<'d> {
    fn solve(&mut self, seq: &HyllSequent, depth: usize, eigen: usize) -> Option<ProofNode> {
        if let Some(deadline) = self.deadline {
            if Instant::now() > deadline {
                self.cutoff = true;
                return None;
            }
        }
        if self.options.memo {
            match self.memo.get(seq) {
                Some(Fail::Forever) => {
                    self.stats.memo_hits += 1;
                    return None;
                }
                Some(Fail::AtRemaining(d)) if depth <= *d => {
                    self.stats.memo_hits += 1;
                    self.cutoff = true;
                    return None;
                }
                _ => {}
            }
        }
        if depth == 0 {
            self.cutoff = true;
            return None;
        }
        let cut_before = self.cutoff;
        self.cutoff = false;

        let result = self.try_rules(seq, depth, eigen);

        if result.is_none() && self.options.memo {
            let entry = if self.cutoff { Fail::AtRemaining(depth) } else { Fail::Forever };
            self.memo.insert(seq.clone(), entry);
        }
        self.cutoff |= cut_before;
        result
    }

    fn attempt(
        &mut self,
        seq: &HyllSequent,
        rule: RuleId,
        principal: Principal,
        witness: Option<Witness>,
        depth: usize,
        eigen: usize,
    ) -> Option<ProofNode> {
        self.stats.decides += 1;
        let premises =
            kernel::rule_premises(self.domain, rule, seq, principal, witness.as_ref(), eigen)
                .ok()?;
        let child_eigen = if matches!(
            rule,
            RuleId::ForallR | RuleId::ExistsL | RuleId::ForallWorldR | RuleId::ExistsWorldL
        ) {
            eigen + 1
        } else {
            eigen
        };
        let mut children = Vec::with_capacity(premises.len());
        for premise in &premises {
            children.push(self.solve(premise, depth - 1, child_eigen)?);
        }
        Some(ProofNode { rule, principal, witness, premises: children })
    }

    fn try_rules(&mut self, seq: &HyllSequent, depth: usize, eigen: usize) -> Option<ProofNode> {
        let hybrid = self.options.hybrid;

        // axioms first
        for i in 0..seq.delta().len() {
            if let p @ Some(_) = self.attempt(seq, RuleId::Init, Principal::Delta(i), None, depth, eigen) {
                return p;
            }
            if let p @ Some(_) = self.attempt(seq, RuleId::ZeroL, Principal::Delta(i), None, depth, eigen) {
                return p;
            }
        }
        if matches!(seq.goal().formula, Formula::One) {
            if let p @ Some(_) = self.attempt(seq, RuleId::OneR, Principal::Goal, None, depth, eigen) {
                return p;
            }
        }
        if matches!(seq.goal().formula, Formula::Top) {
            if let p @ Some(_) = self.attempt(seq, RuleId::TopR, Principal::Goal, None, depth, eigen) {
                return p;
            }
        }

        // right rules
        let goal = seq.goal().clone();
        match &goal.formula {
            Formula::Tensor(_, _) => {
                if let p @ Some(_) = self.try_splits(seq, RuleId::TensorR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::Limp(_, _) => {
                if let p @ Some(_) = self.attempt(seq, RuleId::LimpR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::With(_, _) => {
                if let p @ Some(_) = self.attempt(seq, RuleId::WithR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::Plus(_, _) => {
                for rule in [RuleId::PlusR1, RuleId::PlusR2] {
                    if let p @ Some(_) = self.attempt(seq, rule, Principal::Goal, None, depth, eigen) {
                        return p;
                    }
                }
            }
            Formula::Bang(_) => {
                if let p @ Some(_) = self.attempt(seq, RuleId::BangR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::ForallTerm(_, _) => {
                if let p @ Some(_) = self.attempt(seq, RuleId::ForallR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::ExistsTerm(_, body) => {
                let cands = term_candidates(
                    body,
                    &goal.world,
                    seq.delta().iter().cloned(),
                    &goal,
                    &Default::default(),
                );
                for t in cands {
                    if let p @ Some(_) = self.attempt(
                        seq,
                        RuleId::ExistsR,
                        Principal::Goal,
                        Some(Witness::Term(t)),
                        depth,
                        eigen,
                    ) {
                        return p;
                    }
                }
            }
            Formula::At(_, _) if hybrid => {
                if let p @ Some(_) = self.attempt(seq, RuleId::AtR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::Down(_, _) if hybrid => {
                if let p @ Some(_) = self.attempt(seq, RuleId::DownR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::ForallWorld(_, _) if hybrid => {
                if let p @ Some(_) = self.attempt(seq, RuleId::ForallWorldR, Principal::Goal, None, depth, eigen) {
                    return p;
                }
            }
            Formula::ExistsWorld(_, body) if hybrid => {
                let (cands, limited) = world_candidates(
                    self.domain,
                    body,
                    &goal.world,
                    seq.delta().iter().cloned(),
                    &goal,
                    self.world_bound,
                    self.options.world_cap.as_ref(),
                );
                for w in cands {
                    if let p @ Some(_) = self.attempt(
                        seq,
                        RuleId::ExistsWorldR,
                        Principal::Goal,
                        Some(Witness::World(w)),
                        depth,
                        eigen,
                    ) {
                        return p;
                    }
                }
                if limited {
                    self.cutoff = true;
                }
            }
            _ => {}
        }

        // left rules per judgment
        for i in 0..seq.delta().len() {
            let j = seq.delta()[i].clone();
            match &j.formula {
                Formula::One => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::OneL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::Tensor(_, _) => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::TensorL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::Limp(_, _) => {
                    if let p @ Some(_) = self.try_splits(seq, RuleId::LimpL, Principal::Delta(i), Some(i), depth, eigen) {
                        return p;
                    }
                }
                Formula::With(_, _) => {
                    for rule in [RuleId::WithL1, RuleId::WithL2] {
                        if let p @ Some(_) = self.attempt(seq, rule, Principal::Delta(i), None, depth, eigen) {
                            return p;
                        }
                    }
                }
                Formula::Plus(_, _) => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::PlusL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::Bang(_) => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::BangL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::ForallTerm(_, body) => {
                    let cands = term_candidates(
                        body,
                        &j.world,
                        seq.delta().iter().cloned(),
                        seq.goal(),
                        &Default::default(),
                    );
                    for t in cands {
                        if let p @ Some(_) = self.attempt(
                            seq,
                            RuleId::ForallL,
                            Principal::Delta(i),
                            Some(Witness::Term(t)),
                            depth,
                            eigen,
                        ) {
                            return p;
                        }
                    }
                }
                Formula::ExistsTerm(_, _) => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::ExistsL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::At(_, _) if hybrid => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::AtL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::Down(_, _) if hybrid => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::DownL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                Formula::ForallWorld(_, body) if hybrid => {
                    let (cands, limited) = world_candidates(
                        self.domain,
                        body,
                        &j.world,
                        seq.delta().iter().cloned(),
                        seq.goal(),
                        self.world_bound,
                        self.options.world_cap.as_ref(),
                    );
                    for w in cands {
                        if let p @ Some(_) = self.attempt(
                            seq,
                            RuleId::ForallWorldL,
                            Principal::Delta(i),
                            Some(Witness::World(w)),
                            depth,
                            eigen,
                        ) {
                            return p;
                        }
                    }
                    if limited {
                        self.cutoff = true;
                    }
                }
                Formula::ExistsWorld(_, _) if hybrid => {
                    if let p @ Some(_) = self.attempt(seq, RuleId::ExistsWorldL, Principal::Delta(i), None, depth, eigen) {
                        return p;
                    }
                }
                _ => {}
            }
        }

        // contraction
        for i in 0..seq.gamma_len() {
            if let p @ Some(_) = self.attempt(seq, RuleId::Copy, Principal::Gamma(i), None, depth, eigen) {
                return p;
            }
        }
        None
    }

    /// Enumerate every split of the linear context (minus the principal for
    /// limp_l) for a multiplicative rule.
    fn try_splits(
        &mut self,
        seq: &HyllSequent,
        rule: RuleId,
        principal: Principal,
        exclude: Option<usize>,
        depth: usize,
        eigen: usize,
    ) -> Option<ProofNode> {
        let mut positions: Vec<usize> = (0..seq.delta().len()).collect();
        if let Some(i) = exclude {
            positions.retain(|&p| p != i);
        }
        if positions.len() > MAX_SPLIT_CONTEXT {
            self.cutoff = true;
            return None;
        }
        for mask in 0..(1u32 << positions.len()) {
            let chosen: Vec<usize> = positions
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &p)| p)
                .collect();
            if let p @ Some(_) =
                self.attempt(seq, rule, principal, Some(Witness::Split(chosen)), depth, eigen)
            {
                return p;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;
    use crate::prover::{prove, Mode, SearchBudget, SearchOptions};
    use crate::syntax::{parse_formula, Judgment, SymbolTable, WorldExpr};

    fn run(gamma: &[&str], delta: &[&str], goal: &str) -> super::super::Outcome {
        let table = SymbolTable::new();
        let parse = |s: &str| {
            Judgment::new(parse_formula(s, &table, &TEMPORAL).unwrap(), WorldExpr::identity())
        };
        let seq = HyllSequent::new(
            gamma.iter().map(|s| parse(s)),
            delta.iter().map(|s| parse(s)),
            parse(goal),
        );
        prove(&TEMPORAL, &seq, &SearchBudget::default().with_decides(14), Mode::Naive, &SearchOptions::default())
    }

    #[test]
    fn naive_basics() {
        assert!(run(&[], &[], "1").result.is_proved());
        assert!(run(&[], &["p"], "p").result.is_proved());
        assert!(run(&[], &["p", "q"], "p * q").result.is_proved());
        assert!(run(&[], &["p"], "q").result.is_refuted());
        assert!(run(&[], &[], "0").result.is_refuted());
        assert!(run(&["p -o q"], &["p"], "q").result.is_proved());
        assert!(run(&[], &["p", "q"], "top").result.is_proved());
        assert!(run(&[], &["p"], "1 + p").result.is_proved());
    }

    #[test]
    fn naive_hybrid() {
        let table = SymbolTable::new();
        let parse = |s: &str, w: u64| {
            Judgment::new(parse_formula(s, &table, &TEMPORAL).unwrap(), WorldExpr::nat(w))
        };
        let seq = HyllSequent::new(
            [],
            [parse("p at 3", 0)],
            parse("p", 3),
        );
        let out = prove(
            &TEMPORAL,
            &seq,
            &SearchBudget::default(),
            Mode::Naive,
            &SearchOptions::default(),
        );
        assert!(out.result.is_proved());
    }
}
