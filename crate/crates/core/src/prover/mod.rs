//! Bounded proof search over HyLL sequents.
//!
//! Two engines share the witness generators and the kernel: the focused
//! engine alternates inversion and focus phases with lazy resource
//! threading, and the naive engine enumerates kernel rule instances
//! directly (including explicit context splits). Both emit kernel-checkable
//! proof objects; the naive engine exists as an independent reference for
//! agreement testing.

pub mod focused;
pub mod naive;
pub mod resources;
pub mod witness;

use std::time::Duration;

use crate::domain::ConstraintDomain;
use crate::kernel::{HyllSequent, ProofNode};
use crate::syntax::{expand_modal, Formula, Judgment, Polarity, WorldExpr};

/// Search limits. `max_decides` bounds focus selections along a branch
/// (rule applications per branch for the naive engine); `world_bound` caps
/// constant enumeration when world equations have no pattern-driven
/// solution.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub max_decides: usize,
    pub world_bound: u64,
    pub timeout: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_decides: 12, world_bound: 16, timeout: None }
    }
}

impl SearchBudget {
    pub fn with_decides(mut self, d: usize) -> Self {
        self.max_decides = d;
        self
    }
}

/// Knobs that change the shape of the search without changing the kernel.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Polarity assigned to atoms by the focusing discipline.
    pub atom_polarity: Polarity,
    /// When false, the hybrid rules (at/down/world quantifiers) are
    /// disabled: plain intuitionistic linear logic search.
    pub hybrid: bool,
    /// Semantic upper bound for world witnesses. When set, filtering
    /// candidates by reachability below the cap is treated as complete
    /// (sound for theories whose rules only move worlds forward).
    pub world_cap: Option<WorldExpr>,
    /// Memoize failed stable sequents.
    pub memo: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            atom_polarity: Polarity::Negative,
            hybrid: true,
            world_cap: None,
            memo: true,
        }
    }
}

impl SearchOptions {
    pub fn with_atom_polarity(mut self, p: Polarity) -> Self {
        self.atom_polarity = p;
        self
    }

    pub fn without_hybrid(mut self) -> Self {
        self.hybrid = false;
        self
    }

    pub fn with_world_cap(mut self, cap: WorldExpr) -> Self {
        self.world_cap = Some(cap);
        self
    }

    pub fn without_memo(mut self) -> Self {
        self.memo = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Focused,
    Naive,
}

/// Every search ends in one of three ways. `Refuted` is only reported when
/// the space was fully explored: no branch was cut off by the decide budget,
/// a timeout, or bounded world enumeration.
#[derive(Clone, Debug)]
pub enum SearchResult {
    Proved(ProofNode),
    Refuted,
    Exhausted,
}

impl SearchResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, SearchResult::Proved(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, SearchResult::Refuted)
    }

    pub fn proof(&self) -> Option<&ProofNode> {
        match self {
            SearchResult::Proved(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchResult::Proved(_) => "proved",
            SearchResult::Refuted => "refuted",
            SearchResult::Exhausted => "exhausted",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchStats {
    pub decides: u64,
    pub memo_hits: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: SearchResult,
    pub stats: SearchStats,
}

fn expand_judgment(j: &Judgment) -> Judgment {
    Judgment::new(expand_modal(&j.formula), j.world.clone())
}

/// Expand surface modal sugar throughout a sequent; the kernel and the
/// search work on hybrid primitives only.
pub fn expand_sequent(seq: &HyllSequent) -> HyllSequent {
    HyllSequent::new(
        seq.gamma().map(expand_judgment),
        seq.delta().iter().map(expand_judgment),
        expand_judgment(seq.goal()),
    )
}

/// Bounded proof search; any proof returned has passed the kernel checker.
pub fn prove(
    domain: &dyn ConstraintDomain,
    seq: &HyllSequent,
    budget: &SearchBudget,
    mode: Mode,
    options: &SearchOptions,
) -> Outcome {
    let seq = expand_sequent(seq);
    let start = std::time::Instant::now();
    let mut outcome = match mode {
        Mode::Focused => focused::prove_focused(domain, &seq, budget, options),
        Mode::Naive => naive::prove_naive(domain, &seq, budget, options),
    };
    outcome.stats.elapsed = start.elapsed();
    if let SearchResult::Proved(p) = &outcome.result {
        debug_assert!(
            crate::kernel::check_proof(domain, p, &seq).is_ok(),
            "search emitted a proof the kernel rejects"
        );
    }
    outcome
}

/// One legal focus selection at a stable sequent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FocusChoice {
    Delta(usize),
    Gamma(usize),
    Goal,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("decide_candidates requires a stable sequent (negative phase complete)")]
pub struct NotStable;

pub(crate) fn invertible_in_delta(f: &Formula, hybrid: bool) -> bool {
    match f {
        Formula::Tensor(_, _)
        | Formula::One
        | Formula::Plus(_, _)
        | Formula::Zero
        | Formula::ExistsTerm(_, _)
        | Formula::Bang(_) => true,
        Formula::At(_, _) | Formula::Down(_, _) | Formula::ExistsWorld(_, _) => hybrid,
        _ => false,
    }
}

pub(crate) fn goal_invertible(f: &Formula, hybrid: bool) -> bool {
    match f {
        Formula::Limp(_, _) | Formula::With(_, _) | Formula::Top | Formula::ForallTerm(_, _) => {
            true
        }
        Formula::At(_, _) | Formula::Down(_, _) | Formula::ForallWorld(_, _) => hybrid,
        _ => false,
    }
}

/// All positions legal to focus on in a stable sequent, in the engine's
/// deterministic order: linear-context foci first, then unbounded-context
/// copies, then the goal. Errs when the sequent still has invertible work.
pub fn decide_candidates(
    seq: &HyllSequent,
    options: &SearchOptions,
) -> Result<Vec<FocusChoice>, NotStable> {
    let hybrid = options.hybrid;
    if goal_invertible(&seq.goal().formula, hybrid)
        || seq.delta().iter().any(|j| invertible_in_delta(&j.formula, hybrid))
    {
        return Err(NotStable);
    }
    let mut out = Vec::new();
    for (i, j) in seq.delta().iter().enumerate() {
        let candidate = match &j.formula {
            Formula::Atom(_, _) => {
                options.atom_polarity == Polarity::Negative && j == seq.goal()
            }
            f => {
                crate::syntax::polarity_of(f, options.atom_polarity) == Polarity::Negative
                    && (hybrid || !matches!(f, Formula::ForallWorld(_, _)))
            }
        };
        if candidate {
            out.push(FocusChoice::Delta(i));
        }
    }
    for i in 0..seq.gamma_len() {
        out.push(FocusChoice::Gamma(i));
    }
    let goal_focusable = match &seq.goal().formula {
        Formula::Atom(_, _) => options.atom_polarity == Polarity::Positive,
        f => crate::syntax::polarity_of(f, options.atom_polarity) == Polarity::Positive,
    };
    if goal_focusable {
        out.push(FocusChoice::Goal);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;
    use crate::syntax::{parse_formula, SymbolTable};

    fn seq(gamma: &[&str], delta: &[&str], goal: &str) -> HyllSequent {
        let table = SymbolTable::new();
        let parse = |s: &str| {
            Judgment::new(parse_formula(s, &table, &TEMPORAL).unwrap(), WorldExpr::identity())
        };
        HyllSequent::new(
            gamma.iter().map(|s| parse(s)),
            delta.iter().map(|s| parse(s)),
            parse(goal),
        )
    }

    #[test]
    fn candidate_enumeration() {
        // stable sequent with a rule in gamma and a non-matching atom in
        // delta: the atom is not focusable, the rule copy and the positive
        // goal are
        let s = seq(&["p -o q"], &["r"], "p * q");
        let cands = decide_candidates(&s, &SearchOptions::default()).unwrap();
        assert_eq!(cands, vec![FocusChoice::Gamma(0), FocusChoice::Goal]);
    }

    #[test]
    fn non_stable_rejected() {
        let s = seq(&[], &["p * q"], "r");
        assert!(decide_candidates(&s, &SearchOptions::default()).is_err());
    }

    #[test]
    fn fail_fast_on_empty_candidates() {
        // negative atomic goal, empty contexts: nothing to focus on
        let s = seq(&[], &[], "p");
        let cands = decide_candidates(&s, &SearchOptions::default()).unwrap();
        assert!(cands.is_empty());
        let out = prove(
            &TEMPORAL,
            &s,
            &SearchBudget::default(),
            Mode::Focused,
            &SearchOptions::default(),
        );
        assert!(out.result.is_refuted());
    }
}
