//! The trusted HyLL kernel: dyadic sequents, one premise function per
//! inference rule, and a checker for explicit proof trees.
//!
//! The kernel is cut-free and `init` is restricted to atoms; identity at
//! compound formulas is admissible and exercised by search, not assumed.
//! Proof objects carry explicit resource splits and witnesses so checking is
//! deterministic and linear in the proof size. Eigenvariables are named
//! `_e0, _e1, ...` by a per-branch counter, so checking is independent of any
//! name choice made during search.

pub mod textio;

use std::collections::BTreeSet;

use crate::domain::ConstraintDomain;
use crate::syntax::{
    open_term, open_world, Formula, Judgment, Term, WorldConst, WorldExpr, WorldVar,
};

/// Identifiers for the kernel inference rules. There is no cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleId {
    Init,
    OneR,
    OneL,
    TensorR,
    TensorL,
    LimpR,
    LimpL,
    WithR,
    WithL1,
    WithL2,
    TopR,
    PlusR1,
    PlusR2,
    PlusL,
    ZeroL,
    BangR,
    BangL,
    Copy,
    ForallR,
    ForallL,
    ExistsR,
    ExistsL,
    AtR,
    AtL,
    DownR,
    DownL,
    ForallWorldR,
    ForallWorldL,
    ExistsWorldR,
    ExistsWorldL,
}

impl RuleId {
    pub fn name(self) -> &'static str {
        match self {
            RuleId::Init => "init",
            RuleId::OneR => "one_r",
            RuleId::OneL => "one_l",
            RuleId::TensorR => "tensor_r",
            RuleId::TensorL => "tensor_l",
            RuleId::LimpR => "limp_r",
            RuleId::LimpL => "limp_l",
            RuleId::WithR => "with_r",
            RuleId::WithL1 => "with_l1",
            RuleId::WithL2 => "with_l2",
            RuleId::TopR => "top_r",
            RuleId::PlusR1 => "plus_r1",
            RuleId::PlusR2 => "plus_r2",
            RuleId::PlusL => "plus_l",
            RuleId::ZeroL => "zero_l",
            RuleId::BangR => "bang_r",
            RuleId::BangL => "bang_l",
            RuleId::Copy => "copy",
            RuleId::ForallR => "forall_r",
            RuleId::ForallL => "forall_l",
            RuleId::ExistsR => "exists_r",
            RuleId::ExistsL => "exists_l",
            RuleId::AtR => "at_r",
            RuleId::AtL => "at_l",
            RuleId::DownR => "down_r",
            RuleId::DownL => "down_l",
            RuleId::ForallWorldR => "forall_world_r",
            RuleId::ForallWorldL => "forall_world_l",
            RuleId::ExistsWorldR => "exists_world_r",
            RuleId::ExistsWorldL => "exists_world_l",
        }
    }

    pub fn from_name(name: &str) -> Option<RuleId> {
        use RuleId::*;
        Some(match name {
            "init" => Init,
            "one_r" => OneR,
            "one_l" => OneL,
            "tensor_r" => TensorR,
            "tensor_l" => TensorL,
            "limp_r" => LimpR,
            "limp_l" => LimpL,
            "with_r" => WithR,
            "with_l1" => WithL1,
            "with_l2" => WithL2,
            "top_r" => TopR,
            "plus_r1" => PlusR1,
            "plus_r2" => PlusR2,
            "plus_l" => PlusL,
            "zero_l" => ZeroL,
            "bang_r" => BangR,
            "bang_l" => BangL,
            "copy" => Copy,
            "forall_r" => ForallR,
            "forall_l" => ForallL,
            "exists_r" => ExistsR,
            "exists_l" => ExistsL,
            "at_r" => AtR,
            "at_l" => AtL,
            "down_r" => DownR,
            "down_l" => DownL,
            "forall_world_r" => ForallWorldR,
            "forall_world_l" => ForallWorldL,
            "exists_world_r" => ExistsWorldR,
            "exists_world_l" => ExistsWorldL,
            _ => return None,
        })
    }

    /// Axiom rules close a branch with zero premises.
    pub fn is_axiom(self) -> bool {
        matches!(self, RuleId::Init | RuleId::OneR | RuleId::TopR | RuleId::ZeroL)
    }
}

/// Which judgment a rule instance acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Principal {
    Goal,
    /// Index into the sorted linear context.
    Delta(usize),
    /// Index into the unbounded context in sorted order.
    Gamma(usize),
}

/// Extra data a rule instance needs: quantifier witnesses and resource
/// splits. Splits list the sorted-context indices routed to the first
/// premise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Term(Term),
    World(WorldExpr),
    Split(Vec<usize>),
}

/// A dyadic HyLL sequent `Gamma ; Delta |- goal`. `Gamma` has set semantics,
/// `Delta` is a multiset kept sorted so that equality is multiset equality
/// and positions are stable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyllSequent {
    gamma: BTreeSet<Judgment>,
    delta: Vec<Judgment>,
    goal: Judgment,
}

impl HyllSequent {
    pub fn new(
        gamma: impl IntoIterator<Item = Judgment>,
        delta: impl IntoIterator<Item = Judgment>,
        goal: Judgment,
    ) -> Self {
        let mut delta: Vec<Judgment> = delta.into_iter().collect();
        delta.sort();
        HyllSequent { gamma: gamma.into_iter().collect(), delta, goal }
    }

    pub fn gamma(&self) -> impl Iterator<Item = &Judgment> {
        self.gamma.iter()
    }

    pub fn gamma_at(&self, i: usize) -> Option<&Judgment> {
        self.gamma.iter().nth(i)
    }

    pub fn delta(&self) -> &[Judgment] {
        &self.delta
    }

    pub fn goal(&self) -> &Judgment {
        &self.goal
    }

    pub fn gamma_len(&self) -> usize {
        self.gamma.len()
    }

    fn with_goal(&self, goal: Judgment) -> Self {
        HyllSequent { gamma: self.gamma.clone(), delta: self.delta.clone(), goal }
    }

    fn replace_delta(&self, i: usize, with: impl IntoIterator<Item = Judgment>) -> Self {
        let mut delta = self.delta.clone();
        delta.remove(i);
        delta.extend(with);
        delta.sort();
        HyllSequent { gamma: self.gamma.clone(), delta, goal: self.goal.clone() }
    }

    fn push_delta(&self, j: Judgment) -> Self {
        let mut delta = self.delta.clone();
        delta.push(j);
        delta.sort();
        HyllSequent { gamma: self.gamma.clone(), delta, goal: self.goal.clone() }
    }
}

/// Equality up to alpha-equivalence, Gamma-set semantics, Delta-multiset
/// semantics and canonical worlds — all of which the representation already
/// normalizes, so this is structural equality.
pub fn sequent_equal(a: &HyllSequent, b: &HyllSequent) -> bool {
    a == b
}

/// An explicit proof tree. Premise sequents are never stored; the checker
/// recomputes them from the rule instance, so a valid tree cannot lie about
/// its contexts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub rule: RuleId,
    pub principal: Principal,
    pub witness: Option<Witness>,
    pub premises: Vec<ProofNode>,
}

impl ProofNode {
    pub fn leaf(rule: RuleId, principal: Principal) -> Self {
        ProofNode { rule, principal, witness: None, premises: Vec::new() }
    }

    pub fn node(
        rule: RuleId,
        principal: Principal,
        witness: Option<Witness>,
        premises: Vec<ProofNode>,
    ) -> Self {
        ProofNode { rule, principal, witness, premises }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofNode::size).sum::<usize>()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ProofNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.premises.iter());
            Some(node)
        })
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule {rule} does not apply to the designated judgment")]
    ShapeMismatch { rule: &'static str },
    #[error("principal position is out of range")]
    PrincipalOutOfRange,
    #[error("rule {rule} needs a {need} witness")]
    MissingWitness { rule: &'static str, need: &'static str },
    #[error("split index {index} is out of range or repeated")]
    BadSplit { index: usize },
    #[error("split may not contain the principal judgment")]
    SplitContainsPrincipal,
    #[error("promotion requires an empty linear context")]
    NonEmptyDeltaForBang,
    #[error("init requires an atomic goal matched by exactly the one linear judgment")]
    InitMismatch,
    #[error("witness mentions eigenvariable `{name}` that is not yet in scope")]
    EigenNotFresh { name: String },
}

/// A failed check: the path (premise indices from the root) of the first
/// offending node and the reason.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid proof at {path:?}: {reason}")]
pub struct ProofError {
    pub path: Vec<usize>,
    pub reason: ProofErrorReason,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProofErrorReason {
    #[error("{0}")]
    Rule(#[from] RuleError),
    #[error("non-axiom rule {0} has no premises")]
    NonAxiomLeaf(&'static str),
    #[error("expected {expected} premises, found {found}")]
    PremiseCount { expected: usize, found: usize },
}

fn combine<'d>(
    d: &'d dyn ConstraintDomain,
) -> impl Fn(&WorldConst, &WorldConst) -> WorldConst + 'd {
    move |a, b| d.combine(a, b)
}

fn eigen_name(counter: usize) -> String {
    format!("_e{counter}")
}

/// Largest `_eN` index mentioned anywhere in the sequent, plus one. The
/// checker and the provers start their counters here so freshly introduced
/// eigenvariables can never collide with existing names.
pub fn eigen_floor(s: &HyllSequent) -> usize {
    let mut max: Option<usize> = None;
    let mut see = |name: &str| {
        if let Some(rest) = name.strip_prefix("_e") {
            if let Ok(n) = rest.parse::<usize>() {
                max = Some(max.map_or(n, |m| m.max(n)));
            }
        }
    };
    for j in s.gamma.iter().chain(s.delta.iter()).chain(std::iter::once(&s.goal)) {
        let mut f = j.formula.clone();
        f.map_terms(0, &mut |t, _| scan_term_names(t, &mut see));
        f.map_worlds(0, &mut |w, _| scan_world_names(w, &mut see));
        scan_world_names(&j.world, &mut see);
    }
    max.map_or(0, |m| m + 1)
}

fn scan_term_names(t: &Term, see: &mut dyn FnMut(&str)) {
    match t {
        Term::Free(n) => see(n),
        Term::App(_, args) => {
            for a in args {
                scan_term_names(a, see);
            }
        }
        _ => {}
    }
}

fn scan_world_names(w: &WorldExpr, see: &mut dyn FnMut(&str)) {
    for v in &w.vars {
        if let WorldVar::Free(n) = v {
            see(n);
        }
    }
}

fn witness_eigens_in_scope(w: &Witness, counter: usize) -> Result<(), RuleError> {
    let mut bad: Option<String> = None;
    let mut see = |name: &str| {
        if let Some(rest) = name.strip_prefix("_e") {
            if let Ok(n) = rest.parse::<usize>() {
                if n >= counter && bad.is_none() {
                    bad = Some(name.to_string());
                }
            }
        }
    };
    match w {
        Witness::Term(t) => scan_term_names(t, &mut see),
        Witness::World(e) => scan_world_names(e, &mut see),
        Witness::Split(_) => {}
    }
    match bad {
        Some(name) => Err(RuleError::EigenNotFresh { name }),
        None => Ok(()),
    }
}

struct RuleIn<'a> {
    seq: &'a HyllSequent,
    principal: Principal,
    witness: Option<&'a Witness>,
    /// Per-branch eigenvariable counter.
    counter: usize,
}

/// The premises of one rule instance, in order. `counter` is the per-branch
/// eigenvariable counter; rules that introduce an eigenvariable consume one
/// index.
pub fn rule_premises(
    domain: &dyn ConstraintDomain,
    rule: RuleId,
    seq: &HyllSequent,
    principal: Principal,
    witness: Option<&Witness>,
    counter: usize,
) -> Result<Vec<HyllSequent>, RuleError> {
    let input = RuleIn { seq, principal, witness, counter };
    match rule {
        RuleId::Init => init(&input),
        RuleId::OneR => one_r(&input),
        RuleId::TopR => top_r(&input),
        RuleId::ZeroL => zero_l(&input),
        RuleId::TensorR => tensor_r(&input),
        RuleId::TensorL => tensor_l(&input),
        RuleId::LimpR => limp_r(&input),
        RuleId::LimpL => limp_l(&input),
        RuleId::WithR => with_r(&input),
        RuleId::WithL1 => with_l(&input, true),
        RuleId::WithL2 => with_l(&input, false),
        RuleId::PlusR1 => plus_r(&input, true),
        RuleId::PlusR2 => plus_r(&input, false),
        RuleId::PlusL => plus_l(&input),
        RuleId::OneL => one_l(&input),
        RuleId::BangR => bang_r(&input),
        RuleId::BangL => bang_l(&input),
        RuleId::Copy => copy(&input),
        RuleId::ForallR => forall_r(&input),
        RuleId::ForallL => forall_l(&input),
        RuleId::ExistsR => exists_r(&input),
        RuleId::ExistsL => exists_l(&input),
        RuleId::AtR => at_r(&input),
        RuleId::AtL => at_l(&input),
        RuleId::DownR => down_r(domain, &input),
        RuleId::DownL => down_l(domain, &input),
        RuleId::ForallWorldR => forall_world_r(&input),
        RuleId::ForallWorldL => forall_world_l(domain, &input),
        RuleId::ExistsWorldR => exists_world_r(domain, &input),
        RuleId::ExistsWorldL => exists_world_l(&input),
    }
}

fn shape(rule: RuleId) -> RuleError {
    RuleError::ShapeMismatch { rule: rule.name() }
}

fn delta_principal<'a>(input: &'a RuleIn, rule: RuleId) -> Result<(usize, &'a Judgment), RuleError> {
    match input.principal {
        Principal::Delta(i) => {
            input.seq.delta.get(i).map(|j| (i, j)).ok_or(RuleError::PrincipalOutOfRange)
        }
        _ => Err(shape(rule)),
    }
}

fn goal_principal<'a>(input: &'a RuleIn, rule: RuleId) -> Result<&'a Judgment, RuleError> {
    match input.principal {
        Principal::Goal => Ok(&input.seq.goal),
        _ => Err(shape(rule)),
    }
}

fn term_witness<'a>(input: &'a RuleIn, rule: RuleId) -> Result<&'a Term, RuleError> {
    match input.witness {
        Some(w @ Witness::Term(t)) => {
            witness_eigens_in_scope(w, input.counter)?;
            Ok(t)
        }
        _ => Err(RuleError::MissingWitness { rule: rule.name(), need: "term" }),
    }
}

fn world_witness<'a>(input: &'a RuleIn, rule: RuleId) -> Result<&'a WorldExpr, RuleError> {
    match input.witness {
        Some(w @ Witness::World(e)) => {
            witness_eigens_in_scope(w, input.counter)?;
            Ok(e)
        }
        _ => Err(RuleError::MissingWitness { rule: rule.name(), need: "world" }),
    }
}

/// Split the linear context (minus the excluded index, if any) according to
/// the witness indices; returns (chosen, rest).
fn split_delta(
    input: &RuleIn,
    rule: RuleId,
    exclude: Option<usize>,
) -> Result<(Vec<Judgment>, Vec<Judgment>), RuleError> {
    let indices = match input.witness {
        Some(Witness::Split(ix)) => ix,
        _ => return Err(RuleError::MissingWitness { rule: rule.name(), need: "split" }),
    };
    let delta = &input.seq.delta;
    let mut chosen_mask = vec![false; delta.len()];
    for &i in indices {
        if i >= delta.len() || chosen_mask[i] {
            return Err(RuleError::BadSplit { index: i });
        }
        if Some(i) == exclude {
            return Err(RuleError::SplitContainsPrincipal);
        }
        chosen_mask[i] = true;
    }
    let mut chosen = Vec::new();
    let mut rest = Vec::new();
    for (i, j) in delta.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        if chosen_mask[i] {
            chosen.push(j.clone());
        } else {
            rest.push(j.clone());
        }
    }
    Ok((chosen, rest))
}

// ---- axioms ----

fn init(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (_, j) = delta_principal(input, RuleId::Init)?;
    let atomic = matches!(j.formula, Formula::Atom(_, _));
    if !atomic || input.seq.delta.len() != 1 || *j != input.seq.goal {
        return Err(RuleError::InitMismatch);
    }
    Ok(Vec::new())
}

fn one_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::OneR)?;
    if !matches!(goal.formula, Formula::One) {
        return Err(shape(RuleId::OneR));
    }
    if !input.seq.delta.is_empty() {
        return Err(RuleError::NonEmptyDeltaForBang);
    }
    Ok(Vec::new())
}

fn top_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::TopR)?;
    if !matches!(goal.formula, Formula::Top) {
        return Err(shape(RuleId::TopR));
    }
    Ok(Vec::new())
}

fn zero_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (_, j) = delta_principal(input, RuleId::ZeroL)?;
    if !matches!(j.formula, Formula::Zero) {
        return Err(shape(RuleId::ZeroL));
    }
    Ok(Vec::new())
}

// ---- multiplicatives ----

fn tensor_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::TensorR)?.clone();
    let (a, b) = match &goal.formula {
        Formula::Tensor(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
        _ => return Err(shape(RuleId::TensorR)),
    };
    let (left, right) = split_delta(input, RuleId::TensorR, None)?;
    let gamma: Vec<Judgment> = input.seq.gamma.iter().cloned().collect();
    Ok(vec![
        HyllSequent::new(gamma.clone(), left, Judgment::new(a, goal.world.clone())),
        HyllSequent::new(gamma, right, Judgment::new(b, goal.world)),
    ])
}

fn limp_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::LimpR)?.clone();
    let (a, b) = match &goal.formula {
        Formula::Limp(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
        _ => return Err(shape(RuleId::LimpR)),
    };
    let premise = input
        .seq
        .push_delta(Judgment::new(a, goal.world.clone()))
        .with_goal(Judgment::new(b, goal.world));
    Ok(vec![premise])
}

fn one_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::OneL)?;
    if !matches!(j.formula, Formula::One) {
        return Err(shape(RuleId::OneL));
    }
    Ok(vec![input.seq.replace_delta(i, [])])
}

fn tensor_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::TensorL)?;
    let (a, b, w) = match &j.formula {
        Formula::Tensor(a, b) => (a.as_ref().clone(), b.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::TensorL)),
    };
    Ok(vec![input
        .seq
        .replace_delta(i, [Judgment::new(a, w.clone()), Judgment::new(b, w)])])
}

fn limp_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::LimpL)?;
    let (a, b, v) = match &j.formula {
        Formula::Limp(a, b) => (a.as_ref().clone(), b.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::LimpL)),
    };
    let (arg, mut rest) = split_delta(input, RuleId::LimpL, Some(i))?;
    let gamma: Vec<Judgment> = input.seq.gamma.iter().cloned().collect();
    let premise1 = HyllSequent::new(gamma.clone(), arg, Judgment::new(a, v.clone()));
    rest.push(Judgment::new(b, v));
    let premise2 = HyllSequent::new(gamma, rest, input.seq.goal.clone());
    Ok(vec![premise1, premise2])
}

// ---- additives ----

fn with_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::WithR)?.clone();
    let (a, b) = match &goal.formula {
        Formula::With(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
        _ => return Err(shape(RuleId::WithR)),
    };
    Ok(vec![
        input.seq.with_goal(Judgment::new(a, goal.world.clone())),
        input.seq.with_goal(Judgment::new(b, goal.world)),
    ])
}

fn with_l(input: &RuleIn, first: bool) -> Result<Vec<HyllSequent>, RuleError> {
    let rule = if first { RuleId::WithL1 } else { RuleId::WithL2 };
    let (i, j) = delta_principal(input, rule)?;
    let (a, b, w) = match &j.formula {
        Formula::With(a, b) => (a.as_ref().clone(), b.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(rule)),
    };
    let kept = if first { a } else { b };
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(kept, w)])])
}

fn plus_r(input: &RuleIn, first: bool) -> Result<Vec<HyllSequent>, RuleError> {
    let rule = if first { RuleId::PlusR1 } else { RuleId::PlusR2 };
    let goal = goal_principal(input, rule)?.clone();
    let (a, b) = match &goal.formula {
        Formula::Plus(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
        _ => return Err(shape(rule)),
    };
    let kept = if first { a } else { b };
    Ok(vec![input.seq.with_goal(Judgment::new(kept, goal.world))])
}

fn plus_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::PlusL)?;
    let (a, b, w) = match &j.formula {
        Formula::Plus(a, b) => (a.as_ref().clone(), b.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::PlusL)),
    };
    Ok(vec![
        input.seq.replace_delta(i, [Judgment::new(a, w.clone())]),
        input.seq.replace_delta(i, [Judgment::new(b, w)]),
    ])
}

// ---- exponentials ----

fn bang_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::BangR)?.clone();
    let a = match &goal.formula {
        Formula::Bang(a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::BangR)),
    };
    if !input.seq.delta.is_empty() {
        return Err(RuleError::NonEmptyDeltaForBang);
    }
    Ok(vec![input.seq.with_goal(Judgment::new(a, goal.world))])
}

fn bang_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::BangL)?;
    let (a, w) = match &j.formula {
        Formula::Bang(a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::BangL)),
    };
    let mut premise = input.seq.replace_delta(i, []);
    premise.gamma.insert(Judgment::new(a, w));
    Ok(vec![premise])
}

/// Contraction for the unbounded context: move a copy into the linear zone,
/// keeping the original.
fn copy(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let i = match input.principal {
        Principal::Gamma(i) => i,
        _ => return Err(shape(RuleId::Copy)),
    };
    let j = input.seq.gamma_at(i).ok_or(RuleError::PrincipalOutOfRange)?.clone();
    Ok(vec![input.seq.push_delta(j)])
}

// ---- term quantifiers ----

fn forall_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::ForallR)?.clone();
    let body = match &goal.formula {
        Formula::ForallTerm(_, a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::ForallR)),
    };
    let fresh = Term::Free(eigen_name(input.counter));
    Ok(vec![input.seq.with_goal(Judgment::new(open_term(&body, &fresh), goal.world))])
}

fn exists_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::ExistsR)?.clone();
    let body = match &goal.formula {
        Formula::ExistsTerm(_, a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::ExistsR)),
    };
    let t = term_witness(input, RuleId::ExistsR)?;
    Ok(vec![input.seq.with_goal(Judgment::new(open_term(&body, t), goal.world))])
}

fn forall_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::ForallL)?;
    let (body, w) = match &j.formula {
        Formula::ForallTerm(_, a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::ForallL)),
    };
    let t = term_witness(input, RuleId::ForallL)?.clone();
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(open_term(&body, &t), w)])])
}

fn exists_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::ExistsL)?;
    let (body, w) = match &j.formula {
        Formula::ExistsTerm(_, a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::ExistsL)),
    };
    let fresh = Term::Free(eigen_name(input.counter));
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(open_term(&body, &fresh), w)])])
}

// ---- hybrid rules ----

fn at_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::AtR)?.clone();
    let (a, u) = match &goal.formula {
        Formula::At(a, u) => (a.as_ref().clone(), u.clone()),
        _ => return Err(shape(RuleId::AtR)),
    };
    // the conclusion world is discarded: the premise lives at u
    Ok(vec![input.seq.with_goal(Judgment::new(a, u))])
}

fn at_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::AtL)?;
    let (a, u) = match &j.formula {
        Formula::At(a, u) => (a.as_ref().clone(), u.clone()),
        _ => return Err(shape(RuleId::AtL)),
    };
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(a, u)])])
}

fn down_r(domain: &dyn ConstraintDomain, input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::DownR)?.clone();
    let body = match &goal.formula {
        Formula::Down(_, a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::DownR)),
    };
    let opened = open_world(&body, &goal.world, &combine(domain));
    Ok(vec![input.seq.with_goal(Judgment::new(opened, goal.world))])
}

fn down_l(domain: &dyn ConstraintDomain, input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::DownL)?;
    let (body, v) = match &j.formula {
        Formula::Down(_, a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::DownL)),
    };
    let opened = open_world(&body, &v, &combine(domain));
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(opened, v)])])
}

fn forall_world_r(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::ForallWorldR)?.clone();
    let body = match &goal.formula {
        Formula::ForallWorld(_, a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::ForallWorldR)),
    };
    let fresh = WorldExpr::var(WorldVar::Free(eigen_name(input.counter)));
    // opening with a bare variable performs no constant arithmetic
    let opened = open_world(&body, &fresh, &|a, _| a.clone());
    Ok(vec![input.seq.with_goal(Judgment::new(opened, goal.world))])
}

fn forall_world_l(
    domain: &dyn ConstraintDomain,
    input: &RuleIn,
) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::ForallWorldL)?;
    let (body, v) = match &j.formula {
        Formula::ForallWorld(_, a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::ForallWorldL)),
    };
    let w = world_witness(input, RuleId::ForallWorldL)?.clone();
    let opened = open_world(&body, &w, &combine(domain));
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(opened, v)])])
}

fn exists_world_r(
    domain: &dyn ConstraintDomain,
    input: &RuleIn,
) -> Result<Vec<HyllSequent>, RuleError> {
    let goal = goal_principal(input, RuleId::ExistsWorldR)?.clone();
    let body = match &goal.formula {
        Formula::ExistsWorld(_, a) => a.as_ref().clone(),
        _ => return Err(shape(RuleId::ExistsWorldR)),
    };
    let w = world_witness(input, RuleId::ExistsWorldR)?.clone();
    let opened = open_world(&body, &w, &combine(domain));
    Ok(vec![input.seq.with_goal(Judgment::new(opened, goal.world))])
}

fn exists_world_l(input: &RuleIn) -> Result<Vec<HyllSequent>, RuleError> {
    let (i, j) = delta_principal(input, RuleId::ExistsWorldL)?;
    let (body, v) = match &j.formula {
        Formula::ExistsWorld(_, a) => (a.as_ref().clone(), j.world.clone()),
        _ => return Err(shape(RuleId::ExistsWorldL)),
    };
    let fresh = WorldExpr::var(WorldVar::Free(eigen_name(input.counter)));
    let opened = open_world(&body, &fresh, &|a, _| a.clone());
    Ok(vec![input.seq.replace_delta(i, [Judgment::new(opened, v)])])
}

fn rule_consumes_eigen(rule: RuleId) -> bool {
    matches!(
        rule,
        RuleId::ForallR | RuleId::ExistsL | RuleId::ForallWorldR | RuleId::ExistsWorldL
    )
}

/// Check an explicit proof of `seq`. Valid when every node's premises equal
/// the premises computed from its rule instance and every leaf is an axiom.
pub fn check_proof(
    domain: &dyn ConstraintDomain,
    proof: &ProofNode,
    seq: &HyllSequent,
) -> Result<(), ProofError> {
    let counter = eigen_floor(seq);
    let mut path = Vec::new();
    check_node(domain, proof, seq, counter, &mut path)
}

fn check_node(
    domain: &dyn ConstraintDomain,
    node: &ProofNode,
    seq: &HyllSequent,
    counter: usize,
    path: &mut Vec<usize>,
) -> Result<(), ProofError> {
    let premises =
        rule_premises(domain, node.rule, seq, node.principal, node.witness.as_ref(), counter)
            .map_err(|reason| ProofError { path: path.clone(), reason: reason.into() })?;
    if node.premises.len() != premises.len() {
        if node.premises.is_empty() {
            return Err(ProofError {
                path: path.clone(),
                reason: ProofErrorReason::NonAxiomLeaf(node.rule.name()),
            });
        }
        return Err(ProofError {
            path: path.clone(),
            reason: ProofErrorReason::PremiseCount {
                expected: premises.len(),
                found: node.premises.len(),
            },
        });
    }
    let child_counter = if rule_consumes_eigen(node.rule) { counter + 1 } else { counter };
    for (i, (child, premise)) in node.premises.iter().zip(premises.iter()).enumerate() {
        path.push(i);
        check_node(domain, child, premise, child_counter, path)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;
    use crate::syntax::{expand_modal, parse_formula, NameHint, SymbolTable};

    fn atom(name: &str) -> Formula {
        Formula::Atom(name.into(), vec![])
    }

    fn j(f: Formula, w: WorldExpr) -> Judgment {
        Judgment::new(f, w)
    }

    #[test]
    fn at_r_discards_conclusion_world() {
        let goal = j(Formula::At(Box::new(atom("p")), WorldExpr::nat(3)), WorldExpr::nat(7));
        let seq = HyllSequent::new([], [], goal);
        let premises =
            rule_premises(&TEMPORAL, RuleId::AtR, &seq, Principal::Goal, None, 0).unwrap();
        assert_eq!(premises, vec![HyllSequent::new([], [], j(atom("p"), WorldExpr::nat(3)))]);
    }

    #[test]
    fn down_r_substitutes_current_world() {
        // |- (down u. p at u) @ 5  ~>  |- (p at 5) @ 5
        let body = Formula::At(Box::new(atom("p")), WorldExpr::var(WorldVar::Bound(0)));
        let goal = j(Formula::Down(NameHint::new("u"), Box::new(body)), WorldExpr::nat(5));
        let seq = HyllSequent::new([], [], goal);
        let premises =
            rule_premises(&TEMPORAL, RuleId::DownR, &seq, Principal::Goal, None, 0).unwrap();
        let expect = HyllSequent::new(
            [],
            [],
            j(Formula::At(Box::new(atom("p")), WorldExpr::nat(5)), WorldExpr::nat(5)),
        );
        assert_eq!(premises, vec![expect]);
    }

    #[test]
    fn tensor_r_split_partitions() {
        let pres_a = || j(atom("pa"), WorldExpr::identity());
        let goal = j(
            Formula::Tensor(Box::new(atom("pa")), Box::new(Formula::One)),
            WorldExpr::identity(),
        );
        let seq = HyllSequent::new([], [pres_a()], goal);
        let premises = rule_premises(
            &TEMPORAL,
            RuleId::TensorR,
            &seq,
            Principal::Goal,
            Some(&Witness::Split(vec![0])),
            0,
        )
        .unwrap();
        assert_eq!(premises.len(), 2);
        assert_eq!(
            premises[0],
            HyllSequent::new([], [pres_a()], j(atom("pa"), WorldExpr::identity()))
        );
        assert_eq!(premises[1], HyllSequent::new([], [], j(Formula::One, WorldExpr::identity())));
    }

    #[test]
    fn init_single_node_valid() {
        let p = j(atom("p"), WorldExpr::var(WorldVar::Free("w".into())));
        let seq = HyllSequent::new([], [p.clone()], p);
        let proof = ProofNode::leaf(RuleId::Init, Principal::Delta(0));
        assert!(check_proof(&TEMPORAL, &proof, &seq).is_ok());
    }

    #[test]
    fn init_requires_atoms() {
        let f = Formula::Tensor(Box::new(atom("p")), Box::new(atom("q")));
        let jj = j(f, WorldExpr::identity());
        let seq = HyllSequent::new([], [jj.clone()], jj);
        let proof = ProofNode::leaf(RuleId::Init, Principal::Delta(0));
        let err = check_proof(&TEMPORAL, &proof, &seq).unwrap_err();
        assert!(matches!(err.reason, ProofErrorReason::Rule(RuleError::InitMismatch)));
    }

    #[test]
    fn linear_duplication_rejected() {
        // goal (p * p) @ w from delta {p@w}: the right premise is starved,
        // so an init there reports a context mismatch
        let p = j(atom("p"), WorldExpr::identity());
        let goal =
            j(Formula::Tensor(Box::new(atom("p")), Box::new(atom("p"))), WorldExpr::identity());
        let seq = HyllSequent::new([], [p], goal);
        let proof = ProofNode::node(
            RuleId::TensorR,
            Principal::Goal,
            Some(Witness::Split(vec![0])),
            vec![
                ProofNode::leaf(RuleId::Init, Principal::Delta(0)),
                ProofNode::leaf(RuleId::Init, Principal::Delta(0)),
            ],
        );
        let err = check_proof(&TEMPORAL, &proof, &seq).unwrap_err();
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn one_r_needs_empty_delta() {
        let goal = j(Formula::One, WorldExpr::identity());
        let seq = HyllSequent::new([], [j(atom("p"), WorldExpr::identity())], goal);
        let proof = ProofNode::leaf(RuleId::OneR, Principal::Goal);
        assert!(check_proof(&TEMPORAL, &proof, &seq).is_err());
    }

    #[test]
    fn sequent_equality_semantics() {
        let p0 = j(atom("p"), WorldExpr::identity());
        let q0 = j(atom("q"), WorldExpr::identity());
        // gamma order irrelevant
        let a = HyllSequent::new([p0.clone(), q0.clone()], [], p0.clone());
        let b = HyllSequent::new([q0.clone(), p0.clone()], [], p0.clone());
        assert!(sequent_equal(&a, &b));
        // delta multiplicities matter
        let c = HyllSequent::new([], [p0.clone(), p0.clone()], p0.clone());
        let d = HyllSequent::new([], [p0.clone()], p0.clone());
        assert!(!sequent_equal(&c, &d));
        // worlds canonicalize: 2.3 equals 5
        let w23 = crate::domain::compose(&TEMPORAL, &WorldExpr::nat(2), &WorldExpr::nat(3));
        let e = HyllSequent::new([], [], j(atom("p"), w23));
        let f = HyllSequent::new([], [], j(atom("p"), WorldExpr::nat(5)));
        assert!(sequent_equal(&e, &f));
    }

    /// The activation-rule derivation: from the rule in the unbounded
    /// context and `pres(a)@0`, derive `(pres(a) * pres(b)) @ 1` by copy,
    /// limp_l, down_l, at_l, tensor_l, tensor_r and two inits.
    #[test]
    fn activation_rule_derivation_checks() {
        let table = SymbolTable::new().with_constants(["a", "b"]);
        let rule_src = "pres(a) -o delay[1] (pres(a) * pres(b))";
        let rule = expand_modal(&parse_formula(rule_src, &table, &TEMPORAL).unwrap());
        let pres = |c: &str, w: u64| {
            j(Formula::Atom("pres".into(), vec![Term::Const(c.into())]), WorldExpr::nat(w))
        };
        let goal_f = parse_formula("pres(a) * pres(b)", &table, &TEMPORAL).unwrap();
        let seq = HyllSequent::new(
            [j(rule, WorldExpr::nat(0))],
            [pres("a", 0)],
            j(goal_f, WorldExpr::nat(1)),
        );

        // after copy, the sorted delta holds the rule formula and pres(a)@0
        let copied = rule_premises(&TEMPORAL, RuleId::Copy, &seq, Principal::Gamma(0), None, 0)
            .unwrap()
            .remove(0);
        let rule_idx = copied
            .delta()
            .iter()
            .position(|jj| matches!(jj.formula, Formula::Limp(_, _)))
            .unwrap();
        let pres_idx = 1 - rule_idx;

        let tensor_leaf = ProofNode::node(
            RuleId::TensorR,
            Principal::Goal,
            Some(Witness::Split(vec![0])),
            vec![
                ProofNode::leaf(RuleId::Init, Principal::Delta(0)),
                ProofNode::leaf(RuleId::Init, Principal::Delta(0)),
            ],
        );
        let after_limp = ProofNode::node(
            RuleId::DownL,
            Principal::Delta(0),
            None,
            vec![ProofNode::node(
                RuleId::AtL,
                Principal::Delta(0),
                None,
                vec![ProofNode::node(
                    RuleId::TensorL,
                    Principal::Delta(0),
                    None,
                    vec![tensor_leaf],
                )],
            )],
        );
        let proof = ProofNode::node(
            RuleId::Copy,
            Principal::Gamma(0),
            None,
            vec![ProofNode::node(
                RuleId::LimpL,
                Principal::Delta(rule_idx),
                Some(Witness::Split(vec![pres_idx])),
                vec![ProofNode::leaf(RuleId::Init, Principal::Delta(0)), after_limp],
            )],
        );
        check_proof(&TEMPORAL, &proof, &seq).unwrap();
    }

    #[test]
    fn eigenvariable_freshness_enforced() {
        // exists_r with a witness naming a future eigenvariable is rejected
        let goal = j(
            Formula::ExistsTerm(NameHint::new("x"), Box::new(atom("p"))),
            WorldExpr::identity(),
        );
        let seq = HyllSequent::new([], [j(atom("p"), WorldExpr::identity())], goal);
        let err = rule_premises(
            &TEMPORAL,
            RuleId::ExistsR,
            &seq,
            Principal::Goal,
            Some(&Witness::Term(Term::Free("_e5".into()))),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, RuleError::EigenNotFresh { .. }));
    }
}
