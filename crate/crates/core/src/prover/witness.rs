//! Witness candidate generation for quantifier instantiation.
//!
//! Term witnesses come from matching the quantified body's atoms against
//! atoms available in the sequent, then from the ground subterm universe of
//! the sequent. World witnesses come from solving world equations between
//! body atom annotations and available atom worlds, then from worlds
//! occurring in the sequent, then from bounded constant enumeration; only
//! that last tier is budget-limited.

use std::collections::BTreeSet;

use crate::domain::{self, ConstraintDomain, WorldSubst};
use crate::syntax::{Formula, Judgment, Term, WorldExpr, WorldVar};

/// Placeholder variable used when solving for a world witness.
const QUERY_VAR: &str = "_q";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Looking for world patterns: stop at world binders (they shift world
    /// indices), descend through term binders (they do not).
    World,
    /// Looking for term argument patterns: stop at term binders, descend
    /// through world binders.
    Term,
}

/// Atoms of a formula paired with the world annotation in force at their
/// position, stopping at binders that would shift the indices we track.
fn atom_patterns(
    f: &Formula,
    world: &WorldExpr,
    target: Target,
    out: &mut Vec<(String, Vec<Term>, WorldExpr)>,
) {
    match f {
        Formula::Atom(p, args) => out.push((p.clone(), args.clone(), world.clone())),
        Formula::One | Formula::Zero | Formula::Top => {}
        Formula::Tensor(a, b)
        | Formula::Limp(a, b)
        | Formula::With(a, b)
        | Formula::Plus(a, b) => {
            atom_patterns(a, world, target, out);
            atom_patterns(b, world, target, out);
        }
        Formula::Bang(a) => atom_patterns(a, world, target, out),
        Formula::At(a, w) => atom_patterns(a, w, target, out),
        Formula::ForallTerm(_, a) | Formula::ExistsTerm(_, a) => {
            if target == Target::World {
                atom_patterns(a, world, target, out);
            }
        }
        Formula::Down(_, a) | Formula::ForallWorld(_, a) | Formula::ExistsWorld(_, a) => {
            if target == Target::Term {
                atom_patterns(a, world, target, out);
            }
        }
        // modal sugar expands to world binders
        Formula::BoxModal(a) | Formula::DiaModal(a) | Formula::Delay(_, a) => {
            if target == Target::Term {
                atom_patterns(a, world, target, out);
            }
        }
    }
}

/// All atoms present in the linear context and goal.
fn available_atoms(
    delta: impl Iterator<Item = Judgment>,
    goal: &Judgment,
) -> Vec<(String, Vec<Term>, WorldExpr)> {
    let mut out = Vec::new();
    for j in delta.chain(std::iter::once(goal.clone())) {
        // availability is an over-approximation, so descending everywhere
        // (with both stop policies relaxed) would be fine; using the world
        // policy keeps annotations aligned where they are meaningful
        atom_patterns(&j.formula, &j.world, Target::World, &mut out);
        let mut more = Vec::new();
        atom_patterns(&j.formula, &j.world, Target::Term, &mut more);
        out.extend(more);
    }
    out
}

// ---------------------------------------------------------------------------
// world witnesses

/// Candidate worlds for instantiating a world quantifier whose body is
/// `body` (bound variable still at index 0) located at `at_world`. Returns
/// `(candidates, budget_limited)`: the flag is set when the enumeration tier
/// contributed, since that tier is a bounded slice of an infinite space.
/// With a semantic `cap`, candidates are filtered to worlds below it and the
/// set is treated as complete.
pub fn world_candidates(
    d: &dyn ConstraintDomain,
    body: &Formula,
    at_world: &WorldExpr,
    delta: impl Iterator<Item = Judgment>,
    goal: &Judgment,
    bound: u64,
    cap: Option<&WorldExpr>,
) -> (Vec<WorldExpr>, bool) {
    let mut seen: BTreeSet<WorldExpr> = BTreeSet::new();
    let mut ordered: Vec<WorldExpr> = Vec::new();
    let push = |w: WorldExpr, seen: &mut BTreeSet<WorldExpr>, ordered: &mut Vec<WorldExpr>| {
        if w.vars.iter().any(|v| matches!(v, WorldVar::Bound(_))) {
            return;
        }
        if let Some(cap) = cap {
            if w.is_ground() && !matches!(domain::reachable(d, &w, cap), Ok(true)) {
                return;
            }
        }
        if seen.insert(w.clone()) {
            ordered.push(w);
        }
    };

    let avail = available_atoms(delta, goal);

    // tier 1: solve pattern worlds against available atom worlds
    let mut patterns = Vec::new();
    atom_patterns(body, at_world, Target::World, &mut patterns);
    let query = WorldVar::Free(QUERY_VAR.into());
    for (pred, _, pattern_world) in &patterns {
        let mut pw = pattern_world.clone();
        let mut mentioned = false;
        for v in &mut pw.vars {
            if *v == WorldVar::Bound(0) {
                *v = query.clone();
                mentioned = true;
            }
        }
        if !mentioned {
            continue;
        }
        pw.normalize();
        for (apred, _, aworld) in &avail {
            if apred != pred || !aworld.is_ground() {
                continue;
            }
            for sol in domain::unify_worlds(d, &pw, aworld, &WorldSubst::new(), bound) {
                if let Some(w) = sol.get(QUERY_VAR) {
                    push(w.clone(), &mut seen, &mut ordered);
                }
            }
        }
    }

    // tier 2: worlds already occurring in the sequent (and the identity)
    push(WorldExpr::identity(), &mut seen, &mut ordered);
    let mut occurring: Vec<WorldExpr> = avail.iter().map(|(_, _, w)| w.clone()).collect();
    occurring.sort();
    for w in occurring {
        push(w, &mut seen, &mut ordered);
    }

    // tier 3: bounded constant enumeration
    let before = ordered.len();
    for c in d.enumerate(bound) {
        push(WorldExpr::constant(c), &mut seen, &mut ordered);
    }
    let enumerated = ordered.len() > before;
    // with a semantic cap the candidate set is complete for the theory at
    // hand; without one, the enumeration tier is an honest budget cut-off
    let budget_limited = enumerated && cap.is_none();
    (ordered, budget_limited)
}

// ---------------------------------------------------------------------------
// term witnesses

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

/// Candidate terms for instantiating a term quantifier with body `body`.
/// Matching-derived candidates come first: for every body atom mentioning
/// the bound variable, the subterms at those positions in same-predicate
/// atoms of the sequent. Then the ground subterm universe, free variables
/// (eigenvariables) in scope, and declared constants. The universe is the
/// full relevant term space at desk scale, so exhausting it is not treated
/// as a budget cut-off.
pub fn term_candidates(
    body: &Formula,
    at_world: &WorldExpr,
    delta: impl Iterator<Item = Judgment>,
    goal: &Judgment,
    extra_consts: &BTreeSet<String>,
) -> Vec<Term> {
    let avail = available_atoms(delta, goal);
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    let mut ordered: Vec<Term> = Vec::new();
    let push = |t: Term, seen: &mut BTreeSet<Term>, ordered: &mut Vec<Term>| {
        if seen.insert(t.clone()) {
            ordered.push(t);
        }
    };

    // tier 1: positional matching against available atoms
    let mut patterns = Vec::new();
    atom_patterns(body, at_world, Target::Term, &mut patterns);
    for (pred, args, _) in &patterns {
        for (apred, aargs, _) in &avail {
            if apred != pred || aargs.len() != args.len() {
                continue;
            }
            for (pat, actual) in args.iter().zip(aargs.iter()) {
                collect_matches(pat, actual, &mut |t| {
                    if t.is_ground() || matches!(t, Term::Free(_)) {
                        push(t.clone(), &mut seen, &mut ordered);
                    }
                });
            }
        }
    }

    // tier 2: ground subterm universe and free variables of the sequent
    let mut universe: BTreeSet<Term> = BTreeSet::new();
    let mut frees: BTreeSet<String> = BTreeSet::new();
    for (_, args, _) in &avail {
        for a in args {
            ground_subterms(a, &mut universe);
            collect_free_names(a, &mut frees);
        }
    }
    for t in universe {
        push(t, &mut seen, &mut ordered);
    }
    for name in frees {
        push(Term::Free(name), &mut seen, &mut ordered);
    }
    for c in extra_consts {
        push(Term::Const(c.clone()), &mut seen, &mut ordered);
    }

    // a vacuous quantifier still needs one witness
    if ordered.is_empty() {
        ordered.push(Term::Const("o".into()));
    }
    ordered
}

fn collect_free_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Free(n) => {
            out.insert(n.clone());
        }
        Term::App(_, args) => {
            for a in args {
                collect_free_names(a, out);
            }
        }
        _ => {}
    }
}

/// Where `pat` has the target index 0, report the corresponding subterm of
/// `actual`; other bound indices are wildcards.
fn collect_matches(pat: &Term, actual: &Term, hit: &mut impl FnMut(&Term)) {
    match (pat, actual) {
        (Term::Bound(0), t) => hit(t),
        (Term::App(f, pargs), Term::App(g, aargs)) if f == g && pargs.len() == aargs.len() => {
            for (p, a) in pargs.iter().zip(aargs.iter()) {
                collect_matches(p, a, hit);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;

    fn atom(p: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(p.into(), args)
    }

    #[test]
    fn world_candidates_solve_delta_shifts() {
        // body: p at (u . 1) with u bound; available: p @ 3; solves u = 2
        let body = Formula::At(
            Box::new(atom("p", vec![])),
            WorldExpr {
                constant: Some(crate::syntax::WorldConst::Nat(1)),
                vars: vec![WorldVar::Bound(0)],
            },
        );
        let delta = vec![Judgment::new(atom("p", vec![]), WorldExpr::nat(3))];
        let goal = Judgment::new(atom("g", vec![]), WorldExpr::identity());
        let (cands, limited) = world_candidates(
            &TEMPORAL,
            &body,
            &WorldExpr::identity(),
            delta.into_iter(),
            &goal,
            16,
            None,
        );
        assert_eq!(cands[0], WorldExpr::nat(2));
        assert!(limited);
    }

    #[test]
    fn world_candidates_descend_term_binders() {
        // body: forall x. (pres(x) at u.1) with u the target; pres(a) @ 4
        let inner = Formula::At(
            Box::new(atom("pres", vec![Term::Bound(0)])),
            WorldExpr {
                constant: Some(crate::syntax::WorldConst::Nat(1)),
                vars: vec![WorldVar::Bound(0)],
            },
        );
        let body = Formula::ForallTerm(crate::syntax::NameHint::new("x"), Box::new(inner));
        let delta = vec![Judgment::new(
            atom("pres", vec![Term::Const("a".into())]),
            WorldExpr::nat(4),
        )];
        let goal = Judgment::new(atom("g", vec![]), WorldExpr::identity());
        let (cands, _) = world_candidates(
            &TEMPORAL,
            &body,
            &WorldExpr::identity(),
            delta.into_iter(),
            &goal,
            16,
            None,
        );
        assert_eq!(cands[0], WorldExpr::nat(3));
    }

    #[test]
    fn world_candidates_respect_cap() {
        let body = Formula::At(Box::new(atom("p", vec![])), WorldExpr::var(WorldVar::Bound(0)));
        let goal = Judgment::new(atom("g", vec![]), WorldExpr::identity());
        let (cands, limited) = world_candidates(
            &TEMPORAL,
            &body,
            &WorldExpr::identity(),
            std::iter::empty(),
            &goal,
            16,
            Some(&WorldExpr::nat(2)),
        );
        assert!(cands.iter().all(|w| w.as_nat().unwrap() <= 2));
        assert!(!limited);
    }

    #[test]
    fn term_candidates_match_positionally() {
        // body: pres(x) with x bound; available pres(a), pres(b)
        let body = atom("pres", vec![Term::Bound(0)]);
        let delta = vec![
            Judgment::new(atom("pres", vec![Term::Const("a".into())]), WorldExpr::identity()),
            Judgment::new(atom("pres", vec![Term::Const("b".into())]), WorldExpr::identity()),
        ];
        let goal = Judgment::new(atom("g", vec![]), WorldExpr::identity());
        let cands = term_candidates(
            &body,
            &WorldExpr::identity(),
            delta.into_iter(),
            &goal,
            &BTreeSet::new(),
        );
        assert!(cands.contains(&Term::Const("a".into())));
        assert!(cands.contains(&Term::Const("b".into())));
        assert_eq!(cands[0], Term::Const("a".into()));
    }

    #[test]
    fn vacuous_quantifier_gets_default_witness() {
        let body = atom("p", vec![]);
        let goal = Judgment::new(atom("p", vec![]), WorldExpr::identity());
        let cands = term_candidates(
            &body,
            &WorldExpr::identity(),
            std::iter::empty(),
            &goal,
            &BTreeSet::new(),
        );
        assert!(!cands.is_empty());
    }
}
