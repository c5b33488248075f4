//! Constraint domains: the pluggable world algebra.
//!
//! A domain is a monoid over ground constants; world expressions extend it
//! with a multiset of variables. Reachability `u <= w` holds when some `v`
//! satisfies `u.v = w`, realized by the partial inverse [`divide`].

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::syntax::{WorldConst, WorldExpr, WorldVar};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("world expression `{0}` is not ground")]
    NotGround(String),
    #[error("unknown constraint domain `{0}`")]
    UnknownDomain(String),
}

/// A monoid of worlds together with parsing and rendering of its constants.
/// Both shipped instances are commutative; the default canonicalizer assumes
/// that, and a non-commutative instance must override `canonicalize`.
pub trait ConstraintDomain: Send + Sync {
    fn name(&self) -> &'static str;

    fn identity(&self) -> WorldConst;

    /// Monoid composition of ground constants.
    fn combine(&self, a: &WorldConst, b: &WorldConst) -> WorldConst;

    /// Partial inverse: `v` such that `a . v = b`, if any.
    fn divide_const(&self, a: &WorldConst, b: &WorldConst) -> Option<WorldConst>;

    fn parse_const(&self, text: &str) -> Option<WorldConst>;

    fn render_const(&self, c: &WorldConst) -> String;

    /// Constants used by bounded enumeration when an equation has no
    /// pattern-driven solution; `bound` is the search budget's world bound.
    fn enumerate(&self, bound: u64) -> Vec<WorldConst>;

    fn canonicalize(&self, w: &mut WorldExpr) {
        w.normalize();
    }
}

/// Instants of time: naturals under addition, identity 0.
pub struct TemporalDomain;

impl ConstraintDomain for TemporalDomain {
    fn name(&self) -> &'static str {
        "temporal"
    }

    fn identity(&self) -> WorldConst {
        WorldConst::Nat(0)
    }

    fn combine(&self, a: &WorldConst, b: &WorldConst) -> WorldConst {
        match (a, b) {
            (WorldConst::Nat(x), WorldConst::Nat(y)) => WorldConst::Nat(x + y),
            _ => panic!("temporal domain applied to a foreign constant"),
        }
    }

    fn divide_const(&self, a: &WorldConst, b: &WorldConst) -> Option<WorldConst> {
        match (a, b) {
            (WorldConst::Nat(x), WorldConst::Nat(y)) if x <= y => Some(WorldConst::Nat(y - x)),
            (WorldConst::Nat(_), WorldConst::Nat(_)) => None,
            _ => panic!("temporal domain applied to a foreign constant"),
        }
    }

    fn parse_const(&self, text: &str) -> Option<WorldConst> {
        text.parse::<u64>().ok().map(WorldConst::Nat)
    }

    fn render_const(&self, c: &WorldConst) -> String {
        match c {
            WorldConst::Nat(n) => n.to_string(),
            WorldConst::Prob(r) => format!("{}/{}", r.numer(), r.denom()),
        }
    }

    fn enumerate(&self, bound: u64) -> Vec<WorldConst> {
        (0..=bound).map(WorldConst::Nat).collect()
    }
}

/// Probabilities: rationals in [0,1] under multiplication, identity 1.
/// Exposed behind the same interface; only the monoid laws are claimed.
pub struct ProbDomain;

impl ConstraintDomain for ProbDomain {
    fn name(&self) -> &'static str {
        "prob"
    }

    fn identity(&self) -> WorldConst {
        WorldConst::Prob(Ratio::from_integer(1))
    }

    fn combine(&self, a: &WorldConst, b: &WorldConst) -> WorldConst {
        match (a, b) {
            (WorldConst::Prob(x), WorldConst::Prob(y)) => WorldConst::Prob(x * y),
            _ => panic!("prob domain applied to a foreign constant"),
        }
    }

    fn divide_const(&self, a: &WorldConst, b: &WorldConst) -> Option<WorldConst> {
        match (a, b) {
            (WorldConst::Prob(x), WorldConst::Prob(y)) => {
                if *x == Ratio::from_integer(0) {
                    return if *y == Ratio::from_integer(0) {
                        Some(self.identity())
                    } else {
                        None
                    };
                }
                let v = y / x;
                (v <= Ratio::from_integer(1)).then(|| WorldConst::Prob(v))
            }
            _ => panic!("prob domain applied to a foreign constant"),
        }
    }

    fn parse_const(&self, text: &str) -> Option<WorldConst> {
        let (n, d) = match text.split_once('/') {
            Some((n, d)) => (n.parse::<u64>().ok()?, d.parse::<u64>().ok()?),
            None => (text.parse::<u64>().ok()?, 1),
        };
        if d == 0 || n > d {
            return None;
        }
        Some(WorldConst::Prob(Ratio::new(n, d)))
    }

    fn render_const(&self, c: &WorldConst) -> String {
        match c {
            WorldConst::Prob(r) if r.is_integer() => r.numer().to_string(),
            WorldConst::Prob(r) => format!("{}/{}", r.numer(), r.denom()),
            WorldConst::Nat(n) => n.to_string(),
        }
    }

    fn enumerate(&self, bound: u64) -> Vec<WorldConst> {
        let mut out = vec![WorldConst::Prob(Ratio::from_integer(1))];
        for d in 2..=bound.max(2) {
            out.push(WorldConst::Prob(Ratio::new(1, d)));
        }
        out.push(WorldConst::Prob(Ratio::from_integer(0)));
        out
    }
}

pub static TEMPORAL: TemporalDomain = TemporalDomain;
pub static PROB: ProbDomain = ProbDomain;

pub fn domain_by_name(name: &str) -> Result<&'static dyn ConstraintDomain, DomainError> {
    match name {
        "temporal" => Ok(&TEMPORAL),
        "prob" => Ok(&PROB),
        other => Err(DomainError::UnknownDomain(other.to_string())),
    }
}

/// Monoid composition of canonical world expressions: constants combined,
/// variable multisets joined.
pub fn compose(d: &dyn ConstraintDomain, u: &WorldExpr, w: &WorldExpr) -> WorldExpr {
    let mut out = u.clone();
    out.vars.extend(w.vars.iter().cloned());
    out.constant = match (&u.constant, &w.constant) {
        (None, None) => None,
        (Some(c), None) | (None, Some(c)) => Some(c.clone()),
        (Some(a), Some(b)) => Some(d.combine(a, b)),
    };
    d.canonicalize(&mut out);
    out
}

fn ground_const(d: &dyn ConstraintDomain, w: &WorldExpr) -> Result<WorldConst, DomainError> {
    if !w.is_ground() {
        return Err(DomainError::NotGround(format!("{w:?}")));
    }
    Ok(w.constant.clone().unwrap_or_else(|| d.identity()))
}

/// `v` such that `u . v = w`, for ground `u`, `w`.
pub fn divide(
    d: &dyn ConstraintDomain,
    u: &WorldExpr,
    w: &WorldExpr,
) -> Result<Option<WorldExpr>, DomainError> {
    let a = ground_const(d, u)?;
    let b = ground_const(d, w)?;
    Ok(d.divide_const(&a, &b).map(WorldExpr::constant))
}

/// Reachability: `u <= w` iff some `v` satisfies `u . v = w`.
pub fn reachable(
    d: &dyn ConstraintDomain,
    u: &WorldExpr,
    w: &WorldExpr,
) -> Result<bool, DomainError> {
    Ok(divide(d, u, w)?.is_some())
}

/// A substitution on free world variables.
pub type WorldSubst = BTreeMap<String, WorldExpr>;

pub fn apply_subst(d: &dyn ConstraintDomain, w: &WorldExpr, s: &WorldSubst) -> WorldExpr {
    let mut out = WorldExpr { constant: w.constant.clone(), vars: Vec::new() };
    for v in &w.vars {
        match v {
            WorldVar::Free(name) => match s.get(name) {
                Some(repl) => {
                    out = compose(d, &out, repl);
                }
                None => out.vars.push(v.clone()),
            },
            WorldVar::Bound(_) => out.vars.push(v.clone()),
        }
    }
    d.canonicalize(&mut out);
    out
}

/// Solve `e1 = e2` under `s`, extending it. Problems with at most one
/// unresolved variable are solved exactly through `divide`; anything harder
/// falls back to enumerating domain constants up to `bound` for the
/// remaining variables. Returns every solution found, most general first.
pub fn unify_worlds(
    d: &dyn ConstraintDomain,
    e1: &WorldExpr,
    e2: &WorldExpr,
    s: &WorldSubst,
    bound: u64,
) -> Vec<WorldSubst> {
    let a = apply_subst(d, e1, s);
    let b = apply_subst(d, e2, s);

    // cancel common variables (both shipped monoids are cancellative)
    let (mut av, mut bv) = (a.vars.clone(), b.vars.clone());
    let mut i = 0;
    while i < av.len() {
        if let Some(j) = bv.iter().position(|v| *v == av[i]) {
            bv.remove(j);
            av.remove(i);
        } else {
            i += 1;
        }
    }
    let a = WorldExpr { constant: a.constant.clone(), vars: av };
    let b = WorldExpr { constant: b.constant.clone(), vars: bv };

    let free_of = |w: &WorldExpr| -> Vec<String> {
        let mut out = Vec::new();
        for v in &w.vars {
            if let WorldVar::Free(n) = v {
                out.push(n.clone());
            }
        }
        out
    };
    let a_free = free_of(&a);
    let b_free = free_of(&b);

    // bound variables cannot be solved for; expressions containing them only
    // unify syntactically
    let has_bound =
        |w: &WorldExpr| w.vars.iter().any(|v| matches!(v, WorldVar::Bound(_)));
    if has_bound(&a) || has_bound(&b) {
        return if a == b { vec![s.clone()] } else { Vec::new() };
    }

    match (a_free.len(), b_free.len()) {
        (0, 0) => {
            let ca = a.constant.clone().unwrap_or_else(|| d.identity());
            let cb = b.constant.clone().unwrap_or_else(|| d.identity());
            if ca == cb {
                vec![s.clone()]
            } else {
                Vec::new()
            }
        }
        (1, 0) if a.vars.len() == 1 => solve_single(d, &a_free[0], &a.constant, &b, s),
        (0, 1) if b.vars.len() == 1 => solve_single(d, &b_free[0], &b.constant, &a, s),
        (1, 0) | (0, 1) | _ => {
            // bare-variable binding: x = expr, x not in expr
            if a.vars.len() == 1 && a.constant.is_none() && !b_free.contains(&a_free[0]) {
                let mut s2 = s.clone();
                s2.insert(a_free[0].clone(), b.clone());
                return vec![s2];
            }
            if b.vars.len() == 1 && b.constant.is_none() && !a_free.contains(&b_free[0]) {
                let mut s2 = s.clone();
                s2.insert(b_free[0].clone(), a.clone());
                return vec![s2];
            }
            enumerate_solutions(d, &a, &b, s, bound)
        }
    }
}

/// Solve `x . c = rhs` where `rhs` is ground.
fn solve_single(
    d: &dyn ConstraintDomain,
    var: &str,
    residual: &Option<WorldConst>,
    rhs: &WorldExpr,
    s: &WorldSubst,
) -> Vec<WorldSubst> {
    let lhs_const = WorldExpr { constant: residual.clone(), vars: Vec::new() };
    match divide(d, &lhs_const, rhs) {
        Ok(Some(v)) => {
            let mut s2 = s.clone();
            s2.insert(var.to_string(), v);
            vec![s2]
        }
        _ => Vec::new(),
    }
}

fn enumerate_solutions(
    d: &dyn ConstraintDomain,
    a: &WorldExpr,
    b: &WorldExpr,
    s: &WorldSubst,
    bound: u64,
) -> Vec<WorldSubst> {
    let mut vars: Vec<String> = Vec::new();
    for w in [a, b] {
        for v in &w.vars {
            if let WorldVar::Free(n) = v {
                if !vars.contains(n) {
                    vars.push(n.clone());
                }
            }
        }
    }
    // keep the fallback tame: at most two unknowns
    if vars.len() > 2 {
        return Vec::new();
    }
    let consts = d.enumerate(bound);
    let mut out = Vec::new();
    let assign = |vals: &[&WorldConst]| -> Option<WorldSubst> {
        let mut s2 = s.clone();
        for (name, val) in vars.iter().zip(vals) {
            s2.insert(name.clone(), WorldExpr::constant((*val).clone()));
        }
        let ra = apply_subst(d, a, &s2);
        let rb = apply_subst(d, b, &s2);
        (ra == rb).then_some(s2)
    };
    if vars.len() == 1 {
        for c in &consts {
            if let Some(s2) = assign(&[c]) {
                out.push(s2);
            }
        }
    } else {
        for c1 in &consts {
            for c2 in &consts {
                if let Some(s2) = assign(&[c1, c2]) {
                    out.push(s2);
                }
            }
        }
    }
    out
}

/// Render a canonical world expression; variables first, then the constant,
/// joined by `.`; the identity renders as `iota`.
pub fn render_world(d: &dyn ConstraintDomain, w: &WorldExpr) -> String {
    if w.is_identity() {
        return "iota".to_string();
    }
    let mut parts: Vec<String> = Vec::new();
    for v in &w.vars {
        match v {
            WorldVar::Free(n) => parts.push(n.clone()),
            WorldVar::Bound(i) => parts.push(format!("<b{i}>")),
        }
    }
    if let Some(c) = &w.constant {
        parts.push(d.render_const(c));
    }
    parts.join(".")
}

impl fmt::Debug for TemporalDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TemporalDomain")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(n: u64) -> WorldExpr {
        WorldExpr::nat(n)
    }

    fn var(name: &str) -> WorldExpr {
        WorldExpr::var(WorldVar::Free(name.into()))
    }

    #[test]
    fn temporal_compose() {
        let d = &TEMPORAL;
        assert_eq!(compose(d, &nat(2), &nat(3)), nat(5));
        // unit law
        let w = compose(d, &var("w"), &WorldExpr::identity());
        assert_eq!(w, var("w"));
        // (x.1).(x.2) = x.x.3
        let x1 = compose(d, &var("x"), &nat(1));
        let x2 = compose(d, &var("x"), &nat(2));
        let got = compose(d, &x1, &x2);
        assert_eq!(
            got,
            WorldExpr {
                constant: Some(WorldConst::Nat(3)),
                vars: vec![WorldVar::Free("x".into()), WorldVar::Free("x".into())],
            }
        );
    }

    #[test]
    fn temporal_reachable_and_divide() {
        let d = &TEMPORAL;
        assert!(reachable(d, &nat(3), &nat(5)).unwrap());
        assert!(!reachable(d, &nat(5), &nat(3)).unwrap());
        // iota is initial
        for n in 0..10 {
            assert!(reachable(d, &WorldExpr::identity(), &nat(n)).unwrap());
        }
        assert_eq!(divide(d, &nat(2), &nat(5)).unwrap(), Some(nat(3)));
        assert_eq!(divide(d, &nat(5), &nat(2)).unwrap(), None);
        assert_eq!(divide(d, &nat(4), &nat(4)).unwrap(), Some(WorldExpr::identity()));
        assert!(reachable(d, &var("x"), &nat(1)).is_err());
    }

    #[test]
    fn unify_single_variable() {
        let d = &TEMPORAL;
        let s = WorldSubst::new();
        // x.1 = 3  =>  x = 2
        let lhs = compose(d, &var("x"), &nat(1));
        let sols = unify_worlds(d, &lhs, &nat(3), &s, 16);
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].get("x"), Some(&nat(2)));
        // x.4 = 3  =>  no solution
        let lhs = compose(d, &var("x"), &nat(4));
        assert!(unify_worlds(d, &lhs, &nat(3), &s, 16).is_empty());
        // x = y.1  =>  x bound to y.1
        let rhs = compose(d, &var("y"), &nat(1));
        let sols = unify_worlds(d, &var("x"), &rhs, &s, 16);
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].get("x"), Some(&rhs));
    }

    #[test]
    fn unify_validates_by_substitution() {
        let d = &TEMPORAL;
        let s = WorldSubst::new();
        let lhs = compose(d, &compose(d, &var("x"), &var("x")), &nat(1));
        let sols = unify_worlds(d, &lhs, &nat(5), &s, 16);
        assert!(!sols.is_empty());
        for sol in sols {
            assert_eq!(apply_subst(d, &lhs, &sol), nat(5));
        }
    }

    #[test]
    fn unify_cancels_common_variables() {
        let d = &TEMPORAL;
        let s = WorldSubst::new();
        let lhs = compose(d, &var("u"), &nat(3));
        let rhs = compose(d, &var("u"), &compose(d, &var("x"), &nat(1)));
        let sols = unify_worlds(d, &lhs, &rhs, &s, 16);
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].get("x"), Some(&nat(2)));
    }

    #[test]
    fn prob_monoid() {
        let d = &PROB;
        let half = WorldExpr::constant(d.parse_const("1/2").unwrap());
        let third = WorldExpr::constant(d.parse_const("1/3").unwrap());
        let got = compose(d, &half, &third);
        assert_eq!(got, WorldExpr::constant(d.parse_const("1/6").unwrap()));
        // identity 1 normalizes away
        let one = WorldExpr::constant(d.parse_const("1").unwrap());
        assert!(one.is_identity());
        assert!(reachable(d, &half, &WorldExpr::constant(d.parse_const("1/6").unwrap())).unwrap());
        assert!(!reachable(d, &WorldExpr::constant(d.parse_const("1/6").unwrap()), &half).unwrap());
    }
}
