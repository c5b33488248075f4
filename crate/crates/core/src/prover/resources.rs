//! Lazy resource threading for focused search.
//!
//! Linear resources are passed through premises as an input/output stream:
//! the first premise of a multiplicative rule receives everything and
//! returns its leftovers, which the second premise consumes from. `top`
//! (and `0` on the left) set a slack flag meaning the subtree can absorb any
//! extra resources; additive branches reconcile their consumption through
//! that flag. Explicit split witnesses for the kernel are reconstructed
//! afterwards from the recorded consumption of each subtree.

/// A sorted multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<T>(Vec<T>);

impl<T> Default for Multiset<T> {
    fn default() -> Self {
        Multiset(Vec::new())
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Multiset(Vec::new())
    }

    pub fn from_vec(mut v: Vec<T>) -> Self {
        v.sort();
        Multiset(v)
    }

    pub fn singleton(j: T) -> Self {
        Multiset(vec![j])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn insert(&mut self, j: T) {
        let pos = self.0.partition_point(|x| *x <= j);
        self.0.insert(pos, j);
    }

    pub fn remove_one(&mut self, j: &T) -> bool {
        match self.0.iter().position(|x| x == j) {
            Some(i) => {
                self.0.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn remove_at(&mut self, i: usize) -> T {
        self.0.remove(i)
    }

    pub fn count(&self, j: &T) -> usize {
        self.0.iter().filter(|x| *x == j).count()
    }

    /// Multiset difference, saturating at zero per element.
    pub fn minus(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut out = self.0.clone();
        for j in &other.0 {
            if let Some(i) = out.iter().position(|x| x == j) {
                out.remove(i);
            }
        }
        Multiset(out)
    }

    pub fn plus(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        out.sort();
        Multiset(out)
    }

    /// Elementwise minimum.
    pub fn intersect(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut rest = other.0.clone();
        let mut out = Vec::new();
        for j in &self.0 {
            if let Some(i) = rest.iter().position(|x| x == j) {
                rest.remove(i);
                out.push(j.clone());
            }
        }
        Multiset(out)
    }

    /// Elementwise maximum.
    pub fn union_max(&self, other: &Multiset<T>) -> Multiset<T> {
        self.plus(&other.minus(self))
    }

    pub fn is_subset(&self, other: &Multiset<T>) -> bool {
        self.minus(other).is_empty()
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Multiset::from_vec(iter.into_iter().collect())
    }
}

/// Cap a subtree's raw leftovers at what the enclosing node may emit upward
/// (`limit`); the overflow consists of rule-introduced components that never
/// left the subtree. They can only be disposed of by slack inside the
/// subtree. Returns `(flow_up, absorbed_inside)`, or `None` when overflow
/// exists but the subtree has no slack.
pub fn cap_leftover<T: Ord + Clone>(
    raw: &Multiset<T>,
    limit: &Multiset<T>,
    slack: bool,
) -> Option<(Multiset<T>, Multiset<T>)> {
    let flow = raw.intersect(limit);
    let absorbed = raw.minus(limit);
    if !absorbed.is_empty() && !slack {
        return None;
    }
    Some((flow, absorbed))
}

/// Reconcile two additive branches over the same input. Each branch consumed
/// `used_i` and reports `slack_i`. The joint consumption is the elementwise
/// maximum; a branch that consumed less must absorb the difference through
/// its slack. Returns `(joint_used, extra_for_first, extra_for_second)`.
pub fn additive_join<T: Ord + Clone>(
    used1: &Multiset<T>,
    slack1: bool,
    used2: &Multiset<T>,
    slack2: bool,
) -> Option<(Multiset<T>, Multiset<T>, Multiset<T>)> {
    let joint = used1.union_max(used2);
    let extra1 = joint.minus(used1);
    let extra2 = joint.minus(used2);
    if !extra1.is_empty() && !slack1 {
        return None;
    }
    if !extra2.is_empty() && !slack2 {
        return None;
    }
    Some((joint, extra1, extra2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Formula, Judgment, WorldExpr};

    fn j(name: &str) -> Judgment {
        Judgment::new(Formula::Atom(name.into(), vec![]), WorldExpr::identity())
    }

    fn ms(names: &[&str]) -> Multiset<Judgment> {
        names.iter().map(|n| j(n)).collect()
    }

    #[test]
    fn multiset_ops() {
        let a = ms(&["p", "q", "p"]);
        let b = ms(&["p"]);
        assert_eq!(a.minus(&b), ms(&["p", "q"]));
        assert_eq!(a.count(&j("p")), 2);
        assert_eq!(a.intersect(&ms(&["p", "r"])), ms(&["p"]));
        assert_eq!(b.union_max(&ms(&["p", "p"])), ms(&["p", "p"]));
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
    }

    #[test]
    fn cap_requires_slack_for_overflow() {
        // a component (r) left over without slack kills the branch
        let raw = ms(&["p", "r"]);
        let limit = ms(&["p", "q"]);
        assert_eq!(cap_leftover(&raw, &limit, false), None);
        let (flow, absorbed) = cap_leftover(&raw, &limit, true).unwrap();
        assert_eq!(flow, ms(&["p"]));
        assert_eq!(absorbed, ms(&["r"]));
    }

    #[test]
    fn additive_join_balances_consumption() {
        // branch 1 consumed {p}, branch 2 consumed {p,q}; branch 1 must
        // absorb q, which needs its slack
        let (joint, e1, e2) = additive_join(&ms(&["p"]), true, &ms(&["p", "q"]), false).unwrap();
        assert_eq!(joint, ms(&["p", "q"]));
        assert_eq!(e1, ms(&["q"]));
        assert!(e2.is_empty());
        assert_eq!(additive_join(&ms(&["p"]), false, &ms(&["p", "q"]), false), None);
        // equal consumption needs no slack
        let (joint, e1, e2) = additive_join(&ms(&["p"]), false, &ms(&["p"]), false).unwrap();
        assert_eq!(joint, ms(&["p"]));
        assert!(e1.is_empty() && e2.is_empty());
    }
}
