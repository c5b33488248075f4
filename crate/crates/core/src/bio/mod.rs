//! Rule-based biological models: a small language of species, timed rewrite
//! rules and initial states, compiled into logic theories.
//!
//! The file format is line oriented:
//!
//! ```text
//! # a three-step activation chain
//! species pres/1
//! const a b c
//! init pres(a)
//! rule act_ab: pres(a) => pres(a), pres(b) delay 1
//! rule act_bc: pres(b) => pres(b), pres(c) delay 1
//! ```
//!
//! `rule NAME: L => R delay D` rewrites the multiset `L` into `R` after `D`
//! time units; `rule NAME: L =| T delay D` is an inhibition consuming the
//! target facts `T`. `const NAME = N` declares a delay constant, a bare
//! `const` line declares term constants. `option frame off` disables the
//! generated per-species persistence rules. Identifiers in rules that are
//! not declared constants are rule variables, implicitly universally
//! quantified; initial facts must be ground.

pub mod compile;

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::parse::{ParseError, SymbolTable};
use crate::syntax::{Formula, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Activation,
    Inhibition,
    Custom,
}

/// One ground or pattern atom: predicate plus argument terms.
pub type BioAtom = (String, Vec<Term>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BioRule {
    pub name: String,
    pub kind: RuleKind,
    pub delay: u64,
    pub left: Vec<BioAtom>,
    /// Products for rewrite rules; inhibited targets for inhibitions.
    pub right: Vec<BioAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BioModel {
    pub species: Vec<Species>,
    pub constants: BTreeSet<String>,
    pub delay_constants: BTreeMap<String, u64>,
    pub init: Vec<BioAtom>,
    pub rules: Vec<BioRule>,
    /// Generate a persistence rule per species (facts not consumed at a
    /// step survive to the next).
    pub frame: bool,
}

/// Reachability and invariant questions over a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    ReachAt { facts: Vec<BioAtom>, at: u64 },
    ReachWithin { facts: Vec<BioAtom>, horizon: u64 },
    InvariantUpto { facts: Vec<BioAtom>, horizon: u64 },
    StableState { horizon: u64 },
}

impl Query {
    pub fn horizon(&self) -> u64 {
        match self {
            Query::ReachAt { at, .. } => *at,
            Query::ReachWithin { horizon, .. }
            | Query::InvariantUpto { horizon, .. }
            | Query::StableState { horizon } => *horizon,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Atom {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: species `{name}/{arity}` is not declared")]
    UndeclaredSpecies { line: usize, name: String, arity: usize },
    #[error("line {line}: initial facts must be ground")]
    NonGroundInit { line: usize },
    #[error("line {line}: rule delay must be at least 1")]
    ZeroDelay { line: usize },
    #[error("line {line}: rule variable `{name}` occurs only on the right")]
    UnboundRuleVar { line: usize, name: String },
    #[error("line {line}: rule `{name}` needs a nonempty left side")]
    EmptyLeft { line: usize, name: String },
    #[error("query time {t} exceeds the horizon {horizon}")]
    HorizonExceeded { t: u64, horizon: u64 },
    #[error("stable-state queries need a variable-free model")]
    StableNeedsGroundRules,
}

impl BioModel {
    /// The symbol table induced by the declarations: species as predicates,
    /// declared constants as constants.
    pub fn symbol_table(&self) -> SymbolTable {
        let mut table = SymbolTable::new();
        for s in &self.species {
            table.declare_predicate(&s.name, s.arity);
        }
        for c in &self.constants {
            table.constants.insert(c.clone());
        }
        table
    }

    pub fn species_arity(&self, name: &str) -> Option<usize> {
        self.species.iter().find(|s| s.name == name).map(|s| s.arity)
    }

    pub fn has_rule_variables(&self) -> bool {
        self.rules.iter().any(|r| {
            r.left
                .iter()
                .chain(r.right.iter())
                .any(|(_, args)| args.iter().any(|t| !t.is_ground()))
        })
    }

    /// Every ground atom mentioned anywhere in the model.
    pub fn ground_atoms(&self) -> Vec<BioAtom> {
        let mut out: BTreeSet<BioAtom> = BTreeSet::new();
        for (p, args) in self
            .init
            .iter()
            .chain(self.rules.iter().flat_map(|r| r.left.iter().chain(r.right.iter())))
        {
            if args.iter().all(Term::is_ground) {
                out.insert((p.clone(), args.clone()));
            }
        }
        out.into_iter().collect()
    }
}

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<BioModel, ModelError> {
    let mut model = BioModel {
        species: Vec::new(),
        constants: BTreeSet::new(),
        delay_constants: BTreeMap::new(),
        init: Vec::new(),
        rules: Vec::new(),
        frame: true,
    };

    // declarations first so rule atoms see the full vocabulary
    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (head, rest) = split_head(line);
        let lineno = no + 1;
        match head {
            "species" => {
                for decl in rest.split_whitespace() {
                    let (name, arity) = match decl.split_once('/') {
                        Some((n, a)) => (
                            n.to_string(),
                            a.parse().map_err(|_| ModelError::Malformed {
                                line: lineno,
                                message: format!("bad arity in `{decl}`"),
                            })?,
                        ),
                        None => (decl.to_string(), 0),
                    };
                    model.species.push(Species { name, arity });
                }
            }
            "const" => {
                if let Some((name, value)) = rest.split_once('=') {
                    let name = name.trim().to_string();
                    let value = value.trim().parse().map_err(|_| ModelError::Malformed {
                        line: lineno,
                        message: "delay constants are decimal naturals".into(),
                    })?;
                    model.delay_constants.insert(name, value);
                } else {
                    for name in rest.split_whitespace() {
                        model.constants.insert(name.to_string());
                    }
                }
            }
            "option" => {
                let words: Vec<&str> = rest.split_whitespace().collect();
                match words.as_slice() {
                    ["frame", "on"] => model.frame = true,
                    ["frame", "off"] => model.frame = false,
                    _ => {
                        return Err(ModelError::Malformed {
                            line: lineno,
                            message: format!("unknown option `{rest}`"),
                        })
                    }
                }
            }
            "init" | "rule" => {}
            other => {
                return Err(ModelError::Malformed {
                    line: lineno,
                    message: format!("unknown directive `{other}`"),
                })
            }
        }
    }

    let table = model.symbol_table();
    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (head, rest) = split_head(line);
        let lineno = no + 1;
        match head {
            "init" => {
                let atoms = split_atom_list(rest, &table, &model, lineno)?;
                for (_, args) in &atoms {
                    if !args.iter().all(Term::is_ground) {
                        return Err(ModelError::NonGroundInit { line: lineno });
                    }
                }
                model.init.extend(atoms);
            }
            "rule" => {
                let rule = parse_rule(rest, &table, &model, lineno)?;
                model.rules.push(rule);
            }
            _ => {}
        }
    }
    Ok(model)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn split_head(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim()),
        None => (line, ""),
    }
}

/// Parse one atom such as `pres(a)` against the model vocabulary.
pub fn parse_atom(
    text: &str,
    table: &SymbolTable,
    model: &BioModel,
    line: usize,
) -> Result<BioAtom, ModelError> {
    let formula = crate::syntax::parse_formula(text, table, &crate::domain::TEMPORAL)
        .map_err(|source| ModelError::Atom { line, source })?;
    match formula {
        Formula::Atom(p, args) => {
            match model.species_arity(&p) {
                Some(arity) if arity == args.len() => Ok((p, args)),
                _ => Err(ModelError::UndeclaredSpecies { line, name: p, arity: args.len() }),
            }
        }
        _ => Err(ModelError::Malformed { line, message: "expected an atom".into() }),
    }
}

fn parse_rule(
    rest: &str,
    table: &SymbolTable,
    model: &BioModel,
    line: usize,
) -> Result<BioRule, ModelError> {
    let (name, body) = rest.split_once(':').ok_or_else(|| ModelError::Malformed {
        line,
        message: "expected `rule NAME: L => R delay D`".into(),
    })?;
    let name = name.trim().to_string();

    let (body, delay_text) = body.rsplit_once("delay").ok_or_else(|| ModelError::Malformed {
        line,
        message: "missing `delay D`".into(),
    })?;
    let delay_text = delay_text.trim();
    let delay = match delay_text.parse::<u64>() {
        Ok(d) => d,
        Err(_) => {
            *model.delay_constants.get(delay_text).ok_or_else(|| ModelError::Malformed {
                line,
                message: format!("unknown delay constant `{delay_text}`"),
            })?
        }
    };
    if delay == 0 {
        return Err(ModelError::ZeroDelay { line });
    }

    let (lhs, rhs, inhibition) = if let Some((l, r)) = body.split_once("=|") {
        (l, r, true)
    } else if let Some((l, r)) = body.split_once("=>") {
        (l, r, false)
    } else {
        return Err(ModelError::Malformed {
            line,
            message: "expected `=>` or `=|` between the rule sides".into(),
        });
    };

    let left = split_atom_list(lhs, table, model, line)?;
    let right = split_atom_list(rhs, table, model, line)?;
    if left.is_empty() {
        return Err(ModelError::EmptyLeft { line, name });
    }

    // every right-side variable must occur on the left
    let vars = |atoms: &[BioAtom]| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, args) in atoms {
            for t in args {
                collect_vars(t, &mut out);
            }
        }
        out
    };
    let lvars = vars(&left);
    for v in vars(&right) {
        if !lvars.contains(&v) {
            return Err(ModelError::UnboundRuleVar { line, name: v });
        }
    }

    let kind = if inhibition {
        RuleKind::Inhibition
    } else if left.iter().all(|a| right.contains(a)) {
        RuleKind::Activation
    } else {
        RuleKind::Custom
    };
    Ok(BioRule { name, kind, delay, left, right })
}

/// Parse a comma-separated atom list, respecting nesting.
pub fn split_atom_list(
    text: &str,
    table: &SymbolTable,
    model: &BioModel,
    line: usize,
) -> Result<Vec<BioAtom>, ModelError> {
    let mut out = Vec::new();
    for part in split_top_commas(text) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(parse_atom(part, table, model, line)?);
    }
    Ok(out)
}

/// Split on commas outside parentheses and brackets.
fn split_top_commas(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn collect_vars(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Free(n) => {
            out.insert(n.clone());
        }
        Term::App(_, args) => {
            for a in args {
                collect_vars(a, out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CHAIN: &str = "\
species pres/1
const a b c
init pres(a)
rule act_ab: pres(a) => pres(a), pres(b) delay 1
rule act_bc: pres(b) => pres(b), pres(c) delay 1
";

    #[test]
    fn parses_activation_chain() {
        let m = parse_model(CHAIN).unwrap();
        assert_eq!(m.rules.len(), 2);
        assert_eq!(m.rules[0].kind, RuleKind::Activation);
        assert_eq!(m.rules[0].delay, 1);
        assert_eq!(m.init.len(), 1);
        assert!(m.frame);
    }

    #[test]
    fn parses_ctc_rule_as_custom() {
        let src = "\
species C/4
const breast blood
const d = 3
init C(1, breast, 1, [EPCAM])
rule intrav: C(n, breast, f, [EPCAM]) => C(n, blood, 1, [EPCAM]) delay d
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.rules[0].kind, RuleKind::Custom);
        assert_eq!(m.rules[0].delay, 3);
        // n and f are rule variables
        let (_, args) = &m.rules[0].left[0];
        assert!(matches!(args[0], Term::Free(_)));
        assert!(matches!(args[2], Term::Free(_)));
        assert!(m.has_rule_variables());
    }

    #[test]
    fn inhibition_syntax() {
        let src = "\
species pres/1
const a b
init pres(a), pres(b)
rule inh: pres(a) =| pres(b) delay 1
";
        let m = parse_model(src).unwrap();
        assert_eq!(m.rules[0].kind, RuleKind::Inhibition);
        assert_eq!(m.rules[0].right, vec![("pres".to_string(), vec![Term::Const("b".into())])]);
    }

    #[test]
    fn undeclared_species_rejected() {
        let src = "\
species pres/1
const a
init gone(a)
";
        assert!(matches!(parse_model(src).unwrap_err(), ModelError::UndeclaredSpecies { .. }));
    }

    #[test]
    fn ground_init_enforced() {
        let src = "\
species pres/1
init pres(x)
";
        assert!(matches!(parse_model(src).unwrap_err(), ModelError::NonGroundInit { .. }));
    }

    #[test]
    fn zero_delay_rejected() {
        let src = "\
species pres/1
const a
init pres(a)
rule r: pres(a) => pres(a) delay 0
";
        assert!(matches!(parse_model(src).unwrap_err(), ModelError::ZeroDelay { .. }));
    }

    #[test]
    fn right_only_variables_rejected() {
        let src = "\
species p/1
const a
init p(a)
rule r: p(a) => p(x) delay 1
";
        assert!(matches!(parse_model(src).unwrap_err(), ModelError::UnboundRuleVar { .. }));
    }
}
