//! Text formats owned by the kernel: the structured proof serialization,
//! the human-readable proof tree, and sequent files.
//!
//! Structured proofs are s-expressions, one record per node:
//! `(rule (principal) [witness] children...)` with principals `(goal)`,
//! `(delta N)`, `(gamma N)` and witnesses `(split N...)`, `(term "...")`,
//! `(world "...")`. Serialization is deterministic: identical proofs print
//! byte-identically.

use crate::domain::{render_world, ConstraintDomain};
use crate::syntax::parse::{parse_term, parse_world, ParseError, SymbolTable};
use crate::syntax::print::{print_formula, print_term};
use crate::syntax::{Judgment, WorldExpr};

use super::{rule_premises, HyllSequent, Principal, ProofNode, RuleId, Witness};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Formula {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("proof text at byte {pos}: {message}")]
    Proof { pos: usize, message: String },
}

// ---------------------------------------------------------------------------
// structured proof output

pub fn emit_structured(proof: &ProofNode, domain: &dyn ConstraintDomain) -> String {
    let mut out = String::new();
    emit_node(proof, domain, 0, &mut out);
    out.push('\n');
    out
}

fn emit_node(node: &ProofNode, domain: &dyn ConstraintDomain, indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
    out.push('(');
    out.push_str(node.rule.name());
    out.push(' ');
    match node.principal {
        Principal::Goal => out.push_str("(goal)"),
        Principal::Delta(i) => out.push_str(&format!("(delta {i})")),
        Principal::Gamma(i) => out.push_str(&format!("(gamma {i})")),
    }
    match &node.witness {
        None => {}
        Some(Witness::Split(ix)) => {
            out.push_str(" (split");
            for i in ix {
                out.push_str(&format!(" {i}"));
            }
            out.push(')');
        }
        Some(Witness::Term(t)) => {
            out.push_str(&format!(" (term \"{}\")", print_term(t)));
        }
        Some(Witness::World(w)) => {
            out.push_str(&format!(" (world \"{}\")", render_world(domain, w)));
        }
    }
    for child in &node.premises {
        out.push('\n');
        emit_node(child, domain, indent + 1, out);
    }
    out.push(')');
}

// ---------------------------------------------------------------------------
// structured proof input

struct SexpParser<'a> {
    src: &'a [u8],
    at: usize,
}

impl<'a> SexpParser<'a> {
    fn skip_ws(&mut self) {
        while self.at < self.src.len() {
            match self.src[self.at] {
                b' ' | b'\t' | b'\r' | b'\n' => self.at += 1,
                b'#' => {
                    while self.at < self.src.len() && self.src[self.at] != b'\n' {
                        self.at += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> TextError {
        TextError::Proof { pos: self.at, message: message.into() }
    }

    fn expect(&mut self, c: u8) -> Result<(), TextError> {
        self.skip_ws();
        if self.at < self.src.len() && self.src[self.at] == c {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn word(&mut self) -> Result<String, TextError> {
        self.skip_ws();
        let start = self.at;
        while self.at < self.src.len()
            && (self.src[self.at].is_ascii_alphanumeric() || self.src[self.at] == b'_')
        {
            self.at += 1;
        }
        if start == self.at {
            return Err(self.err("expected a word"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.at]).into_owned())
    }

    fn quoted(&mut self) -> Result<String, TextError> {
        self.expect(b'"')?;
        let start = self.at;
        while self.at < self.src.len() && self.src[self.at] != b'"' {
            self.at += 1;
        }
        if self.at == self.src.len() {
            return Err(self.err("unterminated string"));
        }
        let s = String::from_utf8_lossy(&self.src[start..self.at]).into_owned();
        self.at += 1;
        Ok(s)
    }

    fn peek_close(&mut self) -> bool {
        self.skip_ws();
        self.at < self.src.len() && self.src[self.at] == b')'
    }
}

pub fn parse_structured(
    text: &str,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
) -> Result<ProofNode, TextError> {
    let mut p = SexpParser { src: text.as_bytes(), at: 0 };
    let node = parse_node(&mut p, table, domain)?;
    p.skip_ws();
    if p.at != p.src.len() {
        return Err(p.err("trailing input after proof"));
    }
    Ok(node)
}

fn parse_node(
    p: &mut SexpParser,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
) -> Result<ProofNode, TextError> {
    p.expect(b'(')?;
    let rule_name = p.word()?;
    let rule = RuleId::from_name(&rule_name)
        .ok_or_else(|| p.err(format!("unknown rule `{rule_name}`")))?;

    p.expect(b'(')?;
    let kind = p.word()?;
    let principal = match kind.as_str() {
        "goal" => Principal::Goal,
        "delta" | "gamma" => {
            let n = p.word()?;
            let i: usize =
                n.parse().map_err(|_| p.err(format!("bad position `{n}`")))?;
            if kind == "delta" {
                Principal::Delta(i)
            } else {
                Principal::Gamma(i)
            }
        }
        other => return Err(p.err(format!("unknown principal `{other}`"))),
    };
    p.expect(b')')?;

    let mut witness = None;
    p.skip_ws();
    if p.at < p.src.len() && p.src[p.at] == b'(' {
        // lookahead: witness or first child?
        let save = p.at;
        p.at += 1;
        let word = p.word()?;
        match word.as_str() {
            "split" => {
                let mut ix = Vec::new();
                while !p.peek_close() {
                    let n = p.word()?;
                    ix.push(n.parse().map_err(|_| p.err(format!("bad index `{n}`")))?);
                }
                p.expect(b')')?;
                witness = Some(Witness::Split(ix));
            }
            "term" => {
                let s = p.quoted()?;
                p.expect(b')')?;
                let t = parse_term(&s, table, domain)
                    .map_err(|e| p.err(format!("bad term witness: {e}")))?;
                witness = Some(Witness::Term(t));
            }
            "world" => {
                let s = p.quoted()?;
                p.expect(b')')?;
                let w = parse_world(&s, table, domain)
                    .map_err(|e| p.err(format!("bad world witness: {e}")))?;
                witness = Some(Witness::World(w));
            }
            _ => {
                p.at = save;
            }
        }
    }

    let mut premises = Vec::new();
    loop {
        p.skip_ws();
        if p.peek_close() {
            p.expect(b')')?;
            break;
        }
        premises.push(parse_node(p, table, domain)?);
    }
    Ok(ProofNode { rule, principal, witness, premises })
}

// ---------------------------------------------------------------------------
// human-readable proof tree

/// Indented rule tree with the principal judgment of each step; requires a
/// valid proof of `seq`, since premise sequents are recomputed on the way
/// down. Worlds print normalized.
pub fn emit_text(
    proof: &ProofNode,
    seq: &HyllSequent,
    domain: &dyn ConstraintDomain,
) -> Result<String, String> {
    let mut out = String::new();
    let counter = super::eigen_floor(seq);
    emit_text_node(proof, seq, domain, counter, 0, &mut out)?;
    Ok(out)
}

fn judgment_text(j: &Judgment, domain: &dyn ConstraintDomain) -> String {
    format!("{} @ {}", print_formula(&j.formula), render_world(domain, &j.world))
}

fn emit_text_node(
    node: &ProofNode,
    seq: &HyllSequent,
    domain: &dyn ConstraintDomain,
    counter: usize,
    indent: usize,
    out: &mut String,
) -> Result<(), String> {
    let principal = match node.principal {
        Principal::Goal => seq.goal().clone(),
        Principal::Delta(i) => {
            seq.delta().get(i).cloned().ok_or("principal out of range")?
        }
        Principal::Gamma(i) => seq.gamma_at(i).cloned().ok_or("principal out of range")?,
    };
    for _ in 0..indent {
        out.push_str("  ");
    }
    out.push_str(node.rule.name());
    out.push_str(": ");
    out.push_str(&judgment_text(&principal, domain));
    out.push('\n');
    let premises = rule_premises(domain, node.rule, seq, node.principal, node.witness.as_ref(), counter)
        .map_err(|e| e.to_string())?;
    let child_counter =
        if super::rule_consumes_eigen(node.rule) { counter + 1 } else { counter };
    for (child, premise) in node.premises.iter().zip(premises.iter()) {
        emit_text_node(child, premise, domain, child_counter, indent + 1, out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sequent files

/// A parsed sequent file: declarations plus the sequent.
pub struct SequentFile {
    pub sequent: HyllSequent,
    pub table: SymbolTable,
    pub domain: &'static dyn ConstraintDomain,
}

/// Line-oriented format:
///
/// ```text
/// # comment
/// domain temporal
/// const a b
/// fun f/2
/// pred pres/1
/// worldvar u
/// gamma: FORMULA [@ WORLD]
/// delta: FORMULA [@ WORLD]
/// goal: FORMULA [@ WORLD]
/// ```
///
/// A missing `@ WORLD` defaults to `iota`. Exactly one `goal:` line is
/// required.
pub fn parse_sequent_file(text: &str) -> Result<SequentFile, TextError> {
    let mut table = SymbolTable::new();
    let mut domain: &'static dyn ConstraintDomain = &crate::domain::TEMPORAL;
    let mut gamma: Vec<Judgment> = Vec::new();
    let mut delta: Vec<Judgment> = Vec::new();
    let mut goal: Option<Judgment> = None;

    // two passes: declarations first so judgment lines see the whole table
    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (head, rest) = split_head(line);
        match head {
            "domain" => {
                domain = crate::domain::domain_by_name(rest.trim()).map_err(|e| {
                    TextError::Malformed { line: no + 1, message: e.to_string() }
                })?;
            }
            "const" => {
                for name in rest.split_whitespace() {
                    table.constants.insert(name.to_string());
                }
            }
            "fun" | "pred" => {
                for decl in rest.split_whitespace() {
                    let (name, arity) = parse_arity(decl, no + 1)?;
                    if head == "fun" {
                        table.declare_function(name, arity);
                    } else {
                        table.declare_predicate(name, arity);
                    }
                }
            }
            "worldvar" => {
                for name in rest.split_whitespace() {
                    table.declare_world_var(name);
                }
            }
            _ => {}
        }
    }

    for (no, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (head, rest) = split_head(line);
        match head {
            "domain" | "const" | "fun" | "pred" | "worldvar" => {}
            "gamma:" | "delta:" | "goal:" => {
                let j = parse_judgment_line(rest, &table, domain, no + 1)?;
                match head {
                    "gamma:" => gamma.push(j),
                    "delta:" => delta.push(j),
                    _ => {
                        if goal.is_some() {
                            return Err(TextError::Malformed {
                                line: no + 1,
                                message: "more than one goal".into(),
                            });
                        }
                        goal = Some(j);
                    }
                }
            }
            other => {
                return Err(TextError::Malformed {
                    line: no + 1,
                    message: format!("unknown directive `{other}`"),
                })
            }
        }
    }

    let goal = goal.ok_or(TextError::Malformed { line: 0, message: "missing goal".into() })?;
    Ok(SequentFile { sequent: HyllSequent::new(gamma, delta, goal), table, domain })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn split_head(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], &line[i..]),
        None => (line, ""),
    }
}

fn parse_arity(decl: &str, line: usize) -> Result<(String, usize), TextError> {
    let (name, arity) = decl.split_once('/').ok_or_else(|| TextError::Malformed {
        line,
        message: format!("expected NAME/ARITY, found `{decl}`"),
    })?;
    let arity = arity.parse().map_err(|_| TextError::Malformed {
        line,
        message: format!("bad arity in `{decl}`"),
    })?;
    Ok((name.to_string(), arity))
}

/// `FORMULA [@ WORLD]`; the `@` separates the judgment world from the
/// formula (the formula-level satisfaction connective is spelled `at`).
pub fn parse_judgment_line(
    text: &str,
    table: &SymbolTable,
    domain: &dyn ConstraintDomain,
    line: usize,
) -> Result<Judgment, TextError> {
    let (fsrc, wsrc) = match text.rfind('@') {
        Some(i) => (&text[..i], Some(&text[i + 1..])),
        None => (text, None),
    };
    let formula = crate::syntax::parse_formula(fsrc.trim(), table, domain)
        .map_err(|source| TextError::Formula { line, source })?;
    let world = match wsrc {
        Some(w) => parse_world(w.trim(), table, domain)
            .map_err(|source| TextError::Formula { line, source })?,
        None => WorldExpr::identity(),
    };
    Ok(Judgment::new(formula, world))
}

/// Deterministic display of a sequent (contexts in sorted order).
pub fn render_sequent(seq: &HyllSequent, domain: &dyn ConstraintDomain) -> String {
    let gamma: Vec<String> = seq.gamma().map(|j| judgment_text(j, domain)).collect();
    let delta: Vec<String> = seq.delta().iter().map(|j| judgment_text(j, domain)).collect();
    format!("{}; {} |- {}", gamma.join(", "), delta.join(", "), judgment_text(seq.goal(), domain))
}

/// True when the formula tree is free of surface modal sugar, which the
/// kernel does not accept.
pub fn sugar_free(seq: &HyllSequent) -> bool {
    seq.gamma()
        .chain(seq.delta().iter())
        .chain(std::iter::once(seq.goal()))
        .all(|j| crate::syntax::modal_free(&j.formula))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TEMPORAL;

    #[test]
    fn structured_roundtrip() {
        let src = "\
const a b
delta: pres(a) @ 0
goal: pres(a) @ 0
";
        let file = parse_sequent_file(src).unwrap();
        let proof = ProofNode::leaf(RuleId::Init, Principal::Delta(0));
        let text = emit_structured(&proof, file.domain);
        let back = parse_structured(&text, &file.table, file.domain).unwrap();
        assert_eq!(proof, back);
        assert_eq!(text, emit_structured(&back, file.domain));
    }

    #[test]
    fn structured_with_witnesses_roundtrips() {
        let table = SymbolTable::new().with_constants(["c"]);
        let proof = ProofNode::node(
            RuleId::TensorR,
            Principal::Goal,
            Some(Witness::Split(vec![0, 2])),
            vec![
                ProofNode::node(
                    RuleId::ExistsR,
                    Principal::Goal,
                    Some(Witness::Term(crate::syntax::Term::Const("c".into()))),
                    vec![ProofNode::leaf(RuleId::Init, Principal::Delta(0))],
                ),
                ProofNode::node(
                    RuleId::ExistsWorldR,
                    Principal::Goal,
                    Some(Witness::World(WorldExpr::nat(3))),
                    vec![ProofNode::leaf(RuleId::TopR, Principal::Goal)],
                ),
            ],
        );
        let text = emit_structured(&proof, &TEMPORAL);
        let back = parse_structured(&text, &table, &TEMPORAL).unwrap();
        assert_eq!(proof, back);
    }

    #[test]
    fn text_tree_for_init() {
        let src = "\
delta: p @ 2
goal: p @ 2
";
        let file = parse_sequent_file(src).unwrap();
        let proof = ProofNode::leaf(RuleId::Init, Principal::Delta(0));
        let text = emit_text(&proof, &file.sequent, file.domain).unwrap();
        assert_eq!(text, "init: p @ 2\n");
    }

    #[test]
    fn worlds_normalize_in_output() {
        // a judgment world written 1.1 renders as 2
        let src = "goal: p @ 1.1\n";
        let file = parse_sequent_file(src).unwrap();
        assert_eq!(render_sequent(&file.sequent, file.domain), ";  |- p @ 2");
    }

    #[test]
    fn missing_goal_rejected() {
        assert!(parse_sequent_file("delta: p @ 0\n").is_err());
    }
}
