use std::fmt;

use thiserror::Error;

use super::grammar::{AsdlGrammar, Qualifier};
use super::node::{AstNode, Child, FieldValue};

/// One transition-system step.  A statement's derivation is a sequence of
/// these, consumed depth-first left-to-right.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    /// Expand the frontier field with a production (by grammar index).
    ApplyRule(usize),
    /// Fill a primitive-typed frontier field with one terminal token.
    GenToken(String),
    /// Close the frontier field: absent optional or end of sequence.
    Reduce,
}

impl fmt::Display for Action {
    /// Stream spelling: `R<idx>`, `G<token>`, `D`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ApplyRule(i) => write!(f, "R{i}"),
            Action::GenToken(s) => write!(f, "G{s}"),
            Action::Reduce => write!(f, "D"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("action {index}: {action} is not valid here: {reason}")]
    InvalidAction { index: usize, action: String, reason: String },
    #[error("parser state is already complete")]
    CompleteState,
    #[error("action sequence is an incomplete prefix")]
    IncompletePrefix,
    #[error("tree does not conform to the grammar: {0}")]
    Conformance(String),
    #[error("cannot render: {0}")]
    Render(String),
    #[error("malformed action stream: {0}")]
    MalformedStream(String),
}

/// Serializes one statement's actions as a space-separated line.
pub fn actions_to_line(actions: &[Action]) -> String {
    actions
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a line written by [`actions_to_line`].
pub fn parse_action_line(line: &str) -> Result<Vec<Action>, ActionError> {
    line.split_whitespace()
        .map(|w| {
            if w == "D" {
                Ok(Action::Reduce)
            } else if let Some(idx) = w.strip_prefix('R') {
                idx.parse::<usize>().map(Action::ApplyRule).map_err(|_| {
                    ActionError::MalformedStream(format!("bad rule index in '{w}'"))
                })
            } else if let Some(tok) = w.strip_prefix('G') {
                if tok.is_empty() {
                    Err(ActionError::MalformedStream("empty GenToken".into()))
                } else {
                    Ok(Action::GenToken(tok.to_string()))
                }
            } else {
                Err(ActionError::MalformedStream(format!("unknown action '{w}'")))
            }
        })
        .collect()
}

/// Converts a grammar-conforming tree to its unique action sequence:
/// ApplyRule at each node, GenToken per terminal, Reduce after each
/// sequence and for each absent optional.  Present optionals emit no
/// Reduce.
pub fn ast_to_actions(node: &AstNode, grammar: &AsdlGrammar) -> Result<Vec<Action>, ActionError> {
    let mut out = Vec::new();
    emit_node(node, grammar, &mut out)?;
    Ok(out)
}

fn emit_node(
    node: &AstNode,
    grammar: &AsdlGrammar,
    out: &mut Vec<Action>,
) -> Result<(), ActionError> {
    let prod = grammar
        .production_of(&node.ctor)
        .ok_or_else(|| ActionError::Conformance(format!("unknown constructor '{}'", node.ctor)))?;
    let decl = grammar.constructor(prod);
    if decl.fields.len() != node.fields.len() {
        return Err(ActionError::Conformance(format!(
            "'{}' expects {} fields, tree has {}",
            node.ctor,
            decl.fields.len(),
            node.fields.len()
        )));
    }
    out.push(Action::ApplyRule(prod));
    for (f, v) in decl.fields.iter().zip(&node.fields) {
        match (f.qual, v) {
            (Qualifier::Single, FieldValue::Single(c)) => emit_child(c, f.is_primitive(), &f.ty, grammar, out)?,
            (Qualifier::Optional, FieldValue::Optional(None)) => out.push(Action::Reduce),
            (Qualifier::Optional, FieldValue::Optional(Some(c))) => {
                emit_child(c, f.is_primitive(), &f.ty, grammar, out)?
            }
            (Qualifier::Sequence, FieldValue::Seq(cs)) => {
                for c in cs {
                    emit_child(c, f.is_primitive(), &f.ty, grammar, out)?;
                }
                out.push(Action::Reduce);
            }
            _ => {
                return Err(ActionError::Conformance(format!(
                    "field '{}' of '{}' does not match its declared qualifier",
                    f.name, node.ctor
                )))
            }
        }
    }
    Ok(())
}

fn emit_child(
    child: &Child,
    primitive: bool,
    ty: &str,
    grammar: &AsdlGrammar,
    out: &mut Vec<Action>,
) -> Result<(), ActionError> {
    match (primitive, child) {
        (true, Child::Terminal(s)) => {
            out.push(Action::GenToken(s.clone()));
            Ok(())
        }
        (false, Child::Node(n)) => {
            let prod = grammar.production_of(&n.ctor).ok_or_else(|| {
                ActionError::Conformance(format!("unknown constructor '{}'", n.ctor))
            })?;
            if grammar.constructor(prod).ty != ty {
                return Err(ActionError::Conformance(format!(
                    "'{}' has type '{}', expected '{}'",
                    n.ctor,
                    grammar.constructor(prod).ty,
                    ty
                )));
            }
            emit_node(n, grammar, out)
        }
        (true, Child::Node(_)) => Err(ActionError::Conformance(format!(
            "primitive field of type '{ty}' holds a node"
        ))),
        (false, Child::Terminal(s)) => Err(ActionError::Conformance(format!(
            "composite field of type '{ty}' holds terminal '{s}'"
        ))),
    }
}
