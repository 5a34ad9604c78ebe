//! Abstract grammar machinery: ASDL loading, trees, and the transition
//! system that builds trees one action at a time.
//!
//! A derivation is a sequence of actions applied to a [`ParserState`]:
//!
//! * `ApplyRule(p)` expands the frontier field with production `p`,
//! * `GenToken(s)` fills a primitive frontier field with the terminal `s`,
//! * `Reduce` closes a sequence field or marks an optional field absent.
//!
//! Production indices follow textual order in the grammar file, so the
//! action vocabulary is stable as long as the file does not change.

mod action;
mod grammar;
mod node;
mod render;
mod rollout;
mod state;

pub use action::{actions_to_line, ast_to_actions, parse_action_line, Action, ActionError};
pub use grammar::{load_grammar, AsdlGrammar, Constructor, FieldDecl, GrammarError, Qualifier};
pub use node::{build, AstNode, Child, FieldValue};
pub use render::render;
pub use rollout::random_rollout;
pub use state::{ParserState, ValidActionSet};

use crate::pycorpus::Token;

/// Renders the statement an action prefix determines, if any.
///
/// A complete derivation renders directly. A derivation that has fixed a
/// compound header and is waiting for body statements renders as the bare
/// header: the body is closed with a placeholder `pass` that is stripped
/// from the surface form. Anything else is an unusable prefix.
pub fn finalize_actions(
    grammar: &AsdlGrammar,
    root_type: &str,
    actions: &[Action],
) -> Result<Vec<Token>, ActionError> {
    let state = ParserState::replay(root_type, actions, grammar)?;
    if state.is_complete() {
        let root = state.root().ok_or(ActionError::IncompletePrefix)?;
        return render(root, grammar);
    }
    if !state.is_header_complete(grammar) {
        return Err(ActionError::IncompletePrefix);
    }
    let pass = grammar
        .production_of("Pass")
        .ok_or_else(|| ActionError::Render("grammar has no Pass statement".into()))?;
    let closed = state
        .step(&Action::ApplyRule(pass), grammar)?
        .step(&Action::Reduce, grammar)?;
    let root = closed.root().ok_or(ActionError::IncompletePrefix)?;
    let mut tokens = render(root, grammar)?;
    match tokens.pop() {
        Some(t) if t.text == "pass" => Ok(tokens),
        _ => Err(ActionError::Render("placeholder body went missing".into())),
    }
}
