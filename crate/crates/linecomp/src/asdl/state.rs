use super::action::{Action, ActionError};
use super::grammar::{AsdlGrammar, Qualifier};
use super::node::{AstNode, Child, FieldValue};

/// A partially-built node: production, closed field values, and the
/// children collected so far for the open sequential field (if any).
#[derive(Debug, Clone, PartialEq)]
struct Frame {
    prod: usize,
    values: Vec<FieldValue>,
    pending: Vec<Child>,
}

/// The frontier field the next action must fill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    pub ty: String,
    pub qual: Qualifier,
    /// Children already accepted by an open sequential field.
    pub children: usize,
}

/// Actions that are legal in a state, by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidActionSet {
    /// Production indices an ApplyRule may use.
    pub rules: Vec<usize>,
    /// Whether GenToken (with any value) is legal.
    pub gen_token: bool,
    /// Whether Reduce is legal.
    pub reduce: bool,
}

impl ValidActionSet {
    pub fn contains(&self, action: &Action) -> bool {
        match action {
            Action::ApplyRule(p) => self.rules.contains(p),
            Action::GenToken(_) => self.gen_token,
            Action::Reduce => self.reduce,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && !self.gen_token && !self.reduce
    }
}

/// Incremental top-down parser state over action sequences.
///
/// The derivation starts from a virtual single field of the root type.
/// Applying a production pushes a frame whose fields are then filled
/// depth-first; completed nodes attach to their parent automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct ParserState {
    root_type: String,
    stack: Vec<Frame>,
    root: Option<AstNode>,
    steps: usize,
}

impl ParserState {
    pub fn new(root_type: impl Into<String>) -> Self {
        ParserState { root_type: root_type.into(), stack: Vec::new(), root: None, steps: 0 }
    }

    pub fn is_complete(&self) -> bool {
        self.root.is_some()
    }

    pub fn root(&self) -> Option<&AstNode> {
        self.root.as_ref()
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The open frontier field, or None when complete.
    pub fn frontier(&self, grammar: &AsdlGrammar) -> Option<Frontier> {
        if self.is_complete() {
            return None;
        }
        match self.stack.last() {
            None => Some(Frontier {
                ty: self.root_type.clone(),
                qual: Qualifier::Single,
                children: 0,
            }),
            Some(f) => {
                let decl = &grammar.constructor(f.prod).fields[f.values.len()];
                Some(Frontier { ty: decl.ty.clone(), qual: decl.qual, children: f.pending.len() })
            }
        }
    }

    /// True when the sole open frontier is the trailing `stmt* body` of a
    /// compound constructor with no children yet: the statement is a
    /// complete header.
    pub fn is_header_complete(&self, grammar: &AsdlGrammar) -> bool {
        if self.is_complete() || self.stack.len() != 1 {
            return false;
        }
        let f = &self.stack[0];
        let decl = grammar.constructor(f.prod);
        f.values.len() == decl.fields.len() - 1
            && f.pending.is_empty()
            && matches!(decl.fields.last(), Some(d) if d.qual == Qualifier::Sequence
                && d.ty == "stmt" && d.name == "body")
    }

    /// Legal next actions.  Errors with [`ActionError::CompleteState`]
    /// once the root has closed.
    pub fn valid_actions(&self, grammar: &AsdlGrammar) -> Result<ValidActionSet, ActionError> {
        let frontier = self.frontier(grammar).ok_or(ActionError::CompleteState)?;
        let primitive = AsdlGrammar::is_primitive(&frontier.ty);
        Ok(ValidActionSet {
            rules: if primitive { Vec::new() } else { grammar.productions_for(&frontier.ty).to_vec() },
            gen_token: primitive,
            reduce: matches!(frontier.qual, Qualifier::Optional | Qualifier::Sequence),
        })
    }

    /// Applies one action, returning the successor state.
    pub fn step(&self, action: &Action, grammar: &AsdlGrammar) -> Result<ParserState, ActionError> {
        let valid = self.valid_actions(grammar)?;
        if !valid.contains(action) {
            let frontier = self.frontier(grammar).unwrap();
            return Err(ActionError::InvalidAction {
                index: self.steps,
                action: action.to_string(),
                reason: format!(
                    "frontier field has type '{}' ({:?})",
                    frontier.ty, frontier.qual
                ),
            });
        }
        let mut next = self.clone();
        next.steps += 1;
        match action {
            Action::ApplyRule(p) => {
                next.stack.push(Frame { prod: *p, values: Vec::new(), pending: Vec::new() });
                next.settle(grammar);
            }
            Action::GenToken(s) => {
                next.attach(Child::Terminal(s.clone()), grammar);
                next.settle(grammar);
            }
            Action::Reduce => {
                let frame = next.stack.last_mut().expect("reduce validated against a frame");
                let decl = &grammar.constructor(frame.prod).fields[frame.values.len()];
                let closed = match decl.qual {
                    Qualifier::Optional => FieldValue::Optional(None),
                    Qualifier::Sequence => FieldValue::Seq(std::mem::take(&mut frame.pending)),
                    Qualifier::Single => unreachable!("validated"),
                };
                frame.values.push(closed);
                next.settle(grammar);
            }
        }
        Ok(next)
    }

    /// Pops every frame whose fields are all closed, attaching the built
    /// node to its parent (or the root slot).
    fn settle(&mut self, grammar: &AsdlGrammar) {
        while let Some(top) = self.stack.last() {
            let decl = grammar.constructor(top.prod);
            if top.values.len() < decl.fields.len() {
                return;
            }
            let frame = self.stack.pop().unwrap();
            let node = AstNode::new(decl.name.clone(), frame.values);
            self.attach(Child::Node(node), grammar);
        }
    }

    /// Adds a finished child to the open field of the top frame, closing
    /// single and optional fields immediately.
    fn attach(&mut self, child: Child, grammar: &AsdlGrammar) {
        match self.stack.last_mut() {
            None => match child {
                Child::Node(n) => self.root = Some(n),
                Child::Terminal(_) => unreachable!("root field is composite"),
            },
            Some(frame) => {
                let decl = &grammar.constructor(frame.prod).fields[frame.values.len()];
                match decl.qual {
                    Qualifier::Single => frame.values.push(FieldValue::Single(child)),
                    Qualifier::Optional => frame.values.push(FieldValue::Optional(Some(child))),
                    Qualifier::Sequence => frame.pending.push(child),
                }
            }
        }
    }

    /// Replays a full action sequence from the initial state.
    pub fn replay(
        root_type: &str,
        actions: &[Action],
        grammar: &AsdlGrammar,
    ) -> Result<ParserState, ActionError> {
        let mut state = ParserState::new(root_type);
        for action in actions {
            state = state.step(action, grammar)?;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::super::grammar::load_grammar;
    use super::*;

    fn pysubset() -> AsdlGrammar {
        load_grammar(crate::PYSUBSET_GRAMMAR).unwrap()
    }

    #[test]
    fn pass_completes_in_one_action() {
        let g = pysubset();
        let pass = g.production_of("Pass").unwrap();
        let state = ParserState::new("stmt").step(&Action::ApplyRule(pass), &g).unwrap();
        assert!(state.is_complete());
        assert_eq!(state.root().unwrap().ctor, "Pass");
        assert_eq!(
            state.valid_actions(&g),
            Err(ActionError::CompleteState)
        );
    }

    #[test]
    fn root_offers_all_stmt_productions() {
        let g = pysubset();
        let va = ParserState::new("stmt").valid_actions(&g).unwrap();
        assert_eq!(va.rules, g.productions_for("stmt"));
        assert!(!va.gen_token);
        assert!(!va.reduce);
    }

    #[test]
    fn gen_token_only_on_primitive_fields() {
        let g = pysubset();
        let name = g.production_of("Name").unwrap();
        let state = ParserState::new("stmt")
            .step(&Action::ApplyRule(g.production_of("Expr").unwrap()), &g)
            .unwrap()
            .step(&Action::ApplyRule(name), &g)
            .unwrap();
        let va = state.valid_actions(&g).unwrap();
        assert!(va.gen_token);
        assert!(va.rules.is_empty());
        assert!(!va.reduce);
    }

    #[test]
    fn reduce_invalid_on_single_fields() {
        let g = pysubset();
        let state = ParserState::new("stmt")
            .step(&Action::ApplyRule(g.production_of("Expr").unwrap()), &g)
            .unwrap();
        let err = state.step(&Action::Reduce, &g).unwrap_err();
        assert!(matches!(err, ActionError::InvalidAction { .. }));
    }

    #[test]
    fn header_completeness() {
        let g = pysubset();
        let state = ParserState::new("stmt")
            .step(&Action::ApplyRule(g.production_of("If").unwrap()), &g)
            .unwrap();
        assert!(!state.is_header_complete(&g));
        let state = state
            .step(&Action::ApplyRule(g.production_of("Name").unwrap()), &g)
            .unwrap()
            .step(&Action::GenToken("a".into()), &g)
            .unwrap();
        assert!(state.is_header_complete(&g));
        let done = state.step(&Action::Reduce, &g).unwrap();
        assert!(done.is_complete());
        assert!(!done.is_header_complete(&g));
    }

    #[test]
    fn sequence_children_accumulate() {
        let g = pysubset();
        let state = ParserState::new("stmt")
            .step(&Action::ApplyRule(g.production_of("Global").unwrap()), &g)
            .unwrap()
            .step(&Action::GenToken("a".into()), &g)
            .unwrap();
        let f = state.frontier(&g).unwrap();
        assert_eq!(f.children, 1);
        assert_eq!(f.qual, Qualifier::Sequence);
        let done = state
            .step(&Action::GenToken("b".into()), &g)
            .unwrap()
            .step(&Action::Reduce, &g)
            .unwrap();
        assert!(done.is_complete());
    }
}
