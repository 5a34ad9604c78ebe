use super::grammar::AsdlGrammar;

/// A child slot: either a nested node or a terminal string under a
/// primitive-typed field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Child {
    Node(AstNode),
    Terminal(String),
}

impl Child {
    pub fn node(&self) -> Option<&AstNode> {
        match self {
            Child::Node(n) => Some(n),
            Child::Terminal(_) => None,
        }
    }

    pub fn terminal(&self) -> Option<&str> {
        match self {
            Child::Terminal(s) => Some(s),
            Child::Node(_) => None,
        }
    }
}

/// A field value, mirroring the declared qualifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Single(Child),
    Optional(Option<Child>),
    Seq(Vec<Child>),
}

/// A typed tree over the grammar's constructors.  Field values are
/// positional, in the constructor's declared field order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub ctor: String,
    pub fields: Vec<FieldValue>,
}

impl AstNode {
    pub fn new(ctor: impl Into<String>, fields: Vec<FieldValue>) -> Self {
        AstNode { ctor: ctor.into(), fields }
    }

    pub fn leaf(ctor: impl Into<String>) -> Self {
        AstNode { ctor: ctor.into(), fields: Vec::new() }
    }

    /// S-expression rendering: `(Ctor field=value ...)` with `~` for
    /// absent optionals and `[...]` for sequences.
    pub fn to_sexp(&self, grammar: &AsdlGrammar) -> String {
        fn child(c: &Child, g: &AsdlGrammar, out: &mut String) {
            match c {
                Child::Node(n) => out.push_str(&n.to_sexp(g)),
                Child::Terminal(s) => out.push_str(s),
            }
        }
        let mut out = String::new();
        out.push('(');
        out.push_str(&self.ctor);
        let decl = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let name = self
                    .production_field_name(grammar, i)
                    .unwrap_or_else(|| format!("f{i}"));
                (name, f)
            })
            .collect::<Vec<_>>();
        for (name, value) in decl {
            out.push(' ');
            out.push_str(&name);
            out.push('=');
            match value {
                FieldValue::Single(c) => child(c, grammar, &mut out),
                FieldValue::Optional(None) => out.push('~'),
                FieldValue::Optional(Some(c)) => child(c, grammar, &mut out),
                FieldValue::Seq(cs) => {
                    out.push('[');
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            out.push(' ');
                        }
                        child(c, grammar, &mut out);
                    }
                    out.push(']');
                }
            }
        }
        out.push(')');
        out
    }

    fn production_field_name(&self, grammar: &AsdlGrammar, i: usize) -> Option<String> {
        let prod = grammar.production_of(&self.ctor)?;
        grammar.constructor(prod).fields.get(i).map(|f| f.name.clone())
    }
}

/// Shorthand constructors used by the parser and tests.
pub mod build {
    use super::*;

    pub fn single(n: AstNode) -> FieldValue {
        FieldValue::Single(Child::Node(n))
    }

    pub fn term(s: impl Into<String>) -> FieldValue {
        FieldValue::Single(Child::Terminal(s.into()))
    }

    pub fn opt(n: Option<AstNode>) -> FieldValue {
        FieldValue::Optional(n.map(Child::Node))
    }

    pub fn opt_term(s: Option<String>) -> FieldValue {
        FieldValue::Optional(s.map(Child::Terminal))
    }

    pub fn seq(ns: Vec<AstNode>) -> FieldValue {
        FieldValue::Seq(ns.into_iter().map(Child::Node).collect())
    }

    pub fn term_seq<S: Into<String>>(ss: Vec<S>) -> FieldValue {
        FieldValue::Seq(ss.into_iter().map(|s| Child::Terminal(s.into())).collect())
    }
}
