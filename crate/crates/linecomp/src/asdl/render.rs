use super::action::ActionError;
use super::grammar::AsdlGrammar;
use super::node::{AstNode, Child, FieldValue};
use crate::pycorpus::{classify_token_text, marker, Token};

fn rerr<T>(msg: impl Into<String>) -> Result<T, ActionError> {
    Err(ActionError::Render(msg.into()))
}

/// Field accessors that fail with a render error instead of panicking,
/// so malformed trees are reported rather than crashing.
struct N<'a>(&'a AstNode);

impl<'a> N<'a> {
    fn field(&self, i: usize) -> Result<&'a FieldValue, ActionError> {
        self.0.fields.get(i).ok_or_else(|| {
            ActionError::Render(format!("'{}' is missing field {i}", self.0.ctor))
        })
    }

    fn node(&self, i: usize) -> Result<&'a AstNode, ActionError> {
        match self.field(i)? {
            FieldValue::Single(Child::Node(n)) => Ok(n),
            _ => rerr(format!("'{}' field {i}: expected node", self.0.ctor)),
        }
    }

    fn term(&self, i: usize) -> Result<&'a str, ActionError> {
        match self.field(i)? {
            FieldValue::Single(Child::Terminal(s)) => Ok(s),
            _ => rerr(format!("'{}' field {i}: expected terminal", self.0.ctor)),
        }
    }

    fn opt_node(&self, i: usize) -> Result<Option<&'a AstNode>, ActionError> {
        match self.field(i)? {
            FieldValue::Optional(None) => Ok(None),
            FieldValue::Optional(Some(Child::Node(n))) => Ok(Some(n)),
            _ => rerr(format!("'{}' field {i}: expected optional node", self.0.ctor)),
        }
    }

    fn opt_term(&self, i: usize) -> Result<Option<&'a str>, ActionError> {
        match self.field(i)? {
            FieldValue::Optional(None) => Ok(None),
            FieldValue::Optional(Some(Child::Terminal(s))) => Ok(Some(s)),
            _ => rerr(format!("'{}' field {i}: expected optional terminal", self.0.ctor)),
        }
    }

    fn seq(&self, i: usize) -> Result<&'a [Child], ActionError> {
        match self.field(i)? {
            FieldValue::Seq(cs) => Ok(cs),
            _ => rerr(format!("'{}' field {i}: expected sequence", self.0.ctor)),
        }
    }

    fn node_seq(&self, i: usize) -> Result<Vec<&'a AstNode>, ActionError> {
        self.seq(i)?
            .iter()
            .map(|c| c.node().ok_or_else(|| {
                ActionError::Render(format!("'{}' field {i}: terminal in node sequence", self.0.ctor))
            }))
            .collect()
    }
}

/// Renders a tree to its surface token sequence (without `<eol>`).
///
/// Templates are fixed per constructor; `docs/grammar.md` documents them.
/// A compound statement with an empty body renders as its header line;
/// a non-empty body renders inline, `;`-separated, after the colon.
pub fn render(node: &AstNode, grammar: &AsdlGrammar) -> Result<Vec<Token>, ActionError> {
    if grammar.production_of(&node.ctor).is_none() {
        return rerr(format!("unknown constructor '{}'", node.ctor));
    }
    let mut texts = Vec::new();
    emit_stmt(node, grammar, &mut texts)?;
    Ok(texts
        .into_iter()
        .map(|t| {
            let kind = classify_token_text(&t);
            Token::new(t, kind)
        })
        .collect())
}

fn kw(out: &mut Vec<String>, s: &str) {
    out.push(s.to_string());
}

fn emit_body(body: &[Child], g: &AsdlGrammar, out: &mut Vec<String>) -> Result<(), ActionError> {
    for (i, c) in body.iter().enumerate() {
        if i > 0 {
            kw(out, ";");
        }
        match c {
            Child::Node(n) => emit_stmt(n, g, out)?,
            Child::Terminal(_) => return rerr("terminal in statement body"),
        }
    }
    Ok(())
}

fn emit_header(
    n: &N,
    body_idx: usize,
    g: &AsdlGrammar,
    out: &mut Vec<String>,
) -> Result<(), ActionError> {
    kw(out, ":");
    emit_body(n.seq(body_idx)?, g, out)
}

fn emit_dotted(name: &str, out: &mut Vec<String>) {
    // Dotted module paths are stored as one terminal and split on render.
    let mut rest = name;
    while let Some(stripped) = rest.strip_prefix('.') {
        kw(out, ".");
        rest = stripped;
    }
    if rest.is_empty() {
        return;
    }
    for (i, part) in rest.split('.').enumerate() {
        if i > 0 {
            kw(out, ".");
        }
        out.push(part.to_string());
    }
}

fn emit_alias(node: &AstNode, out: &mut Vec<String>) -> Result<(), ActionError> {
    let n = N(node);
    if node.ctor != "Alias" {
        return rerr(format!("expected Alias, found '{}'", node.ctor));
    }
    emit_dotted(n.term(0)?, out);
    if let Some(asname) = n.opt_term(1)? {
        kw(out, "as");
        out.push(asname.to_string());
    }
    Ok(())
}

fn emit_stmt(node: &AstNode, g: &AsdlGrammar, out: &mut Vec<String>) -> Result<(), ActionError> {
    let n = N(node);
    match node.ctor.as_str() {
        "FunctionDef" => {
            kw(out, "def");
            out.push(n.term(0)?.to_string());
            let args = n.node(1)?;
            if args.ctor != "Arguments" {
                return rerr("FunctionDef args must be Arguments");
            }
            kw(out, "(");
            for (i, p) in N(args).node_seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                let pn = N(p);
                if p.ctor != "Arg" {
                    return rerr("parameter must be Arg");
                }
                out.push(pn.term(0)?.to_string());
                if let Some(d) = pn.opt_node(1)? {
                    kw(out, "=");
                    emit_expr(d, g, out)?;
                }
            }
            kw(out, ")");
            emit_header(&n, 2, g, out)
        }
        "ClassDef" => {
            kw(out, "class");
            out.push(n.term(0)?.to_string());
            let bases = n.node_seq(1)?;
            if !bases.is_empty() {
                kw(out, "(");
                for (i, b) in bases.iter().enumerate() {
                    if i > 0 {
                        kw(out, ",");
                    }
                    emit_expr(b, g, out)?;
                }
                kw(out, ")");
            }
            emit_header(&n, 2, g, out)
        }
        "If" | "Elif" | "While" => {
            kw(out, match node.ctor.as_str() {
                "If" => "if",
                "Elif" => "elif",
                _ => "while",
            });
            emit_expr(n.node(0)?, g, out)?;
            emit_header(&n, 1, g, out)
        }
        "Else" => {
            kw(out, "else");
            emit_header(&n, 0, g, out)
        }
        "For" => {
            kw(out, "for");
            emit_expr(n.node(0)?, g, out)?;
            kw(out, "in");
            emit_expr(n.node(1)?, g, out)?;
            emit_header(&n, 2, g, out)
        }
        "Try" => {
            kw(out, "try");
            emit_header(&n, 0, g, out)
        }
        "Finally" => {
            kw(out, "finally");
            emit_header(&n, 0, g, out)
        }
        "Except" => {
            kw(out, "except");
            if let Some(ty) = n.opt_node(0)? {
                emit_expr(ty, g, out)?;
            }
            if let Some(name) = n.opt_node(1)? {
                kw(out, "as");
                emit_expr(name, g, out)?;
            }
            emit_header(&n, 2, g, out)
        }
        "With" => {
            kw(out, "with");
            emit_expr(n.node(0)?, g, out)?;
            if let Some(alias) = n.opt_node(1)? {
                kw(out, "as");
                emit_expr(alias, g, out)?;
            }
            emit_header(&n, 2, g, out)
        }
        "Return" | "Yield" | "Raise" => {
            kw(out, match node.ctor.as_str() {
                "Return" => "return",
                "Yield" => "yield",
                _ => "raise",
            });
            if let Some(v) = n.opt_node(0)? {
                emit_expr(v, g, out)?;
            }
            Ok(())
        }
        "Assign" => {
            for t in n.node_seq(0)? {
                emit_expr(t, g, out)?;
                kw(out, "=");
            }
            emit_expr(n.node(1)?, g, out)
        }
        "AugAssign" => {
            emit_expr(n.node(0)?, g, out)?;
            let op = binop_text(&n.node(1)?.ctor)?;
            out.push(format!("{op}="));
            emit_expr(n.node(2)?, g, out)
        }
        "Expr" => emit_expr(n.node(0)?, g, out),
        "Assert" => {
            kw(out, "assert");
            emit_expr(n.node(0)?, g, out)?;
            if let Some(msg) = n.opt_node(1)? {
                kw(out, ",");
                emit_expr(msg, g, out)?;
            }
            Ok(())
        }
        "Delete" => {
            kw(out, "del");
            for (i, t) in n.node_seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                emit_expr(t, g, out)?;
            }
            Ok(())
        }
        "Import" => {
            kw(out, "import");
            for (i, a) in n.node_seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                emit_alias(a, out)?;
            }
            Ok(())
        }
        "ImportFrom" => {
            kw(out, "from");
            emit_dotted(n.term(0)?, out);
            kw(out, "import");
            for (i, a) in n.node_seq(1)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                emit_alias(a, out)?;
            }
            Ok(())
        }
        "Global" => {
            kw(out, "global");
            for (i, c) in n.seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                match c {
                    Child::Terminal(s) => out.push(s.clone()),
                    Child::Node(_) => return rerr("Global expects terminal names"),
                }
            }
            Ok(())
        }
        "Pass" => {
            kw(out, "pass");
            Ok(())
        }
        "Break" => {
            kw(out, "break");
            Ok(())
        }
        "Continue" => {
            kw(out, "continue");
            Ok(())
        }
        _ => emit_expr(node, g, out),
    }
}

fn binop_text(ctor: &str) -> Result<&'static str, ActionError> {
    Ok(match ctor {
        "Add" => "+",
        "Sub" => "-",
        "Mult" => "*",
        "Div" => "/",
        "FloorDiv" => "//",
        "Mod" => "%",
        "Pow" => "**",
        "LShift" => "<<",
        "RShift" => ">>",
        "BitOr" => "|",
        "BitXor" => "^",
        "BitAnd" => "&",
        _ => return rerr(format!("'{ctor}' is not a binary operator")),
    })
}

fn cmpop_tokens(ctor: &str) -> Result<&'static [&'static str], ActionError> {
    Ok(match ctor {
        "Eq" => &["=="],
        "NotEq" => &["!="],
        "Lt" => &["<"],
        "LtE" => &["<="],
        "Gt" => &[">"],
        "GtE" => &[">="],
        "In" => &["in"],
        "NotIn" => &["not", "in"],
        "Is" => &["is"],
        "IsNot" => &["is", "not"],
        _ => return rerr(format!("'{ctor}' is not a comparison operator")),
    })
}

fn emit_expr(node: &AstNode, g: &AsdlGrammar, out: &mut Vec<String>) -> Result<(), ActionError> {
    let n = N(node);
    match node.ctor.as_str() {
        "BoolOp" => {
            let op = match n.node(0)?.ctor.as_str() {
                "And" => "and",
                "Or" => "or",
                other => return rerr(format!("'{other}' is not a boolean operator")),
            };
            emit_expr(n.node(1)?, g, out)?;
            kw(out, op);
            emit_expr(n.node(2)?, g, out)
        }
        "BinOp" => {
            emit_expr(n.node(0)?, g, out)?;
            kw(out, binop_text(&n.node(1)?.ctor)?);
            emit_expr(n.node(2)?, g, out)
        }
        "UnaryOp" => {
            let op = match n.node(0)?.ctor.as_str() {
                "UAdd" => "+",
                "USub" => "-",
                "Invert" => "~",
                "Not" => "not",
                other => return rerr(format!("'{other}' is not a unary operator")),
            };
            kw(out, op);
            emit_expr(n.node(1)?, g, out)
        }
        "Compare" => {
            emit_expr(n.node(0)?, g, out)?;
            for t in cmpop_tokens(&n.node(1)?.ctor)? {
                kw(out, t);
            }
            emit_expr(n.node(2)?, g, out)
        }
        "Call" => {
            emit_expr(n.node(0)?, g, out)?;
            kw(out, "(");
            let mut first = true;
            let mut sep = |out: &mut Vec<String>| {
                if !first {
                    kw(out, ",");
                }
                first = false;
            };
            for a in n.node_seq(1)? {
                sep(out);
                emit_expr(a, g, out)?;
            }
            for k in n.node_seq(2)? {
                sep(out);
                let kn = N(k);
                if k.ctor != "keyword" {
                    return rerr("Call keywords must be keyword nodes");
                }
                out.push(kn.term(0)?.to_string());
                kw(out, "=");
                emit_expr(kn.node(1)?, g, out)?;
            }
            if let Some(sa) = n.opt_node(3)? {
                sep(out);
                kw(out, "*");
                emit_expr(sa, g, out)?;
            }
            if let Some(kwargs) = n.opt_node(4)? {
                sep(out);
                kw(out, "**");
                emit_expr(kwargs, g, out)?;
            }
            kw(out, ")");
            Ok(())
        }
        "Attribute" => {
            emit_expr(n.node(0)?, g, out)?;
            kw(out, ".");
            out.push(n.term(1)?.to_string());
            Ok(())
        }
        "Subscript" => {
            emit_expr(n.node(0)?, g, out)?;
            kw(out, "[");
            let idx = n.node(1)?;
            let ix = N(idx);
            match idx.ctor.as_str() {
                "Index" => emit_expr(ix.node(0)?, g, out)?,
                "Slice" => {
                    if let Some(lo) = ix.opt_node(0)? {
                        emit_expr(lo, g, out)?;
                    }
                    kw(out, ":");
                    if let Some(hi) = ix.opt_node(1)? {
                        emit_expr(hi, g, out)?;
                    }
                    if let Some(step) = ix.opt_node(2)? {
                        kw(out, ":");
                        emit_expr(step, g, out)?;
                    }
                }
                other => return rerr(format!("'{other}' is not a slice")),
            }
            kw(out, "]");
            Ok(())
        }
        "Name" => {
            out.push(n.term(0)?.to_string());
            Ok(())
        }
        "Num" => {
            out.push(n.term(0)?.to_string());
            Ok(())
        }
        "Str" => {
            kw(out, marker::STR);
            Ok(())
        }
        "Paren" => {
            kw(out, "(");
            emit_expr(n.node(0)?, g, out)?;
            kw(out, ")");
            Ok(())
        }
        "Tuple" => {
            let elts = n.node_seq(0)?;
            if elts.is_empty() {
                kw(out, "(");
                kw(out, ")");
                return Ok(());
            }
            for (i, e) in elts.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                emit_expr(e, g, out)?;
            }
            // A one-element tuple needs its trailing comma to stay a tuple.
            if elts.len() == 1 {
                kw(out, ",");
            }
            Ok(())
        }
        "List" => {
            kw(out, "[");
            for (i, e) in n.node_seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                emit_expr(e, g, out)?;
            }
            kw(out, "]");
            Ok(())
        }
        "Dict" => {
            kw(out, "{");
            for (i, item) in n.node_seq(0)?.iter().enumerate() {
                if i > 0 {
                    kw(out, ",");
                }
                if item.ctor != "DictItem" {
                    return rerr("Dict entries must be DictItem nodes");
                }
                let it = N(item);
                emit_expr(it.node(0)?, g, out)?;
                kw(out, ":");
                emit_expr(it.node(1)?, g, out)?;
            }
            kw(out, "}");
            Ok(())
        }
        "ListComp" => {
            kw(out, "[");
            emit_expr(n.node(0)?, g, out)?;
            kw(out, "for");
            emit_expr(n.node(1)?, g, out)?;
            kw(out, "in");
            emit_expr(n.node(2)?, g, out)?;
            if let Some(cond) = n.opt_node(3)? {
                kw(out, "if");
                emit_expr(cond, g, out)?;
            }
            kw(out, "]");
            Ok(())
        }
        other => rerr(format!("no template for constructor '{other}'")),
    }
}
