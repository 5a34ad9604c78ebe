use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("grammar line {line}: {reason}")]
pub struct GrammarError {
    pub line: usize,
    pub reason: String,
}

/// Built-in terminal types; fields of these types take GenToken actions.
pub const PRIMITIVE_TYPES: [&str; 3] = ["identifier", "int", "string"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qualifier {
    /// Exactly one child; closes as soon as it is filled.
    Single,
    /// Zero children (closed by Reduce) or one (closes on fill).
    Optional,
    /// Any number of children; closed by Reduce.
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub ty: String,
    pub qual: Qualifier,
    pub name: String,
}

impl FieldDecl {
    pub fn is_primitive(&self) -> bool {
        PRIMITIVE_TYPES.contains(&self.ty.as_str())
    }
}

/// One production: a constructor belonging to a composite type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub name: String,
    pub ty: String,
    pub fields: Vec<FieldDecl>,
}

/// A loaded ASDL grammar.  Production indices are assigned in textual
/// order and are the stable ApplyRule vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct AsdlGrammar {
    types: Vec<String>,
    constructors: Vec<Constructor>,
    by_name: HashMap<String, usize>,
    by_type: HashMap<String, Vec<usize>>,
    min_cost: Vec<usize>,
}

impl AsdlGrammar {
    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn constructors(&self) -> &[Constructor] {
        &self.constructors
    }

    pub fn n_productions(&self) -> usize {
        self.constructors.len()
    }

    pub fn constructor(&self, idx: usize) -> &Constructor {
        &self.constructors[idx]
    }

    pub fn production_of(&self, ctor_name: &str) -> Option<usize> {
        self.by_name.get(ctor_name).copied()
    }

    /// Production indices whose result type is `ty`, in textual order.
    pub fn productions_for(&self, ty: &str) -> &[usize] {
        self.by_type.get(ty).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn is_primitive(ty: &str) -> bool {
        PRIMITIVE_TYPES.contains(&ty)
    }

    /// Minimum number of actions needed to derive a complete node with
    /// this production, counting its own ApplyRule.  Used by bounded
    /// random rollouts to force termination.
    pub fn min_completion_cost(&self, prod: usize) -> usize {
        self.min_cost[prod]
    }

    pub fn min_type_cost(&self, ty: &str) -> usize {
        self.productions_for(ty)
            .iter()
            .map(|&p| self.min_cost[p])
            .min()
            .unwrap_or(usize::MAX)
    }
}

struct Tok {
    text: String,
    line: usize,
}

fn lex_asdl(text: &str) -> Result<Vec<Tok>, GrammarError> {
    let mut toks = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = match raw.find("--") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut chars = code.chars().peekable();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else if c.is_alphanumeric() || c == '_' {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok { text: word, line });
            } else if "=|(),?*".contains(c) {
                chars.next();
                toks.push(Tok { text: c.to_string(), line });
            } else {
                return Err(GrammarError {
                    line,
                    reason: format!("unexpected character '{c}'"),
                });
            }
        }
    }
    Ok(toks)
}

/// Parses ASDL text: `type = Ctor(fieldtype qual name, ...) | Ctor2 | ...`.
pub fn load_grammar(text: &str) -> Result<AsdlGrammar, GrammarError> {
    let toks = lex_asdl(text)?;
    let err = |i: usize, reason: String| {
        let line = toks.get(i).map(|t| t.line).unwrap_or_else(|| {
            toks.last().map(|t| t.line).unwrap_or(0)
        });
        Err(GrammarError { line, reason })
    };

    let mut types: Vec<String> = Vec::new();
    let mut constructors: Vec<Constructor> = Vec::new();
    let mut i = 0usize;
    while i < toks.len() {
        let ty = toks[i].text.clone();
        if !ty.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return err(i, format!("expected type name, found '{ty}'"));
        }
        if toks.get(i + 1).map(|t| t.text.as_str()) != Some("=") {
            return err(i + 1, "expected '=' after type name".into());
        }
        if types.contains(&ty) {
            return err(i, format!("duplicate type '{ty}'"));
        }
        if AsdlGrammar::is_primitive(&ty) {
            return err(i, format!("'{ty}' is a built-in primitive type"));
        }
        types.push(ty.clone());
        i += 2;
        loop {
            let ctor_name = match toks.get(i) {
                Some(t) if t.text.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') => {
                    t.text.clone()
                }
                _ => return err(i, "expected constructor name".into()),
            };
            i += 1;
            let mut fields = Vec::new();
            if toks.get(i).map(|t| t.text.as_str()) == Some("(") {
                i += 1;
                loop {
                    let fty = match toks.get(i) {
                        Some(t) if t.text.chars().next().is_some_and(|c| c.is_alphabetic()) => {
                            t.text.clone()
                        }
                        _ => return err(i, "expected field type".into()),
                    };
                    i += 1;
                    let qual = match toks.get(i).map(|t| t.text.as_str()) {
                        Some("?") => {
                            i += 1;
                            Qualifier::Optional
                        }
                        Some("*") => {
                            i += 1;
                            Qualifier::Sequence
                        }
                        _ => Qualifier::Single,
                    };
                    let fname = match toks.get(i) {
                        Some(t) if t.text.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') => {
                            t.text.clone()
                        }
                        _ => return err(i, "expected field name".into()),
                    };
                    i += 1;
                    fields.push(FieldDecl { ty: fty, qual, name: fname });
                    match toks.get(i).map(|t| t.text.as_str()) {
                        Some(",") => i += 1,
                        Some(")") => {
                            i += 1;
                            break;
                        }
                        _ => return err(i, "expected ',' or ')' in field list".into()),
                    }
                }
            }
            constructors.push(Constructor { name: ctor_name, ty: ty.clone(), fields });
            match toks.get(i).map(|t| t.text.as_str()) {
                Some("|") => i += 1,
                _ => break,
            }
        }
    }

    let mut by_name = HashMap::new();
    for (idx, c) in constructors.iter().enumerate() {
        if by_name.insert(c.name.clone(), idx).is_some() {
            return Err(GrammarError {
                line: 0,
                reason: format!("duplicate constructor '{}'", c.name),
            });
        }
    }
    let mut by_type: HashMap<String, Vec<usize>> = HashMap::new();
    for (idx, c) in constructors.iter().enumerate() {
        by_type.entry(c.ty.clone()).or_default().push(idx);
    }
    for c in &constructors {
        for f in &c.fields {
            if !AsdlGrammar::is_primitive(&f.ty) && !types.contains(&f.ty) {
                return Err(GrammarError {
                    line: 0,
                    reason: format!(
                        "constructor '{}' references undeclared type '{}'",
                        c.name, f.ty
                    ),
                });
            }
        }
    }

    let min_cost = compute_min_costs(&types, &constructors, &by_type);
    Ok(AsdlGrammar { types, constructors, by_name, by_type, min_cost })
}

/// Fixpoint over productions: cost of a production is 1 (its ApplyRule)
/// plus the cheapest way to close each field.
fn compute_min_costs(
    types: &[String],
    ctors: &[Constructor],
    by_type: &HashMap<String, Vec<usize>>,
) -> Vec<usize> {
    const INF: usize = usize::MAX / 4;
    let mut type_cost: HashMap<&str, usize> =
        types.iter().map(|t| (t.as_str(), INF)).collect();
    let mut prod_cost = vec![INF; ctors.len()];
    loop {
        let mut changed = false;
        for (idx, c) in ctors.iter().enumerate() {
            let mut cost = 1usize;
            for f in &c.fields {
                let field_cost = match f.qual {
                    Qualifier::Optional | Qualifier::Sequence => 1,
                    Qualifier::Single => {
                        if f.is_primitive() {
                            1
                        } else {
                            *type_cost.get(f.ty.as_str()).unwrap_or(&INF)
                        }
                    }
                };
                cost = cost.saturating_add(field_cost);
            }
            if cost < prod_cost[idx] {
                prod_cost[idx] = cost;
                changed = true;
            }
        }
        for t in types {
            let best = by_type[t.as_str()]
                .iter()
                .map(|&p| prod_cost[p])
                .min()
                .unwrap_or(INF);
            let entry = type_cost.get_mut(t.as_str()).unwrap();
            if best < *entry {
                *entry = best;
                changed = true;
            }
        }
        if !changed {
            return prod_cost;
        }
    }
}
