//! Recursive-descent parser from logical-line tokens to grammar trees.
//!
//! Operates on one statement at a time: compound statements carry their
//! (usually empty) body inline, `;`-separated, and block structure is the
//! corpus layer's business. The accepted language is the subset described
//! in `docs/grammar.md`; anything outside it is a [`ParseError`] and the
//! surrounding file is dropped from the corpus.
//!
//! Renders are canonical, so `render(parse(line)) == line` for canonical
//! token streams, and `parse(render(tree)) == tree` for trees the parser
//! can produce.

use thiserror::Error;

use crate::asdl::{build, AstNode};
use crate::pycorpus::{marker, LogicalLine, Token, TokenKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected '{found}' at token {pos}: expected {expected}")]
    Unexpected {
        pos: usize,
        found: String,
        expected: String,
    },
    #[error("unsupported construct at token {pos}: {what}")]
    Unsupported { pos: usize, what: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<ParseError>,
    },
}

/// Parses one statement from content tokens. `<eol>` and indent markers
/// are ignored if present.
pub fn parse_statement(tokens: &[Token]) -> Result<AstNode, ParseError> {
    let toks: Vec<&Token> = tokens
        .iter()
        .filter(|t| {
            !matches!(
                t.kind,
                TokenKind::Eol | TokenKind::Indent | TokenKind::Dedent
            )
        })
        .collect();
    let mut p = Parser { toks, pos: 0 };
    let node = p.statement()?;
    p.finish()?;
    Ok(node)
}

/// Parses every statement of a lexed file, tagging errors with the
/// physical line they start on.
pub fn parse_file(lines: &[LogicalLine]) -> Result<Vec<AstNode>, ParseError> {
    lines
        .iter()
        .map(|l| {
            parse_statement(&l.tokens).map_err(|e| ParseError::AtLine {
                line: l.source_span.0,
                source: Box::new(e),
            })
        })
        .collect()
}

struct Parser<'a> {
    toks: Vec<&'a Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + off).copied()
    }

    fn text(&self) -> &'a str {
        self.peek().map(|t| t.text.as_str()).unwrap_or("")
    }

    fn text_at(&self, off: usize) -> &'a str {
        self.peek_at(off).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.text() == text {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<(), ParseError> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{text}'")))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::Unexpected {
            pos: self.pos,
            found: self
                .peek()
                .map(|t| t.text.clone())
                .unwrap_or_else(|| "end of line".into()),
            expected: expected.to_string(),
        }
    }

    fn unsupported(&self, what: &str) -> ParseError {
        ParseError::Unsupported {
            pos: self.pos,
            what: what.to_string(),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else if self.text() == ";" {
            Err(self.unsupported("';' outside a compound statement body"))
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.bump().text.clone()),
            _ => Err(self.unexpected("an identifier")),
        }
    }

    /// Would the current token begin an expression?
    fn starts_expr(&self) -> bool {
        match self.peek() {
            None => false,
            Some(t) => match t.kind {
                TokenKind::Identifier | TokenKind::NumberLiteral | TokenKind::StringLiteral => {
                    true
                }
                TokenKind::Keyword => matches!(t.text.as_str(), "True" | "False" | "None" | "not"),
                _ => matches!(t.text.as_str(), "(" | "[" | "{" | "+" | "-" | "~"),
            },
        }
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<AstNode, ParseError> {
        let Some(first) = self.peek() else {
            return Err(self.unexpected("a statement"));
        };
        if first.kind != TokenKind::Keyword {
            return self.expr_statement();
        }
        match first.text.as_str() {
            "def" => self.function_def(),
            "class" => self.class_def(),
            "if" => self.guarded("If"),
            "elif" => self.guarded("Elif"),
            "while" => self.guarded("While"),
            "else" => self.bare_block("Else", "else"),
            "try" => self.bare_block("Try", "try"),
            "finally" => self.bare_block("Finally", "finally"),
            "for" => self.for_statement(),
            "except" => self.except_statement(),
            "with" => self.with_statement(),
            "return" => self.value_statement("Return", "return"),
            "yield" => self.value_statement("Yield", "yield"),
            "raise" => self.value_statement("Raise", "raise"),
            "assert" => self.assert_statement(),
            "del" => self.delete_statement(),
            "import" => self.import_statement(),
            "from" => self.import_from(),
            "global" => self.global_statement(),
            "pass" => self.nullary("Pass"),
            "break" => self.nullary("Break"),
            "continue" => self.nullary("Continue"),
            "lambda" => Err(self.unsupported("lambda")),
            "True" | "False" | "None" | "not" => self.expr_statement(),
            other => Err(self.unsupported(&format!("'{other}' statement"))),
        }
    }

    fn nullary(&mut self, ctor: &str) -> Result<AstNode, ParseError> {
        self.bump();
        Ok(AstNode::leaf(ctor))
    }

    /// `: stmt (; stmt)*` after a compound header; empty body allowed.
    fn suite(&mut self) -> Result<Vec<AstNode>, ParseError> {
        self.expect(":")?;
        let mut body = Vec::new();
        if self.at_end() {
            return Ok(body);
        }
        loop {
            body.push(self.statement()?);
            if !self.eat(";") {
                return Ok(body);
            }
        }
    }

    fn function_def(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                let pname = self.ident()?;
                let default = if self.eat("=") {
                    Some(self.test()?)
                } else {
                    None
                };
                params.push(AstNode::new(
                    "Arg",
                    vec![build::term(&pname), build::opt(default)],
                ));
                if self.eat(",") {
                    if self.text() == ")" {
                        return Err(self.unsupported("trailing comma"));
                    }
                    continue;
                }
                self.expect(")")?;
                break;
            }
        }
        let args = AstNode::new("Arguments", vec![build::seq(params)]);
        let body = self.suite()?;
        Ok(AstNode::new(
            "FunctionDef",
            vec![build::term(&name), build::single(args), build::seq(body)],
        ))
    }

    fn class_def(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let name = self.ident()?;
        let mut bases = Vec::new();
        if self.eat("(") {
            if self.text() == ")" {
                return Err(self.unsupported("empty base-class parentheses"));
            }
            loop {
                bases.push(self.test()?);
                if self.eat(",") {
                    if self.text() == ")" {
                        return Err(self.unsupported("trailing comma"));
                    }
                    continue;
                }
                self.expect(")")?;
                break;
            }
        }
        let body = self.suite()?;
        Ok(AstNode::new(
            "ClassDef",
            vec![build::term(&name), build::seq(bases), build::seq(body)],
        ))
    }

    fn guarded(&mut self, ctor: &str) -> Result<AstNode, ParseError> {
        self.bump();
        let test = self.test()?;
        let body = self.suite()?;
        Ok(AstNode::new(
            ctor,
            vec![build::single(test), build::seq(body)],
        ))
    }

    fn bare_block(&mut self, ctor: &str, _kw: &str) -> Result<AstNode, ParseError> {
        self.bump();
        let body = self.suite()?;
        Ok(AstNode::new(ctor, vec![build::seq(body)]))
    }

    fn for_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let target = self.target_list()?;
        self.expect("in")?;
        let iter = self.testlist()?;
        let body = self.suite()?;
        Ok(AstNode::new(
            "For",
            vec![build::single(target), build::single(iter), build::seq(body)],
        ))
    }

    fn except_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let (ty, name) = if self.text() == ":" {
            (None, None)
        } else {
            let ty = self.test()?;
            let name = if self.eat("as") {
                Some(AstNode::new("Name", vec![build::term(&self.ident()?)]))
            } else {
                None
            };
            (Some(ty), name)
        };
        let body = self.suite()?;
        Ok(AstNode::new(
            "Except",
            vec![build::opt(ty), build::opt(name), build::seq(body)],
        ))
    }

    fn with_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let ctx = self.test()?;
        let alias = if self.eat("as") {
            Some(self.target()?)
        } else {
            None
        };
        let body = self.suite()?;
        Ok(AstNode::new(
            "With",
            vec![build::single(ctx), build::opt(alias), build::seq(body)],
        ))
    }

    fn value_statement(&mut self, ctor: &str, _kw: &str) -> Result<AstNode, ParseError> {
        self.bump();
        let value = if self.starts_expr() {
            Some(self.testlist()?)
        } else {
            None
        };
        Ok(AstNode::new(ctor, vec![build::opt(value)]))
    }

    fn assert_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let test = self.test()?;
        let msg = if self.eat(",") { Some(self.test()?) } else { None };
        Ok(AstNode::new(
            "Assert",
            vec![build::single(test), build::opt(msg)],
        ))
    }

    fn delete_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let mut targets = vec![self.target()?];
        while self.eat(",") {
            targets.push(self.target()?);
        }
        Ok(AstNode::new("Delete", vec![build::seq(targets)]))
    }

    /// `name (. name)*`, stored as one dotted terminal.
    fn dotted_name(&mut self) -> Result<String, ParseError> {
        let mut name = self.ident()?;
        while self.text() == "." && self.peek_at(1).map(|t| t.kind) == Some(TokenKind::Identifier)
        {
            self.bump();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// Leading-dot relative form: `.`* followed by an optional dotted name.
    fn module_name(&mut self) -> Result<String, ParseError> {
        let mut name = String::new();
        while self.eat(".") {
            name.push('.');
        }
        if self.peek().map(|t| t.kind) == Some(TokenKind::Identifier) {
            name.push_str(&self.dotted_name()?);
        }
        if name.is_empty() {
            return Err(self.unexpected("a module name"));
        }
        Ok(name)
    }

    fn alias(&mut self) -> Result<AstNode, ParseError> {
        let name = self.dotted_name()?;
        let asname = if self.eat("as") {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(AstNode::new(
            "Alias",
            vec![build::term(&name), build::opt_term(asname)],
        ))
    }

    fn import_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let mut names = vec![self.alias()?];
        while self.eat(",") {
            names.push(self.alias()?);
        }
        Ok(AstNode::new("Import", vec![build::seq(names)]))
    }

    fn import_from(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let module = self.module_name()?;
        self.expect("import")?;
        if self.text() == "*" {
            return Err(self.unsupported("wildcard import"));
        }
        let mut names = vec![self.alias()?];
        while self.eat(",") {
            names.push(self.alias()?);
        }
        Ok(AstNode::new(
            "ImportFrom",
            vec![build::term(&module), build::seq(names)],
        ))
    }

    fn global_statement(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let mut names = vec![self.ident()?];
        while self.eat(",") {
            names.push(self.ident()?);
        }
        Ok(AstNode::new("Global", vec![build::term_seq(names)]))
    }

    fn expr_statement(&mut self) -> Result<AstNode, ParseError> {
        let first = self.testlist()?;
        if self.text() == "=" {
            let mut targets = vec![first];
            while self.eat("=") {
                targets.push(self.testlist()?);
            }
            let value = targets.pop().expect("assign chain has a value");
            for t in &targets {
                self.check_target(t)?;
            }
            return Ok(AstNode::new(
                "Assign",
                vec![build::seq(targets), build::single(value)],
            ));
        }
        if let Some(op) = aug_op(self.text()) {
            self.check_target(&first)?;
            self.bump();
            let value = self.testlist()?;
            return Ok(AstNode::new(
                "AugAssign",
                vec![
                    build::single(first),
                    build::single(AstNode::leaf(op)),
                    build::single(value),
                ],
            ));
        }
        Ok(AstNode::new("Expr", vec![build::single(first)]))
    }

    /// Assignment targets must be storable places.
    fn check_target(&self, node: &AstNode) -> Result<(), ParseError> {
        let ok = match node.ctor.as_str() {
            "Name" | "Attribute" | "Subscript" => true,
            "Paren" => {
                if let Some(crate::asdl::FieldValue::Single(crate::asdl::Child::Node(inner))) =
                    node.fields.first()
                {
                    self.check_target(inner)?;
                }
                true
            }
            "Tuple" | "List" => {
                if let Some(crate::asdl::FieldValue::Seq(elts)) = node.fields.first() {
                    for e in elts {
                        if let crate::asdl::Child::Node(n) = e {
                            self.check_target(n)?;
                        }
                    }
                }
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ParseError::Unsupported {
                pos: self.pos,
                what: format!("assignment to {}", node.ctor),
            })
        }
    }

    // ---- expressions ----

    /// `test (, test)*`; a comma makes a tuple. Trailing commas are only
    /// legal on one-element tuples.
    fn testlist(&mut self) -> Result<AstNode, ParseError> {
        let first = self.test()?;
        if self.text() != "," {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat(",") {
            if !self.starts_expr() {
                if elts.len() == 1 {
                    return Ok(AstNode::new("Tuple", vec![build::seq(elts)]));
                }
                return Err(self.unsupported("trailing comma"));
            }
            elts.push(self.test()?);
        }
        Ok(AstNode::new("Tuple", vec![build::seq(elts)]))
    }

    /// A `for`/`del`/`with ... as` target: tuple of bitwise-or-level
    /// expressions, so the `in` keyword stays unconsumed.
    fn target_list(&mut self) -> Result<AstNode, ParseError> {
        let first = self.target()?;
        if self.text() != "," {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat(",") {
            if !self.starts_expr() {
                if elts.len() == 1 {
                    break;
                }
                return Err(self.unsupported("trailing comma"));
            }
            elts.push(self.target()?);
        }
        let node = AstNode::new("Tuple", vec![build::seq(elts)]);
        self.check_target(&node)?;
        Ok(node)
    }

    fn target(&mut self) -> Result<AstNode, ParseError> {
        let node = self.bitor()?;
        self.check_target(&node)?;
        Ok(node)
    }

    fn test(&mut self) -> Result<AstNode, ParseError> {
        self.or_test()
    }

    fn bool_chain(
        &mut self,
        op_text: &str,
        op_ctor: &str,
        next: fn(&mut Self) -> Result<AstNode, ParseError>,
    ) -> Result<AstNode, ParseError> {
        let mut left = next(self)?;
        while self.text() == op_text {
            self.bump();
            let right = next(self)?;
            left = AstNode::new(
                "BoolOp",
                vec![
                    build::single(AstNode::leaf(op_ctor)),
                    build::single(left),
                    build::single(right),
                ],
            );
        }
        Ok(left)
    }

    fn or_test(&mut self) -> Result<AstNode, ParseError> {
        self.bool_chain("or", "Or", Self::and_test)
    }

    fn and_test(&mut self) -> Result<AstNode, ParseError> {
        self.bool_chain("and", "And", Self::not_test)
    }

    fn not_test(&mut self) -> Result<AstNode, ParseError> {
        if self.text() == "not" && self.text_at(1) != "in" {
            self.bump();
            let inner = self.not_test()?;
            return Ok(AstNode::new(
                "UnaryOp",
                vec![build::single(AstNode::leaf("Not")), build::single(inner)],
            ));
        }
        self.comparison()
    }

    /// Chained comparisons associate leftward into binary nodes:
    /// `a < b < c` parses as `(a < b) < c`.
    fn comparison(&mut self) -> Result<AstNode, ParseError> {
        let mut left = self.bitor()?;
        loop {
            let op = match self.text() {
                "==" => "Eq",
                "!=" => "NotEq",
                "<" => "Lt",
                "<=" => "LtE",
                ">" => "Gt",
                ">=" => "GtE",
                "in" => "In",
                "not" if self.text_at(1) == "in" => "NotIn",
                "is" => {
                    if self.text_at(1) == "not" {
                        "IsNot"
                    } else {
                        "Is"
                    }
                }
                _ => return Ok(left),
            };
            self.bump();
            if matches!(op, "NotIn" | "IsNot") {
                self.bump();
            }
            let right = self.bitor()?;
            left = AstNode::new(
                "Compare",
                vec![
                    build::single(left),
                    build::single(AstNode::leaf(op)),
                    build::single(right),
                ],
            );
        }
    }

    fn binary_chain(
        &mut self,
        ops: &[(&str, &str)],
        next: fn(&mut Self) -> Result<AstNode, ParseError>,
    ) -> Result<AstNode, ParseError> {
        let mut left = next(self)?;
        'outer: loop {
            for (text, ctor) in ops {
                if self.text() == *text {
                    self.bump();
                    let right = next(self)?;
                    left = AstNode::new(
                        "BinOp",
                        vec![
                            build::single(left),
                            build::single(AstNode::leaf(*ctor)),
                            build::single(right),
                        ],
                    );
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn bitor(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(&[("|", "BitOr")], Self::bitxor)
    }

    fn bitxor(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(&[("^", "BitXor")], Self::bitand)
    }

    fn bitand(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(&[("&", "BitAnd")], Self::shift)
    }

    fn shift(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(&[("<<", "LShift"), (">>", "RShift")], Self::arith)
    }

    fn arith(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(&[("+", "Add"), ("-", "Sub")], Self::term)
    }

    fn term(&mut self) -> Result<AstNode, ParseError> {
        self.binary_chain(
            &[("*", "Mult"), ("/", "Div"), ("//", "FloorDiv"), ("%", "Mod")],
            Self::factor,
        )
    }

    fn factor(&mut self) -> Result<AstNode, ParseError> {
        let op = match self.text() {
            "+" => Some("UAdd"),
            "-" => Some("USub"),
            "~" => Some("Invert"),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let inner = self.factor()?;
            return Ok(AstNode::new(
                "UnaryOp",
                vec![build::single(AstNode::leaf(op)), build::single(inner)],
            ));
        }
        self.power()
    }

    /// `**` binds tighter than unary minus on its left and is
    /// right-associative: `-2 ** a ** b` is `-(2 ** (a ** b))`.
    fn power(&mut self) -> Result<AstNode, ParseError> {
        let base = self.trailer_expr()?;
        if self.text() == "**" {
            self.bump();
            let exp = self.factor()?;
            return Ok(AstNode::new(
                "BinOp",
                vec![
                    build::single(base),
                    build::single(AstNode::leaf("Pow")),
                    build::single(exp),
                ],
            ));
        }
        Ok(base)
    }

    fn trailer_expr(&mut self) -> Result<AstNode, ParseError> {
        let mut node = self.atom()?;
        loop {
            match self.text() {
                "(" => node = self.call(node)?,
                "[" => node = self.subscript(node)?,
                "." => {
                    self.bump();
                    let attr = self.ident()?;
                    node = AstNode::new(
                        "Attribute",
                        vec![build::single(node), build::term(&attr)],
                    );
                }
                _ => return Ok(node),
            }
        }
    }

    /// Call arguments in fixed surface order: positional, keyword,
    /// `*args`, `**kwargs`.
    fn call(&mut self, func: AstNode) -> Result<AstNode, ParseError> {
        self.bump();
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        let mut starargs = None;
        let mut kwargs = None;
        if !self.eat(")") {
            loop {
                if self.eat("**") {
                    if kwargs.is_some() {
                        return Err(self.unsupported("repeated '**' argument"));
                    }
                    kwargs = Some(self.test()?);
                } else if self.eat("*") {
                    if starargs.is_some() || kwargs.is_some() {
                        return Err(self.unsupported("'*' argument out of order"));
                    }
                    starargs = Some(self.test()?);
                } else if self.peek().map(|t| t.kind) == Some(TokenKind::Identifier)
                    && self.text_at(1) == "="
                {
                    if starargs.is_some() || kwargs.is_some() {
                        return Err(self.unsupported("keyword argument after '*'"));
                    }
                    let arg = self.ident()?;
                    self.bump();
                    let value = self.test()?;
                    keywords.push(AstNode::new(
                        "keyword",
                        vec![build::term(&arg), build::single(value)],
                    ));
                } else {
                    if !keywords.is_empty() || starargs.is_some() || kwargs.is_some() {
                        return Err(self.unsupported("positional argument after keyword"));
                    }
                    args.push(self.test()?);
                }
                if self.eat(",") {
                    if self.text() == ")" {
                        return Err(self.unsupported("trailing comma"));
                    }
                    continue;
                }
                self.expect(")")?;
                break;
            }
        }
        Ok(AstNode::new(
            "Call",
            vec![
                build::single(func),
                build::seq(args),
                build::seq(keywords),
                build::opt(starargs),
                build::opt(kwargs),
            ],
        ))
    }

    fn subscript(&mut self, value: AstNode) -> Result<AstNode, ParseError> {
        self.bump();
        let lower = if self.text() == ":" {
            None
        } else {
            Some(self.test()?)
        };
        let index = if self.eat(":") {
            let upper = if self.text() == ":" || self.text() == "]" {
                None
            } else {
                Some(self.test()?)
            };
            let step = if self.eat(":") {
                if self.text() == "]" {
                    return Err(self.unsupported("slice with trailing ':'"));
                }
                Some(self.test()?)
            } else {
                None
            };
            AstNode::new(
                "Slice",
                vec![build::opt(lower), build::opt(upper), build::opt(step)],
            )
        } else {
            let v = lower.ok_or_else(|| self.unexpected("a subscript expression"))?;
            AstNode::new("Index", vec![build::single(v)])
        };
        self.expect("]")?;
        Ok(AstNode::new(
            "Subscript",
            vec![build::single(value), build::single(index)],
        ))
    }

    fn atom(&mut self) -> Result<AstNode, ParseError> {
        let Some(t) = self.peek() else {
            return Err(self.unexpected("an expression"));
        };
        match t.kind {
            TokenKind::Identifier => {
                let name = self.bump().text.clone();
                Ok(AstNode::new("Name", vec![build::term(&name)]))
            }
            TokenKind::NumberLiteral => {
                let value = self.bump().text.clone();
                Ok(AstNode::new("Num", vec![build::term(&value)]))
            }
            TokenKind::StringLiteral => {
                debug_assert_eq!(t.text, marker::STR);
                self.bump();
                Ok(AstNode::leaf("Str"))
            }
            TokenKind::Keyword => match t.text.as_str() {
                "True" | "False" | "None" => {
                    let name = self.bump().text.clone();
                    Ok(AstNode::new("Name", vec![build::term(&name)]))
                }
                "lambda" => Err(self.unsupported("lambda")),
                _ => Err(self.unexpected("an expression")),
            },
            _ => match t.text.as_str() {
                "(" => self.paren_atom(),
                "[" => self.list_atom(),
                "{" => self.dict_atom(),
                _ => Err(self.unexpected("an expression")),
            },
        }
    }

    fn paren_atom(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        if self.eat(")") {
            return Ok(AstNode::new("Tuple", vec![build::seq(vec![])]));
        }
        let first = self.test()?;
        if self.text() == "for" {
            return Err(self.unsupported("generator expression"));
        }
        let inner = if self.text() == "," {
            let mut elts = vec![first];
            while self.eat(",") {
                if self.text() == ")" {
                    if elts.len() == 1 {
                        break;
                    }
                    return Err(self.unsupported("trailing comma"));
                }
                elts.push(self.test()?);
            }
            AstNode::new("Tuple", vec![build::seq(elts)])
        } else {
            first
        };
        self.expect(")")?;
        Ok(AstNode::new("Paren", vec![build::single(inner)]))
    }

    fn list_atom(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        if self.eat("]") {
            return Ok(AstNode::new("List", vec![build::seq(vec![])]));
        }
        let first = self.test()?;
        if self.text() == "for" {
            self.bump();
            let target = self.target_list()?;
            self.expect("in")?;
            let iter = self.test()?;
            let cond = if self.eat("if") { Some(self.test()?) } else { None };
            self.expect("]")?;
            return Ok(AstNode::new(
                "ListComp",
                vec![
                    build::single(first),
                    build::single(target),
                    build::single(iter),
                    build::opt(cond),
                ],
            ));
        }
        let mut elts = vec![first];
        while self.eat(",") {
            if self.text() == "]" {
                return Err(self.unsupported("trailing comma"));
            }
            elts.push(self.test()?);
        }
        self.expect("]")?;
        Ok(AstNode::new("List", vec![build::seq(elts)]))
    }

    fn dict_atom(&mut self) -> Result<AstNode, ParseError> {
        self.bump();
        let mut items = Vec::new();
        if !self.eat("}") {
            loop {
                let key = self.test()?;
                self.expect(":")?;
                let value = self.test()?;
                items.push(AstNode::new(
                    "DictItem",
                    vec![build::single(key), build::single(value)],
                ));
                if self.eat(",") {
                    if self.text() == "}" {
                        return Err(self.unsupported("trailing comma"));
                    }
                    continue;
                }
                self.expect("}")?;
                break;
            }
        }
        Ok(AstNode::new("Dict", vec![build::seq(items)]))
    }
}

fn aug_op(text: &str) -> Option<&'static str> {
    Some(match text {
        "+=" => "Add",
        "-=" => "Sub",
        "*=" => "Mult",
        "/=" => "Div",
        "//=" => "FloorDiv",
        "%=" => "Mod",
        "**=" => "Pow",
        "<<=" => "LShift",
        ">>=" => "RShift",
        "|=" => "BitOr",
        "^=" => "BitXor",
        "&=" => "BitAnd",
        _ => return None,
    })
}
