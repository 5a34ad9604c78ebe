use thiserror::Error;

use super::{classify_line, marker, LogicalLine, Token, TokenKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {reason}")]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub reason: String,
}

const KEYWORDS: [&str; 31] = [
    "and", "as", "assert", "break", "class", "continue", "def", "del", "elif", "else", "except",
    "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "not", "or", "pass",
    "raise", "return", "try", "while", "with", "yield", "True", "False",
];

// "None" shares keyword treatment with True/False: all three parse as Name
// terminals but are never anonymized by the metrics.
pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text) || text == "None"
}

const OPS3: [&str; 4] = ["**=", "//=", "<<=", ">>="];
const OPS2: [&str; 17] = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "->",
];
const OPS1: &str = "+-*/%&|^~<>@";
const DELIMS: &str = "()[]{},:.;=";

/// Best-effort kind for a bare token text, used when reading tokens back
/// from corpus files or model vocabularies.
pub fn classify_token_text(text: &str) -> TokenKind {
    match text {
        marker::STR => return TokenKind::StringLiteral,
        marker::EOL => return TokenKind::Eol,
        marker::IND => return TokenKind::Indent,
        marker::DED => return TokenKind::Dedent,
        marker::PAD | marker::UNK | marker::BOS => return TokenKind::Special,
        _ => {}
    }
    let mut chars = text.chars();
    match chars.next() {
        None => TokenKind::Special,
        Some(c) if c.is_alphabetic() || c == '_' => {
            if text.chars().all(|c| c.is_alphanumeric() || c == '_') {
                if is_keyword(text) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                }
            } else {
                TokenKind::Special
            }
        }
        Some(c) if c.is_ascii_digit() => TokenKind::NumberLiteral,
        Some('.') if text.len() > 1 && chars.next().is_some_and(|c| c.is_ascii_digit()) => {
            TokenKind::NumberLiteral
        }
        _ => {
            if OPS3.contains(&text) || OPS2.contains(&text) {
                TokenKind::Operator
            } else if text.len() == 1 && OPS1.contains(text) {
                TokenKind::Operator
            } else if text.len() == 1 && DELIMS.contains(text) {
                TokenKind::Delimiter
            } else {
                TokenKind::Special
            }
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    paren_depth: usize,
    indent_stack: Vec<usize>,
    tokens: Vec<Token>,
    events: Vec<Token>,
    stmt_start_line: usize,
    line_started: bool,
    out: Vec<LogicalLine>,
}

/// Tokenizes a whole source file into logical lines.
///
/// String literals (any prefix, single or triple quoted) become `<str>`;
/// adjacent literals collapse into one marker, matching implicit
/// concatenation.  The literal text `<str>` in the input is accepted as an
/// already-masked string, so detokenized output re-tokenizes cleanly.
pub fn tokenize_file(source: &str) -> Result<Vec<LogicalLine>, LexError> {
    let mut lx = Lexer {
        chars: source.chars().filter(|&c| c != '\r').collect(),
        pos: 0,
        line: 1,
        col: 1,
        paren_depth: 0,
        indent_stack: vec![0],
        tokens: Vec::new(),
        events: Vec::new(),
        stmt_start_line: 1,
        line_started: false,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl Lexer {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, LexError> {
        Err(LexError { line: self.line, col: self.col, reason: reason.into() })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn push(&mut self, text: impl Into<String>, kind: TokenKind) {
        self.tokens.push(Token::new(text, kind));
    }

    fn run(&mut self) -> Result<(), LexError> {
        loop {
            if !self.line_started {
                if !self.handle_line_start()? {
                    break;
                }
                self.line_started = true;
            }
            if self.tokens.is_empty() {
                self.stmt_start_line = self.line;
            }
            match self.peek() {
                None => break,
                Some(c) => self.step(c)?,
            }
        }
        if self.paren_depth > 0 {
            return self.err("unclosed bracket at end of file");
        }
        if !self.tokens.is_empty() {
            self.finish_line(self.line);
        }
        Ok(())
    }

    /// Consumes indentation and blank/comment-only lines; updates the
    /// indent stack once a code-bearing line is found.  Returns false at
    /// end of input.
    fn handle_line_start(&mut self) -> Result<bool, LexError> {
        loop {
            let mut width = 0usize;
            loop {
                match self.peek() {
                    Some(' ') => {
                        width += 1;
                        self.bump();
                    }
                    Some('\t') => {
                        width = (width / 8 + 1) * 8;
                        self.bump();
                    }
                    _ => break,
                }
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue;
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                Some(_) => {
                    self.apply_indent(width)?;
                    return Ok(true);
                }
            }
        }
    }

    fn apply_indent(&mut self, width: usize) -> Result<(), LexError> {
        let top = *self.indent_stack.last().unwrap();
        if width > top {
            self.indent_stack.push(width);
            self.events.push(Token::indent());
        } else if width < top {
            while *self.indent_stack.last().unwrap() > width {
                self.indent_stack.pop();
                self.events.push(Token::dedent());
            }
            if *self.indent_stack.last().unwrap() != width {
                return self.err("dedent does not match any outer indentation level");
            }
        }
        Ok(())
    }

    fn finish_line(&mut self, end_line: usize) {
        let mut tokens = std::mem::take(&mut self.tokens);
        tokens.push(Token::eol());
        let category = classify_line(&tokens);
        self.out.push(LogicalLine {
            tokens,
            indent_events: std::mem::take(&mut self.events),
            indent_level: self.indent_stack.len() - 1,
            source_span: (self.stmt_start_line, end_line),
            category,
        });
        self.line_started = false;
    }

    fn step(&mut self, c: char) -> Result<(), LexError> {
        match c {
            ' ' | '\t' => {
                self.bump();
            }
            '#' => {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            }
            '\n' => {
                let end_line = self.line;
                self.bump();
                if self.paren_depth == 0 && !self.tokens.is_empty() {
                    self.finish_line(end_line);
                }
            }
            '\\' => {
                if self.peek_at(1) == Some('\n') {
                    self.bump();
                    self.bump();
                } else {
                    return self.err("unexpected character '\\'");
                }
            }
            '<' if self.starts_with(marker::STR) => {
                for _ in 0..marker::STR.len() {
                    self.bump();
                }
                self.push_string();
            }
            '\'' | '"' => self.scan_string()?,
            c if c.is_ascii_digit() => self.scan_number(),
            '.' if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => self.scan_number(),
            c if c.is_alphabetic() || c == '_' => self.scan_word()?,
            _ => self.scan_operator(c)?,
        }
        Ok(())
    }

    /// Appends a `<str>` token, merging with a directly preceding string
    /// literal the way implicit concatenation joins adjacent literals.
    fn push_string(&mut self) {
        if self.tokens.last().map(|t| t.kind) != Some(TokenKind::StringLiteral) {
            self.push(marker::STR, TokenKind::StringLiteral);
        }
    }

    fn scan_string(&mut self) -> Result<(), LexError> {
        let quote = self.bump().unwrap();
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        loop {
            match self.peek() {
                None => return self.err("unterminated string literal"),
                Some('\\') => {
                    self.bump();
                    if self.bump().is_none() {
                        return self.err("unterminated string literal");
                    }
                }
                Some('\n') if !triple => return self.err("unterminated string literal"),
                Some(c) if c == quote => {
                    self.bump();
                    if !triple {
                        break;
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        self.bump();
                        self.bump();
                        break;
                    }
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
        self.push_string();
        Ok(())
    }

    fn scan_number(&mut self) {
        let mut text = String::new();
        let mut take = |lx: &mut Self| {
            let c = lx.bump().unwrap();
            text.push(c);
        };
        if self.peek() == Some('0')
            && self.peek_at(1).is_some_and(|c| "xXoObB".contains(c))
        {
            take(self);
            take(self);
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                take(self);
            }
        } else {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                take(self);
            }
            if self.peek() == Some('.') {
                take(self);
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    take(self);
                }
            }
            if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                let sign_ok = matches!(self.peek_at(1), Some(c) if c.is_ascii_digit())
                    || (matches!(self.peek_at(1), Some('+') | Some('-'))
                        && matches!(self.peek_at(2), Some(c) if c.is_ascii_digit()));
                if sign_ok {
                    take(self);
                    if matches!(self.peek(), Some('+') | Some('-')) {
                        take(self);
                    }
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        take(self);
                    }
                }
            }
        }
        self.push(text, TokenKind::NumberLiteral);
    }

    fn scan_word(&mut self) -> Result<(), LexError> {
        let mut text = String::new();
        while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
            text.push(self.bump().unwrap());
        }
        let is_string_prefix = text.len() <= 2
            && text.chars().all(|c| "rRbBuUfF".contains(c))
            && matches!(self.peek(), Some('\'') | Some('"'));
        if is_string_prefix {
            return self.scan_string();
        }
        let kind = if is_keyword(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
        self.push(text, kind);
        Ok(())
    }

    fn scan_operator(&mut self, c: char) -> Result<(), LexError> {
        for op in OPS3 {
            if self.starts_with(op) {
                for _ in 0..3 {
                    self.bump();
                }
                self.push(op, TokenKind::Operator);
                return Ok(());
            }
        }
        for op in OPS2 {
            if self.starts_with(op) {
                for _ in 0..2 {
                    self.bump();
                }
                self.push(op, TokenKind::Operator);
                return Ok(());
            }
        }
        if OPS1.contains(c) {
            self.bump();
            self.push(c.to_string(), TokenKind::Operator);
            return Ok(());
        }
        if DELIMS.contains(c) {
            match c {
                '(' | '[' | '{' => self.paren_depth += 1,
                ')' | ']' | '}' => {
                    if self.paren_depth == 0 {
                        return self.err(format!("unmatched '{c}'"));
                    }
                    self.paren_depth -= 1;
                }
                _ => {}
            }
            self.bump();
            self.push(c.to_string(), TokenKind::Delimiter);
            return Ok(());
        }
        self.err(format!("unexpected character '{c}'"))
    }
}
