//! Tokenization of Python-subset source into logical lines.
//!
//! A logical line is one statement: physical lines joined by backslash or
//! open-bracket continuation, ended by a real newline.  Every string
//! literal is masked to the `<str>` marker and every logical line is
//! terminated by an `<eol>` marker.  Indentation changes are reported as
//! `<ind>`/`<ded>` events attached to the line they precede; they appear
//! in flattened context streams but never inside a completion target.

mod detok;
mod lexer;
mod sample;
mod stats;
mod vocab;

pub use detok::{detokenize, render_line_text, render_token_texts};
pub use lexer::{classify_token_text, is_keyword, tokenize_file, LexError};
pub use sample::{extract_samples, CompletionSample};
pub use stats::{corpus_stats, CorpusStats, StatsBuilder};
pub use vocab::{build_vocab, rank_by_frequency, Vocab, VocabError};

/// Marker spellings shared across the pipeline.
pub mod marker {
    pub const PAD: &str = "<pad>";
    pub const UNK: &str = "<unk>";
    pub const EOL: &str = "<eol>";
    pub const STR: &str = "<str>";
    pub const BOS: &str = "<bos>";
    pub const IND: &str = "<ind>";
    pub const DED: &str = "<ded>";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    NumberLiteral,
    /// Always carries the text `<str>`; literal content is masked.
    StringLiteral,
    Operator,
    Delimiter,
    Indent,
    Dedent,
    /// The `<eol>` marker closing a logical line.
    Eol,
    /// Reserved stream markers such as `<pad>` or `<bos>`.
    Special,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Token { text: text.into(), kind }
    }

    pub fn eol() -> Self {
        Token::new(marker::EOL, TokenKind::Eol)
    }

    pub fn indent() -> Self {
        Token::new(marker::IND, TokenKind::Indent)
    }

    pub fn dedent() -> Self {
        Token::new(marker::DED, TokenKind::Dedent)
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineCategory {
    /// Expression statements, assignments, returns, and the like.
    Simple,
    /// A compound-statement header line ending in `:`.
    CompoundHeader,
}

/// One statement as the lexer sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalLine {
    /// Content tokens; the last one is always the `<eol>` marker.
    pub tokens: Vec<Token>,
    /// `<ind>`/`<ded>` events between the previous line and this one.
    pub indent_events: Vec<Token>,
    /// Absolute block depth of this line after `indent_events`.
    pub indent_level: usize,
    /// Physical line range (1-based, inclusive) the statement spans.
    pub source_span: (usize, usize),
    pub category: LineCategory,
}

impl LogicalLine {
    /// Content tokens without the trailing `<eol>`.
    pub fn content(&self) -> &[Token] {
        &self.tokens[..self.tokens.len() - 1]
    }
}

/// Keywords that begin compound-statement headers.
pub const COMPOUND_KEYWORDS: [&str; 11] = [
    "def", "if", "elif", "else", "for", "while", "class", "try", "except", "finally", "with",
];

/// True when the line is a compound header: it begins with a compound
/// keyword and the token before `<eol>` is a colon.
pub fn classify_line(tokens: &[Token]) -> LineCategory {
    let content = match tokens.last() {
        Some(t) if t.kind == TokenKind::Eol => &tokens[..tokens.len() - 1],
        _ => tokens,
    };
    let starts_compound = content
        .first()
        .is_some_and(|t| t.kind == TokenKind::Keyword && COMPOUND_KEYWORDS.contains(&t.text.as_str()));
    if starts_compound && content.last().is_some_and(|t| t.text == ":") {
        LineCategory::CompoundHeader
    } else {
        LineCategory::Simple
    }
}

/// Flattens lines into a single stream: indent events, then content, per line.
pub fn flatten_lines(lines: &[LogicalLine]) -> Vec<Token> {
    let mut out = Vec::new();
    for line in lines {
        out.extend(line.indent_events.iter().cloned());
        out.extend(line.tokens.iter().cloned());
    }
    out
}
