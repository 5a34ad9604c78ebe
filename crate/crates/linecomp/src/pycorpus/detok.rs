use super::{classify_token_text, LogicalLine, Token, TokenKind};

/// Canonical rendering of a token-text sequence.
///
/// Tokens are joined by single spaces, except:
///
/// * no space after `(` `[` `{`, nor before `)` `]` `}` `,` `;` `:`;
/// * no space around `.`, but a space stays before `.` after a number
///   literal (so `1 .real` cannot re-lex as `1.`) and after `.` before a
///   keyword (relative imports: `from . import x`);
/// * no space around `=` inside brackets (keyword arguments, defaults);
/// * no space before `(` or `[` after an identifier or a closing bracket
///   (calls and subscripts).
///
/// The output re-lexes to the same token sequence.
pub fn render_token_texts<S: AsRef<str>>(texts: &[S]) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    let mut prev: Option<&str> = None;
    for t in texts {
        let t = t.as_ref();
        if let Some(p) = prev {
            let no_space = matches!(p, "(" | "[" | "{")
                || matches!(t, ")" | "]" | "}" | "," | ";" | ":")
                || p == "." && classify_token_text(t) != TokenKind::Keyword
                || t == "."
                    && !matches!(
                        classify_token_text(p),
                        TokenKind::NumberLiteral | TokenKind::Keyword
                    )
                || depth > 0 && (p == "=" || t == "=")
                || matches!(t, "(" | "[")
                    && (classify_token_text(p) == TokenKind::Identifier
                        || matches!(p, ")" | "]" | "}"));
            if !no_space {
                out.push(' ');
            }
        }
        out.push_str(t);
        match t {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth = depth.saturating_sub(1),
            _ => {}
        }
        prev = Some(t);
    }
    out
}

/// Renders one logical line's content (no `<eol>`, no indentation).
pub fn render_line_text(tokens: &[Token]) -> String {
    let content: Vec<&str> = tokens
        .iter()
        .filter(|t| !matches!(t.kind, TokenKind::Eol | TokenKind::Indent | TokenKind::Dedent))
        .map(|t| t.text.as_str())
        .collect();
    render_token_texts(&content)
}

/// Renders a tokenized file back to source text, 4 spaces per block level.
/// The output re-tokenizes to the same token sequence.
pub fn detokenize(lines: &[LogicalLine]) -> String {
    let mut out = String::new();
    for line in lines {
        for _ in 0..line.indent_level {
            out.push_str("    ");
        }
        out.push_str(&render_line_text(&line.tokens));
        out.push('\n');
    }
    out
}
