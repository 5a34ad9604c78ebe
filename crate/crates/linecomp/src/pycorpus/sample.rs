use super::{LogicalLine, Token, TokenKind};

/// One next-line completion task: predict `target` given `context`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionSample {
    /// Flattened tokens of lines `1..=k`, including `<eol>` markers and
    /// indent events, plus the target line's own leading indent events
    /// (the editor already knows the cursor's indentation).
    pub context: Vec<Token>,
    /// The line to predict.  Never contains indent events.
    pub target: LogicalLine,
    pub file_id: String,
    /// Number of context lines.
    pub context_lines: usize,
}

impl CompletionSample {
    pub fn id(&self) -> String {
        format!("{}#{}", self.file_id, self.context_lines)
    }

    /// Re-splits the flattened context into logical lines, dropping indent
    /// events; used by the grammar-constrained mode, which re-parses
    /// context lines.
    pub fn context_line_tokens(&self) -> Vec<Vec<Token>> {
        let mut lines = Vec::new();
        let mut cur = Vec::new();
        for tok in &self.context {
            match tok.kind {
                TokenKind::Indent | TokenKind::Dedent => {}
                TokenKind::Eol => {
                    cur.push(tok.clone());
                    lines.push(std::mem::take(&mut cur));
                }
                _ => cur.push(tok.clone()),
            }
        }
        lines
    }
}

/// Extracts up to `N - 1` samples from a tokenized file of `N` lines.
///
/// A line is skipped as a target when it is an import statement, has more
/// than 100 content tokens, or would make context plus target exceed
/// `max_len` symbols.
pub fn extract_samples(
    lines: &[LogicalLine],
    file_id: &str,
    max_len: usize,
) -> Vec<CompletionSample> {
    let mut samples = Vec::new();
    let mut context: Vec<Token> = Vec::new();
    for k in 1..lines.len() {
        let prev = &lines[k - 1];
        context.extend(prev.indent_events.iter().cloned());
        context.extend(prev.tokens.iter().cloned());
        let target = &lines[k];
        let ctx_len = context.len() + target.indent_events.len();
        let content_len = target.content().len();
        let is_import = target
            .content()
            .first()
            .is_some_and(|t| t.kind == TokenKind::Keyword && (t.text == "import" || t.text == "from"));
        if is_import || content_len > 100 || ctx_len + content_len + 1 > max_len {
            continue;
        }
        let mut ctx = context.clone();
        ctx.extend(target.indent_events.iter().cloned());
        samples.push(CompletionSample {
            context: ctx,
            target: LogicalLine { indent_events: Vec::new(), ..target.clone() },
            file_id: file_id.to_string(),
            context_lines: k,
        });
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::super::tokenize_file;
    use super::*;

    #[test]
    fn yields_one_sample_per_following_line() {
        let lines = tokenize_file("a = 1\nb = 2\nc = 3\n").unwrap();
        let samples = extract_samples(&lines, "f.py", 1500);
        assert_eq!(samples.len(), 2);
        let ctx: Vec<&str> = samples[0].context.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(ctx, ["a", "=", "1", "<eol>"]);
        let tgt: Vec<&str> = samples[0].target.content().iter().map(|t| t.text.as_str()).collect();
        assert_eq!(tgt, ["b", "=", "2"]);
        assert_eq!(samples[1].context_lines, 2);
    }

    #[test]
    fn skips_import_targets() {
        let lines = tokenize_file("x = 1\nimport os\nfrom sys import path\ny = 2\n").unwrap();
        let samples = extract_samples(&lines, "f.py", 1500);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].context_lines, 3);
    }

    #[test]
    fn skips_overlong_targets() {
        let mut src = String::from("x = 1\ny = [");
        for i in 0..60 {
            src.push_str(&format!("{},", i));
        }
        src.push_str("]\n");
        let lines = tokenize_file(&src).unwrap();
        assert!(lines[1].content().len() > 100);
        assert!(extract_samples(&lines, "f.py", 1500).is_empty());
    }

    #[test]
    fn respects_max_len() {
        let lines = tokenize_file("a = 1\nb = 2\n").unwrap();
        assert_eq!(extract_samples(&lines, "f.py", 1500).len(), 1);
        assert!(extract_samples(&lines, "f.py", 6).is_empty());
        assert_eq!(extract_samples(&lines, "f.py", 8).len(), 1);
    }

    #[test]
    fn target_indentation_moves_into_context() {
        let lines = tokenize_file("if a:\n    b = 1\n").unwrap();
        let samples = extract_samples(&lines, "f.py", 1500);
        assert_eq!(samples.len(), 1);
        let ctx: Vec<&str> = samples[0].context.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(ctx, ["if", "a", ":", "<eol>", "<ind>"]);
        assert!(samples[0]
            .target
            .tokens
            .iter()
            .all(|t| !matches!(t.kind, TokenKind::Indent | TokenKind::Dedent)));
        assert!(samples[0].target.indent_events.is_empty());
    }

    #[test]
    fn context_line_splitting() {
        let lines = tokenize_file("if a:\n    b = 1\n    c = 2\n").unwrap();
        let samples = extract_samples(&lines, "f.py", 1500);
        let split = samples[1].context_line_tokens();
        assert_eq!(split.len(), 2);
        let first: Vec<&str> = split[0].iter().map(|t| t.text.as_str()).collect();
        assert_eq!(first, ["if", "a", ":", "<eol>"]);
        let second: Vec<&str> = split[1].iter().map(|t| t.text.as_str()).collect();
        assert_eq!(second, ["b", "=", "1", "<eol>"]);
    }
}
