use std::fmt;

use super::LogicalLine;

/// Aggregate corpus measurements, reported by `prep` and the benchmark
/// table. Action counts are only available once statements have been
/// parsed, so that column is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_files: usize,
    pub files_skipped: usize,
    pub n_statements: usize,
    pub avg_lines_per_file: f64,
    pub avg_tokens_per_statement: f64,
    pub avg_actions_per_statement: Option<f64>,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "files                  {}", self.n_files)?;
        writeln!(f, "files skipped          {}", self.files_skipped)?;
        writeln!(f, "statements             {}", self.n_statements)?;
        writeln!(f, "avg lines per file     {:.2}", self.avg_lines_per_file)?;
        write!(f, "avg tokens per stmt    {:.2}", self.avg_tokens_per_statement)?;
        if let Some(a) = self.avg_actions_per_statement {
            write!(f, "\navg actions per stmt   {a:.2}")?;
        }
        Ok(())
    }
}

/// Accumulates statistics file by file.
#[derive(Debug, Default)]
pub struct StatsBuilder {
    files: usize,
    skipped: usize,
    statements: usize,
    content_tokens: usize,
    actions: usize,
    statements_with_actions: usize,
}

impl StatsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one successfully lexed file.
    pub fn add_file(&mut self, lines: &[LogicalLine]) {
        self.files += 1;
        self.statements += lines.len();
        self.content_tokens += lines.iter().map(|l| l.content().len()).sum::<usize>();
    }

    /// Records a file dropped from the corpus (lex or parse failure).
    pub fn add_skipped(&mut self) {
        self.skipped += 1;
    }

    /// Records the action count of one parsed statement.
    pub fn add_actions(&mut self, count: usize) {
        self.actions += count;
        self.statements_with_actions += 1;
    }

    pub fn finish(self) -> CorpusStats {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        CorpusStats {
            n_files: self.files,
            files_skipped: self.skipped,
            n_statements: self.statements,
            avg_lines_per_file: ratio(self.statements, self.files),
            avg_tokens_per_statement: ratio(self.content_tokens, self.statements),
            avg_actions_per_statement: if self.statements_with_actions == 0 {
                None
            } else {
                Some(ratio(self.actions, self.statements_with_actions))
            },
        }
    }
}

/// Statistics for a lexed corpus, without action counts.
pub fn corpus_stats<'a, I>(files: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a [LogicalLine]>,
{
    let mut b = StatsBuilder::new();
    for lines in files {
        b.add_file(lines);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pycorpus::tokenize_file;

    #[test]
    fn averages_over_files_and_statements() {
        let a = tokenize_file("x = 1\ny = 2\n").unwrap();
        let b = tokenize_file("if x:\n    y = x + 1\n").unwrap();
        let stats = corpus_stats([a.as_slice(), b.as_slice()]);
        assert_eq!(stats.n_files, 2);
        assert_eq!(stats.n_statements, 4);
        assert_eq!(stats.avg_lines_per_file, 2.0);
        // 3 + 3 + 3 + 5 content tokens over 4 statements
        assert_eq!(stats.avg_tokens_per_statement, 3.5);
        assert_eq!(stats.avg_actions_per_statement, None);
    }

    #[test]
    fn action_counts_show_up_once_recorded() {
        let a = tokenize_file("x = 1\n").unwrap();
        let mut b = StatsBuilder::new();
        b.add_file(&a);
        b.add_skipped();
        b.add_actions(5);
        let stats = b.finish();
        assert_eq!(stats.files_skipped, 1);
        assert_eq!(stats.avg_actions_per_statement, Some(5.0));
    }
}
