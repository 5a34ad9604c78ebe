//! Byte-pair encoding over token texts.
//!
//! Merges are learned word-internally: each token text becomes a character
//! sequence plus a final `</w>` sentinel symbol, and the most frequent
//! adjacent pair is merged repeatedly (ties go to the lexicographically
//! smallest pair, so training order is deterministic). Control markers
//! (`<pad>` `<unk>` `<eol>` `<str>` `<bos>` `<ind>` `<ded>`) pass through
//! whole and are never split.
//!
//! A unit ends a word when it ends with `</w>` or is a pass-through
//! marker; decoding rejects streams that violate this framing.

use std::collections::HashMap;

use thiserror::Error;

use crate::pycorpus::marker;

/// End-of-word sentinel appended to every word before merging.
pub const WORD_END: &str = "</w>";

/// First line of the merges file.
pub const MERGES_HEADER: &str = "#version: linecomp-bpe-1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BpeError {
    #[error("merges file must start with '{MERGES_HEADER}'")]
    BadHeader,
    #[error("merges line {line}: expected two space-separated symbols")]
    BadMergeLine { line: usize },
    #[error("malformed unit stream: {0}")]
    MalformedStream(String),
}

/// Tokens that bypass segmentation entirely.
pub fn is_passthrough(text: &str) -> bool {
    matches!(
        text,
        marker::PAD | marker::UNK | marker::EOL | marker::STR | marker::BOS | marker::IND
            | marker::DED
    )
}

/// Does this unit end a word?
pub fn is_word_boundary(unit: &str) -> bool {
    unit.ends_with(WORD_END) || is_passthrough(unit)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    fn from_merges(merges: Vec<(String, String)>) -> Self {
        let ranks = merges
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, pair)| (pair, i))
            .collect();
        Self { merges, ranks }
    }

    pub fn n_merges(&self) -> usize {
        self.merges.len()
    }

    /// Learns up to `n_merges` merges from a stream of token texts.
    /// Stops early when no pair occurs twice.
    pub fn train<I, S>(texts: I, n_merges: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        // Aggregate identical words; training only needs their counts.
        let mut word_counts: HashMap<Vec<String>, usize> = HashMap::new();
        for text in texts {
            let text = text.as_ref();
            if is_passthrough(text) || text.is_empty() {
                continue;
            }
            let mut symbols: Vec<String> = text.chars().map(String::from).collect();
            symbols.push(WORD_END.to_string());
            *word_counts.entry(symbols).or_insert(0) += 1;
        }

        let mut merges = Vec::new();
        for _ in 0..n_merges {
            let mut pair_counts: HashMap<(&str, &str), usize> = HashMap::new();
            for (word, count) in &word_counts {
                for pair in word.windows(2) {
                    *pair_counts
                        .entry((pair[0].as_str(), pair[1].as_str()))
                        .or_insert(0) += count;
                }
            }
            let Some((&best, &count)) = pair_counts
                .iter()
                .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
            else {
                break;
            };
            if count < 2 {
                break;
            }
            let best = (best.0.to_string(), best.1.to_string());
            let joined = format!("{}{}", best.0, best.1);
            word_counts = word_counts
                .into_iter()
                .map(|(word, count)| (apply_merge(&word, &best, &joined), count))
                .collect();
            merges.push(best);
        }
        Self::from_merges(merges)
    }

    /// Splits one token text into subword units; the last unit carries
    /// `</w>`. Pass-through markers come back unchanged.
    pub fn encode_word(&self, text: &str) -> Vec<String> {
        if is_passthrough(text) {
            return vec![text.to_string()];
        }
        let mut symbols: Vec<String> = text.chars().map(String::from).collect();
        symbols.push(WORD_END.to_string());
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|p| {
                    self.ranks
                        .get(&(p[0].clone(), p[1].clone()))
                        .copied()
                })
                .min();
            let Some(rank) = best else {
                return symbols;
            };
            let pair = &self.merges[rank];
            let joined = format!("{}{}", pair.0, pair.1);
            symbols = apply_merge(&symbols, pair, &joined);
        }
    }

    /// Encodes a token-text stream unit by unit.
    pub fn encode_stream<I, S>(&self, texts: I) -> Vec<String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        for t in texts {
            out.extend(self.encode_word(t.as_ref()));
        }
        out
    }

    /// Reassembles token texts from subword units.
    pub fn decode_stream<S: AsRef<str>>(&self, units: &[S]) -> Result<Vec<String>, BpeError> {
        if units.is_empty() {
            return Err(BpeError::MalformedStream("empty stream".into()));
        }
        let mut words = Vec::new();
        let mut partial = String::new();
        for u in units {
            let u = u.as_ref();
            if is_passthrough(u) {
                if !partial.is_empty() {
                    return Err(BpeError::MalformedStream(format!(
                        "marker '{u}' inside a word"
                    )));
                }
                words.push(u.to_string());
            } else if let Some(stem) = u.strip_suffix(WORD_END) {
                partial.push_str(stem);
                words.push(std::mem::take(&mut partial));
            } else {
                partial.push_str(u);
            }
        }
        if !partial.is_empty() {
            return Err(BpeError::MalformedStream(
                "stream ends inside a word".into(),
            ));
        }
        Ok(words)
    }

    /// Serializes merges, one per line, under a version header.
    pub fn to_text(&self) -> String {
        let mut out = String::from(MERGES_HEADER);
        out.push('\n');
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MERGES_HEADER) {
            return Err(BpeError::BadHeader);
        }
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let Some((a, b)) = line.split_once(' ') else {
                return Err(BpeError::BadMergeLine { line: i + 2 });
            };
            if a.is_empty() || b.is_empty() || b.contains(' ') {
                return Err(BpeError::BadMergeLine { line: i + 2 });
            }
            merges.push((a.to_string(), b.to_string()));
        }
        Ok(Self::from_merges(merges))
    }
}

fn apply_merge(word: &[String], pair: &(String, String), joined: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(joined.to_string());
            i += 2;
        } else {
            out.push(word[i].clone());
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Hand-computed merge order for {ab x2, abc x1}:
    /// (a,b) count 3; (ab,</w>) count 2; then (ab,c) and (c,</w>) tie at
    /// 1, below the threshold of 2, so training stops at two merges.
    #[test]
    fn learns_merges_most_frequent_first() {
        let model = BpeModel::train(["ab", "ab", "abc"], 10);
        assert_eq!(
            model.merges,
            vec![
                ("a".to_string(), "b".to_string()),
                ("ab".to_string(), "</w>".to_string()),
            ]
        );
        assert_eq!(model.encode_word("ab"), vec!["ab</w>"]);
        assert_eq!(model.encode_word("abc"), vec!["ab", "c", "</w>"]);
        assert_eq!(model.encode_word("xa"), vec!["x", "a", "</w>"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // All pairs occur exactly twice; smallest pair must win first.
        let model = BpeModel::train(["ba", "ba"], 1);
        assert_eq!(
            model.merges,
            vec![("a".to_string(), "</w>".to_string())]
        );
    }

    #[test]
    fn merge_cap_limits_training() {
        let model = BpeModel::train(["ab", "ab", "abc"], 1);
        assert_eq!(model.n_merges(), 1);
    }

    #[test]
    fn markers_pass_through_whole() {
        let model = BpeModel::train(["ab", "ab"], 10);
        assert_eq!(model.encode_word("<eol>"), vec!["<eol>"]);
        assert_eq!(model.encode_word("<ind>"), vec!["<ind>"]);
        let units = model.encode_stream(["ab", "<eol>", "<ded>"]);
        assert_eq!(units, vec!["ab</w>", "<eol>", "<ded>"]);
        assert!(is_word_boundary("<eol>"));
        assert!(is_word_boundary("ab</w>"));
        assert!(!is_word_boundary("ab"));
    }

    #[test]
    fn decode_rejects_malformed_streams() {
        let model = BpeModel::train(["ab"], 0);
        let empty: [&str; 0] = [];
        assert!(matches!(
            model.decode_stream(&empty),
            Err(BpeError::MalformedStream(_))
        ));
        assert!(matches!(
            model.decode_stream(&["a", "b"]),
            Err(BpeError::MalformedStream(_))
        ));
        assert!(matches!(
            model.decode_stream(&["a", "<eol>"]),
            Err(BpeError::MalformedStream(_))
        ));
    }

    #[test]
    fn merges_file_round_trips() {
        let model = BpeModel::train(["ab", "ab", "abc", "abc", "xy"], 10);
        let text = model.to_text();
        assert!(text.starts_with(MERGES_HEADER));
        let back = BpeModel::from_text(&text).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_bad_files() {
        assert_eq!(BpeModel::from_text("nope\n"), Err(BpeError::BadHeader));
        let text = format!("{MERGES_HEADER}\na b c\n");
        assert_eq!(
            BpeModel::from_text(&text),
            Err(BpeError::BadMergeLine { line: 2 })
        );
    }

    proptest! {
        #[test]
        fn encode_then_decode_is_identity(
            words in proptest::collection::vec("[a-z]{1,8}", 1..20),
            n_merges in 0usize..20,
        ) {
            let model = BpeModel::train(words.iter().map(String::as_str), n_merges);
            let mut stream: Vec<String> = Vec::new();
            for (i, w) in words.iter().enumerate() {
                stream.push(w.clone());
                if i % 3 == 2 {
                    stream.push(marker::EOL.to_string());
                }
            }
            let units = model.encode_stream(&stream);
            let decoded = model.decode_stream(&units).unwrap();
            prop_assert_eq!(decoded, stream);
        }
    }
}
