use std::collections::HashMap;

use thiserror::Error;

use super::marker;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("vocabulary cap {0} is smaller than the reserved set")]
    CapTooSmall(usize),
}

/// Fixed reserved entries; they always occupy the lowest indices in order.
pub const RESERVED: [&str; 5] =
    [marker::PAD, marker::UNK, marker::EOL, marker::STR, marker::BOS];

/// Index-stable token vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Vocab {
    pub fn from_entries(entries: Vec<String>) -> Self {
        let lookup = entries
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { entries, lookup }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.lookup.get(token).copied()
    }

    /// Index of `token`, falling back to `<unk>`.
    pub fn encode(&self, token: &str) -> u32 {
        self.index_of(token).unwrap_or(Self::UNK)
    }

    pub fn token_at(&self, index: u32) -> Option<&str> {
        self.entries.get(index as usize).map(|s| s.as_str())
    }

    pub const PAD: u32 = 0;
    pub const UNK: u32 = 1;
    pub const EOL: u32 = 2;
    pub const STR: u32 = 3;
    pub const BOS: u32 = 4;

    /// One entry per line; the line number (0-based) is the index.
    pub fn to_text(&self) -> String {
        let mut s = self.entries.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_entries(text.lines().map(|l| l.to_string()).collect())
    }
}

/// Distinct tokens ranked by count (descending), ties broken by first
/// occurrence so the result is independent of hash order.  Reserved
/// markers are excluded; at most `cap` entries are returned.
pub fn rank_by_frequency<'a, I>(tokens: I, cap: usize) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, (u64, usize)> = HashMap::new();
    for tok in tokens {
        let next_idx = counts.len();
        let entry = counts.entry(tok).or_insert((0, next_idx));
        entry.0 += 1;
    }
    let mut ranked: Vec<(&str, (u64, usize))> = counts
        .into_iter()
        .filter(|(t, _)| !RESERVED.contains(t))
        .collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    ranked
        .into_iter()
        .take(cap)
        .map(|(t, _)| t.to_string())
        .collect()
}

/// Builds a frequency vocabulary over `tokens`, keeping the reserved
/// markers first and then the most frequent tokens up to `cap` total
/// entries.
pub fn build_vocab<'a, I>(tokens: I, cap: usize) -> Result<Vocab, VocabError>
where
    I: IntoIterator<Item = &'a str>,
{
    if cap < RESERVED.len() {
        return Err(VocabError::CapTooSmall(cap));
    }
    let mut n_seen = 0usize;
    let counted = tokens.into_iter().inspect(|_| n_seen += 1);
    let ranked = rank_by_frequency(counted, cap - RESERVED.len());
    if n_seen == 0 {
        return Err(VocabError::EmptyCorpus);
    }
    let mut entries: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    entries.extend(ranked);
    Ok(Vocab::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_come_first() {
        let toks = ["a", "b", "a", "c", "a", "b"];
        let v = build_vocab(toks.iter().copied(), 80_000).unwrap();
        assert_eq!(&v.entries()[..5], &RESERVED.map(String::from));
        assert_eq!(v.token_at(5), Some("a"));
        assert_eq!(v.token_at(6), Some("b"));
        assert_eq!(v.token_at(7), Some("c"));
    }

    #[test]
    fn cap_truncates_by_frequency() {
        let toks = ["a", "a", "a", "b", "b", "c"];
        let v = build_vocab(toks.iter().copied(), RESERVED.len() + 2).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v.token_at(5), Some("a"));
        assert_eq!(v.token_at(6), Some("b"));
        assert_eq!(v.index_of("c"), None);
        assert_eq!(v.encode("c"), Vocab::UNK);
    }

    #[test]
    fn ties_break_by_first_occurrence() {
        let toks = ["z", "y", "x", "z", "y", "x"];
        let v = build_vocab(toks.iter().copied(), 80_000).unwrap();
        assert_eq!(v.token_at(5), Some("z"));
        assert_eq!(v.token_at(6), Some("y"));
        assert_eq!(v.token_at(7), Some("x"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(build_vocab([].iter().copied(), 10), Err(VocabError::EmptyCorpus));
    }

    #[test]
    fn deterministic_across_runs() {
        let toks: Vec<String> = (0..500).map(|i| format!("t{}", i % 37)).collect();
        let a = build_vocab(toks.iter().map(|s| s.as_str()), 30).unwrap();
        let b = build_vocab(toks.iter().map(|s| s.as_str()), 30).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip() {
        let toks = ["a", "b", "a"];
        let v = build_vocab(toks.iter().copied(), 100).unwrap();
        assert_eq!(Vocab::from_text(&v.to_text()), v);
    }
}
