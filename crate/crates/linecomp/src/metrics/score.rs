//! Per-sample scoring: exact match, MRR, BLEU-4, edit similarity.

use std::collections::HashMap;

use thiserror::Error;

use crate::pycorpus::{Token, TokenKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("BLEU needs a nonempty target")]
    EmptyTarget,
}

/// How many leading candidates an exact match may appear in.
pub const MATCH_WINDOW: usize = 5;

/// Stand-in text for every identifier during anonymized comparison.
///
/// All identifiers collapse to this one placeholder, on both sides,
/// attribute names included.  That is deliberately weaker than
/// alpha-equivalence: the comparison ignores name information entirely,
/// so `a.push(b)` and `x.send(y)` match anonymized.  Keywords and
/// literals keep their text; `<str>` compares literally.
pub const ID_PLACEHOLDER: &str = "<id>";

fn comparison_key(token: &Token, anonymize: bool) -> &str {
    if anonymize && token.kind == TokenKind::Identifier {
        ID_PLACEHOLDER
    } else {
        &token.text
    }
}

fn same_line(a: &[Token], b: &[Token], anonymize: bool) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| comparison_key(x, anonymize) == comparison_key(y, anonymize))
}

/// 1-based rank of the first candidate among the top [`MATCH_WINDOW`]
/// whose tokens equal the target's, or `None`.
pub fn exact_match<C>(candidates: &[C], target: &[Token], anonymize: bool) -> Option<usize>
where
    C: AsRef<[Token]>,
{
    candidates
        .iter()
        .take(MATCH_WINDOW)
        .position(|c| same_line(c.as_ref(), target, anonymize))
        .map(|i| i + 1)
}

/// Mean reciprocal rank; an absent rank contributes 0.
pub fn mrr(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    let total: f64 = ranks
        .iter()
        .map(|r| r.map_or(0.0, |rank| 1.0 / rank as f64))
        .sum();
    total / ranks.len() as f64
}

/// Clipped n-gram match and total counts for orders 1..=4.
pub type NgramCounts = [(usize, usize); 4];

/// Modified n-gram precision counts of `candidate` against `target`.
pub fn ngram_counts<T: AsRef<str>>(candidate: &[T], target: &[T]) -> NgramCounts {
    let mut out = [(0usize, 0usize); 4];
    for (n, slot) in out.iter_mut().enumerate() {
        let n = n + 1;
        let total = candidate.len().saturating_sub(n - 1);
        let mut reference: HashMap<Vec<&str>, usize> = HashMap::new();
        if target.len() >= n {
            for gram in target.windows(n) {
                let key: Vec<&str> = gram.iter().map(|t| t.as_ref()).collect();
                *reference.entry(key).or_insert(0) += 1;
            }
        }
        let mut matched = 0;
        if candidate.len() >= n {
            for gram in candidate.windows(n) {
                let key: Vec<&str> = gram.iter().map(|t| t.as_ref()).collect();
                if let Some(left) = reference.get_mut(&key) {
                    if *left > 0 {
                        *left -= 1;
                        matched += 1;
                    }
                }
            }
        }
        *slot = (matched, total);
    }
    out
}

/// Brevity penalty `e^(1 - r/c)`, capped at 1.
fn brevity_penalty(candidate_len: usize, target_len: usize) -> f64 {
    if candidate_len >= target_len {
        1.0
    } else if candidate_len == 0 {
        0.0
    } else {
        (1.0 - target_len as f64 / candidate_len as f64).exp()
    }
}

/// Geometric mean of the four precisions with uniform weights.
fn precision_mean(precisions: [f64; 4]) -> f64 {
    if precisions.iter().any(|p| *p <= 0.0) {
        return 0.0;
    }
    (precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0).exp()
}

/// Sentence-level BLEU-4 with add-one smoothing on zero-match orders.
///
/// Orders the candidate is too short to have at all count as smoothed
/// 1/1, which keeps `bleu4(x, x) = 1` for short lines; the brevity
/// penalty handles length on its own.
pub fn bleu4<T: AsRef<str>>(candidate: &[T], target: &[T]) -> Result<f64, MetricError> {
    if target.is_empty() {
        return Err(MetricError::EmptyTarget);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let counts = ngram_counts(candidate, target);
    let mut precisions = [0.0; 4];
    for (i, (matched, total)) in counts.iter().enumerate() {
        precisions[i] = if *matched == 0 {
            (*matched + 1) as f64 / (*total + 1) as f64
        } else {
            *matched as f64 / *total as f64
        };
    }
    Ok(brevity_penalty(candidate.len(), target.len()) * precision_mean(precisions))
}

/// Corpus-level BLEU-4 without smoothing: precisions pool match and
/// total counts over all pairs, and the brevity penalty uses pooled
/// lengths.  Degenerate (0) when any order has no matches corpus-wide.
pub fn corpus_bleu4(stats: &[(NgramCounts, usize, usize)]) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let mut cand_len = 0;
    let mut target_len = 0;
    for (counts, c, r) in stats {
        for n in 0..4 {
            matched[n] += counts[n].0;
            total[n] += counts[n].1;
        }
        cand_len += c;
        target_len += r;
    }
    let mut precisions = [0.0; 4];
    for n in 0..4 {
        if total[n] == 0 {
            return 0.0;
        }
        precisions[n] = matched[n] as f64 / total[n] as f64;
    }
    brevity_penalty(cand_len, target_len) * precision_mean(precisions)
}

/// Unit-cost Levenshtein distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 − lev(a, b) / (|a| + |b|)`; two empty strings count as identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let la = a.chars().count();
    let lb = b.chars().count();
    if la + lb == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / (la + lb) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toks(texts: &[&str]) -> Vec<Token> {
        texts
            .iter()
            .map(|t| Token::new(*t, crate::pycorpus::classify_token_text(t)))
            .collect()
    }

    #[test]
    fn plain_match_ranks_the_first_equal_candidate() {
        let target = toks(&["x", "=", "1"]);
        let candidates = vec![toks(&["x", "=", "2"]), toks(&["x", "=", "1"])];
        assert_eq!(exact_match(&candidates, &target, false), Some(2));
        assert_eq!(exact_match(&candidates[..1], &target, false), None);
        assert_eq!(exact_match(&candidates[1..], &target, false), Some(1));
    }

    #[test]
    fn matches_beyond_the_window_do_not_count() {
        let target = toks(&["y"]);
        let mut candidates = vec![toks(&["n"]); 5];
        candidates.push(toks(&["y"]));
        assert_eq!(exact_match(&candidates, &target, false), None);
        candidates[3] = toks(&["y"]);
        assert_eq!(exact_match(&candidates, &target, false), Some(4));
    }

    #[test]
    fn anonymization_erases_identifier_names_only() {
        let target = toks(&["b", "=", "bar", "(", ")"]);
        let candidate = toks(&["a", "=", "foo", "(", ")"]);
        assert_eq!(exact_match(&[candidate.clone()], &target, false), None);
        assert_eq!(exact_match(&[candidate], &target, true), Some(1));

        let kw_target = toks(&["return", "True"]);
        let kw_candidate = toks(&["yield", "True"]);
        assert_eq!(exact_match(&[kw_candidate], &kw_target, true), None);

        let num_target = toks(&["x", "=", "1"]);
        let num_candidate = toks(&["y", "=", "2"]);
        assert_eq!(exact_match(&[num_candidate], &num_target, true), None);
    }

    #[test]
    fn anonymized_match_ignores_any_renaming() {
        let mut rng = StdRng::seed_from_u64(77);
        let shape = ["v", ".", "append", "(", "w", ")"];
        let target = toks(&shape);
        for _ in 0..50 {
            let renamed: Vec<String> = shape
                .iter()
                .map(|t| {
                    if t.chars().all(|c| c.is_ascii_alphabetic()) {
                        format!("n{}", rng.random_range(0..1000))
                    } else {
                        t.to_string()
                    }
                })
                .collect();
            let cand = toks(&renamed.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            assert_eq!(exact_match(&[cand], &target, true), Some(1));
        }
    }

    #[test]
    fn mrr_follows_the_definition() {
        assert_eq!(mrr(&[Some(1), Some(1)]), 1.0);
        assert!((mrr(&[Some(3)]) - 0.3333).abs() < 1e-4);
        assert_eq!(mrr(&[Some(1), None]), 0.5);
        assert_eq!(mrr(&[]), 0.0);
    }

    #[test]
    fn identical_sequences_score_full_bleu() {
        for len in 1..8 {
            let seq: Vec<String> = (0..len).map(|i| format!("t{i}")).collect();
            let b = bleu4(&seq, &seq).unwrap();
            assert!((b - 1.0).abs() < 1e-12, "len {len}: {b}");
        }
    }

    #[test]
    fn short_candidate_pays_the_brevity_penalty() {
        let cand = vec!["a", "b", "c"];
        let target = vec!["a", "b", "c", "d", "e"];
        // All nonzero precisions are 1 (3/3, 2/2, 1/1) and the absent
        // 4-gram order smooths to 1/1, so BLEU = e^(1 - 5/3).
        let want = (1.0f64 - 5.0 / 3.0).exp();
        let got = bleu4(&cand, &target).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn disjoint_lines_hit_the_smoothed_floor() {
        let cand = vec!["a", "b", "c", "d"];
        let target = vec!["w", "x", "y", "z"];
        // Order k has 4 - k + 1 grams, all unmatched: p_k = 1 / (6 - k).
        let floor: f64 = (1..=4)
            .map(|k| 1.0 / (6 - k) as f64)
            .map(|p: f64| p.ln() / 4.0)
            .sum::<f64>()
            .exp();
        let got = bleu4(&cand, &target).unwrap();
        assert!((got - floor).abs() < 1e-12);
    }

    #[test]
    fn bleu_guards_its_edges() {
        assert_eq!(bleu4::<&str>(&["a"], &[]), Err(MetricError::EmptyTarget));
        assert_eq!(bleu4::<&str>(&[], &["a"]), Ok(0.0));
        let repeat = vec!["a", "a", "a"];
        let single = vec!["a"];
        // Clipping: only one unigram match is creditable.
        let counts = ngram_counts(&repeat, &single);
        assert_eq!(counts[0], (1, 3));
    }

    #[test]
    fn corpus_bleu_pools_counts_instead_of_averaging() {
        let a = (ngram_counts(&["a", "b"], &["a", "b"]), 2, 2);
        let b = (ngram_counts(&["x"], &["y"]), 1, 1);
        let pooled = corpus_bleu4(&[a, b]);
        // The 4-gram order has no totals anywhere, so the unsmoothed
        // corpus flavor degenerates to 0 on short-line corpora.
        assert_eq!(pooled, 0.0);

        let long: Vec<String> = (0..6).map(|i| format!("t{i}")).collect();
        let full = (ngram_counts(&long, &long), 6, 6);
        let half = (
            ngram_counts(&long[..5].to_vec(), &long),
            5,
            6,
        );
        let score = corpus_bleu4(&[full, half]);
        assert!(score > 0.0 && score < 1.0);
    }

    #[test]
    fn classic_edit_distances_check_out() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert!((edit_similarity("kitten", "sitting") - 0.7692).abs() < 1e-4);
        assert!((edit_similarity("a=1", "a=2") - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
        assert_eq!(edit_similarity("same", "same"), 1.0);
        assert_eq!(edit_similarity("", ""), 1.0);
        assert_eq!(edit_similarity("", "ab"), 0.0);
    }

    /// Exponential-time reference: the textbook recurrence, verbatim.
    fn lev_slow(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((ca, ra)), Some((cb, rb))) => {
                let sub = lev_slow(ra, rb) + usize::from(ca != cb);
                let del = lev_slow(ra, b) + 1;
                let ins = lev_slow(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    #[test]
    fn dp_matches_the_recursive_oracle() {
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..250 {
            let la = rng.random_range(0..=8);
            let lb = rng.random_range(0..=8);
            let a: String = (0..la)
                .map(|_| (b'a' + rng.random_range(0..4)) as char)
                .collect();
            let b: String = (0..lb)
                .map(|_| (b'a' + rng.random_range(0..4)) as char)
                .collect();
            let ca: Vec<char> = a.chars().collect();
            let cb: Vec<char> = b.chars().collect();
            assert_eq!(levenshtein(&a, &b), lev_slow(&ca, &cb), "{a:?} vs {b:?}");
        }
    }

    proptest! {
        #[test]
        fn edit_similarity_is_symmetric_and_bounded(
            a in "[a-c]{0,12}",
            b in "[a-c]{0,12}",
        ) {
            let ab = edit_similarity(&a, &b);
            let ba = edit_similarity(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
        }

        #[test]
        fn bleu_stays_in_range(
            cand in proptest::collection::vec("[a-d]", 0..10),
            target in proptest::collection::vec("[a-d]", 1..10),
        ) {
            let b = bleu4(&cand, &target).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
        }
    }
}
