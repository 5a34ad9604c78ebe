//! Wall-clock measurement of end-to-end completion.
//!
//! Runs are serialized: parallel completions would contend for cores and
//! poison per-line timings.

use std::time::Instant;

use crate::neural::{ModelConfig, ModelParams};
use crate::pycorpus::Token;
use crate::Scalar;

use super::beam::BeamParams;
use super::engine::{complete_line, Mode, ModeArtifacts};

/// One row of the timing comparison.
#[derive(Debug, Clone)]
pub struct BenchEntry {
    pub label: String,
    pub mode: Mode,
    pub beam_width: usize,
    /// Lines that completed (successfully or flagged) and were timed.
    pub n_lines: usize,
    /// Contexts rejected before search (over budget, unparsable).
    pub failures: usize,
    /// Mean end-to-end seconds per completed line.
    pub mean_seconds: f64,
    /// Fraction of timed wall-clock spent computing legality masks;
    /// meaningful for syntax mode, near zero elsewhere.
    pub mask_share: f64,
}

/// Times `complete_line` over a fixed context set, one line at a time.
///
/// The first context runs untimed as a warm-up so allocator and cache
/// effects land outside the measurement.
pub fn bench_inference<S: Scalar>(
    label: &str,
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    artifacts: &ModeArtifacts,
    contexts: &[Vec<Token>],
    bparams: &BeamParams,
) -> BenchEntry {
    if let Some(first) = contexts.first() {
        let _ = complete_line(params, cfg, artifacts, first, bparams);
    }

    let mut n_lines = 0;
    let mut failures = 0;
    let mut total_seconds = 0.0;
    let mut mask_seconds = 0.0;
    for context in contexts {
        let start = Instant::now();
        match complete_line(params, cfg, artifacts, context, bparams) {
            Ok(out) => {
                total_seconds += start.elapsed().as_secs_f64();
                mask_seconds += out.stats.mask_seconds;
                n_lines += 1;
            }
            Err(_) => failures += 1,
        }
    }
    BenchEntry {
        label: label.to_string(),
        mode: artifacts.mode(),
        beam_width: bparams.beam_width,
        n_lines,
        failures,
        mean_seconds: if n_lines > 0 {
            total_seconds / n_lines as f64
        } else {
            0.0
        },
        mask_share: if total_seconds > 0.0 {
            (mask_seconds / total_seconds).min(1.0)
        } else {
            0.0
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Arch;
    use crate::pycorpus::{build_vocab, flatten_lines, tokenize_file};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn timings_cover_every_usable_context() {
        let source = "x = 1\ny = x\n";
        let lines = tokenize_file(source).unwrap();
        let stream = flatten_lines(&lines);
        let vocab = build_vocab(stream.iter().map(|t| t.text.as_str()), 32).unwrap();
        let cfg = ModelConfig {
            arch: Arch::Gru,
            vocab: vocab.len(),
            d_model: 8,
            d_embed: 8,
            d_ff: 16,
            n_heads: 2,
            n_layers: 1,
            max_len: 32,
            dropout_keep: 1.0,
            gru_hidden: 8,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        let artifacts = ModeArtifacts::Token { vocab: &vocab };
        let contexts = vec![
            flatten_lines(&tokenize_file("x = 1\n").unwrap()),
            flatten_lines(&tokenize_file("y = x\n").unwrap()),
            (0..40)
                .map(|_| crate::pycorpus::Token::new("x", crate::pycorpus::TokenKind::Identifier))
                .collect(),
        ];
        let entry = bench_inference(
            "toy",
            &params,
            &cfg,
            &artifacts,
            &contexts,
            &BeamParams {
                beam_width: 2,
                max_target_len: 6,
                length_normalize: false,
            },
        );
        assert_eq!(entry.n_lines, 2);
        assert_eq!(entry.failures, 1, "the 40-token context is over budget");
        assert!(entry.mean_seconds > 0.0);
        assert!((0.0..=1.0).contains(&entry.mask_share));
    }
}
