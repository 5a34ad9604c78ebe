//! Experiment provenance embedded in every output artifact.
//!
//! The record serializes as `x_`-prefixed key=value lines so it can ride
//! alongside a model config block (whose keys are unprefixed) in a single
//! checkpoint or report header without collisions.

use std::fmt::Write as _;

use linecomp::decode::Mode;
use linecomp::neural::Arch;

use crate::error::{data, CliError};

/// Everything needed to reproduce the run that produced an artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Unset until a model enters the picture (prep has no architecture).
    pub arch: Option<Arch>,
    /// Corpus path or manifest as given on the command line.
    pub corpus: String,
    pub vocab_cap: usize,
    pub bpe_merges: usize,
    /// "builtin" or the path of the grammar file that was loaded.
    pub grammar: String,
    pub seed: u64,
    pub beam: usize,
    pub max_target_len: usize,
    pub max_len: usize,
    /// Content hash over the source files, in walk order.
    pub input_hash: String,
}

impl ExperimentConfig {
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "x_mode={}", self.mode);
        if let Some(arch) = self.arch {
            let _ = writeln!(out, "x_arch={arch}");
        }
        let _ = writeln!(out, "x_corpus={}", self.corpus);
        let _ = writeln!(out, "x_vocab_cap={}", self.vocab_cap);
        let _ = writeln!(out, "x_bpe_merges={}", self.bpe_merges);
        let _ = writeln!(out, "x_grammar={}", self.grammar);
        let _ = writeln!(out, "x_seed={}", self.seed);
        let _ = writeln!(out, "x_beam={}", self.beam);
        let _ = writeln!(out, "x_max_target_len={}", self.max_target_len);
        let _ = writeln!(out, "x_max_len={}", self.max_len);
        let _ = writeln!(out, "x_input_hash={}", self.input_hash);
        out
    }

    /// Reads the `x_`-prefixed lines out of `text`, ignoring everything else.
    pub fn from_kv_text(text: &str) -> Result<Self, CliError> {
        let mut mode = None;
        let mut arch = None;
        let mut corpus = None;
        let mut vocab_cap = None;
        let mut bpe_merges = None;
        let mut grammar = None;
        let mut seed = None;
        let mut beam = None;
        let mut max_target_len = None;
        let mut max_len = None;
        let mut input_hash = None;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix("x_") else {
                continue;
            };
            let Some((key, value)) = rest.split_once('=') else {
                return Err(data(format!("malformed experiment line: {line}")));
            };
            match key {
                "mode" => mode = Some(parse_as::<Mode>("x_mode", value)?),
                "arch" => arch = Some(parse_as::<Arch>("x_arch", value)?),
                "corpus" => corpus = Some(value.to_string()),
                "vocab_cap" => vocab_cap = Some(parse_as("x_vocab_cap", value)?),
                "bpe_merges" => bpe_merges = Some(parse_as("x_bpe_merges", value)?),
                "grammar" => grammar = Some(value.to_string()),
                "seed" => seed = Some(parse_as("x_seed", value)?),
                "beam" => beam = Some(parse_as("x_beam", value)?),
                "max_target_len" => max_target_len = Some(parse_as("x_max_target_len", value)?),
                "max_len" => max_len = Some(parse_as("x_max_len", value)?),
                "input_hash" => input_hash = Some(value.to_string()),
                other => return Err(data(format!("unknown experiment key: x_{other}"))),
            }
        }
        Ok(ExperimentConfig {
            mode: require("x_mode", mode)?,
            arch,
            corpus: require("x_corpus", corpus)?,
            vocab_cap: require("x_vocab_cap", vocab_cap)?,
            bpe_merges: require("x_bpe_merges", bpe_merges)?,
            grammar: require("x_grammar", grammar)?,
            seed: require("x_seed", seed)?,
            beam: require("x_beam", beam)?,
            max_target_len: require("x_max_target_len", max_target_len)?,
            max_len: require("x_max_len", max_len)?,
            input_hash: require("x_input_hash", input_hash)?,
        })
    }
}

fn parse_as<T>(key: &str, value: &str) -> Result<T, CliError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| data(format!("bad value for {key}: {e}")))
}

fn require<T>(key: &str, value: Option<T>) -> Result<T, CliError> {
    value.ok_or_else(|| data(format!("missing experiment key: {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            mode: Mode::Syntax,
            arch: Some(Arch::Gru),
            corpus: "testdata/corpus".to_string(),
            vocab_cap: 80_000,
            bpe_merges: 30_000,
            grammar: "builtin".to_string(),
            seed: 13,
            beam: 5,
            max_target_len: 100,
            max_len: 1500,
            input_hash: "deadbeef".to_string(),
        }
    }

    #[test]
    fn kv_text_round_trips() {
        let cfg = sample();
        let parsed = ExperimentConfig::from_kv_text(&cfg.to_kv_text()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn prefixed_keys_survive_a_model_config_block() {
        let model = linecomp::neural::ModelConfig::transformer(64);
        let text = format!("{}{}", model.to_kv_text(), sample().to_kv_text());
        let exp = ExperimentConfig::from_kv_text(&text).unwrap();
        assert_eq!(exp, sample());
        let model_back = linecomp::neural::ModelConfig::from_kv_text(&text).unwrap();
        assert_eq!(model_back.vocab, 64);
    }

    #[test]
    fn missing_arch_stays_unset() {
        let mut cfg = sample();
        cfg.arch = None;
        let parsed = ExperimentConfig::from_kv_text(&cfg.to_kv_text()).unwrap();
        assert_eq!(parsed.arch, None);
        assert_eq!(parsed, cfg);
    }
}
