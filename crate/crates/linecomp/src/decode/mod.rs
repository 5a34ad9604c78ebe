//! Full-line completion by beam search over token, subword, or
//! grammar-action streams.

mod beam;
mod bench;
mod domain;
mod engine;
mod lm;
mod vocab;

pub use beam::{
    beam_search, masked_distribution, masked_log_probs, BeamParams, BeamResult, BeamStats,
    Hypothesis,
};
pub use bench::{bench_inference, BenchEntry};
pub use domain::{BpeDomain, DecodeDomain, SequenceModel, SyntaxDomain, TokenDomain};
pub use engine::{
    bpe_context_ids, complete_line, syntax_context_ids, token_context_ids, Completion,
    Completions, DecodeError, Mode, ModeArtifacts,
};
pub use lm::NeuralLm;
pub use vocab::{ActionVocab, ActionVocabError};
