//! End-to-end line completion: encode the context, search, render.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::asdl::{ast_to_actions, finalize_actions, Action, ActionError, AsdlGrammar};
use crate::bpe::BpeModel;
use crate::neural::{ModelConfig, ModelParams};
use crate::pycorpus::{
    classify_token_text, render_line_text, Token, TokenKind, Vocab,
};
use crate::pyparse::{parse_statement, ParseError};
use crate::Scalar;

use super::beam::{beam_search, BeamParams, BeamStats, Hypothesis};
use super::domain::{BpeDomain, SyntaxDomain, TokenDomain};
use super::lm::NeuralLm;
use super::vocab::ActionVocab;

/// Output representation a model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Token,
    Bpe,
    Syntax,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Token => "token",
            Mode::Bpe => "bpe",
            Mode::Syntax => "syntax",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "token" => Ok(Mode::Token),
            "bpe" => Ok(Mode::Bpe),
            "syntax" => Ok(Mode::Syntax),
            other => Err(format!("unknown mode `{other}` (token, bpe, syntax)")),
        }
    }
}

/// Mode-specific lookup state a completion needs besides the network.
pub enum ModeArtifacts<'a> {
    Token {
        vocab: &'a Vocab,
    },
    Bpe {
        vocab: &'a Vocab,
        bpe: &'a BpeModel,
    },
    Syntax {
        grammar: &'a AsdlGrammar,
        avocab: &'a ActionVocab,
    },
}

impl ModeArtifacts<'_> {
    pub fn mode(&self) -> Mode {
        match self {
            ModeArtifacts::Token { .. } => Mode::Token,
            ModeArtifacts::Bpe { .. } => Mode::Bpe,
            ModeArtifacts::Syntax { .. } => Mode::Syntax,
        }
    }

    /// Size of the symbol vocabulary the network must match.
    pub fn symbol_count(&self) -> usize {
        match self {
            ModeArtifacts::Token { vocab } => vocab.len(),
            ModeArtifacts::Bpe { vocab, .. } => vocab.len(),
            ModeArtifacts::Syntax { avocab, .. } => avocab.size(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(
        "context of {context_len} symbols exceeds {max_context} \
         (window {max_len} minus target cap {max_target_len} and <bos>)"
    )]
    ContextTooLong {
        context_len: usize,
        max_context: usize,
        max_len: usize,
        max_target_len: usize,
    },
    #[error("context line does not parse: {0}")]
    UnparsableContext(#[from] ParseError),
    #[error("context line has no action encoding: {0}")]
    UnencodableContext(#[from] ActionError),
}

/// One ranked candidate line.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    /// Surface tokens without `<eol>`; empty when an unfinished syntax
    /// hypothesis renders nothing.
    pub tokens: Vec<Token>,
    /// Canonically spaced rendering of `tokens`.
    pub line: String,
    pub log_prob: f64,
    pub finished: bool,
}

#[derive(Debug, Clone)]
pub struct Completions {
    pub mode: Mode,
    /// Best first.
    pub candidates: Vec<Completion>,
    /// False when nothing finished within the target cap; candidates are
    /// then best-effort prefixes.
    pub any_finished: bool,
    pub stats: BeamStats,
}

/// Symbol ids of a token-stream context.
pub fn token_context_ids(context: &[Token], vocab: &Vocab) -> Vec<usize> {
    context
        .iter()
        .map(|t| vocab.encode(&t.text) as usize)
        .collect()
}

/// Symbol ids of a subword-stream context.
pub fn bpe_context_ids(context: &[Token], bpe: &BpeModel, vocab: &Vocab) -> Vec<usize> {
    bpe.encode_stream(context.iter().map(|t| t.text.as_str()))
        .iter()
        .map(|piece| vocab.encode(piece) as usize)
        .collect()
}

/// Symbol ids of an action-stream context.
///
/// Each statement between `<eol>` markers is re-derived through the
/// grammar; indentation events pass through as their own symbols.  The
/// context must end at a statement boundary (trailing indent events are
/// fine; a half-open statement is not).
pub fn syntax_context_ids(
    context: &[Token],
    grammar: &AsdlGrammar,
    avocab: &ActionVocab,
) -> Result<Vec<usize>, DecodeError> {
    let mut ids = Vec::new();
    let mut line: Vec<Token> = Vec::new();
    for token in context {
        match token.kind {
            TokenKind::Indent => ids.push(avocab.ind_id()),
            TokenKind::Dedent => ids.push(avocab.ded_id()),
            TokenKind::Eol => {
                let ast = parse_statement(&line)?;
                for action in ast_to_actions(&ast, grammar)? {
                    ids.push(avocab.encode_action(&action));
                }
                ids.push(avocab.eol_id());
                line.clear();
            }
            _ => line.push(token.clone()),
        }
    }
    if !line.is_empty() {
        return Err(DecodeError::UnparsableContext(ParseError::Unexpected {
            pos: context.len(),
            found: render_line_text(&line),
            expected: "a statement boundary at the end of the context".into(),
        }));
    }
    Ok(ids)
}

/// Generates ranked full-line candidates after `context`.
///
/// The context is everything before the cursor as a flattened token
/// stream (indent events included); candidates come back best first.
pub fn complete_line<S: Scalar>(
    params: &ModelParams<S>,
    cfg: &ModelConfig,
    artifacts: &ModeArtifacts,
    context: &[Token],
    bparams: &BeamParams,
) -> Result<Completions, DecodeError> {
    assert_eq!(
        cfg.vocab,
        artifacts.symbol_count(),
        "network vocabulary must match the {} symbol table",
        artifacts.mode()
    );
    let context_ids = match artifacts {
        ModeArtifacts::Token { vocab } => token_context_ids(context, vocab),
        ModeArtifacts::Bpe { vocab, bpe } => bpe_context_ids(context, bpe, vocab),
        ModeArtifacts::Syntax { grammar, avocab } => {
            syntax_context_ids(context, grammar, avocab)?
        }
    };
    // <bos> occupies one input slot, so the window must fit
    // 1 + context + max_target_len positions.
    let max_context = cfg.max_len.saturating_sub(bparams.max_target_len + 1);
    if context_ids.len() > max_context {
        return Err(DecodeError::ContextTooLong {
            context_len: context_ids.len(),
            max_context,
            max_len: cfg.max_len,
            max_target_len: bparams.max_target_len,
        });
    }

    let lm = NeuralLm::new(params, cfg, &context_ids);
    let result = match artifacts {
        ModeArtifacts::Token { vocab } => {
            beam_search(&lm, &TokenDomain::new(vocab), bparams)
        }
        ModeArtifacts::Bpe { vocab, bpe } => {
            beam_search(&lm, &BpeDomain::new(vocab, bpe), bparams)
        }
        ModeArtifacts::Syntax { grammar, avocab } => {
            beam_search(&lm, &SyntaxDomain::new(grammar, avocab), bparams)
        }
    };

    let candidates = result
        .hypotheses
        .iter()
        .map(|h| to_completion(artifacts, h))
        .collect();
    Ok(Completions {
        mode: artifacts.mode(),
        candidates,
        any_finished: result.any_finished,
        stats: result.stats,
    })
}

fn to_completion(artifacts: &ModeArtifacts, hyp: &Hypothesis) -> Completion {
    let body = if hyp.finished {
        &hyp.symbols[..hyp.symbols.len() - 1]
    } else {
        &hyp.symbols[..]
    };
    let tokens = match artifacts {
        ModeArtifacts::Token { vocab } => body
            .iter()
            .map(|&s| token_from_text(vocab.token_at(s as u32).unwrap_or("<unk>")))
            .collect(),
        ModeArtifacts::Bpe { vocab, bpe } => {
            let mut pieces: Vec<String> = body
                .iter()
                .map(|&s| vocab.token_at(s as u32).unwrap_or("<unk>").to_string())
                .collect();
            // Unfinished hypotheses may stop mid-word; drop the open tail
            // rather than surface a partial unit.
            let texts = loop {
                match bpe.decode_stream(&pieces) {
                    Ok(texts) => break texts,
                    Err(_) if !pieces.is_empty() => {
                        pieces.pop();
                    }
                    Err(_) => break Vec::new(),
                }
            };
            texts.iter().map(|t| token_from_text(t)).collect()
        }
        ModeArtifacts::Syntax { grammar, avocab } => {
            let actions: Vec<Action> = body
                .iter()
                .filter_map(|&s| avocab.decode_action(s))
                .collect();
            match finalize_actions(grammar, "stmt", &actions) {
                Ok(tokens) => tokens,
                // Only reachable for unfinished prefixes; finished
                // hypotheses stop at renderable states by construction.
                Err(_) => Vec::new(),
            }
        }
    };
    let line = render_line_text(&tokens);
    Completion {
        tokens,
        line,
        log_prob: hyp.log_prob,
        finished: hyp.finished,
    }
}

fn token_from_text(text: &str) -> Token {
    Token::new(text, classify_token_text(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asdl::load_grammar;
    use crate::neural::Arch;
    use crate::pycorpus::{build_vocab, marker, tokenize_file, flatten_lines};
    use crate::PYSUBSET_GRAMMAR;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg_for(vocab: usize, max_len: usize) -> ModelConfig {
        ModelConfig {
            arch: Arch::Gru,
            vocab,
            d_model: 8,
            d_embed: 8,
            d_ff: 16,
            n_heads: 2,
            n_layers: 1,
            max_len,
            dropout_keep: 1.0,
            gru_hidden: 12,
        }
    }

    fn toy_token_setup() -> (Vocab, ModelConfig, ModelParams<f32>) {
        let source = "x = 1\ny = x + 1\nz = y\n";
        let lines = tokenize_file(source).unwrap();
        let stream = flatten_lines(&lines);
        let vocab =
            build_vocab(stream.iter().map(|t| t.text.as_str()), 64).unwrap();
        let cfg = cfg_for(vocab.len(), 64);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        (vocab, cfg, params)
    }

    fn context_tokens(source: &str) -> Vec<Token> {
        flatten_lines(&tokenize_file(source).unwrap())
    }

    #[test]
    fn over_budget_contexts_are_rejected_up_front() {
        let (vocab, mut cfg, params) = toy_token_setup();
        cfg.max_len = 12;
        let artifacts = ModeArtifacts::Token { vocab: &vocab };
        let context = context_tokens("x = 1\ny = x + 1\n");
        let bparams = BeamParams {
            max_target_len: 8,
            ..BeamParams::default()
        };
        let err = complete_line(&params, &cfg, &artifacts, &context, &bparams);
        match err {
            Err(DecodeError::ContextTooLong {
                context_len,
                max_context,
                ..
            }) => {
                assert_eq!(context_len, context.len());
                assert_eq!(max_context, 3);
            }
            other => panic!("expected ContextTooLong, got {other:?}"),
        }
    }

    #[test]
    fn token_candidates_avoid_control_markers() {
        let (vocab, cfg, params) = toy_token_setup();
        let artifacts = ModeArtifacts::Token { vocab: &vocab };
        let context = context_tokens("x = 1\n");
        let out = complete_line(
            &params,
            &cfg,
            &artifacts,
            &context,
            &BeamParams {
                max_target_len: 8,
                ..BeamParams::default()
            },
        )
        .unwrap();
        assert_eq!(out.mode, Mode::Token);
        assert!(!out.candidates.is_empty());
        for cand in &out.candidates {
            for token in &cand.tokens {
                for banned in [marker::PAD, marker::BOS, marker::EOL, marker::UNK] {
                    assert_ne!(token.text, banned, "in `{}`", cand.line);
                }
            }
        }
    }

    #[test]
    fn identical_calls_give_identical_rankings() {
        let (vocab, cfg, params) = toy_token_setup();
        let artifacts = ModeArtifacts::Token { vocab: &vocab };
        let context = context_tokens("x = 1\ny = x + 1\n");
        let bparams = BeamParams {
            max_target_len: 10,
            ..BeamParams::default()
        };
        let a = complete_line(&params, &cfg, &artifacts, &context, &bparams).unwrap();
        let b = complete_line(&params, &cfg, &artifacts, &context, &bparams).unwrap();
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!(x.line, y.line);
            assert_eq!(x.log_prob.to_bits(), y.log_prob.to_bits());
        }
    }

    #[test]
    fn bpe_candidates_decode_to_whole_words() {
        let source = "value = compute(value)\nresult = compute(result)\n";
        let lines = tokenize_file(source).unwrap();
        let stream = flatten_lines(&lines);
        let bpe = BpeModel::train(stream.iter().map(|t| t.text.as_str()), 8);
        let pieces = bpe.encode_stream(stream.iter().map(|t| t.text.as_str()));
        let vocab = build_vocab(pieces.iter().map(|p| p.as_str()), 128).unwrap();
        let cfg = cfg_for(vocab.len(), 96);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        let artifacts = ModeArtifacts::Bpe {
            vocab: &vocab,
            bpe: &bpe,
        };
        let context = context_tokens("value = compute(value)\n");
        let out = complete_line(
            &params,
            &cfg,
            &artifacts,
            &context,
            &BeamParams {
                max_target_len: 12,
                ..BeamParams::default()
            },
        )
        .unwrap();
        for cand in out.candidates.iter().filter(|c| c.finished) {
            for token in &cand.tokens {
                assert!(
                    !token.text.contains("</w>"),
                    "piece leaked into `{}`",
                    cand.line
                );
            }
        }
    }

    #[test]
    fn syntax_candidates_always_render() {
        let grammar = load_grammar(PYSUBSET_GRAMMAR).unwrap();
        let source = "x = 1\ny = x + 1\n";
        let lines = tokenize_file(source).unwrap();
        let mut gold = Vec::new();
        for line in &lines {
            let ast = parse_statement(line.content()).unwrap();
            gold.extend(ast_to_actions(&ast, &grammar).unwrap());
        }
        let avocab = ActionVocab::build(&grammar, gold.iter(), 100);
        let cfg = cfg_for(avocab.size(), 256);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = ModelParams::<f32>::init(&cfg, &mut rng);
        let artifacts = ModeArtifacts::Syntax {
            grammar: &grammar,
            avocab: &avocab,
        };
        let context = context_tokens(source);
        let out = complete_line(
            &params,
            &cfg,
            &artifacts,
            &context,
            &BeamParams {
                beam_width: 8,
                max_target_len: 80,
                length_normalize: false,
            },
        )
        .unwrap();
        let finished = out.candidates.iter().filter(|c| c.finished).count();
        assert!(finished > 0, "masked search found no complete statement");
        for cand in out.candidates.iter().filter(|c| c.finished) {
            // A grammar this size admits statements the surface parser
            // rejects (an empty import list, say), so an untrained model
            // only guarantees renderability; surface re-parse is checked
            // on trained models elsewhere.
            assert!(
                !cand.tokens.is_empty(),
                "finished candidate rendered nothing"
            );
            assert!(!cand.line.is_empty());
            for token in &cand.tokens {
                assert!(
                    !token.text.starts_with('<') || token.text == "<str>"
                        || token.text == "<" || token.text == "<=" || token.text == "<<",
                    "marker leaked into `{}`",
                    cand.line
                );
            }
        }
        assert!(out.stats.mask_seconds > 0.0);
    }

    #[test]
    fn syntax_context_must_end_on_a_statement_boundary() {
        let grammar = load_grammar(PYSUBSET_GRAMMAR).unwrap();
        let avocab = ActionVocab::new(&grammar, vec!["x".into()]);
        let mut context = context_tokens("x = 1\n");
        context.push(Token::new("y", TokenKind::Identifier));
        let err = syntax_context_ids(&context, &grammar, &avocab);
        assert!(matches!(err, Err(DecodeError::UnparsableContext(_))));
    }

    #[test]
    fn indent_events_become_their_own_symbols() {
        let grammar = load_grammar(PYSUBSET_GRAMMAR).unwrap();
        let avocab = ActionVocab::new(&grammar, vec!["x".into(), "1".into()]);
        let context = context_tokens("if x:\n    x = 1\n");
        let ids = syntax_context_ids(&context, &grammar, &avocab).unwrap();
        assert!(ids.contains(&avocab.ind_id()));
        let eols = ids.iter().filter(|&&i| i == avocab.eol_id()).count();
        assert_eq!(eols, 2);
    }
}
