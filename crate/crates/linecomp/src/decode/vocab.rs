//! Symbol indexing for action streams.
//!
//! Layout, fixed:
//!
//! ```text
//! 0..=4          <pad> <unk> <eol> <str> <bos>   (shared marker indices)
//! 5, 6           <ind>, <ded>                    (indentation events)
//! 7 .. 7+P       ApplyRule(production i) at 7+i
//! 7+P            Reduce
//! 7+P+1 ..       GenToken payloads by frequency rank
//! ```
//!
//! `<eol>` separates statements inside a stream; `<str>` exists only for
//! marker-index parity with token vocabularies and is never emitted.

use std::collections::HashMap;

use thiserror::Error;

use crate::asdl::{Action, AsdlGrammar};
use crate::pycorpus::{marker, rank_by_frequency, Vocab};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionVocabError {
    #[error("vocabulary file disagrees with the grammar: {0}")]
    GrammarMismatch(String),
    #[error("malformed action vocabulary file: {0}")]
    Malformed(String),
}

const HEADER_PREFIX: &str = "#productions: ";
const N_MARKERS: usize = 7;

/// Index-stable symbol vocabulary over a grammar's productions plus a
/// ranked terminal-payload vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionVocab {
    n_productions: usize,
    payloads: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl ActionVocab {
    pub fn new(grammar: &AsdlGrammar, payloads: Vec<String>) -> Self {
        let lookup = payloads
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        ActionVocab {
            n_productions: grammar.n_productions(),
            payloads,
            lookup,
        }
    }

    /// Ranks GenToken payloads from gold action sequences by frequency.
    pub fn build<'a, I>(grammar: &AsdlGrammar, actions: I, payload_cap: usize) -> Self
    where
        I: IntoIterator<Item = &'a Action>,
    {
        let texts = actions.into_iter().filter_map(|a| match a {
            Action::GenToken(s) => Some(s.as_str()),
            _ => None,
        });
        Self::new(grammar, rank_by_frequency(texts, payload_cap))
    }

    pub fn size(&self) -> usize {
        N_MARKERS + self.n_productions + 1 + self.payloads.len()
    }

    pub fn n_productions(&self) -> usize {
        self.n_productions
    }

    pub fn pad_id(&self) -> usize {
        Vocab::PAD as usize
    }

    pub fn unk_id(&self) -> usize {
        Vocab::UNK as usize
    }

    pub fn eol_id(&self) -> usize {
        Vocab::EOL as usize
    }

    pub fn bos_id(&self) -> usize {
        Vocab::BOS as usize
    }

    pub fn ind_id(&self) -> usize {
        5
    }

    pub fn ded_id(&self) -> usize {
        6
    }

    pub fn rule_id(&self, production: usize) -> usize {
        debug_assert!(production < self.n_productions);
        N_MARKERS + production
    }

    pub fn reduce_id(&self) -> usize {
        N_MARKERS + self.n_productions
    }

    pub fn gen_id(&self, payload: &str) -> Option<usize> {
        self.lookup
            .get(payload)
            .map(|i| N_MARKERS + self.n_productions + 1 + i)
    }

    /// Symbol index for an action; out-of-vocabulary payloads map to
    /// `<unk>`.
    pub fn encode_action(&self, action: &Action) -> usize {
        match action {
            Action::ApplyRule(p) => self.rule_id(*p),
            Action::Reduce => self.reduce_id(),
            Action::GenToken(s) => self.gen_id(s).unwrap_or(self.unk_id()),
        }
    }

    /// Inverse of [`encode_action`]; markers and out-of-range ids give
    /// `None`.
    pub fn decode_action(&self, id: usize) -> Option<Action> {
        let rules_start = N_MARKERS;
        let reduce = self.reduce_id();
        if id >= rules_start && id < reduce {
            Some(Action::ApplyRule(id - rules_start))
        } else if id == reduce {
            Some(Action::Reduce)
        } else if id > reduce && id < self.size() {
            Some(Action::GenToken(self.payloads[id - reduce - 1].clone()))
        } else {
            None
        }
    }

    /// Marker spelling for the non-action stream symbols.
    pub fn marker_text(&self, id: usize) -> Option<&'static str> {
        [
            marker::PAD,
            marker::UNK,
            marker::EOL,
            marker::STR,
            marker::BOS,
            marker::IND,
            marker::DED,
        ]
        .get(id)
        .copied()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER_PREFIX}{}\n", self.n_productions);
        for p in &self.payloads {
            s.push_str(p);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, grammar: &AsdlGrammar) -> Result<Self, ActionVocabError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ActionVocabError::Malformed("empty file".into()))?;
        let n: usize = header
            .strip_prefix(HEADER_PREFIX)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ActionVocabError::Malformed(format!("bad header `{header}`")))?;
        if n != grammar.n_productions() {
            return Err(ActionVocabError::GrammarMismatch(format!(
                "file has {n} productions, grammar has {}",
                grammar.n_productions()
            )));
        }
        Ok(Self::new(grammar, lines.map(str::to_string).collect()))
    }
}
