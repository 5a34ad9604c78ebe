//! What a hypothesis may emit next, per output representation.
//!
//! A domain owns the legality rules of one stream flavor; the search is
//! generic over them.  All three flavors finish a hypothesis by emitting
//! `<eol>`.

use ndarray::Array1;

use crate::asdl::{AsdlGrammar, ParserState};
use crate::bpe::{is_passthrough, is_word_boundary, BpeModel};
use crate::pycorpus::{marker, Vocab};

use super::vocab::ActionVocab;

/// Next-symbol distribution source over a fixed symbol vocabulary.
pub trait SequenceModel {
    /// Log-probabilities over the whole vocabulary for the symbol after
    /// `emitted` (which excludes any fixed context the model carries).
    fn next_log_probs(&self, emitted: &[usize]) -> Array1<f64>;

    fn vocab_size(&self) -> usize;
}

/// Legality rules for one output representation.
pub trait DecodeDomain {
    type State: Clone;

    fn start(&self) -> Self::State;

    /// Sets `allowed[s]` for every symbol legal after `state`.  The slice
    /// arrives all-false and is vocabulary-sized.
    fn fill_allowed(&self, state: &Self::State, allowed: &mut [bool]);

    /// State after emitting `symbol`; never called with a disallowed
    /// symbol or with the finisher.
    fn advance(&self, state: &Self::State, symbol: usize) -> Self::State;

    /// True when emitting `symbol` retires the hypothesis.
    fn is_final(&self, symbol: usize) -> bool;
}

/// Surface tokens: everything except control markers is fair game.
pub struct TokenDomain {
    banned: Vec<usize>,
    eol: usize,
}

impl TokenDomain {
    pub fn new(vocab: &Vocab) -> Self {
        let banned = [marker::PAD, marker::UNK, marker::BOS, marker::IND, marker::DED]
            .iter()
            .filter_map(|m| vocab.index_of(m))
            .map(|i| i as usize)
            .collect();
        TokenDomain {
            banned,
            eol: Vocab::EOL as usize,
        }
    }
}

impl DecodeDomain for TokenDomain {
    type State = ();

    fn start(&self) -> () {}

    fn fill_allowed(&self, _state: &(), allowed: &mut [bool]) {
        allowed.fill(true);
        for &b in &self.banned {
            allowed[b] = false;
        }
    }

    fn advance(&self, _state: &(), _symbol: usize) -> () {}

    fn is_final(&self, symbol: usize) -> bool {
        symbol == self.eol
    }
}

/// Subword pieces: words must be completed before any marker (including
/// `<eol>`) may appear.
pub struct BpeDomain {
    /// Banned everywhere, as in [`TokenDomain`].
    banned: Vec<usize>,
    /// Emitting this symbol leaves the stream at a word boundary.
    closes_word: Vec<bool>,
    /// Marker-like symbols, only legal at a word boundary.
    boundary_only: Vec<bool>,
    /// The bare `</w>` unit; at a boundary it would close an empty word,
    /// which no tokenizer output contains.
    empty_word: Vec<bool>,
    eol: usize,
}

impl BpeDomain {
    pub fn new(vocab: &Vocab, _bpe: &BpeModel) -> Self {
        let banned = [marker::PAD, marker::UNK, marker::BOS, marker::IND, marker::DED]
            .iter()
            .filter_map(|m| vocab.index_of(m))
            .map(|i| i as usize)
            .collect();
        let closes_word = vocab.entries().iter().map(|e| is_word_boundary(e)).collect();
        let boundary_only = vocab.entries().iter().map(|e| is_passthrough(e)).collect();
        let empty_word = vocab
            .entries()
            .iter()
            .map(|e| e == crate::bpe::WORD_END)
            .collect();
        BpeDomain {
            banned,
            closes_word,
            boundary_only,
            empty_word,
            eol: Vocab::EOL as usize,
        }
    }
}

impl DecodeDomain for BpeDomain {
    /// True at a word boundary.
    type State = bool;

    fn start(&self) -> bool {
        true
    }

    fn fill_allowed(&self, at_boundary: &bool, allowed: &mut [bool]) {
        if *at_boundary {
            for (a, empty) in allowed.iter_mut().zip(&self.empty_word) {
                *a = !empty;
            }
        } else {
            for (a, marker_like) in allowed.iter_mut().zip(&self.boundary_only) {
                *a = !marker_like;
            }
        }
        for &b in &self.banned {
            allowed[b] = false;
        }
    }

    fn advance(&self, _at_boundary: &bool, symbol: usize) -> bool {
        self.closes_word[symbol]
    }

    fn is_final(&self, symbol: usize) -> bool {
        symbol == self.eol
    }
}

/// Grammar actions: only transitions the parser accepts, with `<eol>`
/// standing in for "stop here".
///
/// `<eol>` is legal once the derivation is complete (it is then the only
/// choice) and at a complete compound header, where the model weighs
/// stopping against generating an inline body.
pub struct SyntaxDomain<'a> {
    grammar: &'a AsdlGrammar,
    avocab: &'a ActionVocab,
    root_type: String,
}

impl<'a> SyntaxDomain<'a> {
    pub fn new(grammar: &'a AsdlGrammar, avocab: &'a ActionVocab) -> Self {
        SyntaxDomain {
            grammar,
            avocab,
            root_type: "stmt".into(),
        }
    }
}

impl DecodeDomain for SyntaxDomain<'_> {
    type State = ParserState;

    fn start(&self) -> ParserState {
        ParserState::new(self.root_type.clone())
    }

    fn fill_allowed(&self, state: &ParserState, allowed: &mut [bool]) {
        if state.is_complete() {
            allowed[self.avocab.eol_id()] = true;
            return;
        }
        let valid = state
            .valid_actions(self.grammar)
            .expect("masked search only reaches live parser states");
        for &p in &valid.rules {
            allowed[self.avocab.rule_id(p)] = true;
        }
        if valid.reduce {
            allowed[self.avocab.reduce_id()] = true;
        }
        if valid.gen_token {
            let first = self.avocab.reduce_id() + 1;
            allowed[first..self.avocab.size()].fill(true);
        }
        if state.is_header_complete(self.grammar) {
            allowed[self.avocab.eol_id()] = true;
        }
    }

    fn advance(&self, state: &ParserState, symbol: usize) -> ParserState {
        let action = self
            .avocab
            .decode_action(symbol)
            .expect("advance is only called on allowed action symbols");
        state
            .step(&action, self.grammar)
            .expect("allowed actions step cleanly")
    }

    fn is_final(&self, symbol: usize) -> bool {
        symbol == self.avocab.eol_id()
    }
}
