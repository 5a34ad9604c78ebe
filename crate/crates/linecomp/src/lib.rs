//! Full-line completion for a Python subset.
//!
//! The pipeline: [`pycorpus`] tokenizes source files into logical lines,
//! [`pyparse`] parses single lines into ASTs over the grammar in
//! `grammar/pysubset.asdl`, [`asdl`] converts trees to and from transition
//! action sequences, [`bpe`] provides subword segmentation, [`neural`]
//! holds the from-scratch language models (Transformer and GRU), [`decode`]
//! runs (optionally grammar-masked) beam search over any of the three
//! sequence representations, and [`metrics`] scores completions.
//!
//! Numeric code is generic over [`Scalar`]; models train in `f32` and the
//! gradient tests instantiate `f64`.

pub mod asdl;
pub mod bpe;
pub mod decode;
pub mod metrics;
pub mod neural;
pub mod pycorpus;
pub mod pyparse;
mod scalar;

pub use scalar::Scalar;

/// Training-precision model parameters.
pub type Model = neural::ModelParams<f32>;
/// Double-precision instantiation, used by the gradient checks.
pub type ModelF64 = neural::ModelParams<f64>;

/// Grammar text shipped with the crate; `load_grammar` accepts it verbatim.
pub const PYSUBSET_GRAMMAR: &str = include_str!("../../../grammar/pysubset.asdl");
