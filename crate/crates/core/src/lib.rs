//! Typed terms, rewriting and matrix semantics for higher-order circuits.
//!
//! A base symmetric monoidal signature generates a language of diagrams with holes.
//! Terms are checked against the signature, rewritten with the structural laws, and
//! evaluated in compact-closed semiring matrix models. On top of that sit checkers for
//! locally-applicable transformations and the embedding into strong profunctors.

pub mod embed;
pub mod error;
pub mod gen;
pub mod holes;
pub mod laws;
pub mod matmodel;
pub mod net;
pub mod signature;
pub mod syntax;
pub mod term;

pub use error::{Error, Result};
pub use signature::{
    parse_signature, tensor_words, HomType, Name, ObjectWord, PolyType, Signature,
};
pub use syntax::{parse_term, parse_term_file, parse_typed_term};
pub use term::{compose, par_box, seq_box, typecheck, BaseTerm, Term, TypedTerm};
