//! Approximate raw filters for streams of JSON records.
//!
//! A raw filter inspects the undecoded byte stream and drops records that
//! cannot match a query, before any parser sees them. It may let
//! non-matching records through, but never drops a matching one.
//!
//! The building blocks are:
//!
//! * [`scanner`]: string mask, nesting levels and record boundaries;
//! * [`string_match`]: exact and approximate substring primitives;
//! * [`range`]: number-range primitives backed by minimized DFAs;
//! * [`filter`]: composition of primitives, with optional structural scoping;
//! * [`oracle`]: an exact JSON parser and query evaluator for ground truth;
//! * [`explorer`]: design-space enumeration, cost model, Pareto fronts.

pub mod automaton;
pub mod decimal;
pub mod error;
pub mod explorer;
pub mod filter;
pub mod oracle;
pub mod query;
pub mod range;
pub mod scanner;
pub mod string_match;
pub mod synth;

pub use error::{Error, Result};
