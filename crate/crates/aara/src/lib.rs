//! Resource-bound analysis for a small first-order functional language.
//!
//! The pipeline: parse the surface syntax, let-normalize and insert explicit
//! `share` nodes, infer simple types, attach rational potential annotations to
//! every list type, emit the typing rules as linear constraints, solve the
//! resulting linear program exactly, and report closed-form cost bounds. A
//! big-step cost interpreter serves as the ground truth the inferred bounds
//! are checked against.

pub mod ast;
pub mod basis;
pub mod closed_form;
pub mod constraints;
pub mod core_text;
pub mod frontend;
pub mod harness;
pub mod interp;
pub mod pipeline;
pub mod rational;
pub mod report;
pub mod simplex;

pub use rational::Rat;
