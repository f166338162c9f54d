//! A multi-level SSA intermediate representation for digital hardware.
//!
//! Functions, processes, and entities describe circuits at three levels of
//! abstraction. The crate provides the data model and builder ([`ir`]), a
//! text format ([`textio`]), a verifier ([`verifier`]), CFG and
//! temporal-region analyses ([`analysis`]), the lowering pipeline from
//! behavioural to structural form ([`passes`]), and an event-driven
//! simulator with VCD output ([`sim`]).

pub mod ir;
pub mod diag;
pub mod textio;
pub mod analysis;
pub mod verifier;
pub mod sim;
pub mod passes;
