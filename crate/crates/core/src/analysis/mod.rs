//! Analyses shared by the verifier and the lowering passes.

pub mod cfg;
pub mod dom;
pub mod expr;
pub mod tr;

pub use cfg::{build_cfg, reverse_postorder, Cfg};
pub use dom::DomTree;
pub use expr::{condition_chain, emit_expr, expr_of_value, to_dnf, Atom, BoolExpr, Dnf, InsertPoint, Literal};
pub use tr::{temporal_regions, temporal_regions_of, TemporalRegion, TemporalRegionMap};
