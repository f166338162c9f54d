//! The human-readable text format.

mod lexer;
mod parser;
mod printer;

pub use parser::{parse_module, parse_module_with_locations, parse_time_literal, Locations};
pub use printer::{print_instruction, print_module, print_unit, unit_names, Names};
