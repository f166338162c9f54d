//! The in-memory IR: types, values, instructions, units, and modules.

pub mod builder;
pub mod check;
pub mod inst;
pub mod link;
pub mod logic;
pub mod module;
pub mod time;
pub mod ty;
pub mod unit;
pub mod value;

pub use builder::{BuildError, UnitBuilder};
pub use inst::{ConstValue, Extra, InstData, Opcode, RegMode, RegTrigger, RegTriggerRef};
pub use link::{link, LinkError};
pub use logic::LogicDigit;
pub use module::{Declaration, Module, Signature, UnitId, UnitName};
pub use time::TimeValue;
pub use ty::Type;
pub use unit::{Block, Inst, UnitData, UnitKind, Value, ValueDef};
pub use value::{eval_pure, Leaf, Val};
