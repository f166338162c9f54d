//! Instructions and opcodes.

use super::logic::LogicDigit;
use super::module::UnitName;
use super::time::TimeValue;
use super::ty::Type;
use super::unit::{Block, Value};
use num_bigint::BigUint;
use std::fmt;

/// Instruction opcodes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Opcode {
    Const,
    Array,
    Struct,
    Not,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Sdiv,
    Mod,
    Smod,
    Rem,
    Srem,
    And,
    Or,
    Xor,
    Eq,
    Neq,
    Ult,
    Ugt,
    Ule,
    Uge,
    Slt,
    Sgt,
    Sle,
    Sge,
    Shl,
    Shr,
    Mux,
    InsField,
    ExtField,
    InsSlice,
    ExtSlice,
    Sig,
    Prb,
    Drv,
    Reg,
    Con,
    Del,
    Inst,
    Var,
    Ld,
    St,
    Alloc,
    Free,
    Call,
    Phi,
    Br,
    BrCond,
    Wait,
    Halt,
    Ret,
}

const MNEMONICS: &[(Opcode, &str)] = &[
    (Opcode::Const, "const"),
    (Opcode::Array, "array"),
    (Opcode::Struct, "struct"),
    (Opcode::Not, "not"),
    (Opcode::Neg, "neg"),
    (Opcode::Add, "add"),
    (Opcode::Sub, "sub"),
    (Opcode::Mul, "mul"),
    (Opcode::Div, "div"),
    (Opcode::Sdiv, "sdiv"),
    (Opcode::Mod, "mod"),
    (Opcode::Smod, "smod"),
    (Opcode::Rem, "rem"),
    (Opcode::Srem, "srem"),
    (Opcode::And, "and"),
    (Opcode::Or, "or"),
    (Opcode::Xor, "xor"),
    (Opcode::Eq, "eq"),
    (Opcode::Neq, "neq"),
    (Opcode::Ult, "ult"),
    (Opcode::Ugt, "ugt"),
    (Opcode::Ule, "ule"),
    (Opcode::Uge, "uge"),
    (Opcode::Slt, "slt"),
    (Opcode::Sgt, "sgt"),
    (Opcode::Sle, "sle"),
    (Opcode::Sge, "sge"),
    (Opcode::Shl, "shl"),
    (Opcode::Shr, "shr"),
    (Opcode::Mux, "mux"),
    (Opcode::InsField, "insf"),
    (Opcode::ExtField, "extf"),
    (Opcode::InsSlice, "inss"),
    (Opcode::ExtSlice, "exts"),
    (Opcode::Sig, "sig"),
    (Opcode::Prb, "prb"),
    (Opcode::Drv, "drv"),
    (Opcode::Reg, "reg"),
    (Opcode::Con, "con"),
    (Opcode::Del, "del"),
    (Opcode::Inst, "inst"),
    (Opcode::Var, "var"),
    (Opcode::Ld, "ld"),
    (Opcode::St, "st"),
    (Opcode::Alloc, "alloc"),
    (Opcode::Free, "free"),
    (Opcode::Call, "call"),
    (Opcode::Phi, "phi"),
    (Opcode::Br, "br"),
    (Opcode::BrCond, "br"),
    (Opcode::Wait, "wait"),
    (Opcode::Halt, "halt"),
    (Opcode::Ret, "ret"),
];

impl Opcode {
    pub fn mnemonic(self) -> &'static str {
        MNEMONICS
            .iter()
            .find(|(op, _)| *op == self)
            .map(|(_, m)| *m)
            .unwrap()
    }

    /// Look up an opcode by mnemonic. `br` maps to the unconditional form.
    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        MNEMONICS.iter().find(|(_, m)| *m == s).map(|(op, _)| *op)
    }

    pub fn is_terminator(self) -> bool {
        matches!(
            self,
            Opcode::Br | Opcode::BrCond | Opcode::Wait | Opcode::Halt | Opcode::Ret
        )
    }

    pub fn is_unary(self) -> bool {
        matches!(self, Opcode::Not | Opcode::Neg)
    }

    pub fn is_binary(self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Add | Sub | Mul | Div | Sdiv | Mod | Smod | Rem | Srem | And | Or | Xor
        )
    }

    pub fn is_compare(self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Eq | Neq | Ult | Ugt | Ule | Uge | Slt | Sgt | Sle | Sge
        )
    }

    pub fn is_commutative(self) -> bool {
        use Opcode::*;
        matches!(self, Add | Mul | And | Or | Xor | Eq | Neq)
    }

    /// Free of side effects and fully determined by its operands.
    pub fn is_pure(self) -> bool {
        use Opcode::*;
        self.is_unary()
            || self.is_binary()
            || self.is_compare()
            || matches!(
                self,
                Const | Array | Struct | Shl | Shr | Mux | InsField | ExtField | InsSlice
                    | ExtSlice
            )
    }

    /// Touches signals or suspends; illegal in immediate units.
    pub fn is_timed_only(self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Prb | Drv | Wait | Halt | Reg | Sig | Inst | Con | Del
        )
    }

    /// Only meaningful inside an entity body.
    pub fn is_entity_only(self) -> bool {
        use Opcode::*;
        matches!(self, Reg | Sig | Inst | Con | Del)
    }

    pub fn is_memory(self) -> bool {
        use Opcode::*;
        matches!(self, Var | Ld | St | Alloc | Free)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.mnemonic())
    }
}

/// The payload of a `const` instruction. Logic digits are stored LSB first.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ConstValue {
    Int(BigUint),
    Enum(usize),
    Logic(Vec<LogicDigit>),
    Time(TimeValue),
}

/// Trigger mode of a register.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RegMode {
    Low,
    High,
    Rise,
    Fall,
    Both,
}

impl RegMode {
    pub fn keyword(self) -> &'static str {
        match self {
            RegMode::Low => "low",
            RegMode::High => "high",
            RegMode::Rise => "rise",
            RegMode::Fall => "fall",
            RegMode::Both => "both",
        }
    }

    pub fn from_keyword(s: &str) -> Option<RegMode> {
        Some(match s {
            "low" => RegMode::Low,
            "high" => RegMode::High,
            "rise" => RegMode::Rise,
            "fall" => RegMode::Fall,
            "both" => RegMode::Both,
            _ => return None,
        })
    }

    pub fn is_edge(self) -> bool {
        matches!(self, RegMode::Rise | RegMode::Fall | RegMode::Both)
    }
}

/// Layout of one `reg` trigger within the instruction's argument list.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct RegTrigger {
    pub mode: RegMode,
    pub has_delay: bool,
    pub has_gate: bool,
}

/// A decoded `reg` trigger.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RegTriggerRef {
    pub mode: RegMode,
    pub value: Value,
    pub trigger: Value,
    pub delay: Option<Value>,
    pub gate: Option<Value>,
}

/// Opcode-specific data that does not fit the generic operand lists.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Extra {
    None,
    Const(ConstValue),
    /// Target of `call` and `inst`; `inputs` counts the leading input args.
    Unit { name: UnitName, inputs: usize },
    Reg(Vec<RegTrigger>),
    Wait { has_time: bool },
}

/// Everything about an instruction except its position.
///
/// Operand layout by opcode:
/// - `mux`: options followed by the selector
/// - `drv`: signal, value, delay, optional condition
/// - `reg`: target, then per trigger value, trigger, optional delay, optional gate
/// - `wait`: optional time, then observed signals; `blocks[0]` is the resume block
/// - `br` (conditional): `args[0]` condition, `blocks` = [if-false, if-true]
/// - `phi`: `args[i]` flows in from `blocks[i]`
/// - `shl`/`shr`: base, hidden, amount
/// - `extf`/`insf`: `imms[0]` field; `exts`/`inss`: `imms` = [offset, length]
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct InstData {
    pub opcode: Opcode,
    /// The type annotation as it appears in the text format.
    pub ty: Type,
    pub args: Vec<Value>,
    pub blocks: Vec<Block>,
    pub imms: Vec<usize>,
    pub extra: Extra,
}

impl InstData {
    pub fn new(opcode: Opcode, ty: Type, args: Vec<Value>) -> InstData {
        InstData {
            opcode,
            ty,
            args,
            blocks: vec![],
            imms: vec![],
            extra: Extra::None,
        }
    }

    pub fn with_blocks(mut self, blocks: Vec<Block>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn with_imms(mut self, imms: Vec<usize>) -> Self {
        self.imms = imms;
        self
    }

    pub fn with_extra(mut self, extra: Extra) -> Self {
        self.extra = extra;
        self
    }

    pub fn const_value(&self) -> Option<&ConstValue> {
        match &self.extra {
            Extra::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn callee(&self) -> Option<&UnitName> {
        match &self.extra {
            Extra::Unit { name, .. } => Some(name),
            _ => None,
        }
    }

    /// Split `inst` operands into inputs and outputs.
    pub fn inst_ports(&self) -> (&[Value], &[Value]) {
        match &self.extra {
            Extra::Unit { inputs, .. } => self.args.split_at(*inputs),
            _ => (&self.args[..], &[]),
        }
    }

    pub fn wait_time(&self) -> Option<Value> {
        match self.extra {
            Extra::Wait { has_time: true } => self.args.first().copied(),
            _ => None,
        }
    }

    pub fn wait_signals(&self) -> &[Value] {
        match self.extra {
            Extra::Wait { has_time: true } => &self.args[1..],
            _ => &self.args[..],
        }
    }

    /// The optional condition of a `drv`.
    pub fn drv_cond(&self) -> Option<Value> {
        self.args.get(3).copied()
    }

    /// Options and selector of a `mux`.
    pub fn mux_parts(&self) -> (&[Value], Value) {
        let (sel, opts) = self.args.split_last().expect("mux has a selector");
        (opts, *sel)
    }

    pub fn reg_triggers(&self) -> Vec<RegTriggerRef> {
        let layout = match &self.extra {
            Extra::Reg(t) => t,
            _ => return vec![],
        };
        let mut out = Vec::with_capacity(layout.len());
        let mut i = 1;
        for t in layout {
            let value = self.args[i];
            let trigger = self.args[i + 1];
            i += 2;
            let delay = if t.has_delay {
                i += 1;
                Some(self.args[i - 1])
            } else {
                None
            };
            let gate = if t.has_gate {
                i += 1;
                Some(self.args[i - 1])
            } else {
                None
            };
            out.push(RegTriggerRef {
                mode: t.mode,
                value,
                trigger,
                delay,
                gate,
            });
        }
        out
    }

    /// Build the operand list and layout of a `reg`.
    pub fn reg(ty: Type, target: Value, triggers: &[RegTriggerRef]) -> InstData {
        let mut args = vec![target];
        let mut layout = vec![];
        for t in triggers {
            args.push(t.value);
            args.push(t.trigger);
            args.extend(t.delay);
            args.extend(t.gate);
            layout.push(RegTrigger {
                mode: t.mode,
                has_delay: t.delay.is_some(),
                has_gate: t.gate.is_some(),
            });
        }
        InstData::new(Opcode::Reg, ty, args).with_extra(Extra::Reg(layout))
    }

    /// Type of the value this instruction produces, `Void` if none.
    pub fn result_type(&self) -> Type {
        use Opcode::*;
        match self.opcode {
            Const | Struct | Not | Neg | Shl | Shr | Mux | InsField | InsSlice | Call | Phi => {
                self.ty.clone()
            }
            op if op.is_binary() => self.ty.clone(),
            op if op.is_compare() => Type::Int(1),
            Array => Type::array(self.args.len(), self.ty.clone()),
            ExtField => {
                let idx = self.imms.first().copied().unwrap_or(0);
                let base = self.ty.inner().unwrap_or(&self.ty);
                match base.field(idx) {
                    Some(f) => self.ty.rewrap(f.clone()),
                    None => Type::Void,
                }
            }
            ExtSlice => {
                let (off, len) = match self.imms[..] {
                    [o, l] => (o, l),
                    _ => return Type::Void,
                };
                let base = self.ty.inner().unwrap_or(&self.ty);
                match base.slice(off, len) {
                    Some(s) => self.ty.rewrap(s),
                    None => Type::Void,
                }
            }
            Sig => Type::signal(self.ty.clone()),
            Prb | Ld => self.ty.inner().cloned().unwrap_or(Type::Void),
            Del => self.ty.clone(),
            Var | Alloc => Type::pointer(self.ty.clone()),
            Drv | Reg | Con | Inst | St | Free | Br | BrCond | Wait | Halt | Ret => Type::Void,
            _ => Type::Void,
        }
    }
}
