//! Checked construction of units.

use super::check::{check_inst_types, check_opcode_allowed, check_signature};
use super::inst::{ConstValue, Extra, InstData, Opcode, RegTriggerRef};
use super::logic::LogicDigit;
use super::module::{Module, Signature, UnitId, UnitName};
use super::time::TimeValue;
use super::ty::Type;
use super::unit::{Block, Inst, UnitData, UnitKind, Value};
use num_bigint::BigUint;
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum BuildError {
    #[error("`{0}` is already defined")]
    DuplicateName(UnitName),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("{0}")]
    Forbidden(String),
    #[error("cannot insert `{0}` after the block terminator")]
    AfterTerminator(Opcode),
    #[error("terminator `{0}` inserted in the middle of a block")]
    TerminatorMidBlock(Opcode),
    #[error("no insertion point")]
    NoInsertionPoint,
}

impl Module {
    /// Create an empty unit. Control-flow units get an `entry` block.
    pub fn build_unit(
        &mut self,
        kind: UnitKind,
        name: UnitName,
        sig: Signature,
    ) -> Result<UnitId, BuildError> {
        if self.lookup(&name).is_some() {
            return Err(BuildError::DuplicateName(name));
        }
        check_signature(kind, &sig).map_err(BuildError::InvalidSignature)?;
        let mut unit = UnitData::new(kind, name, sig);
        if kind.is_control_flow() {
            unit.add_block(Some("entry".into()));
        }
        Ok(self.add_unit(unit))
    }

    /// A builder appending to the unit's first block.
    pub fn builder(&mut self, id: UnitId) -> UnitBuilder<'_> {
        UnitBuilder::new(self, id)
    }
}

#[derive(Clone, Copy, Debug)]
enum Cursor {
    End(Block),
    Before(Inst),
}

/// Inserts type-checked instructions into a unit of a module.
///
/// The unit is taken out of the module while the builder lives, so that
/// call and inst targets can be checked against the rest of the module.
pub struct UnitBuilder<'m> {
    module: &'m mut Module,
    id: UnitId,
    unit: Option<UnitData>,
    cursor: Option<Cursor>,
}

impl<'m> UnitBuilder<'m> {
    pub fn new(module: &'m mut Module, id: UnitId) -> UnitBuilder<'m> {
        let unit = module.remove_unit(id).expect("unit exists");
        let cursor = unit.entry().map(Cursor::End);
        UnitBuilder {
            module,
            id,
            unit: Some(unit),
            cursor,
        }
    }

    pub fn unit(&self) -> &UnitData {
        self.unit.as_ref().unwrap()
    }

    pub fn unit_mut(&mut self) -> &mut UnitData {
        self.unit.as_mut().unwrap()
    }

    pub fn arg(&self, i: usize) -> Value {
        self.unit().arg(i)
    }

    /// Add a block after the last one. Not available in entities.
    pub fn block(&mut self, name: &str) -> Result<Block, BuildError> {
        if self.unit().is_entity() {
            return Err(BuildError::Forbidden("entities have a single body".into()));
        }
        Ok(self.unit_mut().add_block(Some(name.into())))
    }

    pub fn position_at_end(&mut self, b: Block) {
        self.cursor = Some(Cursor::End(b));
    }

    pub fn position_before(&mut self, inst: Inst) {
        self.cursor = Some(Cursor::Before(inst));
    }

    pub fn name_value(&mut self, v: Value, name: &str) {
        self.unit_mut().set_value_name(v, name);
    }

    /// Insert an instruction at the cursor after checking unit-kind legality,
    /// operand typing, and terminator placement.
    pub fn insert(&mut self, data: InstData) -> Result<Option<Value>, BuildError> {
        let unit = self.unit.as_ref().unwrap();
        let op = data.opcode;
        check_opcode_allowed(unit.kind, op).map_err(BuildError::Forbidden)?;
        check_inst_types(unit, Some(self.module), &data).map_err(BuildError::TypeMismatch)?;
        if unit.kind == UnitKind::Entity && op == Opcode::Inst {
            if let Some(name) = data.callee() {
                if self.module.kind_of(name) == Some(UnitKind::Function) {
                    return Err(BuildError::Forbidden(format!(
                        "cannot instantiate function `{}`",
                        name
                    )));
                }
            }
        }
        for b in &data.blocks {
            if !unit.is_block_live(*b) {
                return Err(BuildError::TypeMismatch(format!("unknown block {}", b)));
            }
        }
        let cursor = self.cursor.ok_or(BuildError::NoInsertionPoint)?;
        let (block, pos) = match cursor {
            Cursor::End(b) => {
                if unit.terminator(b).is_some() {
                    return Err(BuildError::AfterTerminator(op));
                }
                (b, unit.insts(b).len())
            }
            Cursor::Before(i) => {
                if op.is_terminator() {
                    return Err(BuildError::TerminatorMidBlock(op));
                }
                let b = unit.inst_block(i).ok_or(BuildError::NoInsertionPoint)?;
                (b, unit.inst_position(i).unwrap())
            }
        };
        let unit = self.unit.as_mut().unwrap();
        let inst = unit.create_inst(data);
        unit.insert_inst_at(block, pos, inst);
        Ok(unit.inst_result(inst))
    }

    fn value(&mut self, data: InstData) -> Result<Value, BuildError> {
        Ok(self.insert(data)?.expect("instruction has a result"))
    }

    fn void(&mut self, data: InstData) -> Result<(), BuildError> {
        self.insert(data).map(|_| ())
    }

    fn ty(&self, v: Value) -> Type {
        self.unit().value_type(v).clone()
    }

    // ---- constants --------------------------------------------------------

    pub fn const_int(&mut self, width: usize, v: impl Into<BigUint>) -> Result<Value, BuildError> {
        self.value(
            InstData::new(Opcode::Const, Type::int(width), vec![])
                .with_extra(Extra::Const(ConstValue::Int(v.into()))),
        )
    }

    pub fn const_enum(&mut self, n: usize, v: usize) -> Result<Value, BuildError> {
        self.value(
            InstData::new(Opcode::Const, Type::Enum(n), vec![])
                .with_extra(Extra::Const(ConstValue::Enum(v))),
        )
    }

    /// Logic constant from digits given LSB first.
    pub fn const_logic(&mut self, digits: Vec<LogicDigit>) -> Result<Value, BuildError> {
        self.value(
            InstData::new(Opcode::Const, Type::Logic(digits.len()), vec![])
                .with_extra(Extra::Const(ConstValue::Logic(digits))),
        )
    }

    pub fn const_time(&mut self, t: TimeValue) -> Result<Value, BuildError> {
        self.value(
            InstData::new(Opcode::Const, Type::Time, vec![])
                .with_extra(Extra::Const(ConstValue::Time(t))),
        )
    }

    // ---- data flow --------------------------------------------------------

    pub fn unary(&mut self, op: Opcode, a: Value) -> Result<Value, BuildError> {
        let ty = self.ty(a);
        self.value(InstData::new(op, ty, vec![a]))
    }

    pub fn binary(&mut self, op: Opcode, a: Value, b: Value) -> Result<Value, BuildError> {
        let ty = self.ty(a);
        self.value(InstData::new(op, ty, vec![a, b]))
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value, BuildError> {
        self.binary(Opcode::Add, a, b)
    }

    pub fn and(&mut self, a: Value, b: Value) -> Result<Value, BuildError> {
        self.binary(Opcode::And, a, b)
    }

    pub fn or(&mut self, a: Value, b: Value) -> Result<Value, BuildError> {
        self.binary(Opcode::Or, a, b)
    }

    pub fn not(&mut self, a: Value) -> Result<Value, BuildError> {
        self.unary(Opcode::Not, a)
    }

    pub fn compare(&mut self, op: Opcode, a: Value, b: Value) -> Result<Value, BuildError> {
        let ty = self.ty(a);
        self.value(InstData::new(op, ty, vec![a, b]))
    }

    pub fn shift(
        &mut self,
        op: Opcode,
        base: Value,
        hidden: Value,
        amount: Value,
    ) -> Result<Value, BuildError> {
        let ty = self.ty(base);
        self.value(InstData::new(op, ty, vec![base, hidden, amount]))
    }

    pub fn mux(&mut self, options: &[Value], sel: Value) -> Result<Value, BuildError> {
        let ty = options
            .first()
            .map(|&o| self.ty(o))
            .ok_or_else(|| BuildError::TypeMismatch("`mux` without options".into()))?;
        let mut args = options.to_vec();
        args.push(sel);
        self.value(InstData::new(Opcode::Mux, ty, args))
    }

    pub fn array(&mut self, elems: &[Value]) -> Result<Value, BuildError> {
        let ty = elems
            .first()
            .map(|&e| self.ty(e))
            .ok_or_else(|| BuildError::TypeMismatch("empty `array`".into()))?;
        self.value(InstData::new(Opcode::Array, ty, elems.to_vec()))
    }

    pub fn strukt(&mut self, fields: &[Value]) -> Result<Value, BuildError> {
        let ty = Type::Struct(fields.iter().map(|&f| self.ty(f)).collect());
        self.value(InstData::new(Opcode::Struct, ty, fields.to_vec()))
    }

    pub fn ext_field(&mut self, agg: Value, index: usize) -> Result<Value, BuildError> {
        let ty = self.ty(agg);
        self.value(InstData::new(Opcode::ExtField, ty, vec![agg]).with_imms(vec![index]))
    }

    pub fn ins_field(&mut self, agg: Value, v: Value, index: usize) -> Result<Value, BuildError> {
        let ty = self.ty(agg);
        self.value(InstData::new(Opcode::InsField, ty, vec![agg, v]).with_imms(vec![index]))
    }

    pub fn ext_slice(&mut self, agg: Value, offset: usize, len: usize) -> Result<Value, BuildError> {
        let ty = self.ty(agg);
        self.value(InstData::new(Opcode::ExtSlice, ty, vec![agg]).with_imms(vec![offset, len]))
    }

    pub fn ins_slice(
        &mut self,
        agg: Value,
        v: Value,
        offset: usize,
        len: usize,
    ) -> Result<Value, BuildError> {
        let ty = self.ty(agg);
        self.value(InstData::new(Opcode::InsSlice, ty, vec![agg, v]).with_imms(vec![offset, len]))
    }

    // ---- signals ------------------------------------------------------------

    pub fn sig(&mut self, init: Value) -> Result<Value, BuildError> {
        let ty = self.ty(init);
        self.value(InstData::new(Opcode::Sig, ty, vec![init]))
    }

    pub fn prb(&mut self, signal: Value) -> Result<Value, BuildError> {
        let ty = self.ty(signal);
        self.value(InstData::new(Opcode::Prb, ty, vec![signal]))
    }

    pub fn drv(
        &mut self,
        signal: Value,
        value: Value,
        delay: Value,
        cond: Option<Value>,
    ) -> Result<(), BuildError> {
        let ty = self.ty(signal);
        let mut args = vec![signal, value, delay];
        args.extend(cond);
        self.void(InstData::new(Opcode::Drv, ty, args))
    }

    pub fn reg(&mut self, target: Value, triggers: &[RegTriggerRef]) -> Result<(), BuildError> {
        let ty = self.ty(target);
        self.void(InstData::reg(ty, target, triggers))
    }

    pub fn con(&mut self, a: Value, b: Value) -> Result<(), BuildError> {
        let ty = self.ty(a);
        self.void(InstData::new(Opcode::Con, ty, vec![a, b]))
    }

    pub fn del(&mut self, source: Value, delay: Value) -> Result<Value, BuildError> {
        let ty = self.ty(source);
        self.value(InstData::new(Opcode::Del, ty, vec![source, delay]))
    }

    pub fn inst(
        &mut self,
        target: UnitName,
        inputs: &[Value],
        outputs: &[Value],
    ) -> Result<(), BuildError> {
        let mut args = inputs.to_vec();
        args.extend_from_slice(outputs);
        self.void(
            InstData::new(Opcode::Inst, Type::Void, args).with_extra(Extra::Unit {
                name: target,
                inputs: inputs.len(),
            }),
        )
    }

    // ---- memory -------------------------------------------------------------

    pub fn var(&mut self, init: Value) -> Result<Value, BuildError> {
        let ty = self.ty(init);
        self.value(InstData::new(Opcode::Var, ty, vec![init]))
    }

    pub fn alloc(&mut self, init: Value) -> Result<Value, BuildError> {
        let ty = self.ty(init);
        self.value(InstData::new(Opcode::Alloc, ty, vec![init]))
    }

    pub fn ld(&mut self, ptr: Value) -> Result<Value, BuildError> {
        let ty = self.ty(ptr);
        self.value(InstData::new(Opcode::Ld, ty, vec![ptr]))
    }

    pub fn st(&mut self, ptr: Value, v: Value) -> Result<(), BuildError> {
        let ty = self.ty(ptr);
        self.void(InstData::new(Opcode::St, ty, vec![ptr, v]))
    }

    pub fn free(&mut self, ptr: Value) -> Result<(), BuildError> {
        let ty = self.ty(ptr);
        self.void(InstData::new(Opcode::Free, ty, vec![ptr]))
    }

    // ---- calls and control flow --------------------------------------------

    /// Call a function; returns its result unless it returns `void`.
    pub fn call(
        &mut self,
        target: UnitName,
        ret: Type,
        args: &[Value],
    ) -> Result<Option<Value>, BuildError> {
        self.insert(
            InstData::new(Opcode::Call, ret, args.to_vec()).with_extra(Extra::Unit {
                name: target,
                inputs: args.len(),
            }),
        )
    }

    pub fn phi(&mut self, incoming: &[(Value, Block)]) -> Result<Value, BuildError> {
        let ty = incoming
            .first()
            .map(|&(v, _)| self.ty(v))
            .ok_or_else(|| BuildError::TypeMismatch("`phi` without incoming values".into()))?;
        let args = incoming.iter().map(|&(v, _)| v).collect();
        let blocks = incoming.iter().map(|&(_, b)| b).collect();
        self.value(InstData::new(Opcode::Phi, ty, args).with_blocks(blocks))
    }

    pub fn br(&mut self, target: Block) -> Result<(), BuildError> {
        self.void(InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![target]))
    }

    pub fn br_cond(&mut self, cond: Value, if_false: Block, if_true: Block) -> Result<(), BuildError> {
        self.void(
            InstData::new(Opcode::BrCond, Type::Void, vec![cond])
                .with_blocks(vec![if_false, if_true]),
        )
    }

    pub fn wait(
        &mut self,
        resume: Block,
        time: Option<Value>,
        signals: &[Value],
    ) -> Result<(), BuildError> {
        let mut args: Vec<Value> = time.into_iter().collect();
        args.extend_from_slice(signals);
        self.void(
            InstData::new(Opcode::Wait, Type::Void, args)
                .with_blocks(vec![resume])
                .with_extra(Extra::Wait {
                    has_time: time.is_some(),
                }),
        )
    }

    pub fn halt(&mut self) -> Result<(), BuildError> {
        self.void(InstData::new(Opcode::Halt, Type::Void, vec![]))
    }

    pub fn ret(&mut self, v: Option<Value>) -> Result<(), BuildError> {
        let ty = v.map(|v| self.ty(v)).unwrap_or(Type::Void);
        self.void(InstData::new(Opcode::Ret, ty, v.into_iter().collect()))
    }
}

impl Drop for UnitBuilder<'_> {
    fn drop(&mut self) {
        if let Some(u) = self.unit.take() {
            self.module.replace_unit(self.id, u);
        }
    }
}
