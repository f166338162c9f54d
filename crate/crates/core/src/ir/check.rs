//! Typing and legality rules shared by the builder and the verifier.

use super::inst::{ConstValue, Extra, InstData, Opcode};
use super::module::{Module, Signature, UnitName};
use super::ty::Type;
use super::unit::{UnitData, UnitKind};

/// Check that `op` may appear in a unit of the given kind.
pub fn check_opcode_allowed(kind: UnitKind, op: Opcode) -> Result<(), String> {
    match kind {
        UnitKind::Function => {
            if op.is_timed_only() {
                return Err(format!(
                    "`{}` may not appear in a function; functions execute immediately",
                    op
                ));
            }
        }
        UnitKind::Process => {
            if op.is_entity_only() {
                return Err(format!("`{}` is only allowed in entities", op));
            }
            if op == Opcode::Ret {
                return Err("`ret` is not allowed in a process; processes never return".into());
            }
        }
        UnitKind::Entity => {
            if op.is_terminator() {
                return Err(format!(
                    "terminator `{}` in data-flow unit; entities have no control flow",
                    op
                ));
            }
            if op == Opcode::Phi {
                return Err("`phi` in data-flow unit".into());
            }
            if op.is_memory() {
                return Err(format!("memory instruction `{}` in entity", op));
            }
        }
    }
    Ok(())
}

/// Whether a type may be carried by a signal or stored in memory.
fn is_value_type(ty: &Type) -> bool {
    !matches!(
        ty,
        Type::Void | Type::Signal(_) | Type::Pointer(_) | Type::Func(..)
    )
}

fn expect_args(data: &InstData, n: usize) -> Result<(), String> {
    if data.args.len() != n {
        Err(format!(
            "`{}` expects {} operands, got {}",
            data.opcode,
            n,
            data.args.len()
        ))
    } else {
        Ok(())
    }
}

fn expect_ty(what: &str, got: &Type, want: &Type) -> Result<(), String> {
    if got != want {
        Err(format!("{} has type `{}`, expected `{}`", what, got, want))
    } else {
        Ok(())
    }
}

/// Signature of a call/inst target and whether it is a function. `None` when
/// there is no module to resolve against.
fn resolve_target<'a>(
    unit: &'a UnitData,
    module: Option<&'a Module>,
    name: &UnitName,
) -> Result<Option<(&'a Signature, bool)>, String> {
    if *name == unit.name {
        return Ok(Some((&unit.sig, unit.kind == UnitKind::Function)));
    }
    let m = match module {
        Some(m) => m,
        None => return Ok(None),
    };
    if let Some(id) = m.lookup(name) {
        let u = m.unit(id);
        return Ok(Some((&u.sig, u.kind == UnitKind::Function)));
    }
    match m.lookup_declaration(name) {
        Some(d) => Ok(Some((&d.sig, d.function))),
        None => Err(format!("unknown unit `{}`", name)),
    }
}

/// Check the operand types and arity of an instruction.
///
/// `module` resolves `call`/`inst` targets; without it those are not checked.
pub fn check_inst_types(
    unit: &UnitData,
    module: Option<&Module>,
    data: &InstData,
) -> Result<(), String> {
    use Opcode::*;
    data.ty.validate()?;
    let ty = &data.ty;
    let arg_ty = |i: usize| unit.value_type(data.args[i]);
    match data.opcode {
        Const => {
            expect_args(data, 0)?;
            match (ty, data.const_value()) {
                (Type::Int(w), Some(ConstValue::Int(v))) => {
                    if v.bits() as usize > *w {
                        return Err(format!("constant {} does not fit in `{}`", v, ty));
                    }
                }
                (Type::Enum(n), Some(ConstValue::Enum(v))) => {
                    if v >= n {
                        return Err(format!("constant {} out of range for `{}`", v, ty));
                    }
                }
                (Type::Logic(w), Some(ConstValue::Logic(ds))) => {
                    if ds.len() != *w {
                        return Err(format!(
                            "logic constant has {} digits, `{}` needs {}",
                            ds.len(),
                            ty,
                            w
                        ));
                    }
                }
                (Type::Time, Some(ConstValue::Time(_))) => {}
                _ => return Err(format!("invalid constant of type `{}`", ty)),
            }
        }
        Array => {
            for i in 0..data.args.len() {
                expect_ty("array element", arg_ty(i), ty)?;
            }
        }
        Struct => {
            let fields = match ty {
                Type::Struct(fs) => fs,
                _ => return Err(format!("`struct` needs a struct type, got `{}`", ty)),
            };
            expect_args(data, fields.len())?;
            for (i, f) in fields.iter().enumerate() {
                expect_ty("struct field", arg_ty(i), f)?;
            }
        }
        Not | Neg => {
            expect_args(data, 1)?;
            if !matches!(ty, Type::Int(_) | Type::Logic(_)) {
                return Err(format!("`{}` needs an integer or logic type", data.opcode));
            }
            expect_ty("operand", arg_ty(0), ty)?;
        }
        op if op.is_binary() => {
            expect_args(data, 2)?;
            if !matches!(ty, Type::Int(_) | Type::Logic(_)) {
                return Err(format!(
                    "`{}` needs an integer or logic type, got `{}`",
                    op, ty
                ));
            }
            expect_ty("left operand", arg_ty(0), ty)?;
            expect_ty("right operand", arg_ty(1), ty)?;
        }
        op if op.is_compare() => {
            expect_args(data, 2)?;
            let ordered = !matches!(op, Eq | Neq);
            if ordered && !matches!(ty, Type::Int(_) | Type::Logic(_) | Type::Time) {
                return Err(format!("`{}` needs an ordered type, got `{}`", op, ty));
            }
            if !is_value_type(ty) {
                return Err(format!("cannot compare values of type `{}`", ty));
            }
            expect_ty("left operand", arg_ty(0), ty)?;
            expect_ty("right operand", arg_ty(1), ty)?;
        }
        Shl | Shr => {
            expect_args(data, 3)?;
            let base = ty.inner().unwrap_or(ty);
            if !matches!(base, Type::Int(_) | Type::Logic(_) | Type::Array(..)) {
                return Err(format!("cannot shift values of type `{}`", ty));
            }
            expect_ty("shifted operand", arg_ty(0), ty)?;
            expect_ty("hidden operand", arg_ty(1), ty)?;
            if !matches!(arg_ty(2), Type::Int(_)) {
                return Err("shift amount must be an integer".into());
            }
        }
        Mux => {
            if data.args.len() < 2 {
                return Err("`mux` needs at least one option and a selector".into());
            }
            let (opts, sel) = data.mux_parts();
            for &o in opts {
                expect_ty("mux option", unit.value_type(o), ty)?;
            }
            match unit.value_type(sel) {
                Type::Int(_) | Type::Enum(_) => {}
                t => return Err(format!("mux selector must be iN or nN, got `{}`", t)),
            }
        }
        InsField | ExtField => {
            let n = if data.opcode == InsField { 2 } else { 1 };
            expect_args(data, n)?;
            let idx = *data.imms.first().ok_or("missing field index")?;
            let base = if data.opcode == ExtField {
                ty.inner().unwrap_or(ty)
            } else {
                ty
            };
            let field = base
                .field(idx)
                .ok_or_else(|| format!("`{}` has no field {}", base, idx))?;
            expect_ty("aggregate", arg_ty(0), ty)?;
            if n == 2 {
                expect_ty("inserted value", arg_ty(1), field)?;
            }
        }
        InsSlice | ExtSlice => {
            let n = if data.opcode == InsSlice { 2 } else { 1 };
            expect_args(data, n)?;
            let (off, len) = match data.imms[..] {
                [o, l] => (o, l),
                _ => return Err("slice needs offset and length".into()),
            };
            let base = if data.opcode == ExtSlice {
                ty.inner().unwrap_or(ty)
            } else {
                ty
            };
            let slice = base
                .slice(off, len)
                .ok_or_else(|| format!("slice {}..{} out of bounds for `{}`", off, off + len, base))?;
            expect_ty("sliced value", arg_ty(0), ty)?;
            if n == 2 {
                expect_ty("inserted value", arg_ty(1), &slice)?;
            }
        }
        Sig => {
            expect_args(data, 1)?;
            if !is_value_type(ty) {
                return Err(format!("signals cannot carry `{}`", ty));
            }
            expect_ty("initial value", arg_ty(0), ty)?;
        }
        Prb => {
            expect_args(data, 1)?;
            if !ty.is_signal() {
                return Err(format!("`prb` needs a signal type, got `{}`", ty));
            }
            expect_ty("probed signal", arg_ty(0), ty)?;
        }
        Drv => {
            if data.args.len() != 3 && data.args.len() != 4 {
                return Err("`drv` expects signal, value, delay, and an optional condition".into());
            }
            let inner = ty.inner().filter(|_| ty.is_signal()).ok_or("`drv` needs a signal type")?;
            expect_ty("driven signal", arg_ty(0), ty)?;
            expect_ty("driven value", arg_ty(1), inner)?;
            expect_ty("drive delay", arg_ty(2), &Type::Time)?;
            if data.args.len() == 4 {
                expect_ty("drive condition", arg_ty(3), &Type::Int(1))?;
            }
        }
        Reg => {
            let inner = ty.inner().filter(|_| ty.is_signal()).ok_or("`reg` needs a signal type")?;
            if !matches!(data.extra, Extra::Reg(_)) || data.args.is_empty() {
                return Err("malformed `reg`".into());
            }
            let expected: usize = 1 + match &data.extra {
                Extra::Reg(ts) => ts
                    .iter()
                    .map(|t| 2 + t.has_delay as usize + t.has_gate as usize)
                    .sum::<usize>(),
                _ => 0,
            };
            expect_args(data, expected)?;
            expect_ty("register target", arg_ty(0), ty)?;
            for t in data.reg_triggers() {
                expect_ty("stored value", unit.value_type(t.value), inner)?;
                expect_ty("trigger", unit.value_type(t.trigger), &Type::Int(1))?;
                if let Some(d) = t.delay {
                    expect_ty("trigger delay", unit.value_type(d), &Type::Time)?;
                }
                if let Some(g) = t.gate {
                    expect_ty("trigger gate", unit.value_type(g), &Type::Int(1))?;
                }
            }
        }
        Con => {
            expect_args(data, 2)?;
            if !ty.is_signal() {
                return Err("`con` needs a signal type".into());
            }
            expect_ty("connected signal", arg_ty(0), ty)?;
            expect_ty("connected signal", arg_ty(1), ty)?;
        }
        Del => {
            expect_args(data, 2)?;
            if !ty.is_signal() {
                return Err("`del` needs a signal type".into());
            }
            expect_ty("delayed signal", arg_ty(0), ty)?;
            expect_ty("delay", arg_ty(1), &Type::Time)?;
        }
        Inst => {
            let (name, inputs) = match &data.extra {
                Extra::Unit { name, inputs } => (name, *inputs),
                _ => return Err("`inst` without target".into()),
            };
            for &a in &data.args {
                if !unit.value_type(a).is_signal() {
                    return Err(format!(
                        "`inst` port operand has type `{}`; ports must be signals",
                        unit.value_type(a)
                    ));
                }
            }
            if let Some((sig, is_function)) = resolve_target(unit, module, name)? {
                if is_function {
                    return Err(format!("cannot instantiate function `{}`", name));
                }
                if inputs != sig.inputs.len() || data.args.len() - inputs != sig.outputs.len() {
                    return Err(format!(
                        "`{}` has {} inputs and {} outputs, instantiated with {} and {}",
                        name,
                        sig.inputs.len(),
                        sig.outputs.len(),
                        inputs,
                        data.args.len() - inputs
                    ));
                }
                for (a, t) in data.args.iter().zip(sig.inputs.iter().chain(&sig.outputs)) {
                    expect_ty("port", unit.value_type(*a), t)?;
                }
            }
        }
        Var | Alloc => {
            expect_args(data, 1)?;
            if !is_value_type(ty) {
                return Err(format!("cannot allocate `{}`", ty));
            }
            expect_ty("initial value", arg_ty(0), ty)?;
        }
        Ld | Free => {
            expect_args(data, 1)?;
            if !ty.is_pointer() {
                return Err(format!("`{}` needs a pointer type", data.opcode));
            }
            expect_ty("pointer", arg_ty(0), ty)?;
        }
        St => {
            expect_args(data, 2)?;
            let inner = ty.inner().filter(|_| ty.is_pointer()).ok_or("`st` needs a pointer type")?;
            expect_ty("pointer", arg_ty(0), ty)?;
            expect_ty("stored value", arg_ty(1), inner)?;
        }
        Call => {
            let name = data.callee().ok_or("`call` without target")?;
            if name.is_intrinsic() {
                if name.as_str() == "llhd.assert" {
                    expect_args(data, 1)?;
                    expect_ty("assertion", arg_ty(0), &Type::Int(1))?;
                }
                return Ok(());
            }
            if let Some((sig, is_function)) = resolve_target(unit, module, name)? {
                if !is_function {
                    return Err(format!("`{}` is not a function", name));
                }
                if data.args.len() != sig.inputs.len() {
                    return Err(format!(
                        "`{}` takes {} arguments, called with {}",
                        name,
                        sig.inputs.len(),
                        data.args.len()
                    ));
                }
                for (a, t) in data.args.iter().zip(&sig.inputs) {
                    expect_ty("argument", unit.value_type(*a), t)?;
                }
                expect_ty("call result", ty, &sig.ret)?;
            }
        }
        Phi => {
            if data.args.is_empty() || data.args.len() != data.blocks.len() {
                return Err("`phi` needs one value per incoming block".into());
            }
            for &a in &data.args {
                expect_ty("incoming value", unit.value_type(a), ty)?;
            }
        }
        Br => {
            expect_args(data, 0)?;
            if data.blocks.len() != 1 {
                return Err("`br` needs one target".into());
            }
        }
        BrCond => {
            expect_args(data, 1)?;
            if data.blocks.len() != 2 {
                return Err("conditional `br` needs two targets".into());
            }
            expect_ty("branch condition", arg_ty(0), &Type::Int(1))?;
        }
        Wait => {
            if data.blocks.len() != 1 {
                return Err("`wait` needs a resume block".into());
            }
            if let Some(t) = data.wait_time() {
                expect_ty("wait time", unit.value_type(t), &Type::Time)?;
            }
            for &s in data.wait_signals() {
                if !unit.value_type(s).is_signal() {
                    return Err(format!(
                        "`wait` observes a `{}`, not a signal",
                        unit.value_type(s)
                    ));
                }
            }
        }
        Halt => expect_args(data, 0)?,
        Ret => {
            if unit.sig.ret.is_void() {
                expect_args(data, 0)?;
            } else {
                expect_args(data, 1)?;
                expect_ty("returned value", arg_ty(0), &unit.sig.ret)?;
            }
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// Check the port typing rules of a unit signature.
pub fn check_signature(kind: UnitKind, sig: &Signature) -> Result<(), String> {
    for t in sig.inputs.iter().chain(&sig.outputs).chain(std::iter::once(&sig.ret)) {
        t.validate()?;
    }
    match kind {
        UnitKind::Function => {
            if !sig.outputs.is_empty() {
                return Err("functions have no output ports".into());
            }
        }
        UnitKind::Process | UnitKind::Entity => {
            for t in sig.inputs.iter().chain(&sig.outputs) {
                if !t.is_signal() {
                    return Err(format!(
                        "{} port has type `{}`; inputs and outputs must be signals",
                        kind.keyword(),
                        t
                    ));
                }
            }
        }
    }
    Ok(())
}
