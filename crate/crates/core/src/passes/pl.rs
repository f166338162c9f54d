//! Process lowering: turn a single-block process that waits on itself into
//! an entity.

use super::util::*;
use crate::ir::{Opcode, UnitData, UnitKind, Value};
use std::collections::{HashMap, HashSet};

/// Probed root signals of a set of `prb` instructions.
pub(super) fn probed_roots(unit: &UnitData, insts: impl Iterator<Item = crate::ir::Inst>) -> HashSet<Value> {
    insts
        .filter(|&i| unit.opcode(i) == Opcode::Prb)
        .map(|i| root_signal(unit, unit.inst_data(i).args[0]))
        .collect()
}

/// The signals a `wait` observes; every one must be a unit argument.
pub(super) fn wait_set(unit: &UnitData, wait: crate::ir::Inst) -> Result<HashSet<Value>, Reject> {
    let mut w = HashSet::new();
    for &s in unit.inst_data(wait).wait_signals() {
        if !unit.is_arg(s) {
            return Err(Reject::at(wait, "wait observes a signal that is not a unit argument"));
        }
        w.insert(s);
    }
    Ok(w)
}

/// Delays of all drives must be constants for the process to tolerate
/// extra sensitivity.
pub(super) fn constant_delays(unit: &UnitData) -> Result<(), Reject> {
    for i in unit.all_insts() {
        if unit.opcode(i) == Opcode::Drv && unit.const_of(unit.inst_data(i).args[2]).is_none() {
            return Err(Reject::at(
                i,
                "drive delay must be constant when the process waits on signals it does not probe",
            ));
        }
    }
    Ok(())
}

pub fn process_lowering(unit: &UnitData) -> Result<UnitData, Reject> {
    let b = unit.entry().ok_or_else(|| Reject::new("process has no blocks"))?;
    if unit.block_count() != 1 {
        return Err(Reject::new("process has more than one block"));
    }
    let wait = unit.terminator(b).unwrap();
    let wd = unit.inst_data(wait);
    if wd.opcode != Opcode::Wait || wd.blocks[0] != b {
        return Err(Reject::at(wait, "process must end in a wait on its own block"));
    }
    if wd.wait_time().is_some() {
        return Err(Reject::at(wait, "wait with a timeout cannot be lowered to an entity"));
    }
    for &i in unit.insts(b) {
        let op = unit.opcode(i);
        if i == wait || op.is_pure() || matches!(op, Opcode::Prb | Opcode::Drv) {
            continue;
        }
        let msg = match op {
            Opcode::Phi => "process carries state across waits",
            Opcode::Call => "call in a process cannot be lowered to an entity",
            _ => "instruction cannot be lowered to an entity",
        };
        return Err(Reject::at(i, msg));
    }
    let w = wait_set(unit, wait)?;
    if w.is_empty() {
        return Err(Reject::at(wait, "wait observes no signals"));
    }
    let p = probed_roots(unit, unit.insts(b).iter().copied());
    if !p.is_subset(&w) {
        return Err(Reject::at(wait, "process probes signals it does not wait on"));
    }
    if p != w {
        constant_delays(unit)?;
    }
    let mut ent = UnitData::new(UnitKind::Entity, unit.name.clone(), unit.sig.clone());
    for a in unit.args() {
        if let Some(n) = unit.value_name(a) {
            ent.set_value_name(a, n);
        }
    }
    let mut vmap: HashMap<Value, Value> = unit.args().zip(ent.args().collect::<Vec<_>>()).collect();
    let mut bmap = HashMap::from([(b, ent.body())]);
    let created = copy_blocks(unit, &mut ent, &[b], &mut vmap, &mut bmap);
    ent.remove_inst(*created.last().unwrap());
    Ok(ent)
}
