//! Constant folding, dead code elimination, common subexpression
//! elimination, and peephole simplification.

use super::util::*;
use crate::analysis::temporal_regions_of;
use crate::ir::{eval_pure, ConstValue, Extra, Inst, InstData, Opcode, Type, UnitData, Val, Value};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::{HashMap, HashSet};

/// Evaluate pure instructions whose operands are all constant, resolve
/// branches and drive conditions on constants.
pub fn constant_fold(unit: &mut UnitData) -> bool {
    let mut changed = false;
    loop {
        let mut any = false;
        for inst in unit.all_insts().collect::<Vec<_>>() {
            let d = unit.inst_data(inst);
            if d.opcode == Opcode::Const || !d.opcode.is_pure() {
                continue;
            }
            let vals: Option<Vec<Val>> = d.args.iter().map(|&a| const_val(unit, a)).collect();
            let vals = match vals {
                Some(v) => v,
                None => continue,
            };
            let refs: Vec<&Val> = vals.iter().collect();
            if let Some((v, false)) = eval_pure(d, &refs) {
                if let Some(c) = v.to_const() {
                    let ty = d.result_type();
                    *unit.inst_data_mut(inst) = const_inst(ty, c);
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        changed = true;
    }
    for inst in unit.all_insts().collect::<Vec<_>>() {
        let d = unit.inst_data(inst);
        match d.opcode {
            Opcode::BrCond => {
                let c = match const_val(unit, d.args[0]).and_then(|v| v.as_bool()) {
                    Some(c) => c,
                    None => continue,
                };
                let (taken, other) = (d.blocks[c as usize], d.blocks[!c as usize]);
                let b = unit.inst_block(inst).unwrap();
                if taken != other {
                    remove_phi_incoming(unit, other, b);
                }
                *unit.inst_data_mut(inst) =
                    InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![taken]);
                changed = true;
            }
            Opcode::Drv if d.args.len() > 3 => {
                match const_val(unit, d.args[3]).and_then(|v| v.as_bool()) {
                    Some(true) => {
                        unit.inst_data_mut(inst).args.truncate(3);
                        changed = true;
                    }
                    Some(false) => {
                        unit.remove_inst(inst);
                        changed = true;
                    }
                    None => {}
                }
            }
            _ => {}
        }
    }
    changed
}

/// Signals stay even when unused: they are observable in traces.
fn removable_if_unused(op: Opcode) -> bool {
    op.is_pure()
        || matches!(
            op,
            Opcode::Prb | Opcode::Var | Opcode::Alloc | Opcode::Ld | Opcode::Phi
        )
}

/// Remove unreachable blocks, trivial phis, unused instructions, dead
/// memory slots, and straight-line control flow.
pub fn dce(unit: &mut UnitData) -> bool {
    let mut changed = false;
    loop {
        let mut any = false;
        any |= remove_unreachable_blocks(unit);
        any |= simplify_phis(unit);
        any |= remove_dead_insts(unit);
        any |= remove_dead_slots(unit);
        if !unit.is_entity() {
            any |= simplify_cfg(unit);
        }
        if !any {
            break;
        }
        changed = true;
    }
    changed
}

/// Replace phis whose incoming values are all the same (ignoring the phi
/// itself) by that value.
fn simplify_phis(unit: &mut UnitData) -> bool {
    let mut changed = false;
    for inst in unit.all_insts().collect::<Vec<_>>() {
        if unit.opcode(inst) != Opcode::Phi || unit.inst_block(inst).is_none() {
            continue;
        }
        let r = unit.inst_result(inst).unwrap();
        let distinct: HashSet<Value> =
            unit.inst_data(inst).args.iter().copied().filter(|&a| a != r).collect();
        if distinct.len() == 1 {
            let v = *distinct.iter().next().unwrap();
            unit.replace_uses(r, v);
            unit.remove_inst(inst);
            changed = true;
        }
    }
    changed
}

fn remove_dead_insts(unit: &mut UnitData) -> bool {
    let mut changed = false;
    loop {
        let counts = unit.use_counts();
        let dead: Vec<Inst> = unit
            .all_insts()
            .filter(|&i| {
                removable_if_unused(unit.opcode(i))
                    && unit.inst_result(i).map_or(true, |r| counts[r.index()] == 0)
            })
            .collect();
        // A phi only feeding itself is dead as well.
        let self_phis: Vec<Inst> = unit
            .all_insts()
            .filter(|&i| {
                unit.opcode(i) == Opcode::Phi && {
                    let r = unit.inst_result(i).unwrap();
                    let own = unit.inst_data(i).args.iter().filter(|&&a| a == r).count();
                    own > 0 && counts[r.index()] == own
                }
            })
            .collect();
        if dead.is_empty() && self_phis.is_empty() {
            break;
        }
        for i in dead.into_iter().chain(self_phis) {
            unit.remove_inst(i);
        }
        changed = true;
    }
    changed
}

/// Memory slots that are only written to can go along with their stores.
fn remove_dead_slots(unit: &mut UnitData) -> bool {
    let mut changed = false;
    let users = unit.user_map();
    for inst in unit.all_insts().collect::<Vec<_>>() {
        if !matches!(unit.opcode(inst), Opcode::Var | Opcode::Alloc) {
            continue;
        }
        let p = unit.inst_result(inst).unwrap();
        let us = users.get(&p).cloned().unwrap_or_default();
        let only_writes = us.iter().all(|&u| {
            let d = unit.inst_data(u);
            match d.opcode {
                Opcode::St => d.args[0] == p && d.args[1] != p,
                Opcode::Free => true,
                _ => false,
            }
        });
        if only_writes {
            for u in us {
                unit.remove_inst(u);
            }
            unit.remove_inst(inst);
            changed = true;
        }
    }
    changed
}

/// Fold conditional branches with identical targets, merge a block into its
/// only predecessor, and bypass empty forwarding blocks.
fn simplify_cfg(unit: &mut UnitData) -> bool {
    let mut changed = false;
    for b in unit.blocks().collect::<Vec<_>>() {
        if let Some(t) = unit.terminator(b) {
            let d = unit.inst_data(t);
            if d.opcode == Opcode::BrCond && d.blocks[0] == d.blocks[1] {
                let target = d.blocks[0];
                *unit.inst_data_mut(t) =
                    InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![target]);
                changed = true;
            }
        }
    }
    loop {
        let preds = unit.predecessors();
        let entry = unit.entry().unwrap();
        let mut did = false;
        for a in unit.blocks().collect::<Vec<_>>() {
            let t = match unit.terminator(a) {
                Some(t) if unit.opcode(t) == Opcode::Br => t,
                _ => continue,
            };
            let b = unit.inst_data(t).blocks[0];
            if b == a || b == entry || preds[&b].len() != 1 {
                continue;
            }
            for phi in phis(unit, b) {
                let r = unit.inst_result(phi).unwrap();
                let v = unit.inst_data(phi).args[0];
                unit.replace_uses(r, v);
                unit.remove_inst(phi);
            }
            unit.remove_inst(t);
            for inst in unit.insts(b).to_vec() {
                unit.remove_inst(inst);
                unit.append_inst(a, inst);
            }
            for s in unit.successors(a) {
                rename_phi_incoming(unit, s, b, a);
            }
            unit.remove_block(b);
            did = true;
            break;
        }
        if !did {
            break;
        }
        changed = true;
    }
    // Empty blocks that only jump on can be skipped if the target has no
    // phis to fix up.
    let mut budget = unit.block_count() * 2;
    while budget > 0 {
        budget -= 1;
        let preds = unit.predecessors();
        let entry = unit.entry().unwrap();
        let mut did = false;
        for f in unit.blocks().collect::<Vec<_>>() {
            if f == entry || unit.insts(f).len() != 1 {
                continue;
            }
            let t = unit.insts(f)[0];
            if unit.opcode(t) != Opcode::Br {
                continue;
            }
            let target = unit.inst_data(t).blocks[0];
            if target == f || !phis(unit, target).is_empty() {
                continue;
            }
            for &p in &preds[&f] {
                let pt = unit.terminator(p).unwrap();
                for x in &mut unit.inst_data_mut(pt).blocks {
                    if *x == f {
                        *x = target;
                    }
                }
            }
            if !preds[&f].is_empty() {
                did = true;
                break;
            }
        }
        if !did {
            break;
        }
        remove_unreachable_blocks(unit);
        changed = true;
    }
    changed
}

fn cse_key(unit: &UnitData, inst: Inst) -> Option<InstData> {
    let d = unit.inst_data(inst);
    if !(d.opcode.is_pure() || d.opcode == Opcode::Prb) {
        return None;
    }
    let mut k = d.clone();
    if d.opcode.is_commutative() {
        k.args.sort();
    }
    Some(k)
}

/// Merge identical pure instructions, and identical probes within one
/// temporal region.
pub fn cse(unit: &mut UnitData) -> bool {
    let mut changed = false;
    if unit.is_entity() {
        let mut table: HashMap<InstData, Value> = HashMap::new();
        loop {
            let mut any = false;
            table.clear();
            for inst in unit.all_insts().collect::<Vec<_>>() {
                let key = match cse_key(unit, inst) {
                    Some(k) => k,
                    None => continue,
                };
                let r = unit.inst_result(inst).unwrap();
                match table.get(&key) {
                    Some(&v) => {
                        unit.replace_uses(r, v);
                        unit.remove_inst(inst);
                        any = true;
                    }
                    None => {
                        table.insert(key, r);
                    }
                }
            }
            if !any {
                break;
            }
            changed = true;
        }
        return changed;
    }
    if unit.entry().is_none() {
        return false;
    }
    let (cfg, dom) = cfg_dom(unit);
    let trs = temporal_regions_of(unit, &cfg);
    let mut table: HashMap<InstData, Vec<Inst>> = HashMap::new();
    let mut replace: HashMap<Value, Value> = HashMap::new();
    for b in cfg.rpo() {
        for inst in unit.insts(b).to_vec() {
            let mut key = match cse_key(unit, inst) {
                Some(k) => k,
                None => continue,
            };
            for a in &mut key.args {
                if let Some(&n) = replace.get(a) {
                    *a = n;
                }
            }
            if unit.inst_data(inst).opcode.is_commutative() {
                key.args.sort();
            }
            let cands = table.entry(key).or_default();
            let found = cands.iter().copied().find(|&c| {
                let cb = unit.inst_block(c).unwrap();
                dom.block_dominates(cb, b)
                    && (unit.opcode(c) != Opcode::Prb || trs.tr_of(cb) == trs.tr_of(b))
            });
            match found {
                Some(c) => {
                    let r = unit.inst_result(inst).unwrap();
                    replace.insert(r, unit.inst_result(c).unwrap());
                }
                None => cands.push(inst),
            }
        }
    }
    if replace.is_empty() {
        return false;
    }
    for (&old, &new) in &replace {
        unit.replace_uses(old, new);
        unit.remove_inst(unit.def_inst(old).unwrap());
    }
    true
}

fn int_const(unit: &UnitData, v: Value) -> Option<(usize, BigUint)> {
    match const_val(unit, v)? {
        Val::Int { width, bits } => Some((width, bits)),
        _ => None,
    }
}

fn is_zero(unit: &UnitData, v: Value) -> bool {
    int_const(unit, v).map_or(false, |(_, b)| b.is_zero())
}

fn is_one(unit: &UnitData, v: Value) -> bool {
    int_const(unit, v).map_or(false, |(_, b)| b.is_one())
}

fn is_ones(unit: &UnitData, v: Value) -> bool {
    int_const(unit, v).map_or(false, |(w, b)| b == (BigUint::one() << w) - BigUint::one())
}

enum Rewrite {
    Value(Value),
    Const(ConstValue),
}

fn peephole(unit: &UnitData, inst: Inst) -> Option<Rewrite> {
    use Opcode::*;
    let d = unit.inst_data(inst);
    let int_ty = matches!(d.ty, Type::Int(_));
    let a = d.args.first().copied();
    let b = d.args.get(1).copied();
    match d.opcode {
        Mux => {
            let (opts, sel) = d.mux_parts();
            if let Some(i) = const_val(unit, sel).and_then(|v| v.as_index()) {
                return Some(Rewrite::Value(opts[i.min(opts.len() - 1)]));
            }
            if opts.iter().all(|&o| o == opts[0]) {
                return Some(Rewrite::Value(opts[0]));
            }
            None
        }
        Not if int_ty => {
            let inner = unit.def_inst(a?)?;
            if unit.opcode(inner) == Not {
                return Some(Rewrite::Value(unit.inst_data(inner).args[0]));
            }
            None
        }
        Add | Or | Xor if int_ty => {
            let (a, b) = (a?, b?);
            if is_zero(unit, b) {
                Some(Rewrite::Value(a))
            } else if is_zero(unit, a) {
                Some(Rewrite::Value(b))
            } else if d.opcode == Or && a == b {
                Some(Rewrite::Value(a))
            } else if d.opcode == Xor && a == b {
                Some(Rewrite::Const(ConstValue::Int(0u32.into())))
            } else if d.opcode == Or && (is_ones(unit, a) || is_ones(unit, b)) {
                let w = d.ty.width()?;
                Some(Rewrite::Const(ConstValue::Int((BigUint::one() << w) - BigUint::one())))
            } else {
                None
            }
        }
        Sub if int_ty => {
            let (a, b) = (a?, b?);
            if is_zero(unit, b) {
                Some(Rewrite::Value(a))
            } else if a == b {
                Some(Rewrite::Const(ConstValue::Int(0u32.into())))
            } else {
                None
            }
        }
        And if int_ty => {
            let (a, b) = (a?, b?);
            if a == b || is_ones(unit, b) {
                Some(Rewrite::Value(a))
            } else if is_ones(unit, a) {
                Some(Rewrite::Value(b))
            } else if is_zero(unit, a) || is_zero(unit, b) {
                Some(Rewrite::Const(ConstValue::Int(0u32.into())))
            } else {
                None
            }
        }
        Mul if int_ty => {
            let (a, b) = (a?, b?);
            if is_one(unit, b) {
                Some(Rewrite::Value(a))
            } else if is_one(unit, a) {
                Some(Rewrite::Value(b))
            } else if is_zero(unit, a) || is_zero(unit, b) {
                Some(Rewrite::Const(ConstValue::Int(0u32.into())))
            } else {
                None
            }
        }
        Eq | Neq | Ule | Uge | Sle | Sge | Ult | Ugt | Slt | Sgt
            if matches!(unit.value_type(a?), Type::Int(_) | Type::Enum(_)) && a == b =>
        {
            let t = matches!(d.opcode, Eq | Ule | Uge | Sle | Sge);
            Some(Rewrite::Const(ConstValue::Int((t as u32).into())))
        }
        Shl | Shr if is_zero(unit, d.args[2]) => Some(Rewrite::Value(d.args[0])),
        _ => None,
    }
}

/// Peephole rewrites of short instruction sequences.
pub fn inst_simplify(unit: &mut UnitData) -> bool {
    let mut changed = false;
    loop {
        let mut any = false;
        for inst in unit.all_insts().collect::<Vec<_>>() {
            if unit.inst_block(inst).is_none() {
                continue;
            }
            match peephole(unit, inst) {
                Some(Rewrite::Value(v)) => {
                    let r = unit.inst_result(inst).unwrap();
                    if v == r {
                        continue;
                    }
                    unit.replace_uses(r, v);
                    unit.remove_inst(inst);
                    any = true;
                }
                Some(Rewrite::Const(c)) => {
                    let ty = unit.inst_data(inst).result_type();
                    *unit.inst_data_mut(inst) = InstData {
                        extra: Extra::Const(c),
                        ..InstData::new(Opcode::Const, ty, vec![])
                    };
                    any = true;
                }
                None => {}
            }
        }
        if !any {
            break;
        }
        changed = true;
    }
    changed
}
