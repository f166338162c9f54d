//! Temporal code motion: give every temporal region a single exiting block
//! and move all drives of the region there, guarded by the condition under
//! which they were reached.

use super::util::*;
use crate::analysis::{build_cfg, condition_chain, emit_expr, temporal_regions_of, BoolExpr, InsertPoint};
use crate::ir::{Block, Inst, InstData, Opcode, Type, UnitData, Value};
use std::collections::HashMap;

/// Run temporal code motion on a process.
pub fn temporal_code_motion(unit: &mut UnitData) -> PassResult {
    if !unit.is_process() || unit.entry().is_none() {
        return Ok(false);
    }
    let mut changed = add_aux_blocks(unit);
    changed |= move_drives(unit)?;
    changed |= coalesce_drives(unit);
    Ok(changed)
}

enum Exit {
    Branch(Block),
    Terminal(InstData),
}

/// Funnel the exits of each region with several exiting blocks through a
/// new block, provided they all leave towards the same place.
fn add_aux_blocks(unit: &mut UnitData) -> bool {
    let mut changed = false;
    loop {
        let cfg = build_cfg(unit).unwrap();
        let trs = temporal_regions_of(unit, &cfg);
        let mut todo = None;
        for (t, r) in trs.regions().iter().enumerate() {
            if r.exiting.len() < 2 {
                continue;
            }
            let mut exits = vec![];
            for &b in &r.exiting {
                let term = unit.terminator(b).unwrap();
                let d = unit.inst_data(term);
                match d.opcode {
                    Opcode::Wait | Opcode::Halt => exits.push(Exit::Terminal(d.clone())),
                    _ => {
                        for s in unit.successors(b) {
                            if trs.tr_of(s) != Some(t) || s == r.head {
                                exits.push(Exit::Branch(s));
                            }
                        }
                    }
                }
            }
            let same = match &exits[0] {
                Exit::Branch(x) => exits.iter().all(|e| matches!(e, Exit::Branch(y) if y == x)),
                Exit::Terminal(x) => exits.iter().all(|e| matches!(e, Exit::Terminal(y) if y == x)),
            };
            if same {
                todo = Some((r.exiting.clone(), exits.swap_remove(0)));
                break;
            }
        }
        let (exiting, exit) = match todo {
            Some(x) => x,
            None => return changed,
        };
        let last = *exiting.iter().max_by_key(|b| unit.blocks().position(|x| x == **b)).unwrap();
        let name = fresh_block_name(unit, "aux");
        let aux = unit.add_block_after(last, Some(name));
        let target = match exit {
            Exit::Branch(target) => {
                for &b in &exiting {
                    let t = unit.terminator(b).unwrap();
                    for x in &mut unit.inst_data_mut(t).blocks {
                        if *x == target {
                            *x = aux;
                        }
                    }
                }
                let br = unit.create_inst(
                    InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![target]),
                );
                unit.append_inst(aux, br);
                Some(target)
            }
            Exit::Terminal(d) => {
                let target = d.blocks.first().copied();
                let t = unit.create_inst(d);
                unit.append_inst(aux, t);
                for &b in &exiting {
                    let t = unit.terminator(b).unwrap();
                    *unit.inst_data_mut(t) =
                        InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![aux]);
                }
                target
            }
        };
        if let Some(target) = target {
            merge_phi_inputs(unit, target, &exiting, aux);
        }
        changed = true;
    }
}

/// Phi inputs of `target` from `preds` now all arrive through `via`.
fn merge_phi_inputs(unit: &mut UnitData, target: Block, preds: &[Block], via: Block) {
    for phi in phis(unit, target) {
        let d = unit.inst_data(phi).clone();
        let mut ins: Vec<(Value, Block)> = vec![];
        let mut keep_args = vec![];
        let mut keep_blocks = vec![];
        for (&v, &b) in d.args.iter().zip(&d.blocks) {
            if preds.contains(&b) {
                ins.push((v, b));
            } else {
                keep_args.push(v);
                keep_blocks.push(b);
            }
        }
        if ins.is_empty() {
            continue;
        }
        let v = if ins.iter().all(|(v, _)| *v == ins[0].0) {
            ins[0].0
        } else {
            let (args, blocks): (Vec<Value>, Vec<Block>) = ins.into_iter().unzip();
            let p = unit.create_inst(InstData::new(Opcode::Phi, d.ty.clone(), args).with_blocks(blocks));
            unit.insert_inst_at(via, 0, p);
            unit.inst_result(p).unwrap()
        };
        keep_args.push(v);
        keep_blocks.push(via);
        let dm = unit.inst_data_mut(phi);
        dm.args = keep_args;
        dm.blocks = keep_blocks;
    }
}

fn move_drives(unit: &mut UnitData) -> PassResult {
    let (cfg, dom) = cfg_dom(unit);
    let trs = temporal_regions_of(unit, &cfg);
    let mut changed = false;
    for r in trs.regions() {
        if r.exiting.len() != 1 {
            continue;
        }
        let x = r.exiting[0];
        let mut pos = phis(unit, x).len();
        let dominates_x = |unit: &UnitData, v: Value| match unit.def_inst(v) {
            Some(i) => dom.block_dominates(unit.inst_block(i).unwrap(), x),
            None => true,
        };
        for &b in &r.blocks {
            if b == x {
                continue;
            }
            for inst in unit.insts(b).to_vec() {
                if unit.opcode(inst) != Opcode::Drv {
                    continue;
                }
                let d = dom.common_block_dominator(b, x).unwrap();
                let chain = condition_chain(unit, &cfg, &trs, d, b)
                    .map_err(|m| Reject::at(inst, m))?;
                let mut operands: Vec<Value> = unit.inst_data(inst).args.clone();
                for a in chain.atoms() {
                    match a {
                        crate::analysis::Atom::Value(v) => operands.push(v),
                        crate::analysis::Atom::Eq(p, q) => operands.extend([p, q]),
                    }
                }
                if !operands.iter().all(|&v| dominates_x(unit, v)) {
                    return Err(Reject::at(
                        inst,
                        "drive operand does not dominate the exit of its temporal region",
                    ));
                }
                let cond = match (chain, unit.inst_data(inst).drv_cond()) {
                    (BoolExpr::Const(true), c) => c.map(BoolExpr::atom),
                    (ch, None) => Some(ch),
                    (ch, Some(c)) => Some(BoolExpr::and(vec![ch, BoolExpr::atom(c)])),
                };
                let mut at = InsertPoint { block: x, pos };
                let cv = match &cond {
                    Some(BoolExpr::Const(false)) => {
                        unit.remove_inst(inst);
                        changed = true;
                        continue;
                    }
                    Some(BoolExpr::Const(true)) | None => None,
                    Some(e) => Some(emit_expr(unit, &mut at, e)),
                };
                let dd = unit.inst_data_mut(inst);
                dd.args.truncate(3);
                dd.args.extend(cv);
                unit.remove_inst(inst);
                unit.insert_inst_at(x, at.pos, inst);
                pos = at.pos + 1;
                changed = true;
            }
        }
    }
    Ok(changed)
}

/// Merge drives of the same signal with the same delay within one block:
/// `drv s, a, t if p` followed by `drv s, b, t if q` becomes
/// `drv s, mux [a, b], q, t if p | q`.
fn coalesce_drives(unit: &mut UnitData) -> bool {
    let mut changed = false;
    for b in unit.blocks().collect::<Vec<_>>() {
        let mut last: HashMap<Value, Inst> = HashMap::new();
        for inst in unit.insts(b).to_vec() {
            if unit.opcode(inst) != Opcode::Drv {
                continue;
            }
            let d2 = unit.inst_data(inst).clone();
            let root = root_signal(unit, d2.args[0]);
            let prev = last.insert(root, inst);
            let prev = match prev {
                Some(p) => p,
                None => continue,
            };
            let d1 = unit.inst_data(prev).clone();
            if d1.args[0] != d2.args[0] || d1.args[2] != d2.args[2] {
                continue;
            }
            let mut pos = unit.inst_position(inst).unwrap();
            let mut add = |unit: &mut UnitData, data: InstData| {
                let i = unit.create_inst(data);
                unit.insert_inst_at(b, pos, i);
                pos += 1;
                unit.inst_result(i).unwrap()
            };
            match d2.drv_cond() {
                None => {}
                Some(c2) => {
                    let ty = unit.value_type(d2.args[1]).clone();
                    let m = add(unit, InstData::new(Opcode::Mux, ty, vec![d1.args[1], d2.args[1], c2]));
                    let cond = d1
                        .drv_cond()
                        .map(|c1| add(unit, InstData::new(Opcode::Or, Type::Int(1), vec![c1, c2])));
                    let dd = unit.inst_data_mut(inst);
                    dd.args = vec![d2.args[0], m, d2.args[2]];
                    dd.args.extend(cond);
                }
            }
            unit.remove_inst(prev);
            changed = true;
        }
    }
    changed
}
