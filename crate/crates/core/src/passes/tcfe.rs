//! Total control-flow elimination: collapse every temporal region of a
//! process into its head block, turning phis into multiplexers.

use super::util::*;
use crate::analysis::{build_cfg, condition_chain, emit_expr, temporal_regions_of, BoolExpr, InsertPoint};
use crate::ir::{Block, InstData, Opcode, UnitData};
use std::collections::HashSet;

pub fn total_control_flow_elimination(unit: &mut UnitData) -> PassResult {
    if !unit.is_process() || unit.entry().is_none() {
        return Ok(false);
    }
    let cfg = build_cfg(unit).unwrap();
    let trs = temporal_regions_of(unit, &cfg);
    let mut changed = false;
    for r in trs.regions() {
        if r.blocks.len() == 1 {
            continue;
        }
        let head = r.head;
        let x = match r.exiting[..] {
            [x] => x,
            _ => {
                return Err(Reject::at(
                    unit.terminator(head).unwrap(),
                    "temporal region has more than one exiting block",
                ))
            }
        };
        for &b in &r.blocks {
            if b == x {
                continue;
            }
            for &inst in unit.insts(b) {
                let op = unit.opcode(inst);
                if !(op.is_pure() || op.is_terminator() || matches!(op, Opcode::Prb | Opcode::Phi)) {
                    return Err(Reject::at(inst, "side effect outside the exit of a temporal region"));
                }
            }
        }
        let members: HashSet<Block> = r.blocks.iter().copied().collect();
        if cfg.preds(head).iter().any(|p| members.contains(p) && unit.opcode(unit.terminator(*p).unwrap()) != Opcode::Wait) {
            return Err(Reject::at(unit.terminator(head).unwrap(), "loop inside a temporal region"));
        }
        for &b in &r.blocks[1..] {
            let at_end = |unit: &UnitData| InsertPoint {
                block: head,
                pos: unit.insts(head).len() - 1,
            };
            for phi in phis(unit, b) {
                let d = unit.inst_data(phi).clone();
                let mut value = *d.args.last().unwrap();
                for k in (0..d.args.len() - 1).rev() {
                    let p = d.blocks[k];
                    let chain = condition_chain(unit, &cfg, &trs, head, p)
                        .map_err(|m| Reject::at(phi, m))?;
                    let edge = edge_condition(unit, p, b);
                    let cond = BoolExpr::and(vec![chain, edge]).simplify();
                    let mut at = at_end(unit);
                    let c = emit_expr(unit, &mut at, &cond);
                    let m = unit.create_inst(InstData::new(
                        Opcode::Mux,
                        d.ty.clone(),
                        vec![value, d.args[k], c],
                    ));
                    unit.insert_inst_at(head, at.pos, m);
                    value = unit.inst_result(m).unwrap();
                }
                let r = unit.inst_result(phi).unwrap();
                unit.replace_uses(r, value);
                unit.remove_inst(phi);
            }
            if b != x {
                let mut body = unit.insts(b).to_vec();
                body.pop();
                for inst in body {
                    unit.remove_inst(inst);
                    unit.insert_before_terminator(head, inst);
                }
            }
        }
        // The exit block's contents and terminator move into the head.
        let old = unit.terminator(head).unwrap();
        unit.remove_inst(old);
        for inst in unit.insts(x).to_vec() {
            unit.remove_inst(inst);
            unit.append_inst(head, inst);
        }
        for &b in &r.blocks[1..] {
            unit.remove_block(b);
        }
        for other in unit.blocks().collect::<Vec<_>>() {
            if !members.contains(&other) {
                rename_phi_incoming(unit, other, x, head);
            }
        }
        changed = true;
    }
    if changed {
        // Later regions may reference phi inputs from collapsed blocks.
        remove_unreachable_blocks(unit);
    }
    Ok(changed)
}

fn edge_condition(unit: &UnitData, from: Block, to: Block) -> BoolExpr {
    let t = unit.terminator(from).unwrap();
    let d = unit.inst_data(t);
    if d.opcode == Opcode::BrCond && d.blocks[0] != d.blocks[1] {
        let c = BoolExpr::atom(d.args[0]);
        if d.blocks[1] == to {
            c
        } else {
            BoolExpr::not(c)
        }
    } else {
        BoolExpr::Const(true)
    }
}
