//! Early code motion: hoist pure instructions and probes as far up the
//! dominator tree as their operands allow.

use super::util::*;
use crate::analysis::{temporal_regions_of, Cfg, DomTree};
use crate::ir::{Block, Opcode, UnitData};

fn deeper(dom: &DomTree, a: Block, b: Block) -> Block {
    if dom.block_dominates(a, b) {
        b
    } else {
        a
    }
}

/// Move each pure instruction to the deepest block defining one of its
/// operands, and each `prb` likewise but never above the head of its
/// temporal region. Constants end up in the entry block.
pub fn early_code_motion(unit: &mut UnitData) -> bool {
    if !unit.is_process() || unit.entry().is_none() {
        return false;
    }
    let (cfg, dom): (Cfg, DomTree) = cfg_dom(unit);
    let trs = temporal_regions_of(unit, &cfg);
    let entry = cfg.entry;
    let mut changed = false;
    for b in cfg.rpo() {
        for inst in unit.insts(b).to_vec() {
            let op = unit.opcode(inst);
            if !(op.is_pure() || op == Opcode::Prb) {
                continue;
            }
            let mut target = entry;
            for &a in &unit.inst_data(inst).args {
                if let Some(d) = unit.def_inst(a) {
                    let db = unit.inst_block(d).unwrap();
                    if dom.is_reachable(db.index()) {
                        target = deeper(&dom, target, db);
                    }
                }
            }
            if op == Opcode::Prb {
                let head = trs.region(trs.tr_of(b).unwrap()).head;
                target = deeper(&dom, target, head);
            }
            if target == b {
                continue;
            }
            unit.remove_inst(inst);
            unit.insert_before_terminator(target, inst);
            changed = true;
        }
    }
    changed
}
