//! Helpers shared by the passes.

use crate::analysis::{build_cfg, Cfg, DomTree};
use crate::ir::{Block, ConstValue, Extra, Inst, InstData, Opcode, Type, UnitData, Val, Value};
use std::collections::{HashMap, HashSet};

/// Why a pass refused to transform a unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reject {
    pub inst: Option<Inst>,
    pub message: String,
}

impl Reject {
    pub fn new(message: impl Into<String>) -> Reject {
        Reject {
            inst: None,
            message: message.into(),
        }
    }

    pub fn at(inst: Inst, message: impl Into<String>) -> Reject {
        Reject {
            inst: Some(inst),
            message: message.into(),
        }
    }
}

pub type PassResult = Result<bool, Reject>;

pub fn cfg_dom(unit: &UnitData) -> (Cfg, DomTree) {
    let cfg = build_cfg(unit).expect("control-flow unit");
    let dom = DomTree::from_cfg(&cfg);
    (cfg, dom)
}

pub fn const_val(unit: &UnitData, v: Value) -> Option<Val> {
    unit.const_of(v).map(|c| Val::from_const(c, unit.value_type(v)))
}

pub fn const_inst(ty: Type, c: ConstValue) -> InstData {
    InstData::new(Opcode::Const, ty, vec![]).with_extra(Extra::Const(c))
}

/// Insert a constant at the start of the entry block and return its value.
pub fn insert_const(unit: &mut UnitData, ty: Type, c: ConstValue) -> Value {
    let entry = unit.entry().expect("unit has blocks");
    let i = unit.create_inst(const_inst(ty, c));
    unit.insert_after_phis(entry, i);
    unit.inst_result(i).unwrap()
}

pub fn bool_const(unit: &mut UnitData, b: bool) -> Value {
    insert_const(unit, Type::Int(1), ConstValue::Int((b as u32).into()))
}

/// Follow signal projections back to the signal they are derived from.
pub fn root_signal(unit: &UnitData, mut v: Value) -> Value {
    while let Some(i) = unit.def_inst(v) {
        let d = unit.inst_data(i);
        match d.opcode {
            Opcode::ExtField | Opcode::ExtSlice | Opcode::Shl | Opcode::Shr
                if unit.value_type(d.args[0]).is_signal() =>
            {
                v = d.args[0]
            }
            _ => return v,
        }
    }
    v
}

/// Remove `pred` from the incoming lists of the phis in `block`.
pub fn remove_phi_incoming(unit: &mut UnitData, block: Block, pred: Block) {
    for inst in unit.insts(block).to_vec() {
        if unit.opcode(inst) != Opcode::Phi {
            break;
        }
        let d = unit.inst_data_mut(inst);
        let mut k = 0;
        while k < d.blocks.len() {
            if d.blocks[k] == pred {
                d.blocks.remove(k);
                d.args.remove(k);
            } else {
                k += 1;
            }
        }
    }
}

/// Rename incoming block `old` to `new` in the phis of `block`.
pub fn rename_phi_incoming(unit: &mut UnitData, block: Block, old: Block, new: Block) {
    for inst in unit.insts(block).to_vec() {
        if unit.opcode(inst) != Opcode::Phi {
            break;
        }
        for b in &mut unit.inst_data_mut(inst).blocks {
            if *b == old {
                *b = new;
            }
        }
    }
}

pub fn phis(unit: &UnitData, block: Block) -> Vec<Inst> {
    unit.insts(block)
        .iter()
        .copied()
        .take_while(|&i| unit.opcode(i) == Opcode::Phi)
        .collect()
}

/// Delete blocks not reachable from the entry and drop their phi inputs.
pub fn remove_unreachable_blocks(unit: &mut UnitData) -> bool {
    if unit.is_entity() || unit.entry().is_none() {
        return false;
    }
    let cfg = build_cfg(unit).unwrap();
    let live: HashSet<Block> = cfg.rpo().into_iter().collect();
    let dead: Vec<Block> = unit.blocks().filter(|b| !live.contains(b)).collect();
    for &b in &dead {
        for s in unit.successors(b) {
            if live.contains(&s) {
                remove_phi_incoming(unit, s, b);
            }
        }
    }
    for &b in &dead {
        unit.remove_block(b);
    }
    !dead.is_empty()
}

/// Copy instructions of `blocks` from `src` into `dst`.
///
/// Blocks already present in `bmap` receive the copied instructions at their
/// end; the others get fresh blocks. Operands are translated through `vmap`
/// and `bmap` once everything is copied, so forward references and phis on
/// back edges work. Values missing from `vmap` are kept as they are, which
/// is only meaningful when `src` and `dst` share value numbering.
pub fn copy_blocks(
    src: &UnitData,
    dst: &mut UnitData,
    blocks: &[Block],
    vmap: &mut HashMap<Value, Value>,
    bmap: &mut HashMap<Block, Block>,
) -> Vec<Inst> {
    for &b in blocks {
        if !bmap.contains_key(&b) {
            let nb = dst.add_block(src.block_name(b).map(String::from));
            bmap.insert(b, nb);
        }
    }
    let mut created = vec![];
    for &b in blocks {
        let nb = bmap[&b];
        for &inst in src.insts(b) {
            let ni = dst.create_inst(src.inst_data(inst).clone());
            dst.append_inst(nb, ni);
            if let (Some(r), Some(nr)) = (src.inst_result(inst), dst.inst_result(ni)) {
                if let Some(n) = src.value_name(r) {
                    dst.set_value_name(nr, n);
                }
                vmap.insert(r, nr);
            }
            created.push(ni);
        }
    }
    for &ni in &created {
        let d = dst.inst_data_mut(ni);
        for a in &mut d.args {
            if let Some(&n) = vmap.get(a) {
                *a = n;
            }
        }
        for b in &mut d.blocks {
            if let Some(&n) = bmap.get(b) {
                *b = n;
            }
        }
    }
    created
}

/// A block name not yet used in `unit`, of the form `base.N`.
pub fn fresh_block_name(unit: &UnitData, base: &str) -> String {
    let taken: HashSet<&str> = unit.blocks().filter_map(|b| unit.block_name(b)).collect();
    (0..)
        .map(|n| format!("{}.{}", base, n))
        .find(|n| !taken.contains(n.as_str()))
        .unwrap()
}

/// Instructions computing `v`, transitively through operands, restricted to
/// the given predicate. Returns `None` if a dependency fails the predicate.
pub fn value_slice(
    unit: &UnitData,
    roots: &[Value],
    ok: &dyn Fn(Inst) -> bool,
) -> Option<HashSet<Inst>> {
    let mut seen = HashSet::new();
    let mut stack: Vec<Value> = roots.to_vec();
    while let Some(v) = stack.pop() {
        if let Some(i) = unit.def_inst(v) {
            if !seen.insert(i) {
                continue;
            }
            if !ok(i) {
                return None;
            }
            if unit.opcode(i) != Opcode::Prb {
                stack.extend(unit.inst_data(i).args.iter().copied());
            }
        }
    }
    Some(seen)
}
