//! Inlining of function calls and of child entities.

use super::util::*;
use crate::ir::{
    Block, Inst, InstData, Module, Opcode, Type, UnitData, UnitId, UnitKind, UnitName, Value,
};
use std::collections::{HashMap, HashSet};

/// Upper bound on call sites expanded in one unit.
const MAX_INLINED_CALLS: usize = 10_000;

/// Whether `from` can reach a call of `target` through defined functions.
fn calls_reach(module: &Module, from: &UnitName, target: &UnitName) -> bool {
    let mut seen = HashSet::new();
    let mut stack = vec![from.clone()];
    while let Some(n) = stack.pop() {
        if !seen.insert(n.clone()) {
            continue;
        }
        let id = match module.lookup(&n) {
            Some(id) => id,
            None => continue,
        };
        for inst in module.unit(id).all_insts() {
            let d = module.unit(id).inst_data(inst);
            if d.opcode == Opcode::Call {
                let c = d.callee().unwrap();
                if c == target {
                    return true;
                }
                stack.push(c.clone());
            }
        }
    }
    false
}

/// Replace calls of defined functions in a function or process by the
/// callee bodies.
pub fn inline_calls(module: &Module, unit: &mut UnitData) -> PassResult {
    if unit.is_entity() {
        return Ok(false);
    }
    let mut changed = false;
    let mut count = 0;
    loop {
        let call = unit.all_insts().find(|&i| {
            let d = unit.inst_data(i);
            d.opcode == Opcode::Call && !d.callee().unwrap().is_intrinsic()
        });
        let call = match call {
            Some(c) => c,
            None => break,
        };
        let name = unit.inst_data(call).callee().unwrap().clone();
        let id = match module.lookup(&name) {
            Some(id) => id,
            None => {
                return Err(Reject::at(
                    call,
                    format!("call to {} cannot be inlined: it has no definition", name),
                ))
            }
        };
        if name == unit.name || calls_reach(module, &name, &name) {
            return Err(Reject::at(call, "recursion not synthesizable"));
        }
        count += 1;
        if count > MAX_INLINED_CALLS {
            return Err(Reject::at(call, "too many calls to inline"));
        }
        inline_one(unit, call, module.unit(id));
        changed = true;
    }
    Ok(changed)
}

fn inline_one(unit: &mut UnitData, call: Inst, callee: &UnitData) {
    let b = unit.inst_block(call).unwrap();
    let pos = unit.inst_position(call).unwrap();
    let cont = unit.add_block_after(b, None);
    for inst in unit.insts(b)[pos + 1..].to_vec() {
        unit.remove_inst(inst);
        unit.append_inst(cont, inst);
    }
    for s in unit.successors(cont) {
        rename_phi_incoming(unit, s, b, cont);
    }
    let d = unit.inst_data(call).clone();
    let mut vmap: HashMap<Value, Value> = callee.args().zip(d.args.iter().copied()).collect();
    let mut bmap = HashMap::new();
    let blocks: Vec<Block> = callee.blocks().collect();
    copy_blocks(callee, unit, &blocks, &mut vmap, &mut bmap);
    let entry = bmap[&blocks[0]];
    // Keep the callee body between the call site and its continuation.
    let mut after = b;
    for cb in &blocks {
        let nb = bmap[cb];
        let at = unit.blocks().position(|x| x == after).unwrap();
        unit.move_block(nb, at + 1);
        after = nb;
    }
    let result = unit.inst_result(call);
    unit.remove_inst(call);
    let br = unit.create_inst(InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![entry]));
    unit.append_inst(b, br);
    let mut rets = vec![];
    for cb in &blocks {
        let nb = bmap[cb];
        if let Some(t) = unit.terminator(nb) {
            if unit.opcode(t) == Opcode::Ret {
                if let Some(&v) = unit.inst_data(t).args.first() {
                    rets.push((v, nb));
                }
                *unit.inst_data_mut(t) =
                    InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![cont]);
            }
        }
    }
    if let Some(r) = result {
        let v = if rets.len() == 1 {
            rets[0].0
        } else {
            let (args, blocks): (Vec<Value>, Vec<Block>) = rets.into_iter().unzip();
            let phi = unit.create_inst(
                InstData::new(Opcode::Phi, unit.value_type(r).clone(), args).with_blocks(blocks),
            );
            unit.insert_inst_at(cont, 0, phi);
            unit.inst_result(phi).unwrap()
        };
        unit.replace_uses(r, v);
    }
}

/// Merge child entities listed in `candidates` into the entities that
/// instantiate them, when the child is instantiated exactly once and no
/// signal would end up with drivers from both the parent and the child.
/// Children with no remaining instantiation are removed from the module.
pub fn inline_entities(module: &mut Module, candidates: &HashSet<UnitName>) -> bool {
    let mut changed = false;
    loop {
        let mut uses: HashMap<UnitName, Vec<(UnitId, Inst)>> = HashMap::new();
        for (id, u) in module.units() {
            for i in u.all_insts() {
                let d = u.inst_data(i);
                if d.opcode == Opcode::Inst {
                    uses.entry(d.callee().unwrap().clone()).or_default().push((id, i));
                }
            }
        }
        let mut did = false;
        for (name, sites) in &uses {
            if !candidates.contains(name) || sites.len() != 1 {
                continue;
            }
            let (pid, site) = sites[0];
            let cid = match module.lookup(name) {
                Some(c) => c,
                None => continue,
            };
            if cid == pid
                || module.unit(cid).kind != UnitKind::Entity
                || module.unit(pid).kind != UnitKind::Entity
            {
                continue;
            }
            let child = module.unit(cid).clone();
            if !driver_sets_disjoint(module.unit(pid), site, &child) {
                continue;
            }
            let parent = module.unit_mut(pid);
            let ports = parent.inst_data(site).args.clone();
            parent.remove_inst(site);
            let mut vmap: HashMap<Value, Value> = child.args().zip(ports).collect();
            let mut bmap = HashMap::from([(child.body(), parent.body())]);
            copy_blocks(&child, parent, &[child.body()], &mut vmap, &mut bmap);
            module.remove_unit(cid);
            did = true;
            break;
        }
        if !did {
            break;
        }
        changed = true;
    }
    changed
}

/// Root signals driven by `drv`/`reg` in an entity, in terms of the
/// entity's own values.
fn driven_roots(unit: &UnitData) -> Vec<Value> {
    unit.all_insts()
        .filter(|&i| matches!(unit.opcode(i), Opcode::Drv | Opcode::Reg))
        .map(|i| root_signal(unit, unit.inst_data(i).args[0]))
        .collect()
}

fn driver_sets_disjoint(parent: &UnitData, site: Inst, child: &UnitData) -> bool {
    let ports = &parent.inst_data(site).args;
    let mut from_child = HashSet::new();
    for r in driven_roots(child) {
        match child.args().position(|a| a == r) {
            Some(k) => {
                from_child.insert(root_signal(parent, ports[k]));
            }
            None => {}
        }
    }
    // Other instances and the parent itself might drive the same signals;
    // ports of other instances are treated as possibly driven.
    let mut others = HashSet::new();
    for r in driven_roots(parent) {
        others.insert(r);
    }
    for i in parent.all_insts() {
        let d = parent.inst_data(i);
        if i != site && d.opcode == Opcode::Inst {
            let (_, outs) = d.inst_ports();
            for &o in outs {
                others.insert(root_signal(parent, o));
            }
        }
    }
    from_child.is_disjoint(&others)
}
