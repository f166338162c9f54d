//! Promotion of memory slots to SSA values.

use super::util::*;
use crate::analysis::DomTree;
use crate::ir::{Block, Inst, InstData, Opcode, Type, UnitData, Value};
use std::collections::{HashMap, HashSet};

/// Slots whose pointer is only used as the address of `ld`, `st`, and `free`.
fn promotable_slots(unit: &UnitData) -> Vec<Inst> {
    let users = unit.user_map();
    unit.all_insts()
        .filter(|&i| matches!(unit.opcode(i), Opcode::Var | Opcode::Alloc))
        .filter(|&i| {
            let p = unit.inst_result(i).unwrap();
            users.get(&p).map_or(true, |us| {
                us.iter().all(|&u| {
                    let d = unit.inst_data(u);
                    match d.opcode {
                        Opcode::Ld | Opcode::Free => true,
                        Opcode::St => d.args[0] == p && d.args[1] != p,
                        _ => false,
                    }
                })
            })
        })
        .collect()
}

fn dominance_frontiers(unit: &UnitData, dom: &DomTree, blocks: &[Block], preds: &HashMap<Block, Vec<Block>>) -> HashMap<Block, HashSet<Block>> {
    let mut df: HashMap<Block, HashSet<Block>> = HashMap::new();
    for &b in blocks {
        let ps: Vec<Block> = preds[&b].iter().copied().filter(|&p| dom.is_reachable(p.index())).collect();
        if ps.len() < 2 {
            continue;
        }
        let idom = dom.block_idom(b);
        for p in ps {
            let mut runner = p;
            loop {
                if Some(runner) == idom && runner != b {
                    break;
                }
                df.entry(runner).or_default().insert(b);
                match dom.block_idom(runner) {
                    Some(n) if n != runner => runner = n,
                    _ => break,
                }
                if Some(runner) == idom {
                    break;
                }
            }
        }
    }
    let _ = unit;
    df
}

/// Replace `var`/`alloc` slots that never escape by SSA values, inserting
/// phis where stores from different paths meet.
pub fn mem2reg(unit: &mut UnitData) -> bool {
    if unit.is_entity() || unit.entry().is_none() {
        return false;
    }
    remove_unreachable_blocks(unit);
    let slots = promotable_slots(unit);
    if slots.is_empty() {
        return false;
    }
    // Phi placement, splitting wait edges into blocks that need phis.
    let placement = loop {
        let (cfg, dom) = cfg_dom(unit);
        let rpo = cfg.rpo();
        let preds = unit.predecessors();
        let df = dominance_frontiers(unit, &dom, &rpo, &preds);
        let mut placement: HashMap<Inst, HashSet<Block>> = HashMap::new();
        for &s in &slots {
            let p = unit.inst_result(s).unwrap();
            let home = unit.inst_block(s).unwrap();
            if !dom.is_reachable(home.index()) {
                continue;
            }
            let mut defs: Vec<Block> = vec![home];
            for u in unit.users(p) {
                if unit.opcode(u) == Opcode::St {
                    defs.push(unit.inst_block(u).unwrap());
                }
            }
            let mut placed = HashSet::new();
            let mut work = defs;
            while let Some(b) = work.pop() {
                for &f in df.get(&b).into_iter().flatten() {
                    if f != home && dom.block_dominates(home, f) && placed.insert(f) {
                        work.push(f);
                    }
                }
            }
            placement.insert(s, placed);
        }
        let mut split = false;
        let needed: HashSet<Block> = placement.values().flatten().copied().collect();
        for &b in &needed {
            for &p in &preds[&b] {
                let t = unit.terminator(p).unwrap();
                if unit.opcode(t) == Opcode::Wait && unit.inst_data(t).blocks[0] == b {
                    let nb = unit.add_block_after(p, None);
                    let br = unit.create_inst(
                        InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![b]),
                    );
                    unit.append_inst(nb, br);
                    unit.inst_data_mut(t).blocks[0] = nb;
                    split = true;
                }
            }
        }
        if !split {
            break placement;
        }
    };

    let (cfg, dom) = cfg_dom(unit);
    let mut phi_of: HashMap<(Block, Inst), Inst> = HashMap::new();
    for (&s, blocks) in &placement {
        let ty = unit.inst_data(s).ty.clone();
        let mut sorted: Vec<Block> = blocks.iter().copied().collect();
        sorted.sort();
        for b in sorted {
            let phi = unit.create_inst(InstData::new(Opcode::Phi, ty.clone(), vec![]));
            unit.insert_inst_at(b, 0, phi);
            phi_of.insert((b, s), phi);
        }
    }
    let slot_of_ptr: HashMap<Value, Inst> = slots
        .iter()
        .filter(|s| placement.contains_key(s))
        .map(|&s| (unit.inst_result(s).unwrap(), s))
        .collect();

    // Rename along the dominator tree.
    let children = dom.children();
    let mut current: HashMap<Inst, Vec<Value>> = HashMap::new();
    let mut replace: HashMap<Value, Value> = HashMap::new();
    let mut dead: Vec<Inst> = vec![];
    enum Step {
        Enter(Block),
        Leave(Vec<Inst>),
    }
    let mut stack = vec![Step::Enter(cfg.entry)];
    let resolve = |replace: &HashMap<Value, Value>, mut v: Value| {
        while let Some(&n) = replace.get(&v) {
            v = n;
        }
        v
    };
    while let Some(step) = stack.pop() {
        let b = match step {
            Step::Enter(b) => b,
            Step::Leave(pushed) => {
                for s in pushed {
                    current.get_mut(&s).unwrap().pop();
                }
                continue;
            }
        };
        let mut pushed = vec![];
        for inst in unit.insts(b).to_vec() {
            let d = unit.inst_data(inst);
            match d.opcode {
                Opcode::Phi => {
                    if let Some((_, s)) = phi_of.iter().find(|(k, &p)| k.0 == b && p == inst).map(|(k, _)| *k) {
                        current.entry(s).or_default().push(unit.inst_result(inst).unwrap());
                        pushed.push(s);
                    }
                }
                Opcode::Var | Opcode::Alloc if slot_of_ptr.values().any(|&s| s == inst) => {
                    let v = resolve(&replace, d.args[0]);
                    current.entry(inst).or_default().push(v);
                    pushed.push(inst);
                    dead.push(inst);
                }
                Opcode::St => {
                    if let Some(&s) = slot_of_ptr.get(&d.args[0]) {
                        let v = resolve(&replace, d.args[1]);
                        current.entry(s).or_default().push(v);
                        pushed.push(s);
                        dead.push(inst);
                    }
                }
                Opcode::Ld => {
                    if let Some(&s) = slot_of_ptr.get(&d.args[0]) {
                        let v = *current[&s].last().expect("load dominated by its slot");
                        replace.insert(unit.inst_result(inst).unwrap(), v);
                        dead.push(inst);
                    }
                }
                Opcode::Free => {
                    if slot_of_ptr.contains_key(&d.args[0]) {
                        dead.push(inst);
                    }
                }
                _ => {}
            }
        }
        for &succ in cfg.succs(b) {
            for (&(pb, s), &phi) in &phi_of {
                if pb != succ {
                    continue;
                }
                let v = match current.get(&s).and_then(|c| c.last()) {
                    Some(&v) => v,
                    None => continue,
                };
                let d = unit.inst_data_mut(phi);
                d.args.push(v);
                d.blocks.push(b);
            }
        }
        stack.push(Step::Leave(pushed));
        for &c in children[b.index()].iter().rev() {
            stack.push(Step::Enter(Block::from_index(c)));
        }
    }
    for inst in dead {
        unit.remove_inst(inst);
    }
    for inst in unit.all_insts().collect::<Vec<_>>() {
        let d = unit.inst_data_mut(inst);
        for a in &mut d.args {
            while let Some(&n) = replace.get(a) {
                *a = n;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::basic::dce;
    use crate::textio::{parse_module, print_unit};

    #[test]
    fn straight_line() {
        let m = parse_module(
            "func @f () i32 {\n%e:\n %z = const i32 0\n %five = const i32 5\n %p = var i32 %z\n st i32* %p, %five\n %v = ld i32* %p\n ret i32 %v\n}",
        )
        .unwrap();
        let mut u = m.units().next().unwrap().1.clone();
        assert!(mem2reg(&mut u));
        dce(&mut u);
        let s = print_unit(&u);
        assert!(s.contains("ret i32 %five"), "{}", s);
    }

    #[test]
    fn loop_counter_gets_phi() {
        let m = parse_module(
            "func @f () i32 {\n%e:\n %z = const i32 0\n %one = const i32 1\n %n = const i32 4\n %p = var i32 %z\n br %h\n%h:\n %i = ld i32* %p\n %c = ult i32 %i, %n\n br %c, %x, %b\n%b:\n %j = add i32 %i, %one\n st i32* %p, %j\n br %h\n%x:\n ret i32 %i\n}",
        )
        .unwrap();
        let mut u = m.units().next().unwrap().1.clone();
        assert!(mem2reg(&mut u));
        let s = print_unit(&u);
        assert!(s.contains("phi i32"), "{}", s);
        assert!(!s.contains(" ld ") && !s.contains(" st ") && !s.contains(" var "), "{}", s);
    }
}
