//! Desequentialization: recognize edge- and level-triggered storage in a
//! two-region process and rebuild it as an entity with `reg` instructions.
//!
//! The process must have the shape
//!
//! ```text
//! %b0: ...probes of past values...; wait %b1, <signals>
//! %b1: ...; drv ... if <cond>; br %b0
//! ```
//!
//! Each drive condition is brought into disjunctive normal form. In every
//! term, a past probe `p` of a signal paired with a present probe `q` of the
//! same signal as `!p & q` is a rising edge and `p & !q` a falling edge. The
//! remaining literals form the gate. Terms without a past literal are level
//! triggers.

use super::pl::{probed_roots, wait_set};
use super::util::*;
use crate::analysis::{emit_expr, expr_of_value, to_dnf, Atom, BoolExpr, InsertPoint, Literal};
use crate::ir::{Inst, InstData, Opcode, RegMode, RegTriggerRef, UnitData, UnitKind, Value};
use std::collections::{HashMap, HashSet};

struct Trigger {
    mode: RegMode,
    /// Present probe for edges; `None` for level triggers.
    edge: Option<Value>,
    gate: Vec<Literal>,
}

pub fn desequentialize(process: &UnitData) -> Result<UnitData, Reject> {
    let mut unit = process.clone();
    let blocks: Vec<_> = unit.blocks().collect();
    if blocks.len() != 2 {
        return Err(Reject::new("process does not have exactly two blocks"));
    }
    let (b0, b1) = (unit.entry().unwrap(), *blocks.iter().find(|&&b| Some(b) != unit.entry()).unwrap());
    let wait = unit.terminator(b0).unwrap();
    let wd = unit.inst_data(wait);
    if wd.opcode != Opcode::Wait || wd.blocks[0] != b1 || wd.wait_time().is_some() {
        return Err(Reject::at(wait, "first block must wait without timeout for the second"));
    }
    let back = unit.terminator(b1).unwrap();
    let bd = unit.inst_data(back);
    if bd.opcode != Opcode::Br || bd.blocks[0] != b0 {
        return Err(Reject::at(back, "second block must branch back to the first"));
    }
    let w = wait_set(&unit, wait)?;
    for &b in &[b0, b1] {
        for &i in unit.insts(b) {
            let op = unit.opcode(i);
            if op.is_terminator() || op.is_pure() || op == Opcode::Prb {
                continue;
            }
            if op == Opcode::Drv && b == b1 {
                continue;
            }
            let msg = match op {
                Opcode::Drv => "drive before the first wait",
                Opcode::Phi => "process carries state across waits",
                Opcode::Call => "call in a process cannot be lowered to an entity",
                _ => "instruction cannot be lowered to an entity",
            };
            return Err(Reject::at(i, msg));
        }
    }

    // Values that depend on probes taken before the wait.
    let mut past_prb: HashMap<Value, Value> = HashMap::new();
    let mut present_prb: HashMap<Value, Value> = HashMap::new();
    let mut tainted: HashSet<Value> = HashSet::new();
    for &b in &[b0, b1] {
        for &i in unit.insts(b) {
            let d = unit.inst_data(i);
            let r = match unit.inst_result(i) {
                Some(r) => r,
                None => continue,
            };
            if d.opcode == Opcode::Prb {
                let sig = d.args[0];
                if b == b0 {
                    past_prb.insert(r, sig);
                    tainted.insert(r);
                } else {
                    present_prb.insert(r, sig);
                }
            } else if d.args.iter().any(|a| tainted.contains(a)) {
                tainted.insert(r);
            }
        }
    }

    let drives: Vec<Inst> = unit
        .insts(b1)
        .iter()
        .copied()
        .filter(|&i| unit.opcode(i) == Opcode::Drv)
        .collect();
    let mut seen_targets = HashSet::new();
    let mut plan: Vec<(Inst, Vec<Trigger>)> = vec![];
    let mut any_level = false;
    for &drv in &drives {
        let d = unit.inst_data(drv).clone();
        if !seen_targets.insert(d.args[0]) {
            return Err(Reject::at(drv, "signal is driven with different delays"));
        }
        if tainted.contains(&d.args[1]) || tainted.contains(&d.args[2]) {
            return Err(Reject::at(drv, "drive value depends on the past"));
        }
        let dnf = match d.drv_cond() {
            Some(c) => to_dnf(&expr_of_value(&unit, c)),
            None => to_dnf(&BoolExpr::Const(true)),
        };
        let mut triggers: Vec<Trigger> = vec![];
        for term in &dnf.terms {
            let mut past = vec![];
            let mut present = vec![];
            for &l in term {
                match l.atom {
                    Atom::Value(v) if past_prb.contains_key(&v) => past.push(l),
                    Atom::Value(v) if tainted.contains(&v) => {
                        return Err(Reject::at(drv, "drive condition depends on the past without an edge"))
                    }
                    Atom::Eq(a, b) if tainted.contains(&a) || tainted.contains(&b) => {
                        return Err(Reject::at(drv, "drive condition depends on the past without an edge"))
                    }
                    _ => present.push(l),
                }
            }
            let t = match past[..] {
                [] => {
                    any_level = true;
                    Trigger { mode: RegMode::High, edge: None, gate: present }
                }
                [p] => {
                    let sig = match p.atom {
                        Atom::Value(v) => past_prb[&v],
                        _ => unreachable!(),
                    };
                    let k = present.iter().position(|q| match q.atom {
                        Atom::Value(v) => present_prb.get(&v) == Some(&sig) && q.positive != p.positive,
                        _ => false,
                    });
                    let k = k.ok_or_else(|| Reject::at(drv, "past value used without a matching edge"))?;
                    let q = present.remove(k);
                    if !w.contains(&root_signal(&unit, sig)) {
                        return Err(Reject::at(drv, "edge on a signal the process does not wait on"));
                    }
                    let edge = match q.atom {
                        Atom::Value(v) => v,
                        _ => unreachable!(),
                    };
                    let mode = if q.positive { RegMode::Rise } else { RegMode::Fall };
                    Trigger { mode, edge: Some(edge), gate: present }
                }
                _ => return Err(Reject::at(drv, "more than one edge in a drive condition term")),
            };
            let twin = triggers.iter_mut().find(|o| {
                o.edge.is_some() && o.edge == t.edge && o.gate == t.gate && o.mode != t.mode
            });
            match twin {
                Some(o) if t.mode.is_edge() => o.mode = RegMode::Both,
                _ => triggers.push(t),
            }
        }
        plan.push((drv, triggers));
    }
    if any_level {
        let p = probed_roots(&unit, unit.insts(b1).iter().copied());
        if p != w {
            return Err(Reject::new(
                "level-sensitive drive requires the process to wait on exactly the signals it probes",
            ));
        }
    }

    // Materialize triggers and gates in the second block, then copy the
    // untainted data flow into a fresh entity.
    let mut regs = vec![];
    for (drv, triggers) in plan {
        let d = unit.inst_data(drv).clone();
        let mut refs = vec![];
        for t in triggers {
            let mut at = InsertPoint { block: b1, pos: unit.inst_position(drv).unwrap() };
            let and = |lits: &[Literal]| {
                BoolExpr::and(
                    lits.iter()
                        .map(|l| {
                            let a = BoolExpr::Atom(l.atom);
                            if l.positive {
                                a
                            } else {
                                BoolExpr::not(a)
                            }
                        })
                        .collect(),
                )
            };
            let (trigger, gate) = match t.edge {
                Some(e) => {
                    let g = if t.gate.is_empty() {
                        None
                    } else {
                        Some(emit_expr(&mut unit, &mut at, &and(&t.gate)))
                    };
                    (e, g)
                }
                None => (emit_expr(&mut unit, &mut at, &and(&t.gate)), None),
            };
            refs.push(RegTriggerRef {
                mode: t.mode,
                value: d.args[1],
                trigger,
                delay: Some(d.args[2]),
                gate,
            });
        }
        regs.push((d.ty.clone(), d.args[0], refs));
    }

    let mut ent = UnitData::new(UnitKind::Entity, unit.name.clone(), unit.sig.clone());
    let body = ent.body();
    let mut vmap: HashMap<Value, Value> = HashMap::new();
    for (a, e) in unit.args().zip(ent.args().collect::<Vec<_>>()) {
        if let Some(n) = unit.value_name(a) {
            ent.set_value_name(e, n);
        }
        vmap.insert(a, e);
    }
    for &b in &[b0, b1] {
        for &i in unit.insts(b) {
            let d = unit.inst_data(i);
            let r = unit.inst_result(i);
            if !(d.opcode.is_pure() || d.opcode == Opcode::Prb) || r.map_or(false, |r| tainted.contains(&r)) {
                continue;
            }
            let mut nd = d.clone();
            for a in &mut nd.args {
                *a = vmap[a];
            }
            let ni = ent.create_inst(nd);
            ent.append_inst(body, ni);
            if let (Some(r), Some(nr)) = (r, ent.inst_result(ni)) {
                if let Some(n) = unit.value_name(r) {
                    ent.set_value_name(nr, n);
                }
                vmap.insert(r, nr);
            }
        }
    }
    for (ty, target, refs) in regs {
        if refs.is_empty() {
            continue;
        }
        let refs: Vec<RegTriggerRef> = refs
            .into_iter()
            .map(|t| RegTriggerRef {
                mode: t.mode,
                value: vmap[&t.value],
                trigger: vmap[&t.trigger],
                delay: t.delay.map(|v| vmap[&v]),
                gate: t.gate.map(|v| vmap[&v]),
            })
            .collect();
        let r = ent.create_inst(InstData::reg(ty, vmap[&target], &refs));
        ent.append_inst(body, r);
    }
    Ok(ent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::{parse_module, print_unit};

    fn lower(src: &str) -> Result<String, Reject> {
        let m = parse_module(src).unwrap();
        let r = desequentialize(m.units().next().unwrap().1).map(|e| print_unit(&e));
        r
    }

    #[test]
    fn rising_edge_flop() {
        let s = lower(
            "proc @ff (i1$ %clk, i32$ %d) -> (i32$ %q) {\n%init:\n %t = const time 0s 1e\n %c0 = prb i1$ %clk\n wait %check, %clk\n%check:\n %c1 = prb i1$ %clk\n %chg = neq i1 %c0, %c1\n %pos = and i1 %chg, %c1\n %dp = prb i32$ %d\n drv i32$ %q, %dp, %t if %pos\n br %init\n}",
        )
        .unwrap();
        assert!(s.contains("reg i32$ %q, [%dp, rise %c1 after %t]"), "{}", s);
    }

    #[test]
    fn both_edges_merge() {
        let s = lower(
            "proc @ff (i1$ %clk, i32$ %d) -> (i32$ %q) {\n%init:\n %t = const time 0s 1e\n %c0 = prb i1$ %clk\n wait %check, %clk\n%check:\n %c1 = prb i1$ %clk\n %chg = neq i1 %c0, %c1\n %dp = prb i32$ %d\n drv i32$ %q, %dp, %t if %chg\n br %init\n}",
        )
        .unwrap();
        assert!(s.contains("both %c1"), "{}", s);
    }

    #[test]
    fn past_value_without_edge() {
        let e = lower(
            "proc @ff (i1$ %clk, i1$ %d) -> (i1$ %q) {\n%init:\n %t = const time 0s 1e\n %c0 = prb i1$ %clk\n wait %check, %clk\n%check:\n %dp = prb i1$ %d\n drv i1$ %q, %dp, %t if %c0\n br %init\n}",
        )
        .unwrap_err();
        assert!(e.message.contains("without a matching edge"), "{}", e.message);
    }
}
