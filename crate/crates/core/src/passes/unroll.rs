//! Full unrolling of loops with a constant trip count.

use super::util::*;
use crate::analysis::{Cfg, DomTree};
use crate::ir::{eval_pure, Block, InstData, Opcode, Type, UnitData, Val, Value};
use std::collections::{HashMap, HashSet};

/// Largest number of header executions unrolled for one loop.
pub const MAX_TRIP_COUNT: usize = 256;

struct Loop {
    header: Block,
    latches: Vec<Block>,
    body: HashSet<Block>,
}

fn natural_loops(unit: &UnitData, cfg: &Cfg, dom: &DomTree) -> Result<Vec<Loop>, Reject> {
    let mut loops: HashMap<Block, Loop> = HashMap::new();
    for b in cfg.rpo() {
        for &s in cfg.succs(b) {
            let (rb, rs) = (dom.rpo_number(b.index()), dom.rpo_number(s.index()));
            if rs > rb {
                continue;
            }
            if !dom.block_dominates(s, b) {
                return Err(Reject::at(
                    unit.terminator(b).unwrap(),
                    "irreducible control flow",
                ));
            }
            let l = loops.entry(s).or_insert_with(|| Loop {
                header: s,
                latches: vec![],
                body: HashSet::from([s]),
            });
            l.latches.push(b);
            let mut stack = vec![b];
            while let Some(x) = stack.pop() {
                if l.body.insert(x) {
                    stack.extend(cfg.preds(x).iter().copied());
                }
            }
        }
    }
    let mut out: Vec<Loop> = loops.into_values().collect();
    out.sort_by_key(|l| l.header);
    Ok(out)
}

fn has_wait(unit: &UnitData, body: &HashSet<Block>) -> bool {
    body.iter()
        .any(|&b| unit.terminator(b).map_or(false, |t| unit.opcode(t) == Opcode::Wait))
}

/// Unroll every wait-free loop of a process whose trip count is a
/// compile-time constant. Loops that pass through a `wait` are left alone.
pub fn unroll(unit: &mut UnitData) -> PassResult {
    if !unit.is_process() || unit.entry().is_none() {
        return Ok(false);
    }
    let mut changed = false;
    loop {
        let (cfg, dom) = cfg_dom(unit);
        let loops = natural_loops(unit, &cfg, &dom)?;
        let headers: HashSet<Block> = loops.iter().map(|l| l.header).collect();
        let pick = loops.iter().find(|l| {
            !has_wait(unit, &l.body)
                && l.body.iter().all(|b| *b == l.header || !headers.contains(b))
        });
        let l = match pick {
            Some(l) => l,
            None => break,
        };
        unroll_loop(unit, &cfg, l)?;
        remove_unreachable_blocks(unit);
        changed = true;
    }
    Ok(changed)
}

fn unroll_loop(unit: &mut UnitData, cfg: &Cfg, l: &Loop) -> Result<(), Reject> {
    let header_term = unit.terminator(l.header).unwrap();
    if l.latches.len() != 1 {
        return Err(Reject::at(header_term, "loop has more than one back edge"));
    }
    let latch = l.latches[0];
    let outside_preds: Vec<Block> = cfg
        .preds(l.header)
        .iter()
        .copied()
        .filter(|p| !l.body.contains(p))
        .collect();
    if outside_preds.len() != 1 {
        return Err(Reject::at(header_term, "loop has more than one entry"));
    }
    let preheader = outside_preds[0];
    let mut exiting = vec![];
    for &b in &l.body {
        let t = unit.terminator(b).unwrap();
        if matches!(unit.opcode(t), Opcode::Halt | Opcode::Ret) {
            return Err(Reject::at(t, "loop body leaves the unit"));
        }
        if cfg.succs(b).iter().any(|s| !l.body.contains(s)) {
            exiting.push(b);
        }
    }
    if exiting.len() != 1 || (exiting[0] != l.header && exiting[0] != latch) {
        return Err(Reject::at(header_term, "loop must exit from its header or latch"));
    }
    let exiting = exiting[0];
    let exit_term = unit.terminator(exiting).unwrap();
    let ed = unit.inst_data(exit_term).clone();
    if ed.opcode != Opcode::BrCond {
        return Err(Reject::at(exit_term, "loop must exit through a conditional branch"));
    }
    let exit_on_true = !l.body.contains(&ed.blocks[1]);
    let (exit_target, stay_target) = if exit_on_true {
        (ed.blocks[1], ed.blocks[0])
    } else {
        (ed.blocks[0], ed.blocks[1])
    };

    // Header phis as (phi, init, next).
    let mut hphis = vec![];
    for p in phis(unit, l.header) {
        let d = unit.inst_data(p);
        let find = |blk: Block| d.blocks.iter().position(|&b| b == blk).map(|k| d.args[k]);
        match (find(preheader), find(latch)) {
            (Some(i), Some(n)) => hphis.push((unit.inst_result(p).unwrap(), i, n)),
            _ => return Err(Reject::at(p, "malformed loop header phi")),
        }
    }
    let trips = trip_count(unit, l, &hphis, ed.args[0], exit_on_true)
        .map_err(|m| Reject::at(exit_term, m))?;

    let snapshot = unit.clone();
    let body: Vec<Block> = unit.blocks().filter(|b| l.body.contains(b)).collect();
    let mut vmaps: Vec<HashMap<Value, Value>> = vec![HashMap::new()];
    let mut bmaps: Vec<HashMap<Block, Block>> = vec![body.iter().map(|&b| (b, b)).collect()];
    let mut after = *body.last().unwrap();
    for j in 1..trips {
        let mut vmap = HashMap::new();
        let mut bmap = HashMap::new();
        copy_blocks(&snapshot, unit, &body, &mut vmap, &mut bmap);
        for &b in &body {
            let nb = bmap[&b];
            let base = snapshot.block_name(b).unwrap_or("bb").to_string();
            let name = fresh_block_name(unit, &format!("{}.u{}", base, j));
            unit.set_block_name(nb, name);
            let at = unit.blocks().position(|x| x == after).unwrap();
            unit.move_block(nb, at + 1);
            after = nb;
        }
        vmaps.push(vmap);
        bmaps.push(bmap);
    }
    let map = |vmaps: &[HashMap<Value, Value>], j: usize, v: Value| *vmaps[j].get(&v).unwrap_or(&v);

    for j in 0..trips {
        // Header phis take a single incoming edge.
        for &(phi, init, next) in &hphis {
            let p = unit.def_inst(map(&vmaps, j, phi)).unwrap();
            let d = unit.inst_data_mut(p);
            if j == 0 {
                d.args = vec![init];
                d.blocks = vec![preheader];
            } else {
                d.args = vec![map(&vmaps, j - 1, next)];
                d.blocks = vec![bmaps[j - 1][&latch]];
            }
        }
        let last = j + 1 == trips;
        // Back edge into the next copy.
        if !last {
            let lt = unit.terminator(bmaps[j][&latch]).unwrap();
            let own = bmaps[j][&l.header];
            for b in &mut unit.inst_data_mut(lt).blocks {
                if *b == own {
                    *b = bmaps[j + 1][&l.header];
                }
            }
        }
        let et = unit.terminator(bmaps[j][&exiting]).unwrap();
        let target = if last {
            exit_target
        } else if exiting == latch {
            bmaps[j + 1][&l.header]
        } else {
            bmaps[j][&stay_target]
        };
        *unit.inst_data_mut(et) =
            InstData::new(Opcode::Br, Type::Void, vec![]).with_blocks(vec![target]);
    }

    // Uses after the loop see the values of the last copy.
    let last = trips - 1;
    let last_exiting = bmaps[last][&exiting];
    if last > 0 {
        let body_values: Vec<(Value, Value)> = vmaps[last].iter().map(|(&a, &b)| (a, b)).collect();
        let inside: HashSet<Block> = bmaps.iter().flat_map(|m| m.values().copied()).collect();
        for inst in unit.all_insts().collect::<Vec<_>>() {
            if inside.contains(&unit.inst_block(inst).unwrap()) {
                continue;
            }
            let d = unit.inst_data_mut(inst);
            for a in &mut d.args {
                if let Some(&(_, n)) = body_values.iter().find(|(o, _)| o == a) {
                    *a = n;
                }
            }
        }
    }
    rename_phi_incoming(unit, exit_target, exiting, last_exiting);
    Ok(())
}

/// Number of times the loop header executes, found by evaluating the exit
/// condition on constant phi values.
fn trip_count(
    unit: &UnitData,
    l: &Loop,
    hphis: &[(Value, Value, Value)],
    cond: Value,
    exit_on_true: bool,
) -> Result<usize, String> {
    let not_const = || "loop trip count is not a compile-time constant".to_string();
    let mut state: HashMap<Value, Val> = HashMap::new();
    for &(p, init, _) in hphis {
        if let Some(v) = const_val(unit, init) {
            state.insert(p, v);
        }
    }
    for n in 1..=MAX_TRIP_COUNT {
        let mut memo = state.clone();
        let c = eval(unit, l, cond, &mut memo).ok_or_else(not_const)?;
        if c.as_bool().ok_or_else(not_const)? == exit_on_true {
            return Ok(n);
        }
        let mut next = HashMap::new();
        for &(p, _, nx) in hphis {
            if let Some(v) = eval(unit, l, nx, &mut memo) {
                next.insert(p, v);
            }
        }
        state = next;
    }
    Err(format!("loop trip count exceeds the unroll limit of {}", MAX_TRIP_COUNT))
}

fn eval(unit: &UnitData, l: &Loop, v: Value, memo: &mut HashMap<Value, Val>) -> Option<Val> {
    if let Some(x) = memo.get(&v) {
        return Some(x.clone());
    }
    let i = unit.def_inst(v)?;
    let d = unit.inst_data(i);
    let r = if d.opcode == Opcode::Const {
        const_val(unit, v)?
    } else if d.opcode.is_pure() && d.opcode != Opcode::Phi {
        let mut args = vec![];
        for &a in &d.args {
            args.push(eval(unit, l, a, memo)?);
        }
        let refs: Vec<&Val> = args.iter().collect();
        let (r, div_zero) = eval_pure(d, &refs)?;
        if div_zero {
            return None;
        }
        r
    } else {
        return None;
    };
    memo.insert(v, r.clone());
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::basic::{constant_fold, dce};
    use crate::textio::{parse_module, print_unit};

    fn process(src: &str) -> UnitData {
        let m = parse_module(src).unwrap();
        let u = m.units().next().unwrap().1.clone();
        u
    }

    #[test]
    fn counts_to_four() {
        let mut u = process(
            "proc @p () -> (i32$ %o) {\n%e:\n %z = const i32 0\n %one = const i32 1\n %n = const i32 4\n %t = const time 0s 1e\n br %h\n%h:\n %i = phi i32 [%z, %e], [%j, %b]\n %c = ult i32 %i, %n\n br %c, %x, %b\n%b:\n drv i32$ %o, %i, %t\n %j = add i32 %i, %one\n br %h\n%x:\n halt\n}",
        );
        assert!(unroll(&mut u).unwrap());
        for _ in 0..4 {
            constant_fold(&mut u);
            dce(&mut u);
        }
        let s = print_unit(&u);
        assert_eq!(s.matches("drv").count(), 4, "{}", s);
        assert!(!s.contains("phi"), "{}", s);
    }

    #[test]
    fn rejects_unknown_bound() {
        let mut u = process(
            "proc @p (i32$ %n) -> (i32$ %o) {\n%e:\n %z = const i32 0\n %one = const i32 1\n %np = prb i32$ %n\n br %h\n%h:\n %i = phi i32 [%z, %e], [%j, %b]\n %c = ult i32 %i, %np\n br %c, %x, %b\n%b:\n %j = add i32 %i, %one\n br %h\n%x:\n halt\n}",
        );
        let e = unroll(&mut u).unwrap_err();
        assert!(e.message.contains("not a compile-time constant"));
    }

    #[test]
    fn leaves_wait_loops() {
        let mut u = process(
            "proc @p (i1$ %a) -> () {\n%e:\n wait %e, %a\n}",
        );
        assert!(!unroll(&mut u).unwrap());
    }
}
