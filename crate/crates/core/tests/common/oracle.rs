//! Independent oracles. Each check returns `Err` with a description of the
//! first mismatch so property tests and the acceptance runner can share
//! them.

use super::*;
use hwir::analysis::{build_cfg, temporal_regions, to_dnf, Atom, BoolExpr, Dnf, DomTree};
use hwir::ir::{Block, LogicDigit, Opcode, RegMode, UnitData, UnitKind, Value};
use hwir::passes::run_pass;
use hwir::textio::print_module;
use hwir::verifier::{classify_level, verify};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($c:expr, $($fmt:tt)*) => {
        if !$c {
            return Err(format!($($fmt)*));
        }
    };
}

fn first_unit(m: &Module) -> &UnitData {
    m.units().next().unwrap().1
}

/// Dominators against path enumeration, and the three region rules checked
/// block by block.
pub fn check_cfg(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(1..=12);
    let g = random_cfg(&mut r, n);
    let m = parse(&g.text);
    let unit = first_unit(&m);
    let blocks: Vec<Block> = unit.blocks().collect();
    let succs = g.succs();
    let reach = reachable_avoiding(&succs, 0, None);
    let dom = DomTree::from_cfg(&build_cfg(unit)?);

    let mut doms: Vec<Vec<usize>> = vec![vec![]; n];
    for a in 0..n {
        let without = reachable_avoiding(&succs, 0, Some(a));
        for b in 0..n {
            if !reach[a] || !reach[b] {
                continue;
            }
            let expect = a == b || !without[b];
            ensure!(
                dom.block_dominates(blocks[a], blocks[b]) == expect,
                "seed {}: dominates(b{}, b{}) should be {}\n{}",
                seed,
                a,
                b,
                expect,
                g.text
            );
            if expect && a != b {
                doms[b].push(a);
            }
        }
    }
    for b in 1..n {
        if !reach[b] {
            continue;
        }
        // The immediate dominator is the strict dominator dominated by all
        // the others, i.e. the one with the most dominators itself.
        let idom = doms[b].iter().copied().max_by_key(|&d| doms[d].len()).unwrap();
        ensure!(
            dom.block_idom(blocks[b]) == Some(blocks[idom]),
            "seed {}: idom(b{}) should be b{}\n{}",
            seed,
            b,
            idom,
            g.text
        );
    }

    let trs = temporal_regions(unit)?;
    for b in 0..n {
        let tr = trs.tr_of(blocks[b]);
        if !reach[b] {
            ensure!(tr.is_none(), "seed {}: unreachable b{} has a region", seed, b);
            continue;
        }
        let t = tr.ok_or_else(|| format!("seed {}: b{} has no region", seed, b))?;
        let preds: Vec<usize> = (0..n).filter(|&p| reach[p] && succs[p].contains(&b)).collect();
        let pred_trs: Vec<usize> = preds.iter().map(|&p| trs.tr_of(blocks[p]).unwrap()).collect();
        if b == 0 || preds.iter().any(|&p| g.ends_in_wait(p)) {
            ensure!(trs.is_head(blocks[b]), "seed {}: rule 1 violated at b{}\n{}", seed, b, g.text);
        } else if pred_trs.iter().all(|&p| p == pred_trs[0]) {
            ensure!(t == pred_trs[0], "seed {}: rule 2 violated at b{}\n{}", seed, b, g.text);
        } else {
            ensure!(trs.is_head(blocks[b]), "seed {}: rule 3 violated at b{}\n{}", seed, b, g.text);
        }
        // Single entry: a block other than the head is only entered from
        // inside its region.
        if !trs.is_head(blocks[b]) {
            ensure!(
                pred_trs.iter().all(|&p| p == t),
                "seed {}: region of b{} entered twice\n{}",
                seed,
                b,
                g.text
            );
        }
    }
    for (i, reg) in trs.regions().iter().enumerate() {
        ensure!(trs.tr_of(reg.head) == Some(i), "seed {}: head outside its region", seed);
    }
    Ok(())
}

const LEAF_SRC: &str = "func @leaves (i1 %a, i1 %b, i1 %c, i1 %d, i1 %e, i1 %f) void {\n%entry:\n  ret\n}\n";

pub fn leaf_values() -> Vec<Value> {
    let m = parse(LEAF_SRC);
    first_unit(&m).args().collect()
}

fn random_expr(r: &mut Rand, leaves: usize, vs: &[Value]) -> BoolExpr {
    if leaves == 1 {
        let a = vs[r.gen_range(0..vs.len())];
        let leaf = match r.gen_range(0..10) {
            0 => BoolExpr::Const(r.gen_bool(0.5)),
            1 => {
                let b = vs[r.gen_range(0..vs.len())];
                BoolExpr::Atom(Atom::eq(a, b))
            }
            _ => BoolExpr::Atom(Atom::Value(a)),
        };
        return if r.gen_bool(0.3) { BoolExpr::Not(Box::new(leaf)) } else { leaf };
    }
    let split = r.gen_range(1..leaves);
    let (x, y) = (random_expr(r, split, vs), random_expr(r, leaves - split, vs));
    let e = match r.gen_range(0..7) {
        0..=2 => BoolExpr::And(vec![x, y]),
        3..=5 => BoolExpr::Or(vec![x, y]),
        _ => BoolExpr::Xor(Box::new(x), Box::new(y)),
    };
    if r.gen_bool(0.2) {
        BoolExpr::Not(Box::new(e))
    } else {
        e
    }
}

fn atom_value(a: &Atom, vs: &[Value], bits: u32) -> bool {
    let bit = |v: &Value| bits >> vs.iter().position(|x| x == v).unwrap() & 1 == 1;
    match a {
        Atom::Value(v) => bit(v),
        Atom::Eq(x, y) => bit(x) == bit(y),
    }
}

fn eval_expr(e: &BoolExpr, vs: &[Value], bits: u32) -> bool {
    match e {
        BoolExpr::Const(c) => *c,
        BoolExpr::Atom(a) => atom_value(a, vs, bits),
        BoolExpr::Not(x) => !eval_expr(x, vs, bits),
        BoolExpr::And(xs) => xs.iter().all(|x| eval_expr(x, vs, bits)),
        BoolExpr::Or(xs) => xs.iter().any(|x| eval_expr(x, vs, bits)),
        BoolExpr::Xor(x, y) => eval_expr(x, vs, bits) != eval_expr(y, vs, bits),
    }
}

fn eval_dnf(d: &Dnf, vs: &[Value], bits: u32) -> bool {
    d.terms
        .iter()
        .any(|t| t.iter().all(|l| atom_value(&l.atom, vs, bits) == l.positive))
}

/// A random expression with at most six leaves against its DNF on all 64
/// assignments of the six leaf values.
pub fn check_dnf(seed: u64, vs: &[Value]) -> Check {
    let mut r = rng(seed);
    let leaves = r.gen_range(1..=6);
    let e = random_expr(&mut r, leaves, vs);
    let d = to_dnf(&e);
    for bits in 0..64u32 {
        ensure!(
            eval_expr(&e, vs, bits) == eval_dnf(&d, vs, bits),
            "seed {}: {:?} and its DNF {:?} differ at assignment {:06b}",
            seed,
            e,
            d.terms,
            bits
        );
    }
    for t in &d.terms {
        let mut atoms: Vec<Atom> = t.iter().map(|l| l.atom).collect();
        atoms.sort();
        atoms.dedup();
        ensure!(atoms.len() == t.len(), "seed {}: term repeats an atom: {:?}", seed, t);
    }
    Ok(())
}

/// std_logic resolution table, rows and columns in `U X 0 1 Z W L H -`
/// order.
pub const IEEE_RESOLUTION: [&str; 9] = [
    "UUUUUUUUU", // U
    "UXXXXXXXX", // X
    "UX0X0000X", // 0
    "UXX11111X", // 1
    "UX01ZWLHX", // Z
    "UX01WWWWX", // W
    "UX01LWLWX", // L
    "UX01HWWHX", // H
    "UXXXXXXXX", // -
];

pub const DIGIT_ORDER: &str = "UX01ZWLH-";

fn digit(c: char) -> LogicDigit {
    LogicDigit::from_char(c).unwrap()
}

pub fn check_resolution_table() -> Check {
    for (i, a) in DIGIT_ORDER.chars().enumerate() {
        for (j, b) in DIGIT_ORDER.chars().enumerate() {
            let want = digit(IEEE_RESOLUTION[i].as_bytes()[j] as char);
            let got = digit(a).resolve(digit(b));
            ensure!(got == want, "resolve({}, {}) = {}, expected {}", a, b, got.to_char(), want.to_char());
        }
    }
    Ok(())
}

pub fn check_resolution_laws(seed: u64, triples: usize) -> Check {
    let mut r = rng(seed);
    let all = LogicDigit::ALL;
    for _ in 0..triples {
        let (a, b, c) = (*all.choose(&mut r).unwrap(), *all.choose(&mut r).unwrap(), *all.choose(&mut r).unwrap());
        ensure!(a.resolve(b) == b.resolve(a), "resolve not commutative on {:?} {:?}", a, b);
        ensure!(
            a.resolve(b).resolve(c) == a.resolve(b.resolve(c)),
            "resolve not associative on {:?} {:?} {:?}",
            a,
            b,
            c
        );
        ensure!(
            hwir::ir::logic::resolve_all([a, b, c]) == a.resolve(b).resolve(c),
            "resolve_all disagrees on {:?} {:?} {:?}",
            a,
            b,
            c
        );
    }
    Ok(())
}

/// Lower a random two-region process and compare traces under random
/// stimulus.
pub fn check_two_region(seed: u64, cycles: u64) -> Check {
    let mut r = rng(seed);
    let p = random_two_region(&mut r);
    let text = format!("{}\n{}", p.text, two_region_bench(&p));
    let m = parse(&text);
    let errs: Vec<_> = verify(&m).into_iter().filter(|d| d.is_error()).collect();
    ensure!(errs.is_empty(), "seed {}: generated process does not verify: {:?}\n{}", seed, errs, text);
    let mut inputs: Vec<Input> = (0..p.controls).map(|i| (format!("tb.s{}", i), 1)).collect();
    inputs.push(("tb.d".into(), 8));
    let stim = stimulus(&mut r, &inputs, cycles);
    let mut l = m.clone();
    let report = hwir::passes::lower_module(&mut l, 2)?;
    ensure!(report.rejections.is_empty(), "seed {}: {}\n{}", seed, report.render(), text);
    let levels = classify_level(&l).map_err(|d| format!("{:?}", d))?;
    let dut = l.lookup(&UnitName::global("dut"));
    ensure!(
        dut.map_or(true, |id| l.unit(id).kind == UnitKind::Entity),
        "seed {}: @dut still a process",
        seed
    );
    ensure!(levels.module_level == 2, "seed {}: lowered module is not level 2:\n{}", seed, levels);
    let (a, _, _) = run_with(&m, "tb", &stim);
    let (b, _, _) = run_with(&l, "tb", &stim);
    ensure!(
        a == b,
        "seed {}: traces differ\n{}\n--- lowered ---\n{}",
        seed,
        text,
        print_module(&l)
    );
    Ok(())
}

pub const ACC_BENCH: &str = "entity @tb () -> () {
  %f = const i1 0
  %z = const i32 0
  %clk = sig i1 %f
  %x = sig i32 %z
  %en = sig i1 %f
  %q = sig i32 %z
  inst @acc (%clk, %x, %en) -> (%q)
}
";

pub fn acc_bench() -> Module {
    parse(&format!("{}\n{}", fixture("fig5_left.llhd"), ACC_BENCH))
}

pub fn check_acc_equivalence(seed: u64, cycles: u64) -> Check {
    let mut r = rng(seed);
    let m = acc_bench();
    let inputs: Vec<Input> = vec![("tb.clk".into(), 1), ("tb.x".into(), 32), ("tb.en".into(), 1)];
    let stim = stimulus(&mut r, &inputs, cycles);
    let (a, b, _) = lowered_traces(&m, "tb", &stim);
    ensure!(a == b, "seed {}: accumulator traces differ", seed);
    Ok(())
}

/// The lowered accumulator: one entity holding a single rising-edge `reg`
/// on the clock and a mux/add data path.
pub fn check_golden_lowering() -> Check {
    let mut m = parse(&fixture("fig5_left.llhd"));
    let report = hwir::passes::lower_module(&mut m, 2)?;
    ensure!(report.rejections.is_empty(), "{}", report.render());
    let levels = classify_level(&m).map_err(|d| format!("{:?}", d))?;
    for u in &levels.units {
        ensure!(u.level == 2, "{} is level {}", u.name, u.level);
    }
    let id = m.lookup(&UnitName::global("acc")).ok_or("no @acc")?;
    let acc = m.unit(id);
    ensure!(acc.kind == UnitKind::Entity, "@acc is not an entity");
    let ops: Vec<Opcode> = acc.all_insts().map(|i| acc.opcode(i)).collect();
    let regs: Vec<_> = acc.all_insts().filter(|&i| acc.opcode(i) == Opcode::Reg).collect();
    ensure!(regs.len() == 1, "{} regs in @acc", regs.len());
    let trig = acc.inst_data(regs[0]).reg_triggers();
    ensure!(trig.len() == 1 && trig[0].mode == RegMode::Rise, "reg triggers: {:?}", trig);
    let clk = acc.arg(0);
    let t = acc.def_inst(trig[0].trigger).ok_or("trigger is not an instruction")?;
    ensure!(
        acc.opcode(t) == Opcode::Prb && acc.inst_data(t).args[0] == clk,
        "reg is not triggered by the clock"
    );
    ensure!(
        acc.inst_data(regs[0]).args[0] == acc.arg(3),
        "reg does not store into %q"
    );
    ensure!(ops.contains(&Opcode::Mux) && ops.contains(&Opcode::Add), "no mux/add data path");
    for op in &ops {
        ensure!(
            !matches!(op, Opcode::Wait | Opcode::Br | Opcode::BrCond | Opcode::Phi | Opcode::Inst),
            "@acc still contains `{}`",
            op
        );
    }
    Ok(())
}

/// Running sum of `x` gated by `en`, sampled on rising `clk`, computed from
/// the input waveforms alone.
pub fn check_fig3_testbench() -> Check {
    let m = parse(&fixture("fig3.llhd"));
    let mut s = hwir::sim::elaborate(&m, &UnitName::global("acc_tb")).map_err(|e| e.to_string())?;
    let summary = s.run(None).map_err(|e| e.to_string())?;
    ensure!(summary.finished, "testbench did not run to completion");
    ensure!(
        summary.assertion_failures.is_empty(),
        "{} assertion failures: {:?}",
        summary.assertion_failures.len(),
        &summary.assertion_failures[..summary.assertion_failures.len().min(3)]
    );
    let tr = s.trace();
    let get = |n: &str| tr.changes_of(n).ok_or(format!("no signal {}", n));
    let clk = get("acc_tb.clk")?;
    let x = get("acc_tb.x")?;
    let en = get("acc_tb.en")?;
    let q = get("acc_tb.q")?;
    let at = |w: &[(hwir::ir::TimeValue, Val)], t: hwir::ir::TimeValue, init: u64| -> u64 {
        w.iter()
            .take_while(|(wt, _)| *wt < t)
            .last()
            .map_or(init, |(_, v)| v.as_index().unwrap() as u64)
    };
    let mut prev = 0u64;
    let mut sum = 0u64;
    let mut expect = vec![];
    for (t, v) in &clk {
        let now = v.as_index().unwrap() as u64;
        if prev == 0 && now == 1 && at(&en, *t, 0) == 1 {
            let next = (sum + at(&x, *t, 0)) & 0xffff_ffff;
            if next != sum {
                expect.push((t.fs, next));
            }
            sum = next;
        }
        prev = now;
    }
    let got: Vec<(u64, u64)> = q.iter().map(|(t, v)| (t.fs, v.as_index().unwrap() as u64)).collect();
    ensure!(expect.len() >= 99, "oracle saw only {} updates", expect.len());
    ensure!(got == expect, "q trace {:?} differs from running sum {:?}", &got[..got.len().min(5)], &expect[..expect.len().min(5)]);
    Ok(())
}

const MEMORY_OPS: [Opcode; 5] = [Opcode::Var, Opcode::Alloc, Opcode::Ld, Opcode::St, Opcode::Free];

/// mem2reg and unroll on a testbench with a constant-bound loop over stack
/// slots.
pub fn check_mem2reg_unroll() -> Check {
    let m = parse(&fixture("unroll_tb.llhd"));
    let mut l = m.clone();
    for p in ["mem2reg", "unroll", "constant-fold", "dce"] {
        let r = run_pass(&mut l, p)?;
        ensure!(r.rejections.is_empty(), "{}", r.render());
    }
    let id = l.lookup(&UnitName::global("unroll_tb")).unwrap();
    let u = l.unit(id);
    let mem = u.all_insts().filter(|&i| MEMORY_OPS.contains(&u.opcode(i))).count();
    ensure!(mem == 0, "{} memory instructions left:\n{}", mem, print_module(&l));
    // Only the wait loop remains: every cycle in the CFG passes a wait.
    let trs = temporal_regions(u)?;
    for reg in trs.regions() {
        for &b in &reg.blocks {
            for s in u.successors(b) {
                let is_wait = u.opcode(u.terminator(b).unwrap()) == Opcode::Wait;
                ensure!(is_wait || s != reg.head, "loop without wait left:\n{}", print_module(&l));
            }
        }
    }
    let until = Some(ns(200));
    let run = |m: &Module| -> Result<String, String> {
        let mut s = hwir::sim::elaborate(m, &UnitName::global("unroll_top")).map_err(|e| e.to_string())?;
        s.run(until).map_err(|e| e.to_string())?;
        let names = s.signal_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(s.trace().render(&refs))
    };
    let (a, b) = (run(&m)?, run(&l)?);
    ensure!(a == b, "traces differ before and after promotion");
    ensure!(a.lines().count() > 150, "trace unexpectedly short:\n{}", a);
    Ok(())
}

/// Run the accumulator for `cycles` clock periods and return committed
/// changes per second of wall time.
pub fn acc_throughput(cycles: u64) -> Result<(f64, hwir::sim::Summary), String> {
    let m = acc_bench();
    let mut r = rng(9);
    let mut s = hwir::sim::elaborate(&m, &UnitName::global("tb")).map_err(|e| e.to_string())?;
    for c in 0..cycles {
        let t = ns(c * 10);
        s.drive_external("tb.clk", &Val::from_bool(true), t).map_err(|e| e.to_string())?;
        s.drive_external("tb.clk", &Val::from_bool(false), ns(c * 10 + 5)).map_err(|e| e.to_string())?;
        s.drive_external("tb.x", &Val::int(32, r.gen::<u32>()), t).map_err(|e| e.to_string())?;
        s.drive_external("tb.en", &Val::from_bool(r.gen_bool(0.9)), t).map_err(|e| e.to_string())?;
    }
    let summary = s.run(None).map_err(|e| e.to_string())?;
    let rate = summary.changes as f64 / summary.wall.as_secs_f64();
    Ok((rate, summary))
}

/// parse, print, parse: the two modules are structurally equal and print
/// identically.
pub fn check_fixpoint(text: &str) -> Check {
    let m1 = hwir::textio::parse_module(text).map_err(|ds| format!("{:?}", ds))?;
    let p1 = print_module(&m1);
    let m2 = hwir::textio::parse_module(&p1).map_err(|ds| format!("reparse failed: {:?}\n{}", ds, p1))?;
    ensure!(m1.structurally_eq(&m2), "reparse differs:\n{}", p1);
    let p2 = print_module(&m2);
    ensure!(p1 == p2, "printing is not stable:\n{}\n---\n{}", p1, p2);
    Ok(())
}
