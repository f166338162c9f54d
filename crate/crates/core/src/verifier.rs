//! Structural and type checking, and classification into IR levels.

use crate::analysis::{build_cfg, DomTree};
use crate::diag::{Diagnostic, Severity};
use crate::ir::check::{check_inst_types, check_opcode_allowed, check_signature};
use crate::ir::{Block, Inst, Module, Opcode, UnitData, UnitId, UnitKind, UnitName, Value, ValueDef};
use crate::textio::Locations;
use std::collections::{HashMap, HashSet};
use std::fmt;

struct Sink<'a> {
    locs: Option<&'a Locations>,
    out: Vec<Diagnostic>,
}

impl Sink<'_> {
    fn push(&mut self, sev: Severity, unit: (UnitId, &UnitName), inst: Option<Inst>, msg: String) {
        let span = self.locs.and_then(|l| match inst {
            Some(i) => l.insts.get(&(unit.0, i)).or_else(|| l.units.get(&unit.0)).copied(),
            None => l.units.get(&unit.0).copied(),
        });
        self.out.push(Diagnostic {
            severity: sev,
            span,
            message: format!("in {}: {}", unit.1, msg),
        });
    }
}

/// Check every unit of a module. Returns errors and warnings; the module is
/// valid iff no error is reported.
pub fn verify(module: &Module) -> Vec<Diagnostic> {
    verify_with_locations(module, None)
}

/// Like [`verify`], attaching source spans from the parser where known.
pub fn verify_with_locations(module: &Module, locs: Option<&Locations>) -> Vec<Diagnostic> {
    let mut sink = Sink { locs, out: vec![] };
    let mut seen: HashSet<&UnitName> = HashSet::new();
    for (id, unit) in module.units() {
        if !seen.insert(&unit.name) {
            sink.push(
                Severity::Error,
                (id, &unit.name),
                None,
                format!("duplicate definition of `{}`", unit.name),
            );
        }
        if let Some(d) = module.lookup_declaration(&unit.name) {
            if d.sig != unit.sig {
                sink.push(
                    Severity::Error,
                    (id, &unit.name),
                    None,
                    format!("declared as `{}` but defined as `{}`", d.sig, unit.sig),
                );
            }
        }
        verify_unit(module, id, unit, &mut sink);
    }
    let mut decls = HashSet::new();
    for d in module.declarations() {
        if !decls.insert(&d.name) {
            sink.out.push(Diagnostic::error(
                None,
                format!("duplicate declaration of `{}`", d.name),
            ));
        }
    }
    sink.out
}

/// Check a single unit against its module.
pub fn verify_unit_in(module: &Module, id: UnitId) -> Vec<Diagnostic> {
    let mut sink = Sink {
        locs: None,
        out: vec![],
    };
    verify_unit(module, id, module.unit(id), &mut sink);
    sink.out
}

fn verify_unit(module: &Module, id: UnitId, unit: &UnitData, sink: &mut Sink) {
    let who = (id, &unit.name);
    if let Err(e) = check_signature(unit.kind, &unit.sig) {
        sink.push(Severity::Error, who, None, e);
    }
    let mut structural_ok = true;
    if unit.kind.is_control_flow() {
        if unit.block_count() == 0 {
            sink.push(
                Severity::Error,
                who,
                None,
                "unit has no blocks; the entry block needs a terminator".into(),
            );
            return;
        }
        for b in unit.blocks() {
            let insts = unit.insts(b);
            match insts.last() {
                Some(&last) if unit.opcode(last).is_terminator() => {}
                last => {
                    structural_ok = false;
                    sink.push(
                        Severity::Error,
                        who,
                        last.copied(),
                        "block does not end with a terminator".into(),
                    );
                }
            }
            let mut past_phis = false;
            for (pos, &inst) in insts.iter().enumerate() {
                let op = unit.opcode(inst);
                if op.is_terminator() && pos + 1 != insts.len() {
                    structural_ok = false;
                    sink.push(
                        Severity::Error,
                        who,
                        Some(inst),
                        format!("terminator `{}` in the middle of a block", op),
                    );
                }
                if op == Opcode::Phi {
                    if past_phis {
                        sink.push(
                            Severity::Error,
                            who,
                            Some(inst),
                            "`phi` after a non-phi instruction".into(),
                        );
                    }
                } else {
                    past_phis = true;
                }
            }
        }
    }

    // Operand references and per-instruction rules.
    let attached: HashSet<Inst> = unit.all_insts().collect();
    let mut operands_ok = true;
    for inst in unit.all_insts() {
        let d = unit.inst_data(inst);
        if let Err(e) = check_opcode_allowed(unit.kind, d.opcode) {
            sink.push(Severity::Error, who, Some(inst), e);
        }
        let mut bad_ref = false;
        for &a in &d.args {
            if a.index() >= unit.value_count() {
                bad_ref = true;
                continue;
            }
            if let ValueDef::Inst(def) = unit.value_def(a) {
                if !attached.contains(&def) {
                    bad_ref = true;
                }
            }
        }
        for &b in &d.blocks {
            if b.index() >= unit.block_capacity() || !unit.is_block_live(b) {
                bad_ref = true;
            }
        }
        if bad_ref {
            operands_ok = false;
            sink.push(
                Severity::Error,
                who,
                Some(inst),
                format!("`{}` refers to a value or block that does not exist", d.opcode),
            );
            continue;
        }
        if let Err(e) = check_inst_types(unit, Some(module), d) {
            sink.push(Severity::Error, who, Some(inst), e);
        }
        if d.opcode == Opcode::Del {
            let zero = unit
                .const_of(d.args[1])
                .map_or(false, |c| matches!(c, crate::ir::ConstValue::Time(t) if t.is_zero()));
            if zero {
                sink.push(
                    Severity::Warning,
                    who,
                    Some(inst),
                    "`del` with zero delay acts as a single delta step".into(),
                );
            }
        }
    }
    if !operands_ok {
        return;
    }

    if unit.kind.is_control_flow() {
        if structural_ok {
            verify_control_flow(unit, who, sink);
        }
    } else {
        verify_data_flow(unit, who, sink);
    }
}

fn verify_control_flow(unit: &UnitData, who: (UnitId, &UnitName), sink: &mut Sink) {
    let cfg = match build_cfg(unit) {
        Ok(c) => c,
        Err(e) => {
            sink.push(Severity::Error, who, None, e);
            return;
        }
    };
    let dom = DomTree::from_cfg(&cfg);

    let wait_targets: HashSet<Block> = unit
        .blocks()
        .filter_map(|b| unit.terminator(b))
        .filter(|&t| unit.opcode(t) == Opcode::Wait)
        .map(|t| unit.inst_data(t).blocks[0])
        .collect();

    // Position of each defining instruction.
    let mut pos: HashMap<Inst, (Block, usize)> = HashMap::new();
    for b in unit.blocks() {
        for (i, &inst) in unit.insts(b).iter().enumerate() {
            pos.insert(inst, (b, i));
        }
    }
    let def_site = |v: Value| -> Option<(Block, usize)> {
        match unit.value_def(v) {
            ValueDef::Arg(_) => None,
            ValueDef::Inst(i) => pos.get(&i).copied(),
        }
    };

    for b in unit.blocks() {
        let reachable = dom.is_reachable(b.index());
        for (i, &inst) in unit.insts(b).iter().enumerate() {
            let d = unit.inst_data(inst);
            if d.opcode == Opcode::Phi {
                if wait_targets.contains(&b) {
                    sink.push(
                        Severity::Error,
                        who,
                        Some(inst),
                        "`phi` in a block resumed by `wait`".into(),
                    );
                }
                let mut incoming: Vec<Block> = d.blocks.clone();
                incoming.sort();
                let dup = incoming.windows(2).any(|w| w[0] == w[1]);
                let mut preds: Vec<Block> = cfg.preds(b).to_vec();
                preds.sort();
                if dup || incoming != preds {
                    sink.push(
                        Severity::Error,
                        who,
                        Some(inst),
                        "`phi` incoming blocks do not match the block's predecessors".into(),
                    );
                }
                if !reachable {
                    continue;
                }
                for (&v, &from) in d.args.iter().zip(&d.blocks) {
                    if !dom.is_reachable(from.index()) {
                        continue;
                    }
                    if let Some((db, _)) = def_site(v) {
                        if !dom.dominates(db.index(), from.index()) {
                            sink.push(
                                Severity::Error,
                                who,
                                Some(inst),
                                "`phi` operand does not dominate its incoming edge".into(),
                            );
                        }
                    }
                }
                continue;
            }
            if !reachable {
                continue;
            }
            for &v in &d.args {
                if let Some((db, di)) = def_site(v) {
                    let ok = if db == b {
                        di < i
                    } else {
                        dom.dominates(db.index(), b.index())
                    };
                    if !ok {
                        sink.push(
                            Severity::Error,
                            who,
                            Some(inst),
                            format!("operand of `{}` is not dominated by its definition", d.opcode),
                        );
                        break;
                    }
                }
            }
        }
    }
}

fn verify_data_flow(unit: &UnitData, who: (UnitId, &UnitName), sink: &mut Sink) {
    // Edges from each instruction to the instructions defining its operands,
    // except through the signal operand of `prb`.
    let insts: Vec<Inst> = unit.all_insts().collect();
    let mut state: HashMap<Inst, u8> = HashMap::new();
    for &root in &insts {
        if state.contains_key(&root) {
            continue;
        }
        let mut stack: Vec<(Inst, usize)> = vec![(root, 0)];
        state.insert(root, 1);
        while let Some(top) = stack.last_mut() {
            let inst = top.0;
            let d = unit.inst_data(inst);
            let deps: &[Value] = if d.opcode == Opcode::Prb { &[] } else { &d.args };
            if let Some(&v) = deps.get(top.1) {
                top.1 += 1;
                if let Some(def) = unit.def_inst(v) {
                    match state.get(&def) {
                        None => {
                            state.insert(def, 1);
                            stack.push((def, 0));
                        }
                        Some(1) => {
                            sink.push(
                                Severity::Error,
                                who,
                                Some(def),
                                format!(
                                    "`{}` depends on itself without passing through a signal",
                                    unit.opcode(def)
                                ),
                            );
                            return;
                        }
                        _ => {}
                    }
                }
            } else {
                state.insert(inst, 2);
                stack.pop();
            }
        }
    }
}

// ---- levels ---------------------------------------------------------------

/// Level of one unit and what keeps it from the next lower level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitLevel {
    pub name: UnitName,
    pub level: u8,
    /// Constructs that require `level`, e.g. "`prb`" or "instantiates @x".
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelReport {
    pub units: Vec<UnitLevel>,
    pub module_level: u8,
}

impl LevelReport {
    pub fn level_of(&self, name: &UnitName) -> Option<u8> {
        self.units.iter().find(|u| &u.name == name).map(|u| u.level)
    }
}

impl fmt::Display for LevelReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        for u in &self.units {
            write!(f, "{}: level {}", u.name, u.level)?;
            if !u.reasons.is_empty() {
                write!(f, " ({})", u.reasons.join(", "))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "module level: {}", self.module_level)
    }
}

fn own_level(unit: &UnitData) -> (u8, Vec<String>) {
    match unit.kind {
        UnitKind::Function => return (1, vec!["function".into()]),
        UnitKind::Process => return (1, vec!["process".into()]),
        UnitKind::Entity => {}
    }
    let mut level = 3;
    let mut reasons: Vec<String> = vec![];
    for inst in unit.all_insts() {
        let d = unit.inst_data(inst);
        let (l, why) = match d.opcode {
            Opcode::Sig | Opcode::Con | Opcode::Del | Opcode::Inst | Opcode::Const => continue,
            Opcode::Call => {
                let name = d.callee().unwrap();
                if name.is_intrinsic() {
                    (1, format!("intrinsic call {}", name))
                } else {
                    (1, format!("call of {}", name))
                }
            }
            op if op.is_memory() => (1, format!("`{}`", op)),
            op => (2, format!("`{}`", op)),
        };
        if l < level {
            level = l;
            reasons.clear();
        }
        if l == level && !reasons.contains(&why) {
            reasons.push(why);
        }
    }
    (level, reasons)
}

/// Classify each unit into the lowest level whose constructs it uses. A unit
/// is never lower than the units it instantiates. The module must verify.
pub fn classify_level(module: &Module) -> Result<LevelReport, Vec<Diagnostic>> {
    let errs: Vec<Diagnostic> = verify(module).into_iter().filter(|d| d.is_error()).collect();
    if !errs.is_empty() {
        return Err(errs);
    }
    let ids = module.unit_ids();
    let mut levels: HashMap<UnitId, (u8, Vec<String>)> =
        ids.iter().map(|&id| (id, own_level(module.unit(id)))).collect();
    // Propagate through instantiation until stable; at most one pass per unit.
    for _ in 0..=ids.len() {
        let mut changed = false;
        for &id in &ids {
            let unit = module.unit(id);
            for inst in unit.all_insts() {
                let d = unit.inst_data(inst);
                if d.opcode != Opcode::Inst {
                    continue;
                }
                let target = match module.lookup(d.callee().unwrap()) {
                    Some(t) => t,
                    None => continue,
                };
                let tl = levels[&target].0;
                let entry = levels.get_mut(&id).unwrap();
                let why = format!("instantiates {}", d.callee().unwrap());
                if tl < entry.0 {
                    *entry = (tl, vec![why]);
                    changed = true;
                } else if tl == entry.0 && tl < 3 && !entry.1.contains(&why) {
                    entry.1.push(why);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let units: Vec<UnitLevel> = ids
        .iter()
        .map(|id| {
            let (level, reasons) = levels[id].clone();
            UnitLevel {
                name: module.unit(*id).name.clone(),
                level,
                reasons,
            }
        })
        .collect();
    let module_level = units.iter().map(|u| u.level).min().unwrap_or(3);
    Ok(LevelReport {
        units,
        module_level,
    })
}
