//! Transformations and the lowering pipeline from behavioural (level 1) to
//! structural (level 2) form.
//!
//! Every pass works on one unit at a time. A pass that cannot handle a unit
//! returns a [`Rejection`] and the unit is restored to its state before the
//! pipeline touched it. After each pass the verifier runs on the unit as a
//! safety net; a failure there is reported as a rejection too.

pub mod basic;
pub mod deseq;
pub mod ecm;
pub mod inline;
pub mod mem2reg;
pub mod pl;
pub mod tcfe;
pub mod tcm;
pub mod unroll;
pub mod util;

pub use basic::{constant_fold, cse, dce, inst_simplify};
pub use deseq::desequentialize;
pub use ecm::early_code_motion;
pub use inline::{inline_calls, inline_entities};
pub use mem2reg::mem2reg;
pub use pl::process_lowering;
pub use tcfe::total_control_flow_elimination;
pub use tcm::temporal_code_motion;
pub use unroll::{unroll, MAX_TRIP_COUNT};
pub use util::Reject;

use crate::ir::{Module, Opcode, UnitData, UnitId, UnitKind, UnitName};
use crate::textio::print_instruction;
use crate::verifier::verify_unit_in;
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Names accepted by [`run_pass`].
pub const PASS_NAMES: &[&str] = &[
    "constant-fold",
    "dce",
    "cse",
    "inst-simplify",
    "inline",
    "mem2reg",
    "unroll",
    "ecm",
    "tcm",
    "tcfe",
    "pl",
    "deseq",
    "inline-entities",
];

/// Cap on cleanup rounds before giving up on a fixpoint.
const CLEANUP_ROUNDS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub unit: UnitName,
    pub pass: String,
    /// The offending instruction in text form, if any.
    pub inst: Option<String>,
    pub message: String,
}

impl fmt::Display for Rejection {
    /// One `unit<TAB>pass<TAB>reason` line.
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.unit, self.pass, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PassReport {
    pub pass: String,
    pub changed: bool,
    pub rejections: Vec<Rejection>,
}

impl PassReport {
    fn new(pass: &str) -> PassReport {
        PassReport {
            pass: pass.into(),
            ..PassReport::default()
        }
    }

    /// The machine-readable rejection list, one line per rejection.
    pub fn render(&self) -> String {
        self.rejections.iter().map(|r| format!("{}\n", r)).collect()
    }
}

fn reject(unit: &UnitData, pass: &str, r: Reject) -> Rejection {
    Rejection {
        unit: unit.name.clone(),
        pass: pass.into(),
        inst: r
            .inst
            .filter(|&i| unit.inst_block(i).is_some())
            .map(|i| print_instruction(unit, i)),
        message: r.message,
    }
}

/// Apply one named pass to one unit in place. On rejection or verifier
/// failure the unit is left as it was.
fn apply(module: &mut Module, id: UnitId, pass: &str) -> Result<bool, Rejection> {
    let before = module.unit(id).clone();
    let mut unit = before.clone();
    let result: Result<bool, Reject> = match pass {
        "constant-fold" => Ok(constant_fold(&mut unit)),
        "dce" => Ok(dce(&mut unit)),
        "cse" => Ok(cse(&mut unit)),
        "inst-simplify" => Ok(inst_simplify(&mut unit)),
        "inline" => inline_calls(module, &mut unit),
        "mem2reg" => Ok(mem2reg(&mut unit)),
        "unroll" => unroll(&mut unit),
        "ecm" => Ok(early_code_motion(&mut unit)),
        "tcm" => temporal_code_motion(&mut unit),
        "tcfe" => total_control_flow_elimination(&mut unit),
        "pl" | "deseq" if unit.is_process() => {
            let lowered = if pass == "pl" {
                process_lowering(&unit)
            } else {
                desequentialize(&unit)
            };
            lowered.map(|e| {
                unit = e;
                true
            })
        }
        "pl" | "deseq" => Ok(false),
        _ => unreachable!("unknown pass {}", pass),
    };
    match result {
        Ok(false) => Ok(false),
        Ok(true) => {
            module.replace_unit(id, unit);
            let errs: Vec<_> = verify_unit_in(module, id)
                .into_iter()
                .filter(|d| d.is_error())
                .collect();
            if errs.is_empty() {
                Ok(true)
            } else {
                module.replace_unit(id, before.clone());
                Err(reject(
                    &before,
                    pass,
                    Reject::new(format!("pass produced invalid IR: {}", errs[0].message)),
                ))
            }
        }
        Err(r) => Err(reject(&unit, pass, r)),
    }
}

/// Run a single pass over every unit of the module.
pub fn run_pass(module: &mut Module, pass: &str) -> Result<PassReport, String> {
    if !PASS_NAMES.contains(&pass) {
        return Err(format!(
            "unknown pass `{}`; available: {}",
            pass,
            PASS_NAMES.join(", ")
        ));
    }
    let mut report = PassReport::new(pass);
    if pass == "inline-entities" {
        let all: HashSet<UnitName> = module
            .units()
            .filter(|(_, u)| u.is_entity())
            .map(|(_, u)| u.name.clone())
            .collect();
        report.changed = inline_entities(module, &all);
        return Ok(report);
    }
    for id in module.unit_ids() {
        match apply(module, id, pass) {
            Ok(c) => report.changed |= c,
            Err(r) => report.rejections.push(r),
        }
    }
    Ok(report)
}

fn cleanup(module: &mut Module, id: UnitId, with_inline: bool) -> Result<bool, Rejection> {
    let mut passes = vec!["constant-fold", "dce", "cse", "inst-simplify"];
    if with_inline {
        passes.extend(["inline", "mem2reg"]);
    }
    let mut changed = false;
    for _ in 0..CLEANUP_ROUNDS {
        let mut round = false;
        for p in &passes {
            round |= apply(module, id, p)?;
        }
        changed |= round;
        if !round {
            break;
        }
    }
    Ok(changed)
}

fn calls_in(module: &Module) -> HashSet<UnitName> {
    let mut out = HashSet::new();
    for (_, u) in module.units() {
        for i in u.all_insts() {
            let d = u.inst_data(i);
            if d.opcode == Opcode::Call {
                out.insert(d.callee().unwrap().clone());
            }
        }
    }
    out
}

/// Lower a module towards `target` level.
///
/// Level 1 only runs the cleanups. Level 2 additionally lowers processes to
/// entities and merges the resulting single-use entities into their
/// instantiating entity. Level 3 would require logic synthesis and is
/// refused. Units that cannot be lowered are reported and left unchanged.
pub fn lower_module(module: &mut Module, target: u8) -> Result<PassReport, String> {
    match target {
        1 | 2 => {}
        3 => return Err("lowering to level 3 is synthesis out of scope".into()),
        n => return Err(format!("invalid target level {}", n)),
    }
    let mut report = PassReport::new("lower");
    let printed_before = crate::textio::print_module(module);
    let called_before = calls_in(module);
    let originals: HashMap<UnitId, UnitData> =
        module.units().map(|(id, u)| (id, u.clone())).collect();
    let mut rejected: HashSet<UnitId> = HashSet::new();
    let mut fail = |module: &mut Module, rejected: &mut HashSet<UnitId>, id: UnitId, r: Rejection| {
        module.replace_unit(id, originals[&id].clone());
        rejected.insert(id);
        report.rejections.push(r);
    };

    for id in module.unit_ids() {
        let is_process = module.unit(id).is_process();
        let r = cleanup(module, id, true).and_then(|_| {
            if is_process && apply(module, id, "unroll")? {
                cleanup(module, id, true)?;
            }
            Ok(())
        });
        if let Err(r) = r {
            fail(module, &mut rejected, id, r);
        }
    }

    let mut lowered: HashSet<UnitName> = HashSet::new();
    if target == 2 {
        for id in module.unit_ids() {
            if rejected.contains(&id) || !module.unit(id).is_process() {
                continue;
            }
            let r = (|| -> Result<(), Rejection> {
                for p in ["ecm", "tcm", "tcfe"] {
                    apply(module, id, p)?;
                }
                cleanup(module, id, false)?;
                let unit = module.unit(id);
                let pass = match unit.block_count() {
                    1 => "pl",
                    2 => "deseq",
                    _ => {
                        return Err(reject(
                            unit,
                            "tcfe",
                            Reject::new("process has more than two temporal regions"),
                        ))
                    }
                };
                apply(module, id, pass)?;
                cleanup(module, id, false)?;
                Ok(())
            })();
            match r {
                Ok(()) => {
                    lowered.insert(module.unit(id).name.clone());
                }
                Err(r) => fail(module, &mut rejected, id, r),
            }
        }
        if inline_entities(module, &lowered) {
            for id in module.unit_ids() {
                if module.unit(id).is_entity() {
                    if let Err(r) = cleanup(module, id, false) {
                        fail(module, &mut rejected, id, r);
                    }
                }
            }
        }
    }

    // Functions that were only reachable through inlined calls go away.
    let called_after = calls_in(module);
    for id in module.unit_ids() {
        let u = module.unit(id);
        if u.kind == UnitKind::Function && called_before.contains(&u.name) && !called_after.contains(&u.name) {
            module.remove_unit(id);
        }
    }
    report.changed = crate::textio::print_module(module) != printed_before;
    Ok(report)
}
