//! Printer for the text format.

use crate::ir::{
    Block, ConstValue, Extra, Inst, InstData, Module, Opcode, Type, UnitData, UnitKind, Value,
};
use std::collections::{HashMap, HashSet};
use std::fmt::Write;

/// Print a module. Declarations come first, then units in definition order.
pub fn print_module(module: &Module) -> String {
    let mut out = String::new();
    for d in module.declarations() {
        writeln!(out, "declare {} {}", d.name, d.sig).unwrap();
    }
    for (i, (_, unit)) in module.units().enumerate() {
        if i > 0 || !module.declarations().is_empty() {
            out.push('\n');
        }
        out.push_str(&print_unit(unit));
    }
    out
}

/// Assigns printable names: explicit names are kept (made unique with a
/// `.N` suffix), anonymous ones are numbered sequentially.
struct Namer {
    taken: HashSet<String>,
    next_anon: usize,
}

impl Namer {
    fn new() -> Namer {
        Namer {
            taken: HashSet::new(),
            next_anon: 0,
        }
    }

    fn name(&mut self, hint: Option<&str>) -> String {
        let name = match hint {
            Some(h) => {
                let mut cand = h.to_string();
                let mut n = 1;
                while self.taken.contains(&cand) {
                    cand = format!("{}.{}", h, n);
                    n += 1;
                }
                cand
            }
            None => loop {
                let cand = self.next_anon.to_string();
                self.next_anon += 1;
                if !self.taken.contains(&cand) {
                    break cand;
                }
            },
        };
        self.taken.insert(name.clone());
        name
    }
}

/// The names a unit's values and blocks get when printed.
pub struct Names {
    values: HashMap<Value, String>,
    blocks: HashMap<Block, String>,
}

/// Printable names of a unit, for diagnostics and debug dumps.
pub fn unit_names(unit: &UnitData) -> Names {
    assign_names(unit)
}

impl Names {
    pub fn value(&self, v: Value) -> String {
        self.v(v)
    }

    pub fn block(&self, b: Block) -> String {
        self.b(b)
    }

    fn v(&self, v: Value) -> String {
        match self.values.get(&v) {
            Some(n) => format!("%{}", n),
            None => format!("%<invalid {}>", v),
        }
    }

    fn b(&self, b: Block) -> String {
        match self.blocks.get(&b) {
            Some(n) => format!("%{}", n),
            None => format!("%<invalid {}>", b),
        }
    }
}

fn assign_names(unit: &UnitData) -> Names {
    // Explicit names are reserved first so that anonymous numbering never
    // steals them.
    let mut vn = Namer::new();
    let mut values = HashMap::new();
    let mut order: Vec<Value> = unit.args().collect();
    for inst in unit.all_insts() {
        order.extend(unit.inst_result(inst));
    }
    for &v in &order {
        if let Some(n) = unit.value_name(v) {
            values.insert(v, vn.name(Some(n)));
        }
    }
    let mut bn = Namer::new();
    let mut blocks = HashMap::new();
    for b in unit.blocks() {
        if let Some(n) = unit.block_name(b) {
            blocks.insert(b, bn.name(Some(n)));
        }
    }
    // Anonymous values and blocks share one numbering so `%3` is never
    // both.
    vn.taken.extend(bn.taken.iter().cloned());
    for &v in &order {
        values.entry(v).or_insert_with(|| vn.name(None));
    }
    bn.taken.extend(vn.taken.iter().cloned());
    bn.next_anon = vn.next_anon;
    for b in unit.blocks() {
        blocks.entry(b).or_insert_with(|| bn.name(None));
    }
    Names { values, blocks }
}

/// Print a single instruction with the names it would get in the whole unit.
pub fn print_instruction(unit: &UnitData, inst: Inst) -> String {
    print_inst(unit, inst, &assign_names(unit))
}

pub fn print_unit(unit: &UnitData) -> String {
    let names = assign_names(unit);
    let mut out = String::new();
    let port = |v: Value| format!("{} {}", unit.value_type(v), names.v(v));
    let list = |vs: Vec<Value>| vs.into_iter().map(port).collect::<Vec<_>>().join(", ");
    write!(
        out,
        "{} {} ({})",
        unit.kind.keyword(),
        unit.name,
        list(unit.input_args().collect())
    )
    .unwrap();
    if unit.kind == UnitKind::Function {
        write!(out, " {}", unit.sig.ret).unwrap();
    } else {
        write!(out, " -> ({})", list(unit.output_args().collect())).unwrap();
    }
    out.push_str(" {\n");
    for b in unit.blocks() {
        if unit.kind != UnitKind::Entity {
            writeln!(out, "{}:", names.b(b)).unwrap();
        }
        for &inst in unit.insts(b) {
            writeln!(out, "    {}", print_inst(unit, inst, &names)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

fn print_const(c: &ConstValue) -> String {
    match c {
        ConstValue::Int(v) => v.to_string(),
        ConstValue::Enum(v) => v.to_string(),
        ConstValue::Logic(ds) => {
            let s: String = ds.iter().rev().map(|d| d.to_char()).collect();
            format!("\"{}\"", s)
        }
        ConstValue::Time(t) => t.to_string(),
    }
}

fn print_inst(unit: &UnitData, inst: Inst, names: &Names) -> String {
    let d: &InstData = unit.inst_data(inst);
    let mut s = String::new();
    if let Some(r) = unit.inst_result(inst) {
        write!(s, "{} = ", names.v(r)).unwrap();
    }
    let vs = |args: &[Value]| {
        args.iter()
            .map(|&a| names.v(a))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let ty = &d.ty;
    use Opcode::*;
    match d.opcode {
        Const => write!(s, "const {} {}", ty, print_const(d.const_value().unwrap())),
        Array => write!(s, "array {} [{}]", ty, vs(&d.args)),
        Struct => write!(s, "struct {} {{{}}}", ty, vs(&d.args)),
        Mux => {
            let (opts, sel) = d.mux_parts();
            write!(s, "mux {} [{}], {}", ty, vs(opts), names.v(sel))
        }
        InsField | ExtField | InsSlice | ExtSlice => {
            let imms: Vec<String> = d.imms.iter().map(|i| i.to_string()).collect();
            write!(s, "{} {} {}, {}", d.opcode, ty, vs(&d.args), imms.join(", "))
        }
        Drv => {
            write!(s, "drv {} {}", ty, vs(&d.args[..3.min(d.args.len())])).unwrap();
            if let Some(c) = d.drv_cond() {
                write!(s, " if {}", names.v(c)).unwrap();
            }
            Ok(())
        }
        Reg => {
            write!(s, "reg {} {}", ty, names.v(d.args[0])).unwrap();
            for t in d.reg_triggers() {
                write!(
                    s,
                    ", [{}, {} {}",
                    names.v(t.value),
                    t.mode.keyword(),
                    names.v(t.trigger)
                )
                .unwrap();
                if let Some(dl) = t.delay {
                    write!(s, " after {}", names.v(dl)).unwrap();
                }
                if let Some(g) = t.gate {
                    write!(s, " if {}", names.v(g)).unwrap();
                }
                s.push(']');
            }
            Ok(())
        }
        Inst => {
            let (ins, outs) = d.inst_ports();
            write!(
                s,
                "inst {} ({}) -> ({})",
                d.callee().unwrap(),
                vs(ins),
                vs(outs)
            )
        }
        Call => write!(s, "call {} {} ({})", ty, d.callee().unwrap(), vs(&d.args)),
        Phi => {
            let arms: Vec<String> = d
                .args
                .iter()
                .zip(&d.blocks)
                .map(|(&v, &b)| format!("[{}, {}]", names.v(v), names.b(b)))
                .collect();
            write!(s, "phi {} {}", ty, arms.join(", "))
        }
        Br => write!(s, "br {}", names.b(d.blocks[0])),
        BrCond => write!(
            s,
            "br {}, {}, {}",
            names.v(d.args[0]),
            names.b(d.blocks[0]),
            names.b(d.blocks[1])
        ),
        Wait => {
            write!(s, "wait {}", names.b(d.blocks[0])).unwrap();
            if let Some(t) = d.wait_time() {
                write!(s, " for {}", names.v(t)).unwrap();
            }
            for &sig in d.wait_signals() {
                write!(s, ", {}", names.v(sig)).unwrap();
            }
            Ok(())
        }
        Halt => write!(s, "halt"),
        Ret => {
            if d.args.is_empty() {
                write!(s, "ret")
            } else {
                write!(s, "ret {} {}", ty, names.v(d.args[0]))
            }
        }
        _ => {
            if matches!(d.extra, Extra::None) && *ty != Type::Void {
                write!(s, "{} {} {}", d.opcode, ty, vs(&d.args))
            } else {
                write!(s, "{} {}", d.opcode, vs(&d.args))
            }
        }
    }
    .unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_module;

    #[test]
    fn uniquifies_and_numbers() {
        let src = "func @f (i8 %a) i8 {\n%entry:\n    %0 = add i8 %a, %a\n    %x = add i8 %0, %a\n    ret i8 %x\n}\n";
        let m = parse_module(src).unwrap();
        assert_eq!(print_module(&m), src);
        let mut m2 = m.clone();
        let id = m2.unit_ids()[0];
        let u = m2.unit_mut(id);
        let v = u.inst_result(u.all_insts().next().unwrap()).unwrap();
        u.set_value_name(v, "x");
        let text = print_module(&m2);
        assert!(text.contains("%x = add i8 %a, %a"));
        assert!(text.contains("%x.1 = add i8 %x, %a"));
    }

    #[test]
    fn time_constants() {
        let src = "entity @e () -> () {\n    %0 = const time 2ns\n    %1 = const time 0s 1d\n}\n";
        let m = parse_module(src).unwrap();
        assert_eq!(print_module(&m), src);
    }
}
