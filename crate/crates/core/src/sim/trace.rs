//! Recorded signal changes and VCD output.

use crate::ir::{Leaf, TimeValue, Type, Val};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

/// A simulated signal as it appears in traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalInfo {
    /// Instance path of the defining scope, outermost first.
    pub scope: Vec<String>,
    pub name: String,
    /// Further names this signal is known by after `con` merged it with
    /// others, as (scope, name).
    pub aliases: Vec<(Vec<String>, String)>,
    pub ty: Type,
    pub init: Val,
}

impl SignalInfo {
    pub fn full_name(&self) -> String {
        join_name(&self.scope, &self.name)
    }

    pub fn all_names(&self) -> Vec<String> {
        let mut out = vec![self.full_name()];
        out.extend(self.aliases.iter().map(|(s, n)| join_name(s, n)));
        out
    }
}

fn join_name(scope: &[String], name: &str) -> String {
    let mut s = scope.join(".");
    if !s.is_empty() {
        s.push('.');
    }
    s.push_str(name);
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: TimeValue,
    pub signal: usize,
    pub value: Val,
}

/// Committed signal changes in time order. At most one record exists per
/// signal and timestamp.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub signals: Vec<SignalInfo>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Find a signal by its full hierarchical name or one of its aliases.
    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals
            .iter()
            .position(|s| s.all_names().iter().any(|n| n == name))
    }

    /// Changes of one signal, in time order.
    pub fn changes(&self, signal: usize) -> Vec<(TimeValue, Val)> {
        self.records
            .iter()
            .filter(|r| r.signal == signal)
            .map(|r| (r.time, r.value.clone()))
            .collect()
    }

    pub fn changes_of(&self, name: &str) -> Option<Vec<(TimeValue, Val)>> {
        self.signal_index(name).map(|i| self.changes(i))
    }

    /// Text rendering of the initial values and changes of the named signals,
    /// one line per event. Names are printed as given, so traces of different
    /// designs can be compared through a shared set of names.
    pub fn render(&self, names: &[&str]) -> String {
        let mut out = String::new();
        let idx: Vec<Option<usize>> = names.iter().map(|n| self.signal_index(n)).collect();
        for (n, i) in names.iter().zip(&idx) {
            match i {
                Some(i) => writeln!(out, "init {} {}", n, self.signals[*i].init).unwrap(),
                None => writeln!(out, "init {} <missing>", n).unwrap(),
            }
        }
        for r in &self.records {
            for (n, i) in names.iter().zip(&idx) {
                if *i == Some(r.signal) {
                    writeln!(out, "{} {} {}", r.time, n, r.value).unwrap();
                }
            }
        }
        out
    }
}

/// How a signal is dumped: as a bit vector of the given width, or as a real
/// number of femtoseconds.
enum VcdKind {
    Bits(usize),
    Real,
}

fn vcd_kind(ty: &Type) -> Option<VcdKind> {
    match ty {
        Type::Time => Some(VcdKind::Real),
        Type::Enum(n) => Some(VcdKind::Bits(enum_bits(*n))),
        _ => {
            let leaves = Val::default_of(ty).flatten();
            if !leaves.is_empty() && leaves.iter().all(|l| matches!(l, Leaf::Bit(_) | Leaf::Digit(_))) {
                Some(VcdKind::Bits(leaves.len()))
            } else {
                None
            }
        }
    }
}

fn enum_bits(n: usize) -> usize {
    let mut bits = 1;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

fn vcd_value(v: &Val, kind: &VcdKind, code: &str) -> String {
    match (kind, v) {
        (VcdKind::Real, Val::Time(t)) => format!("r{} {}", t.fs, code),
        (VcdKind::Bits(w), Val::Enum(x)) => {
            let s: String = (0..*w).rev().map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect();
            format!("b{} {}", s, code)
        }
        (VcdKind::Bits(w), v) => {
            let chars: String = v
                .flatten()
                .iter()
                .rev()
                .map(|l| match l {
                    Leaf::Bit(b) => {
                        if *b {
                            '1'
                        } else {
                            '0'
                        }
                    }
                    Leaf::Digit(d) => d.vcd_char(),
                    _ => 'x',
                })
                .collect();
            if *w == 1 {
                format!("{}{}", chars, code)
            } else {
                format!("b{} {}", chars, code)
            }
        }
        (VcdKind::Real, _) => format!("r0 {}", code),
    }
}

fn id_code(mut i: usize) -> String {
    // Printable ASCII from `!` to `~`.
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s
}

#[derive(Default)]
struct ScopeNode {
    children: BTreeMap<String, ScopeNode>,
    vars: Vec<(String, String, String)>,
}

fn write_scope(out: &mut String, name: &str, node: &ScopeNode) {
    writeln!(out, "$scope module {} $end", name).unwrap();
    for (kind, code, var) in &node.vars {
        writeln!(out, "$var {} {} {} $end", kind, code, var).unwrap();
    }
    for (n, child) in &node.children {
        write_scope(out, n, child);
    }
    writeln!(out, "$upscope $end").unwrap();
}

/// Write a trace as a VCD file with a timescale of 1 fs. Delta and epsilon
/// steps are collapsed: only the last value per physical timestamp is
/// dumped. Signals without a bit-level representation are omitted.
pub fn write_vcd(trace: &Trace, sink: &mut dyn Write) -> io::Result<()> {
    let mut out = String::new();
    writeln!(out, "$timescale 1fs $end").unwrap();
    let kinds: Vec<Option<VcdKind>> = trace.signals.iter().map(|s| vcd_kind(&s.ty)).collect();
    let codes: Vec<String> = (0..trace.signals.len()).map(id_code).collect();
    let mut root = ScopeNode::default();
    for (i, s) in trace.signals.iter().enumerate() {
        let kind = match &kinds[i] {
            Some(k) => k,
            None => continue,
        };
        let (vk, width) = match kind {
            VcdKind::Real => ("real", 64),
            VcdKind::Bits(w) => ("wire", *w),
        };
        let names = std::iter::once((&s.scope, &s.name)).chain(s.aliases.iter().map(|(a, b)| (a, b)));
        for (scope, name) in names {
            let mut node = &mut root;
            for part in scope {
                node = node.children.entry(part.clone()).or_default();
            }
            node.vars
                .push((format!("{} {}", vk, width), codes[i].clone(), name.clone()));
        }
    }
    for (n, child) in &root.children {
        write_scope(&mut out, n, child);
    }
    if !root.vars.is_empty() {
        write_scope(&mut out, "top", &ScopeNode {
            children: BTreeMap::new(),
            vars: root.vars.clone(),
        });
    }
    writeln!(out, "$enddefinitions $end").unwrap();

    // Final value per signal at each physical timestamp.
    let mut current: Vec<Val> = trace.signals.iter().map(|s| s.init.clone()).collect();
    let mut emitted: Vec<Option<Val>> = vec![None; trace.signals.len()];
    let mut i = 0;
    let recs = &trace.records;
    // Everything at fs 0 folds into the initial dump.
    while i < recs.len() && recs[i].time.fs == 0 {
        current[recs[i].signal] = recs[i].value.clone();
        i += 1;
    }
    writeln!(out, "#0").unwrap();
    writeln!(out, "$dumpvars").unwrap();
    for (s, k) in kinds.iter().enumerate() {
        if let Some(k) = k {
            writeln!(out, "{}", vcd_value(&current[s], k, &codes[s])).unwrap();
            emitted[s] = Some(current[s].clone());
        }
    }
    writeln!(out, "$end").unwrap();
    while i < recs.len() {
        let fs = recs[i].time.fs;
        let mut touched = vec![];
        while i < recs.len() && recs[i].time.fs == fs {
            current[recs[i].signal] = recs[i].value.clone();
            touched.push(recs[i].signal);
            i += 1;
        }
        touched.sort_unstable();
        touched.dedup();
        let mut lines = vec![];
        for s in touched {
            if let Some(k) = &kinds[s] {
                if emitted[s].as_ref() != Some(&current[s]) {
                    lines.push(vcd_value(&current[s], k, &codes[s]));
                    emitted[s] = Some(current[s].clone());
                }
            }
        }
        if !lines.is_empty() {
            writeln!(out, "#{}", fs).unwrap();
            for l in lines {
                writeln!(out, "{}", l).unwrap();
            }
        }
        // Flush periodically so long traces do not build one huge string.
        if out.len() > 1 << 20 {
            sink.write_all(out.as_bytes())?;
            out.clear();
        }
    }
    sink.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_unique() {
        let codes: std::collections::HashSet<String> = (0..20000).map(id_code).collect();
        assert_eq!(codes.len(), 20000);
        assert_eq!(id_code(0), "!");
    }

    #[test]
    fn toggles() {
        let t = Trace {
            signals: vec![SignalInfo {
                scope: vec!["top".into()],
                name: "clk".into(),
                aliases: vec![],
                ty: Type::Int(1),
                init: Val::from_bool(false),
            }],
            records: vec![
                TraceRecord {
                    time: TimeValue::from_ns(1),
                    signal: 0,
                    value: Val::from_bool(true),
                },
                TraceRecord {
                    time: TimeValue::new(2_000_000, 0, 1),
                    signal: 0,
                    value: Val::from_bool(false),
                },
            ],
        };
        let mut buf = vec![];
        write_vcd(&t, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("$var wire 1 ! clk $end"));
        assert!(s.contains("#1000000\n1!\n#2000000\n0!\n"), "{}", s);
    }
}
