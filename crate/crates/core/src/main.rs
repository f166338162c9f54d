use clap::{Args, Parser, Subcommand};
use hwir::analysis::{expr_of_value, temporal_regions, to_dnf, Atom, Dnf};
use hwir::diag::{Diagnostic, SourceMap};
use hwir::ir::{link, Module, Opcode, UnitData, UnitKind, UnitName};
use hwir::passes::{lower_module, run_pass, PassReport};
use hwir::sim::{elaborate, write_vcd};
use hwir::textio::{parse_module_with_locations, parse_time_literal, print_instruction, print_module, unit_names};
use hwir::verifier::{classify_level, verify, verify_with_locations};
use std::io::{self, Read, Write};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hwir", version, about = "Multi-level hardware IR toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and verify, then print the level of every unit.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// Print the temporal regions of every process and function.
        #[arg(long)]
        dump_trs: bool,
        /// Print drive conditions in disjunctive normal form.
        #[arg(long)]
        dump_dnf: bool,
    },
    /// Run the lowering pipeline or individual passes.
    Opt {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 2)]
        target_level: u8,
        /// Run only the named pass; may be repeated.
        #[arg(long = "pass", value_name = "NAME")]
        passes: Vec<String>,
        /// Where to write the resulting module; `-` is stdout.
        #[arg(long, value_name = "PATH", default_value = "-")]
        emit: String,
        /// Write rejections as `unit<TAB>pass<TAB>reason` lines.
        #[arg(long, value_name = "PATH", num_args = 0..=1, require_equals = true, default_missing_value = "-")]
        report: Option<String>,
        /// Fail if any unit was rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Simulate a design.
    Sim {
        #[command(flatten)]
        inputs: Inputs,
        /// Top-level entity; defaults to the only uninstantiated entity.
        #[arg(long)]
        top: Option<String>,
        /// Stop after this time, e.g. `100ns`.
        #[arg(long)]
        until: Option<String>,
        #[arg(long, value_name = "PATH")]
        vcd: Option<String>,
        #[arg(long, default_value_t = hwir::sim::DEFAULT_MAX_DELTA)]
        max_delta: u32,
        /// Print every signal change.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Link several modules into one.
    Link {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "PATH", default_value = "-")]
        emit: String,
    },
}

#[derive(Args)]
struct Inputs {
    /// Input files; `-` reads stdin.
    #[arg(required = true)]
    files: Vec<String>,
}

/// Failure with the exit code it maps to.
struct Fail(u8);

type CliResult<T> = Result<T, Fail>;

fn usage(msg: impl std::fmt::Display) -> Fail {
    eprintln!("error: {}", msg);
    Fail(2)
}

fn read_input(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| usage(format!("reading stdin: {}", e)))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {}", path, e)))
    }
}

fn report_diags(file: &str, text: Option<&str>, diags: &[Diagnostic]) {
    let map = text.map(SourceMap::new);
    for d in diags {
        eprintln!("{}", d.render(file, map.as_ref()));
    }
}

/// Parse, link, and verify the inputs. `fail_code` is returned on
/// diagnostics.
fn load(inputs: &Inputs, fail_code: u8) -> CliResult<Module> {
    let mut modules = vec![];
    for f in &inputs.files {
        let text = read_input(f)?;
        let name = if f == "-" { "<stdin>" } else { f.as_str() };
        match parse_module_with_locations(&text) {
            Ok((m, locs)) => {
                if inputs.files.len() == 1 {
                    let diags = verify_with_locations(&m, Some(&locs));
                    report_diags(name, Some(&text), &diags);
                    if diags.iter().any(|d| d.is_error()) {
                        return Err(Fail(fail_code));
                    }
                }
                modules.push(m);
            }
            Err(diags) => {
                report_diags(name, Some(&text), &diags);
                return Err(Fail(fail_code));
            }
        }
    }
    if modules.len() == 1 {
        return Ok(modules.pop().unwrap());
    }
    let m = link(modules).map_err(|e| {
        eprintln!("error: {}", e);
        Fail(fail_code)
    })?;
    let diags = verify(&m);
    report_diags("<linked>", None, &diags);
    if diags.iter().any(|d| d.is_error()) {
        return Err(Fail(fail_code));
    }
    Ok(m)
}

fn write_output(path: &str, text: &str) -> CliResult<()> {
    if path == "-" {
        io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("writing stdout: {}", e)))
    } else {
        std::fs::write(path, text).map_err(|e| usage(format!("{}: {}", path, e)))
    }
}

fn dump_trs(unit: &UnitData) -> String {
    let names = unit_names(unit);
    let trs = match temporal_regions(unit) {
        Ok(t) => t,
        Err(e) => return format!("{}: {}\n", unit.name, e),
    };
    let list = |bs: &[hwir::ir::Block]| bs.iter().map(|&b| names.block(b)).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    for (i, r) in trs.regions().iter().enumerate() {
        out += &format!(
            "{}: tr{} head {} blocks {} exiting {}\n",
            unit.name,
            i,
            names.block(r.head),
            list(&r.blocks),
            list(&r.exiting)
        );
    }
    out
}

fn render_dnf(unit: &UnitData, dnf: &Dnf) -> String {
    let names = unit_names(unit);
    if dnf.is_false() {
        return "false".into();
    }
    if dnf.is_true() {
        return "true".into();
    }
    let atom = |a: &Atom| match *a {
        Atom::Value(v) => names.value(v),
        Atom::Eq(x, y) => format!("({} == {})", names.value(x), names.value(y)),
    };
    dnf.terms
        .iter()
        .map(|t| {
            t.iter()
                .map(|l| format!("{}{}", if l.positive { "" } else { "!" }, atom(&l.atom)))
                .collect::<Vec<_>>()
                .join(" & ")
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn dump_dnf(unit: &UnitData) -> String {
    let mut out = String::new();
    for i in unit.all_insts() {
        let d = unit.inst_data(i);
        if d.opcode != Opcode::Drv {
            continue;
        }
        if let Some(c) = d.drv_cond() {
            let dnf = to_dnf(&expr_of_value(unit, c));
            out += &format!("{}: {}: {}\n", unit.name, print_instruction(unit, i), render_dnf(unit, &dnf));
        }
    }
    out
}

fn check(inputs: Inputs, trs: bool, dnf: bool) -> CliResult<()> {
    let m = load(&inputs, 1)?;
    let report = classify_level(&m).map_err(|d| {
        report_diags("<module>", None, &d);
        Fail(1)
    })?;
    let mut out = report.to_string();
    for (_, u) in m.units() {
        if trs && !u.is_entity() {
            out += &dump_trs(u);
        }
        if dnf {
            out += &dump_dnf(u);
        }
    }
    write_output("-", &out)
}

fn print_rejections(report: &PassReport) {
    for r in &report.rejections {
        eprintln!("warning: {} rejected by {}: {}", r.unit, r.pass, r.message);
        if let Some(i) = &r.inst {
            eprintln!("  at: {}", i);
        }
    }
}

fn opt(
    inputs: Inputs,
    target: u8,
    passes: Vec<String>,
    emit: String,
    report_to: Option<String>,
    strict: bool,
) -> CliResult<()> {
    if !(1..=3).contains(&target) {
        return Err(usage(format!("invalid target level {}; expected 1, 2, or 3", target)));
    }
    let mut m = load(&inputs, 1)?;
    let mut report = PassReport::default();
    if passes.is_empty() {
        match lower_module(&mut m, target) {
            Ok(r) => report = r,
            Err(e) => {
                eprintln!("error: {}", e);
                return Err(Fail(1));
            }
        }
    } else {
        for p in &passes {
            let r = run_pass(&mut m, p).map_err(usage)?;
            report.changed |= r.changed;
            report.rejections.extend(r.rejections);
        }
    }
    print_rejections(&report);
    write_output(&emit, &print_module(&m))?;
    if let Some(path) = report_to {
        write_output(&path, &report.render())?;
    }
    if strict && !report.rejections.is_empty() {
        return Err(Fail(1));
    }
    Ok(())
}

fn default_top(m: &Module) -> Result<UnitName, String> {
    let mut used = std::collections::HashSet::new();
    for (_, u) in m.units() {
        for i in u.all_insts() {
            let d = u.inst_data(i);
            if d.opcode == Opcode::Inst {
                used.insert(d.callee().unwrap().clone());
            }
        }
    }
    let tops: Vec<UnitName> = m
        .units()
        .filter(|(_, u)| u.kind == UnitKind::Entity && !used.contains(&u.name))
        .map(|(_, u)| u.name.clone())
        .collect();
    match &tops[..] {
        [t] => Ok(t.clone()),
        [] => Err("no top-level entity found; use --top".into()),
        _ => Err(format!(
            "several candidate top-level entities ({}); use --top",
            tops.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        )),
    }
}

fn parse_unit_name(s: &str) -> UnitName {
    match s.strip_prefix('%') {
        Some(l) => UnitName::local(l),
        None => UnitName::global(s.strip_prefix('@').unwrap_or(s)),
    }
}

#[allow(clippy::too_many_arguments)]
fn sim(
    inputs: Inputs,
    top: Option<String>,
    until: Option<String>,
    vcd: Option<String>,
    max_delta: u32,
    trace: bool,
    quiet: bool,
) -> CliResult<()> {
    let until = match until {
        Some(t) => Some(parse_time_literal(&t).map_err(|d| usage(format!("--until: {}", d.message)))?),
        None => None,
    };
    let m = load(&inputs, 2)?;
    let top = match top {
        Some(t) => parse_unit_name(&t),
        None => default_top(&m).map_err(usage)?,
    };
    let mut s = elaborate(&m, &top).map_err(|e| {
        eprintln!("error: {}", e);
        Fail(2)
    })?;
    s.set_max_delta(max_delta);
    let result = s.run(until);
    if let Some(path) = &vcd {
        let mut buf = vec![];
        write_vcd(s.trace(), &mut buf).map_err(|e| usage(format!("{}: {}", path, e)))?;
        std::fs::write(path, buf).map_err(|e| usage(format!("{}: {}", path, e)))?;
    }
    let summary = result.map_err(|e| {
        eprintln!("error: {}", e);
        Fail(2)
    })?;
    if trace {
        let names: Vec<String> = s.trace().signals.iter().map(|x| x.full_name()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        write_output("-", &s.trace().render(&refs))?;
    }
    for w in &summary.warnings {
        eprintln!("warning: {}", w);
    }
    for f in &summary.assertion_failures {
        eprintln!("error: {}", f);
    }
    if !quiet {
        println!(
            "{} at {}: {} steps, {} signal changes, {} assertion failures",
            if summary.finished { "finished" } else { "stopped" },
            summary.end_time,
            summary.steps,
            summary.changes,
            summary.assertion_failures.len()
        );
    }
    if summary.assertion_failures.is_empty() {
        Ok(())
    } else {
        Err(Fail(1))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let r = match cli.command {
        Command::Check { inputs, dump_trs, dump_dnf } => check(inputs, dump_trs, dump_dnf),
        Command::Opt { inputs, target_level, passes, emit, report, strict } => {
            opt(inputs, target_level, passes, emit, report, strict)
        }
        Command::Sim { inputs, top, until, vcd, max_delta, trace, quiet } => {
            sim(inputs, top, until, vcd, max_delta, trace, quiet)
        }
        Command::Link { inputs, emit } => load(&inputs, 1).and_then(|m| write_output(&emit, &print_module(&m))),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(c)) => ExitCode::from(c),
    }
}
