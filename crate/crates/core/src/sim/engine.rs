//! Elaboration and the discrete-event loop.

use super::trace::{SignalInfo, Trace, TraceRecord};
use crate::ir::logic::resolve_all;
use crate::ir::value::shift_leaves;
use crate::ir::{
    eval_pure, Block, Inst, InstData, Leaf, Module, Opcode, RegMode, TimeValue, Type, UnitData,
    UnitId, UnitKind, UnitName, Val, Value,
};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

pub const DEFAULT_MAX_DELTA: u32 = 10_000;

/// Instructions a process may execute between two suspensions before it is
/// considered stuck.
const MAX_ACTIVATION_STEPS: u64 = 50_000_000;
const MAX_CALL_DEPTH: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("elaboration failed: {0}")]
    Elaboration(String),
    #[error("more than {limit} delta steps at {time}; oscillating signals: {signals}")]
    DeltaLimit {
        limit: u32,
        time: TimeValue,
        signals: String,
    },
    #[error("conflicting drivers on `{signal}` at {time}")]
    Conflict { signal: String, time: TimeValue },
    #[error("{0}")]
    Runtime(String),
}

type SResult<T> = Result<T, SimError>;

/// A (signal, leaf) position.
type LeafRef = (u32, u32);

#[derive(Clone, Debug)]
struct SigRef {
    ty: Type,
    leaves: Arc<[LeafRef]>,
}

#[derive(Clone, Debug)]
struct PtrRef {
    ty: Type,
    slot: usize,
    leaves: Arc<[u32]>,
}

#[derive(Clone, Debug)]
enum RVal {
    Data(Val),
    Sig(SigRef),
    Ptr(PtrRef),
}

impl RVal {
    fn data(&self) -> SResult<&Val> {
        match self {
            RVal::Data(v) => Ok(v),
            _ => Err(SimError::Runtime("expected a data value".into())),
        }
    }

    fn sig(&self) -> SResult<&SigRef> {
        match self {
            RVal::Sig(s) => Ok(s),
            _ => Err(SimError::Runtime("expected a signal".into())),
        }
    }
}

struct Signal {
    info: SignalInfo,
    /// `Some(c)` once merged into signal `c` by `con`.
    merged_into: Option<u32>,
    init: Vec<Leaf>,
    value: Vec<Leaf>,
    /// Per driver: the last value it drove onto each leaf.
    slots: Vec<(usize, Vec<Option<Leaf>>)>,
}

enum InstanceKind {
    Entity {
        order: Arc<[Inst]>,
        /// Previous trigger samples of each `reg`.
        reg_prev: HashMap<Inst, Vec<Option<bool>>>,
        sensitivity: Vec<u32>,
    },
    Process {
        block: Block,
        prev: Option<Block>,
        halted: bool,
        observed: Vec<LeafRef>,
        gen: u64,
    },
}

struct Instance {
    unit: UnitId,
    path: Vec<String>,
    env: Vec<Option<RVal>>,
    kind: InstanceKind,
}

struct DelDriver {
    src: SigRef,
    dst: SigRef,
    delay: TimeValue,
}

enum Event {
    Drive {
        driver: usize,
        leaves: Vec<(LeafRef, Leaf)>,
    },
    Wake {
        inst: usize,
        gen: u64,
    },
}

/// Counters and diagnostics of a run.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub assertion_failures: Vec<String>,
    pub warnings: Vec<String>,
    /// Distinct timestamps processed.
    pub steps: u64,
    /// Committed signal changes.
    pub changes: u64,
    pub end_time: TimeValue,
    /// The event queue ran dry.
    pub finished: bool,
    pub wall: Duration,
}

enum Flow {
    Next,
    Jump(Block),
    Wait,
    Halt,
    Ret(Option<RVal>),
}

/// Driver key for values forced from outside the design.
const EXTERNAL_DRIVER: usize = usize::MAX;
/// Driver keys of `del` instances start here.
const DEL_DRIVER_BASE: usize = usize::MAX / 2;

/// An elaborated design ready to run.
pub struct Simulator {
    module: Arc<Module>,
    signals: Vec<Signal>,
    instances: Vec<Instance>,
    entities: Vec<usize>,
    processes: Vec<usize>,
    dels: Vec<DelDriver>,
    heap: Vec<Option<Vec<Leaf>>>,
    queue: BTreeMap<TimeValue, Vec<Event>>,
    now: TimeValue,
    initialized: bool,
    trace: Trace,
    /// Map from signal id to trace index.
    trace_index: Vec<usize>,
    max_delta: u32,
    deltas_here: u32,
    summary: Summary,
    warned: HashSet<String>,
    depth: usize,
}

fn err<T>(msg: impl Into<String>) -> SResult<T> {
    Err(SimError::Runtime(msg.into()))
}

/// Instruction order of an entity body in which every operand is computed
/// before its use.
fn topo_order(unit: &UnitData) -> Vec<Inst> {
    let body = unit.body();
    let insts = unit.insts(body).to_vec();
    let mut state: HashMap<Inst, u8> = HashMap::new();
    let mut out = Vec::with_capacity(insts.len());
    for &root in &insts {
        if state.contains_key(&root) {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state.insert(root, 1);
        while let Some(top) = stack.last_mut() {
            let inst = top.0;
            let args = &unit.inst_data(inst).args;
            if let Some(&a) = args.get(top.1) {
                top.1 += 1;
                if let Some(def) = unit.def_inst(a) {
                    if unit.inst_block(def) == Some(body) && !state.contains_key(&def) {
                        state.insert(def, 1);
                        stack.push((def, 0));
                    }
                }
            } else {
                state.insert(inst, 2);
                out.push(inst);
                stack.pop();
            }
        }
    }
    out
}

/// Elaborate the design rooted at `top`: instantiate the hierarchy and create
/// all signals with their initial values.
pub fn elaborate(module: &Module, top: &UnitName) -> SResult<Simulator> {
    let module = Arc::new(module.clone());
    let id = module
        .lookup(top)
        .ok_or_else(|| SimError::Elaboration(format!("unknown top unit `{}`", top)))?;
    let unit = module.unit(id);
    if unit.kind == UnitKind::Function {
        return Err(SimError::Elaboration(format!(
            "top unit `{}` is a function",
            top
        )));
    }
    let mut sim = Simulator {
        module: module.clone(),
        signals: vec![],
        instances: vec![],
        entities: vec![],
        processes: vec![],
        dels: vec![],
        heap: vec![],
        queue: BTreeMap::new(),
        now: TimeValue::ZERO,
        initialized: false,
        trace: Trace::default(),
        trace_index: vec![],
        max_delta: DEFAULT_MAX_DELTA,
        deltas_here: 0,
        summary: Summary::default(),
        warned: HashSet::new(),
        depth: 0,
    };
    let scope = vec![top.as_str().to_string()];
    let mut ports = vec![];
    for (i, a) in unit.args().enumerate() {
        let ty = unit.value_type(a).inner().cloned().unwrap_or(Type::Void);
        let name = unit
            .value_name(a)
            .map(String::from)
            .unwrap_or_else(|| format!("port{}", i));
        let init = Val::default_of(&ty);
        ports.push(sim.new_signal(scope.clone(), name, ty, init));
    }
    let mut cons = vec![];
    let mut stack = vec![];
    sim.instantiate(id, scope, ports, &mut stack, &mut cons)?;
    sim.apply_cons(cons)?;
    sim.build_trace_table();
    Ok(sim)
}

impl Simulator {
    fn new_signal(&mut self, scope: Vec<String>, name: String, ty: Type, init: Val) -> SigRef {
        let id = self.signals.len() as u32;
        let leaves = init.flatten();
        let n = leaves.len() as u32;
        self.signals.push(Signal {
            info: SignalInfo {
                scope,
                name,
                aliases: vec![],
                ty: ty.clone(),
                init,
            },
            merged_into: None,
            init: leaves.clone(),
            value: leaves,
            slots: vec![],
        });
        SigRef {
            ty,
            leaves: (0..n).map(|l| (id, l)).collect(),
        }
    }

    fn instantiate(
        &mut self,
        id: UnitId,
        path: Vec<String>,
        ports: Vec<SigRef>,
        stack: &mut Vec<UnitId>,
        cons: &mut Vec<(SigRef, SigRef)>,
    ) -> SResult<()> {
        let module = self.module.clone();
        let unit = module.unit(id);
        if stack.contains(&id) {
            return Err(SimError::Elaboration(format!(
                "`{}` instantiates itself",
                unit.name
            )));
        }
        let mut env: Vec<Option<RVal>> = vec![None; unit.value_count()];
        for (a, p) in unit.args().zip(ports) {
            env[a.index()] = Some(RVal::Sig(p));
        }
        let idx = self.instances.len();
        let kind = match unit.kind {
            UnitKind::Process => {
                self.processes.push(idx);
                InstanceKind::Process {
                    block: unit.entry().ok_or_else(|| {
                        SimError::Elaboration(format!("process `{}` has no blocks", unit.name))
                    })?,
                    prev: None,
                    halted: false,
                    observed: vec![],
                    gen: 0,
                }
            }
            UnitKind::Entity => {
                self.entities.push(idx);
                InstanceKind::Entity {
                    order: topo_order(unit).into(),
                    reg_prev: HashMap::new(),
                    sensitivity: vec![],
                }
            }
            UnitKind::Function => {
                return Err(SimError::Elaboration(format!(
                    "cannot instantiate function `{}`",
                    unit.name
                )))
            }
        };
        self.instances.push(Instance {
            unit: id,
            path: path.clone(),
            env: vec![],
            kind,
        });
        if unit.kind == UnitKind::Entity {
            stack.push(id);
            let order = topo_order(unit);
            let mut child_names: HashMap<String, usize> = HashMap::new();
            let mut anon = 0;
            for inst in order {
                let d = unit.inst_data(inst);
                match d.opcode {
                    Opcode::Sig => {
                        let init = env[d.args[0].index()]
                            .as_ref()
                            .ok_or_else(|| SimError::Elaboration("signal without initial value".into()))?
                            .data()?
                            .clone();
                        let r = unit.inst_result(inst).unwrap();
                        let name = match unit.value_name(r) {
                            Some(n) => n.to_string(),
                            None => {
                                anon += 1;
                                format!("sig{}", anon - 1)
                            }
                        };
                        let s = self.new_signal(path.clone(), name, d.ty.clone(), init);
                        env[r.index()] = Some(RVal::Sig(s));
                    }
                    Opcode::Del => {
                        let src = env[d.args[0].index()].as_ref().unwrap().sig()?.clone();
                        let delay = env[d.args[1].index()].as_ref().unwrap().data()?.as_time().unwrap_or_default();
                        let init = self.read(&src);
                        let r = unit.inst_result(inst).unwrap();
                        let name = match unit.value_name(r) {
                            Some(n) => n.to_string(),
                            None => {
                                anon += 1;
                                format!("sig{}", anon - 1)
                            }
                        };
                        let dst = self.new_signal(path.clone(), name, src.ty.clone(), init);
                        self.dels.push(DelDriver {
                            src,
                            dst: dst.clone(),
                            delay,
                        });
                        env[r.index()] = Some(RVal::Sig(dst));
                    }
                    Opcode::Con => {
                        let a = env[d.args[0].index()].as_ref().unwrap().sig()?.clone();
                        let b = env[d.args[1].index()].as_ref().unwrap().sig()?.clone();
                        cons.push((a, b));
                    }
                    Opcode::Inst => {
                        let target = d.callee().unwrap();
                        let tid = module.lookup(target).ok_or_else(|| {
                            SimError::Elaboration(format!(
                                "`{}` instantiates `{}`, which has no definition",
                                unit.name, target
                            ))
                        })?;
                        let mut ports = vec![];
                        for a in &d.args {
                            ports.push(
                                env[a.index()]
                                    .as_ref()
                                    .ok_or_else(|| SimError::Elaboration("unbound port".into()))?
                                    .sig()?
                                    .clone(),
                            );
                        }
                        let base = target.as_str().to_string();
                        let k = child_names.entry(base.clone()).or_insert(0);
                        let name = if *k == 0 { base } else { format!("{}_{}", base, k) };
                        *k += 1;
                        let mut child_path = path.clone();
                        child_path.push(name);
                        self.instantiate(tid, child_path, ports, stack, cons)?;
                    }
                    Opcode::Drv | Opcode::Reg | Opcode::Call => {}
                    Opcode::Prb => {
                        let s = env[d.args[0].index()].as_ref().unwrap().sig()?.clone();
                        let v = self.read(&s);
                        env[unit.inst_result(inst).unwrap().index()] = Some(RVal::Data(v));
                    }
                    _ => {
                        let v = self.eval_value(d, &env)?;
                        if let Some(r) = unit.inst_result(inst) {
                            env[r.index()] = Some(v);
                        }
                    }
                }
            }
            stack.pop();
        }
        self.instances[idx].env = env;
        Ok(())
    }

    fn apply_cons(&mut self, cons: Vec<(SigRef, SigRef)>) -> SResult<()> {
        if cons.is_empty() {
            return Ok(());
        }
        let n = self.signals.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                p[x as usize] = p[p[x as usize] as usize];
                x = p[x as usize];
            }
            x
        }
        for (a, b) in &cons {
            let whole = |r: &SigRef| -> Option<u32> {
                let s = r.leaves.first().map(|l| l.0)?;
                let len = self.signals[s as usize].value.len();
                let ok = r.leaves.len() == len
                    && r.leaves.iter().enumerate().all(|(i, &(x, l))| x == s && l as usize == i);
                ok.then_some(s)
            };
            let (sa, sb) = match (whole(a), whole(b)) {
                (Some(x), Some(y)) => (x, y),
                _ => {
                    return Err(SimError::Elaboration(
                        "`con` of a projected signal is not supported".into(),
                    ))
                }
            };
            let (ra, rb) = (find(&mut parent, sa), find(&mut parent, sb));
            if ra != rb {
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                parent[hi as usize] = lo;
            }
        }
        let canon: Vec<u32> = (0..n as u32).map(|s| find(&mut parent, s)).collect();
        for s in 0..n {
            let c = canon[s];
            if c as usize != s {
                self.signals[s].merged_into = Some(c);
                let info = self.signals[s].info.clone();
                let target = &mut self.signals[c as usize].info;
                target.aliases.push((info.scope, info.name));
                target.aliases.extend(info.aliases);
            }
        }
        let remap = |r: &SigRef| SigRef {
            ty: r.ty.clone(),
            leaves: r.leaves.iter().map(|&(s, l)| (canon[s as usize], l)).collect(),
        };
        for inst in &mut self.instances {
            for v in inst.env.iter_mut().flatten() {
                if let RVal::Sig(r) = v {
                    *r = remap(r);
                }
            }
        }
        for d in &mut self.dels {
            d.src = remap(&d.src);
            d.dst = remap(&d.dst);
        }
        Ok(())
    }

    fn build_trace_table(&mut self) {
        self.trace_index = vec![usize::MAX; self.signals.len()];
        for (i, s) in self.signals.iter().enumerate() {
            if s.merged_into.is_none() {
                self.trace_index[i] = self.trace.signals.len();
                self.trace.signals.push(s.info.clone());
            }
        }
    }

    // ---- public interface ---------------------------------------------------

    pub fn set_max_delta(&mut self, n: u32) {
        self.max_delta = n;
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Trace {
        Trace {
            signals: self.trace.signals.clone(),
            records: std::mem::take(&mut self.trace.records),
        }
    }

    pub fn now(&self) -> TimeValue {
        self.now
    }

    pub fn summary(&self) -> &Summary {
        &self.summary
    }

    /// Hierarchical paths of all instances, in creation order.
    pub fn instance_paths(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.path.join(".")).collect()
    }

    /// Full names of all signals after `con` merging.
    pub fn signal_names(&self) -> Vec<String> {
        self.trace.signals.iter().map(|s| s.full_name()).collect()
    }

    fn signal_by_name(&self, name: &str) -> Option<u32> {
        let t = self.trace.signal_index(name)?;
        self.trace_index.iter().position(|&x| x == t).map(|s| s as u32)
    }

    /// Current value of a signal by full name.
    pub fn value_of(&self, name: &str) -> Option<Val> {
        let s = self.signal_by_name(name)?;
        let sig = &self.signals[s as usize];
        Some(Val::unflatten(&sig.info.ty, &sig.value))
    }

    /// Schedule a change of a signal from outside the design, e.g. to apply
    /// stimulus to the ports of the top unit. External drives act as one
    /// additional driver of the signal.
    pub fn drive_external(&mut self, name: &str, value: &Val, at: TimeValue) -> SResult<()> {
        let s = self
            .signal_by_name(name)
            .ok_or_else(|| SimError::Runtime(format!("no signal named `{}`", name)))?;
        let leaves = value.flatten();
        if leaves.len() != self.signals[s as usize].value.len() {
            return err(format!("value does not fit signal `{}`", name));
        }
        if at < self.now {
            return err("cannot schedule a drive in the past");
        }
        let ev = Event::Drive {
            driver: EXTERNAL_DRIVER,
            leaves: leaves
                .into_iter()
                .enumerate()
                .map(|(i, l)| ((s, i as u32), l))
                .collect(),
        };
        self.queue.entry(at).or_default().push(ev);
        Ok(())
    }

    /// Run until the event queue is empty or the next event lies beyond the
    /// physical time of `until`.
    pub fn run(&mut self, until: Option<TimeValue>) -> SResult<Summary> {
        let start = Instant::now();
        if !self.initialized {
            self.initialized = true;
            self.initialize()?;
        }
        self.summary.finished = false;
        loop {
            let t = match self.queue.keys().next() {
                Some(&t) => t,
                None => {
                    self.summary.finished = true;
                    break;
                }
            };
            if let Some(u) = until {
                if t.fs > u.fs {
                    break;
                }
            }
            let events = self.queue.remove(&t).unwrap();
            self.step(t, events)?;
        }
        self.summary.end_time = self.now;
        self.summary.wall += start.elapsed();
        Ok(self.summary.clone())
    }

    // ---- event loop -------------------------------------------------------

    fn initialize(&mut self) -> SResult<()> {
        self.now = TimeValue::ZERO;
        self.summary.steps += 1;
        for i in 0..self.entities.len() {
            let idx = self.entities[i];
            self.eval_entity(idx, true)?;
        }
        for i in 0..self.processes.len() {
            let idx = self.processes[i];
            self.run_process(idx)?;
        }
        Ok(())
    }

    fn step(&mut self, t: TimeValue, events: Vec<Event>) -> SResult<()> {
        if t.fs == self.now.fs {
            self.deltas_here += 1;
        } else {
            self.deltas_here = 0;
        }
        self.now = t;
        self.summary.steps += 1;

        let mut dirty: Vec<u32> = vec![];
        let mut wakes: HashSet<usize> = HashSet::new();
        for ev in events {
            match ev {
                Event::Drive { driver, leaves } => {
                    for ((s, l), leaf) in leaves {
                        let sig = &mut self.signals[s as usize];
                        let slot = match sig.slots.iter().position(|(k, _)| *k == driver) {
                            Some(i) => i,
                            None => {
                                let n = sig.value.len();
                                sig.slots.push((driver, vec![None; n]));
                                sig.slots.len() - 1
                            }
                        };
                        sig.slots[slot].1[l as usize] = Some(leaf);
                        dirty.push(s);
                    }
                }
                Event::Wake { inst, gen } => {
                    if let InstanceKind::Process {
                        halted: false,
                        gen: g,
                        ..
                    } = &self.instances[inst].kind
                    {
                        if *g == gen {
                            wakes.insert(inst);
                        }
                    }
                }
            }
        }
        dirty.sort_unstable();
        dirty.dedup();

        let mut changed_leaves: HashSet<LeafRef> = HashSet::new();
        let mut changed: Vec<u32> = vec![];
        for s in dirty {
            let new = self.resolve(s)?;
            let sig = &mut self.signals[s as usize];
            let mut any = false;
            for (l, (old, new)) in sig.value.iter().zip(&new).enumerate() {
                if old != new {
                    changed_leaves.insert((s, l as u32));
                    any = true;
                }
            }
            if any {
                sig.value = new;
                changed.push(s);
                let value = Val::unflatten(&sig.info.ty, &sig.value);
                self.trace.records.push(TraceRecord {
                    time: t,
                    signal: self.trace_index[s as usize],
                    value,
                });
                self.summary.changes += 1;
            }
        }
        if self.deltas_here > self.max_delta {
            let names: Vec<String> = changed
                .iter()
                .map(|&s| self.signals[s as usize].info.full_name())
                .collect();
            return Err(SimError::DeltaLimit {
                limit: self.max_delta,
                time: t,
                signals: names.join(", "),
            });
        }

        for i in 0..self.dels.len() {
            let d = &self.dels[i];
            if d.src.leaves.iter().any(|l| changed_leaves.contains(l)) {
                let v = self.read(&d.src);
                let at = t.schedule(d.delay);
                let dst = d.dst.clone();
                self.schedule_drive(DEL_DRIVER_BASE + i, &dst, &v, at);
            }
        }

        if !changed.is_empty() {
            for i in 0..self.entities.len() {
                let idx = self.entities[i];
                let hit = match &self.instances[idx].kind {
                    InstanceKind::Entity { sensitivity, .. } => {
                        sensitivity.iter().any(|s| changed.binary_search(s).is_ok())
                    }
                    _ => false,
                };
                if hit {
                    self.eval_entity(idx, false)?;
                }
            }
        }
        for i in 0..self.processes.len() {
            let idx = self.processes[i];
            let wake = match &self.instances[idx].kind {
                InstanceKind::Process {
                    halted: false,
                    observed,
                    ..
                } => wakes.contains(&idx) || observed.iter().any(|l| changed_leaves.contains(l)),
                _ => false,
            };
            if wake {
                self.run_process(idx)?;
            }
        }
        Ok(())
    }

    fn resolve(&self, s: u32) -> SResult<Vec<Leaf>> {
        let sig = &self.signals[s as usize];
        let n = sig.value.len();
        if sig.slots.len() == 1 {
            let slot = &sig.slots[0].1;
            return Ok((0..n).map(|l| slot[l].unwrap_or(sig.init[l])).collect());
        }
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let mut driven = sig.slots.iter().filter_map(|(_, v)| v[l]).peekable();
            let first = match driven.peek() {
                None => {
                    out.push(sig.init[l]);
                    continue;
                }
                Some(&f) => f,
            };
            let leaf = match first {
                Leaf::Digit(_) => Leaf::Digit(resolve_all(driven.map(|x| match x {
                    Leaf::Digit(d) => d,
                    _ => crate::ir::LogicDigit::X,
                }))),
                _ => {
                    if driven.any(|x| x != first) {
                        return Err(SimError::Conflict {
                            signal: sig.info.full_name(),
                            time: self.now,
                        });
                    }
                    first
                }
            };
            out.push(leaf);
        }
        Ok(out)
    }

    fn read(&self, r: &SigRef) -> Val {
        let leaves: Vec<Leaf> = r
            .leaves
            .iter()
            .map(|&(s, l)| self.signals[s as usize].value[l as usize])
            .collect();
        Val::unflatten(&r.ty, &leaves)
    }

    fn schedule_drive(&mut self, driver: usize, r: &SigRef, v: &Val, at: TimeValue) {
        let leaves: Vec<(LeafRef, Leaf)> = r.leaves.iter().copied().zip(v.flatten()).collect();
        self.queue
            .entry(at)
            .or_default()
            .push(Event::Drive { driver, leaves });
    }

    fn warn_once(&mut self, msg: String) {
        if self.warned.insert(msg.clone()) {
            self.summary.warnings.push(msg);
        }
    }

    // ---- entities -----------------------------------------------------------

    fn eval_entity(&mut self, idx: usize, init: bool) -> SResult<()> {
        let module = self.module.clone();
        let unit = module.unit(self.instances[idx].unit);
        let mut env = std::mem::take(&mut self.instances[idx].env);
        let (order, mut reg_prev) = match &mut self.instances[idx].kind {
            InstanceKind::Entity { order, reg_prev, .. } => (order.clone(), std::mem::take(reg_prev)),
            _ => unreachable!(),
        };
        let mut sens: Vec<u32> = vec![];
        let mut result = Ok(());
        for &inst in order.iter() {
            let d = unit.inst_data(inst);
            let r = match d.opcode {
                Opcode::Sig | Opcode::Con | Opcode::Del | Opcode::Inst => continue,
                Opcode::Prb => {
                    if let Some(RVal::Sig(s)) = &env[d.args[0].index()] {
                        sens.extend(s.leaves.iter().map(|l| l.0));
                    }
                    self.exec(idx, unit, &mut env, inst).map(|_| ())
                }
                Opcode::Reg => self.eval_reg(idx, d, &env, reg_prev.entry(inst).or_default(), init),
                _ => self.exec(idx, unit, &mut env, inst).map(|_| ()),
            };
            if let Err(e) = r {
                result = Err(e);
                break;
            }
        }
        sens.sort_unstable();
        sens.dedup();
        let inst = &mut self.instances[idx];
        inst.env = env;
        if let InstanceKind::Entity {
            reg_prev: rp,
            sensitivity,
            ..
        } = &mut inst.kind
        {
            *rp = reg_prev;
            *sensitivity = sens;
        }
        result
    }

    /// Evaluate the triggers of a `reg`. The first trigger that fires and
    /// passes its gate stores its value.
    fn eval_reg(
        &mut self,
        idx: usize,
        d: &InstData,
        env: &[Option<RVal>],
        prev: &mut Vec<Option<bool>>,
        init: bool,
    ) -> SResult<()> {
        let triggers = d.reg_triggers();
        prev.resize(triggers.len(), None);
        let get = |v: Value| -> SResult<&RVal> {
            env[v.index()]
                .as_ref()
                .ok_or_else(|| SimError::Runtime("unbound operand".into()))
        };
        let mut fire: Option<(Val, TimeValue)> = None;
        for (i, t) in triggers.iter().enumerate() {
            let cur = get(t.trigger)?.data()?.as_bool().unwrap_or(false);
            let p = prev[i];
            prev[i] = Some(cur);
            if init || fire.is_some() {
                continue;
            }
            let hit = match t.mode {
                RegMode::Rise => p == Some(false) && cur,
                RegMode::Fall => p == Some(true) && !cur,
                RegMode::Both => p.map_or(false, |p| p != cur),
                RegMode::High => cur,
                RegMode::Low => !cur,
            };
            if !hit {
                continue;
            }
            if let Some(g) = t.gate {
                if !get(g)?.data()?.as_bool().unwrap_or(false) {
                    continue;
                }
            }
            let v = get(t.value)?.data()?.clone();
            let delay = match t.delay {
                Some(dl) => get(dl)?.data()?.as_time().unwrap_or_default(),
                None => TimeValue::ZERO,
            };
            fire = Some((v, delay));
        }
        if let Some((v, delay)) = fire {
            let target = get(d.args[0])?.sig()?.clone();
            let at = self.now.schedule(delay);
            self.schedule_drive(idx, &target, &v, at);
        }
        Ok(())
    }

    // ---- processes ----------------------------------------------------------

    fn run_process(&mut self, idx: usize) -> SResult<()> {
        let module = self.module.clone();
        let unit = module.unit(self.instances[idx].unit);
        let mut env = std::mem::take(&mut self.instances[idx].env);
        let (mut block, mut prev) = match &self.instances[idx].kind {
            InstanceKind::Process { block, prev, .. } => (*block, *prev),
            _ => unreachable!(),
        };
        let mut steps: u64 = 0;
        let result: SResult<Option<(Vec<LeafRef>, Option<TimeValue>)>> = 'outer: loop {
            let insts = unit.insts(block);
            let start = match self.enter_block(unit, &mut env, block, prev) {
                Ok(n) => n,
                Err(e) => break Err(e),
            };
            for &inst in &insts[start..] {
                steps += 1;
                if steps > MAX_ACTIVATION_STEPS {
                    break 'outer err(format!(
                        "process `{}` runs without suspending",
                        self.instances[idx].path.join(".")
                    ));
                }
                match self.exec(idx, unit, &mut env, inst) {
                    Ok(Flow::Next) => {}
                    Ok(Flow::Jump(b)) => {
                        prev = Some(block);
                        block = b;
                        continue 'outer;
                    }
                    Ok(Flow::Wait) => {
                        let d = unit.inst_data(inst);
                        let mut observed = vec![];
                        for &s in d.wait_signals() {
                            match env[s.index()].as_ref().map(RVal::sig) {
                                Some(Ok(r)) => observed.extend(r.leaves.iter().copied()),
                                _ => break 'outer err("`wait` on a non-signal"),
                            }
                        }
                        let time = match d.wait_time() {
                            Some(t) => match env[t.index()].as_ref().map(RVal::data) {
                                Some(Ok(v)) => v.as_time(),
                                _ => break 'outer err("`wait` time is not a time"),
                            },
                            None => None,
                        };
                        prev = Some(block);
                        block = d.blocks[0];
                        break 'outer Ok(Some((observed, time)));
                    }
                    Ok(Flow::Halt) => break 'outer Ok(None),
                    Ok(Flow::Ret(_)) => break 'outer err("`ret` in a process"),
                    Err(e) => break 'outer Err(e),
                }
            }
            break err("block without terminator");
        };
        self.instances[idx].env = env;
        let now = self.now;
        let mut wake_at = None;
        if let InstanceKind::Process {
            block: b,
            prev: p,
            halted,
            observed,
            gen,
        } = &mut self.instances[idx].kind
        {
            *b = block;
            *p = prev;
            *gen += 1;
            match &result {
                Ok(Some((obs, time))) => {
                    *observed = obs.clone();
                    if let Some(t) = time {
                        wake_at = Some((now.schedule(*t), *gen));
                    }
                }
                Ok(None) => {
                    *halted = true;
                    observed.clear();
                }
                Err(_) => {}
            }
        }
        if let Some((at, gen)) = wake_at {
            self.queue
                .entry(at)
                .or_default()
                .push(Event::Wake { inst: idx, gen });
        }
        result.map(|_| ())
    }

    /// Assign the phis of `block` for control arriving from `prev`. Returns
    /// the index of the first non-phi instruction.
    fn enter_block(
        &mut self,
        unit: &UnitData,
        env: &mut [Option<RVal>],
        block: Block,
        prev: Option<Block>,
    ) -> SResult<usize> {
        let insts = unit.insts(block);
        let n = insts
            .iter()
            .take_while(|&&i| unit.opcode(i) == Opcode::Phi)
            .count();
        if n == 0 {
            return Ok(0);
        }
        let prev = prev.ok_or_else(|| SimError::Runtime("`phi` in entry block".into()))?;
        let mut vals = Vec::with_capacity(n);
        for &i in &insts[..n] {
            let d = unit.inst_data(i);
            let k = d
                .blocks
                .iter()
                .position(|&b| b == prev)
                .ok_or_else(|| SimError::Runtime("`phi` has no value for the incoming edge".into()))?;
            vals.push(env[d.args[k].index()].clone());
        }
        for (&i, v) in insts[..n].iter().zip(vals) {
            env[unit.inst_result(i).unwrap().index()] = v;
        }
        Ok(n)
    }

    // ---- functions ------------------------------------------------------------

    fn call_function(&mut self, caller: usize, id: UnitId, args: Vec<RVal>) -> SResult<Option<RVal>> {
        if self.depth >= MAX_CALL_DEPTH {
            return err("call depth limit exceeded");
        }
        let module = self.module.clone();
        let unit = module.unit(id);
        let mut env: Vec<Option<RVal>> = vec![None; unit.value_count()];
        for (a, v) in unit.args().zip(args) {
            env[a.index()] = Some(v);
        }
        let heap_mark = self.heap.len();
        self.depth += 1;
        let mut block = unit
            .entry()
            .ok_or_else(|| SimError::Runtime(format!("`{}` has no body", unit.name)))?;
        let mut prev = None;
        let mut steps: u64 = 0;
        let result = 'outer: loop {
            let start = match self.enter_block(unit, &mut env, block, prev) {
                Ok(n) => n,
                Err(e) => break Err(e),
            };
            for &inst in &unit.insts(block)[start..] {
                steps += 1;
                if steps > MAX_ACTIVATION_STEPS {
                    break 'outer err(format!("`{}` does not return", unit.name));
                }
                match self.exec(caller, unit, &mut env, inst) {
                    Ok(Flow::Next) => {}
                    Ok(Flow::Jump(b)) => {
                        prev = Some(block);
                        block = b;
                        continue 'outer;
                    }
                    Ok(Flow::Ret(v)) => break 'outer Ok(v),
                    Ok(_) => break 'outer err("function suspended"),
                    Err(e) => break 'outer Err(e),
                }
            }
            break err("block without terminator");
        };
        self.depth -= 1;
        // Stack slots of the frame die with it.
        if self.heap.len() > heap_mark && self.depth == 0 {
            self.heap.truncate(heap_mark);
        }
        result
    }

    // ---- instructions -----------------------------------------------------

    /// Compute the value of a pure instruction, including projections of
    /// signals and pointers.
    fn eval_value(&self, d: &InstData, env: &[Option<RVal>]) -> SResult<RVal> {
        let mut args = Vec::with_capacity(d.args.len());
        for a in &d.args {
            args.push(
                env[a.index()]
                    .as_ref()
                    .ok_or_else(|| SimError::Runtime(format!("operand of `{}` is unbound", d.opcode)))?,
            );
        }
        let projected = matches!(args.first(), Some(RVal::Sig(_)) | Some(RVal::Ptr(_)));
        if projected || (d.opcode == Opcode::Mux && matches!(args[0], RVal::Sig(_) | RVal::Ptr(_))) {
            return project(d, &args);
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in &args {
            vals.push(a.data()?);
        }
        match eval_pure(d, &vals) {
            Some((v, _)) => Ok(RVal::Data(v)),
            None => err(format!("cannot evaluate `{}`", d.opcode)),
        }
    }

    fn exec(
        &mut self,
        idx: usize,
        unit: &UnitData,
        env: &mut [Option<RVal>],
        inst: Inst,
    ) -> SResult<Flow> {
        let d = unit.inst_data(inst);
        macro_rules! arg {
            ($i:expr) => {
                env[d.args[$i].index()]
                    .as_ref()
                    .ok_or_else(|| SimError::Runtime(format!("operand of `{}` is unbound", d.opcode)))?
            };
        }
        let set = |env: &mut [Option<RVal>], v: RVal| {
            if let Some(r) = unit.inst_result(inst) {
                env[r.index()] = Some(v);
            }
        };
        match d.opcode {
            Opcode::Prb => {
                let v = self.read(arg!(0).sig()?);
                set(env, RVal::Data(v));
            }
            Opcode::Drv => {
                if d.args.len() > 3 && !arg!(3).data()?.as_bool().unwrap_or(false) {
                    return Ok(Flow::Next);
                }
                let target = arg!(0).sig()?.clone();
                let v = arg!(1).data()?.clone();
                let delay = arg!(2).data()?.as_time().unwrap_or_default();
                let at = self.now.schedule(delay);
                self.schedule_drive(idx, &target, &v, at);
            }
            Opcode::Var | Opcode::Alloc => {
                let v = arg!(0).data()?.flatten();
                let n = v.len() as u32;
                self.heap.push(Some(v));
                set(
                    env,
                    RVal::Ptr(PtrRef {
                        ty: d.ty.clone(),
                        slot: self.heap.len() - 1,
                        leaves: (0..n).collect(),
                    }),
                );
            }
            Opcode::Ld => {
                let p = match arg!(0) {
                    RVal::Ptr(p) => p.clone(),
                    _ => return err("`ld` of a non-pointer"),
                };
                let mem = match self.heap.get(p.slot) {
                    Some(Some(m)) => m,
                    _ => return err("`ld` from freed memory"),
                };
                let leaves: Vec<Leaf> = p.leaves.iter().map(|&l| mem[l as usize]).collect();
                set(env, RVal::Data(Val::unflatten(&p.ty, &leaves)));
            }
            Opcode::St => {
                let p = match arg!(0) {
                    RVal::Ptr(p) => p.clone(),
                    _ => return err("`st` to a non-pointer"),
                };
                let v = arg!(1).data()?.flatten();
                let mem = match self.heap.get_mut(p.slot) {
                    Some(Some(m)) => m,
                    _ => return err("`st` to freed memory"),
                };
                for (&l, x) in p.leaves.iter().zip(v) {
                    mem[l as usize] = x;
                }
            }
            Opcode::Free => {
                let p = match arg!(0) {
                    RVal::Ptr(p) => p.clone(),
                    _ => return err("`free` of a non-pointer"),
                };
                match self.heap.get_mut(p.slot) {
                    Some(slot @ Some(_)) => *slot = None,
                    _ => return err("double `free`"),
                }
            }
            Opcode::Call => {
                let name = d.callee().unwrap().clone();
                let mut args = Vec::with_capacity(d.args.len());
                for i in 0..d.args.len() {
                    args.push(arg!(i).clone());
                }
                if name.is_intrinsic() {
                    if name.as_str() == "llhd.assert" {
                        let ok = args[0].data()?.as_bool().unwrap_or(false);
                        if !ok {
                            let msg = format!(
                                "assertion failed in {} ({}) at {}",
                                unit.name,
                                self.instances[idx].path.join("."),
                                self.now
                            );
                            self.summary.assertion_failures.push(msg);
                        }
                    } else {
                        self.warn_once(format!("unknown intrinsic {} ignored", name));
                    }
                    if !d.ty.is_void() {
                        set(env, RVal::Data(Val::default_of(&d.ty)));
                    }
                    return Ok(Flow::Next);
                }
                let id = self
                    .module
                    .lookup(&name)
                    .ok_or_else(|| SimError::Runtime(format!("call of undefined `{}`", name)))?;
                if let Some(v) = self.call_function(idx, id, args)? {
                    set(env, v);
                }
            }
            Opcode::Br => return Ok(Flow::Jump(d.blocks[0])),
            Opcode::BrCond => {
                let c = arg!(0).data()?.as_bool().unwrap_or(false);
                return Ok(Flow::Jump(d.blocks[c as usize]));
            }
            Opcode::Wait => return Ok(Flow::Wait),
            Opcode::Halt => return Ok(Flow::Halt),
            Opcode::Ret => {
                let v = if d.args.is_empty() {
                    None
                } else {
                    Some(arg!(0).clone())
                };
                return Ok(Flow::Ret(v));
            }
            Opcode::Phi => {}
            Opcode::Sig | Opcode::Con | Opcode::Del | Opcode::Inst | Opcode::Reg => {
                return err(format!("`{}` outside of an entity body", d.opcode));
            }
            op if op.is_binary() && matches!(op, Opcode::Div | Opcode::Sdiv | Opcode::Mod | Opcode::Smod | Opcode::Rem | Opcode::Srem) => {
                let (v, dz) = Val::binary(op, arg!(0).data()?, arg!(1).data()?);
                if dz {
                    let msg = format!("division by zero in {} at {}", unit.name, self.now);
                    self.warn_once(msg);
                }
                set(env, RVal::Data(v));
            }
            _ => {
                let v = self.eval_value(d, env)?;
                set(env, v);
            }
        }
        Ok(Flow::Next)
    }
}

/// Projection of signals and pointers through `extf`, `exts`, `shl`, `shr`,
/// and `mux`.
fn project(d: &InstData, args: &[&RVal]) -> SResult<RVal> {
    if d.opcode == Opcode::Mux {
        let (sel, opts) = args.split_last().unwrap();
        let i = sel.data()?.as_index().unwrap_or(0).min(opts.len() - 1);
        return Ok(opts[i].clone());
    }
    // Work on leaf positions generically for signals and pointers.
    let (ty, leaves): (&Type, Vec<LeafRef>) = match args[0] {
        RVal::Sig(s) => (&s.ty, s.leaves.to_vec()),
        RVal::Ptr(p) => (&p.ty, p.leaves.iter().map(|&l| (p.slot as u32, l)).collect()),
        RVal::Data(_) => unreachable!(),
    };
    let (new_ty, new_leaves) = match d.opcode {
        Opcode::ExtField => {
            let i = d.imms[0];
            let off = ty
                .field_leaf_offset(i)
                .ok_or_else(|| SimError::Runtime("field index out of bounds".into()))?;
            let fty = ty.field(i).unwrap().clone();
            let n = fty.leaf_count();
            (fty, leaves[off..off + n].to_vec())
        }
        Opcode::ExtSlice => {
            let (o, l) = (d.imms[0], d.imms[1]);
            let sty = ty
                .slice(o, l)
                .ok_or_else(|| SimError::Runtime("slice out of bounds".into()))?;
            let g = ty.slice_granule();
            (sty, leaves[o * g..(o + l) * g].to_vec())
        }
        Opcode::Shl | Opcode::Shr => {
            let hidden: Vec<LeafRef> = match args[1] {
                RVal::Sig(s) => s.leaves.to_vec(),
                RVal::Ptr(p) => p.leaves.iter().map(|&l| (p.slot as u32, l)).collect(),
                RVal::Data(_) => return err("shift of a signal by a hidden data value"),
            };
            let amt = args[2].data()?.as_index().unwrap_or(usize::MAX);
            let n = leaves.len();
            let amt = amt.saturating_mul(ty.slice_granule()).min(n);
            (ty.clone(), shift_leaves(d.opcode, &leaves, &hidden, amt))
        }
        op => return err(format!("`{}` cannot take a signal or pointer operand", op)),
    };
    Ok(match args[0] {
        RVal::Sig(_) => RVal::Sig(SigRef {
            ty: new_ty,
            leaves: new_leaves.into(),
        }),
        RVal::Ptr(p) => {
            if new_leaves.iter().any(|l| l.0 as usize != p.slot) {
                return err("pointer shift across distinct allocations");
            }
            RVal::Ptr(PtrRef {
                ty: new_ty,
                slot: p.slot,
                leaves: new_leaves.iter().map(|l| l.1).collect(),
            })
        }
        RVal::Data(_) => unreachable!(),
    })
}
