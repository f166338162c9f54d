//! Functions, processes, and entities.

use super::inst::{InstData, Opcode};
use super::module::{Signature, UnitName};
use super::ty::Type;
use std::collections::HashMap;
use std::fmt;

/// An SSA value within a unit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Value(pub(crate) u32);

/// A basic block within a unit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Block(pub(crate) u32);

/// An instruction within a unit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Inst(pub(crate) u32);

impl Value {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Block {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Block {
        Block(i as u32)
    }
}

impl Inst {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "bb{}", self.0)
    }
}

/// The three kinds of units.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum UnitKind {
    /// Control flow, immediate.
    Function,
    /// Control flow, timed.
    Process,
    /// Data flow, timed.
    Entity,
}

impl UnitKind {
    pub fn keyword(self) -> &'static str {
        match self {
            UnitKind::Function => "func",
            UnitKind::Process => "proc",
            UnitKind::Entity => "entity",
        }
    }

    pub fn is_control_flow(self) -> bool {
        !matches!(self, UnitKind::Entity)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ValueDef {
    Arg(usize),
    Inst(Inst),
}

#[derive(Clone, Debug)]
struct ValueData {
    def: ValueDef,
    ty: Type,
    name: Option<String>,
}

#[derive(Clone, Debug, Default)]
struct BlockData {
    name: Option<String>,
    insts: Vec<Inst>,
}

#[derive(Clone, Debug)]
struct InstSlot {
    data: InstData,
    result: Option<Value>,
    block: Option<Block>,
}

/// A function, process, or entity.
///
/// Instructions are allocated in an arena and attached to blocks; removing an
/// instruction only detaches it. Entities keep their body in a single block
/// that has no label in the text format.
#[derive(Clone, Debug)]
pub struct UnitData {
    pub kind: UnitKind,
    pub name: UnitName,
    pub sig: Signature,
    values: Vec<ValueData>,
    insts: Vec<InstSlot>,
    blocks: Vec<BlockData>,
    layout: Vec<Block>,
}

impl UnitData {
    /// Create an empty unit. Entities get their body block right away.
    pub fn new(kind: UnitKind, name: UnitName, sig: Signature) -> UnitData {
        let mut unit = UnitData {
            kind,
            name,
            values: vec![],
            insts: vec![],
            blocks: vec![],
            layout: vec![],
            sig: Signature::default(),
        };
        for (i, ty) in sig.inputs.iter().chain(sig.outputs.iter()).enumerate() {
            unit.values.push(ValueData {
                def: ValueDef::Arg(i),
                ty: ty.clone(),
                name: None,
            });
        }
        unit.sig = sig;
        if kind == UnitKind::Entity {
            unit.add_block(None);
        }
        unit
    }

    pub fn is_entity(&self) -> bool {
        self.kind == UnitKind::Entity
    }

    pub fn is_process(&self) -> bool {
        self.kind == UnitKind::Process
    }

    pub fn is_function(&self) -> bool {
        self.kind == UnitKind::Function
    }

    // ---- values ---------------------------------------------------------

    pub fn args(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.sig.inputs.len() + self.sig.outputs.len()).map(|i| Value(i as u32))
    }

    pub fn input_args(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.sig.inputs.len()).map(|i| Value(i as u32))
    }

    pub fn output_args(&self) -> impl Iterator<Item = Value> + '_ {
        let n = self.sig.inputs.len();
        (n..n + self.sig.outputs.len()).map(|i| Value(i as u32))
    }

    pub fn arg(&self, index: usize) -> Value {
        assert!(index < self.sig.inputs.len() + self.sig.outputs.len());
        Value(index as u32)
    }

    pub fn value_count(&self) -> usize {
        self.values.len()
    }

    pub fn value_type(&self, v: Value) -> &Type {
        &self.values[v.index()].ty
    }

    pub fn value_def(&self, v: Value) -> ValueDef {
        self.values[v.index()].def
    }

    pub fn is_arg(&self, v: Value) -> bool {
        matches!(self.value_def(v), ValueDef::Arg(_))
    }

    /// The instruction defining `v`, if it is not an argument.
    pub fn def_inst(&self, v: Value) -> Option<Inst> {
        match self.value_def(v) {
            ValueDef::Inst(i) => Some(i),
            ValueDef::Arg(_) => None,
        }
    }

    pub fn value_name(&self, v: Value) -> Option<&str> {
        self.values[v.index()].name.as_deref()
    }

    pub fn set_value_name(&mut self, v: Value, name: impl Into<String>) {
        self.values[v.index()].name = Some(name.into());
    }

    pub fn clear_value_name(&mut self, v: Value) {
        self.values[v.index()].name = None;
    }

    // ---- blocks ---------------------------------------------------------

    pub fn add_block(&mut self, name: Option<String>) -> Block {
        let b = Block(self.blocks.len() as u32);
        self.blocks.push(BlockData {
            name,
            insts: vec![],
        });
        self.layout.push(b);
        b
    }

    /// Create a block and place it right after `after` in the layout.
    pub fn add_block_after(&mut self, after: Block, name: Option<String>) -> Block {
        let b = self.add_block(name);
        self.layout.pop();
        let pos = self.layout.iter().position(|&x| x == after).unwrap();
        self.layout.insert(pos + 1, b);
        b
    }

    /// Detach a block and all its instructions.
    pub fn remove_block(&mut self, b: Block) {
        for inst in std::mem::take(&mut self.blocks[b.index()].insts) {
            self.insts[inst.index()].block = None;
        }
        self.layout.retain(|&x| x != b);
    }

    /// Blocks in layout order. The first one is the entry block.
    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        self.layout.iter().copied()
    }

    pub fn block_count(&self) -> usize {
        self.layout.len()
    }

    pub fn block_capacity(&self) -> usize {
        self.blocks.len()
    }

    pub fn entry(&self) -> Option<Block> {
        self.layout.first().copied()
    }

    /// The body block of an entity.
    pub fn body(&self) -> Block {
        debug_assert!(self.is_entity());
        self.layout[0]
    }

    pub fn is_block_live(&self, b: Block) -> bool {
        self.layout.contains(&b)
    }

    pub fn block_name(&self, b: Block) -> Option<&str> {
        self.blocks[b.index()].name.as_deref()
    }

    pub fn set_block_name(&mut self, b: Block, name: impl Into<String>) {
        self.blocks[b.index()].name = Some(name.into());
    }

    pub fn insts(&self, b: Block) -> &[Inst] {
        &self.blocks[b.index()].insts
    }

    /// Move a block to the given layout position.
    pub fn move_block(&mut self, b: Block, pos: usize) {
        self.layout.retain(|&x| x != b);
        self.layout.insert(pos.min(self.layout.len()), b);
    }

    // ---- instructions -----------------------------------------------------

    /// Allocate an instruction without placing it. Creates its result value.
    pub fn create_inst(&mut self, data: InstData) -> Inst {
        let inst = Inst(self.insts.len() as u32);
        let ty = data.result_type();
        let result = if ty.is_void() {
            None
        } else {
            let v = Value(self.values.len() as u32);
            self.values.push(ValueData {
                def: ValueDef::Inst(inst),
                ty,
                name: None,
            });
            Some(v)
        };
        self.insts.push(InstSlot {
            data,
            result,
            block: None,
        });
        inst
    }

    pub fn append_inst(&mut self, b: Block, inst: Inst) {
        debug_assert!(self.insts[inst.index()].block.is_none());
        self.blocks[b.index()].insts.push(inst);
        self.insts[inst.index()].block = Some(b);
    }

    pub fn insert_inst_at(&mut self, b: Block, pos: usize, inst: Inst) {
        debug_assert!(self.insts[inst.index()].block.is_none());
        self.blocks[b.index()].insts.insert(pos, inst);
        self.insts[inst.index()].block = Some(b);
    }

    /// Insert before the block terminator, or at the end if there is none.
    pub fn insert_before_terminator(&mut self, b: Block, inst: Inst) {
        let pos = match self.terminator(b) {
            Some(_) => self.blocks[b.index()].insts.len() - 1,
            None => self.blocks[b.index()].insts.len(),
        };
        self.insert_inst_at(b, pos, inst);
    }

    /// Insert after the leading phi instructions of a block.
    pub fn insert_after_phis(&mut self, b: Block, inst: Inst) {
        let pos = self.blocks[b.index()]
            .insts
            .iter()
            .take_while(|&&i| self.insts[i.index()].data.opcode == Opcode::Phi)
            .count();
        self.insert_inst_at(b, pos, inst);
    }

    /// Detach an instruction from its block.
    pub fn remove_inst(&mut self, inst: Inst) {
        if let Some(b) = self.insts[inst.index()].block.take() {
            self.blocks[b.index()].insts.retain(|&i| i != inst);
        }
    }

    /// Detach an instruction and give it a new position.
    pub fn move_inst(&mut self, inst: Inst, b: Block, pos: usize) {
        self.remove_inst(inst);
        self.insert_inst_at(b, pos, inst);
    }

    pub fn inst_block(&self, inst: Inst) -> Option<Block> {
        self.insts[inst.index()].block
    }

    pub fn inst_position(&self, inst: Inst) -> Option<usize> {
        let b = self.inst_block(inst)?;
        self.insts(b).iter().position(|&i| i == inst)
    }

    pub fn inst_data(&self, inst: Inst) -> &InstData {
        &self.insts[inst.index()].data
    }

    pub fn inst_data_mut(&mut self, inst: Inst) -> &mut InstData {
        &mut self.insts[inst.index()].data
    }

    pub fn opcode(&self, inst: Inst) -> Opcode {
        self.insts[inst.index()].data.opcode
    }

    pub fn inst_result(&self, inst: Inst) -> Option<Value> {
        self.insts[inst.index()].result
    }

    pub fn terminator(&self, b: Block) -> Option<Inst> {
        let last = *self.blocks[b.index()].insts.last()?;
        if self.opcode(last).is_terminator() {
            Some(last)
        } else {
            None
        }
    }

    /// All attached instructions in layout order.
    pub fn all_insts(&self) -> impl Iterator<Item = Inst> + '_ {
        self.layout
            .iter()
            .flat_map(move |&b| self.blocks[b.index()].insts.iter().copied())
    }

    pub fn inst_capacity(&self) -> usize {
        self.insts.len()
    }

    /// Successor blocks of a block, in terminator operand order.
    pub fn successors(&self, b: Block) -> Vec<Block> {
        match self.terminator(b) {
            Some(t) => self.inst_data(t).blocks.clone(),
            None => vec![],
        }
    }

    // ---- uses -------------------------------------------------------------

    /// Replace every use of `old` by `new` in attached instructions.
    pub fn replace_uses(&mut self, old: Value, new: Value) {
        let attached: Vec<Inst> = self.all_insts().collect();
        for inst in attached {
            for a in &mut self.insts[inst.index()].data.args {
                if *a == old {
                    *a = new;
                }
            }
        }
    }

    /// Replace every reference to block `old` by `new` in terminators and phis.
    pub fn replace_block_uses(&mut self, old: Block, new: Block) {
        let attached: Vec<Inst> = self.all_insts().collect();
        for inst in attached {
            for b in &mut self.insts[inst.index()].data.blocks {
                if *b == old {
                    *b = new;
                }
            }
        }
    }

    /// Number of uses of each value among attached instructions.
    pub fn use_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.values.len()];
        for inst in self.all_insts() {
            for a in &self.inst_data(inst).args {
                counts[a.index()] += 1;
            }
        }
        counts
    }

    /// Attached instructions using `v`.
    pub fn users(&self, v: Value) -> Vec<Inst> {
        self.all_insts()
            .filter(|&i| self.inst_data(i).args.contains(&v))
            .collect()
    }

    /// Map from value to its users, computed in one sweep.
    pub fn user_map(&self) -> HashMap<Value, Vec<Inst>> {
        let mut map: HashMap<Value, Vec<Inst>> = HashMap::new();
        for inst in self.all_insts() {
            for &a in &self.inst_data(inst).args {
                let e = map.entry(a).or_default();
                if e.last() != Some(&inst) {
                    e.push(inst);
                }
            }
        }
        map
    }

    /// Value defined by a `const` instruction, if `v` is one.
    pub fn const_of(&self, v: Value) -> Option<&super::inst::ConstValue> {
        let inst = self.def_inst(v)?;
        self.inst_data(inst).const_value()
    }

    /// Predecessors of each block, derived from terminators.
    pub fn predecessors(&self) -> HashMap<Block, Vec<Block>> {
        let mut preds: HashMap<Block, Vec<Block>> = self.blocks().map(|b| (b, vec![])).collect();
        for b in self.blocks() {
            for s in self.successors(b) {
                let e = preds.entry(s).or_default();
                if !e.contains(&b) {
                    e.push(b);
                }
            }
        }
        preds
    }

    /// Drop detached instructions and unused arena entries by rebuilding the
    /// unit. Value, block, and instruction handles are renumbered.
    pub fn compact(&self) -> UnitData {
        let mut out = UnitData::new(self.kind, self.name.clone(), self.sig.clone());
        if out.is_entity() {
            out.layout.clear();
            out.blocks.clear();
        }
        for a in self.args() {
            if let Some(n) = self.value_name(a) {
                out.set_value_name(a, n);
            }
        }
        let mut bmap = HashMap::new();
        for b in self.blocks() {
            let nb = out.add_block(self.block_name(b).map(String::from));
            bmap.insert(b, nb);
        }
        let mut vmap: HashMap<Value, Value> = self.args().map(|a| (a, a)).collect();
        let mut created = vec![];
        for b in self.blocks() {
            for &inst in self.insts(b) {
                let data = self.inst_data(inst).clone();
                let ni = out.create_inst(data);
                out.append_inst(bmap[&b], ni);
                if let (Some(old), Some(new)) = (self.inst_result(inst), out.inst_result(ni)) {
                    vmap.insert(old, new);
                    if let Some(n) = self.value_name(old) {
                        out.set_value_name(new, n);
                    }
                }
                created.push(ni);
            }
        }
        for ni in created {
            let d = &mut out.insts[ni.index()].data;
            for a in &mut d.args {
                *a = vmap.get(a).copied().unwrap_or(*a);
            }
            for b in &mut d.blocks {
                *b = bmap.get(b).copied().unwrap_or(*b);
            }
        }
        out
    }

    /// Equality up to the numbering of values, blocks, and instructions:
    /// same signature, same block layout and names, same instructions in the
    /// same order with corresponding operands and result names.
    pub fn structurally_eq(&self, other: &UnitData) -> bool {
        if self.kind != other.kind || self.name != other.name || self.sig != other.sig {
            return false;
        }
        if self.layout.len() != other.layout.len() {
            return false;
        }
        let mut vmap: HashMap<Value, Value> = HashMap::new();
        for (a, b) in self.args().zip(other.args()) {
            if self.value_name(a) != other.value_name(b) {
                return false;
            }
            vmap.insert(a, b);
        }
        let bmap: HashMap<Block, Block> = self.layout.iter().copied().zip(other.layout.iter().copied()).collect();
        for (&a, &b) in &bmap {
            if self.block_name(a) != other.block_name(b) || self.insts(a).len() != other.insts(b).len() {
                return false;
            }
        }
        // Results first, so forward references (phi operands) resolve.
        for (&ba, &bb) in &bmap {
            for (&ia, &ib) in self.insts(ba).iter().zip(other.insts(bb)) {
                match (self.inst_result(ia), other.inst_result(ib)) {
                    (Some(x), Some(y)) => {
                        if self.value_name(x) != other.value_name(y) || self.value_type(x) != other.value_type(y) {
                            return false;
                        }
                        vmap.insert(x, y);
                    }
                    (None, None) => {}
                    _ => return false,
                }
            }
        }
        for (&ba, &bb) in &bmap {
            for (&ia, &ib) in self.insts(ba).iter().zip(other.insts(bb)) {
                let (da, db) = (self.inst_data(ia), other.inst_data(ib));
                if da.opcode != db.opcode
                    || da.ty != db.ty
                    || da.imms != db.imms
                    || da.extra != db.extra
                    || da.args.len() != db.args.len()
                    || da.blocks.len() != db.blocks.len()
                {
                    return false;
                }
                if da.args.iter().zip(&db.args).any(|(x, y)| vmap.get(x) != Some(y)) {
                    return false;
                }
                if da.blocks.iter().zip(&db.blocks).any(|(x, y)| bmap.get(x) != Some(y)) {
                    return false;
                }
            }
        }
        true
    }
}
