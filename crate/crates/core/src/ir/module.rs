//! Modules, names, and signatures.

use super::ty::Type;
use super::unit::{UnitData, UnitKind};
use std::fmt;

/// The name of a unit. Only global names take part in linking.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum UnitName {
    Global(String),
    Local(String),
}

impl UnitName {
    pub fn global(name: impl Into<String>) -> UnitName {
        UnitName::Global(name.into())
    }

    pub fn local(name: impl Into<String>) -> UnitName {
        UnitName::Local(name.into())
    }

    pub fn is_global(&self) -> bool {
        matches!(self, UnitName::Global(_))
    }

    /// The bare name without sigil.
    pub fn as_str(&self) -> &str {
        match self {
            UnitName::Global(s) | UnitName::Local(s) => s,
        }
    }

    /// Whether this names a built-in intrinsic (`@llhd.*`).
    pub fn is_intrinsic(&self) -> bool {
        matches!(self, UnitName::Global(s) if s.starts_with("llhd."))
    }
}

impl fmt::Display for UnitName {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            UnitName::Global(s) => write!(f, "@{}", s),
            UnitName::Local(s) => write!(f, "%{}", s),
        }
    }
}

/// Inputs, outputs, and return type of a unit.
///
/// Functions use `inputs` and `ret`; processes and entities use `inputs` and
/// `outputs`, all of which must be signals.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Signature {
    pub inputs: Vec<Type>,
    pub outputs: Vec<Type>,
    pub ret: Type,
}

impl Default for Type {
    fn default() -> Self {
        Type::Void
    }
}

impl Signature {
    pub fn function(inputs: Vec<Type>, ret: Type) -> Signature {
        Signature {
            inputs,
            outputs: vec![],
            ret,
        }
    }

    pub fn component(inputs: Vec<Type>, outputs: Vec<Type>) -> Signature {
        Signature {
            inputs,
            outputs,
            ret: Type::Void,
        }
    }

    pub fn port_count(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let list = |f: &mut fmt::Formatter, ts: &[Type]| -> fmt::Result {
            write!(f, "(")?;
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", t)?;
            }
            write!(f, ")")
        };
        list(f, &self.inputs)?;
        if self.outputs.is_empty() && !self.ret.is_void() {
            write!(f, " {}", self.ret)
        } else {
            write!(f, " -> ")?;
            list(f, &self.outputs)
        }
    }
}

/// An external unit known only by name and signature.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Declaration {
    pub name: UnitName,
    pub sig: Signature,
    /// Declares a function (`(args) ret`) rather than a process or entity.
    pub function: bool,
}

/// Handle to a unit inside a module.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct UnitId(pub(crate) usize);

/// A collection of units and external declarations.
#[derive(Clone, Debug, Default)]
pub struct Module {
    units: Vec<Option<UnitData>>,
    decls: Vec<Declaration>,
}

impl Module {
    pub fn new() -> Module {
        Module::default()
    }

    /// Add a unit, keeping definition order.
    pub fn add_unit(&mut self, unit: UnitData) -> UnitId {
        self.units.push(Some(unit));
        UnitId(self.units.len() - 1)
    }

    pub fn remove_unit(&mut self, id: UnitId) -> Option<UnitData> {
        self.units.get_mut(id.0).and_then(Option::take)
    }

    pub fn add_declaration(&mut self, decl: Declaration) {
        self.decls.push(decl);
    }

    pub fn declarations(&self) -> &[Declaration] {
        &self.decls
    }

    pub fn retain_declarations(&mut self, f: impl FnMut(&Declaration) -> bool) {
        self.decls.retain(f);
    }

    pub fn units(&self) -> impl Iterator<Item = (UnitId, &UnitData)> + '_ {
        self.units
            .iter()
            .enumerate()
            .filter_map(|(i, u)| u.as_ref().map(|u| (UnitId(i), u)))
    }

    pub fn unit_ids(&self) -> Vec<UnitId> {
        self.units().map(|(id, _)| id).collect()
    }

    pub fn unit_count(&self) -> usize {
        self.units().count()
    }

    pub fn unit(&self, id: UnitId) -> &UnitData {
        self.units[id.0].as_ref().expect("unit was removed")
    }

    pub fn unit_mut(&mut self, id: UnitId) -> &mut UnitData {
        self.units[id.0].as_mut().expect("unit was removed")
    }

    /// Replace the unit behind a handle.
    pub fn replace_unit(&mut self, id: UnitId, unit: UnitData) {
        self.units[id.0] = Some(unit);
    }

    pub fn lookup(&self, name: &UnitName) -> Option<UnitId> {
        self.units().find(|(_, u)| &u.name == name).map(|(id, _)| id)
    }

    pub fn lookup_declaration(&self, name: &UnitName) -> Option<&Declaration> {
        self.decls.iter().find(|d| &d.name == name)
    }

    /// Signature of a defined or declared unit.
    pub fn signature_of(&self, name: &UnitName) -> Option<&Signature> {
        if let Some(id) = self.lookup(name) {
            return Some(&self.unit(id).sig);
        }
        self.lookup_declaration(name).map(|d| &d.sig)
    }

    /// Kind of a defined unit.
    pub fn kind_of(&self, name: &UnitName) -> Option<UnitKind> {
        self.lookup(name).map(|id| self.unit(id).kind)
    }

    pub fn is_empty(&self) -> bool {
        self.unit_count() == 0 && self.decls.is_empty()
    }

    /// Same declarations and pairwise [`UnitData::structurally_eq`] units,
    /// in order.
    pub fn structurally_eq(&self, other: &Module) -> bool {
        self.decls == other.decls
            && self.unit_count() == other.unit_count()
            && self.units().zip(other.units()).all(|((_, a), (_, b))| a.structurally_eq(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_display() {
        let f = Signature::function(vec![Type::int(32), Type::int(32)], Type::Void);
        assert_eq!(f.to_string(), "(i32, i32) -> ()");
        let g = Signature::function(vec![Type::int(8)], Type::int(1));
        assert_eq!(g.to_string(), "(i8) i1");
        let c = Signature::component(vec![Type::signal(Type::int(1))], vec![]);
        assert_eq!(c.to_string(), "(i1$) -> ()");
    }

    #[test]
    fn add_lookup_remove() {
        let mut m = Module::new();
        let id = m.add_unit(UnitData::new(
            UnitKind::Entity,
            UnitName::global("top"),
            Signature::default(),
        ));
        assert_eq!(m.lookup(&UnitName::global("top")), Some(id));
        assert!(m.remove_unit(id).is_some());
        assert!(m.lookup(&UnitName::global("top")).is_none());
        assert!(m.is_empty());
    }
}
