//! Combining modules by resolving global names.

use super::inst::Extra;
use super::module::{Declaration, Module, Signature, UnitName};
use super::unit::{UnitData, UnitKind};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum LinkError {
    #[error("duplicate definition of `{0}`")]
    DuplicateDefinition(UnitName),
    #[error("signature mismatch for `{name}`: declared as `{declared}`, defined as `{defined}`")]
    SignatureMismatch {
        name: UnitName,
        declared: Signature,
        defined: Signature,
    },
}

fn kind_matches(decl: &Declaration, kind: UnitKind) -> bool {
    decl.function == (kind == UnitKind::Function)
}

/// Link modules into one. Declarations matched by a definition are dropped;
/// the rest stay declarations. Local unit names that collide across inputs
/// are renamed.
pub fn link(modules: Vec<Module>) -> Result<Module, LinkError> {
    let mut out = Module::new();
    let mut defined: HashMap<UnitName, (UnitKind, Signature)> = HashMap::new();
    let mut locals: HashSet<UnitName> = HashSet::new();
    let mut decls: Vec<Declaration> = vec![];

    for m in modules {
        let mut units: Vec<UnitData> = vec![];
        let mut m = m;
        for id in m.unit_ids() {
            units.push(m.remove_unit(id).unwrap());
        }
        // Rename colliding locals within this module first.
        let mut renames: HashMap<UnitName, UnitName> = HashMap::new();
        for u in &units {
            if !u.name.is_global() && locals.contains(&u.name) {
                let mut n = 1;
                let fresh = loop {
                    let cand = UnitName::local(format!("{}.{}", u.name.as_str(), n));
                    if !locals.contains(&cand) && units.iter().all(|v| v.name != cand) {
                        break cand;
                    }
                    n += 1;
                };
                renames.insert(u.name.clone(), fresh);
            }
        }
        for mut u in units {
            if let Some(n) = renames.get(&u.name) {
                u.name = n.clone();
            }
            if !renames.is_empty() {
                let insts: Vec<_> = u.all_insts().collect();
                for i in insts {
                    if let Extra::Unit { name, .. } = &mut u.inst_data_mut(i).extra {
                        if let Some(n) = renames.get(name) {
                            *name = n.clone();
                        }
                    }
                }
            }
            if u.name.is_global() {
                if defined.contains_key(&u.name) {
                    return Err(LinkError::DuplicateDefinition(u.name));
                }
                defined.insert(u.name.clone(), (u.kind, u.sig.clone()));
            } else {
                locals.insert(u.name.clone());
            }
            out.add_unit(u);
        }
        for d in m.declarations() {
            match decls.iter().find(|x| x.name == d.name) {
                Some(prev) if prev.sig != d.sig || prev.function != d.function => {
                    return Err(LinkError::SignatureMismatch {
                        name: d.name.clone(),
                        declared: prev.sig.clone(),
                        defined: d.sig.clone(),
                    })
                }
                Some(_) => {}
                None => decls.push(d.clone()),
            }
        }
    }

    for d in decls {
        match defined.get(&d.name) {
            Some((kind, sig)) => {
                if *sig != d.sig || !kind_matches(&d, *kind) {
                    return Err(LinkError::SignatureMismatch {
                        name: d.name,
                        declared: d.sig,
                        defined: sig.clone(),
                    });
                }
            }
            None => out.add_declaration(d),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::ty::Type;

    fn decl(name: &str, ports: usize) -> Module {
        let mut m = Module::new();
        m.add_declaration(Declaration {
            name: UnitName::global(name),
            sig: Signature::component(vec![Type::signal(Type::int(1)); ports], vec![]),
            function: false,
        });
        m
    }

    fn def(name: &str, ports: usize) -> Module {
        let mut m = Module::new();
        m.build_unit(
            UnitKind::Entity,
            UnitName::global(name),
            Signature::component(vec![Type::signal(Type::int(1)); ports], vec![]),
        )
        .unwrap();
        m
    }

    #[test]
    fn resolves_declaration() {
        let m = link(vec![decl("acc", 1), def("acc", 1)]).unwrap();
        assert_eq!(m.unit_count(), 1);
        assert!(m.declarations().is_empty());
    }

    #[test]
    fn keeps_unmatched_declaration() {
        let m = link(vec![decl("ext", 1), def("acc", 1)]).unwrap();
        assert_eq!(m.declarations().len(), 1);
    }

    #[test]
    fn duplicate_definition() {
        let err = link(vec![def("acc", 1), def("acc", 1)]).unwrap_err();
        assert_eq!(err, LinkError::DuplicateDefinition(UnitName::global("acc")));
    }

    #[test]
    fn port_count_mismatch() {
        let err = link(vec![decl("ext", 1), def("ext", 2)]).unwrap_err();
        assert!(matches!(err, LinkError::SignatureMismatch { .. }));
        assert!(err.to_string().contains("@ext"));
    }

    #[test]
    fn renames_colliding_locals() {
        let local = || {
            let mut m = Module::new();
            m.build_unit(UnitKind::Entity, UnitName::local("helper"), Signature::default())
                .unwrap();
            m
        };
        let m = link(vec![local(), local()]).unwrap();
        let names: Vec<_> = m.units().map(|(_, u)| u.name.to_string()).collect();
        assert_eq!(names, vec!["%helper", "%helper.1"]);
    }
}
