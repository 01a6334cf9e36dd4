//! Nominal type lattice with declared `implements` edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::TypeExpr;
use super::{CheckError, TypeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeInfo {
    pub name: String,
    pub supers: Vec<TypeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeLattice {
    types: Vec<TypeInfo>,
    by_name: BTreeMap<String, TypeId>,
}

pub const UNK_TYPE_NAME: &str = "UnkType";

impl TypeLattice {
    pub const UNK: TypeId = TypeId(0);
    pub const INT: TypeId = TypeId(1);
    pub const BOOL: TypeId = TypeId(2);
    pub const STRING: TypeId = TypeId(3);
    pub const VOID: TypeId = TypeId(4);

    /// Lattice holding only the builtin types.
    pub fn primitives() -> Self {
        let mut l = TypeLattice { types: Vec::new(), by_name: BTreeMap::new() };
        for name in [UNK_TYPE_NAME, "int", "bool", "string", "void"] {
            l.push(name, Vec::new());
        }
        l
    }

    fn push(&mut self, name: &str, supers: Vec<TypeId>) -> TypeId {
        let id = TypeId(self.types.len());
        self.types.push(TypeInfo { name: name.to_string(), supers });
        self.by_name.insert(name.to_string(), id);
        id
    }

    /// Builds the lattice from `(name, supers)` declarations. Supertypes must be
    /// declared nominal types and the relation must be acyclic.
    pub fn from_decls(decls: &[(String, Vec<String>)]) -> Result<Self, CheckError> {
        let mut l = TypeLattice::primitives();
        for (name, _) in decls {
            if l.by_name.contains_key(name) {
                return Err(CheckError::Lattice(format!("type {name} declared twice")));
            }
            l.push(name, Vec::new());
        }
        for (name, supers) in decls {
            let id = l.by_name[name];
            let mut ids = Vec::new();
            for s in supers {
                match l.by_name.get(s) {
                    Some(&sid) if sid.0 > Self::VOID.0 => ids.push(sid),
                    _ => return Err(CheckError::Lattice(format!("{name} implements unknown type {s}"))),
                }
            }
            l.types[id.0].supers = ids;
        }
        l.validate()?;
        Ok(l)
    }

    /// Rebuilds a lattice from its serialized `(name, supers)` list, which must
    /// start with the builtin types in canonical order.
    pub fn from_infos(infos: &[(String, Vec<String>)]) -> Result<Self, CheckError> {
        let builtins = TypeLattice::primitives();
        let mut l = TypeLattice { types: Vec::new(), by_name: BTreeMap::new() };
        for (name, _) in infos {
            l.push(name, Vec::new());
        }
        for (i, (_, supers)) in infos.iter().enumerate() {
            let mut ids = Vec::new();
            for s in supers {
                let id = l.by_name.get(s).copied().ok_or_else(|| CheckError::Lattice(format!("unknown supertype {s}")))?;
                ids.push(id);
            }
            l.types[i].supers = ids;
        }
        if l.types.len() < builtins.types.len() || l.types[..builtins.types.len()] != builtins.types[..] {
            return Err(CheckError::Lattice("builtin types missing or out of order".into()));
        }
        l.validate()?;
        Ok(l)
    }

    /// Rejects cycles in the supers relation and supertypes on UnkType.
    pub fn validate(&self) -> Result<(), CheckError> {
        if !self.types[Self::UNK.0].supers.is_empty() {
            return Err(CheckError::Lattice("UnkType must not have supertypes".into()));
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.types.len()];
        fn visit(l: &TypeLattice, t: usize, state: &mut [u8]) -> Result<(), CheckError> {
            match state[t] {
                1 => return Err(CheckError::Lattice(format!("cycle through type {}", l.types[t].name))),
                2 => return Ok(()),
                _ => {}
            }
            state[t] = 1;
            for s in &l.types[t].supers {
                visit(l, s.0, state)?;
            }
            state[t] = 2;
            Ok(())
        }
        for t in 0..self.types.len() {
            visit(self, t, &mut state)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn name(&self, t: TypeId) -> &str {
        self.types.get(t.0).map_or(UNK_TYPE_NAME, |i| i.name.as_str())
    }

    pub fn id(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn supers(&self, t: TypeId) -> &[TypeId] {
        self.types.get(t.0).map_or(&[], |i| i.supers.as_slice())
    }

    pub fn infos(&self) -> &[TypeInfo] {
        &self.types
    }

    /// Interns a syntactic type, creating array types on demand. Named types
    /// must already be declared.
    pub fn resolve(&mut self, ty: &TypeExpr) -> Option<TypeId> {
        match ty {
            TypeExpr::Int => Some(Self::INT),
            TypeExpr::Bool => Some(Self::BOOL),
            TypeExpr::Str => Some(Self::STRING),
            TypeExpr::Void => Some(Self::VOID),
            TypeExpr::Named(n) => self.id(n).filter(|id| id.0 > Self::VOID.0 && !n.ends_with("[]")),
            TypeExpr::Array(elem) => {
                self.resolve(elem)?;
                let name = ty.to_string();
                Some(match self.id(&name) {
                    Some(id) => id,
                    None => self.push(&name, Vec::new()),
                })
            }
        }
    }

    /// Element type of an array type.
    pub fn element(&self, t: TypeId) -> Option<TypeId> {
        self.name(t).strip_suffix("[]").and_then(|n| self.id(n))
    }

    /// Reflexive-transitive closure of `t` over the supers relation. Unknown ids
    /// map to `{UnkType}`.
    pub fn supertype_closure(&self, t: TypeId) -> BTreeSet<TypeId> {
        if t.0 >= self.types.len() {
            return BTreeSet::from([Self::UNK]);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![t];
        while let Some(x) = stack.pop() {
            if seen.insert(x) {
                stack.extend(self.types[x.0].supers.iter().copied());
            }
        }
        seen
    }

    /// Whether a value of type `from` may be stored where `to` is expected.
    /// UnkType is compatible with everything.
    pub fn assignable(&self, from: TypeId, to: TypeId) -> bool {
        from == to || from == Self::UNK || to == Self::UNK || self.supertype_closure(from).contains(&to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls(spec: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
        spec.iter().map(|(n, s)| (n.to_string(), s.iter().map(|x| x.to_string()).collect())).collect()
    }

    fn names(l: &TypeLattice, set: &BTreeSet<TypeId>) -> BTreeSet<String> {
        set.iter().map(|t| l.name(*t).to_string()).collect()
    }

    /// Exhaustive walk: every type reachable by following any sequence of edges.
    fn closure_by_walk(l: &TypeLattice, t: TypeId) -> BTreeSet<String> {
        let mut out = BTreeSet::from([l.name(t).to_string()]);
        for s in l.supers(t) {
            out.extend(closure_by_walk(l, *s));
        }
        out
    }

    #[test]
    fn singleton_closure() {
        let l = TypeLattice::from_decls(&decls(&[("A", &[])])).unwrap();
        let a = l.id("A").unwrap();
        assert_eq!(l.supertype_closure(a), BTreeSet::from([a]));
    }

    #[test]
    fn diamond_closure() {
        let l = TypeLattice::from_decls(&decls(&[("A", &[]), ("B", &["A"]), ("C", &["A"]), ("D", &["B", "C"])])).unwrap();
        let d = l.id("D").unwrap();
        let want: BTreeSet<String> = ["D", "B", "C", "A"].iter().map(|s| s.to_string()).collect();
        assert_eq!(names(&l, &l.supertype_closure(d)), want);
        assert_eq!(closure_by_walk(&l, d), want);
    }

    #[test]
    fn unk_closure() {
        let l = TypeLattice::primitives();
        assert_eq!(l.supertype_closure(TypeLattice::UNK), BTreeSet::from([TypeLattice::UNK]));
        assert_eq!(l.supertype_closure(TypeId(999)), BTreeSet::from([TypeLattice::UNK]));
    }

    #[test]
    fn cycle_rejected() {
        let err = TypeLattice::from_decls(&decls(&[("A", &["B"]), ("B", &["A"])])).unwrap_err();
        assert!(matches!(err, CheckError::Lattice(_)));
        let err = TypeLattice::from_decls(&decls(&[("A", &["A"])])).unwrap_err();
        assert!(matches!(err, CheckError::Lattice(_)));
    }

    #[test]
    fn arrays_are_interned() {
        let mut l = TypeLattice::from_decls(&decls(&[("A", &[])])).unwrap();
        let t = TypeExpr::Array(Box::new(TypeExpr::Named("A".into())));
        let id = l.resolve(&t).unwrap();
        assert_eq!(l.resolve(&t), Some(id));
        assert_eq!(l.name(id), "A[]");
        assert_eq!(l.element(id), l.id("A"));
        assert_eq!(l.resolve(&TypeExpr::Named("Nope".into())), None);
    }
}
