//! Variables, variable sets, queries and valuations.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Index of a variable inside its query. Ids are dense, starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub u8);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Largest number of variables a query may use.
pub const MAX_VARS: usize = 64;

/// A set of variables, stored as a bitmask. Iteration is in ascending id order,
/// which is also the canonical column order of every relation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct VarSet(pub u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn single(v: VarId) -> Self {
        VarSet(1 << v.0)
    }

    pub fn from_ids<I: IntoIterator<Item = VarId>>(ids: I) -> Self {
        ids.into_iter().fold(Self::EMPTY, |s, v| s.with(v))
    }

    pub fn with(self, v: VarId) -> Self {
        VarSet(self.0 | 1 << v.0)
    }

    pub fn without(self, v: VarId) -> Self {
        VarSet(self.0 & !(1 << v.0))
    }

    pub fn contains(self, v: VarId) -> bool {
        self.0 >> v.0 & 1 == 1
    }

    pub fn union(self, o: Self) -> Self {
        VarSet(self.0 | o.0)
    }

    pub fn inter(self, o: Self) -> Self {
        VarSet(self.0 & o.0)
    }

    pub fn minus(self, o: Self) -> Self {
        VarSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Column position of `v` among the members of this set.
    pub fn position(self, v: VarId) -> usize {
        (self.0 & ((1u64 << v.0) - 1)).count_ones() as usize
    }

    /// Lowest member, if any.
    pub fn first(self) -> Option<VarId> {
        (self.0 != 0).then(|| VarId(self.0.trailing_zeros() as u8))
    }

    pub fn iter(self) -> VarSetIter {
        VarSetIter(self.0)
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|v| v.0)).finish()
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        Self::from_ids(iter)
    }
}

impl IntoIterator for VarSet {
    type Item = VarId;
    type IntoIter = VarSetIter;
    fn into_iter(self) -> VarSetIter {
        self.iter()
    }
}

pub struct VarSetIter(u64);

impl Iterator for VarSetIter {
    type Item = VarId;

    fn next(&mut self) -> Option<VarId> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(VarId(v as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for VarSetIter {}

/// An interned domain value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Value(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
}

/// One body atom `R_J(x_J)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub name: String,
    pub vars: VarSet,
    /// Variables in the order they were written; data files use this order.
    pub columns: Vec<VarId>,
}

/// A conjunctive query `Q(x_F) ← ⋀ R_J(x_J)`.
///
/// Queries derived by analysis (reduced queries, components) keep the full
/// variable table of their origin so ids stay comparable, even when some
/// variables no longer occur in any atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    name: String,
    vars: Vec<Variable>,
    atoms: Vec<Atom>,
    free: VarSet,
}

impl Query {
    /// Builds a query from variable names. Ids follow first appearance in the body.
    ///
    /// ```
    /// use osyan::Query;
    /// let q = Query::new("Q", &["x1", "x3"], &[("R", &["x1", "x2"]), ("S", &["x2", "x3"])]).unwrap();
    /// assert_eq!(q.atoms().len(), 2);
    /// assert_eq!(q.free().len(), 2);
    /// ```
    pub fn new(name: &str, free: &[&str], atoms: &[(&str, &[&str])]) -> Result<Query> {
        if atoms.is_empty() {
            return Err(Error::Schema("a query needs at least one atom".into()));
        }
        let mut vars: Vec<Variable> = Vec::new();
        let mut by_name: HashMap<&str, VarId> = HashMap::new();
        let mut out_atoms = Vec::with_capacity(atoms.len());
        for &(aname, cols) in atoms {
            if out_atoms.iter().any(|a: &Atom| a.name == aname) {
                return Err(Error::Schema(format!("duplicate atom name `{aname}`")));
            }
            let mut columns = Vec::with_capacity(cols.len());
            let mut set = VarSet::EMPTY;
            for &c in cols {
                let id = match by_name.get(c) {
                    Some(&id) => id,
                    None => {
                        if vars.len() == MAX_VARS {
                            return Err(Error::Schema(format!("more than {MAX_VARS} variables")));
                        }
                        let id = VarId(vars.len() as u8);
                        vars.push(Variable { id, name: c.to_string() });
                        by_name.insert(c, id);
                        id
                    }
                };
                if set.contains(id) {
                    return Err(Error::Schema(format!("variable `{c}` repeated in atom `{aname}`")));
                }
                set = set.with(id);
                columns.push(id);
            }
            out_atoms.push(Atom { name: aname.to_string(), vars: set, columns });
        }
        let mut fset = VarSet::EMPTY;
        for &f in free {
            match by_name.get(f) {
                Some(&id) => fset = fset.with(id),
                None => return Err(Error::Schema(format!("free variable `{f}` does not occur in the body"))),
            }
        }
        Ok(Query { name: name.to_string(), vars, atoms: out_atoms, free: fset })
    }

    /// Builds a derived query over an existing variable table.
    pub fn from_parts(name: &str, vars: Vec<Variable>, atoms: Vec<Atom>, free: VarSet) -> Result<Query> {
        if atoms.is_empty() {
            return Err(Error::Schema("a query needs at least one atom".into()));
        }
        let q = Query { name: name.to_string(), vars, atoms, free };
        for (i, v) in q.vars.iter().enumerate() {
            if v.id.index() != i {
                return Err(Error::Schema("variable ids must be dense".into()));
            }
        }
        for (i, a) in q.atoms.iter().enumerate() {
            if q.atoms[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Schema(format!("duplicate atom name `{}`", a.name)));
            }
            if VarSet::from_ids(a.columns.iter().copied()) != a.vars || a.columns.len() != a.vars.len() {
                return Err(Error::Schema(format!("atom `{}` has inconsistent columns", a.name)));
            }
        }
        if !q.free.is_subset(q.used_vars()) {
            return Err(Error::Schema("free variables must occur in the body".into()));
        }
        Ok(q)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn free(&self) -> VarSet {
        self.free
    }

    /// Union of all atom variable sets.
    pub fn used_vars(&self) -> VarSet {
        self.atoms.iter().fold(VarSet::EMPTY, |s, a| s.union(a.vars))
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.name == name)
    }

    /// Variable set from names; unknown names are a schema error.
    pub fn var_set(&self, names: &[&str]) -> Result<VarSet> {
        names
            .iter()
            .map(|n| self.var(n).ok_or_else(|| Error::Schema(format!("unknown variable `{n}`"))))
            .collect()
    }

    pub fn is_full(&self) -> bool {
        self.free == self.used_vars()
    }

    /// Renders a variable set with names, e.g. `{x1, x4}`.
    pub fn show(&self, s: VarSet) -> String {
        let names: Vec<&str> = s.iter().map(|v| self.var_name(v)).collect();
        format!("{{{}}}", names.join(", "))
    }

    /// Same variables and free set, different atoms.
    pub fn with_atoms(&self, name: &str, atoms: Vec<Atom>, free: VarSet) -> Result<Query> {
        Query::from_parts(name, self.vars.clone(), atoms, free)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<&str> = self.free.iter().map(|v| self.var_name(v)).collect();
        write!(f, "{}({}) <- ", self.name, head.join(", "))?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let cols: Vec<&str> = a.columns.iter().map(|&v| self.var_name(v)).collect();
            write!(f, "{}({})", a.name, cols.join(", "))?;
        }
        Ok(())
    }
}

/// A partial assignment of values to variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Valuation {
    vars: VarSet,
    values: Vec<Value>,
}

impl Valuation {
    pub fn new<I: IntoIterator<Item = (VarId, Value)>>(pairs: I) -> Result<Valuation> {
        let mut pairs: Vec<(VarId, Value)> = pairs.into_iter().collect();
        pairs.sort();
        let mut vars = VarSet::EMPTY;
        for &(v, _) in &pairs {
            if vars.contains(v) {
                return Err(Error::Schema(format!("variable {} assigned twice", v.0)));
            }
            vars = vars.with(v);
        }
        Ok(Valuation { vars, values: pairs.into_iter().map(|p| p.1).collect() })
    }

    pub fn empty() -> Valuation {
        Valuation::default()
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn get(&self, v: VarId) -> Option<Value> {
        self.vars.contains(v).then(|| self.values[self.vars.position(v)])
    }

    /// Values in ascending variable order.
    pub fn values(&self) -> &[Value] {
        &self.values
    }
}

/// String interner mapping external values to dense [`Value`] ids.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    ids: HashMap<String, Value>,
    names: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, s: &str) -> Value {
        if let Some(&v) = self.ids.get(s) {
            return v;
        }
        let v = Value(self.names.len() as u32);
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), v);
        v
    }

    pub fn lookup(&self, s: &str) -> Option<Value> {
        self.ids.get(s).copied()
    }

    pub fn decode(&self, v: Value) -> &str {
        &self.names[v.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
