//! Annotated relations, databases, and the basic relational operators.

use std::collections::BTreeMap;
use std::fmt;

use hashbrown::HashTable;

use crate::error::{Error, Result};
use crate::index::{cols_of, hash_cols, hash_row, KeyIndex, NIL};
use crate::model::{Query, Valuation, Value, VarId, VarSet};
use crate::semiring::Semiring;
use crate::stats::EvalStats;

/// A set of tuples over a variable set, each with a non-zero annotation.
///
/// Columns are in ascending variable id order. Rows are stored flat,
/// row-major, and are pairwise distinct.
pub struct Relation<S: Semiring> {
    vars: VarSet,
    arity: usize,
    data: Vec<Value>,
    ann: Vec<S::Elem>,
}

impl<S: Semiring> Clone for Relation<S> {
    fn clone(&self) -> Self {
        Relation { vars: self.vars, arity: self.arity, data: self.data.clone(), ann: self.ann.clone() }
    }
}

impl<S: Semiring> Relation<S> {
    pub fn empty(vars: VarSet) -> Self {
        Relation { vars, arity: vars.len(), data: Vec::new(), ann: Vec::new() }
    }

    /// The nullary relation holding the empty tuple with annotation `one`.
    pub fn unit() -> Self {
        Relation { vars: VarSet::EMPTY, arity: 0, data: Vec::new(), ann: vec![S::one()] }
    }

    /// Builds a relation from rows in canonical column order, ⊕-folding duplicates.
    pub fn from_rows<I>(vars: VarSet, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Value>, S::Elem)>,
    {
        let mut agg = Aggregator::new(vars);
        let all: Vec<usize> = (0..vars.len()).collect();
        for (row, a) in rows {
            if row.len() != vars.len() {
                return Err(Error::Schema(format!("row of length {} for arity {}", row.len(), vars.len())));
            }
            agg.insert(&row, &all, a)?;
        }
        Ok(agg.finish())
    }

    /// Builds a relation from rows whose columns follow `columns`, in any variable order.
    pub fn from_columns<I>(columns: &[VarId], rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Value>, S::Elem)>,
    {
        let vars = VarSet::from_ids(columns.iter().copied());
        if vars.len() != columns.len() {
            return Err(Error::Schema("repeated column".into()));
        }
        // perm[k] = position in the input row of the k-th canonical column
        let perm: Vec<usize> = vars.iter().map(|v| columns.iter().position(|&c| c == v).unwrap()).collect();
        let mut agg = Aggregator::new(vars);
        for (row, a) in rows {
            if row.len() != columns.len() {
                return Err(Error::Schema(format!("row of length {} for arity {}", row.len(), columns.len())));
            }
            agg.insert(&row, &perm, a)?;
        }
        Ok(agg.finish())
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.ann.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ann.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Value] {
        &self.data[i * self.arity..(i + 1) * self.arity]
    }

    pub fn annotation(&self, i: usize) -> S::Elem {
        self.ann[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Value], S::Elem)> + '_ {
        (0..self.len()).map(move |i| (self.row(i), self.ann[i]))
    }

    /// Rows with annotations, sorted by row.
    pub fn to_sorted(&self) -> Vec<(Vec<Value>, S::Elem)> {
        let mut v: Vec<(Vec<Value>, S::Elem)> = self.iter().map(|(r, a)| (r.to_vec(), a)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// Annotation of `row` (canonical order), or zero when absent.
    pub fn lookup(&self, row: &[Value]) -> S::Elem {
        self.iter().find(|(r, _)| *r == row).map_or(S::zero(), |(_, a)| a)
    }

    /// Checks the storage invariants: no zero annotation, no duplicate row.
    pub fn check(&self) -> Result<()> {
        if self.data.len() != self.arity * self.ann.len() {
            return Err(Error::Contract("row storage out of sync".into()));
        }
        if self.ann.iter().any(|&a| S::is_zero(a)) {
            return Err(Error::Contract("zero annotation stored".into()));
        }
        let mut seen: HashTable<u32> = HashTable::new();
        for i in 0..self.len() {
            let r = self.row(i);
            let h = hash_row(r);
            if seen.find(h, |&j| self.row(j as usize) == r).is_some() {
                return Err(Error::Contract("duplicate row stored".into()));
            }
            seen.insert_unique(h, i as u32, |&j| hash_row(self.row(j as usize)));
        }
        Ok(())
    }

    /// ⊕-merges `other` (same variables) into `self`.
    pub fn plus_assign(&mut self, other: &Relation<S>) -> Result<()> {
        if other.vars != self.vars {
            return Err(Error::Schema("⊕ of relations over different variables".into()));
        }
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() {
            *self = other.clone();
            return Ok(());
        }
        let all: Vec<usize> = (0..self.arity).collect();
        let mut agg = Aggregator::with_capacity(self.vars, self.len() + other.len());
        for (r, a) in self.iter().chain(other.iter()) {
            agg.insert(r, &all, a)?;
        }
        *self = agg.finish();
        Ok(())
    }

    pub(crate) fn push(&mut self, row: &[Value], a: S::Elem) {
        self.data.extend_from_slice(row);
        self.ann.push(a);
    }

    /// Keeps the rows for which `keep(i)` holds.
    pub(crate) fn retain_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Relation<S> {
        let mut out = Relation::empty(self.vars);
        for i in 0..self.len() {
            if keep(i) {
                out.push(self.row(i), self.ann[i]);
            }
        }
        out
    }

    pub(crate) fn key_index(&self, key: VarSet) -> KeyIndex {
        KeyIndex::build(&self.data, self.arity, self.len(), cols_of(self.vars, key))
    }

    /// Returns the row storage and annotations to a fresh state with room for `n` rows.
    pub(crate) fn reserve(&mut self, n: usize) {
        self.data.reserve(n * self.arity);
        self.ann.reserve(n);
    }
}

/// Annotation-exact equality, independent of row order.
impl<S: Semiring> PartialEq for Relation<S> {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.len() == other.len() && self.to_sorted() == other.to_sorted()
    }
}

impl<S: Semiring> fmt::Debug for Relation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation{:?}", self.vars)?;
        let rows = self.to_sorted();
        let shown: Vec<String> = rows
            .iter()
            .take(20)
            .map(|(r, a)| {
                let vals: Vec<String> = r.iter().map(|v| v.0.to_string()).collect();
                format!("({}):{:?}", vals.join(","), a)
            })
            .collect();
        write!(f, " {{{}", shown.join(", "))?;
        if rows.len() > 20 {
            write!(f, ", … {} more", rows.len() - 20)?;
        }
        f.write_str("}")
    }
}

/// Builds a relation by ⊕-folding rows that agree on their key.
pub(crate) struct Aggregator<S: Semiring> {
    rel: Relation<S>,
    table: HashTable<u32>,
}

impl<S: Semiring> Aggregator<S> {
    pub(crate) fn new(vars: VarSet) -> Self {
        Aggregator { rel: Relation::empty(vars), table: HashTable::new() }
    }

    pub(crate) fn with_capacity(vars: VarSet, n: usize) -> Self {
        let mut rel = Relation::empty(vars);
        rel.reserve(n);
        Aggregator { rel, table: HashTable::with_capacity(n) }
    }

    /// Adds the row made of `src[cols[0]], src[cols[1]], …` with annotation `a`.
    pub(crate) fn insert(&mut self, src: &[Value], cols: &[usize], a: S::Elem) -> Result<()> {
        let h = hash_cols(src, cols);
        let rel = &mut self.rel;
        let arity = rel.arity;
        let found = self
            .table
            .find(h, |&o| {
                let o = o as usize;
                rel.data[o * arity..(o + 1) * arity].iter().zip(cols).all(|(x, &c)| *x == src[c])
            })
            .copied();
        match found {
            Some(o) => {
                let o = o as usize;
                rel.ann[o] = S::plus(rel.ann[o], a)?;
            }
            None => {
                let idx = rel.ann.len() as u32;
                rel.data.extend(cols.iter().map(|&c| src[c]));
                rel.ann.push(a);
                let data = &rel.data;
                self.table.insert_unique(h, idx, |&o| hash_row(&data[o as usize * arity..(o as usize + 1) * arity]));
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Relation<S> {
        let rel = self.rel;
        if rel.ann.iter().any(|&a| S::is_zero(a)) {
            rel.retain_rows(|i| !S::is_zero(rel.ann[i]))
        } else {
            rel
        }
    }
}

/// `π_vars(rel)`, ⊕-aggregating annotations of rows that collapse together.
///
/// ```
/// use osyan::{project, Counting, Relation, Value, VarId, VarSet};
/// let (x, y) = (VarId(0), VarId(1));
/// let r = Relation::<Counting>::from_rows(
///     VarSet::from_ids([x, y]),
///     vec![(vec![Value(1), Value(1)], 1), (vec![Value(1), Value(2)], 1)],
/// )
/// .unwrap();
/// let p = project(&r, VarSet::single(x)).unwrap();
/// assert_eq!(p.to_sorted(), vec![(vec![Value(1)], 2)]);
/// ```
pub fn project<S: Semiring>(rel: &Relation<S>, vars: VarSet) -> Result<Relation<S>> {
    if !vars.is_subset(rel.vars) {
        return Err(Error::Schema(format!("cannot project {:?} onto {:?}", rel.vars, vars)));
    }
    if vars == rel.vars {
        return Ok(rel.clone());
    }
    let cols = cols_of(rel.vars, vars);
    let mut agg = Aggregator::new(vars);
    for i in 0..rel.len() {
        agg.insert(rel.row(i), &cols, rel.ann[i])?;
    }
    Ok(agg.finish())
}

/// `σ_{on}(rel)`: the rows agreeing with the valuation.
pub fn select_eq<S: Semiring>(rel: &Relation<S>, on: &Valuation) -> Result<Relation<S>> {
    if !on.vars().is_subset(rel.vars) {
        return Err(Error::Schema(format!("selection on {:?} outside {:?}", on.vars(), rel.vars)));
    }
    let cols = cols_of(rel.vars, on.vars());
    let vals = on.values();
    Ok(rel.retain_rows(|i| {
        let r = rel.row(i);
        cols.iter().zip(vals).all(|(&c, v)| r[c] == *v)
    }))
}

/// `d(v, S, R)`: number of rows agreeing with the valuation on its variables.
pub fn degree<S: Semiring>(rel: &Relation<S>, vars: VarSet, on: &Valuation) -> Result<usize> {
    if on.vars() != vars {
        return Err(Error::Schema("valuation must be defined exactly on the degree variables".into()));
    }
    Ok(select_eq(rel, on)?.len())
}

/// Natural join with ⊗ on annotations. Builds a hash index on the smaller side.
///
/// Charges every scanned input row and every produced row to `stats`.
pub fn join<S: Semiring>(left: &Relation<S>, right: &Relation<S>, stats: &mut EvalStats) -> Result<Relation<S>> {
    let shared = left.vars.inter(right.vars);
    let out_vars = left.vars.union(right.vars);
    let (build, probe) = if left.len() <= right.len() { (left, right) } else { (right, left) };
    stats.charge((build.len() + probe.len()) as u64)?;
    let mut out = Relation::empty(out_vars);
    if build.is_empty() {
        return Ok(out);
    }
    let index = build.key_index(shared);
    let pcols = cols_of(probe.vars, shared);
    // (from build side?, column) for each output column
    let map: Vec<(bool, usize)> = out_vars
        .iter()
        .map(|v| if build.vars.contains(v) { (true, build.vars.position(v)) } else { (false, probe.vars.position(v)) })
        .collect();
    out.reserve(probe.len().max(build.len()));
    let mut pending = 0u64;
    for p in 0..probe.len() {
        let prow = probe.row(p);
        let mut b = index.find(&build.data, prow, &pcols);
        while b != NIL {
            let brow = build.row(b as usize);
            let a = S::times(build.ann[b as usize], probe.ann[p])?;
            if !S::is_zero(a) {
                out.data.extend(map.iter().map(|&(fb, c)| if fb { brow[c] } else { prow[c] }));
                out.ann.push(a);
            }
            pending += 1;
            if pending == 1 << 14 {
                stats.charge(pending)?;
                pending = 0;
            }
            b = index.next(b);
        }
    }
    stats.charge(pending)?;
    Ok(out)
}

/// `left ⋉ right`: rows of `left` with at least one partner in `right`.
pub fn semijoin<S: Semiring>(left: &Relation<S>, right: &Relation<S>, stats: &mut EvalStats) -> Result<Relation<S>> {
    stats.charge((left.len() + right.len()) as u64)?;
    let shared = left.vars.inter(right.vars);
    if shared.is_empty() {
        return Ok(if right.is_empty() { Relation::empty(left.vars) } else { left.clone() });
    }
    let index = right.key_index(shared);
    let lcols = cols_of(left.vars, shared);
    let out = left.retain_rows(|i| index.find(&right.data, left.row(i), &lcols) != NIL);
    Ok(out)
}

/// Named relations, one per query atom.
pub struct Database<S: Semiring> {
    relations: BTreeMap<String, Relation<S>>,
}

impl<S: Semiring> Clone for Database<S> {
    fn clone(&self) -> Self {
        Database { relations: self.relations.clone() }
    }
}

impl<S: Semiring> Default for Database<S> {
    fn default() -> Self {
        Database { relations: BTreeMap::new() }
    }
}

impl<S: Semiring> fmt::Debug for Database<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.relations.iter()).finish()
    }
}

impl<S: Semiring> PartialEq for Database<S> {
    fn eq(&self, other: &Self) -> bool {
        self.relations == other.relations
    }
}

impl<S: Semiring> Database<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, rel: Relation<S>) {
        self.relations.insert(name.to_string(), rel);
    }

    /// Adds a relation for `atom` from rows written in the atom's declared column order.
    pub fn insert_weighted(&mut self, q: &Query, atom: &str, rows: &[(&[u32], S::Elem)]) -> Result<()> {
        let a = q
            .atoms()
            .iter()
            .find(|a| a.name == atom)
            .ok_or_else(|| Error::Schema(format!("no atom named `{atom}`")))?;
        let rel = Relation::from_columns(
            &a.columns,
            rows.iter().map(|(r, w)| (r.iter().map(|&v| Value(v)).collect(), *w)),
        )?;
        self.insert(atom, rel);
        Ok(())
    }

    /// As [`Database::insert_weighted`], annotating every row with `one`.
    pub fn insert_rows(&mut self, q: &Query, atom: &str, rows: &[&[u32]]) -> Result<()> {
        let rows: Vec<(&[u32], S::Elem)> = rows.iter().map(|&r| (r, S::one())).collect();
        self.insert_weighted(q, atom, &rows)
    }

    pub fn get(&self, name: &str) -> Option<&Relation<S>> {
        self.relations.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Relation<S>> {
        self.relations.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Relation<S>> {
        self.relations.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Relation<S>)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// `|D|`, the total number of tuples.
    pub fn size(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    /// Relations of `q`'s atoms in atom order, checking each schema.
    pub fn relations_for(&self, q: &Query) -> Result<Vec<&Relation<S>>> {
        q.atoms()
            .iter()
            .map(|a| {
                let r = self
                    .get(&a.name)
                    .ok_or_else(|| Error::Schema(format!("no relation for atom `{}`", a.name)))?;
                if r.vars() != a.vars {
                    return Err(Error::Schema(format!(
                        "relation `{}` has variables {:?}, atom expects {:?}",
                        a.name,
                        r.vars(),
                        a.vars
                    )));
                }
                Ok(r)
            })
            .collect()
    }

    /// `|D|` restricted to the atoms of `q`.
    pub fn size_for(&self, q: &Query) -> Result<usize> {
        Ok(self.relations_for(q)?.iter().map(|r| r.len()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{Boolean, Counting, Tropical, Weight};

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);
    const Z: VarId = VarId(2);

    fn rel<S: Semiring>(vars: &[VarId], rows: &[(&[u32], S::Elem)]) -> Relation<S> {
        Relation::from_columns(vars, rows.iter().map(|(r, a)| (r.iter().map(|&v| Value(v)).collect(), *a))).unwrap()
    }

    fn xy() -> VarSet {
        VarSet::from_ids([X, Y])
    }

    #[test]
    fn projection_aggregates_per_semiring() {
        let b = rel::<Boolean>(&[X, Y], &[(&[1, 1], true), (&[1, 2], true)]);
        assert_eq!(project(&b, VarSet::single(X)).unwrap().len(), 1);
        let c = rel::<Counting>(&[X, Y], &[(&[1, 1], 1), (&[1, 2], 1)]);
        assert_eq!(project(&c, VarSet::single(X)).unwrap().to_sorted(), vec![(vec![Value(1)], 2)]);
        let t = rel::<Tropical>(&[X, Y], &[(&[1, 1], Weight(5)), (&[1, 2], Weight(3))]);
        assert_eq!(project(&t, VarSet::single(X)).unwrap().to_sorted(), vec![(vec![Value(1)], Weight(3))]);
        assert!(project(&t, VarSet::single(Z)).is_err());
        assert_eq!(project(&c, VarSet::EMPTY).unwrap().to_sorted(), vec![(vec![], 2)]);
    }

    #[test]
    fn from_columns_reorders_and_folds() {
        let r = rel::<Counting>(&[Y, X], &[(&[7, 1], 1), (&[7, 1], 1), (&[8, 2], 1)]);
        assert_eq!(r.to_sorted(), vec![(vec![Value(1), Value(7)], 2), (vec![Value(2), Value(8)], 1)]);
        let t = rel::<Tropical>(&[X], &[(&[1], Weight::INF)]);
        assert!(t.is_empty());
    }

    #[test]
    fn selection_and_degree() {
        let r = rel::<Boolean>(&[X, Y], &[(&[1, 1], true), (&[1, 2], true), (&[2, 1], true)]);
        let on = |v| Valuation::new([(X, Value(v))]).unwrap();
        assert_eq!(select_eq(&r, &on(1)).unwrap().len(), 2);
        assert_eq!(select_eq(&r, &on(3)).unwrap().len(), 0);
        assert_eq!(select_eq(&r, &Valuation::empty()).unwrap(), r);
        assert_eq!(degree(&r, VarSet::single(X), &on(1)).unwrap(), 2);
        assert_eq!(degree(&r, VarSet::single(X), &on(2)).unwrap(), 1);
        assert_eq!(degree(&r, VarSet::EMPTY, &Valuation::empty()).unwrap(), 3);
    }

    #[test]
    fn join_multiplies_annotations() {
        let mut s = EvalStats::new();
        let l = rel::<Counting>(&[X, Y], &[(&[1, 1], 2)]);
        let r = rel::<Counting>(&[Y, Z], &[(&[1, 9], 3)]);
        let j = join(&l, &r, &mut s).unwrap();
        assert_eq!(j.to_sorted(), vec![(vec![Value(1), Value(1), Value(9)], 6)]);
        let lt = rel::<Tropical>(&[X, Y], &[(&[1, 1], Weight(2))]);
        let rt = rel::<Tropical>(&[Y, Z], &[(&[1, 9], Weight(3))]);
        assert_eq!(join(&lt, &rt, &mut s).unwrap().to_sorted()[0].1, Weight(5));
        assert!(s.tuple_ops > 0);
    }

    #[test]
    fn join_of_disjoint_schemas_is_a_product() {
        let mut s = EvalStats::new();
        let l = rel::<Boolean>(&[X], &[(&[1], true), (&[2], true)]);
        let r = rel::<Boolean>(&[Y], &[(&[5], true), (&[6], true), (&[7], true)]);
        assert_eq!(join(&l, &r, &mut s).unwrap().len(), 6);
        assert_eq!(join(&l, &Relation::unit(), &mut s).unwrap(), l);
    }

    #[test]
    fn semijoin_filters() {
        let mut s = EvalStats::new();
        let l = rel::<Boolean>(&[X, Y], &[(&[1, 1], true), (&[2, 2], true)]);
        let r = rel::<Boolean>(&[Y], &[(&[1], true)]);
        assert_eq!(semijoin(&l, &r, &mut s).unwrap().to_sorted().len(), 1);
        assert_eq!(semijoin(&l, &l, &mut s).unwrap(), l);
        assert!(semijoin(&l, &Relation::empty(VarSet::single(Y)), &mut s).unwrap().is_empty());
        let other = rel::<Boolean>(&[Z], &[(&[4], true)]);
        assert_eq!(semijoin(&l, &other, &mut s).unwrap(), l);
        assert!(semijoin(&l, &Relation::empty(VarSet::single(Z)), &mut s).unwrap().is_empty());
        let _ = xy();
    }

    #[test]
    fn plus_assign_merges() {
        let mut a = rel::<Counting>(&[X], &[(&[1], 1), (&[2], 1)]);
        let b = rel::<Counting>(&[X], &[(&[2], 4), (&[3], 1)]);
        a.plus_assign(&b).unwrap();
        assert_eq!(a.to_sorted().iter().map(|r| r.1).collect::<Vec<_>>(), vec![1, 5, 1]);
        a.check().unwrap();
    }
}
