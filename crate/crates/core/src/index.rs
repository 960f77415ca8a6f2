//! Hash grouping of relation rows by a subset of their columns.

use std::hash::Hasher;

use hashbrown::HashTable;
use rustc_hash::FxHasher;

use crate::model::{Value, VarSet};

pub(crate) const NIL: u32 = u32::MAX;

pub(crate) fn hash_cols(row: &[Value], cols: &[usize]) -> u64 {
    let mut h = FxHasher::default();
    for &c in cols {
        h.write_u32(row[c].0);
    }
    h.finish()
}

pub(crate) fn hash_row(row: &[Value]) -> u64 {
    let mut h = FxHasher::default();
    for v in row {
        h.write_u32(v.0);
    }
    h.finish()
}

pub(crate) fn eq_cols(a: &[Value], acols: &[usize], b: &[Value], bcols: &[usize]) -> bool {
    acols.iter().zip(bcols).all(|(&i, &j)| a[i] == b[j])
}

/// Positions of `sub`'s members among the columns of a relation over `vars`.
pub(crate) fn cols_of(vars: VarSet, sub: VarSet) -> Vec<usize> {
    sub.iter().map(|v| vars.position(v)).collect()
}

/// Rows of a flat row-major table grouped by key columns.
///
/// Each group is a linked chain threaded through `next`, headed by the
/// entry stored in the hash table.
pub(crate) struct KeyIndex {
    table: HashTable<u32>,
    next: Vec<u32>,
    cols: Vec<usize>,
    arity: usize,
}

impl KeyIndex {
    pub(crate) fn build(data: &[Value], arity: usize, rows: usize, cols: Vec<usize>) -> KeyIndex {
        let mut table: HashTable<u32> = HashTable::with_capacity(rows.min(1 << 20));
        let mut next = vec![NIL; rows];
        let row = |i: u32| &data[i as usize * arity..(i as usize + 1) * arity];
        for i in 0..rows as u32 {
            let r = row(i);
            let h = hash_cols(r, &cols);
            match table.find_mut(h, |&head| eq_cols(row(head), &cols, r, &cols)) {
                Some(head) => {
                    next[i as usize] = *head;
                    *head = i;
                }
                None => {
                    table.insert_unique(h, i, |&j| hash_cols(row(j), &cols));
                }
            }
        }
        KeyIndex { table, next, cols, arity }
    }

    /// Head of the group matching `probe` on `probe_cols`, or `NIL`.
    pub(crate) fn find(&self, data: &[Value], probe: &[Value], probe_cols: &[usize]) -> u32 {
        let arity = self.arity;
        let h = hash_cols(probe, probe_cols);
        self.table
            .find(h, |&head| {
                eq_cols(&data[head as usize * arity..(head as usize + 1) * arity], &self.cols, probe, probe_cols)
            })
            .copied()
            .unwrap_or(NIL)
    }

    pub(crate) fn next(&self, i: u32) -> u32 {
        self.next[i as usize]
    }

    /// Group heads, one per distinct key.
    pub(crate) fn heads(&self) -> impl Iterator<Item = u32> + '_ {
        self.table.iter().copied()
    }

    pub(crate) fn groups(&self) -> usize {
        self.table.len()
    }

    pub(crate) fn chain(&self, head: u32) -> Chain<'_> {
        Chain { index: self, at: head }
    }
}

pub(crate) struct Chain<'a> {
    index: &'a KeyIndex,
    at: u32,
}

impl Iterator for Chain<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.at == NIL {
            return None;
        }
        let cur = self.at;
        self.at = self.index.next(cur);
        Some(cur)
    }
}
