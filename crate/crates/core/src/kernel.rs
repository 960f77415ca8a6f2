//! Semijoin programs and degree-based partitioning.

use crate::error::{Error, Result};
use crate::model::{Query, VarSet};
use crate::relation::{Database, Relation};
use crate::semiring::Semiring;
use crate::stats::EvalStats;
use crate::tree::JoinTree;
use crate::work::WorkTree;

pub use crate::relation::semijoin;

/// A relation split by the degree of its key groups.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyLightSplit<S: Semiring> {
    /// Rows whose key group has more than `threshold` rows.
    pub heavy: Relation<S>,
    pub light: Relation<S>,
    pub threshold: u64,
    pub key: VarSet,
}

/// Splits `rel` into key groups of size `> threshold` (heavy) and the rest.
///
/// ```
/// use osyan::{partition_heavy_light, Boolean, Relation, Value, VarId, VarSet};
/// let rows = [(1, 1), (1, 2), (1, 3), (2, 1)];
/// let r = Relation::<Boolean>::from_rows(
///     VarSet::from_ids([VarId(0), VarId(1)]),
///     rows.iter().map(|&(a, b)| (vec![Value(a), Value(b)], true)),
/// )
/// .unwrap();
/// let split = partition_heavy_light(&r, VarSet::single(VarId(0)), 2).unwrap();
/// assert_eq!((split.heavy.len(), split.light.len()), (3, 1));
/// ```
pub fn partition_heavy_light<S: Semiring>(rel: &Relation<S>, key: VarSet, threshold: u64) -> Result<HeavyLightSplit<S>> {
    if threshold < 1 {
        return Err(Error::Config("heavy/light threshold must be at least 1".into()));
    }
    if !key.is_subset(rel.vars()) {
        return Err(Error::Schema(format!("split key {:?} outside {:?}", key, rel.vars())));
    }
    let n = rel.len();
    let mut heavy_row = vec![false; n];
    if (n as u64) > threshold {
        let index = rel.key_index(key);
        for head in index.heads() {
            let members: Vec<u32> = index.chain(head).collect();
            if members.len() as u64 > threshold {
                for m in members {
                    heavy_row[m as usize] = true;
                }
            }
        }
    }
    Ok(HeavyLightSplit {
        heavy: rel.retain_rows(|i| heavy_row[i]),
        light: rel.retain_rows(|i| !heavy_row[i]),
        threshold,
        key,
    })
}

/// Number of distinct projections of `rel` onto `key`.
pub fn count_distinct_keys<S: Semiring>(rel: &Relation<S>, key: VarSet) -> Result<usize> {
    if !key.is_subset(rel.vars()) {
        return Err(Error::Schema(format!("key {:?} outside {:?}", key, rel.vars())));
    }
    if rel.is_empty() {
        return Ok(0);
    }
    Ok(rel.key_index(key).groups())
}

/// Removes dangling tuples: semijoins leaves-to-root, then root-to-leaves.
///
/// Afterwards every remaining tuple takes part in some full-join result.
/// Annotations are left untouched.
pub fn full_reducer<S: Semiring>(q: &Query, db: &Database<S>, tree: &JoinTree, stats: &mut EvalStats) -> Result<Database<S>> {
    let mut w = WorkTree::from_query(q, db, tree)?;
    w.full_reduce(tree.root(), stats)?;
    Ok(w.into_database())
}
