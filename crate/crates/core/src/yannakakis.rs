//! Bottom-up Yannakakis evaluation over a join tree.

use crate::error::{Error, Result};
use crate::model::{Query, VarSet};
use crate::relation::{join, project, Database, Relation};
use crate::semiring::Semiring;
use crate::stats::EvalStats;
use crate::tree::JoinTree;
use crate::work::WorkTree;

/// Output-size hint used to check heavy-call materializations against
/// `OUT / Δ_s · |R_s|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeavyAudit {
    pub out: u64,
    pub delta_s: u64,
}

/// Evaluates `π_F` of the join over `w`, rooted at `root`.
///
/// Each internal node joins in its children one at a time, each child first
/// projected onto its free variables plus the variables it shares with the
/// node. When `tables` is given, it receives every node's final table.
pub(crate) fn yannakakis_core<S: Semiring>(
    mut w: WorkTree<S>,
    root: usize,
    stats: &mut EvalStats,
    audit: Option<HeavyAudit>,
    mut tables: Option<&mut Vec<(usize, Relation<S>)>>,
) -> Result<Relation<S>> {
    w.full_reduce(root, stats)?;
    let rt = w.rooted(root);
    for &s in &rt.post_order {
        if rt.children[s].is_empty() {
            if let Some(t) = tables.as_deref_mut() {
                t.push((s, w.rels[s].clone()));
            }
            continue;
        }
        let base = w.rels[s].len() as u64;
        let mut t = std::mem::replace(&mut w.rels[s], Relation::empty(VarSet::EMPTY));
        for &c in &rt.children[s] {
            let child = std::mem::replace(&mut w.rels[c], Relation::empty(VarSet::EMPTY));
            let keep = child.vars().inter(w.free.union(w.bags[s]));
            stats.charge(child.len() as u64)?;
            let p = project(&child, keep)?;
            drop(child);
            t = join(&t, &p, stats)?;
            stats.record(&w.labels[s], t.len());
        }
        if let Some(a) = audit {
            stats.heavy_audit_checks += 1;
            if (t.len() as u128) * (a.delta_s as u128) > (a.out as u128) * (base as u128) {
                stats.heavy_audit_violations += 1;
            }
        }
        w.bags[s] = t.vars();
        w.rels[s] = t;
        if cfg!(debug_assertions) {
            w.check_running_intersection()?;
        }
        if let Some(tb) = tables.as_deref_mut() {
            tb.push((s, w.rels[s].clone()));
        }
    }
    let top = &w.rels[root];
    stats.charge(top.len() as u64)?;
    let out = project(top, top.vars().inter(w.free))?;
    stats.record("output", out.len());
    Ok(out)
}

/// Classic Yannakakis: full reducer, then a bottom-up pass from the tree's root.
///
/// ```
/// use osyan::{yannakakis_eval, Counting, Database, EvalStats, JoinTree, Query};
/// let q = Query::new("P2", &["x1", "x3"], &[("R", &["x1", "x2"]), ("S", &["x2", "x3"])]).unwrap();
/// let mut db = Database::<Counting>::new();
/// db.insert_rows(&q, "R", &[&[0, 1], &[0, 2]]).unwrap();
/// db.insert_rows(&q, "S", &[&[1, 9], &[2, 9]]).unwrap();
/// let tree = JoinTree::for_query(&q).unwrap();
/// let out = yannakakis_eval(&q, &db, &tree, &mut EvalStats::new()).unwrap();
/// assert_eq!(out.to_sorted()[0].1, 2);
/// ```
pub fn yannakakis_eval<S: Semiring>(q: &Query, db: &Database<S>, tree: &JoinTree, stats: &mut EvalStats) -> Result<Relation<S>> {
    let w = WorkTree::from_query(q, db, tree)?;
    yannakakis_core(w, tree.root(), stats, None, None)
}

/// Per-node tables as `(node, T)` in processing order.
pub type NodeTables<S> = Vec<(usize, Relation<S>)>;

/// Like [`yannakakis_eval`], also returning each node's table after it was
/// processed.
pub fn yannakakis_node_tables<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    tree: &JoinTree,
    stats: &mut EvalStats,
) -> Result<(Relation<S>, NodeTables<S>)> {
    let w = WorkTree::from_query(q, db, tree)?;
    let mut tables = Vec::new();
    let out = yannakakis_core(w, tree.root(), stats, None, Some(&mut tables))?;
    Ok((out, tables))
}

/// Evaluates with the tree rooted at a heavy leaf.
///
/// The root relation must hold a free variable that no other node has, and
/// every group of its join variables must have more than `delta` rows.
pub fn heavy_leaf_eval<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    tree: &JoinTree,
    delta: u64,
    stats: &mut EvalStats,
) -> Result<Relation<S>> {
    let w = WorkTree::from_query(q, db, tree)?;
    let root = tree.root();
    check_heavy_root(&w, root, delta)?;
    yannakakis_core(w, root, stats, None, None)
}

/// Checks both preconditions for a heavy-rooted evaluation.
pub(crate) fn check_heavy_root<S: Semiring>(w: &WorkTree<S>, root: usize, delta: u64) -> Result<()> {
    let outside = w.vars_outside(root);
    if w.bags[root].inter(w.free).minus(outside).is_empty() {
        return Err(Error::Contract(format!("heavy root `{}` has no isolated free variable", w.labels[root])));
    }
    let key = w.bags[root].inter(outside);
    let rel = &w.rels[root];
    if rel.is_empty() {
        return Ok(());
    }
    let index = rel.key_index(key);
    for head in index.heads() {
        if index.chain(head).count() as u64 <= delta {
            return Err(Error::Contract(format!(
                "heavy root `{}` has a join-key group of degree at most {delta}",
                w.labels[root]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{Boolean, Counting, Tropical, Weight};

    fn p2() -> Query {
        Query::new("P2", &["x1", "x3"], &[("R", &["x1", "x2"]), ("S", &["x2", "x3"])]).unwrap()
    }

    #[test]
    fn two_path_in_three_semirings() {
        let q = p2();
        let t = JoinTree::for_query(&q).unwrap();
        let mut db = Database::<Boolean>::new();
        db.insert_rows(&q, "R", &[&[0, 1], &[0, 2]]).unwrap();
        db.insert_rows(&q, "S", &[&[1, 9], &[2, 9]]).unwrap();
        assert_eq!(yannakakis_eval(&q, &db, &t, &mut EvalStats::new()).unwrap().len(), 1);

        let mut db = Database::<Tropical>::new();
        db.insert_weighted(&q, "R", &[(&[0, 1], Weight(1)), (&[0, 2], Weight(4))]).unwrap();
        db.insert_weighted(&q, "S", &[(&[1, 9], Weight(2)), (&[2, 9], Weight(2))]).unwrap();
        let out = yannakakis_eval(&q, &db, &t, &mut EvalStats::new()).unwrap();
        assert_eq!(out.to_sorted()[0].1, Weight(3));
    }

    #[test]
    fn heavy_root_preconditions() {
        let q = p2();
        let mut db = Database::<Counting>::new();
        db.insert_rows(&q, "R", &[&[0, 1], &[3, 1], &[0, 2]]).unwrap();
        db.insert_rows(&q, "S", &[&[1, 9], &[2, 9]]).unwrap();
        let t = JoinTree::for_query(&q).unwrap();
        // x2 = 2 has degree 1 in R
        assert!(heavy_leaf_eval(&q, &db, &t, 1, &mut EvalStats::new()).is_err());
        db.insert_rows(&q, "R", &[&[0, 1], &[3, 1]]).unwrap();
        let out = heavy_leaf_eval(&q, &db, &t, 1, &mut EvalStats::new()).unwrap();
        assert_eq!(out.len(), 2);
    }
}
