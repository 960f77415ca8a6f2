//! Path queries `P_k(x1, x_{k+1})` evaluated by splitting the chain at its midpoint.

use crate::error::{Error, Result};
use crate::generalized::{doubling, generalized_core, GenOptions};
use crate::kernel::{count_distinct_keys, partition_heavy_light};
use crate::model::{Query, VarId, VarSet};
use crate::relation::{join, project, Database, Relation};
use crate::semiring::Semiring;
use crate::stats::EvalStats;
use crate::tree::JoinTree;
use crate::work::WorkTree;
use crate::yannakakis::{yannakakis_core, yannakakis_eval};

/// A query recognized as a path, with its atoms and variables in chain order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathQuery {
    /// `atoms[i]` is the query atom over `(vars[i], vars[i+1])`.
    pub atoms: Vec<usize>,
    pub vars: Vec<VarId>,
}

impl PathQuery {
    /// Recognizes `P_k`: binary atoms forming a simple chain whose two
    /// endpoints are exactly the free variables. The endpoint with the lower
    /// id becomes `x1`.
    pub fn detect(q: &Query) -> Result<PathQuery> {
        let unsupported = |why: &str| Err(Error::UnsupportedShape(format!("`{}` is not a path query: {why}", q.name())));
        let atoms = q.atoms();
        if atoms.iter().any(|a| a.vars.len() != 2) {
            return unsupported("every atom must have two variables");
        }
        let used = q.used_vars();
        let occurrences = |v: VarId| atoms.iter().filter(|a| a.vars.contains(v)).count();
        let ends: Vec<VarId> = used.iter().filter(|&v| occurrences(v) == 1).collect();
        if ends.len() != 2 || used.iter().any(|v| occurrences(v) > 2) {
            return unsupported("the atoms do not form a simple chain");
        }
        if q.free() != VarSet::from_ids(ends.iter().copied()) {
            return unsupported("the free variables must be the two endpoints");
        }
        let mut vars = vec![ends[0]];
        let mut order = Vec::with_capacity(atoms.len());
        let mut used_atom = vec![false; atoms.len()];
        loop {
            let cur = *vars.last().unwrap();
            let next = (0..atoms.len()).find(|&i| !used_atom[i] && atoms[i].vars.contains(cur));
            let Some(i) = next else { break };
            used_atom[i] = true;
            order.push(i);
            vars.push(atoms[i].vars.without(cur).first().unwrap());
        }
        if order.len() != atoms.len() {
            return unsupported("the atoms are not connected");
        }
        Ok(PathQuery { atoms: order, vars })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The chain join tree in the query's atom numbering.
    pub fn tree(&self, q: &Query, root: usize) -> Result<JoinTree> {
        let bags = q.atoms().iter().map(|a| a.vars).collect();
        let labels = q.atoms().iter().map(|a| a.name.clone()).collect();
        let edges: Vec<(usize, usize)> = self.atoms.windows(2).map(|w| (w[0], w[1])).collect();
        JoinTree::new(bags, labels, &edges, root)
    }
}

/// Builds `P_k(x1, x_{k+1}) ← R12(x1, x2), …, R_{k,k+1}(x_k, x_{k+1})`.
pub fn path_query(k: usize) -> Query {
    assert!(k >= 1, "path length must be positive");
    let names: Vec<String> = (1..=k + 1).map(|i| format!("x{i}")).collect();
    let label = |i: usize| if k < 9 { format!("R{}{}", i, i + 1) } else { format!("R{}_{}", i, i + 1) };
    let atoms: Vec<(String, [&str; 2])> = (0..k).map(|i| (label(i + 1), [names[i].as_str(), names[i + 1].as_str()])).collect();
    let refs: Vec<(&str, &[&str])> = atoms.iter().map(|(n, c)| (n.as_str(), &c[..])).collect();
    Query::new(&format!("P{k}"), &[names[0].as_str(), names[k].as_str()], &refs).expect("path query is well formed")
}

/// Intermediate products of one path run, for inspection.
#[derive(Debug)]
pub struct PathStages<S: Semiring> {
    /// Heavy-call outputs of the lower half.
    pub j1: Relation<S>,
    /// The materialized relation over `(x1, x_{⌊k/2⌋+1})`.
    pub mid: Relation<S>,
    pub delta_prime: u64,
    pub j2: Relation<S>,
    pub j3: Relation<S>,
    pub j4: Relation<S>,
    pub result: Relation<S>,
}

/// Evaluates a path query with threshold `delta` and output guess `out_guess`.
pub fn path_eval<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    delta: u64,
    out_guess: u64,
    stats: &mut EvalStats,
) -> Result<Relation<S>> {
    Ok(path_stages(q, db, delta, out_guess, GenOptions::default(), stats)?.result)
}

/// [`path_eval`] exposing every stage.
///
/// The chain is rooted at its last atom and the lower `⌊k/2⌋` atoms are
/// processed leaf-first, materializing a relation over `(x1, x_{h+1})`. That
/// relation is split on `x1` with `Δ' = ⌊|R_mid| · Δ / T⌋`: the heavy part is
/// joined with the upper half directly, the light part drives a second pass
/// over the upper half rooted at the midpoint, and the two survivors are joined.
pub fn path_stages<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    delta: u64,
    out_guess: u64,
    mut opts: GenOptions<'_, S>,
    stats: &mut EvalStats,
) -> Result<PathStages<S>> {
    let p = PathQuery::detect(q)?;
    let k = p.len();
    let size = db.size_for(q)?;
    if delta < 1 || delta > size.max(1) as u64 {
        return Err(Error::Config(format!("threshold {delta} outside [1, {}]", size.max(1))));
    }
    let x1 = p.vars[0];
    let out_vars = q.free();
    if k == 1 {
        let r = db.relations_for(q)?[0];
        stats.charge(r.len() as u64)?;
        let result = project(r, out_vars)?;
        stats.record("output", result.len());
        let empty = Relation::empty(out_vars);
        return Ok(PathStages {
            j1: empty.clone(),
            mid: result.clone(),
            delta_prime: 1,
            j2: empty.clone(),
            j3: empty.clone(),
            j4: result.clone(),
            result,
        });
    }
    let h = k / 2;
    let top = p.atoms[k - 1];
    let tree = p.tree(q, top)?;
    let mut w = WorkTree::from_query(q, db, &tree)?;

    // lower half, R12 on top of the stack
    let lower: Vec<usize> = p.atoms[..h].iter().rev().copied().collect();
    let j1 = generalized_core(&mut w, top, lower, false, delta, &mut opts, stats)?;
    let n = w.size();
    let mid_node = p.atoms[h - 1];
    let mid = w.rels[mid_node].clone();
    stats.record("mid", mid.len());

    let guess = out_guess.max(1) as u128;
    let dp = ((mid.len() as u128 * delta as u128) / guess).clamp(1, n.max(1) as u128) as u64;
    stats.charge(mid.len() as u64)?;
    let split = partition_heavy_light(&mid, VarSet::single(x1), dp)?;
    if cfg!(debug_assertions) {
        let keys = count_distinct_keys(&split.heavy, VarSet::single(x1))? as u64;
        if keys * dp > split.heavy.len() as u64 {
            return Err(Error::Contract("heavy midpoint keys exceed |R^H| / Δ'".into()));
        }
    }

    let mut j2 = Relation::empty(out_vars);
    if !split.heavy.is_empty() {
        let mut hw = w.clone();
        hw.rels[mid_node] = split.heavy.clone();
        j2 = yannakakis_core(hw, top, stats, None, None)?;
    }

    // upper half, R_{k,k+1} on top of the stack, rooted at the midpoint
    w.rels[mid_node] = split.light.clone();
    let upper: Vec<usize> = p.atoms[h..].to_vec();
    let j3 = generalized_core(&mut w, mid_node, upper, false, delta, &mut opts, stats)?;

    let rest = p.atoms[h];
    let joined = join(&w.rels[mid_node], &w.rels[rest], stats)?;
    stats.record("final-join", joined.len());
    stats.charge(joined.len() as u64)?;
    let j4 = project(&joined, out_vars)?;
    drop(joined);

    let mut result = j1.clone();
    result.plus_assign(&j2)?;
    result.plus_assign(&j3)?;
    result.plus_assign(&j4)?;
    stats.record("output", result.len());
    Ok(PathStages { j1, mid, delta_prime: dp, j2, j3, j4, result })
}

/// Path evaluation driven by doubling guesses `T`, with
/// `Δ = ⌈T^(1/⌈(k+1)/2⌉)⌉` and `Δ'` taken from the same guess.
pub fn path_eval_doubling<S: Semiring>(q: &Query, db: &Database<S>, alpha: f64, stats: &mut EvalStats) -> Result<Relation<S>> {
    let p = PathQuery::detect(q)?;
    let size = db.size_for(q)?;
    let kk = (p.len() as u32 + 2) / 2;
    doubling(
        size,
        kk,
        alpha,
        stats,
        |t, delta, st| path_eval(q, db, delta, t, st),
        |st| yannakakis_eval(q, db, &JoinTree::for_query(q)?, st),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_paths_in_any_atom_order() {
        let q = Query::new("Q", &["a", "d"], &[("T", &["c", "d"]), ("R", &["a", "b"]), ("S", &["b", "c"])]).unwrap();
        let p = PathQuery::detect(&q).unwrap();
        // d is seen before a, so the chain starts at d
        assert_eq!(p.atoms, vec![0, 2, 1]);
        let star = Query::new("S", &["a", "b", "c"], &[("R", &["a", "z"]), ("S", &["b", "z"]), ("T", &["c", "z"])]).unwrap();
        assert!(matches!(PathQuery::detect(&star), Err(Error::UnsupportedShape(_))));
        let full = Query::new("F", &["a", "b", "c"], &[("R", &["a", "b"]), ("S", &["b", "c"])]).unwrap();
        assert!(PathQuery::detect(&full).is_err());
    }

    #[test]
    fn path_query_names() {
        let q = path_query(3);
        assert_eq!(q.to_string(), "P3(x1, x4) <- R12(x1, x2), R23(x2, x3), R34(x3, x4)");
        assert_eq!(PathQuery::detect(&q).unwrap().atoms, vec![0, 1, 2]);
    }
}
