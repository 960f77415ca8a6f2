//! Structural analysis: acyclicity, reduction, decomposition and widths.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Atom, Query, VarId, VarSet};
use crate::tree::JoinTree;

/// GYO reduction over a list of hyperedges.
///
/// Returns the ear-decomposition tree edges `(child, parent)` when the
/// hypergraph is acyclic. At every step the lowest-id isolated variable is
/// dropped; when none is left, the lexicographically smallest pair `(e, f)`
/// with `e ⊆ f` removes `e`, which becomes a child of `f`.
pub fn gyo(edges: &[VarSet]) -> Option<Vec<(usize, usize)>> {
    let mut cur = edges.to_vec();
    let mut alive = vec![true; edges.len()];
    let mut tree = Vec::new();
    loop {
        if let Some((v, e)) = isolated_vars(&cur, &alive, VarSet::EMPTY).into_iter().next() {
            cur[e] = cur[e].without(v);
            continue;
        }
        match contained_pairs(&cur, &alive).into_iter().next() {
            Some((e, f)) => {
                alive[e] = false;
                tree.push((e, f));
            }
            None => break,
        }
    }
    (alive.iter().filter(|&&a| a).count() <= 1).then_some(tree)
}

/// `true` iff the query hypergraph is α-acyclic.
pub fn is_acyclic(q: &Query) -> bool {
    let bags: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
    gyo(&bags).is_some()
}

/// Isolated variables outside `keep`, as `(var, edge)` in ascending variable order.
fn isolated_vars(cur: &[VarSet], alive: &[bool], keep: VarSet) -> Vec<(VarId, usize)> {
    let all = live_union(cur, alive);
    let mut out = Vec::new();
    for v in all.minus(keep) {
        let mut holders = (0..cur.len()).filter(|&i| alive[i] && cur[i].contains(v));
        let first = holders.next().unwrap();
        if holders.next().is_none() {
            out.push((v, first));
        }
    }
    out
}

/// All pairs `(e, f)` of live edges with `e ⊆ f`, in lexicographic order.
fn contained_pairs(cur: &[VarSet], alive: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for e in 0..cur.len() {
        for f in 0..cur.len() {
            if e != f && alive[e] && alive[f] && cur[e].is_subset(cur[f]) {
                out.push((e, f));
            }
        }
    }
    out
}

fn live_union(cur: &[VarSet], alive: &[bool]) -> VarSet {
    cur.iter().zip(alive).filter(|p| *p.1).fold(VarSet::EMPTY, |s, (e, _)| s.union(*e))
}

/// One rewrite applied while reducing a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReduceStep {
    /// A non-free variable occurring only in atom `atom` was dropped from it.
    DropVar { atom: usize, var: VarId },
    /// Atom `from` (its variables a subset of `into`'s) was removed.
    Absorb { from: usize, into: usize },
}

/// A reduced query together with the steps that produced it.
///
/// Atom indices in the log refer to the original query; `kept[i]` is the
/// original index of the reduced query's atom `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub query: Query,
    pub log: Vec<ReduceStep>,
    pub kept: Vec<usize>,
}

/// Computes `red[Q]`: drop isolated non-free variables and contained atoms until
/// neither applies. Ties break towards the lowest variable id, then the
/// lexicographically smallest atom pair.
///
/// ```
/// use osyan::{reduce_query, Query};
/// let q = Query::new("Q", &[], &[("R", &["x", "y"]), ("S", &["y", "z"])]).unwrap();
/// let red = reduce_query(&q).unwrap();
/// assert_eq!(red.query.atoms().len(), 1);
/// assert!(red.query.atoms()[0].vars.is_empty());
/// ```
pub fn reduce_query(q: &Query) -> Result<Reduction> {
    reduce_with(q, |_, _| 0)
}

/// Reduction that picks a uniformly random applicable step each time.
///
/// The final hypergraph does not depend on the order; this exists to check that.
pub fn reduce_query_randomized<R: Rng>(q: &Query, rng: &mut R) -> Result<Reduction> {
    reduce_with(q, |vars, pairs| rng.gen_range(0..vars + pairs))
}

/// Runs the reduction; `pick(n_vars, n_pairs)` selects among the applicable
/// variable drops (indices `< n_vars`) and atom absorptions.
fn reduce_with(q: &Query, mut pick: impl FnMut(usize, usize) -> usize) -> Result<Reduction> {
    if !is_acyclic(q) {
        return Err(Error::Analysis(format!("query `{}` is cyclic; only acyclic queries are supported", q.name())));
    }
    let mut cur: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
    let mut alive = vec![true; cur.len()];
    let mut log = Vec::new();
    loop {
        let vars = isolated_vars(&cur, &alive, q.free());
        let pairs = contained_pairs(&cur, &alive);
        if vars.is_empty() && pairs.is_empty() {
            break;
        }
        // index 0 is the lowest-id variable drop, or the smallest pair when no drop applies
        let k = pick(vars.len(), pairs.len());
        if k < vars.len() {
            let (v, e) = vars[k];
            cur[e] = cur[e].without(v);
            log.push(ReduceStep::DropVar { atom: e, var: v });
        } else {
            let (e, f) = pairs[k - vars.len()];
            alive[e] = false;
            log.push(ReduceStep::Absorb { from: e, into: f });
        }
    }
    let mut atoms = Vec::new();
    let mut kept = Vec::new();
    for (i, a) in q.atoms().iter().enumerate() {
        if alive[i] {
            let columns = a.columns.iter().copied().filter(|&v| cur[i].contains(v)).collect();
            atoms.push(Atom { name: a.name.clone(), vars: cur[i], columns });
            kept.push(i);
        }
    }
    let query = q.with_atoms(q.name(), atoms, q.free())?;
    Ok(Reduction { query, log, kept })
}

/// `true` when neither reduction rule applies.
pub fn is_reduced(q: &Query) -> bool {
    let cur: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
    let alive = vec![true; cur.len()];
    isolated_vars(&cur, &alive, q.free()).is_empty() && contained_pairs(&cur, &alive).is_empty()
}

/// One connected component of the reduced query's existential graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Sub-query over the component's atoms; its free set is `F` restricted to them.
    pub query: Query,
    /// Indices of the component's atoms in the reduced query.
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub reduction: Reduction,
    pub components: Vec<Component>,
}

/// Splits `red[q]` into groups of atoms linked through shared non-free variables.
///
/// Components are ordered by their smallest atom index.
pub fn decompose(q: &Query) -> Result<Decomposition> {
    let reduction = reduce_query(q)?;
    let rq = &reduction.query;
    let n = rq.atoms().len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            let shared = rq.atoms()[a].vars.inter(rq.atoms()[b].vars).minus(rq.free());
            if !shared.is_empty() {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                comp[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut comp, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    let mut components = Vec::with_capacity(groups.len());
    for (ci, g) in groups.into_iter().enumerate() {
        let atoms: Vec<Atom> = g.iter().map(|&i| rq.atoms()[i].clone()).collect();
        let vars = atoms.iter().fold(VarSet::EMPTY, |s, a| s.union(a.vars));
        let name = format!("{}#{}", rq.name(), ci + 1);
        let query = rq.with_atoms(&name, atoms, rq.free().inter(vars))?;
        components.push(Component { query, atoms: g });
    }
    Ok(Decomposition { reduction, components })
}

/// `wout(q)`: the largest component of the reduced query, in atoms.
pub fn projection_width(q: &Query) -> Result<usize> {
    Ok(decompose(q)?.components.iter().map(|c| c.atoms.len()).max().unwrap_or(1))
}

/// `freew(q)`: per component, the fewest atoms covering every free variable
/// that occurs in exactly one of its atoms; the maximum over components.
///
/// A component without such variables counts as 1.
pub fn free_width(q: &Query) -> Result<usize> {
    let d = decompose(q)?;
    let mut best = 1;
    for c in &d.components {
        best = best.max(component_free_width(&c.query));
    }
    Ok(best)
}

fn component_free_width(q: &Query) -> usize {
    let edges: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
    let alive = vec![true; edges.len()];
    let target = isolated_vars(&edges, &alive, VarSet::EMPTY)
        .into_iter()
        .filter(|&(v, _)| q.free().contains(v))
        .fold(VarSet::EMPTY, |s, (v, _)| s.with(v));
    if target.is_empty() {
        return 1;
    }
    min_set_cover(&edges, target)
}

/// Exact minimum number of `sets` whose union covers `target`, by subset enumeration.
fn min_set_cover(sets: &[VarSet], target: VarSet) -> usize {
    let n = sets.len();
    assert!(n < 26, "set cover over {n} sets is too large to enumerate");
    let mut best = usize::MAX;
    for mask in 1u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let cover = (0..n).filter(|&i| mask >> i & 1 == 1).fold(VarSet::EMPTY, |s, i| s.union(sets[i]));
        if target.is_subset(cover) {
            best = k;
        }
    }
    best
}

/// Whether `q` is free-connex: `E ∪ {F}` is acyclic.
///
/// Also checks the equivalent condition that every variable left in `red[q]`
/// is free, and reports a contract error if the two disagree.
pub fn is_free_connex(q: &Query) -> Result<bool> {
    if !is_acyclic(q) {
        return Err(Error::Analysis(format!("query `{}` is cyclic", q.name())));
    }
    let mut edges: Vec<VarSet> = q.atoms().iter().map(|a| a.vars).collect();
    edges.push(q.free());
    let by_gyo = gyo(&edges).is_some();
    let red = reduce_query(q)?;
    let by_reduction = red.query.used_vars().is_subset(q.free());
    if by_gyo != by_reduction {
        return Err(Error::Contract(format!(
            "free-connex characterizations disagree on `{}` (hypergraph test {by_gyo}, reduction test {by_reduction})",
            q.name()
        )));
    }
    Ok(by_gyo)
}

/// Summary of [`analyze`].
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub acyclic: bool,
    pub free_connex: Option<bool>,
    pub reduced: Option<String>,
    pub components: Vec<String>,
    pub projection_width: Option<usize>,
    pub free_width: Option<usize>,
}

/// Runs every structural check; cyclic queries get `None` for the rest.
pub fn analyze(q: &Query) -> Result<Analysis> {
    if !is_acyclic(q) {
        return Ok(Analysis {
            acyclic: false,
            free_connex: None,
            reduced: None,
            components: Vec::new(),
            projection_width: None,
            free_width: None,
        });
    }
    let d = decompose(q)?;
    let wout = d.components.iter().map(|c| c.atoms.len()).max().unwrap_or(1);
    let freew = free_width(q)?;
    if freew > wout {
        return Err(Error::Contract(format!("free width {freew} exceeds projection width {wout}")));
    }
    let fc = is_free_connex(q)?;
    if fc != (wout == 1) {
        return Err(Error::Contract("free-connex flag disagrees with projection width".into()));
    }
    Ok(Analysis {
        acyclic: true,
        free_connex: Some(fc),
        reduced: Some(d.reduction.query.to_string()),
        components: d.components.iter().map(|c| c.query.to_string()).collect(),
        projection_width: Some(wout),
        free_width: Some(freew),
    })
}

/// Join tree of a reduced query, with the default root.
pub fn join_tree(q: &Query) -> Result<JoinTree> {
    JoinTree::for_query(q)
}
