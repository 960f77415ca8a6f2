//! Output-sensitive evaluation: the heavy/light generalization of Yannakakis,
//! its doubling driver, and the pipeline for arbitrary acyclic queries.

use serde::Serialize;

use crate::analysis::{decompose, is_acyclic, is_reduced, reduce_query, ReduceStep, Reduction};
use crate::error::{Error, Result};
use crate::kernel::partition_heavy_light;
use crate::model::{Atom, Query, VarSet};
use crate::relation::{join, project, Database, Relation};
use crate::semiring::Semiring;
use crate::stats::EvalStats;
use crate::tree::JoinTree;
use crate::work::WorkTree;
use crate::yannakakis::{check_heavy_root, yannakakis_core, yannakakis_eval, HeavyAudit};

/// Default operations per input tuple granted to a doubling round.
pub const DEFAULT_ALPHA: f64 = 64.0;

/// One step of a generalized run, for inspection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TraceEvent {
    /// A leaf was split on its join variables.
    LeafSplit { node: String, delta_s: u64, heavy: usize, light: usize },
    /// An internal node absorbed its children.
    InternalJoin { node: String, size: usize },
    /// The last node was projected onto the free variables.
    RootOutput { node: String, size: usize },
}

/// State visible at a leaf split.
pub struct SplitView<'a, S: Semiring> {
    pub label: &'a str,
    /// Live relations; `relations[position]` is the leaf's table before the split.
    pub relations: Vec<&'a Relation<S>>,
    pub position: usize,
    pub heavy: &'a Relation<S>,
    pub light: &'a Relation<S>,
    pub free: VarSet,
    pub delta_s: u64,
}

/// Callback invoked at every leaf split.
pub trait SplitObserver<S: Semiring> {
    fn on_leaf_split(&mut self, view: &SplitView<'_, S>);
}

/// Optional knobs for [`generalized_eval_with`].
pub struct GenOptions<'a, S: Semiring> {
    /// Tree node to root at; the tree's own root when `None`.
    pub root: Option<usize>,
    /// Known or guessed output size, enabling the heavy-call size audit.
    pub out_hint: Option<u64>,
    pub observer: Option<&'a mut dyn SplitObserver<S>>,
    pub trace: Option<&'a mut Vec<TraceEvent>>,
}

impl<S: Semiring> Default for GenOptions<'_, S> {
    fn default() -> Self {
        GenOptions { root: None, out_hint: None, observer: None, trace: None }
    }
}

/// Result of a generalized run with the final tree and instance.
#[derive(Debug)]
pub struct GenOutput<S: Semiring> {
    pub result: Relation<S>,
    /// Tree left after truncation; a complete run leaves only the root.
    pub tree: JoinTree,
    pub database: Database<S>,
}

/// `⌈Δ · (|T| + N) / N⌉`, the per-leaf threshold.
pub(crate) fn leaf_threshold(delta: u64, t: usize, n: usize) -> u64 {
    if n == 0 {
        return delta.max(1);
    }
    let num = delta as u128 * (t as u128 + n as u128);
    num.div_ceil(n as u128).min(u64::MAX as u128) as u64
}

/// Pops nodes off `stack` and processes them: leaves are split and their heavy
/// part evaluated from the leaf; internal nodes absorb their children. With
/// `finalize` unset the loop just stops once the stack is empty.
pub(crate) fn generalized_core<S: Semiring>(
    w: &mut WorkTree<S>,
    root: usize,
    mut stack: Vec<usize>,
    finalize: bool,
    delta: u64,
    opts: &mut GenOptions<'_, S>,
    stats: &mut EvalStats,
) -> Result<Relation<S>> {
    w.full_reduce(root, stats)?;
    let n = w.size();
    let rt = w.rooted(root);
    let all_vars = w.alive_nodes().fold(VarSet::EMPTY, |s, i| s.union(w.bags[i]));
    let out_vars = w.free.inter(all_vars);
    let mut acc = Relation::empty(out_vars);

    while let Some(s) = stack.pop() {
        let children: Vec<usize> = rt.children[s].iter().copied().filter(|&c| w.alive[c]).collect();
        if children.is_empty() {
            if s == root {
                if finalize {
                    let out = finish(w, s, opts, stats)?;
                    acc.plus_assign(&out)?;
                }
                continue;
            }
            let p = rt.parent[s].expect("non-root node has a parent");
            let key = w.bags[s].inter(w.bags[p]);
            let t_len = w.rels[s].len();
            let delta_s = leaf_threshold(delta, t_len, n);
            stats.charge(t_len as u64)?;
            let split = partition_heavy_light(&w.rels[s], key, delta_s)?;
            if let Some(obs) = opts.observer.as_deref_mut() {
                let ids: Vec<usize> = w.alive_nodes().collect();
                let view = SplitView {
                    label: &w.labels[s],
                    relations: ids.iter().map(|&i| &w.rels[i]).collect(),
                    position: ids.iter().position(|&i| i == s).unwrap(),
                    heavy: &split.heavy,
                    light: &split.light,
                    free: w.free,
                    delta_s,
                };
                obs.on_leaf_split(&view);
            }
            if let Some(tr) = opts.trace.as_deref_mut() {
                tr.push(TraceEvent::LeafSplit {
                    node: w.labels[s].clone(),
                    delta_s,
                    heavy: split.heavy.len(),
                    light: split.light.len(),
                });
            }
            if !split.heavy.is_empty() {
                let mut hw = w.clone();
                hw.rels[s] = split.heavy;
                if cfg!(debug_assertions) {
                    check_heavy_root(&hw, s, delta_s)?;
                } else if hw.bags[s].inter(hw.free).minus(hw.vars_outside(s)).is_empty() {
                    return Err(Error::Contract(format!("leaf `{}` has no isolated free variable", hw.labels[s])));
                }
                let audit = opts.out_hint.map(|out| HeavyAudit { out, delta_s });
                let out = yannakakis_core(hw, s, stats, audit, None)?;
                stats.charge(out.len() as u64)?;
                acc.plus_assign(&out)?;
            }
            w.rels[s] = split.light;
            w.full_reduce(root, stats)?;
        } else {
            let weight: usize = w.weight[s] + children.iter().map(|&c| w.weight[c]).sum::<usize>();
            let mut t = std::mem::replace(&mut w.rels[s], Relation::empty(VarSet::EMPTY));
            for &c in &children {
                let keep = w.rels[c].vars().inter(w.free.union(w.bags[s]));
                stats.charge(w.rels[c].len() as u64)?;
                let proj = project(&w.rels[c], keep)?;
                t = join(&t, &proj, stats)?;
                stats.record(&w.labels[s], t.len());
            }
            if n > 0 {
                stats.bound_checks += 1;
                let bound = 4.0 * n as f64 * (delta as f64).powi(weight as i32 - 1);
                if t.len() as f64 > bound {
                    stats.bound_violations += 1;
                }
            }
            for &c in &children {
                w.kill(c);
                w.weight[s] += w.weight[c];
            }
            // drop non-free variables no remaining node shares
            let keep = match rt.parent[s] {
                Some(p) => t.vars().inter(w.free.union(w.bags[p])),
                None => t.vars().inter(w.free),
            };
            if keep != t.vars() {
                stats.charge(t.len() as u64)?;
                t = project(&t, keep)?;
            }
            if let Some(tr) = opts.trace.as_deref_mut() {
                tr.push(TraceEvent::InternalJoin { node: w.labels[s].clone(), size: t.len() });
            }
            w.bags[s] = t.vars();
            w.rels[s] = t;
            if cfg!(debug_assertions) {
                w.check_running_intersection()?;
            }
            if !stack.is_empty() {
                stack.push(s);
            } else if finalize {
                let out = finish(w, s, opts, stats)?;
                acc.plus_assign(&out)?;
            }
        }
    }
    Ok(acc)
}

fn finish<S: Semiring>(w: &WorkTree<S>, s: usize, opts: &mut GenOptions<'_, S>, stats: &mut EvalStats) -> Result<Relation<S>> {
    let t = &w.rels[s];
    stats.charge(t.len() as u64)?;
    let out = project(t, t.vars().inter(w.free))?;
    stats.record("output", out.len());
    if let Some(tr) = opts.trace.as_deref_mut() {
        tr.push(TraceEvent::RootOutput { node: w.labels[s].clone(), size: out.len() });
    }
    Ok(out)
}

fn check_generalized_input(q: &Query) -> Result<()> {
    if !is_acyclic(q) {
        return Err(Error::Analysis(format!("query `{}` is cyclic; only acyclic queries are supported", q.name())));
    }
    if !is_reduced(q) {
        return Err(Error::Contract(format!("query `{}` is not reduced", q.name())));
    }
    if decompose(q)?.components.len() != 1 {
        return Err(Error::Contract(format!("query `{}` is not existentially connected", q.name())));
    }
    Ok(())
}

/// Runs the generalized algorithm with threshold `delta` on a reduced,
/// existentially connected query.
///
/// ```
/// use osyan::{generalized_eval, Boolean, Database, EvalStats, JoinTree, Query};
/// let q = Query::new("P2", &["x1", "x3"], &[("R", &["x1", "x2"]), ("S", &["x2", "x3"])]).unwrap();
/// let mut db = Database::<Boolean>::new();
/// db.insert_rows(&q, "R", &[&[0, 1], &[0, 2], &[5, 2]]).unwrap();
/// db.insert_rows(&q, "S", &[&[1, 9], &[2, 9], &[2, 8]]).unwrap();
/// let tree = JoinTree::for_query(&q).unwrap();
/// let run = generalized_eval(&q, &db, &tree, 1, &mut EvalStats::new()).unwrap();
/// assert_eq!(run.result.len(), 4);
/// ```
pub fn generalized_eval<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    tree: &JoinTree,
    delta: u64,
    stats: &mut EvalStats,
) -> Result<GenOutput<S>> {
    generalized_eval_with(q, db, tree, delta, GenOptions::default(), stats)
}

/// [`generalized_eval`] with inspection hooks and an optional root override.
pub fn generalized_eval_with<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    tree: &JoinTree,
    delta: u64,
    mut opts: GenOptions<'_, S>,
    stats: &mut EvalStats,
) -> Result<GenOutput<S>> {
    check_generalized_input(q)?;
    let size = db.size_for(q)?;
    if delta < 1 || delta > size.max(1) as u64 {
        return Err(Error::Config(format!("threshold {delta} outside [1, {}]", size.max(1))));
    }
    let mut w = WorkTree::from_query(q, db, tree)?;
    let root = opts.root.unwrap_or(tree.root());
    if root >= tree.len() {
        return Err(Error::Config(format!("root {root} out of range")));
    }
    let stack: Vec<usize> = w.rooted(root).post_order.into_iter().rev().collect();
    let result = generalized_core(&mut w, root, stack, true, delta, &mut opts, stats)?;
    let (tree, database) = w.export(root)?;
    Ok(GenOutput { result, tree, database })
}

/// Shared doubling loop. `run(T, Δ, stats)` evaluates with guess `T`; rounds that
/// exhaust their budget double `T` and start over. When `Δ` would exceed
/// `|D|` an unlimited `fallback` pass finishes the job.
pub(crate) fn doubling<S: Semiring>(
    size: usize,
    k: u32,
    alpha: f64,
    stats: &mut EvalStats,
    mut run: impl FnMut(u64, u64, &mut EvalStats) -> Result<Relation<S>>,
    fallback: impl FnOnce(&mut EvalStats) -> Result<Relation<S>>,
) -> Result<Relation<S>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let k = k.max(1);
    let mut t: u64 = 1;
    loop {
        let delta = ((t as f64).powf(1.0 / k as f64).ceil() as u64).max(1);
        if delta > size.max(1) as u64 {
            break;
        }
        let budget = (alpha * (size as f64 + 1.0) * (t as f64).powf(1.0 - 1.0 / k as f64)).ceil();
        let mut round = EvalStats::with_budget(budget.min(u64::MAX as f64) as u64);
        round.doubling_rounds = 1;
        let res = run(t, delta, &mut round);
        round.budget = None;
        stats.absorb(&round);
        match res {
            Ok(out) => {
                stats.delta_final = Some(delta);
                return Ok(out);
            }
            Err(Error::BudgetExhausted { .. }) => match t.checked_mul(2) {
                Some(next) => t = next,
                None => break,
            },
            Err(e) => return Err(e),
        }
    }
    let mut last = EvalStats { doubling_rounds: 1, fallback: true, ..EvalStats::default() };
    let res = fallback(&mut last);
    stats.absorb(&last);
    res
}

/// Generalized evaluation with `Δ = ⌈T^(1/k)⌉` for doubling guesses `T`.
///
/// Each round gets `alpha · (|D| + 1) · T^(1 − 1/k)` tuple operations and
/// starts from the input database.
pub fn eval_with_doubling<S: Semiring>(q: &Query, db: &Database<S>, alpha: f64, stats: &mut EvalStats) -> Result<Relation<S>> {
    check_generalized_input(q)?;
    let tree = JoinTree::for_query(q)?;
    let size = db.size_for(q)?;
    let k = q.atoms().len() as u32;
    doubling(
        size,
        k,
        alpha,
        stats,
        |t, delta, st| {
            let opts = GenOptions { out_hint: Some(t), ..GenOptions::default() };
            Ok(generalized_eval_with(q, db, &tree, delta, opts, st)?.result)
        },
        |st| yannakakis_eval(q, db, &tree, st),
    )
}

/// How each component of a general query is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Doubling on the output guess with the given per-round alpha.
    Doubling { alpha: f64 },
    /// A single generalized run with a fixed threshold, clamped to `[1, |D|]`.
    Fixed { delta: u64 },
    /// Classic Yannakakis per component.
    Classic,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Doubling { alpha: DEFAULT_ALPHA }
    }
}

/// Replays a reduction on the data: dropped variables are summed out with ⊕,
/// absorbed atoms are ⊗-joined into the atom that contains them.
pub fn prepare_reduced_instance<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    red: &Reduction,
    stats: &mut EvalStats,
) -> Result<Database<S>> {
    let mut rels: Vec<Option<Relation<S>>> = db.relations_for(q)?.into_iter().map(|r| Some(r.clone())).collect();
    for step in &red.log {
        match *step {
            ReduceStep::DropVar { atom, var } => {
                let r = rels[atom].take().ok_or_else(|| Error::Contract("reduction log refers to a removed atom".into()))?;
                stats.charge(r.len() as u64)?;
                rels[atom] = Some(project(&r, r.vars().without(var))?);
            }
            ReduceStep::Absorb { from, into } => {
                let e = rels[from].take().ok_or_else(|| Error::Contract("reduction log absorbs a removed atom".into()))?;
                let f = rels[into].take().ok_or_else(|| Error::Contract("reduction log absorbs into a removed atom".into()))?;
                if !e.vars().is_subset(f.vars()) {
                    return Err(Error::Contract("absorbed atom is not contained in its target".into()));
                }
                rels[into] = Some(join(&f, &e, stats)?);
            }
        }
    }
    let mut out = Database::new();
    for (i, &orig) in red.kept.iter().enumerate() {
        let atom = &red.query.atoms()[i];
        let r = rels[orig].take().ok_or_else(|| Error::Contract("kept atom missing after replay".into()))?;
        if r.vars() != atom.vars {
            return Err(Error::Contract(format!("replayed relation for `{}` has the wrong variables", atom.name)));
        }
        out.insert(&atom.name, r);
    }
    Ok(out)
}

/// Evaluates any acyclic query: reduce, evaluate each existentially connected
/// component with the doubling driver, then join the component results.
pub fn eval_general_cq<S: Semiring>(q: &Query, db: &Database<S>, stats: &mut EvalStats) -> Result<Relation<S>> {
    eval_general_cq_with(q, db, Strategy::default(), stats)
}

/// [`eval_general_cq`] with an explicit per-component strategy.
pub fn eval_general_cq_with<S: Semiring>(
    q: &Query,
    db: &Database<S>,
    strategy: Strategy,
    stats: &mut EvalStats,
) -> Result<Relation<S>> {
    if !is_acyclic(q) {
        return Err(Error::Analysis(format!("query `{}` is cyclic; only acyclic queries are supported", q.name())));
    }
    let red = reduce_query(q)?;
    let reduced_db = prepare_reduced_instance(q, db, &red, stats)?;
    let d = decompose(q)?;
    let mut final_atoms = Vec::with_capacity(d.components.len());
    let mut final_db = Database::new();
    for c in &d.components {
        let cq = &c.query;
        let mut cdb = Database::new();
        for a in cq.atoms() {
            let r = reduced_db.get(&a.name).ok_or_else(|| Error::Contract(format!("no reduced relation for `{}`", a.name)))?;
            cdb.insert(&a.name, r.clone());
        }
        let res = if cq.atoms().len() == 1 {
            let r = cdb.get(&cq.atoms()[0].name).unwrap();
            stats.charge(r.len() as u64)?;
            project(r, r.vars().inter(cq.free()))?
        } else {
            match strategy {
                Strategy::Doubling { alpha } => eval_with_doubling(cq, &cdb, alpha, stats)?,
                Strategy::Fixed { delta } => {
                    let size = cdb.size_for(cq)?.max(1) as u64;
                    let tree = JoinTree::for_query(cq)?;
                    generalized_eval(cq, &cdb, &tree, delta.clamp(1, size), stats)?.result
                }
                Strategy::Classic => yannakakis_eval(cq, &cdb, &JoinTree::for_query(cq)?, stats)?,
            }
        };
        let vars = res.vars();
        final_atoms.push(Atom { name: cq.name().to_string(), vars, columns: vars.iter().collect() });
        final_db.insert(cq.name(), res);
    }
    let fq = q.with_atoms(q.name(), final_atoms, q.free())?;
    let tree = JoinTree::for_query(&fq)?;
    yannakakis_eval(&fq, &final_db, &tree, stats)
}
