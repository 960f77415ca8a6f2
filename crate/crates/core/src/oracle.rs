//! Brute-force reference evaluation by nested iteration over relations.

use crate::error::{Error, Result};
use crate::model::{Query, Value, VarSet};
use crate::relation::{Aggregator, Database, Relation};
use crate::semiring::Semiring;

/// Default cap on rows examined by the oracle.
pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// Evaluates `q` by enumerating every combination of tuples, with the default cap.
pub fn brute_force_eval<S: Semiring>(q: &Query, db: &Database<S>) -> Result<Relation<S>> {
    let order: Vec<usize> = (0..q.atoms().len()).collect();
    brute_force_ordered(q, db, &order, DEFAULT_ORACLE_CAP)
}

/// Brute force with relations iterated in `order` (outermost first).
pub fn brute_force_ordered<S: Semiring>(q: &Query, db: &Database<S>, order: &[usize], cap: u64) -> Result<Relation<S>> {
    let rels = db.relations_for(q)?;
    let ordered: Vec<&Relation<S>> = order.iter().map(|&i| rels[i]).collect();
    if ordered.len() != rels.len() {
        return Err(Error::Config("oracle order must list every atom once".into()));
    }
    brute_force_relations(&ordered, q.free(), cap)
}

/// `⊕` over all consistent tuple combinations of `⊗` of their annotations,
/// grouped by the variables in `free`.
///
/// Every row inspected counts against `cap`.
pub fn brute_force_relations<S: Semiring>(rels: &[&Relation<S>], free: VarSet, cap: u64) -> Result<Relation<S>> {
    let all = rels.iter().fold(VarSet::EMPTY, |s, r| s.union(r.vars()));
    let out_vars = free.inter(all);
    let mut search = Search {
        rels,
        values: [Value(0); 64],
        bound: VarSet::EMPTY,
        out_vars,
        out_row: vec![Value(0); out_vars.len()],
        agg: Aggregator::new(out_vars),
        seen: 0,
        cap,
    };
    search.descend(0, S::one())?;
    Ok(search.agg.finish())
}

struct Search<'a, S: Semiring> {
    rels: &'a [&'a Relation<S>],
    values: [Value; 64],
    bound: VarSet,
    out_vars: VarSet,
    out_row: Vec<Value>,
    agg: Aggregator<S>,
    seen: u64,
    cap: u64,
}

impl<S: Semiring> Search<'_, S> {
    fn descend(&mut self, depth: usize, acc: S::Elem) -> Result<()> {
        if depth == self.rels.len() {
            for (k, v) in self.out_vars.iter().enumerate() {
                self.out_row[k] = self.values[v.index()];
            }
            let all: Vec<usize> = (0..self.out_row.len()).collect();
            let row = self.out_row.clone();
            return self.agg.insert(&row, &all, acc);
        }
        let rel = self.rels[depth];
        let vars: Vec<_> = rel.vars().iter().collect();
        let before = self.bound;
        for i in 0..rel.len() {
            self.seen += 1;
            if self.seen > self.cap {
                return Err(Error::OracleTooLarge { cap: self.cap });
            }
            let row = rel.row(i);
            let consistent = vars
                .iter()
                .zip(row)
                .all(|(v, x)| !before.contains(*v) || self.values[v.index()] == *x);
            if !consistent {
                continue;
            }
            for (v, x) in vars.iter().zip(row) {
                self.values[v.index()] = *x;
            }
            self.bound = before.union(rel.vars());
            let next = S::times(acc, rel.annotation(i))?;
            self.descend(depth + 1, next)?;
            self.bound = before;
        }
        Ok(())
    }
}
