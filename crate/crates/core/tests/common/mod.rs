#![allow(dead_code)]

use osyan::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Q(x1, x4, x5, x6, x7)` over a tree of six binary atoms.
pub fn fig2_query() -> Query {
    Query::new(
        "Q",
        &["x1", "x4", "x5", "x6", "x7"],
        &[
            ("R12", &["x1", "x2"]),
            ("R23", &["x2", "x3"]),
            ("R34", &["x3", "x4"]),
            ("R25", &["x2", "x5"]),
            ("R46", &["x4", "x6"]),
            ("R57", &["x5", "x7"]),
        ],
    )
    .unwrap()
}

/// The four-atom component `Q1(x1, x4, x5)` of [`fig2_query`].
pub fn running_example() -> Query {
    Query::new(
        "Q1",
        &["x1", "x4", "x5"],
        &[("R12", &["x1", "x2"]), ("R23", &["x2", "x3"]), ("R34", &["x3", "x4"]), ("R25", &["x2", "x5"])],
    )
    .unwrap()
}

pub fn p2() -> Query {
    Query::new("P2", &["x1", "x3"], &[("R", &["x1", "x2"]), ("S", &["x2", "x3"])]).unwrap()
}

/// A reduced instance split into its existentially connected components,
/// each with its own database.
pub fn components<S: Semiring>(q: &Query, db: &Database<S>) -> Vec<(Query, Database<S>)> {
    let d = decompose(q).unwrap();
    let rdb = prepare_reduced_instance(q, db, &d.reduction, &mut EvalStats::new()).unwrap();
    d.components
        .iter()
        .map(|c| {
            let mut cdb = Database::new();
            for a in c.query.atoms() {
                cdb.insert(&a.name, rdb.get(&a.name).unwrap().clone());
            }
            (c.query.clone(), cdb)
        })
        .collect()
}

/// Checks the distributivity identity at every leaf split: the answer over
/// the live relations equals the ⊕ of the answers with the leaf replaced by
/// its heavy and by its light part.
#[derive(Default)]
pub struct FaqCheck {
    pub splits: usize,
    pub failures: Vec<String>,
}

impl<S: Semiring> SplitObserver<S> for FaqCheck {
    fn on_leaf_split(&mut self, view: &SplitView<'_, S>) {
        self.splits += 1;
        let cap = DEFAULT_ORACLE_CAP;
        let whole = brute_force_relations(&view.relations, view.free, cap).unwrap();
        let mut with = view.relations.clone();
        with[view.position] = view.heavy;
        let mut sum = brute_force_relations(&with, view.free, cap).unwrap();
        with[view.position] = view.light;
        sum.plus_assign(&brute_force_relations(&with, view.free, cap).unwrap()).unwrap();
        if sum != whole {
            self.failures.push(format!("split at {} (Δ_s = {}): {:?} vs {:?}", view.label, view.delta_s, sum, whole));
        }
    }
}

/// Random rows for every atom of `q`, annotated per semiring.
pub fn random_db<S: RandomAnnotation>(q: &Query, seed: u64, domain: u32, rows: usize) -> Database<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::new();
    for a in q.atoms() {
        let data: Vec<(Vec<Value>, S::Elem)> = (0..rows)
            .map(|_| (a.columns.iter().map(|_| Value(rng.gen_range(0..domain))).collect(), S::sample(&mut rng)))
            .collect();
        db.insert(&a.name, Relation::from_columns(&a.columns, data).unwrap());
    }
    db
}
