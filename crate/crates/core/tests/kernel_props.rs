mod common;

use osyan::*;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn rel2(rows: &[(u32, u32)]) -> Relation<Counting> {
    Relation::from_rows(VarSet::from_ids([VarId(0), VarId(1)]), rows.iter().map(|&(a, b)| (vec![Value(a), Value(b)], 1)))
        .unwrap()
}

fn rel_strategy(vars: &'static [u8]) -> impl proptest::strategy::Strategy<Value = Relation<Counting>> {
    prop::collection::vec((prop::collection::vec(0u32..4, vars.len()), 1u64..4), 0..12).prop_map(move |rows| {
        let cols: Vec<VarId> = vars.iter().map(|&v| VarId(v)).collect();
        Relation::from_columns(&cols, rows.into_iter().map(|(r, w)| (r.into_iter().map(Value).collect(), w))).unwrap()
    })
}

/// Full reducer over the query's own join tree.
fn reduce_all<S: Semiring>(q: &Query, db: &Database<S>) -> Database<S> {
    full_reducer(q, db, &JoinTree::for_query(q).unwrap(), &mut EvalStats::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projections_compose(r in rel_strategy(&[0, 1, 2])) {
        let ab = VarSet::from_ids([VarId(0), VarId(1)]);
        let a = VarSet::single(VarId(0));
        prop_assert_eq!(project(&project(&r, ab).unwrap(), a).unwrap(), project(&r, a).unwrap());
    }

    #[test]
    fn join_commutes(r in rel_strategy(&[0, 1]), s in rel_strategy(&[1, 2])) {
        let mut st = EvalStats::new();
        prop_assert_eq!(join(&r, &s, &mut st).unwrap(), join(&s, &r, &mut st).unwrap());
    }

    #[test]
    fn semijoin_is_idempotent_and_filters(r in rel_strategy(&[0, 1]), s in rel_strategy(&[1, 2])) {
        let mut st = EvalStats::new();
        let once = semijoin(&r, &s, &mut st).unwrap();
        prop_assert_eq!(semijoin(&once, &s, &mut st).unwrap(), once.clone());
        prop_assert_eq!(semijoin(&r, &r, &mut st).unwrap(), r.clone());
        // a row survives exactly when it has a join partner
        let joined = project(&join(&r, &s, &mut st).unwrap(), r.vars()).unwrap();
        prop_assert_eq!(once.len(), joined.len());
        for (row, w) in once.iter() {
            prop_assert_eq!(w, r.lookup(row));
        }
    }

    #[test]
    fn heavy_light_split_invariants(r in rel_strategy(&[0, 1, 2]), threshold in 1u64..5, key_mask in 0u64..8) {
        let key = VarSet(key_mask);
        let split = partition_heavy_light(&r, key, threshold).unwrap();
        prop_assert_eq!(split.heavy.len() + split.light.len(), r.len());
        let mut union = split.heavy.clone();
        union.plus_assign(&split.light).unwrap();
        prop_assert_eq!(&union, &r);
        for (part, heavy) in [(&split.heavy, true), (&split.light, false)] {
            for (row, w) in part.iter() {
                prop_assert_eq!(w, r.lookup(row));
                prop_assert_eq!(if heavy { split.light.lookup(row) } else { split.heavy.lookup(row) }, 0);
                let on = Valuation::new(key.iter().map(|v| (v, row[r.vars().position(v)]))).unwrap();
                let d = degree(&r, key, &on).unwrap() as u64;
                prop_assert_eq!(d > threshold, heavy);
            }
        }
        let keys = count_distinct_keys(&split.heavy, key).unwrap() as u64;
        prop_assert!(keys * threshold <= split.heavy.len() as u64);
    }
}

#[test]
fn full_reducer_is_idempotent_and_preserves_answers() {
    fn check<S: RandomAnnotation>(seed: u64) {
        let (q, db) = gen_random_acyclic::<S>(seed, 5, 6, 0.5);
        let once = reduce_all(&q, &db);
        assert_eq!(reduce_all(&q, &once), once, "seed {seed}");
        assert_eq!(brute_force_eval(&q, &once).unwrap(), brute_force_eval(&q, &db).unwrap(), "seed {seed}");
        // every surviving tuple extends to a full-join result
        let all = q.used_vars();
        let full = q.with_atoms("full", q.atoms().to_vec(), all).unwrap();
        let witnesses = brute_force_eval(&full, &once).unwrap();
        for (a, r) in q.atoms().iter().zip(once.relations_for(&q).unwrap()) {
            let support = project(&witnesses, a.vars).unwrap();
            assert_eq!(support.len(), r.len(), "seed {seed}, atom {}", a.name);
        }
    }
    for seed in 0..1000 {
        check::<Boolean>(seed);
        check::<Counting>(seed);
        check::<Tropical>(seed);
    }
}

#[test]
fn full_reducer_examples() {
    let q = common::p2();
    let mut db = Database::<Boolean>::new();
    db.insert_rows(&q, "R", &[&[0, 1]]).unwrap();
    db.insert_rows(&q, "S", &[&[2, 9]]).unwrap();
    let out = reduce_all(&q, &db);
    assert!(out.iter().all(|(_, r)| r.is_empty()));

    let single = Query::new("U", &["a"], &[("R", &["a", "b"])]).unwrap();
    let mut db = Database::<Boolean>::new();
    db.insert_rows(&single, "R", &[&[0, 1], &[2, 3]]).unwrap();
    assert_eq!(reduce_all(&single, &db), db);

    for wiring in [Fig1Wiring::AsDrawn, Fig1Wiring::Hub] {
        let inst = gen_fig1::<Boolean>(48, 8, wiring).unwrap();
        assert_eq!(reduce_all(&inst.query, &inst.database), inst.database);
    }
}

#[test]
fn semijoin_examples() {
    let r = Relation::<Boolean>::from_rows(
        VarSet::from_ids([VarId(0), VarId(1)]),
        [(vec![Value(0), Value(1)], true), (vec![Value(1), Value(2)], true)],
    )
    .unwrap();
    let s = Relation::<Boolean>::from_rows(VarSet::single(VarId(1)), [(vec![Value(1)], true)]).unwrap();
    let mut st = EvalStats::new();
    assert_eq!(semijoin(&r, &s, &mut st).unwrap().to_sorted(), vec![(vec![Value(0), Value(1)], true)]);
    assert!(semijoin(&r, &Relation::empty(s.vars()), &mut st).unwrap().is_empty());
    // no shared variables: all or nothing
    let t = Relation::<Boolean>::from_rows(VarSet::single(VarId(5)), [(vec![Value(7)], true)]).unwrap();
    assert_eq!(semijoin(&r, &t, &mut st).unwrap(), r);
    assert!(semijoin(&r, &Relation::empty(t.vars()), &mut st).unwrap().is_empty());
}

#[test]
fn split_and_key_count_examples() {
    let r = rel2(&[(0, 1), (0, 2), (0, 3), (1, 1)]);
    let x = VarSet::single(VarId(0));
    let s = partition_heavy_light(&r, x, 2).unwrap();
    assert_eq!((s.heavy.len(), s.light.len()), (3, 1));
    assert!(partition_heavy_light(&r, x, 4).unwrap().heavy.is_empty());
    let distinct = rel2(&[(0, 1), (1, 1), (2, 1)]);
    assert_eq!(partition_heavy_light(&distinct, x, 1).unwrap().light, distinct);
    assert!(matches!(partition_heavy_light(&r, x, 0), Err(Error::Config(_))));

    assert_eq!(count_distinct_keys(&rel2(&[(0, 1), (0, 2), (1, 1)]), x).unwrap(), 2);
    assert_eq!(count_distinct_keys(&r, r.vars()).unwrap(), r.len());
    assert_eq!(count_distinct_keys(&Relation::<Counting>::empty(r.vars()), x).unwrap(), 0);
}

#[test]
fn stats_are_deterministic() {
    let inst = gen_fig1::<Boolean>(2000, 16, Fig1Wiring::Hub).unwrap();
    let run = || {
        let mut st = EvalStats::new();
        eval_with_doubling(&inst.query, &inst.database, DEFAULT_ALPHA, &mut st).unwrap();
        st
    };
    assert_eq!(run(), run());
}
