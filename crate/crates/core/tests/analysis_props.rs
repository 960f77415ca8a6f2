mod common;

use osyan::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_query(seed: u64, free_fraction: f64) -> Query {
    gen_random_acyclic::<Boolean>(seed, 6, 4, free_fraction).0
}

/// Atom variable sets in sorted order, plus the free set.
fn hypergraph(q: &Query) -> (Vec<u64>, u64) {
    let mut edges: Vec<u64> = q.atoms().iter().map(|a| a.vars.0).collect();
    edges.sort_unstable();
    (edges, q.free().0)
}

/// Minimum set cover by trying every subset, as a second opinion.
fn brute_cover(sets: &[VarSet], target: VarSet) -> usize {
    (1u32..1 << sets.len())
        .filter(|m| {
            let cover = (0..sets.len()).filter(|i| m >> i & 1 == 1).fold(VarSet::EMPTY, |s, i| s.union(sets[i]));
            target.is_subset(cover)
        })
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_is_idempotent(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        let red = reduce_query(&q).unwrap();
        prop_assert!(is_reduced(&red.query));
        let again = reduce_query(&red.query).unwrap();
        prop_assert_eq!(hypergraph(&again.query), hypergraph(&red.query));
        prop_assert!(again.log.is_empty());
    }

    #[test]
    fn reduction_is_confluent(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        let expect = hypergraph(&reduce_query(&q).unwrap().query);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let red = reduce_query_randomized(&q, &mut rng).unwrap();
            prop_assert_eq!(hypergraph(&red.query), expect.clone());
        }
    }

    #[test]
    fn leaves_of_reduced_trees_have_isolated_free_vars(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        let red = reduce_query(&q).unwrap().query;
        let tree = JoinTree::for_query(&red).unwrap();
        for root in 0..tree.len() {
            let t = tree.clone().with_root(root).unwrap();
            for leaf in t.leaves() {
                let others = (0..t.len()).filter(|&i| i != leaf).fold(VarSet::EMPTY, |s, i| s.union(t.bag(i)));
                let isolated_free = t.bag(leaf).minus(others).inter(red.free());
                prop_assert!(!isolated_free.is_empty(), "leaf {} of {}", t.label(leaf), red);
            }
        }
    }

    #[test]
    fn free_width_is_at_most_projection_width(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        let (fw, pw) = (free_width(&q).unwrap(), projection_width(&q).unwrap());
        prop_assert!(fw <= pw, "freew {} > wout {} on {}", fw, pw, q);
    }

    #[test]
    fn free_width_matches_brute_force_cover(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        let mut expect = 1;
        for c in decompose(&q).unwrap().components {
            let cq = &c.query;
            let edges: Vec<VarSet> = cq.atoms().iter().map(|a| a.vars).collect();
            let target = cq
                .free()
                .iter()
                .filter(|&v| edges.iter().filter(|e| e.contains(v)).count() == 1)
                .collect::<VarSet>();
            if !target.is_empty() {
                expect = expect.max(brute_cover(&edges, target));
            }
        }
        prop_assert_eq!(free_width(&q).unwrap(), expect);
    }

    #[test]
    fn free_connex_iff_width_one(seed in any::<u64>(), ff in 0.0f64..1.0) {
        let q = random_query(seed, ff);
        prop_assert_eq!(is_free_connex(&q).unwrap(), projection_width(&q).unwrap() == 1, "{}", q);
    }
}

#[test]
fn widths_of_named_queries() {
    for k in 2..=6 {
        assert_eq!(projection_width(&path_query(k)).unwrap(), k);
    }
    for l in 2..=5 {
        assert_eq!(projection_width(&star_query(l)).unwrap(), l);
        assert_eq!(free_width(&star_query(l)).unwrap(), l);
    }
    assert_eq!(projection_width(&common::fig2_query()).unwrap(), 4);
}

#[test]
fn fig2_decomposes_into_three_components() {
    let q = common::fig2_query();
    assert!(is_reduced(&q));
    let d = decompose(&q).unwrap();
    let names: Vec<Vec<&str>> =
        d.components.iter().map(|c| c.query.atoms().iter().map(|a| a.name.as_str()).collect()).collect();
    assert_eq!(names, vec![vec!["R12", "R23", "R34", "R25"], vec!["R46"], vec!["R57"]]);
    assert_eq!(d.components[0].query.show(d.components[0].query.free()), "{x1, x4, x5}");
}

#[test]
fn free_connex_examples() {
    let full = Query::new("F", &["a", "b", "c"], &[("R", &["a", "b"]), ("S", &["b", "c"])]).unwrap();
    assert!(is_free_connex(&full).unwrap());
    assert!(!is_free_connex(&path_query(3)).unwrap());
    let q = Query::new("Q", &["x1", "x2"], &[("R", &["x1", "x2"]), ("S", &["x2"])]).unwrap();
    assert!(is_free_connex(&q).unwrap());
}

#[test]
fn cyclic_queries_are_rejected() {
    let tri = Query::new("T", &["a"], &[("R", &["a", "b"]), ("S", &["b", "c"]), ("U", &["c", "a"])]).unwrap();
    assert!(!is_acyclic(&tri));
    assert!(matches!(reduce_query(&tri), Err(Error::Analysis(_))));
    assert!(matches!(JoinTree::for_query(&tri), Err(Error::Analysis(_))));
    let db = Database::<Boolean>::new();
    assert!(matches!(eval_general_cq(&tri, &db, &mut EvalStats::new()), Err(Error::Analysis(_))));
}
