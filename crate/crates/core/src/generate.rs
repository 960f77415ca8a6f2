//! Deterministic instance generators: the adversarial three-path family, star
//! and path scaling families, and small random acyclic instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Atom, Query, Value, VarId, VarSet, Variable};
use crate::path::path_query;
use crate::relation::{Database, Relation};
use crate::semiring::{Boolean, Counting, Semiring, Tropical, Weight};

/// A generated query and database with its exact output size.
#[derive(Debug, Clone)]
pub struct Instance<S: Semiring> {
    pub label: String,
    pub query: Query,
    pub database: Database<S>,
    /// `|Q(D)|`, known from the construction.
    pub out: u64,
}

impl<S: Semiring> Instance<S> {
    pub fn size(&self) -> usize {
        self.database.size()
    }
}

/// Builds `Q⋆_ℓ(x1, …, xℓ) ← R1(x1, y), …, Rℓ(xℓ, y)`.
pub fn star_query(l: usize) -> Query {
    assert!((1..=60).contains(&l), "star arity out of range");
    let xs: Vec<String> = (1..=l).map(|i| format!("x{i}")).collect();
    let names: Vec<String> = (1..=l).map(|i| format!("R{i}")).collect();
    let cols: Vec<[&str; 2]> = xs.iter().map(|x| [x.as_str(), "y"]).collect();
    let atoms: Vec<(&str, &[&str])> = names.iter().zip(&cols).map(|(n, c)| (n.as_str(), &c[..])).collect();
    let free: Vec<&str> = xs.iter().map(String::as_str).collect();
    Query::new(&format!("Star{l}"), &free, &atoms).expect("star query is well formed")
}

/// How the two blocks of the three-path family are wired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Wiring {
    /// Upper block: `OUT/2` a-values fully joined to `n` b-values, a matching
    /// `b_i – c_i`, every `c_i` to `d1`. Lower block mirrored: one a-value to
    /// `n` b-values, a matching, every c-value to `OUT/2` d-values.
    /// `|D| = n · (OUT + 4)`.
    AsDrawn,
    /// Same output roles, but the matchings are replaced by hubs so that every
    /// join order of classic Yannakakis materializes `Θ(m · OUT)` tuples.
    /// Upper block: `a_i → b0` for `OUT/2` a-values, `b0 → c_j` and `c_j → d1`
    /// for `m_u` c-values. Lower block: `a* → b_j` and `b_j → c*` for `m`
    /// b-values, `c* → d_l` for `OUT/2` d-values.
    /// `|D| = OUT + 2m + 2m_u` with `m = 3|D|/40`.
    Hub,
}

/// The three-path instance with target sizes `d_size` and `out_size`, wired as drawn.
pub fn gen_fig1_instance<S: Semiring>(d_size: usize, out_size: u64) -> Result<Instance<S>> {
    gen_fig1(d_size, out_size, Fig1Wiring::AsDrawn)
}

/// The three-path instance with an explicit wiring.
///
/// Both wirings produce exactly `out_size` output pairs: `(a_i, d1)` from the
/// upper block and `(a*, d_l)` from the lower one.
pub fn gen_fig1<S: Semiring>(d_size: usize, out_size: u64, wiring: Fig1Wiring) -> Result<Instance<S>> {
    match wiring {
        Fig1Wiring::Hub => gen_hub_path(3, d_size, out_size),
        Fig1Wiring::AsDrawn => {
            if out_size < 2 || !out_size.is_multiple_of(2) || out_size > d_size as u64 {
                return Err(Error::Infeasible(format!("|OUT| = {out_size} must be even, positive and at most |D| = {d_size}")));
            }
            let h = (out_size / 2) as u32;
            let n = ((d_size as f64) / (out_size as f64 + 4.0)).round().max(1.0) as u32;
            let q = path_query(3);
            // upper b/c values are [0, n), lower ones [n, 2n)
            let mut r12 = Vec::new();
            let mut r23 = Vec::new();
            let mut r34 = Vec::new();
            for b in 0..n {
                for a in 0..h {
                    r12.push([a, b]);
                }
                r23.push([b, b]);
                r34.push([b, 0]);
                r12.push([h, n + b]);
                r23.push([n + b, n + b]);
                for d in 0..h {
                    r34.push([n + b, 1 + d]);
                }
            }
            let database = binary_database(&q, [r12, r23, r34])?;
            Ok(Instance { label: format!("fig1-drawn/D={d_size}/OUT={out_size}"), query: q, database, out: out_size })
        }
    }
}

/// Path `P_k` with the hub wiring, for `k ≥ 3`. Middle relations of the
/// upper block are identities on the c-values and middle relations of the
/// lower block identities on the b-values.
fn gen_hub_path<S: Semiring>(k: usize, d_size: usize, out_size: u64) -> Result<Instance<S>> {
    if k < 3 {
        return Err(Error::Infeasible(format!("hub wiring needs a path of length at least 3, got {k}")));
    }
    if out_size < 2 || !out_size.is_multiple_of(2) {
        return Err(Error::Infeasible(format!("|OUT| = {out_size} must be even and positive")));
    }
    let links = (k - 1) as u64;
    let m = (3 * d_size as u64 / (20 * links)).max(1);
    let rest = (d_size as u64).checked_sub(out_size).map(|r| r / links);
    let m_u = match rest {
        Some(r) if r > m => r - m,
        _ => return Err(Error::Infeasible(format!("|D| = {d_size} too small for |OUT| = {out_size} on P{k}"))),
    };
    let (h, m, m_u) = ((out_size / 2) as u32, m as u32, m_u as u32);
    let q = path_query(k);
    let mut rels: Vec<Vec<[u32; 2]>> = vec![Vec::new(); k];
    // x1: a_i = i, a* = h. Middle variables: upper values below m_u, lower
    // ones from m_u up, b0 = 0 and c* = m_u. Last variable: d1 = 0, d_l = 1 + l.
    for a in 0..h {
        rels[0].push([a, 0]);
        rels[k - 1].push([m_u, 1 + a]);
    }
    for j in 0..m_u {
        rels[1].push([0, j]);
        for r in &mut rels[2..k - 1] {
            r.push([j, j]);
        }
        rels[k - 1].push([j, 0]);
    }
    for j in 0..m {
        rels[0].push([h, m_u + j]);
        for r in &mut rels[1..k - 2] {
            r.push([m_u + j, m_u + j]);
        }
        rels[k - 2].push([m_u + j, m_u]);
    }
    let database = binary_database(&q, rels)?;
    Ok(Instance { label: format!("hub-P{k}/D={d_size}/OUT={out_size}"), query: q, database, out: out_size })
}

/// Star `Q⋆_ℓ` where each of `centres` y-values is joined to the same `arms[i]`
/// values of `x_i`, so `|OUT| = Π arms[i]`.
fn gen_star<S: Semiring>(arms: &[u32], centres: u32) -> Result<Instance<S>> {
    let q = star_query(arms.len());
    let mut database = Database::new();
    for (i, &p) in arms.iter().enumerate() {
        let atom = &q.atoms()[i];
        let rows = (0..centres).flat_map(|y| (0..p).map(move |x| (vec![Value(x), Value(y)], S::one())));
        database.insert(&atom.name, Relation::from_columns(&atom.columns, rows)?);
    }
    let out = arms.iter().map(|&p| p as u64).product();
    Ok(Instance { label: String::new(), query: q, database, out })
}

fn binary_database<S: Semiring, R: AsRef<[[u32; 2]]>>(q: &Query, rels: impl IntoIterator<Item = R>) -> Result<Database<S>> {
    let mut db = Database::new();
    for (atom, rows) in q.atoms().iter().zip(rels) {
        let rows = rows.as_ref().iter().map(|r| (vec![Value(r[0]), Value(r[1])], S::one()));
        db.insert(&atom.name, Relation::from_columns(&atom.columns, rows)?);
    }
    Ok(db)
}

/// Families whose output size varies while `|D|` stays roughly fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// `P_k` with the hub wiring; `P_2` is the two-armed star.
    Path(usize),
    /// `Q⋆_ℓ` with shared arm values.
    Star(usize),
    Fig1(Fig1Wiring),
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Path(k) => write!(f, "path{k}"),
            Shape::Star(l) => write!(f, "star{l}"),
            Shape::Fig1(Fig1Wiring::Hub) => write!(f, "fig1"),
            Shape::Fig1(Fig1Wiring::AsDrawn) => write!(f, "fig1-drawn"),
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Shape> {
        let num = |rest: &str| rest.parse::<usize>().map_err(|_| Error::Config(format!("bad shape `{s}`")));
        match s {
            "fig1" => Ok(Shape::Fig1(Fig1Wiring::Hub)),
            "fig1-drawn" => Ok(Shape::Fig1(Fig1Wiring::AsDrawn)),
            _ if s.starts_with("path") => Ok(Shape::Path(num(&s[4..])?)),
            _ if s.starts_with("star") => Ok(Shape::Star(num(&s[4..])?)),
            _ => Err(Error::Config(format!("unknown shape `{s}`; expected pathK, starL, fig1 or fig1-drawn"))),
        }
    }
}

/// One generated point per target output size in `out_grid`, at `|D| ≈ d_size`.
///
/// Infeasible points are skipped and described in the second return value.
/// Star targets are rounded to a power of two split evenly over the arms.
pub fn gen_scaling_family<S: Semiring>(shape: Shape, d_size: usize, out_grid: &[u64]) -> (Vec<Instance<S>>, Vec<String>) {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &target in out_grid {
        let made = match shape {
            Shape::Fig1(w) => gen_fig1(d_size, target, w),
            Shape::Path(k) if k >= 3 => gen_hub_path(k, d_size, target),
            Shape::Path(2) => star_point(2, d_size, target),
            Shape::Path(k) => Err(Error::Infeasible(format!("no scaling family for P{k}"))),
            Shape::Star(l) => star_point(l, d_size, target),
        };
        match made {
            Ok(mut inst) => {
                inst.label = format!("{shape}/D={}/OUT={}", inst.size(), inst.out);
                points.push(inst);
            }
            Err(e) => skipped.push(format!("{shape} at OUT={target}: {e}")),
        }
    }
    (points, skipped)
}

fn star_point<S: Semiring>(l: usize, d_size: usize, target: u64) -> Result<Instance<S>> {
    if l == 0 || target == 0 {
        return Err(Error::Infeasible("star needs at least one arm and a positive output".into()));
    }
    let e = (target as f64).log2().round() as u32;
    let arms: Vec<u32> = (0..l as u32).map(|i| 1u32 << (e / l as u32 + u32::from(i < e % l as u32))).collect();
    let width: usize = arms.iter().map(|&p| p as usize).sum();
    let centres = d_size / width;
    if centres == 0 {
        return Err(Error::Infeasible(format!("|D| = {d_size} cannot hold arms of total width {width}")));
    }
    gen_star(&arms, centres as u32)
}

/// Annotations drawn for random instances.
pub trait RandomAnnotation: Semiring {
    fn sample(rng: &mut ChaCha8Rng) -> Self::Elem;
}

impl RandomAnnotation for Boolean {
    fn sample(_: &mut ChaCha8Rng) -> bool {
        true
    }
}

impl RandomAnnotation for Counting {
    fn sample(_: &mut ChaCha8Rng) -> u64 {
        1
    }
}

impl RandomAnnotation for Tropical {
    fn sample(rng: &mut ChaCha8Rng) -> Weight {
        Weight(rng.gen_range(0..=100))
    }
}

/// Rows drawn per random relation, at most.
pub const RANDOM_MAX_ROWS: usize = 10;

/// A random acyclic query and instance, deterministic in all arguments.
///
/// A random tree is grown atom by atom; each new atom takes a random subset
/// of its parent's variables plus up to two fresh ones, which keeps every
/// variable's atoms connected. `max_atoms` is clamped to `1..=6` and
/// `domain` to `1..=8`.
pub fn gen_random_acyclic<S: RandomAnnotation>(seed: u64, max_atoms: usize, domain: u32, free_fraction: f64) -> (Query, Database<S>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_atoms.clamp(1, 6));
    let domain = domain.clamp(1, 8);
    let mut next_var = 0u8;
    let mut bags: Vec<Vec<VarId>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cols: Vec<VarId> = Vec::new();
        if i > 0 {
            let parent = &bags[rng.gen_range(0..i)];
            for &v in parent {
                if rng.gen_bool(0.5) {
                    cols.push(v);
                }
            }
        }
        let fresh = if cols.is_empty() { rng.gen_range(1..=2) } else { rng.gen_range(0..=2) };
        for _ in 0..fresh {
            if cols.len() < 4 {
                cols.push(VarId(next_var));
                next_var += 1;
            }
        }
        bags.push(cols);
    }
    let vars: Vec<Variable> = (0..next_var).map(|i| Variable { id: VarId(i), name: format!("v{i}") }).collect();
    let free = VarSet::from_ids((0..next_var).map(VarId).filter(|_| rng.gen_bool(free_fraction.clamp(0.0, 1.0))));
    let atoms: Vec<Atom> = bags
        .iter()
        .enumerate()
        .map(|(i, cols)| Atom { name: format!("R{i}"), vars: VarSet::from_ids(cols.iter().copied()), columns: cols.clone() })
        .collect();
    let q = Query::from_parts(&format!("rand{seed}"), vars, atoms, free).expect("random query is well formed");
    let mut db = Database::new();
    for a in q.atoms() {
        let rows = rng.gen_range(1..=RANDOM_MAX_ROWS);
        let data: Vec<(Vec<Value>, S::Elem)> = (0..rows)
            .map(|_| {
                let row = a.columns.iter().map(|_| Value(rng.gen_range(0..domain))).collect();
                (row, S::sample(&mut rng))
            })
            .collect();
        db.insert(&a.name, Relation::from_columns(&a.columns, data).expect("columns are distinct"));
    }
    (q, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_acyclic;
    use crate::oracle::brute_force_eval;

    #[test]
    fn tiny_fig1_matches_oracle() {
        for wiring in [Fig1Wiring::AsDrawn, Fig1Wiring::Hub] {
            let inst = gen_fig1::<Boolean>(48, 8, wiring).unwrap();
            let out = brute_force_eval(&inst.query, &inst.database).unwrap();
            assert_eq!(out.len() as u64, inst.out, "{wiring:?}");
        }
        let drawn = gen_fig1_instance::<Boolean>(24, 4).unwrap();
        assert_eq!(drawn.size(), 24);
        assert_eq!(brute_force_eval(&drawn.query, &drawn.database).unwrap().len(), 4);
    }

    #[test]
    fn hub_sizes_add_up() {
        let inst = gen_fig1::<Boolean>(200_000, 64, Fig1Wiring::Hub).unwrap();
        assert!((inst.size() as i64 - 200_000).abs() <= 2, "{}", inst.size());
        assert!(gen_fig1::<Boolean>(10, 64, Fig1Wiring::Hub).is_err());
        assert!(gen_fig1::<Boolean>(100, 7, Fig1Wiring::AsDrawn).is_err());
    }

    #[test]
    fn families_hit_their_output_sizes() {
        for shape in [Shape::Star(2), Shape::Star(3), Shape::Path(2), Shape::Path(4), Shape::Path(5)] {
            let (points, skipped) = gen_scaling_family::<Counting>(shape, 600, &[4, 16, 64]);
            assert!(skipped.is_empty(), "{skipped:?}");
            for p in &points {
                let out = brute_force_eval(&p.query, &p.database).unwrap();
                assert_eq!(out.len() as u64, p.out, "{}", p.label);
            }
        }
        let (_, skipped) = gen_scaling_family::<Boolean>(Shape::Path(1), 100, &[4]);
        assert_eq!(skipped.len(), 1);
    }

    #[test]
    fn random_instances_are_deterministic_and_acyclic() {
        for seed in 0..200 {
            let (q, db) = gen_random_acyclic::<Tropical>(seed, 6, 8, 0.5);
            let (q2, db2) = gen_random_acyclic::<Tropical>(seed, 6, 8, 0.5);
            assert_eq!(q, q2);
            assert_eq!(db, db2);
            assert!(is_acyclic(&q), "{q}");
        }
    }

    #[test]
    fn shapes_parse() {
        assert_eq!("path4".parse::<Shape>().unwrap(), Shape::Path(4));
        assert_eq!("fig1".parse::<Shape>().unwrap(), Shape::Fig1(Fig1Wiring::Hub));
        assert_eq!(Shape::Star(2).to_string(), "star2");
        assert!("cycle3".parse::<Shape>().is_err());
    }
}
