use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osyan::{Counting, Dictionary, Query, Relation, Value};
use osyan_cli::csvio::{read_relation, write_relation};
use proptest::prelude::*;
use serde_json::Value as Json;

fn osyan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osyan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = osyan(args);
    assert!(out.status.success(), "osyan {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn eval_csv(dir: &Path, algo: &str) -> Vec<u8> {
    let out = dir.join(format!("{algo}.csv"));
    ok(&["eval", p(&dir.join("query.cq")), p(dir), "--algo", algo, "--out", p(&out)]);
    fs::read(out).unwrap()
}

#[test]
fn genyan_matches_oracle_byte_for_byte_on_fig1() {
    for shape in ["fig1", "fig1-drawn"] {
        let tmp = tempfile::tempdir().unwrap();
        ok(&["gen", p(tmp.path()), "--shape", shape, "--d-size", "400", "--out-size", "16"]);
        let oracle = eval_csv(tmp.path(), "oracle");
        assert_eq!(String::from_utf8_lossy(&oracle).lines().count(), 17, "header plus 16 answers");
        for algo in ["genyan", "yannakakis", "path"] {
            assert_eq!(eval_csv(tmp.path(), algo), oracle, "{shape} {algo}");
        }
    }
}

#[test]
fn weighted_random_instances_match_oracle() {
    for semiring in ["count", "tropical"] {
        for seed in 0..15 {
            let tmp = tempfile::tempdir().unwrap();
            ok(&["gen", p(tmp.path()), "--seed", &seed.to_string(), "--semiring", semiring]);
            let oracle = eval_csv(tmp.path(), "oracle");
            assert!(String::from_utf8_lossy(&oracle).starts_with(|c: char| c != '\n'));
            assert_eq!(eval_csv(tmp.path(), "genyan"), oracle, "{semiring} seed {seed}");
            assert_eq!(eval_csv(tmp.path(), "yannakakis"), oracle, "{semiring} seed {seed}");
        }
    }
}

#[test]
fn stats_report_has_the_documented_fields() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen", p(tmp.path()), "--shape", "path3", "--d-size", "600", "--out-size", "64"]);
    let stats = tmp.path().join("stats.json");
    ok(&["eval", p(&tmp.path().join("query.cq")), p(tmp.path()), "--algo", "path", "--stats", p(&stats), "--out", p(&tmp.path().join("o.csv"))]);
    let j: Json = serde_json::from_slice(&fs::read(stats).unwrap()).unwrap();
    assert_eq!(j["schema"], 1);
    assert_eq!(j["algo"], "path");
    assert_eq!(j["output_size"], 64);
    for key in ["input_size", "max_intermediate", "total_intermediate", "tuple_ops", "doubling_rounds", "per_node_sizes", "delta_final"] {
        assert!(j.get(key).is_some(), "missing {key}");
    }
}

const FIG2: &str = "\
# six binary atoms around x2
query Q(x1, x4, x5, x6, x7)
atom R12(x1, x2)
atom R23(x2, x3)
atom R34(x3, x4)
atom R25(x2, x5)
atom R46(x4, x6)
atom R57(x5, x7)
";

#[test]
fn analyze_reports_widths() {
    let tmp = tempfile::tempdir().unwrap();
    let q = tmp.path().join("fig2.cq");
    fs::write(&q, FIG2).unwrap();
    let j: Json = serde_json::from_str(&ok(&["analyze", p(&q), "--json"])).unwrap();
    assert_eq!(j["schema"], 1);
    assert_eq!(j["acyclic"], true);
    assert_eq!(j["free_connex"], false);
    assert_eq!(j["projection_width"], 4);
    // x1, x4 and x5 are isolated in three different atoms
    assert_eq!(j["free_width"], 3);
    assert_eq!(j["components"].as_array().unwrap().len(), 3);
    let text = ok(&["analyze", p(&q)]);
    assert!(text.contains("wout:        4"), "{text}");

    fs::write(&q, "query T(a)\natom R(a, b)\natom S(b, c)\natom U(c, a)\n").unwrap();
    let j: Json = serde_json::from_str(&ok(&["analyze", p(&q), "--json"])).unwrap();
    assert_eq!(j["acyclic"], false);
}

#[test]
fn failures_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let q = dir.join("q.cq");
    fs::write(&q, "query Q(a, c)\natom R(a, b)\natom S(b, c)\natom T(b)\nsemiring count\n").unwrap();
    fs::write(dir.join("R.csv"), "a,b\n1,2\n").unwrap();
    fs::write(dir.join("S.csv"), "b,c,__w\n2,3,4\n").unwrap();
    fs::write(dir.join("T.csv"), "b\n2\n").unwrap();
    assert_eq!(ok(&["eval", p(&q), p(dir)]), "a,c,__w\n1,3,4\n");

    let code = |args: &[&str]| {
        let out = osyan(args);
        (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
    };
    // usage errors
    assert_eq!(code(&["eval", p(&q), p(dir), "--algo", "hash"]).0, 1);
    assert_eq!(code(&["eval", p(&q), p(dir), "--delta", "0"]).0, 1);
    assert_eq!(code(&["eval", p(&q)]).0, 1);
    assert_eq!(code(&["bench"]).0, 1);
    // contract and data errors
    let (c, err) = code(&["eval", p(&q), p(dir), "--algo", "path"]);
    assert_eq!(c, 2);
    assert!(err.contains("unsupported query shape"), "{err}");
    fs::write(dir.join("S.csv"), "b,c,__w\n2,3,4\n2,4,many\n").unwrap();
    let (c, err) = code(&["eval", p(&q), p(dir)]);
    assert_eq!(c, 2);
    assert!(err.contains("S.csv:3") && err.contains("annotation"), "{err}");
    fs::write(dir.join("S.csv"), "b,c\n2,3\n").unwrap();
    fs::remove_file(dir.join("T.csv")).unwrap();
    let (c, err) = code(&["eval", p(&q), p(dir)]);
    assert_eq!(c, 2);
    assert!(err.contains("T.csv") && err.contains("no data file"), "{err}");
    fs::write(&q, "query Q(a)\natom R(a, b\n").unwrap();
    let (c, err) = code(&["eval", p(&q), p(dir)]);
    assert_eq!(c, 2);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn boolean_weights_are_ignored_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let q = dir.join("q.cq");
    fs::write(&q, "query Q(a)\natom R(a, b)\n").unwrap();
    fs::write(dir.join("R.csv"), "a,b,__w\n1,2,9\n1,3,9\n").unwrap();
    let out = osyan(&["eval", p(&q), p(dir)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "a\n1\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignored"));
}

#[test]
fn bench_fits_each_algorithm() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("bench.json");
    let summary = ok(&["bench", "--shape", "path3", "--d-size", "20000", "--grid", "16,64,256,1024", "--out", p(&report)]);
    assert!(summary.contains("slope"), "{summary}");
    let j: Json = serde_json::from_slice(&fs::read(report).unwrap()).unwrap();
    assert_eq!(j["schema"], 1);
    assert_eq!(j["points"].as_array().unwrap().len(), 4);
    let slope = |algo: &str| {
        j["fits"].as_array().unwrap().iter().find(|f| f["algo"] == algo).unwrap()["slope"].as_f64().unwrap()
    };
    assert!((slope("yannakakis") - 1.0).abs() <= 0.15, "{}", slope("yannakakis"));
    assert!(slope("genyan") <= 2.0 / 3.0 + 0.10, "{}", slope("genyan"));
    assert!(slope("path") <= 0.5 + 0.10, "{}", slope("path"));
    for f in j["fits"].as_array().unwrap() {
        assert_eq!(f["residuals"].as_array().unwrap().len(), 4);
    }
}

fn round_trip(rows: Vec<(Vec<String>, u64)>) -> (Vec<u8>, Vec<u8>) {
    let q = Query::new("Q", &["a", "b"], &[("R", &["b", "a"])]).unwrap();
    let atom = &q.atoms()[0];
    let mut dict = Dictionary::new();
    let data: Vec<(Vec<Value>, u64)> = rows.iter().map(|(r, w)| (r.iter().map(|s| dict.intern(s)).collect(), *w)).collect();
    let rel = Relation::<Counting>::from_columns(&atom.columns, data).unwrap();
    let emit = |rel: &Relation<Counting>, dict: &Dictionary| {
        let mut buf = Vec::new();
        write_relation(&mut buf, &q, &atom.columns, rel, |v| dict.decode(v).to_string()).unwrap();
        buf
    };
    let first = emit(&rel, &dict);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("R.csv");
    fs::write(&path, &first).unwrap();
    let mut dict2 = Dictionary::new();
    let back = read_relation::<Counting>(&path, &q, atom, &mut dict2, &mut Vec::new()).unwrap();
    // same tuples and annotations after decoding
    let decode = |r: &Relation<Counting>, d: &Dictionary| {
        let mut v: Vec<(Vec<String>, u64)> = r.iter().map(|(row, w)| (row.iter().map(|&x| d.decode(x).to_string()).collect(), w)).collect();
        v.sort();
        v
    };
    assert_eq!(decode(&back, &dict2), decode(&rel, &dict));
    assert_eq!(back.vars(), rel.vars());
    (first, emit(&back, &dict2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_ingest_is_identity(rows in prop::collection::vec((prop::collection::vec("[a-z0-9]{1,3}|-?[0-9]{1,4}", 2), 1u64..1000), 0..20)) {
        let (first, second) = round_trip(rows);
        prop_assert_eq!(first, second);
    }
}
