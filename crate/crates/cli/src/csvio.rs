//! CSV data files: one `<atom>.csv` per atom, a header of variable names and
//! an optional trailing `__w` annotation column.

use std::cmp::Ordering;
use std::io::Write;
use std::path::{Path, PathBuf};

use osyan::{Atom, Database, Dictionary, Query, Relation, Semiring, SemiringKind, Value, VarId};
use thiserror::Error;

/// Name of the annotation column.
pub const WEIGHT_COLUMN: &str = "__w";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: no data file for atom `{atom}`", path.display())]
    MissingFile { path: PathBuf, atom: String },
    #[error("{}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
    #[error("{}:1: header [{}] does not match atom `{atom}` with variables [{}]", path.display(), found.join(", "), expected.join(", "))]
    Header { path: PathBuf, atom: String, expected: Vec<String>, found: Vec<String> },
    #[error("{}:{line}: expected {expected} fields, found {found}", path.display())]
    RowWidth { path: PathBuf, line: u64, expected: usize, found: usize },
    #[error("{}:{line}: malformed annotation: {msg}", path.display())]
    Annotation { path: PathBuf, line: u64, msg: String },
    #[error("{}:{line}: {msg}", path.display())]
    Csv { path: PathBuf, line: u64, msg: String },
}

/// A database read from disk, with any non-fatal diagnostics.
#[derive(Debug)]
pub struct Ingested<S: Semiring> {
    pub database: Database<S>,
    pub warnings: Vec<String>,
}

/// Reads `<dir>/<atom>.csv` for every atom of `q`, interning values in `dict`.
pub fn ingest_csv<S: Semiring>(dir: &Path, q: &Query, dict: &mut Dictionary) -> Result<Ingested<S>, IngestError> {
    let mut database = Database::new();
    let mut warnings = Vec::new();
    for atom in q.atoms() {
        let path = dir.join(format!("{}.csv", atom.name));
        if !path.is_file() {
            return Err(IngestError::MissingFile { path, atom: atom.name.clone() });
        }
        let rel = read_relation::<S>(&path, q, atom, dict, &mut warnings)?;
        database.insert(&atom.name, rel);
    }
    Ok(Ingested { database, warnings })
}

/// Reads one atom's file. Header columns may come in any order.
pub fn read_relation<S: Semiring>(
    path: &Path,
    q: &Query,
    atom: &Atom,
    dict: &mut Dictionary,
    warnings: &mut Vec<String>,
) -> Result<Relation<S>, IngestError> {
    let io = |e: csv::Error| IngestError::Io { path: path.to_path_buf(), msg: e.to_string() };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(path).map_err(io)?;
    let header: Vec<String> = rdr.headers().map_err(io)?.iter().map(str::to_string).collect();
    let expected: Vec<String> = atom.columns.iter().map(|&v| q.var_name(v).to_string()).collect();
    let weighted = header.last().map(String::as_str) == Some(WEIGHT_COLUMN);
    let names = &header[..header.len() - weighted as usize];
    let columns: Option<Vec<VarId>> = names.iter().map(|n| q.var(n).filter(|v| atom.vars.contains(*v))).collect();
    let columns = match columns {
        Some(c) if c.len() == atom.columns.len() && osyan::VarSet::from_ids(c.iter().copied()) == atom.vars => c,
        _ => return Err(IngestError::Header { path: path.to_path_buf(), atom: atom.name.clone(), expected, found: header }),
    };
    let use_weights = weighted && S::KIND != SemiringKind::Boolean;
    if weighted && !use_weights {
        warnings.push(format!("{}: `{WEIGHT_COLUMN}` column ignored for the boolean semiring", path.display()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::Csv { path: path.to_path_buf(), line, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(IngestError::RowWidth { path: path.to_path_buf(), line, expected: header.len(), found: rec.len() });
        }
        let values: Vec<Value> = rec.iter().take(columns.len()).map(|s| dict.intern(s)).collect();
        let w = if use_weights {
            S::parse(&rec[columns.len()]).map_err(|msg| IngestError::Annotation { path: path.to_path_buf(), line, msg })?
        } else {
            S::one()
        };
        rows.push((values, w));
    }
    Relation::from_columns(&columns, rows).map_err(|e| IngestError::Csv { path: path.to_path_buf(), line: 0, msg: e.to_string() })
}

/// Orders numbers numerically and before any other text.
fn cmp_field(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Writes `rel` with columns in the given order and rows sorted by their
/// decoded values. Non-boolean relations get a trailing `__w` column; so does
/// a nullary relation, which would otherwise have no columns at all.
pub fn write_relation<S: Semiring, W: Write>(
    out: W,
    q: &Query,
    columns: &[VarId],
    rel: &Relation<S>,
    decode: impl Fn(Value) -> String,
) -> csv::Result<()> {
    let vars = rel.vars();
    assert!(
        columns.len() == vars.len() && columns.iter().all(|&c| vars.contains(c)),
        "output columns must be a permutation of the relation's variables"
    );
    let with_weight = S::KIND != SemiringKind::Boolean || columns.is_empty();
    let mut rows: Vec<(Vec<String>, String)> = rel
        .iter()
        .map(|(row, w)| (columns.iter().map(|&c| decode(row[vars.position(c)])).collect(), S::format(w)))
        .collect();
    rows.sort_by(|a, b| {
        a.0.iter().zip(&b.0).map(|(x, y)| cmp_field(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    });
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header: Vec<&str> = columns.iter().map(|&c| q.var_name(c)).collect();
    if with_weight {
        header.push(WEIGHT_COLUMN);
    }
    w.write_record(&header)?;
    for (fields, weight) in &rows {
        if with_weight {
            w.write_record(fields.iter().map(String::as_str).chain([weight.as_str()]))?;
        } else {
            w.write_record(fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one file per atom of `q` into `dir`, values as decimal ids.
pub fn write_database<S: Semiring>(dir: &Path, q: &Query, db: &Database<S>) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for atom in q.atoms() {
        let rel = db.get(&atom.name).ok_or_else(|| anyhow::anyhow!("no relation for atom `{}`", atom.name))?;
        let file = std::fs::File::create(dir.join(format!("{}.csv", atom.name)))?;
        write_relation(std::io::BufWriter::new(file), q, &atom.columns, rel, |v| v.0.to_string())?;
    }
    Ok(())
}
