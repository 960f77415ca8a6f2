//! The query file format.
//!
//! ```text
//! # two-path, projected to its endpoints
//! query P2(x1, x3)
//! atom R(x1, x2)
//! atom S(x2, x3)
//! semiring count
//! ```
//!
//! One `query` line, one `atom` line per relation, and at most one
//! `semiring` line (`boolean` when absent). Blank lines and `#` comments are
//! skipped.

use std::fmt;

use osyan::{Query, SemiringKind, VarId};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

/// A parsed query file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub query: Query,
    /// Free variables in the order written in the head.
    pub head: Vec<VarId>,
    pub semiring: SemiringKind,
}

/// Splits `NAME(a, b, c)` into its name and arguments.
fn call(text: &str, line: usize) -> Result<(String, Vec<String>), ParseError> {
    let Some((name, rest)) = text.split_once('(') else {
        return err(line, format!("expected `NAME(...)`, found `{text}`"));
    };
    let Some(args) = rest.trim_end().strip_suffix(')') else {
        return err(line, "missing closing parenthesis");
    };
    let name = name.trim();
    if !is_ident(name) {
        return err(line, format!("`{name}` is not a valid name"));
    }
    let args: Vec<String> = if args.trim().is_empty() {
        Vec::new()
    } else {
        args.split(',').map(|a| a.trim().to_string()).collect()
    };
    if let Some(bad) = args.iter().find(|a| !is_ident(a)) {
        return err(line, format!("`{bad}` is not a valid variable name"));
    }
    Ok((name.to_string(), args))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

impl QuerySpec {
    pub fn parse(text: &str) -> Result<QuerySpec, ParseError> {
        let mut head: Option<(usize, String, Vec<String>)> = None;
        let mut atoms: Vec<(String, Vec<String>)> = Vec::new();
        let mut semiring: Option<SemiringKind> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
            let rest = rest.trim();
            match keyword {
                "query" => {
                    if head.is_some() {
                        return err(line, "second `query` line");
                    }
                    let (name, args) = call(rest, line)?;
                    head = Some((line, name, args));
                }
                "atom" => {
                    let (name, args) = call(rest, line)?;
                    if args.is_empty() {
                        return err(line, format!("atom `{name}` has no variables"));
                    }
                    atoms.push((name, args));
                }
                "semiring" => {
                    if semiring.is_some() {
                        return err(line, "second `semiring` line");
                    }
                    semiring = Some(rest.parse().or_else(|e: String| err(line, e))?);
                }
                other => return err(line, format!("unknown keyword `{other}`")),
            }
        }
        let Some((qline, name, free)) = head else {
            return err(text.lines().count().max(1), "missing `query` line");
        };
        if atoms.is_empty() {
            return err(qline, format!("query `{name}` has no atoms"));
        }
        let free_refs: Vec<&str> = free.iter().map(String::as_str).collect();
        let atom_cols: Vec<Vec<&str>> = atoms.iter().map(|(_, c)| c.iter().map(String::as_str).collect()).collect();
        let atom_refs: Vec<(&str, &[&str])> = atoms.iter().zip(&atom_cols).map(|((n, _), c)| (n.as_str(), c.as_slice())).collect();
        let query = Query::new(&name, &free_refs, &atom_refs).or_else(|e| err(qline, e.to_string()))?;
        let mut head = Vec::with_capacity(free.len());
        for f in &free {
            let v = query.var(f).unwrap();
            if head.contains(&v) {
                return err(qline, format!("free variable `{f}` listed twice"));
            }
            head.push(v);
        }
        Ok(QuerySpec { query, head, semiring: semiring.unwrap_or(SemiringKind::Boolean) })
    }

    /// A spec for a generated query, with the head in id order.
    pub fn from_query(query: Query, semiring: SemiringKind) -> QuerySpec {
        let head = query.free().iter().collect();
        QuerySpec { query, head, semiring }
    }
}

impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = &self.query;
        let names = |vs: &mut dyn Iterator<Item = VarId>| vs.map(|v| q.var_name(v).to_string()).collect::<Vec<_>>().join(", ");
        writeln!(f, "query {}({})", q.name(), names(&mut self.head.iter().copied()))?;
        for a in q.atoms() {
            writeln!(f, "atom {}({})", a.name, names(&mut a.columns.iter().copied()))?;
        }
        writeln!(f, "semiring {}", self.semiring)
    }
}
