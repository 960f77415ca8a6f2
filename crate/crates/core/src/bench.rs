//! Algorithm dispatch, scaling-family runs and log-log slope fits.

use std::time::Instant;

use serde::Serialize;

use crate::analysis::{decompose, is_reduced};
use crate::error::{Error, Result};
use crate::generalized::{eval_general_cq_with, eval_with_doubling, Strategy, DEFAULT_ALPHA};
use crate::generate::{gen_scaling_family, Shape};
use crate::model::Query;
use crate::oracle::brute_force_eval;
use crate::path::{path_eval, path_eval_doubling, PathQuery};
use crate::relation::{Database, Relation};
use crate::semiring::{Boolean, Semiring};
use crate::stats::EvalStats;
use crate::tree::JoinTree;
use crate::yannakakis::yannakakis_eval;

/// Evaluation algorithms selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Yannakakis,
    Genyan,
    Path,
    Oracle,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Yannakakis, Algo::Genyan, Algo::Path, Algo::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Yannakakis => "yannakakis",
            Algo::Genyan => "genyan",
            Algo::Path => "path",
            Algo::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algo> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`; expected yannakakis, genyan, path or oracle")))
    }
}

/// Knobs shared by all algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Fixed threshold; doubling when `None`.
    pub delta: Option<u64>,
    pub alpha: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { delta: None, alpha: DEFAULT_ALPHA }
    }
}

/// Runs `algo` on any acyclic query.
///
/// `genyan` uses the doubling driver directly on reduced, existentially
/// connected queries and the full reduce-and-decompose pipeline otherwise.
/// `path` with a fixed `Δ` uses `Δ^⌈(k+1)/2⌉` as the output guess.
pub fn run_algo<S: Semiring>(algo: Algo, q: &Query, db: &Database<S>, cfg: RunConfig, stats: &mut EvalStats) -> Result<Relation<S>> {
    match algo {
        Algo::Oracle => brute_force_eval(q, db),
        Algo::Yannakakis => yannakakis_eval(q, db, &JoinTree::for_query(q)?, stats),
        Algo::Genyan => match cfg.delta {
            Some(delta) => eval_general_cq_with(q, db, Strategy::Fixed { delta }, stats),
            None if is_reduced(q) && decompose(q)?.components.len() == 1 && q.atoms().len() > 1 => {
                eval_with_doubling(q, db, cfg.alpha, stats)
            }
            None => eval_general_cq_with(q, db, Strategy::Doubling { alpha: cfg.alpha }, stats),
        },
        Algo::Path => {
            let p = PathQuery::detect(q)?;
            match cfg.delta {
                Some(delta) => {
                    let size = db.size_for(q)?.max(1) as u64;
                    let delta = delta.clamp(1, size);
                    let guess = delta.saturating_pow((p.len() as u32 + 2) / 2);
                    path_eval(q, db, delta, guess, stats)
                }
                None => path_eval_doubling(q, db, cfg.alpha, stats),
            }
        }
    }
}

/// Least-squares fit of `ln y = slope · ln x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// `ln y − fitted`, one per point.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

/// Fits a line through `(ln x, ln y)`; needs two distinct positive `x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Config("log-log fit needs positive values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return Err(Error::Config("log-log fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LogLogFit { slope, intercept, residuals, r_squared })
}

/// One algorithm on one family point.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoRun {
    pub algo: Algo,
    pub max_intermediate: u64,
    pub tuple_ops: u64,
    pub doubling_rounds: u32,
    pub delta_final: Option<u64>,
    pub fallback: bool,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchPoint {
    pub label: String,
    pub input_size: usize,
    pub out: u64,
    pub runs: Vec<AlgoRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgoFit {
    pub algo: Algo,
    #[serde(flatten)]
    pub fit: LogLogFit,
}

/// Scaling-family benchmark: per-point counters and per-algorithm slopes of
/// `max_intermediate` against `|OUT|`.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub shape: String,
    pub d_size: usize,
    pub alpha: f64,
    pub points: Vec<BenchPoint>,
    pub fits: Vec<AlgoFit>,
    pub skipped: Vec<String>,
}

impl BenchReport {
    pub fn slope(&self, algo: Algo) -> Option<f64> {
        self.fits.iter().find(|f| f.algo == algo).map(|f| f.fit.slope)
    }
}

/// Runs every algorithm on every point of a Boolean scaling family.
///
/// Each answer's size is checked against the family's known `|OUT|`.
pub fn bench_family(shape: Shape, d_size: usize, out_grid: &[u64], algos: &[Algo], cfg: RunConfig) -> Result<BenchReport> {
    let (family, skipped) = gen_scaling_family::<Boolean>(shape, d_size, out_grid);
    let mut points = Vec::with_capacity(family.len());
    for inst in &family {
        let mut runs = Vec::with_capacity(algos.len());
        for &algo in algos {
            let mut stats = EvalStats::new();
            let start = Instant::now();
            let out = run_algo(algo, &inst.query, &inst.database, cfg, &mut stats)?;
            let millis = start.elapsed().as_millis();
            if out.len() as u64 != inst.out {
                return Err(Error::Contract(format!("{algo} returned {} tuples on {}, expected {}", out.len(), inst.label, inst.out)));
            }
            runs.push(AlgoRun {
                algo,
                max_intermediate: stats.max_intermediate,
                tuple_ops: stats.tuple_ops,
                doubling_rounds: stats.doubling_rounds,
                delta_final: stats.delta_final,
                fallback: stats.fallback,
                millis,
            });
        }
        points.push(BenchPoint { label: inst.label.clone(), input_size: inst.size(), out: inst.out, runs });
    }
    let mut fits = Vec::new();
    if points.len() >= 2 {
        for (i, &algo) in algos.iter().enumerate() {
            let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.out as f64, p.runs[i].max_intermediate.max(1) as f64)).collect();
            fits.push(AlgoFit { algo, fit: fit_loglog(&xy)? });
        }
    }
    Ok(BenchReport { schema: 1, shape: shape.to_string(), d_size, alpha: cfg.alpha, points, fits, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (2f64.powi(i), 3.0 * 2f64.powf(0.5 * i as f64))).collect();
        let fit = fit_loglog(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(fit_loglog(&[(1.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn algos_parse() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("hash".parse::<Algo>().is_err());
    }

    #[test]
    fn small_bench_agrees_on_outputs() {
        let r = bench_family(Shape::Fig1(crate::Fig1Wiring::Hub), 300, &[4, 16, 64], &Algo::ALL, RunConfig::default()).unwrap();
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.fits.len(), 4);
    }
}
