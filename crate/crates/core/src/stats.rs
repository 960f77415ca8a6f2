//! Deterministic cost counters collected during one evaluation.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Operation and materialization counters.
///
/// `tuple_ops` counts tuples scanned and produced by joins, semijoins,
/// projections and splits. It is the machine-independent cost measure the
/// doubling driver budgets against.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub tuple_ops: u64,
    /// Largest relation materialized by a join or a final projection.
    pub max_intermediate: u64,
    pub total_intermediate: u64,
    pub doubling_rounds: u32,
    /// Largest materialization per tree node label.
    pub per_node_sizes: BTreeMap<String, u64>,
    /// Cap on `tuple_ops`; exceeding it aborts with [`Error::BudgetExhausted`].
    pub budget: Option<u64>,
    /// Set when the doubling driver gave up and ran an unlimited pass.
    pub fallback: bool,
    pub delta_final: Option<u64>,
    /// Internal-node materializations checked against `4·N·Δ^(#s−1)`.
    pub bound_checks: u64,
    pub bound_violations: u64,
    /// Heavy-call materializations above `OUT/Δ_s · |R_s|` (only with an output hint).
    pub heavy_audit_checks: u64,
    pub heavy_audit_violations: u64,
}

impl EvalStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        EvalStats { budget: Some(budget), ..Self::default() }
    }

    /// Adds `n` tuple operations, failing once the budget is exceeded.
    pub fn charge(&mut self, n: u64) -> Result<()> {
        self.tuple_ops += n;
        match self.budget {
            Some(b) if self.tuple_ops > b => Err(Error::BudgetExhausted { used: self.tuple_ops, budget: b }),
            _ => Ok(()),
        }
    }

    /// Remaining operations before the budget trips, if there is one.
    pub fn headroom(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.tuple_ops))
    }

    /// Records one materialized relation.
    pub fn record(&mut self, label: &str, size: usize) {
        let size = size as u64;
        self.max_intermediate = self.max_intermediate.max(size);
        self.total_intermediate += size;
        match self.per_node_sizes.get_mut(label) {
            Some(s) => *s = (*s).max(size),
            None => {
                self.per_node_sizes.insert(label.to_string(), size);
            }
        }
    }

    /// Folds the counters of a finished or aborted sub-run into `self`.
    pub fn absorb(&mut self, other: &EvalStats) {
        self.tuple_ops += other.tuple_ops;
        self.max_intermediate = self.max_intermediate.max(other.max_intermediate);
        self.total_intermediate += other.total_intermediate;
        self.doubling_rounds += other.doubling_rounds;
        for (k, &v) in &other.per_node_sizes {
            let e = self.per_node_sizes.entry(k.clone()).or_insert(0);
            *e = (*e).max(v);
        }
        self.fallback |= other.fallback;
        if other.delta_final.is_some() {
            self.delta_final = other.delta_final;
        }
        self.bound_checks += other.bound_checks;
        self.bound_violations += other.bound_violations;
        self.heavy_audit_checks += other.heavy_audit_checks;
        self.heavy_audit_violations += other.heavy_audit_violations;
    }
}
