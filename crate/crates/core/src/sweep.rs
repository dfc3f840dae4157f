//! Batch evaluation of many independent `(N, D)` inputs.
//!
//! Each engine call is sequential, but distinct inputs share nothing, so
//! batches fan out over rayon when the `parallel` feature is on. The
//! sequential path is always available for comparison and timing.

use std::collections::BTreeMap;

use rug::Integer;

use crate::engine::{find_large_order, EngineConfig, EngineRun, ExitPath};
use crate::error::Result;
use crate::oracle::{verify_outcome, VerificationReport};
use crate::order::OrderStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    Sequential,
    /// Rayon data parallelism; identical to `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], mode: Mode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        Mode::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Mode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Mode::Parallel => items.iter().map(f).collect(),
    }
}

/// Runs the engine on every input.
pub fn run_batch(inputs: &[(Integer, Integer)], config: &EngineConfig, mode: Mode) -> Vec<Result<EngineRun>> {
    map(inputs, mode, |(n, d)| find_large_order(n, d, config))
}

/// One verified engine run.
#[derive(Clone, Debug)]
pub struct Checked {
    pub run: EngineRun,
    pub report: VerificationReport,
}

/// Aggregate of a verified sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepSummary {
    pub runs: u64,
    pub passed: u64,
    pub failures: Vec<String>,
    pub errors: Vec<String>,
    pub fallback_total: u64,
    pub exits: BTreeMap<ExitPath, u64>,
    pub order_stats: OrderStats,
}

impl SweepSummary {
    pub fn all_passed(&self) -> bool {
        self.errors.is_empty() && self.failures.is_empty() && self.passed == self.runs
    }

    fn add(&mut self, checked: &Checked) {
        self.runs += 1;
        if checked.report.passed() {
            self.passed += 1;
        } else {
            self.failures.push(checked.report.to_string());
        }
        self.fallback_total += u64::from(checked.run.trace.fallback_count);
        *self.exits.entry(checked.run.trace.exit).or_default() += 1;
        self.order_stats.absorb(&checked.run.trace.order_stats);
    }
}

/// Runs and verifies every input against the brute-force oracle.
pub fn verify_batch(inputs: &[(Integer, Integer)], config: &EngineConfig, mode: Mode) -> Vec<Result<Checked>> {
    map(inputs, mode, |(n, d)| {
        let run = find_large_order(n, d, config)?;
        let report = verify_outcome(n, d, &run.outcome);
        Ok(Checked { run, report })
    })
}

/// [`verify_batch`] folded into a summary. `inspect` sees every successful run.
pub fn verify_sweep<F>(inputs: &[(Integer, Integer)], config: &EngineConfig, mode: Mode, inspect: F) -> SweepSummary
where
    F: Fn(&Integer, &Integer, &Checked) + Sync + Send,
{
    let checked = map(inputs, mode, |(n, d)| {
        let run = find_large_order(n, d, config)?;
        let report = verify_outcome(n, d, &run.outcome);
        let checked = Checked { run, report };
        inspect(n, d, &checked);
        Ok::<_, crate::error::Error>(checked)
    });
    let mut summary = SweepSummary { order_stats: OrderStats::new(config.bsgs_constant), ..Default::default() };
    for (result, (n, d)) in checked.iter().zip(inputs) {
        match result {
            Ok(c) => summary.add(c),
            Err(e) => {
                summary.runs += 1;
                summary.errors.push(format!("N={n} D={d}: {e}"));
            }
        }
    }
    summary
}
