//! Experiment sweeps: the cross product of postures, strategies, rates, and
//! seeds, executed in parallel and emitted as CSV in a deterministic order.

use rayon::prelude::*;

use crate::channel::PostureId;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::scenario::Scenario;
use crate::strategies::StrategyKind;

/// Axes of one sweep; `base` supplies everything a cell does not vary.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub postures: Vec<PostureId>,
    pub strategies: Vec<StrategyKind>,
    pub rates_pps: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn cell_count(&self) -> usize {
        self.postures.len() * self.strategies.len() * self.rates_pps.len() * self.seeds.len()
    }

    fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::with_capacity(self.cell_count());
        for &strategy in &self.strategies {
            for &posture in &self.postures {
                for &rate in &self.rates_pps {
                    for &seed in &self.seeds {
                        let mut s = self.base.clone();
                        s.strategy = strategy;
                        s.posture = posture;
                        s.rate_pps = rate;
                        s.seed = seed;
                        out.push(s);
                    }
                }
            }
        }
        out
    }
}

/// One executed cell.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub posture: PostureId,
    pub rate_pps: f64,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Run every cell. Validation happens up front, sequentially, so a broken
/// cell aborts with its coordinates before anything executes; the runs
/// themselves are independent and execute in parallel, merged back in
/// deterministic (strategy, posture, rate, seed) order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let scenarios = spec.scenarios();
    for s in &scenarios {
        s.prepare().map_err(|e| {
            Error::config(format!(
                "cell (strategy {}, posture {}, rate {}, seed {}): {e}",
                s.strategy, s.posture, s.rate_pps, s.seed
            ))
        })?;
    }
    let results: Vec<Result<SweepRow>> = scenarios
        .par_iter()
        .map(|s| {
            s.run().map(|report| SweepRow {
                strategy: s.strategy,
                posture: s.posture,
                rate_pps: s.rate_pps,
                seed: s.seed,
                report,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Render rows as the per-run CSV (schema from [`MetricsReport`]).
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(MetricsReport::csv_header());
    out.push('\n');
    for row in rows {
        out.push_str(&row.report.csv_row(
            row.strategy.name(),
            row.posture.id(),
            row.rate_pps,
            row.seed,
        ));
        out.push('\n');
    }
    out
}

/// Per-cell means over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub strategy: String,
    pub posture: u8,
    pub rate_pps: f64,
    pub seeds: u64,
    pub mean_reception_rate: f64,
    pub mean_total_order_rate: f64,
    pub mean_inversions: f64,
    pub mean_transmissions: f64,
    pub mean_delay_s: f64,
}

pub const AGGREGATE_CSV_HEADER: &str = "strategy,posture,rate_pps,seeds,mean_reception_rate,\
     mean_total_order_rate,mean_inversions,mean_transmissions,mean_delay_s";

impl AggregateRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.strategy,
            self.posture,
            self.rate_pps,
            self.seeds,
            self.mean_reception_rate,
            self.mean_total_order_rate,
            self.mean_inversions,
            self.mean_transmissions,
            self.mean_delay_s,
        )
    }
}

/// Group rows by (strategy, posture, rate) in first-seen order and average
/// over seeds. The aggregate is a pure function of the rows as written:
/// fields are taken at the CSV's six-decimal precision, so recomputing the
/// summary from a parsed results file reproduces it exactly.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let csv_precision = |x: f64| (x * 1e6).round() / 1e6;
    let flat: Vec<FlatRow> = rows
        .iter()
        .map(|r| FlatRow {
            strategy: r.strategy.name().to_string(),
            posture: r.posture.id(),
            rate_pps: r.rate_pps,
            reception_rate: csv_precision(r.report.reception_rate),
            total_order_rate: csv_precision(r.report.total_order_rate),
            inversions: r.report.inversions as f64,
            transmissions: r.report.transmissions as f64,
            mean_delay_s: csv_precision(r.report.mean_delay_s),
        })
        .collect();
    aggregate_flat(&flat)
}

/// One parsed per-run CSV row (the fields aggregation needs).
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRow {
    pub strategy: String,
    pub posture: u8,
    pub rate_pps: f64,
    pub reception_rate: f64,
    pub total_order_rate: f64,
    pub inversions: f64,
    pub transmissions: f64,
    pub mean_delay_s: f64,
}

pub fn aggregate_flat(rows: &[FlatRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for row in rows {
        let key_pos = out.iter().position(|a| {
            a.strategy == row.strategy && a.posture == row.posture && a.rate_pps == row.rate_pps
        });
        let i = match key_pos {
            Some(i) => i,
            None => {
                out.push(AggregateRow {
                    strategy: row.strategy.clone(),
                    posture: row.posture,
                    rate_pps: row.rate_pps,
                    seeds: 0,
                    mean_reception_rate: 0.0,
                    mean_total_order_rate: 0.0,
                    mean_inversions: 0.0,
                    mean_transmissions: 0.0,
                    mean_delay_s: 0.0,
                });
                counts.push(0);
                out.len() - 1
            }
        };
        let a = &mut out[i];
        a.mean_reception_rate += row.reception_rate;
        a.mean_total_order_rate += row.total_order_rate;
        a.mean_inversions += row.inversions;
        a.mean_transmissions += row.transmissions;
        a.mean_delay_s += row.mean_delay_s;
        counts[i] += 1;
    }
    for (a, &n) in out.iter_mut().zip(&counts) {
        a.seeds = n;
        let n = n as f64;
        a.mean_reception_rate /= n;
        a.mean_total_order_rate /= n;
        a.mean_inversions /= n;
        a.mean_transmissions /= n;
        a.mean_delay_s /= n;
    }
    out
}

pub fn aggregate_to_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for a in aggregates {
        out.push_str(&a.csv_row());
        out.push('\n');
    }
    out
}

/// Parse a per-run CSV back into the fields aggregation needs.
pub fn parse_rows_csv(text: &str) -> Result<Vec<FlatRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("empty results CSV"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize> {
        cols.iter()
            .position(|&c| c == name)
            .ok_or_else(|| Error::config(format!("results CSV lacks column {name:?}")))
    };
    let (c_strategy, c_posture, c_rate) = (col("strategy")?, col("posture")?, col("rate_pps")?);
    let (c_rr, c_tor) = (col("reception_rate")?, col("total_order_rate")?);
    let (c_inv, c_tx, c_delay) = (col("inversions")?, col("transmissions")?, col("mean_delay_s")?);
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let get = |c: usize| -> Result<&str> {
            f.get(c)
                .copied()
                .ok_or_else(|| Error::config(format!("results CSV row {}: too few fields", i + 2)))
        };
        let num = |c: usize| -> Result<f64> {
            get(c)?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::config(format!("results CSV row {}: {e}", i + 2)))
        };
        rows.push(FlatRow {
            strategy: get(c_strategy)?.trim().to_string(),
            posture: num(c_posture)? as u8,
            rate_pps: num(c_rate)?,
            reception_rate: num(c_rr)?,
            total_order_rate: num(c_tor)?,
            inversions: num(c_inv)?,
            transmissions: num(c_tx)?,
            mean_delay_s: num(c_delay)?,
        });
    }
    Ok(rows)
}
