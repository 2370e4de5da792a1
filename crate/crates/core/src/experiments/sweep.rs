//! Monte Carlo sweep of the closed-form consensus bound over random regular
//! graphs. Every graph gets its own seed, so any row can be regenerated in
//! isolation, and rows are emitted in `(n, k, index)` order whatever the
//! execution strategy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Strategy};
use crate::graph::{adjacency_spectrum, generate_random_regular, nod_bound_from_spectrum};

fn default_d() -> f64 {
    1.0
}
fn default_graphs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_graphs")]
    pub graphs_per_cell: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::Input(format!("d must be positive, got {}", self.d)));
        }
        if self.graphs_per_cell == 0 {
            return Err(Error::Input("graphs_per_cell must be positive".into()));
        }
        if self.n_values.is_empty() || self.k_values.is_empty() {
            return Err(Error::Input("n_values and k_values must be non-empty".into()));
        }
        Ok(())
    }
}

/// One random graph of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub k: usize,
    pub index: usize,
    pub d: f64,
    pub seed: u64,
    pub lambda2: f64,
    pub lambda_min: f64,
    pub lambda_prime: f64,
    pub r_par_bound: f64,
}

impl SweepRecord {
    /// Recomputes `d(k − λ₂)/(k·λ′)` from the row's own columns.
    pub fn recomputed_bound(&self) -> f64 {
        let k = self.k as f64;
        self.d * (k - self.lambda2) / (k * self.lambda_prime)
    }

    pub fn satisfies_invariant(&self) -> bool {
        (self.r_par_bound - self.recomputed_bound()).abs() <= 1e-12 * self.r_par_bound.abs().max(1.0)
            && (self.lambda_prime - self.lambda2.abs().max(self.lambda_min.abs())).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub count: usize,
    pub mean_r_par: f64,
    /// Sample standard deviation (zero for a single graph).
    pub std_r_par: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub n: usize,
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub cells: Vec<CellSummary>,
    pub skipped: Vec<SkippedCell>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of graph `index` in cell `(n, k)`: `seed_base + hash(n, k, index)`.
pub fn cell_seed(seed_base: u64, n: usize, k: usize, index: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(n as u64) ^ k as u64) ^ index as u64);
    seed_base.wrapping_add(h)
}

fn infeasibility(n: usize, k: usize) -> Option<String> {
    if k == 0 || k >= n {
        Some(format!("need 0 < k < n (n = {n}, k = {k})"))
    } else if (n * k) % 2 == 1 {
        Some(format!("n·k = {} is odd", n * k))
    } else {
        None
    }
}

fn sorted_unique(values: &[usize]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Generates `graphs_per_cell` random connected k-regular graphs for every
/// feasible `(n, k)` cell and evaluates the closed-form bound on each.
pub fn run_sweep(cfg: &SweepConfig, strategy: Strategy) -> Result<SweepResult> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for &n in &sorted_unique(&cfg.n_values) {
        for &k in &sorted_unique(&cfg.k_values) {
            match infeasibility(n, k) {
                Some(reason) => {
                    log::info!("skipping cell n = {n}, k = {k}: {reason}");
                    skipped.push(SkippedCell { n, k, reason });
                }
                None => jobs.extend((0..cfg.graphs_per_cell).map(|i| (n, k, i))),
            }
        }
    }

    let results = map_indexed(strategy, jobs.len(), |j| -> Result<SweepRecord> {
        let (n, k, index) = jobs[j];
        let seed = cell_seed(cfg.seed, n, k, index);
        let g = generate_random_regular(n, k, seed)?;
        let s = adjacency_spectrum(&g)?;
        Ok(SweepRecord {
            n,
            k,
            index,
            d: cfg.d,
            seed,
            lambda2: s.lambda2,
            lambda_min: s.lambda_min,
            lambda_prime: s.lambda_prime,
            r_par_bound: nod_bound_from_spectrum(&s, cfg.d),
        })
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let cells = summarize(&records);
    Ok(SweepResult {
        records,
        cells,
        skipped,
    })
}

/// Per-cell mean and sample standard deviation of `r_par_bound`, in record
/// order. The mean is the plain sum divided by the count; the variance uses
/// data shifted by the cell's first value, so identical rows give exactly
/// zero.
fn summarize(records: &[SweepRecord]) -> Vec<CellSummary> {
    records
        .chunk_by(|a, b| (a.n, a.k) == (b.n, b.k))
        .map(|cell| {
            let count = cell.len();
            let mean = cell.iter().map(|r| r.r_par_bound).sum::<f64>() / count as f64;
            let shift = cell[0].r_par_bound;
            let (s1, s2) = cell.iter().fold((0.0, 0.0), |(s1, s2), r| {
                let y = r.r_par_bound - shift;
                (s1 + y, s2 + y * y)
            });
            let std = if count > 1 {
                ((s2 - s1 * s1 / count as f64) / (count - 1) as f64).max(0.0).sqrt()
            } else {
                0.0
            };
            CellSummary {
                n: cell[0].n,
                k: cell[0].k,
                count,
                mean_r_par: mean,
                std_r_par: std,
            }
        })
        .collect()
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    write_rows(records, out)
}

pub fn write_cells_csv<W: Write>(cells: &[CellSummary], out: W) -> Result<()> {
    write_rows(cells, out)
}
