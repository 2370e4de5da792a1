use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{default_budget, ProblemConfig};
use crate::bounds::{BallSpec, Method, SupremumOptions};
use crate::error::{Error, Result};
use crate::exec::Strategy;

fn default_steps() -> usize {
    10
}

/// Grid of `(R∥, R⊥)` values to check. Explicit value lists take precedence
/// over `max · i/steps` for `i = 1..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierConfig {
    #[serde(flatten)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub r_par_values: Option<Vec<f64>>,
    #[serde(default)]
    pub r_perp_values: Option<Vec<f64>>,
    #[serde(default)]
    pub r_par_max: Option<f64>,
    #[serde(default)]
    pub r_perp_max: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub force_generic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub r_par: f64,
    pub r_perp: f64,
    pub m_par: f64,
    pub m_perp: f64,
    pub l_par: f64,
    pub l_perp: f64,
    pub margin: f64,
    pub feasible: bool,
    pub method: Method,
    /// Largest feasible `R∥` in its `R⊥` row.
    pub on_frontier: bool,
}

fn axis(values: &Option<Vec<f64>>, max: Option<f64>, steps: usize, name: &str) -> Result<Vec<f64>> {
    let mut v = match (values, max) {
        (Some(v), _) => v.clone(),
        (None, Some(m)) => {
            if steps == 0 {
                return Err(Error::Input("steps must be positive".into()));
            }
            (1..=steps).map(|i| m * i as f64 / steps as f64).collect()
        }
        (None, None) => {
            return Err(Error::Input(format!("give `{name}_values` or `{name}_max`")));
        }
    };
    if v.is_empty() || v.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Input(format!("{name} values must be positive and finite")));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Checks the validity inequality on every grid ball, ordered by `R⊥`
/// then `R∥`, and marks the largest feasible `R∥` of each `R⊥` row.
pub fn run_frontier(cfg: &FrontierConfig, base_dir: &Path, strategy: Strategy) -> Result<Vec<FrontierPoint>> {
    let r_pars = axis(&cfg.r_par_values, cfg.r_par_max, cfg.steps, "r_par")?;
    let r_perps = axis(&cfg.r_perp_values, cfg.r_perp_max, cfg.steps, "r_perp")?;
    let problem = cfg.problem.resolve(base_dir)?;
    let opts = SupremumOptions {
        budget: cfg.budget,
        seed: cfg.seed,
        strategy,
        ..Default::default()
    };
    let mut out = Vec::with_capacity(r_pars.len() * r_perps.len());
    for &r_perp in &r_perps {
        let row_start = out.len();
        for &r_par in &r_pars {
            let c = problem.certificate(BallSpec::new(r_par, r_perp)?, &opts, cfg.force_generic)?;
            out.push(FrontierPoint {
                r_par,
                r_perp,
                m_par: c.m_par,
                m_perp: c.m_perp,
                l_par: c.l_par,
                l_perp: c.l_perp,
                margin: c.margin,
                feasible: c.feasible,
                method: c.method,
                on_frontier: false,
            });
        }
        if let Some(best) = out[row_start..].iter().rposition(|p| p.feasible) {
            out[row_start + best].on_frontier = true;
        }
    }
    Ok(out)
}

pub fn write_frontier_csv<W: Write>(points: &[FrontierPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
