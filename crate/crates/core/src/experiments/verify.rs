use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{default_budget, default_r_perp, default_tol, Problem, ProblemConfig};
use crate::bounds::{maximize_r_parallel, BallSpec, SupremumOptions};
use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::graph::nod_bound;
use crate::oracle::{verify_implicit_map, VerificationReport, VerifyOptions};

fn default_grid() -> usize {
    11
}
fn default_starts() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(flatten)]
    pub problem: ProblemConfig,
    /// Fraction of the certified radii to verify; values above one explore
    /// beyond the certificate.
    pub ball_fraction: f64,
    #[serde(default = "default_r_perp")]
    pub r_perp: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub force_generic: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    /// Certified radii before scaling.
    pub certified: BallSpec,
    pub ball_fraction: f64,
    pub report: VerificationReport,
}

/// Certifies radii (closed form or maximized), scales them by
/// `ball_fraction`, and runs the implicit-map oracle on the scaled ball.
pub fn run_verify(cfg: &VerifyConfig, base_dir: &Path, strategy: Strategy) -> Result<VerifyOutcome> {
    if !(cfg.ball_fraction > 0.0) || !cfg.ball_fraction.is_finite() {
        return Err(Error::Input(format!(
            "ball_fraction must be positive, got {}",
            cfg.ball_fraction
        )));
    }
    let problem = cfg.problem.resolve(base_dir)?;
    let (model, sp) = problem.model_and_point()?;
    let r_par = match &problem {
        Problem::Consensus { graph, d, .. } if !cfg.force_generic => nod_bound(graph, *d)?,
        _ => {
            let opts = SupremumOptions {
                budget: cfg.budget,
                seed: cfg.seed,
                strategy,
                ..Default::default()
            };
            maximize_r_parallel(&model, &sp, cfg.r_perp, &opts, cfg.tol)?.r_par
        }
    };
    let certified = BallSpec::new(r_par, cfg.r_perp)?;
    if cfg.ball_fraction > 1.0 {
        log::info!("ball_fraction {} lies outside the certificate", cfg.ball_fraction);
    }
    let opts = VerifyOptions {
        grid: cfg.grid,
        starts: cfg.starts,
        seed: cfg.seed,
        strategy,
        ..Default::default()
    };
    let report = verify_implicit_map(&model, &sp, certified.scaled(cfg.ball_fraction)?, &opts)?;
    Ok(VerifyOutcome {
        certified,
        ball_fraction: cfg.ball_fraction,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(fraction: f64) -> VerifyConfig {
        serde_json::from_str(&format!(r#"{{"complete": 4, "d": 1.0, "ball_fraction": {fraction}, "grid": 5, "starts": 2}}"#)).unwrap()
    }

    #[test]
    fn half_ball_verifies() {
        let out = run_verify(&cfg(0.5), Path::new("."), Strategy::Parallel).unwrap();
        assert!((out.certified.r_par - 4.0 / 3.0).abs() < 1e-12);
        assert!((out.report.ball.r_par - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(out.report.success_fraction, 1.0);
    }

    #[test]
    fn zero_fraction_rejected_and_large_fraction_runs() {
        assert!(run_verify(&cfg(0.0), Path::new("."), Strategy::Parallel).unwrap_err().is_input());
        let out = run_verify(&cfg(3.0), Path::new("."), Strategy::Parallel).unwrap();
        assert!(out.report.grid_points > 0);
    }
}
