//! Numerical check of a certified ball: the complementary coordinates `β` are
//! solved for directly by Newton's method and tested for existence inside
//! `B⊥` and agreement across random restarts. Uniqueness is evidenced by
//! multi-start agreement, not proven.
//!
//! Also contains the scalar consensus branches of the regular-graph models
//! and a check of full equilibria against them.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::sampling::to_ball;
use crate::bounds::BallSpec;
use crate::equilibrium::solve_equilibrium;
use crate::error::{check_dim, Error, Result};
use crate::exec::{map_indexed, Strategy};
use crate::model::{gamma_unchecked, ModelKind, NetworkModel, SingularPoint};

/// Solutions from different starts closer than this count as the same.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Complementary {
    pub beta: DVector<f64>,
    pub iterations: usize,
    /// `‖WᵀΦ(Γ(α, β), p)‖∞`
    pub residual: f64,
}

/// Newton iteration on `g(β) = WᵀΦ(Γ(α, β), p)` with Jacobian
/// `Wᵀ D_xΦ V̄`, damped by backtracking on `‖g‖²`.
pub fn solve_complementary(
    model: &NetworkModel,
    sp: &SingularPoint,
    alpha: &DVector<f64>,
    p: f64,
    beta_init: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Complementary> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {tol}")));
    }
    check_dim("alpha length", sp.q(), alpha.len())?;
    check_dim("beta length", sp.n() - sp.q(), beta_init.len())?;
    let dec = &sp.decomposition;
    let wt = dec.w.transpose();
    let residual_at = |beta: &DVector<f64>| -> DVector<f64> {
        &wt * model.evaluate_unchecked(&gamma_unchecked(dec, alpha, beta), p)
    };

    let mut beta = beta_init.clone();
    let mut g = residual_at(&beta);
    let mut trace = Vec::new();
    for it in 0..=max_iter {
        let residual = if g.is_empty() { 0.0 } else { g.amax() };
        trace.push(residual);
        if residual <= tol {
            return Ok(Complementary {
                beta,
                iterations: it,
                residual,
            });
        }
        if it == max_iter || !residual.is_finite() {
            break;
        }
        let x = gamma_unchecked(dec, alpha, &beta);
        let jg: DMatrix<f64> = &wt * model.jacobian_x_unchecked(&x, p) * &dec.vbar;
        let step = jg
            .clone()
            .lu()
            .solve(&(-&g))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| {
                Error::SingularJacobian(format!(
                    "complementary Jacobian singular at iteration {it} (p = {p})"
                ))
            })?;
        let merit = g.norm_squared();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=crate::equilibrium::MAX_HALVINGS {
            let trial = &beta + &step * t;
            let gt = residual_at(&trial);
            if gt.norm_squared() < merit {
                accepted = Some((trial, gt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((b, gb)) => {
                beta = b;
                g = gb;
            }
            None => break,
        }
    }
    Err(Error::Convergence {
        iterations: trace.len().saturating_sub(1),
        residual: if g.is_empty() { 0.0 } else { g.amax() },
        best: beta.iter().copied().collect(),
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Points per polar axis: `grid` radii (including the centre) times
    /// `grid` angles.
    pub grid: usize,
    /// Extra random initialisations inside `B⊥` per grid point.
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid: 11,
            starts: 5,
            seed: 0,
            tol: 1e-12,
            max_iter: 50,
            strategy: Strategy::default(),
        }
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSample {
    pub index: usize,
    /// Offset from `(α₀, p⋆)` as a fraction of `R∥`.
    pub radius_fraction: f64,
    pub angle: f64,
    pub p: f64,
    pub converged: bool,
    /// `‖β − β₀‖`, NaN when the solve failed.
    pub beta_dev: f64,
    pub in_ball: bool,
    /// Restarts that converged inside `B⊥` to a different solution.
    pub violations: usize,
    pub restart_failures: usize,
}

impl GridSample {
    pub fn success(&self) -> bool {
        self.converged && self.in_ball && self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub ball: BallSpec,
    pub grid_points: usize,
    pub starts: usize,
    pub seed: u64,
    pub successes: usize,
    pub success_fraction: f64,
    /// Largest `‖β − β₀‖` over converged grid points.
    pub max_beta_dev: f64,
    /// Grid points where a restart converged to a second solution in `B⊥`.
    pub uniqueness_violations: usize,
    /// Restarts that did not converge (not counted against uniqueness).
    pub restart_failures: usize,
    #[serde(skip)]
    pub samples: Vec<GridSample>,
}

impl VerificationReport {
    /// Writes the per-point outcomes as CSV with a header row.
    pub fn write_samples_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Polar grid over the disc spanned by the first kernel coordinate and the
/// parameter: radii `R∥·i/(grid−1)` for `i = 0..grid` and `grid` equally
/// spaced angles, with the centre counted once. Remaining kernel
/// coordinates stay at `α₀`.
fn polar_grid(grid: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..grid {
        let r = i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            pts.push((r, 2.0 * std::f64::consts::PI * j as f64 / grid as f64));
        }
    }
    pts
}

/// Solves for `β` on a polar grid of `B∥` and checks existence in `B⊥` and
/// agreement of `starts` random restarts. Failures are reported, not raised.
pub fn verify_implicit_map(
    model: &NetworkModel,
    sp: &SingularPoint,
    ball: BallSpec,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let ball = BallSpec::new(ball.r_par, ball.r_perp)?;
    if opts.grid == 0 {
        return Err(Error::Input("grid must have at least one point".into()));
    }
    let q = sp.q();
    let m = sp.n() - q;
    let grid = polar_grid(opts.grid);

    let samples = map_indexed(opts.strategy, grid.len(), |index| {
        let (rf, angle) = grid[index];
        let mut alpha = sp.alpha0.clone();
        alpha[0] += ball.r_par * rf * angle.cos();
        let p = sp.p_star + ball.r_par * rf * angle.sin();
        let main = solve_complementary(model, sp, &alpha, p, &sp.beta0, opts.tol, opts.max_iter);
        let mut sample = GridSample {
            index,
            radius_fraction: rf,
            angle,
            p,
            converged: main.is_ok(),
            beta_dev: f64::NAN,
            in_ball: false,
            violations: 0,
            restart_failures: 0,
        };
        let Ok(main) = main else {
            return sample;
        };
        sample.beta_dev = (&main.beta - &sp.beta0).norm();
        sample.in_ball = sample.beta_dev <= ball.r_perp;

        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(opts.seed, index));
        for _ in 0..opts.starts {
            let cube: Vec<f64> = (0..=m).map(|_| rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12)).collect();
            let offset = DVector::from_vec(to_ball(&cube, m, Some(cube[m])));
            let init = &sp.beta0 + offset * ball.r_perp;
            match solve_complementary(model, sp, &alpha, p, &init, opts.tol, opts.max_iter) {
                Ok(other) => {
                    let inside = (&other.beta - &sp.beta0).norm() <= ball.r_perp;
                    if inside && (&other.beta - &main.beta).norm() > AGREEMENT_TOL {
                        sample.violations += 1;
                    }
                }
                Err(_) => sample.restart_failures += 1,
            }
        }
        sample
    });

    let successes = samples.iter().filter(|s| s.success()).count();
    let max_beta_dev = samples
        .iter()
        .filter(|s| s.converged)
        .map(|s| s.beta_dev)
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        ball,
        grid_points: samples.len(),
        starts: opts.starts,
        seed: opts.seed,
        successes,
        success_fraction: successes as f64 / samples.len() as f64,
        max_beta_dev,
        uniqueness_violations: samples.iter().filter(|s| s.violations > 0).count(),
        restart_failures: samples.iter().map(|s| s.restart_failures).sum(),
        samples,
    })
}

/// Equilibria `a·1ₙ` of a consensus model at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub u: f64,
    pub a_minus: Option<f64>,
    pub a_zero: f64,
    pub a_plus: Option<f64>,
}

/// `g(a) = f(a)/a` for the consensus equation `f(a) = 0`, where
/// `f(a) = −d·a + u·k·tanh(a)` (Hopfield) or `−d·a + tanh(u·k·a)`
/// (firing rate). Positive near zero above criticality.
fn reduced_consensus(kind: ModelKind, k: f64, d: f64, u: f64, a: f64) -> f64 {
    match kind {
        ModelKind::Hopfield => -d + u * k * a.tanh() / a,
        ModelKind::FiringRate => -d + (u * k * a).tanh() / a,
    }
}

/// Solves the consensus equation for each `u` by bisection. The nonzero
/// pair exists only past the pitchfork `u > d/k`.
pub fn consensus_branch(kind: ModelKind, k: f64, d: f64, u_values: &[f64]) -> Result<Vec<BranchPoint>> {
    if !(k > 0.0 && d > 0.0) {
        return Err(Error::Input(format!("need k, d > 0, got k = {k}, d = {d}")));
    }
    Ok(u_values
        .iter()
        .map(|&u| {
            let a_plus = (u * k > d).then(|| {
                // f(a) < 0 beyond these bounds since |tanh| < 1
                let mut hi = match kind {
                    ModelKind::Hopfield => u * k / d + 1.0,
                    ModelKind::FiringRate => 1.0 / d + 1.0,
                };
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if reduced_consensus(kind, k, d, u, mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            });
            BranchPoint {
                u,
                a_minus: a_plus.map(|a| -a),
                a_zero: 0.0,
                a_plus,
            }
        })
        .collect())
}

/// Relative size of the perturbation applied before re-solving.
pub const BRANCH_PERTURBATION: f64 = 1e-3;
const BRANCH_SEED: u64 = 0x00c0_ffee;

/// Solves the full equilibrium problem from a perturbed `a·1ₙ` for every
/// branch root and returns the largest distance to `a·1ₙ`. Fails with an
/// assumption error when the deviation exceeds `tol`.
///
/// The model must be an unbiased consensus model (`C = d·I`, `b = 0`,
/// regular `A`); `sp` only supplies the dimension check.
pub fn compare_full_vs_branch(
    model: &NetworkModel,
    sp: &SingularPoint,
    u_values: &[f64],
    tol: f64,
) -> Result<f64> {
    let n = model.dim();
    check_dim("singular point dimension", n, sp.n())?;
    let d = model.decay()[0];
    if model.decay().iter().any(|&c| c != d) || model.bias().iter().any(|&b| b != 0.0) {
        return Err(Error::Input("consensus model needs C = d·I and b = 0".into()));
    }
    let k = model.adjacency().row(0).sum();
    if (0..n).any(|i| model.adjacency().row(i).sum() != k) {
        return Err(Error::Input("consensus model needs a regular adjacency".into()));
    }
    let branch = consensus_branch(model.kind(), k, d, u_values)?;
    let mut rng = ChaCha8Rng::seed_from_u64(BRANCH_SEED);
    let mut worst: f64 = 0.0;
    for bp in branch {
        for a in [Some(bp.a_zero), bp.a_plus, bp.a_minus].into_iter().flatten() {
            let target = DVector::from_element(n, a);
            let scale = BRANCH_PERTURBATION * target.norm().max(1.0);
            let noise = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let init = &target + noise * (scale / (n as f64).sqrt());
            let eq = solve_equilibrium(model, bp.u, &init, 1e-13, 100)?;
            let dev = (&eq.x - &target).amax();
            if dev > tol {
                return Err(Error::Assumption(format!(
                    "full equilibrium at u = {} is {dev:e} from the consensus root {a}",
                    bp.u
                )));
            }
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}
