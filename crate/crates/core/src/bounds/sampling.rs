//! Lower-bound estimates of the suprema `L∥`, `L⊥` over the validity balls.
//!
//! Points come from a randomly shifted Halton sequence mapped into each
//! ball (half interior, half on the boundary sphere) plus the ±1 poles of
//! every axis. The best candidates are then polished by coordinate ascent.
//! Sample points are stored in unit-ball coordinates, so every radius sees
//! the same structure for a given seed.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::xi::XiContext;
use crate::error::{Error, Result};
use crate::exec::{argmax, map_indexed, map_slice, Strategy};
use crate::model::{NetworkModel, SingularPoint};

pub const DEFAULT_BUDGET: usize = 4096;
pub const MIN_BUDGET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupremumOptions {
    pub budget: usize,
    pub seed: u64,
    /// Number of best samples handed to coordinate ascent.
    pub refine_candidates: usize,
    /// Coordinate-ascent sweeps per candidate; the step halves after a sweep
    /// without improvement.
    pub refine_steps: usize,
    pub strategy: Strategy,
}

impl Default for SupremumOptions {
    fn default() -> Self {
        SupremumOptions {
            budget: DEFAULT_BUDGET,
            seed: 0,
            refine_candidates: 5,
            refine_steps: 50,
            strategy: Strategy::default(),
        }
    }
}

impl SupremumOptions {
    pub fn with_seed(seed: u64) -> Self {
        SupremumOptions {
            seed,
            ..Default::default()
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.budget < MIN_BUDGET {
            return Err(Error::Input(format!(
                "sample budget must be at least {MIN_BUDGET}, got {}",
                self.budget
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupremumEstimate {
    pub value: f64,
    /// Maximizing point in unit-ball coordinates, `(α, p)` block first.
    pub argmax: Vec<f64>,
    pub samples_used: usize,
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Randomly shifted Halton point `index` in `dim` dimensions.
struct ShiftedHalton {
    bases: Vec<u64>,
    shift: Vec<f64>,
}

impl ShiftedHalton {
    fn new(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        ShiftedHalton {
            bases: first_primes(dim),
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    fn coord(&self, index: u64, d: usize) -> f64 {
        let u = (radical_inverse(index, self.bases[d]) + self.shift[d]).fract();
        u.clamp(1e-12, 1.0 - 1e-12)
    }
}

/// Maps cube coordinates to a point of the unit ball in `dim` dimensions:
/// `dim` coordinates give the direction through the normal quantile, an
/// optional extra coordinate gives the radius.
pub(crate) fn to_ball(cube: &[f64], dim: usize, radius: Option<f64>) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let normal = Normal::standard();
    let mut dir: Vec<f64> = cube[..dim].iter().map(|&u| normal.inverse_cdf(u)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        dir[0] = 1.0;
    } else {
        dir.iter_mut().for_each(|v| *v /= norm);
    }
    let r = match radius {
        Some(u) => u.powf(1.0 / dim as f64),
        None => 1.0,
    };
    dir.iter_mut().for_each(|v| *v *= r);
    dir
}

/// Unit-ball sample of the product of a `dim_a`-ball and a `dim_b`-ball.
pub(crate) fn product_ball_sample(dim_a: usize, dim_b: usize, budget: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior_dims = dim_a + dim_b + 2;
    let interior = ShiftedHalton::new(interior_dims, &mut rng);
    let boundary = ShiftedHalton::new(dim_a + dim_b, &mut rng);

    let dim = dim_a + dim_b;
    let mut points = Vec::with_capacity(budget + 2 * dim);
    // poles of each block with the other block at its center
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[axis] = sign;
            points.push(p);
        }
    }
    let n_boundary = budget / 2;
    let n_interior = budget - n_boundary;
    for i in 1..=n_interior as u64 {
        let cube: Vec<f64> = (0..interior_dims).map(|d| interior.coord(i, d)).collect();
        let mut p = to_ball(&cube[..dim_a], dim_a, Some(cube[dim]));
        p.extend(to_ball(&cube[dim_a..dim], dim_b, Some(cube[dim + 1])));
        points.push(p);
    }
    for i in 1..=n_boundary as u64 {
        let cube: Vec<f64> = (0..dim).map(|d| boundary.coord(i, d)).collect();
        let mut p = to_ball(&cube[..dim_a], dim_a, None);
        p.extend(to_ball(&cube[dim_a..], dim_b, None));
        points.push(p);
    }
    points
}

fn project_block(point: &mut [f64]) {
    let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        point.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Coordinate ascent inside the product of unit balls.
fn refine<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], start_value: f64, dim_a: usize, sweeps: usize) -> (Vec<f64>, f64) {
    let mut best = start.to_vec();
    let mut best_value = start_value;
    let mut step = 0.25;
    for _ in 0..sweeps {
        let mut improved = false;
        for c in 0..best.len() {
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[c] += sign * step;
                let (a, b) = trial.split_at_mut(dim_a);
                project_block(a);
                project_block(b);
                let v = f(&trial);
                if v > best_value {
                    best = trial;
                    best_value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-9 {
                break;
            }
        }
    }
    (best, best_value)
}

fn estimate<F>(f: F, dim_a: usize, dim_b: usize, opts: &SupremumOptions) -> Result<SupremumEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    opts.validate()?;
    let points = product_ball_sample(dim_a, dim_b, opts.budget, opts.seed);
    let values = map_slice(opts.strategy, &points, |p| f(p));

    let mut order: Vec<usize> = (0..points.len()).filter(|&i| !values[i].is_nan()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(opts.refine_candidates);

    let refined = map_indexed(opts.strategy, order.len(), |k| {
        let i = order[k];
        refine(&f, &points[i], values[i], dim_a, opts.refine_steps)
    });
    let refined_values: Vec<f64> = refined.iter().map(|r| r.1).collect();
    let (value, argmax_point) = match argmax(&refined_values) {
        Some((k, v)) => (v, refined[k].0.clone()),
        None => {
            return Err(Error::Input("objective is NaN on every sample".into()));
        }
    };
    Ok(SupremumEstimate {
        value,
        argmax: argmax_point,
        samples_used: points.len(),
    })
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Input(format!("{name} must be positive, got {r}")));
    }
    Ok(())
}

/// Sampled lower bound on `L∥ = sup ‖ξ∥(α, p)‖` over the ball of radius
/// `r_par` around `(α₀, p⋆)`.
pub fn estimate_l_parallel(
    model: &NetworkModel,
    sp: &SingularPoint,
    r_par: f64,
    opts: &SupremumOptions,
) -> Result<SupremumEstimate> {
    check_radius("R_par", r_par)?;
    let ctx = XiContext::new(model, sp);
    let q = sp.q();
    let f = |u: &[f64]| {
        let alpha = &sp.alpha0 + DVector::from_column_slice(&u[..q]) * r_par;
        ctx.parallel(&alpha, sp.p_star + r_par * u[q])
    };
    estimate(f, q + 1, 0, opts)
}

/// Sampled lower bound on `L⊥ = sup ‖ξ⊥(α, β, p)‖` over the product of the
/// two balls.
pub fn estimate_l_perp(
    model: &NetworkModel,
    sp: &SingularPoint,
    r_par: f64,
    r_perp: f64,
    opts: &SupremumOptions,
) -> Result<SupremumEstimate> {
    check_radius("R_par", r_par)?;
    check_radius("R_perp", r_perp)?;
    let ctx = XiContext::new(model, sp);
    let q = sp.q();
    let f = |u: &[f64]| {
        let alpha = &sp.alpha0 + DVector::from_column_slice(&u[..q]) * r_par;
        let beta = &sp.beta0 + DVector::from_column_slice(&u[q + 1..]) * r_perp;
        ctx.perp(&alpha, &beta, sp.p_star + r_par * u[q])
    };
    estimate(f, q + 1, sp.n() - q, opts)
}
