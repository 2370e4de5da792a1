//! Equilibria, singular-parameter location and the eigenvalue checks on a
//! candidate singular point.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{decompose_singular, norm2, singular_values_ascending};
use crate::model::{NetworkModel, EQUILIBRIUM_TOL};

/// Maximum step halvings in the backtracking line search.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Infinity norm of the vector field at `x`.
    pub residual: f64,
    /// Number of Newton steps that fell back to the pseudo-inverse.
    pub pinv_steps: usize,
}

/// Solves `J δ = rhs`, falling back to a truncated-SVD least-squares step when
/// `J` is (numerically) singular. Returns the step and whether the fallback
/// was used.
fn newton_step(j: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, bool) {
    if let Some(step) = j.clone().lu().solve(rhs) {
        if step.iter().all(|v| v.is_finite()) && step.norm() <= 1e12 * (1.0 + rhs.norm()) {
            return (step, false);
        }
    }
    let svd = j.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let step = svd.solve(rhs, eps).unwrap_or_else(|_| DVector::zeros(rhs.len()));
    (step, true)
}

/// Damped Newton iteration for `Φ(x, p) = 0` with backtracking on `‖Φ‖²`.
pub fn solve_equilibrium(
    model: &NetworkModel,
    p: f64,
    x_init: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Equilibrium> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {tol}")));
    }
    let mut x = x_init.clone();
    let mut f = model.evaluate(&x, p)?;
    let mut pinv_steps = 0;
    let mut trace = Vec::new();
    for it in 0..=max_iter {
        let residual = f.amax();
        trace.push(residual);
        if residual <= tol {
            return Ok(Equilibrium {
                x,
                iterations: it,
                residual,
                pinv_steps,
            });
        }
        if it == max_iter || !residual.is_finite() {
            break;
        }
        let j = model.jacobian_x_unchecked(&x, p);
        let (step, used_pinv) = newton_step(&j, &(-&f));
        if used_pinv {
            pinv_steps += 1;
            log::debug!("pseudo-inverse Newton step at iteration {it}");
        }
        let merit = f.norm_squared();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &step * t;
            let ft = model.evaluate_unchecked(&trial, p);
            if ft.norm_squared() < merit {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((nx, nf)) => {
                x = nx;
                f = nf;
            }
            None => break,
        }
    }
    Err(Error::Convergence {
        iterations: trace.len().saturating_sub(1),
        residual: f.amax(),
        best: x.iter().copied().collect(),
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityClass {
    pub q: usize,
    pub eigenvalues: Vec<Complex<f64>>,
    /// Zero eigenvalue has algebraic multiplicity `q` and every other
    /// eigenvalue is off the imaginary axis.
    pub assumption_ok: bool,
}

/// Checks the eigenvalue structure at a candidate singular equilibrium.
pub fn classify_singularity(
    model: &NetworkModel,
    x_star: &DVector<f64>,
    p_star: f64,
    rank_tol: f64,
) -> Result<SingularityClass> {
    let residual = model.evaluate(x_star, p_star)?.amax();
    if residual > EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium {
            residual,
            tol: EQUILIBRIUM_TOL,
        });
    }
    let j = model.jacobian_x_unchecked(x_star, p_star);
    let dec = decompose_singular(&j, rank_tol)?;
    let mut eigenvalues: Vec<Complex<f64>> = j.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    let zero_count = eigenvalues.iter().filter(|l| l.norm() <= rank_tol).count();
    let hyperbolic = eigenvalues
        .iter()
        .filter(|l| l.norm() > rank_tol)
        .all(|l| l.re.abs() > rank_tol);
    if !hyperbolic {
        log::warn!("nonzero eigenvalue on the imaginary axis at p = {p_star}");
    }
    Ok(SingularityClass {
        q: dec.q,
        eigenvalues,
        assumption_ok: zero_count == dec.q && hyperbolic,
    })
}

/// `sign(det J)·σ_min(J)`: continuous through simple singularities, where
/// the unsigned σ_min only touches zero.
pub fn signed_sigma_min(j: &DMatrix<f64>) -> f64 {
    let sigma_min = singular_values_ascending(j)[0];
    let det = j.clone().lu().determinant();
    if det < 0.0 {
        -sigma_min
    } else {
        sigma_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSearch {
    pub x_star: DVector<f64>,
    pub p_star: f64,
    /// Parameter samples where the re-solved branch moved by more than the
    /// jump threshold.
    pub branch_jumps: Vec<f64>,
}

/// Absolute bisection tolerance on the parameter.
pub const PARAMETER_TOL: f64 = 1e-10;

const BRANCH_SOLVE_TOL: f64 = 1e-12;
const BRANCH_MAX_ITER: usize = 100;

/// Locates a parameter value where the Jacobian along the equilibrium
/// branch through `x_seed` becomes singular.
///
/// The branch is re-solved by Newton at `steps + 1` equally spaced samples
/// of `[p_min, p_max]`; the first sign change of the signed smallest
/// singular value is then bisected down to [`PARAMETER_TOL`].
pub fn find_singular_parameter(
    model: &NetworkModel,
    x_seed: &DVector<f64>,
    p_min: f64,
    p_max: f64,
    steps: usize,
) -> Result<SingularSearch> {
    if !(p_min < p_max) || steps == 0 {
        return Err(Error::Input(format!(
            "need p_min < p_max and steps > 0, got [{p_min}, {p_max}] with {steps} steps"
        )));
    }
    let solve = |p: f64, from: &DVector<f64>| {
        solve_equilibrium(model, p, from, BRANCH_SOLVE_TOL, BRANCH_MAX_ITER).map(|e| e.x)
    };
    let signed = |x: &DVector<f64>, p: f64| signed_sigma_min(&model.jacobian_x_unchecked(x, p));

    let mut branch_jumps = Vec::new();
    let mut prev_x = solve(p_min, x_seed)?;
    let mut prev_p = p_min;
    let mut prev_s = signed(&prev_x, prev_p);
    let h = (p_max - p_min) / steps as f64;
    let mut bracket = None;
    for i in 1..=steps {
        let p = if i == steps { p_max } else { p_min + h * i as f64 };
        let x = solve(p, &prev_x)?;
        let jump = (&x - &prev_x).norm();
        if jump > 0.5 * prev_x.norm().max(1.0) {
            log::warn!("equilibrium branch jumped by {jump:.3e} between p = {prev_p} and p = {p}");
            branch_jumps.push(p);
        }
        let s = signed(&x, p);
        if prev_s == 0.0 {
            return Ok(SingularSearch {
                x_star: prev_x,
                p_star: prev_p,
                branch_jumps,
            });
        }
        if s == 0.0 || s.signum() != prev_s.signum() {
            bracket = Some((prev_p, prev_x.clone(), prev_s, p));
            break;
        }
        prev_x = x;
        prev_p = p;
        prev_s = s;
    }
    let (mut lo, mut x_lo, s_lo, mut hi) = bracket.ok_or_else(|| {
        Error::Search(format!(
            "smallest singular value does not change sign on [{p_min}, {p_max}]"
        ))
    })?;
    while hi - lo > PARAMETER_TOL {
        let mid = 0.5 * (lo + hi);
        let x_mid = solve(mid, &x_lo)?;
        let s_mid = signed(&x_mid, mid);
        if s_mid == 0.0 {
            return Ok(SingularSearch {
                x_star: x_mid,
                p_star: mid,
                branch_jumps,
            });
        }
        if s_mid.signum() == s_lo.signum() {
            lo = mid;
            x_lo = x_mid;
        } else {
            hi = mid;
        }
    }
    let p_star = 0.5 * (lo + hi);
    let x_star = solve(p_star, &x_lo)?;
    Ok(SingularSearch {
        x_star,
        p_star,
        branch_jumps,
    })
}

/// Newton solve of the fold system `Φ(x, p) = 0, sign(det J)·σ_min(J) = 0`
/// from a nearby guess. Needed where the branch folds back, which a
/// parameter sweep cannot cross.
pub fn locate_fold(
    model: &NetworkModel,
    x_guess: &DVector<f64>,
    p_guess: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SingularSearch> {
    let n = model.dim();
    crate::error::check_dim("state length", n, x_guess.len())?;
    let residual = |z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        let p = z[n];
        let mut r = DVector::zeros(n + 1);
        r.rows_mut(0, n).copy_from(&model.evaluate_unchecked(&x, p));
        let j = model.jacobian_x_unchecked(&x, p);
        r[n] = signed_sigma_min(&j) / norm2(&j).max(1.0);
        r
    };
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x_guess);
    z[n] = p_guess;
    let mut r = residual(&z);
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        trace.push(r.amax());
        if r.amax() <= tol {
            let x_star = z.rows(0, n).into_owned();
            return Ok(SingularSearch {
                x_star,
                p_star: z[n],
                branch_jumps: Vec::new(),
            });
        }
        let x = z.rows(0, n).into_owned();
        let p = z[n];
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n))
            .copy_from(&model.jacobian_x_unchecked(&x, p));
        jac.view_mut((0, n), (n, 1))
            .copy_from(&model.jacobian_p_unchecked(&x, p));
        let h = 1e-7;
        for k in 0..=n {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            jac[(n, k)] = (residual(&zp)[n] - residual(&zm)[n]) / (2.0 * h);
        }
        let (step, _) = newton_step(&jac, &(-&r));
        let merit = r.norm_squared();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &z + &step * t;
            let rt = residual(&trial);
            if rt.norm_squared() < merit {
                z = trial;
                r = rt;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(Error::Convergence {
        iterations: trace.len(),
        residual: r.amax(),
        best: z.iter().copied().collect(),
        trace,
    })
}
