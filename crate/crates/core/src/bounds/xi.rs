//! The bound ingredients `M∥`, `M⊥` and the Jacobian-variation norms `‖ξ∥‖`,
//! `‖ξ⊥‖`, each by the generic definition and by the model-specific closed
//! forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::norm2;
use crate::model::{gamma_unchecked, ModelKind, NetworkModel, SingularPoint};

/// Reports when `‖WWᵀ D_pΦ‖` and `‖(I − VVᵀ) D_pΦ‖` disagree by more than
/// this, which happens for non-normal Jacobians.
pub const PROJECTOR_DISAGREEMENT_TOL: f64 = 1e-9;

/// `M∥ = ‖WWᵀ D_pΦ(x⋆, p⋆)‖`, the parameter derivative projected onto the
/// range of `J⋆`.
pub fn m_parallel(model: &NetworkModel, sp: &SingularPoint) -> f64 {
    let dec = &sp.decomposition;
    let dp = model.jacobian_p_unchecked(&sp.x_star, sp.p_star);
    let range_part = dec.w.tr_mul(&dp).norm();
    let cokernel_part = (&dp - &dec.v * dec.v.tr_mul(&dp)).norm();
    if (range_part - cokernel_part).abs() > PROJECTOR_DISAGREEMENT_TOL {
        log::warn!(
            "range projector gives M_par = {range_part:e}, kernel-complement projector gives {cokernel_part:e}"
        );
    }
    range_part
}

/// `M∥` from the equilibrium identity instead of `D_pΦ`: for Hopfield
/// `‖P(Cx⋆ − b)‖ / p⋆`, for firing-rate `‖P S'(p⋆Ax⋆ + b) A x⋆‖`.
pub fn m_parallel_closed_form(model: &NetworkModel, sp: &SingularPoint) -> f64 {
    let w = &sp.decomposition.w;
    let x = &sp.x_star;
    let y = match model.kind() {
        ModelKind::Hopfield => (model.decay().component_mul(x) - model.bias()) / sp.p_star,
        ModelKind::FiringRate => {
            let z = model.adjacency() * x * sp.p_star + model.bias();
            model
                .activation()
                .apply_derivative(&z)
                .component_mul(&(model.adjacency() * x))
        }
    };
    // ‖WWᵀy‖ = ‖Wᵀy‖
    w.tr_mul(&y).norm()
}

/// `M⊥ = 1/σ_min(J⋆)` over the nonzero singular values.
pub fn m_perp(sp: &SingularPoint) -> Result<f64> {
    sp.decomposition
        .sigma_min()
        .map(|s| 1.0 / s)
        .ok_or(Error::FullKernel(sp.n()))
}

/// Precomputed pieces shared by repeated ξ evaluations at one singular point.
pub(crate) struct XiContext<'a> {
    pub model: &'a NetworkModel,
    pub sp: &'a SingularPoint,
    wt: DMatrix<f64>,
}

impl<'a> XiContext<'a> {
    pub fn new(model: &'a NetworkModel, sp: &'a SingularPoint) -> Self {
        XiContext {
            model,
            sp,
            wt: sp.decomposition.w.transpose(),
        }
    }

    /// Generic `‖Wᵀ[D_xΦ(Γ(α,β₀),p)V, D_pΦ(Γ(α,β₀),p) − D_pΦ(x⋆,p⋆)]‖`.
    pub fn parallel(&self, alpha: &DVector<f64>, p: f64) -> f64 {
        let dec = &self.sp.decomposition;
        let q = dec.q;
        let x = gamma_unchecked(dec, alpha, &self.sp.beta0);
        let mut block = DMatrix::zeros(dec.n, q + 1);
        block
            .columns_mut(0, q)
            .copy_from(&(self.model.jacobian_x_unchecked(&x, p) * &dec.v));
        block
            .column_mut(q)
            .copy_from(&(self.model.jacobian_p_unchecked(&x, p) - &self.sp.dp));
        norm2(&(&self.wt * block))
    }

    /// Generic `‖Wᵀ(D_xΦ(Γ(α,β),p) − J⋆)V̄‖`.
    pub fn perp(&self, alpha: &DVector<f64>, beta: &DVector<f64>, p: f64) -> f64 {
        let dec = &self.sp.decomposition;
        let x = gamma_unchecked(dec, alpha, beta);
        let diff = self.model.jacobian_x_unchecked(&x, p) - &self.sp.jacobian;
        norm2(&(&self.wt * diff * &dec.vbar))
    }
}

fn check_coords(sp: &SingularPoint, alpha: &DVector<f64>, beta: Option<&DVector<f64>>) -> Result<()> {
    check_dim("alpha length", sp.q(), alpha.len())?;
    if let Some(beta) = beta {
        check_dim("beta length", sp.n() - sp.q(), beta.len())?;
    }
    Ok(())
}

/// `‖ξ∥(α, p)‖` from its definition.
pub fn xi_parallel_norm(
    model: &NetworkModel,
    sp: &SingularPoint,
    alpha: &DVector<f64>,
    p: f64,
) -> Result<f64> {
    check_coords(sp, alpha, None)?;
    Ok(XiContext::new(model, sp).parallel(alpha, p))
}

/// `‖ξ⊥(α, β, p)‖` from its definition, right factor `V̄`.
pub fn xi_perp_norm(
    model: &NetworkModel,
    sp: &SingularPoint,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    p: f64,
) -> Result<f64> {
    check_coords(sp, alpha, Some(beta))?;
    Ok(XiContext::new(model, sp).perp(alpha, beta, p))
}

/// `‖ξ∥‖` through the model-specific closed forms:
/// Hopfield `‖PA[Δ∥V, S̄∥]‖`, firing-rate `‖P[Δ∥ₓAV, Δ∥ₚ]‖`.
pub fn xi_parallel_norm_closed_form(
    model: &NetworkModel,
    sp: &SingularPoint,
    alpha: &DVector<f64>,
    p: f64,
) -> Result<f64> {
    check_coords(sp, alpha, None)?;
    let dec = &sp.decomposition;
    let proj = &dec.w * dec.w.transpose();
    let q = dec.q;
    let n = dec.n;
    let act = model.activation();
    let a = model.adjacency();
    let x = gamma_unchecked(dec, alpha, &sp.beta0);
    let xs = &sp.x_star;
    let mut block = DMatrix::zeros(n, q + 1);
    match model.kind() {
        ModelKind::Hopfield => {
            let delta = act.apply_derivative(&x) * p - act.apply_derivative(xs) * sp.p_star;
            let s_bar = act.apply(&x) - act.apply(xs);
            block
                .columns_mut(0, q)
                .copy_from(&(DMatrix::from_diagonal(&delta) * &dec.v));
            block.column_mut(q).copy_from(&s_bar);
            Ok(norm2(&(proj * a * block)))
        }
        ModelKind::FiringRate => {
            let z = a * &x * p + model.bias();
            let zs = a * xs * sp.p_star + model.bias();
            let ds = act.apply_derivative(&z);
            let ds_star = act.apply_derivative(&zs);
            let delta_x = &ds * p - &ds_star * sp.p_star;
            let delta_p = ds.component_mul(&(a * &x)) - ds_star.component_mul(&(a * xs));
            block
                .columns_mut(0, q)
                .copy_from(&(DMatrix::from_diagonal(&delta_x) * a * &dec.v));
            block.column_mut(q).copy_from(&delta_p);
            Ok(norm2(&(proj * block)))
        }
    }
}

/// `‖ξ⊥‖` through the closed forms: Hopfield `‖PAΔ⊥Q‖`, firing-rate
/// `‖PΔ⊥AQ‖`.
pub fn xi_perp_norm_closed_form(
    model: &NetworkModel,
    sp: &SingularPoint,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    p: f64,
) -> Result<f64> {
    check_coords(sp, alpha, Some(beta))?;
    let dec = &sp.decomposition;
    let proj_p = &dec.w * dec.w.transpose();
    let proj_q = &dec.vbar * dec.vbar.transpose();
    let act = model.activation();
    let a = model.adjacency();
    let x = gamma_unchecked(dec, alpha, beta);
    let xs = &sp.x_star;
    let m = match model.kind() {
        ModelKind::Hopfield => {
            let delta = act.apply_derivative(&x) * p - act.apply_derivative(xs) * sp.p_star;
            proj_p * a * DMatrix::from_diagonal(&delta) * proj_q
        }
        ModelKind::FiringRate => {
            let z = a * &x * p + model.bias();
            let zs = a * xs * sp.p_star + model.bias();
            let delta = act.apply_derivative(&z) * p - act.apply_derivative(&zs) * sp.p_star;
            proj_p * DMatrix::from_diagonal(&delta) * a * proj_q
        }
    };
    Ok(norm2(&m))
}
