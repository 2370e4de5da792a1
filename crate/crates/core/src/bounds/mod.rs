//! Validity radii for the reduced model: the bound ingredients, sampled
//! suprema, and the single-inequality feasibility check.

mod certify;
pub(crate) mod sampling;
pub(crate) mod xi;

pub use certify::{
    check_radii, maximize_r_parallel, BallSpec, BoundCertificate, MaximizedRadius, Method,
    Provenance,
};
pub use sampling::{
    estimate_l_parallel, estimate_l_perp, SupremumEstimate, SupremumOptions, DEFAULT_BUDGET,
    MIN_BUDGET,
};
pub use xi::{
    m_parallel, m_parallel_closed_form, m_perp, xi_parallel_norm, xi_parallel_norm_closed_form,
    xi_perp_norm, xi_perp_norm_closed_form, PROJECTOR_DISAGREEMENT_TOL,
};
