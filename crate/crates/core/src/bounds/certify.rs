use serde::{Deserialize, Serialize};

use crate::bounds::sampling::{estimate_l_parallel, estimate_l_perp, SupremumOptions};
use crate::bounds::xi::{m_parallel, m_perp};
use crate::error::{Error, Result};
use crate::model::{NetworkModel, SingularPoint};

/// Radii of the `(α, p)` ball and the `β` ball. The `(α, p)` ball uses the
/// Euclidean norm of the concatenated `(α − α₀, p − p⋆)` vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    #[serde(rename = "R_par")]
    pub r_par: f64,
    #[serde(rename = "R_perp")]
    pub r_perp: f64,
}

impl BallSpec {
    pub fn new(r_par: f64, r_perp: f64) -> Result<Self> {
        for (name, r) in [("R_par", r_par), ("R_perp", r_perp)] {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Input(format!("{name} must be positive and finite, got {r}")));
            }
        }
        Ok(BallSpec { r_par, r_perp })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        BallSpec::new(self.r_par * factor, self.r_perp * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed-form quantities; suprema are exact.
    Analytic,
    /// Sampled suprema; a lower bound on the true `L` values, so the
    /// certificate is empirical.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_hash: String,
    pub seed: u64,
    pub budget: usize,
}

/// All quantities entering `L∥R∥ + L⊥R⊥ < R⊥/M⊥ − M∥R∥` for one ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    #[serde(rename = "M_par")]
    pub m_par: f64,
    #[serde(rename = "M_perp")]
    pub m_perp: f64,
    #[serde(rename = "L_par")]
    pub l_par: f64,
    #[serde(rename = "L_perp")]
    pub l_perp: f64,
    pub ball: BallSpec,
    /// Right-hand side minus left-hand side of the inequality.
    pub margin: f64,
    pub feasible: bool,
    pub method: Method,
    pub samples_used: usize,
    pub provenance: Provenance,
}

impl BoundCertificate {
    pub fn from_parts(
        m_par: f64,
        m_perp: f64,
        l_par: f64,
        l_perp: f64,
        ball: BallSpec,
        method: Method,
        samples_used: usize,
        provenance: Provenance,
    ) -> Self {
        let margin = ball.r_perp / m_perp - m_par * ball.r_par - l_par * ball.r_par - l_perp * ball.r_perp;
        BoundCertificate {
            m_par,
            m_perp,
            l_par,
            l_perp,
            ball,
            margin,
            feasible: margin > 0.0,
            method,
            samples_used,
            provenance,
        }
    }

    /// The second inequality of the original two-condition bound, implied by
    /// the first whenever the certificate is feasible.
    pub fn contraction_factor(&self) -> f64 {
        self.m_perp * self.l_perp
    }
}

/// Evaluates the validity inequality on `ball` with sampled suprema.
pub fn check_radii(
    model: &NetworkModel,
    sp: &SingularPoint,
    ball: BallSpec,
    opts: &SupremumOptions,
) -> Result<BoundCertificate> {
    let ball = BallSpec::new(ball.r_par, ball.r_perp)?;
    let m_par = m_parallel(model, sp);
    let m_perp = m_perp(sp)?;
    let l_par = estimate_l_parallel(model, sp, ball.r_par, opts)?;
    let l_perp = estimate_l_perp(model, sp, ball.r_par, ball.r_perp, opts)?;
    Ok(BoundCertificate::from_parts(
        m_par,
        m_perp,
        l_par.value,
        l_perp.value,
        ball,
        Method::Sampled,
        l_par.samples_used + l_perp.samples_used,
        Provenance {
            model_hash: model.content_hash(),
            seed: opts.seed,
            budget: opts.budget,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizedRadius {
    pub r_par: f64,
    /// Certificate of the independent re-check at `r_par`.
    pub certificate: BoundCertificate,
    pub evaluations: usize,
}

const R_PAR_FLOOR: f64 = 1e-10;
const R_PAR_CEILING: f64 = 1e8;
const RECHECK_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Largest `R∥` (to relative tolerance `tol`) for which [`check_radii`] is
/// feasible at the given `R⊥`.
///
/// Starts at `R∥ = 1`, doubles or halves until the verdict flips, then
/// bisects. The result is re-checked with a differently seeded sample and
/// stepped down by `tol` until that check also passes.
pub fn maximize_r_parallel(
    model: &NetworkModel,
    sp: &SingularPoint,
    r_perp: f64,
    opts: &SupremumOptions,
    tol: f64,
) -> Result<MaximizedRadius> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Input(format!("tol must lie in (0, 1), got {tol}")));
    }
    let mut evaluations = 0;
    let mut feasible = |r: f64, opts: &SupremumOptions| -> Result<BoundCertificate> {
        evaluations += 1;
        check_radii(model, sp, BallSpec::new(r, r_perp)?, opts)
    };

    if !feasible(R_PAR_FLOOR, opts)?.feasible {
        return Err(Error::Degenerate(format!(
            "infeasible already at R_par = {R_PAR_FLOOR:e} with R_perp = {r_perp}"
        )));
    }

    let (mut lo, mut hi);
    if feasible(1.0, opts)?.feasible {
        lo = 1.0;
        hi = 2.0;
        while feasible(hi, opts)?.feasible {
            lo = hi;
            hi *= 2.0;
            if hi > R_PAR_CEILING {
                return Err(Error::Degenerate(format!(
                    "still feasible at R_par = {R_PAR_CEILING:e}; bound appears unbounded"
                )));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while !feasible(lo, opts)?.feasible {
            hi = lo;
            lo *= 0.5;
            if lo < R_PAR_FLOOR {
                lo = R_PAR_FLOOR;
                break;
            }
        }
    }
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if feasible(mid, opts)?.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let recheck = SupremumOptions {
        seed: opts.seed ^ RECHECK_SEED_SALT,
        ..*opts
    };
    for _ in 0..20 {
        let cert = feasible(lo, &recheck)?;
        if cert.feasible {
            return Ok(MaximizedRadius {
                r_par: lo,
                certificate: cert,
                evaluations,
            });
        }
        lo *= 1.0 - tol;
    }
    Err(Error::Degenerate(
        "re-check with an independent sample keeps failing".into(),
    ))
}
