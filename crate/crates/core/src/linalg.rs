//! Dense spectral primitives: spectral norms, the kernel/range split of a
//! singular Jacobian, and the associated orthogonal projectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff used by [`default_rank_tol`].
pub const DEFAULT_RANK_RTOL: f64 = 1e-8;

/// Largest singular value of `m`.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    Ok(norm2(m))
}

/// Spectral norm without the finiteness check, for hot loops.
pub(crate) fn norm2(m: &DMatrix<f64>) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if r == 1 || c == 1 {
        return m.norm();
    }
    m.singular_values().max()
}

/// Singular values in ascending order.
pub fn singular_values_ascending(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// `1e-8 * sigma_max(J)`, falling back to `1e-8` for the zero matrix.
pub fn default_rank_tol(j: &DMatrix<f64>) -> f64 {
    let smax = norm2(j);
    if smax > 0.0 {
        DEFAULT_RANK_RTOL * smax
    } else {
        DEFAULT_RANK_RTOL
    }
}

/// SVD split of a singular square matrix `J = W Σ V̄ᵀ` with kernel basis `V`
/// and range-complement basis `W̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularDecomposition {
    pub n: usize,
    /// Kernel dimension.
    pub q: usize,
    /// n×q orthonormal kernel basis.
    pub v: DMatrix<f64>,
    /// n×(n−q) orthonormal basis of the kernel complement.
    pub vbar: DMatrix<f64>,
    /// n×(n−q) orthonormal range basis.
    pub w: DMatrix<f64>,
    /// n×q orthonormal basis of the range complement.
    pub wbar: DMatrix<f64>,
    /// Nonzero singular values, ascending.
    pub sigma: Vec<f64>,
    pub rank_tol: f64,
    /// Set when the smallest nonzero singular value sits within a factor 10
    /// of `rank_tol`, i.e. the kernel dimension is ambiguous.
    pub gap_warning: bool,
}

impl SingularDecomposition {
    pub fn sigma_min(&self) -> Option<f64> {
        self.sigma.first().copied()
    }

    pub fn projections(&self) -> Projections {
        Projections {
            range: &self.w * self.w.transpose(),
            kernel_perp: &self.vbar * self.vbar.transpose(),
            kernel: &self.v * self.v.transpose(),
            range_perp: &self.wbar * self.wbar.transpose(),
        }
    }

    /// `Vᵀx`
    pub fn alpha_of(&self, x: &DVector<f64>) -> DVector<f64> {
        self.v.tr_mul(x)
    }

    /// `V̄ᵀx`
    pub fn beta_of(&self, x: &DVector<f64>) -> DVector<f64> {
        self.vbar.tr_mul(x)
    }
}

/// Orthogonal projectors built from a [`SingularDecomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    /// `P = WWᵀ`, onto range(J).
    pub range: DMatrix<f64>,
    /// `Q = V̄V̄ᵀ`, onto ker(J)⊥.
    pub kernel_perp: DMatrix<f64>,
    /// `VVᵀ`, onto ker(J).
    pub kernel: DMatrix<f64>,
    /// `W̄W̄ᵀ`, onto range(J)⊥.
    pub range_perp: DMatrix<f64>,
}

/// Splits `j` into kernel and range bases. Singular values `<= rank_tol`
/// count as zero.
pub fn decompose_singular(j: &DMatrix<f64>, rank_tol: f64) -> Result<SingularDecomposition> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(Error::Dimension {
            what: "Jacobian must be square",
            expected: n,
            got: j.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::Input("empty Jacobian".into()));
    }
    if !(rank_tol > 0.0) || !rank_tol.is_finite() {
        return Err(Error::Input(format!("rank_tol must be positive, got {rank_tol}")));
    }
    if j.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("Jacobian has non-finite entries".into()));
    }

    let svd = j.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let vt = svd.v_t.expect("Vᵀ requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

    let (zero, nonzero): (Vec<usize>, Vec<usize>) = order
        .iter()
        .partition(|&&i| svd.singular_values[i] <= rank_tol);
    let q = zero.len();
    if q == 0 {
        return Err(Error::NotSingular {
            sigma_min: svd.singular_values[order[0]],
            rank_tol,
        });
    }

    let gather_u = |idx: &[usize]| {
        DMatrix::from_fn(n, idx.len(), |r, c| u[(r, idx[c])])
    };
    let gather_v = |idx: &[usize]| {
        DMatrix::from_fn(n, idx.len(), |r, c| vt[(idx[c], r)])
    };

    let sigma: Vec<f64> = nonzero.iter().map(|&i| svd.singular_values[i]).collect();
    let gap_warning = sigma.first().is_some_and(|&s| s < 10.0 * rank_tol);
    if gap_warning {
        log::warn!(
            "ambiguous kernel dimension: smallest nonzero singular value {:e} is within 10x of rank_tol {:e}",
            sigma[0],
            rank_tol
        );
    }

    Ok(SingularDecomposition {
        n,
        q,
        v: gather_v(&zero),
        vbar: gather_v(&nonzero),
        w: gather_u(&nonzero),
        wbar: gather_u(&zero),
        sigma,
        rank_tol,
        gap_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{k4_adjacency, power_iteration_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn norm_of_identity_and_diagonal() {
        assert_eq!(spectral_norm(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0]));
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = rand_matrix(&mut rng, 5, 4);
            let a = spectral_norm(&m).unwrap();
            let b = power_iteration_norm(&m);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn norm_rejects_nan() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(spectral_norm(&m), Err(Error::Input(_))));
    }

    #[test]
    fn zero_matrix_is_all_kernel() {
        let dec = decompose_singular(&DMatrix::zeros(2, 2), 1e-8).unwrap();
        assert_eq!(dec.q, 2);
        assert!(dec.sigma.is_empty());
        let pr = dec.projections();
        assert!(pr.range.norm() < 1e-15);
        assert!((pr.kernel - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_case() {
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -2.0]));
        let dec = decompose_singular(&j, 1e-8).unwrap();
        assert_eq!(dec.q, 1);
        assert!((dec.sigma[0] - 2.0).abs() < 1e-14);
        assert!((dec.v[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!(dec.v[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn nonsingular_is_rejected() {
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        assert!(matches!(
            decompose_singular(&j, 1e-8),
            Err(Error::NotSingular { .. })
        ));
    }

    #[test]
    fn k4_consensus_jacobian() {
        let j = (k4_adjacency() - DMatrix::identity(4, 4) * 3.0) / 3.0;
        let dec = decompose_singular(&j, 1e-8).unwrap();
        assert_eq!(dec.q, 1);
        for i in 0..4 {
            assert!((dec.v[(i, 0)].abs() - 0.5).abs() < 1e-12);
        }
        assert_eq!(dec.sigma.len(), 3);
        for s in &dec.sigma {
            assert!((s - 4.0 / 3.0).abs() < 1e-12);
        }
        let pr = dec.projections();
        let quarter = DMatrix::from_element(4, 4, 0.25);
        assert!((pr.kernel - quarter).abs().max() < 1e-12);
        assert!((j * &dec.v).norm() <= dec.rank_tol);
    }

    #[test]
    fn symmetric_jacobian_has_equal_range_and_cokernel_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = rand_matrix(&mut rng, 5, 3);
        let j = &b * b.transpose(); // rank 3, symmetric
        let dec = decompose_singular(&j, default_rank_tol(&j)).unwrap();
        assert_eq!(dec.q, 2);
        let pr = dec.projections();
        assert!((&pr.range - &pr.kernel_perp).abs().max() < 1e-12);
    }

    #[test]
    fn gap_guard_flags_ambiguous_rank() {
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 5e-8, 1.0]));
        let dec = decompose_singular(&j, 1e-8).unwrap();
        assert_eq!(dec.q, 1);
        assert!(dec.gap_warning);
    }

    #[test]
    fn decomposition_invariants_on_random_singular_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..50 {
            let n = 3 + trial % 5;
            let r = 1 + trial % (n - 1);
            let j = rand_matrix(&mut rng, n, r) * rand_matrix(&mut rng, r, n);
            let tol = default_rank_tol(&j);
            let dec = decompose_singular(&j, tol).unwrap();
            assert_eq!(dec.q, n - r);
            let eye = |k| DMatrix::<f64>::identity(k, k);
            assert!((dec.v.tr_mul(&dec.v) - eye(dec.q)).abs().max() < 1e-12);
            assert!((dec.vbar.tr_mul(&dec.vbar) - eye(n - dec.q)).abs().max() < 1e-12);
            assert!((dec.w.tr_mul(&dec.w) - eye(n - dec.q)).abs().max() < 1e-12);
            assert!(dec.v.tr_mul(&dec.vbar).abs().max() < 1e-12);
            assert!(dec.sigma.windows(2).all(|w| w[0] <= w[1]));
            assert!(dec.sigma.iter().all(|&s| s > tol));
            assert!(norm2(&(&j * &dec.v)) <= tol * norm2(&j).max(1.0));

            let pr = dec.projections();
            for p in [&pr.range, &pr.kernel_perp, &pr.kernel, &pr.range_perp] {
                assert!(norm2(&(p * p - p)) <= 1e-12);
                assert!(norm2(&(p - p.transpose())) <= 1e-12);
            }
            assert!(norm2(&(&pr.kernel + &pr.kernel_perp - eye(n))) <= 1e-12);
            assert!(norm2(&(&pr.range + &pr.range_perp - eye(n))) <= 1e-12);
        }
    }
}
