//! Independent oracles shared by the unit tests.

use nalgebra::DMatrix;

pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(i, j) in edges {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

pub fn k4_adjacency() -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 })
}

pub fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn petersen_edges() -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((5 + i, 5 + (i + 2) % 5));
        e.push((i, i + 5));
    }
    e
}

/// Largest singular value from power iteration on MᵀM.
pub fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut v = nalgebra::DVector::from_fn(g.nrows(), |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = &g * &v;
        let next = w.norm();
        v = w / next;
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Root of a scalar function on a sign-changing bracket.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bracket does not change sign");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
