//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's numerical routines.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Outer 5-cycle, inner pentagram, spokes.
pub fn petersen_edges() -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((5 + i, 5 + (i + 2) % 5));
        e.push((i, 5 + i));
    }
    e
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(i, j) in edges {
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    a
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `‖M‖₂` by power iteration on `MᵀM`.
pub fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut v = DVector::from_fn(g.nrows(), |i, _| 1.0 + 0.1 * i as f64);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w / norm;
        lambda = next.dot(&(&g * &next));
        if (&next - &v).norm() < 1e-15 {
            break;
        }
        v = next;
    }
    lambda.max(0.0).sqrt()
}

/// Orthonormal columns by modified Gram–Schmidt on a random matrix.
pub fn random_orthonormal<R: Rng>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    loop {
        let mut u = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        let mut ok = true;
        for j in 0..k {
            for i in 0..j {
                let proj = u.column(i).dot(&u.column(j));
                let ci = u.column(i).into_owned();
                u.column_mut(j).axpy(-proj, &ci, 1.0);
            }
            let norm = u.column(j).norm();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            u.column_mut(j).scale_mut(1.0 / norm);
        }
        if ok {
            return u;
        }
    }
}

/// Central differences of `f` at `x` with step `h`.
pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for c in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        j.set_column(c, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    j
}

/// Bisection root of a sign-changing scalar function.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
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
