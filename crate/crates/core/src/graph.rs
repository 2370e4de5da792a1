//! Undirected simple graphs, random regular graph generation, and the
//! closed-form consensus-bifurcation bounds on connected k-regular graphs.

use std::collections::{BTreeMap, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{BallSpec, BoundCertificate, Method, Provenance};
use crate::error::{Error, Result};
use crate::model::{adjacency_from_edges, parse_edge_list, Activation, ModelKind, NetworkModel, SingularPoint};

/// Rejected pairings or disconnected outcomes tolerated before giving up.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// Tolerance on the Perron root `λ₁ = k`.
pub const PERRON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
    degree: Option<usize>,
    /// Adjacency eigenvalues, descending.
    spectrum: Vec<f64>,
    /// Generation attempts (1 for graphs not produced by the generator).
    pub attempts: usize,
}

impl Graph {
    /// Validates a symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Input("adjacency must be square".into()));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Input(format!("self-loop at vertex {i}")));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::Input(format!(
                        "graph edges must have unit weight, got {a} at ({i}, {j})"
                    )));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::Input(format!("adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        let degrees: Vec<usize> = (0..n).map(|i| adjacency.row(i).sum() as usize).collect();
        let degree = match degrees.first() {
            Some(&k) if degrees.iter().all(|&d| d == k) => Some(k),
            _ => None,
        };
        let mut spectrum: Vec<f64> = adjacency.clone().symmetric_eigenvalues().iter().copied().collect();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        Ok(Graph {
            adjacency,
            degree,
            spectrum,
            attempts: 1,
        })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let edges: Vec<_> = edges
            .iter()
            .map(|&(i, j)| crate::model::Edge { i, j, weight: 1.0 })
            .collect();
        Graph::from_adjacency(adjacency_from_edges(&edges, Some(n))?)
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        Graph::from_adjacency(adjacency_from_edges(&parse_edge_list(text)?, None)?)
    }

    pub fn complete(n: usize) -> Self {
        Graph::from_adjacency(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
            .expect("complete graph is valid")
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacency[(i, j)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn to_edge_list(&self) -> String {
        self.edges().iter().map(|(i, j)| format!("{i} {j}\n")).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if self.adjacency[(u, v)] != 0.0 && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(perm[i], perm[j])] = self.adjacency[(i, j)];
            }
        }
        Graph::from_adjacency(a)
    }

    fn complement(&self) -> Result<Self> {
        let n = self.n();
        Graph::from_adjacency(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                1.0 - self.adjacency[(i, j)]
            }
        }))
    }

    fn regular_degree(&self) -> Result<usize> {
        self.degree
            .ok_or_else(|| Error::Input("graph is not regular".into()))
    }
}

/// One pass of the incremental pairing model: stubs are shuffled and paired,
/// pairs forming loops or repeated edges go back into the pool, and the pass
/// gives up when no admissible pair remains.
fn try_pairing(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Option<HashSet<(usize, usize)>> {
    let mut edges = HashSet::with_capacity(n * k / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && edges.insert((u, v)) {
                continue;
            }
            *leftover.entry(u).or_default() += 1;
            *leftover.entry(v).or_default() += 1;
        }
        if !admissible_pair_exists(&edges, &leftover) {
            return None;
        }
        stubs = leftover
            .iter()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect();
    }
    Some(edges)
}

fn admissible_pair_exists(edges: &HashSet<(usize, usize)>, leftover: &BTreeMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let verts: Vec<usize> = leftover.keys().copied().collect();
    for (a, &u) in verts.iter().enumerate() {
        for &v in &verts[a + 1..] {
            if !edges.contains(&(u, v)) {
                return true;
            }
        }
    }
    false
}

/// Random connected simple k-regular graph on `n` vertices, reproducible
/// from `seed`.
///
/// Dense requests (`2k > n − 1`) generate the complement and flip it, which
/// keeps the pairing model's rejection rate low.
pub fn generate_random_regular(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if k == 0 || k >= n {
        return Err(Error::Input(format!("need 0 < k < n, got n = {n}, k = {k}")));
    }
    if (n * k) % 2 != 0 {
        return Err(Error::Input(format!("n·k must be even, got n = {n}, k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complement = 2 * k > n - 1;
    let k_gen = if complement { n - 1 - k } else { k };
    for attempt in 1..=MAX_GENERATION_ATTEMPTS {
        let edges = if k_gen == 0 {
            HashSet::new()
        } else {
            match try_pairing(n, k_gen, &mut rng) {
                Some(e) => e,
                None => continue,
            }
        };
        let mut a = DMatrix::zeros(n, n);
        for &(u, v) in &edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        let mut g = Graph::from_adjacency(a)?;
        if complement {
            g = g.complement()?;
        }
        if g.is_connected() {
            debug_assert_eq!(g.degree, Some(k));
            g.attempts = attempt;
            return Ok(g);
        }
    }
    Err(Error::Generation {
        n,
        k,
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjacencySpectrum {
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_min: f64,
    /// `max(|λ₂|, |λₙ|)`
    pub lambda_prime: f64,
}

/// Perron root, subdominant and smallest eigenvalue of a connected regular
/// graph.
pub fn adjacency_spectrum(g: &Graph) -> Result<AdjacencySpectrum> {
    let k = g.regular_degree()?;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if g.n() < 2 {
        return Err(Error::Input("need at least two vertices".into()));
    }
    let s = g.spectrum();
    let lambda1 = s[0];
    if (lambda1 - k as f64).abs() > PERRON_TOL {
        return Err(Error::Assumption(format!(
            "Perron root {lambda1} differs from degree {k}"
        )));
    }
    let lambda2 = s[1];
    let lambda_min = s[s.len() - 1];
    Ok(AdjacencySpectrum {
        k,
        lambda1,
        lambda2,
        lambda_min,
        lambda_prime: lambda2.abs().max(lambda_min.abs()),
    })
}

/// Supremal certified `R∥`, `d(k − λ₂)/(k·|λ′|)`. `R⊥` is unconstrained.
pub fn nod_bound(g: &Graph, d: f64) -> Result<f64> {
    check_decay(d)?;
    let s = adjacency_spectrum(g)?;
    Ok(nod_bound_from_spectrum(&s, d))
}

pub fn nod_bound_from_spectrum(s: &AdjacencySpectrum, d: f64) -> f64 {
    let k = s.k as f64;
    d * (k - s.lambda2) / (k * s.lambda_prime)
}

/// `M⊥ = k/(d(k − λ₂))` for the consensus Jacobian `(d/k)(A − kI)`.
pub fn nod_m_perp(s: &AdjacencySpectrum, d: f64) -> f64 {
    let k = s.k as f64;
    k / (d * (k - s.lambda2))
}

fn check_decay(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Input(format!("d must be positive, got {d}")));
    }
    Ok(())
}

/// Unbiased tanh consensus model `C = dI, b = 0` on `g` and its singular
/// point `(0, d/k)`.
pub fn build_nod_model(g: &Graph, d: f64, kind: ModelKind) -> Result<(NetworkModel, SingularPoint)> {
    check_decay(d)?;
    let k = g.regular_degree()?;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let model = NetworkModel::new(
        kind,
        g.adjacency().clone(),
        DVector::from_element(n, d),
        DVector::zeros(n),
        Activation::TANH,
    )?;
    let sp = SingularPoint::new(&model, DVector::zeros(n), d / k as f64, None)?;
    if sp.q() != 1 {
        return Err(Error::Assumption(format!(
            "consensus Jacobian kernel has dimension {} instead of 1",
            sp.q()
        )));
    }
    let v = sp.decomposition.v.column(0);
    let target = 1.0 / (n as f64).sqrt();
    let sign = v[0].signum();
    if v.iter().any(|&vi| (sign * vi - target).abs() > 1e-9) {
        return Err(Error::Assumption("kernel is not the consensus direction".into()));
    }
    Ok((model, sp))
}

/// Certificate from the closed-form consensus quantities: `M∥ = L∥ = 0`,
/// `M⊥ = k/(d(k − λ₂))`, `L⊥ = R∥|λ′|`.
pub fn nod_certificate(g: &Graph, d: f64, kind: ModelKind, ball: BallSpec) -> Result<BoundCertificate> {
    check_decay(d)?;
    let s = adjacency_spectrum(g)?;
    let (model, _) = build_nod_model(g, d, kind)?;
    Ok(BoundCertificate::from_parts(
        0.0,
        nod_m_perp(&s, d),
        0.0,
        ball.r_par * s.lambda_prime,
        ball,
        Method::Analytic,
        0,
        Provenance {
            model_hash: model.content_hash(),
            seed: 0,
            budget: 0,
        },
    ))
}
