//! Hopfield-type and firing-rate-type network vector fields, their analytic
//! derivatives, and the kernel coordinate map.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{decompose_singular, default_rank_tol, SingularDecomposition};

/// Element-wise smooth activation with its derivative.
#[derive(Clone, Copy)]
pub struct Activation {
    pub label: &'static str,
    pub value: fn(f64) -> f64,
    pub derivative: fn(f64) -> f64,
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logistic_prime(z: f64) -> f64 {
    let s = logistic(z);
    s * (1.0 - s)
}

impl Activation {
    pub const TANH: Activation = Activation {
        label: "tanh",
        value: f64::tanh,
        derivative: sech2,
    };

    pub const LOGISTIC: Activation = Activation {
        label: "logistic",
        value: logistic,
        derivative: logistic_prime,
    };

    pub fn custom(label: &'static str, value: fn(f64) -> f64, derivative: fn(f64) -> f64) -> Self {
        Activation {
            label,
            value,
            derivative,
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "tanh" => Ok(Self::TANH),
            "logistic" => Ok(Self::LOGISTIC),
            other => Err(Error::Input(format!("unknown activation '{other}'"))),
        }
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        z.map(self.value)
    }

    pub fn apply_derivative(&self, z: &DVector<f64>) -> DVector<f64> {
        z.map(self.derivative)
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Activation").field(&self.label).finish()
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `−Cx + pA S(x) + b`
    Hopfield,
    /// `−Cx + S(pAx + b)`
    FiringRate,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Hopfield => "hopfield",
            ModelKind::FiringRate => "firing_rate",
        })
    }
}

/// A parametrized network vector field with scalar parameter `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    kind: ModelKind,
    a: DMatrix<f64>,
    c: DVector<f64>,
    b: DVector<f64>,
    activation: Activation,
}

impl NetworkModel {
    pub fn new(
        kind: ModelKind,
        a: DMatrix<f64>,
        c: DVector<f64>,
        b: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let n = a.nrows();
        check_dim("A must be square", n, a.ncols())?;
        check_dim("C length", n, c.len())?;
        check_dim("b length", n, b.len())?;
        if n == 0 {
            return Err(Error::Input("empty model".into()));
        }
        if let Some(bad) = c.iter().find(|&&ci| !(ci > 0.0)) {
            return Err(Error::Input(format!("C entries must be positive, got {bad}")));
        }
        if a.iter().chain(c.iter()).chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("model has non-finite entries".into()));
        }
        Ok(NetworkModel {
            kind,
            a,
            c,
            b,
            activation,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn decay(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        check_dim("state length", self.dim(), x.len())
    }

    /// Pre-activation `pAx + b` of the firing-rate form.
    fn drive(&self, x: &DVector<f64>, p: f64) -> DVector<f64> {
        (&self.a * x) * p + &self.b
    }

    pub fn evaluate(&self, x: &DVector<f64>, p: f64) -> Result<DVector<f64>> {
        self.check_state(x)?;
        Ok(self.evaluate_unchecked(x, p))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &DVector<f64>, p: f64) -> DVector<f64> {
        let leak = -self.c.component_mul(x);
        match self.kind {
            ModelKind::Hopfield => leak + (&self.a * self.activation.apply(x)) * p + &self.b,
            ModelKind::FiringRate => leak + self.activation.apply(&self.drive(x, p)),
        }
    }

    /// `D_x` of the vector field.
    pub fn jacobian_x(&self, x: &DVector<f64>, p: f64) -> Result<DMatrix<f64>> {
        self.check_state(x)?;
        Ok(self.jacobian_x_unchecked(x, p))
    }

    pub(crate) fn jacobian_x_unchecked(&self, x: &DVector<f64>, p: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut j = match self.kind {
            ModelKind::Hopfield => {
                // p A diag(S'(x)): scale columns
                let s = self.activation.apply_derivative(x);
                DMatrix::from_fn(n, n, |r, c| p * self.a[(r, c)] * s[c])
            }
            ModelKind::FiringRate => {
                // p diag(S'(pAx+b)) A: scale rows
                let s = self.activation.apply_derivative(&self.drive(x, p));
                DMatrix::from_fn(n, n, |r, c| p * s[r] * self.a[(r, c)])
            }
        };
        for i in 0..n {
            j[(i, i)] -= self.c[i];
        }
        j
    }

    /// `D_p` of the vector field.
    pub fn jacobian_p(&self, x: &DVector<f64>, p: f64) -> Result<DVector<f64>> {
        self.check_state(x)?;
        Ok(self.jacobian_p_unchecked(x, p))
    }

    pub(crate) fn jacobian_p_unchecked(&self, x: &DVector<f64>, p: f64) -> DVector<f64> {
        match self.kind {
            ModelKind::Hopfield => &self.a * self.activation.apply(x),
            ModelKind::FiringRate => {
                let s = self.activation.apply_derivative(&self.drive(x, p));
                s.component_mul(&(&self.a * x))
            }
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.kind,
            a: self.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
            c: self.c.iter().copied().collect(),
            b: self.b.iter().copied().collect(),
            activation_label: self.activation.label.to_string(),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let n = spec.a.len();
        if let Some(row) = spec.a.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                what: "A row length",
                expected: n,
                got: row.len(),
            });
        }
        let a = DMatrix::from_fn(n, n, |r, c| spec.a[r][c]);
        NetworkModel::new(
            spec.kind,
            a,
            DVector::from_vec(spec.c.clone()),
            DVector::from_vec(spec.b.clone()),
            Activation::from_label(&spec.activation_label)?,
        )
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_spec()).expect("model spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Serialized form of a [`NetworkModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Dense row-major adjacency.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// Diagonal of C.
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub activation_label: String,
}

/// `Γ(α, β) = Vα + V̄β`
pub fn gamma(
    dec: &SingularDecomposition,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim("alpha length", dec.q, alpha.len())?;
    check_dim("beta length", dec.n - dec.q, beta.len())?;
    Ok(gamma_unchecked(dec, alpha, beta))
}

pub(crate) fn gamma_unchecked(
    dec: &SingularDecomposition,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
) -> DVector<f64> {
    &dec.v * alpha + &dec.vbar * beta
}

/// Residual tolerance used when accepting a singular point.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// A singular equilibrium `(x⋆, p⋆)` together with the kernel split of its
/// Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub x_star: DVector<f64>,
    pub p_star: f64,
    pub decomposition: SingularDecomposition,
    /// `Vᵀx⋆`
    pub alpha0: DVector<f64>,
    /// `V̄ᵀx⋆`
    pub beta0: DVector<f64>,
    /// `D_xΦ(x⋆, p⋆)`
    pub jacobian: DMatrix<f64>,
    /// `D_pΦ(x⋆, p⋆)`
    pub dp: DVector<f64>,
}

impl SingularPoint {
    /// Builds the singular point, checking the equilibrium residual against
    /// [`EQUILIBRIUM_TOL`]. `rank_tol` defaults to `1e-8·σ_max(J⋆)`.
    pub fn new(
        model: &NetworkModel,
        x_star: DVector<f64>,
        p_star: f64,
        rank_tol: Option<f64>,
    ) -> Result<Self> {
        model.check_state(&x_star)?;
        if !(p_star > 0.0) {
            return Err(Error::Input(format!("p_star must be positive, got {p_star}")));
        }
        let residual = model.evaluate_unchecked(&x_star, p_star).amax();
        if residual > EQUILIBRIUM_TOL {
            return Err(Error::NotEquilibrium {
                residual,
                tol: EQUILIBRIUM_TOL,
            });
        }
        let jacobian = model.jacobian_x_unchecked(&x_star, p_star);
        let tol = rank_tol.unwrap_or_else(|| default_rank_tol(&jacobian));
        let decomposition = decompose_singular(&jacobian, tol)?;
        let dp = model.jacobian_p_unchecked(&x_star, p_star);
        Ok(SingularPoint {
            alpha0: decomposition.alpha_of(&x_star),
            beta0: decomposition.beta_of(&x_star),
            x_star,
            p_star,
            decomposition,
            jacobian,
            dp,
        })
    }

    pub fn n(&self) -> usize {
        self.decomposition.n
    }

    pub fn q(&self) -> usize {
        self.decomposition.q
    }
}

/// One parsed edge-list entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Parses `i j [weight]` lines (0-indexed). Blank lines and lines starting
/// with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected 'i j [weight]', got '{line}'")));
        }
        let index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("invalid vertex index '{s}'")))
        };
        let i = index(fields[0])?;
        let j = index(fields[1])?;
        let weight = match fields.get(2) {
            Some(w) => w
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| err(format!("invalid weight '{w}'")))?,
            None => 1.0,
        };
        edges.push(Edge { i, j, weight });
    }
    Ok(edges)
}

/// Symmetric adjacency from undirected edges. `n` defaults to one more than
/// the largest vertex index.
pub fn adjacency_from_edges(edges: &[Edge], n: Option<usize>) -> Result<DMatrix<f64>> {
    let max_index = edges.iter().map(|e| e.i.max(e.j) + 1).max().unwrap_or(0);
    let n = n.unwrap_or(max_index);
    if max_index > n {
        return Err(Error::Input(format!(
            "vertex index {} out of range for n = {n}",
            max_index - 1
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    for e in edges {
        if a[(e.i, e.j)] != 0.0 {
            return Err(Error::Input(format!("duplicate edge {} {}", e.i, e.j)));
        }
        a[(e.i, e.j)] = e.weight;
        a[(e.j, e.i)] = e.weight;
    }
    Ok(a)
}
