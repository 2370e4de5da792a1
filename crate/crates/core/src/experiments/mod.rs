//! Configuration-driven runs behind the command-line front end: bound
//! computation, the random-regular-graph sweep, oracle verification and the
//! `(R∥, R⊥)` frontier scan.
//!
//! Configurations are JSON. A problem is either a consensus model on a
//! regular graph (`edges`, `edge_list`, `complete` or `random`, plus `d`
//! and `kind`) or an explicit `model` with a `singular_point` locator.

mod frontier;
mod svg;
mod sweep;
mod verify;

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::{check_radii, maximize_r_parallel, BallSpec, BoundCertificate, SupremumOptions, DEFAULT_BUDGET};
use crate::equilibrium::{find_singular_parameter, locate_fold};
use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::graph::{build_nod_model, generate_random_regular, nod_bound, nod_certificate, Graph};
use crate::model::{ModelKind, ModelSpec, NetworkModel, SingularPoint};

pub use frontier::{run_frontier, write_frontier_csv, FrontierConfig, FrontierPoint};
pub use svg::render_sweep_svg;
pub use sweep::{
    cell_seed, run_sweep, write_cells_csv, write_records_csv, CellSummary, SkippedCell, SweepConfig, SweepRecord,
    SweepResult,
};
pub use verify::{run_verify, VerifyConfig, VerifyOutcome};

/// How to find the singular point of an explicit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SingularPointSpec {
    /// A known singular equilibrium.
    Given { x: Vec<f64>, p: f64 },
    /// Newton solve of the fold system from a nearby guess.
    Fold {
        x_guess: Vec<f64>,
        p_guess: f64,
        #[serde(default = "default_fold_tol")]
        tol: f64,
        #[serde(default = "default_fold_iter")]
        max_iter: usize,
    },
    /// Sign-change search of the smallest singular value along the
    /// equilibrium branch through `x_seed`.
    Search {
        x_seed: Vec<f64>,
        p_min: f64,
        p_max: f64,
        #[serde(default = "default_search_steps")]
        steps: usize,
    },
}

fn default_fold_tol() -> f64 {
    1e-12
}
fn default_fold_iter() -> usize {
    100
}
fn default_search_steps() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomGraphSpec {
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Problem description shared by the `bound`, `verify` and `frontier`
/// configurations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Explicit model; requires `singular_point`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_point: Option<SingularPointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    /// Inline edge list of a graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    /// Edge-list file, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_list: Option<PathBuf>,
    /// Complete graph on this many vertices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomGraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ModelKind>,
}

/// A resolved problem.
#[derive(Debug, Clone)]
pub enum Problem {
    /// Unbiased tanh consensus model on a connected regular graph.
    Consensus { graph: Graph, d: f64, kind: ModelKind },
    General { model: NetworkModel, sp: SingularPoint },
}

impl ProblemConfig {
    fn graph_sources(&self) -> usize {
        [
            self.edges.is_some(),
            self.edge_list.is_some(),
            self.complete.is_some(),
            self.random.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    /// Resolves file references against `base_dir` and locates the singular
    /// point of explicit models.
    pub fn resolve(&self, base_dir: &Path) -> Result<Problem> {
        let sources = self.graph_sources();
        match (&self.model, sources) {
            (Some(_), s) if s > 0 => Err(Error::Input(
                "give either `model` or a graph source, not both".into(),
            )),
            (None, 0) => Err(Error::Input(
                "config needs `model` or one of `edges`, `edge_list`, `complete`, `random`".into(),
            )),
            (None, s) if s > 1 => Err(Error::Input("give exactly one graph source".into())),
            (Some(spec), _) => {
                let model = NetworkModel::from_spec(spec)?;
                let locator = self
                    .singular_point
                    .as_ref()
                    .ok_or_else(|| Error::Input("`model` requires `singular_point`".into()))?;
                let sp = locate_singular_point(&model, locator, self.rank_tol)?;
                Ok(Problem::General { model, sp })
            }
            (None, _) => {
                let graph = if let Some(edges) = &self.edges {
                    let n = edges.iter().flat_map(|e| e.iter()).max().map_or(0, |&m| m + 1);
                    let pairs: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                    Graph::from_edges(n, &pairs)?
                } else if let Some(path) = &self.edge_list {
                    Graph::from_edge_list(&std::fs::read_to_string(base_dir.join(path))?)?
                } else if let Some(n) = self.complete {
                    if n < 2 {
                        return Err(Error::Input(format!("complete graph needs n ≥ 2, got {n}")));
                    }
                    Graph::complete(n)
                } else {
                    let r = self.random.expect("one graph source present");
                    generate_random_regular(r.n, r.k, r.seed)?
                };
                let d = self
                    .d
                    .ok_or_else(|| Error::Input("graph problems need the decay `d`".into()))?;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::Input(format!("d must be positive, got {d}")));
                }
                if graph.degree().is_none() {
                    return Err(Error::Input("graph must be regular".into()));
                }
                Ok(Problem::Consensus {
                    graph,
                    d,
                    kind: self.kind.unwrap_or(ModelKind::Hopfield),
                })
            }
        }
    }
}

fn locate_singular_point(model: &NetworkModel, spec: &SingularPointSpec, rank_tol: Option<f64>) -> Result<SingularPoint> {
    let (x, p) = match spec {
        SingularPointSpec::Given { x, p } => (DVector::from_vec(x.clone()), *p),
        SingularPointSpec::Fold {
            x_guess,
            p_guess,
            tol,
            max_iter,
        } => {
            let s = locate_fold(model, &DVector::from_vec(x_guess.clone()), *p_guess, *tol, *max_iter)?;
            (s.x_star, s.p_star)
        }
        SingularPointSpec::Search {
            x_seed,
            p_min,
            p_max,
            steps,
        } => {
            let s = find_singular_parameter(model, &DVector::from_vec(x_seed.clone()), *p_min, *p_max, *steps)?;
            (s.x_star, s.p_star)
        }
    };
    SingularPoint::new(model, x, p, rank_tol)
}

impl Problem {
    pub fn model_and_point(&self) -> Result<(NetworkModel, SingularPoint)> {
        match self {
            Problem::Consensus { graph, d, kind } => build_nod_model(graph, *d, *kind),
            Problem::General { model, sp } => Ok((model.clone(), sp.clone())),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Problem::Consensus { kind, .. } => *kind,
            Problem::General { model, .. } => model.kind(),
        }
    }

    /// Certificate for one ball: closed form for consensus problems unless
    /// `force_generic`, sampled otherwise.
    pub fn certificate(&self, ball: BallSpec, opts: &SupremumOptions, force_generic: bool) -> Result<BoundCertificate> {
        match self {
            Problem::Consensus { graph, d, kind } if !force_generic => nod_certificate(graph, *d, *kind, ball),
            _ => {
                let (model, sp) = self.model_and_point()?;
                check_radii(&model, &sp, ball, opts)
            }
        }
    }
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_r_perp() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    #[serde(flatten)]
    pub problem: ProblemConfig,
    /// Check this ball instead of maximizing `R∥`.
    #[serde(default)]
    pub radii: Option<BallSpec>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Use the sampled path even when the closed form applies.
    #[serde(default)]
    pub force_generic: bool,
    /// `R⊥` used while maximizing `R∥`.
    #[serde(default = "default_r_perp")]
    pub r_perp: f64,
    /// Relative tolerance of the `R∥` maximization.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl BoundConfig {
    pub fn supremum_options(&self, strategy: Strategy) -> SupremumOptions {
        SupremumOptions {
            budget: self.budget,
            seed: self.seed,
            strategy,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOutcome {
    pub kind: ModelKind,
    pub n: usize,
    pub q: usize,
    pub p_star: f64,
    /// Largest certified `R∥` at the certificate's `R⊥`: the exact supremum
    /// on the closed-form path, the maximized value on the sampled path.
    /// Absent when a fixed ball was checked.
    pub r_par_bound: Option<f64>,
    pub certificate: BoundCertificate,
}

impl BoundOutcome {
    pub fn summary(&self) -> String {
        let c = &self.certificate;
        let mut s = format!(
            "{} model, n = {}, q = {}, p* = {:.6}\nmethod: {}\n",
            self.kind,
            self.n,
            self.q,
            self.p_star,
            serde_json::to_value(c.method).expect("method serializes").as_str().unwrap_or("?"),
        );
        if let Some(r) = self.r_par_bound {
            s += &format!("R_par bound: {r:.9}\n");
        }
        s += &format!(
            "ball: R_par = {:.6e}, R_perp = {:.6e}\nM_par = {:.6e}, M_perp = {:.6e}, L_par = {:.6e}, L_perp = {:.6e}\nmargin = {:.6e} ({})\n",
            c.ball.r_par,
            c.ball.r_perp,
            c.m_par,
            c.m_perp,
            c.l_par,
            c.l_perp,
            c.margin,
            if c.feasible { "feasible" } else { "infeasible" },
        );
        s
    }
}

/// Runs a `bound` configuration. Without explicit radii the closed-form path
/// reports the exact supremum together with a certificate at
/// `(1 − tol)` times it; the sampled path maximizes `R∥` at `r_perp`.
pub fn run_bound(cfg: &BoundConfig, base_dir: &Path, strategy: Strategy) -> Result<BoundOutcome> {
    let problem = cfg.problem.resolve(base_dir)?;
    let opts = cfg.supremum_options(strategy);
    let (model, sp) = problem.model_and_point()?;
    let (r_par_bound, certificate) = match (&problem, cfg.radii) {
        (_, Some(ball)) => (None, problem.certificate(ball, &opts, cfg.force_generic)?),
        (Problem::Consensus { graph, d, .. }, None) if !cfg.force_generic => {
            let bound = nod_bound(graph, *d)?;
            let ball = BallSpec::new(bound * (1.0 - cfg.tol), cfg.r_perp)?;
            (Some(bound), problem.certificate(ball, &opts, false)?)
        }
        _ => {
            let res = maximize_r_parallel(&model, &sp, cfg.r_perp, &opts, cfg.tol)?;
            (Some(res.r_par), res.certificate)
        }
    };
    Ok(BoundOutcome {
        kind: problem.kind(),
        n: sp.n(),
        q: sp.q(),
        p_star: sp.p_star,
        r_par_bound,
        certificate,
    })
}

/// Reads and parses a JSON configuration, returning it with the directory
/// used to resolve relative paths.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let cfg = serde_json::from_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}
