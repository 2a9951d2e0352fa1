//! Interaction matrices `A` and their blockwise action `(M ⊗ I_d) x`.
//!
//! Two families are supported: the parameterized clique
//! `A(b) = I_N + b (I_N - 𝟙𝟙ᵀ/N)`, for which the square root and inverse have
//! closed forms, and `A = I_N + L^W` for an arbitrary weighted graph `W`,
//! handled through a symmetric eigendecomposition. All derived matrices are
//! computed once at construction; `N` is expected to stay in the hundreds.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::compound::CompoundVector;
use crate::error::{Error, Result};

/// Largest `b` used for the clique family. Larger requests are clamped.
pub const MAX_B: f64 = 1e12;
/// Eigenvalues below this are treated as a singular `A`.
pub const MIN_EIGENVALUE: f64 = 1e-12;

const STOCHASTIC_NEG_TOL: f64 = 1e-12;
const STOCHASTIC_ROW_TOL: f64 = 1e-10;

/// Symmetric nonnegative weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    weights: DMatrix<f64>,
}

impl GraphSpec {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::Graph(format!(
                "weight matrix must be square and non-empty, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Graph(format!("nonzero diagonal weight at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Graph(format!(
                        "weight ({i},{j}) = {w} is not a finite nonnegative number"
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Graph(format!(
                        "weights ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn empty(n_tasks: usize) -> Self {
        Self {
            weights: DMatrix::zeros(n_tasks, n_tasks),
        }
    }

    /// Every pair of distinct nodes joined with `weight`.
    pub fn clique(n_tasks: usize, weight: f64) -> Result<Self> {
        let mut w = DMatrix::from_element(n_tasks, n_tasks, weight);
        w.fill_diagonal(0.0);
        Self::new(w)
    }

    pub fn from_edges(n_tasks: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n_tasks, n_tasks);
        for &(i, j, weight) in edges {
            if i >= n_tasks || j >= n_tasks {
                return Err(Error::Graph(format!(
                    "edge ({i},{j}) out of range for {n_tasks} nodes"
                )));
            }
            if i == j {
                return Err(Error::Graph(format!("self loop on node {i}")));
            }
            if w[(i, j)] != 0.0 {
                return Err(Error::Graph(format!("duplicate edge ({i},{j})")));
            }
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        Self::new(w)
    }

    /// Parses `i j w` lines (0-based node indices). Blank lines and `#`
    /// comments are skipped. When `n_tasks` is `None` the node count is the
    /// largest index plus one.
    pub fn parse_edge_list(text: &str, n_tasks: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Graph(format!(
                    "line {}: expected `i j w`, found {} fields",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad =
                |what: &str| Error::Graph(format!("line {}: cannot parse {what}", lineno + 1));
            let i: usize = fields[0].parse().map_err(|_| bad("node index"))?;
            let j: usize = fields[1].parse().map_err(|_| bad("node index"))?;
            let w: f64 = fields[2].parse().map_err(|_| bad("weight"))?;
            edges.push((i, j, w));
        }
        let n = match n_tasks {
            Some(n) => n,
            None => edges
                .iter()
                .map(|&(i, j, _)| i.max(j) + 1)
                .max()
                .ok_or_else(|| Error::Graph("edge list is empty".into()))?,
        };
        Self::from_edges(n, &edges)
    }

    pub fn from_edge_file(path: &Path, n_tasks: Option<usize>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text, n_tasks)
    }

    pub fn n_tasks(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.weights * factor)
    }

    /// `L^W = diag(W𝟙) - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_tasks();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.weights.row(i).sum();
        }
        l
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_tasks()).filter(move |&j| self.weights[(i, j)] > 0.0)
    }
}

/// Selects which cached matrix [`InteractionOperator::apply_block`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    A,
    Sqrt,
    Inv,
    InvSqrt,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::A => "A",
            Which::Sqrt => "A^1/2",
            Which::Inv => "A^-1",
            Which::InvSqrt => "A^-1/2",
        })
    }
}

/// Symmetric positive definite `A` with `A^{1/2}`, `A^{-1}`, `A^{-1/2}` cached.
#[derive(Debug, Clone)]
pub struct InteractionOperator {
    matrix: DMatrix<f64>,
    sqrt: DMatrix<f64>,
    inv: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    max_inv_diag: f64,
    clique_b: Option<f64>,
    identity: bool,
    inv_sqrt_stochastic: bool,
}

impl InteractionOperator {
    /// `A(b) = (1+b) I - b 𝟙𝟙ᵀ/N` from the closed forms.
    pub fn clique(n_tasks: usize, b: f64) -> Result<Self> {
        if n_tasks == 0 {
            return Err(Error::param("clique operator needs at least one task"));
        }
        if !(b >= 0.0) {
            return Err(Error::param(format!(
                "clique parameter b must be >= 0, got {b}"
            )));
        }
        let b = b.min(MAX_B);
        let n = n_tasks as f64;
        let r = (1.0 + b).sqrt();
        let ones = DMatrix::from_element(n_tasks, n_tasks, 1.0 / n);
        let eye = DMatrix::<f64>::identity(n_tasks, n_tasks);
        let matrix = &eye * (1.0 + b) - &ones * b;
        let sqrt = &eye * r + &ones * (1.0 - r);
        let inv = &eye / (1.0 + b) + &ones * (b / (1.0 + b));
        let inv_sqrt = &eye / r + &ones * (1.0 - 1.0 / r);
        let eig = SymmetricEigen::new(matrix.clone());
        Ok(Self {
            matrix,
            sqrt,
            inv,
            inv_sqrt,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            max_inv_diag: clique_max_inv_diag(n_tasks, b),
            clique_b: Some(b),
            identity: b == 0.0,
            inv_sqrt_stochastic: true,
        })
    }

    /// `A = I + L^W`. Fails if the spectrum or the stochasticity of the
    /// inverse and inverse square root is off.
    pub fn laplacian(graph: &GraphSpec) -> Result<Self> {
        let n = graph.n_tasks();
        let a = DMatrix::<f64>::identity(n, n) + graph.laplacian();
        let op = Self::from_matrix(a)?;
        let min_eig = op.eigenvalues.min();
        if min_eig < 1.0 - 1e-8 {
            return Err(Error::Graph(format!(
                "I + L has eigenvalue {min_eig} < 1; the Laplacian is corrupted"
            )));
        }
        for (which, m) in [(Which::Inv, &op.inv), (Which::InvSqrt, &op.inv_sqrt)] {
            if let Some(msg) = stochastic_violation(m) {
                return Err(Error::Graph(format!("{which} is not stochastic: {msg}")));
            }
        }
        Ok(op)
    }

    /// Generic symmetric positive definite `A` via eigendecomposition.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::param(
                "interaction matrix must be square and non-empty",
            ));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::param(format!(
                        "interaction matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let min_eig = eig.eigenvalues.min();
        if !(min_eig >= MIN_EIGENVALUE) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        let q = &eig.eigenvectors;
        let spectral = |f: &dyn Fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            q * d * q.transpose()
        };
        let sqrt = spectral(&|l| l.sqrt());
        let inv = spectral(&|l| 1.0 / l);
        let inv_sqrt = spectral(&|l| 1.0 / l.sqrt());
        let max_inv_diag = (0..n).map(|i| inv[(i, i)]).fold(f64::MIN, f64::max);
        let identity = matrix == DMatrix::identity(n, n);
        let inv_sqrt_stochastic = stochastic_violation(&inv_sqrt).is_none();
        Ok(Self {
            matrix,
            sqrt,
            inv,
            inv_sqrt,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            max_inv_diag,
            clique_b: None,
            identity,
            inv_sqrt_stochastic,
        })
    }

    pub fn identity(n_tasks: usize) -> Result<Self> {
        Self::clique(n_tasks, 0.0)
    }

    pub fn n_tasks(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self, which: Which) -> &DMatrix<f64> {
        match which {
            Which::A => &self.matrix,
            Which::Sqrt => &self.sqrt,
            Which::Inv => &self.inv,
            Which::InvSqrt => &self.inv_sqrt,
        }
    }

    #[inline]
    pub fn entry(&self, which: Which, i: usize, k: usize) -> f64 {
        self.matrix(which)[(i, k)]
    }

    /// `max_i [A^{-1}]_ii`.
    pub fn max_inv_diag(&self) -> f64 {
        self.max_inv_diag
    }

    /// `Some(b)` when built from the clique closed forms.
    pub fn clique_b(&self) -> Option<f64> {
        self.clique_b
    }

    pub fn is_closed_form(&self) -> bool {
        self.clique_b.is_some()
    }

    /// `A` is exactly the identity (independent tasks).
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `A^{-1/2}` has nonnegative entries and unit row sums.
    pub fn inv_sqrt_is_stochastic(&self) -> bool {
        self.inv_sqrt_stochastic
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `(M ⊗ I_d) x` without forming the `Nd × Nd` matrix.
    pub fn apply_block(&self, which: Which, x: &CompoundVector) -> Result<CompoundVector> {
        let n = self.n_tasks();
        if x.n_tasks() != n {
            return Err(Error::Dimension {
                expected: n,
                found: x.n_tasks(),
            });
        }
        if self.identity {
            return Ok(x.clone());
        }
        let m = self.matrix(which);
        let mut out = CompoundVector::zeros(n, x.dim());
        for i in 0..n {
            let row = out.block_mut(i);
            for k in 0..n {
                let c = m[(i, k)];
                if c != 0.0 {
                    for (o, v) in row.iter_mut().zip(x.block(k)) {
                        *o += c * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Block `i` of `(M ⊗ I_d) x`, in `O(Nd)`.
    pub fn apply_row(&self, which: Which, i: usize, x: &CompoundVector) -> Result<Vec<f64>> {
        let n = self.n_tasks();
        if i >= n {
            return Err(Error::TaskIndex {
                index: i,
                n_tasks: n,
            });
        }
        if x.n_tasks() != n {
            return Err(Error::Dimension {
                expected: n,
                found: x.n_tasks(),
            });
        }
        if self.identity {
            return Ok(x.block(i).to_vec());
        }
        let m = self.matrix(which);
        let mut out = vec![0.0; x.dim()];
        for k in 0..n {
            let c = m[(i, k)];
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(x.block(k)) {
                    *o += c * v;
                }
            }
        }
        Ok(out)
    }
}

/// `(b+N) / ((1+b)N)`, the common diagonal of `A(b)^{-1}`.
pub fn clique_max_inv_diag(n_tasks: usize, b: f64) -> f64 {
    let n = n_tasks as f64;
    (b + n) / ((1.0 + b) * n)
}

/// Per-block closed form of `A(b)^{1/2} x`: `√(1+b) x_i + (1 - √(1+b)) x̄`.
pub fn sqrt_block_action(b: f64, x: &CompoundVector) -> CompoundVector {
    let r = (1.0 + b.min(MAX_B)).sqrt();
    let mean = x.mean_block();
    let mut out = x.clone();
    for block in out.blocks_mut() {
        for (v, m) in block.iter_mut().zip(&mean) {
            *v = r * *v + (1.0 - r) * m;
        }
    }
    out
}

fn stochastic_violation(m: &DMatrix<f64>) -> Option<String> {
    let min = m.min();
    if min < -STOCHASTIC_NEG_TOL {
        return Some(format!("negative entry {min:e}"));
    }
    for (i, row) in m.row_iter().enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > STOCHASTIC_ROW_TOL {
            return Some(format!("row {i} sums to {s}"));
        }
    }
    None
}
