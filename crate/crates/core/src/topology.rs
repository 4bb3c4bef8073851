//! Communication graphs, mixing matrices and their spectra.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Retry budget for drawing a connected Erdos-Renyi graph.
pub const ER_MAX_ATTEMPTS: usize = 100;

/// Row sums of a mixing matrix must equal one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest tolerated `|w_ij - w_ji|` for user-supplied matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// `lambda_2 < 1 - EIGEN_GAP_TOL` is read as "eigenvalue one is simple".
pub const EIGEN_GAP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Line,
    Complete,
    ErdosRenyi { edge_prob: f64 },
    Custom { edges: Vec<(usize, usize)> },
}

/// Undirected simple graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    attempts: usize,
}

impl CommGraph {
    /// Builds a graph from unordered pairs. Duplicate pairs (in either
    /// orientation) collapse to one edge.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(CommGraph {
            n,
            edges,
            adjacency,
            attempts: 1,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Number of random draws used to produce this graph (1 for deterministic kinds).
    pub fn attempts(&self) -> usize {
        self.attempts
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        components_connected(self.n, |i| self.adjacency[i].iter().copied().collect())
    }
}

fn components_connected(n: usize, nbrs: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in nbrs(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

pub fn build_graph(kind: &GraphKind, n: usize, seed: u64) -> Result<CommGraph> {
    if n == 0 {
        return Err(Error::InvalidGraph("graph needs at least one node".into()));
    }
    match kind {
        GraphKind::Line => CommGraph::from_edges(n, (1..n).map(|i| (i - 1, i))),
        GraphKind::Complete => {
            CommGraph::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
        }
        GraphKind::ErdosRenyi { edge_prob } => erdos_renyi(n, *edge_prob, seed),
        GraphKind::Custom { edges } => CommGraph::from_edges(n, edges.iter().copied()),
    }
}

fn erdos_renyi(n: usize, prob: f64, seed: u64) -> Result<CommGraph> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=ER_MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < prob {
                    edges.push((i, j));
                }
            }
        }
        let mut g = CommGraph::from_edges(n, edges)?;
        if g.is_connected() {
            g.attempts = attempt;
            return Ok(g);
        }
    }
    Err(Error::NotConnected {
        attempts: ER_MAX_ATTEMPTS,
    })
}

/// Edge probability giving the requested expected average degree on `n` nodes.
pub fn er_probability_for_degree(n: usize, avg_degree: f64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    (avg_degree / (n - 1) as f64).clamp(0.0, 1.0)
}

/// Parses "i j" lines (0-indexed); blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = fields.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected two node indices, got {line:?}"),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad node index {tok:?}"),
            })
        };
        let (a, b) = (next()?, next()?);
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "trailing fields after edge".into(),
            });
        }
        edges.push((a, b));
    }
    Ok(edges)
}

/// Loads an edge-list file. The node count is one past the largest index seen.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<CommGraph> {
    let text = std::fs::read_to_string(path)?;
    let edges = parse_edge_list(&text)?;
    let n = edges
        .iter()
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .ok_or_else(|| Error::Empty("edge list".into()))?;
    CommGraph::from_edges(n, edges)
}

/// Dense row-major `n x n` mixing matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("weight matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(WeightMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        WeightMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Sparse rows of a mixing matrix: `(j, w_ij)` for every nonzero weight,
/// diagonal included, in ascending `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixing<S> {
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Mixing<S> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, S)] {
        &self.rows[i]
    }

    /// `sum_j w_ij * values[j][k]` for every coordinate `k`, summed in ascending `j`.
    pub fn mix(&self, i: usize, values: &[&[S]]) -> Vec<S> {
        let p = values.first().map_or(0, |v| v.len());
        let mut out = vec![S::zero(); p];
        for (j, w) in &self.rows[i] {
            for (o, v) in out.iter_mut().zip(values[*j]) {
                *o = o.clone() + w.clone() * v.clone();
            }
        }
        out
    }

    /// Dense `f64` copy, for spectral analysis.
    pub fn to_weights(&self) -> WeightMatrix {
        let n = self.n();
        let mut data = vec![0.0; n * n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, w) in row {
                data[i * n + j] = w.to_f64();
            }
        }
        WeightMatrix { n, data }
    }
}

impl Mixing<f64> {
    pub fn from_weights(w: &WeightMatrix) -> Self {
        let rows = (0..w.n())
            .map(|i| {
                w.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Mixing { rows }
    }
}

/// Metropolis rule in an arbitrary field: `w_ij = 1/(1 + max(d_i, d_j))` on
/// edges, the diagonal absorbs the remainder of the row.
pub fn metropolis_mixing<S: Scalar>(g: &CommGraph) -> Mixing<S> {
    let rows = (0..g.n())
        .map(|i| {
            let mut off: Vec<(usize, S)> = g
                .neighbors(i)
                .iter()
                .map(|&j| (j, S::from_ratio(1, 1 + g.degree(i).max(g.degree(j)) as i64)))
                .collect();
            let diag = off.iter().fold(S::one(), |acc, (_, w)| acc - w.clone());
            let pos = off.partition_point(|(j, _)| *j < i);
            off.insert(pos, (i, diag));
            off
        })
        .collect();
    Mixing { rows }
}

pub fn metropolis_weights(g: &CommGraph) -> WeightMatrix {
    metropolis_mixing::<f64>(g).to_weights()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues in nonincreasing order.
    pub eigenvalues: Vec<f64>,
    pub beta: f64,
    pub lambda_2: f64,
    pub lambda_min: f64,
    /// Connectivity of the support graph of the off-diagonal weights.
    pub connected: bool,
    pub symmetric: bool,
    pub row_stochastic: bool,
    pub nonnegative: bool,
    /// Nonzero off-diagonal weights only on graph edges (always true without a graph).
    pub sparsity_ok: bool,
    pub assumption1_holds: bool,
}

impl SpectralReport {
    pub fn spectral_gap(&self) -> f64 {
        1.0 - self.beta
    }
}

fn analyze(w: &WeightMatrix, g: Option<&CommGraph>) -> SpectralReport {
    let n = w.n();
    let symmetric = w.max_asymmetry() <= SYMMETRY_TOL;
    let row_stochastic = w.max_row_sum_error() <= STOCHASTIC_TOL;
    let nonnegative = w.data.iter().all(|&v| v >= 0.0);
    let sparsity_ok = g.is_none_or(|g| {
        (0..n).all(|i| (0..n).all(|j| i == j || w.get(i, j) == 0.0 || g.has_edge(i, j)))
    });
    let connected = components_connected(n, |i| {
        (0..n)
            .filter(|&j| j != i && (w.get(i, j) != 0.0 || w.get(j, i) != 0.0))
            .collect()
    });

    let m = w.to_dmatrix();
    let sym = (&m + m.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));

    let lambda_min = *eigenvalues.last().unwrap();
    let (lambda_2, beta) = if n == 1 {
        (lambda_min, 0.0)
    } else {
        (eigenvalues[1], eigenvalues[1].abs().max(lambda_min.abs()))
    };
    let simple_unit = n == 1 || lambda_2 < 1.0 - EIGEN_GAP_TOL;
    SpectralReport {
        assumption1_holds: symmetric && row_stochastic && nonnegative && sparsity_ok && simple_unit,
        eigenvalues,
        beta,
        lambda_2,
        lambda_min,
        connected,
        symmetric,
        row_stochastic,
        nonnegative,
        sparsity_ok,
    }
}

/// Checks the mixing conditions for `w` against the topology `g`.
pub fn validate_weights(w: &WeightMatrix, g: &CommGraph) -> Result<SpectralReport> {
    if w.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: w.n(),
        });
    }
    Ok(analyze(w, Some(g)))
}

/// `beta = max(|lambda_2|, |lambda_n|)` from a full symmetric eigendecomposition.
pub fn spectral_beta(w: &WeightMatrix) -> Result<SpectralReport> {
    let asym = w.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(analyze(w, None))
}
