//! Reference digraphs, delay-augmented graphs and consensus matrices.
//!
//! Agents are indexed from zero in the API. The augmented state stacks the
//! real agents first, then one block of `n` virtual agents per delay value:
//! virtual agent `(j, r)` holds mass that real agent `j` will absorb `r`
//! indices from now, and lives at flat index `r * n + j`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// A static directed communication graph over the real agents.
///
/// Every agent has a self-loop and the graph is strongly connected; both are
/// checked on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceGraph {
    n: usize,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl ReferenceGraph {
    /// Builds a graph from `(sender, receiver)` pairs.
    pub fn new(n: usize, edges: &[(usize, usize)], add_self_loops: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            set.insert((i, j));
        }
        if add_self_loops {
            set.extend((0..n).map(|i| (i, i)));
        } else if let Some(i) = (0..n).find(|&i| !set.contains(&(i, i))) {
            return Err(Error::MissingSelfLoop(i));
        }

        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(i, j) in &set {
            out[i].push(j);
            inc[j].push(i);
        }
        let g = Self { n, out, inc };
        g.check_strongly_connected()?;
        Ok(g)
    }

    /// Directed ring `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn directed_ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges, true)
    }

    /// Every ordered pair is an edge.
    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges, true)
    }

    /// The four-agent network used throughout the examples: the ring
    /// `v1 -> v2 -> v3 -> v4 -> v1` plus the chord `v3 -> v1`.
    pub fn four_agent_example() -> Self {
        Self::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 0)], true)
            .expect("example graph is strongly connected")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Out-neighbours of `i`, sorted, including `i` itself.
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    /// In-neighbours of `j`, sorted, including `j` itself.
    pub fn in_neighbors(&self, j: usize) -> &[usize] {
        &self.inc[j]
    }

    /// Out-degree counting the self-loop.
    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.inc[j].len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.out[i].binary_search(&j).is_ok()
    }

    /// All edges in lexicographic order, self-loops included.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    fn check_strongly_connected(&self) -> Result<()> {
        let forward = reachable(&self.out, 0);
        if let Some(to) = forward.iter().position(|&r| !r) {
            return Err(Error::NotStronglyConnected { from: 0, to });
        }
        let backward = reachable(&self.inc, 0);
        if let Some(from) = backward.iter().position(|&r| !r) {
            return Err(Error::NotStronglyConnected { from, to: 0 });
        }
        Ok(())
    }

    /// Parses the plain-text edge-list format: one `i j` pair per line with
    /// one-based indices, `#` comments and blank lines ignored. The agent
    /// count is the largest index seen unless `n` is given.
    pub fn parse_edge_list(text: &str, n: Option<usize>, add_self_loops: bool) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_index = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| Error::EdgeListParse {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected two indices"));
            };
            let a: usize = a.parse().map_err(|_| err("bad sender index"))?;
            let b: usize = b.parse().map_err(|_| err("bad receiver index"))?;
            if a == 0 || b == 0 {
                return Err(err("indices are one-based"));
            }
            max_index = max_index.max(a).max(b);
            edges.push((a - 1, b - 1));
        }
        Self::new(n.unwrap_or(max_index), &edges, add_self_loops)
    }

    /// Renders the graph in the edge-list format, self-loops omitted.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n = {}\n", self.n);
        for (i, j) in self.edges().filter(|(i, j)| i != j) {
            s.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        s
    }
}

fn reachable(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

impl FromStr for ReferenceGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_edge_list(s, None, true)
    }
}

/// A reference graph with `tau_msg_max` virtual agents chained behind each
/// real agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedGraph {
    base: ReferenceGraph,
    tau_msg_max: usize,
}

impl AugmentedGraph {
    pub fn new(base: ReferenceGraph, tau_msg_max: usize) -> Self {
        Self { base, tau_msg_max }
    }

    pub fn base(&self) -> &ReferenceGraph {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn tau_msg_max(&self) -> usize {
        self.tau_msg_max
    }

    /// Total number of real plus virtual agents.
    pub fn node_count(&self) -> usize {
        self.base.n * (self.tau_msg_max + 1)
    }

    pub fn virtual_count(&self) -> usize {
        self.base.n * self.tau_msg_max
    }

    /// Flat index of agent `i` at delay level `r`.
    pub fn index(&self, i: usize, r: usize) -> usize {
        debug_assert!(i < self.base.n && r <= self.tau_msg_max);
        r * self.base.n + i
    }

    /// Inverse of [`index`](Self::index).
    pub fn level(&self, flat: usize) -> (usize, usize) {
        (flat % self.base.n, flat / self.base.n)
    }

    /// Edges of the augmented graph as flat-index pairs: reference edges,
    /// edges from each sender to the virtual agents of its out-neighbours,
    /// and the daisy chains `(j, r) -> (j, r - 1)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, j) in self.base.edges() {
            out.push((self.index(i, 0), self.index(j, 0)));
            if i != j {
                for r in 1..=self.tau_msg_max {
                    out.push((self.index(i, 0), self.index(j, r)));
                }
            }
        }
        for j in 0..self.base.n {
            for r in 1..=self.tau_msg_max {
                out.push((self.index(j, r), self.index(j, r - 1)));
            }
        }
        out.sort_unstable();
        out
    }
}

/// Message delays for one time index, keyed by `(sender, receiver)`.
pub type DelayMap = BTreeMap<(usize, usize), usize>;

/// Sparse column-stochastic mixing matrix over the augmented state.
///
/// Stored by column: column `c` lists where the mass held by augmented agent
/// `c` goes. Entries within a column are sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrix {
    dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl ConsensusMatrix {
    /// Builds a matrix from explicit columns; used for hand-made test
    /// matrices. No stochasticity is enforced here.
    pub fn from_columns(dim: usize, mut columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if columns.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} columns for dimension {dim}",
                columns.len()
            )));
        }
        for col in &mut columns {
            if let Some(&(r, _)) = col.iter().find(|(r, _)| *r >= dim) {
                return Err(Error::IndexOutOfRange { index: r, n: dim });
            }
            col.sort_by_key(|&(r, _)| r);
        }
        Ok(Self { dim, columns })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            columns: (0..dim).map(|c| vec![(c, 1.0)]).collect(),
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        let columns = (0..m.ncols())
            .map(|c| {
                (0..m.nrows())
                    .filter(|&r| m[(r, c)] != 0.0)
                    .map(|r| (r, m[(r, c)]))
                    .collect()
            })
            .collect();
        Ok(Self { dim: m.nrows(), columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, c: usize) -> &[(usize, f64)] {
        &self.columns[c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col]
            .iter()
            .find(|(r, _)| *r == row)
            .map_or(0.0, |(_, v)| *v)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// `out = M v` for a vector.
    pub fn apply_vec(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        for (c, col) in self.columns.iter().enumerate() {
            let vc = v[c];
            if vc == 0.0 {
                continue;
            }
            for &(r, w) in col {
                out[r] += w * vc;
            }
        }
    }

    /// `out = M X` for a row-major `dim x d` matrix.
    pub fn apply_rows(&self, x: &[f64], d: usize, out: &mut [f64]) {
        assert_eq!(x.len(), self.dim * d);
        assert_eq!(out.len(), self.dim * d);
        out.fill(0.0);
        for (c, col) in self.columns.iter().enumerate() {
            let src = &x[c * d..(c + 1) * d];
            for &(r, w) in col {
                let dst = &mut out[r * d..(r + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
}

impl fmt::Display for ConsensusMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.to_dense();
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| format!("{:.4}", m[(r, c)])).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Builds the mixing matrix for one time index.
///
/// Column `(i, 0)` of an active real sender spreads `1 / N_out(i)` to
/// `(j, r)` for every out-neighbour `j` with delay `r`; an inactive real
/// agent keeps its own mass. Column `(j, r)` with `r >= 1` forwards
/// everything to `(j, r - 1)`.
pub fn build_consensus_matrix(
    ag: &AugmentedGraph,
    active: &[usize],
    delays: &DelayMap,
) -> Result<ConsensusMatrix> {
    let g = ag.base();
    let n = g.n();
    let mut is_active = vec![false; n];
    for &i in active {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        is_active[i] = true;
    }
    for (&(i, j), &r) in delays {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n });
        }
        if i == j {
            if r != 0 {
                return Err(Error::NonzeroSelfDelay { agent: i, delay: r });
            }
            continue;
        }
        if !is_active[i] || !g.has_edge(i, j) {
            return Err(Error::UnexpectedDelayAssignment { from: i, to: j });
        }
        if r > ag.tau_msg_max() {
            return Err(Error::DelayOutOfBounds {
                from: i,
                to: j,
                delay: r,
                bound: ag.tau_msg_max(),
            });
        }
    }

    let mut columns = Vec::with_capacity(ag.node_count());
    for (i, &active) in is_active.iter().enumerate() {
        if !active {
            columns.push(vec![(ag.index(i, 0), 1.0)]);
            continue;
        }
        let share = 1.0 / g.out_degree(i) as f64;
        let mut col = Vec::with_capacity(g.out_degree(i));
        for &j in g.out_neighbors(i) {
            let r = if j == i {
                0
            } else {
                *delays
                    .get(&(i, j))
                    .ok_or(Error::MissingDelayAssignment { from: i, to: j })?
            };
            col.push((ag.index(j, r), share));
        }
        col.sort_by_key(|&(r, _)| r);
        columns.push(col);
    }
    for r in 1..=ag.tau_msg_max() {
        for j in 0..n {
            columns.push(vec![(ag.index(j, r - 1), 1.0)]);
        }
    }
    Ok(ConsensusMatrix {
        dim: ag.node_count(),
        columns,
    })
}

/// Largest absolute deviation of a column sum from one.
pub fn column_stochasticity_defect(m: &ConsensusMatrix) -> f64 {
    m.columns
        .iter()
        .map(|col| (col.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Hajnal's coefficient of ergodicity,
/// `1 - min_{j1, j2} sum_i min(m[i, j1], m[i, j2])`.
///
/// A value below one means every pair of columns overlaps, i.e. one
/// application contracts the spread of the state.
pub fn hajnal_coefficient(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    let mut defect: f64 = 0.0;
    for c in 0..m.ncols() {
        if m.column(c).iter().any(|&v| v < 0.0) {
            return Err(Error::NotColumnStochastic { defect: f64::INFINITY });
        }
        defect = defect.max((m.column(c).sum() - 1.0).abs());
    }
    if defect > 1e-9 {
        return Err(Error::NotColumnStochastic { defect });
    }
    let cols = m.ncols();
    let mut min_overlap = f64::INFINITY;
    for j1 in 0..cols {
        for j2 in j1 + 1..cols {
            let overlap: f64 = (0..m.nrows()).map(|i| m[(i, j1)].min(m[(i, j2)])).sum();
            min_overlap = min_overlap.min(overlap);
        }
    }
    if cols < 2 {
        return Ok(0.0);
    }
    Ok((1.0 - min_overlap).clamp(0.0, 1.0))
}

/// Lower bound `(1 / N_out_max)^(n (tau_bar + 1))` on the real-agent rows of
/// any long enough window product of consensus matrices.
pub fn delta_min_bound(g: &ReferenceGraph, tau_bar: usize) -> f64 {
    let exponent = g.n() * (tau_bar + 1);
    (1.0 / g.max_out_degree() as f64).powi(exponent as i32)
}
