//! Communication graphs and their mixing matrices.

mod mixing;

pub use mixing::{metropolis_weights, spectral_gap, MixingMatrix};

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{setup_stream, SetupStream};

/// Undirected simple graph over agents `0..n`.
///
/// Edges are stored normalized as `(i, j)` with `i < j`, so self-loops and
/// duplicates cannot be represented.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    positions: Option<Vec<[f64; 2]>>,
}

impl Graph {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one agent".into()));
        }
        Ok(Self {
            n,
            edges: BTreeSet::new(),
            positions: None,
        })
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds `{i, j}`. Returns `false` if the edge was already present.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j {
            return Err(Error::InvalidArgument(format!("self-loop on agent {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidArgument(format!(
                "edge ({i}, {j}) out of range for {} agents",
                self.n
            )));
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Writes the edge-list snapshot: `n` on the first line, then one
    /// 0-indexed `i j` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n)?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty edge list".into()))?;
        let n: usize = first?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("line 1: bad agent count: {e}")))?;
        let mut g = Self::new(n)?;
        for (idx, line) in lines {
            let line = line?;
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => {
                    g.add_edge(i, j)?;
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: expected `i j`, got {line:?}",
                        idx + 1
                    )))
                }
            }
        }
        Ok(g)
    }
}

fn within(a: [f64; 2], b: [f64; 2], radius: f64) -> bool {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    // relative slack so that radius = sqrt(2) reliably links diagonal neighbours
    dx * dx + dy * dy <= radius * radius * (1.0 + 1e-12)
}

fn geometric_edges(positions: &[[f64; 2]], radius: f64) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if within(positions[i], positions[j], radius) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

/// Lattice positions `(col, row)` with unit spacing; agent `r * cols + c`.
pub fn grid_positions(rows: usize, cols: usize) -> Vec<[f64; 2]> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| [c as f64, r as f64]))
        .collect()
}

/// Agents on a `rows x cols` unit lattice, linked when their Euclidean
/// distance is at most `link_radius`. `sqrt(2)` gives the 8-neighbourhood.
pub fn build_grid(rows: usize, cols: usize, link_radius: f64) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("grid needs positive rows and cols".into()));
    }
    if rows * cols < 2 {
        return Err(Error::InvalidArgument("grid needs at least two agents".into()));
    }
    if !(link_radius > 0.0) || !link_radius.is_finite() {
        return Err(Error::InvalidArgument("link_radius must be positive".into()));
    }
    let positions = grid_positions(rows, cols);
    Ok(Graph {
        n: positions.len(),
        edges: geometric_edges(&positions, link_radius),
        positions: Some(positions),
    })
}

/// `n` points uniform on the unit square, linked within `radius`.
pub fn build_random_geometric(n: usize, radius: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument("geometric graph needs n >= 2".into()));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument("radius must be nonnegative".into()));
    }
    let mut rng = setup_stream(seed, SetupStream::Positions);
    let positions: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    Ok(Graph {
        n,
        edges: geometric_edges(&positions, radius),
        positions: Some(positions),
    })
}

/// Ring lattice: agent `i` is linked to `i +- 1, ..., i +- k/2 (mod n)`.
pub fn build_cycle_k(n: usize, k: usize) -> Result<Graph> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::InvalidArgument(format!("k = {k} must be even and positive")));
    }
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below n = {n}")));
    }
    let mut g = Graph::new(n)?;
    for i in 0..n {
        for off in 1..=k / 2 {
            g.add_edge(i, (i + off) % n)?;
        }
    }
    Ok(g)
}

pub fn build_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument("complete graph needs n >= 2".into()));
    }
    let mut g = Graph::new(n)?;
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_edge(i, j)?;
        }
    }
    Ok(g)
}

/// BFS from agent 0.
pub fn is_connected(g: &Graph) -> bool {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == g.n
}
