//! Directed weighted graphs stored as forward and transpose adjacency arrays.

use crate::error::{Error, Result};
use crate::rank::NodeId;

/// Traversal direction for sketch construction and queries.
///
/// A forward sketch of `v` samples nodes reachable from `v`; a backward
/// sketch samples nodes that reach `v`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, Default)]
struct Adjacency {
    offsets: Vec<usize>,
    heads: Vec<u32>,
    lengths: Vec<f64>,
}

impl Adjacency {
    fn build(n: usize, arcs: &[(u32, u32, f64)]) -> Adjacency {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _, _) in arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 1..=n {
            offsets[i] += offsets[i - 1];
        }
        let mut heads = vec![0u32; arcs.len()];
        let mut lengths = vec![0f64; arcs.len()];
        let mut cursor = offsets.clone();
        for &(u, v, w) in arcs {
            let at = cursor[u as usize];
            heads[at] = v;
            lengths[at] = w;
            cursor[u as usize] += 1;
        }
        Adjacency {
            offsets,
            heads,
            lengths,
        }
    }

    #[inline]
    fn neighbors(&self, v: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let lo = self.offsets[v];
        let hi = self.offsets[v + 1];
        self.heads[lo..hi]
            .iter()
            .copied()
            .zip(self.lengths[lo..hi].iter().copied())
    }
}

/// A graph with `n` nodes (ids `0..n`) and directed arcs with positive lengths.
/// Undirected input is stored as an arc in each direction.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    arcs: usize,
    forward: Adjacency,
    backward: Adjacency,
}

impl Graph {
    /// Build from a list of `(tail, head, length)` arcs. The node count is
    /// one past the largest id mentioned, or `min_nodes` if larger.
    pub fn from_arcs(
        min_nodes: usize,
        arcs: &[(u64, u64, f64)],
        undirected: bool,
    ) -> Result<Graph> {
        let mut n = min_nodes;
        for &(u, v, w) in arcs {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "arc ({u}, {v}) has nonpositive length {w}"
                )));
            }
            n = n.max(u as usize + 1).max(v as usize + 1);
        }
        let mut list: Vec<(u32, u32, f64)> =
            Vec::with_capacity(arcs.len() * if undirected { 2 } else { 1 });
        for &(u, v, w) in arcs {
            list.push((u as u32, v as u32, w));
            if undirected && u != v {
                list.push((v as u32, u as u32, w));
            }
        }
        let transpose: Vec<(u32, u32, f64)> = list.iter().map(|&(u, v, w)| (v, u, w)).collect();
        Ok(Graph {
            n,
            arcs: list.len(),
            forward: Adjacency::build(n, &list),
            backward: Adjacency::build(n, &transpose),
        })
    }

    /// Parse a text edge list: one arc per line, `u v [length]`, `#` starts a
    /// comment, blank lines ignored. Lengths default to 1.
    pub fn parse_edge_list(text: &str, undirected: bool) -> Result<Graph> {
        let mut arcs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parse_id = |s: Option<&str>| -> Result<u64> {
                s.ok_or_else(|| {
                    Error::InvalidInput(format!("line {}: expected `u v [w]`", lineno + 1))
                })?
                .parse::<u64>()
                .map_err(|e| Error::InvalidInput(format!("line {}: bad node id: {e}", lineno + 1)))
            };
            let u = parse_id(fields.next())?;
            let v = parse_id(fields.next())?;
            let w = match fields.next() {
                Some(s) => s.parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("line {}: bad length: {e}", lineno + 1))
                })?,
                None => 1.0,
            };
            if fields.next().is_some() {
                return Err(Error::InvalidInput(format!(
                    "line {}: trailing fields after `u v w`",
                    lineno + 1
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "line {}: nonpositive length {w}",
                    lineno + 1
                )));
            }
            arcs.push((u, v, w));
        }
        Graph::from_arcs(0, &arcs, undirected)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n as u64).map(NodeId)
    }

    /// Out-neighbors in the given direction (`Backward` walks the transpose).
    #[inline]
    pub fn out(&self, v: usize, dir: Direction) -> impl Iterator<Item = (u32, f64)> + '_ {
        match dir {
            Direction::Forward => self.forward.neighbors(v),
            Direction::Backward => self.backward.neighbors(v),
        }
    }

    /// Neighbors along which a sketch in direction `dir` is collected: the
    /// reverse of `dir`, so that traversal distance from a source `u` to a
    /// visited node `v` equals the `dir`-distance from `v` to `u`.
    #[inline]
    pub fn collect_edges(&self, v: usize, dir: Direction) -> impl Iterator<Item = (u32, f64)> + '_ {
        match dir {
            Direction::Forward => self.backward.neighbors(v),
            Direction::Backward => self.forward.neighbors(v),
        }
    }
}
