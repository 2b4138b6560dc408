//! Static directed graphs: construction, random generation, and the
//! structural queries (directed distances, strong connectivity) the
//! balancing and consensus layers depend on.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// An immutable directed graph with dense 0-based node ids.
///
/// Out- and in-adjacency lists are kept sorted, and the full matrix of
/// directed shortest-path hop counts is computed once at construction.
/// Unreachable pairs are represented by `None`, never by a sentinel number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    dist: Vec<Vec<Option<u32>>>,
}

impl Digraph {
    /// Builds a digraph from an explicit edge list. Rejects self-loops,
    /// duplicate edges, and endpoints outside `0..node_count`.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count < 1 {
            return Err(Error::NodeCount {
                got: node_count,
                min: 1,
            });
        }
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        for &(from, to) in edges {
            if from >= node_count || to >= node_count {
                return Err(Error::NodeOutOfRange {
                    node: from.max(to),
                    node_count,
                });
            }
            if from == to {
                return Err(Error::SelfLoop(from));
            }
            if out_adj[from].contains(&to) {
                return Err(Error::DuplicateEdge(from, to));
            }
            out_adj[from].push(to);
            in_adj[to].push(from);
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        let dist = directed_distances(&out_adj);
        Ok(Digraph {
            out_adj,
            in_adj,
            dist,
        })
    }

    /// Generates the experiment topology: a directed ring over all nodes
    /// (edges `i -> (i+1) mod N`, guaranteeing strong connectivity), plus
    /// every other ordered pair added independently with probability `p`.
    ///
    /// Candidate pairs are visited in a fixed lexicographic order and each
    /// pair draws from its own sub-stream, so the seed alone determines the
    /// graph.
    pub fn ring_plus_random(node_count: usize, p: f64, stream: &SeedStream) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::NodeCount {
                got: node_count,
                min: 2,
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::EdgeProbability(p));
        }
        let mut edges = Vec::new();
        for i in 0..node_count {
            edges.push((i, (i + 1) % node_count));
        }
        let mut pair_index = 0u64;
        for i in 0..node_count {
            for j in 0..node_count {
                if i == j || j == (i + 1) % node_count {
                    continue;
                }
                if stream.child(pair_index).bernoulli(p) {
                    edges.push((i, j));
                }
                pair_index += 1;
            }
        }
        Self::from_edges(node_count, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.out_adj.len()
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count()
    }

    pub fn out_neighbors(&self, node: usize) -> &[usize] {
        &self.out_adj[node]
    }

    pub fn in_neighbors(&self, node: usize) -> &[usize] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    /// Directed shortest-path hop count from `from` to `to`; `None` when no
    /// directed path exists. `distance(i, i)` is 0.
    pub fn distance(&self, from: usize, to: usize) -> Option<u32> {
        self.dist[from][to]
    }

    /// The full matrix of directed hop counts, row-indexed by source.
    pub fn distances(&self) -> &[Vec<Option<u32>>] {
        &self.dist
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.dist.iter().all(|row| row.iter().all(|d| d.is_some()))
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    /// All edges in ascending `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(from, tos)| tos.iter().map(move |&to| (from, to)))
    }

    /// Renders the graph in the edge-list text format: first line is the
    /// node count, then one `from to` pair per line, 0-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count());
        for (from, to) in self.edges() {
            out.push_str(&format!("{from} {to}\n"));
        }
        out
    }

    /// Parses the edge-list text format written by [`Digraph::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(idx, line)| (idx + 1, line.trim()))
            .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'));
        let (line_no, header) = lines.next().ok_or_else(|| Error::EdgeListParse {
            line: 1,
            message: "missing node-count header".to_string(),
        })?;
        let node_count: usize = header.parse().map_err(|_| Error::EdgeListParse {
            line: line_no,
            message: format!("invalid node count `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let mut fields = line.split_whitespace();
            let parse = |field: Option<&str>| -> Result<usize> {
                field
                    .ok_or(())
                    .and_then(|f| f.parse().map_err(|_| ()))
                    .map_err(|_| Error::EdgeListParse {
                        line: line_no,
                        message: format!("expected `from to`, got `{line}`"),
                    })
            };
            let from = parse(fields.next())?;
            let to = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::EdgeListParse {
                    line: line_no,
                    message: format!("trailing fields in `{line}`"),
                });
            }
            edges.push((from, to));
        }
        Self::from_edges(node_count, &edges)
    }

    /// Convenience wrapper used by run engines that share one graph across
    /// many trials.
    pub fn into_shared(self) -> Arc<Digraph> {
        Arc::new(self)
    }
}

/// BFS from every node over the out-adjacency.
fn directed_distances(out_adj: &[Vec<usize>]) -> Vec<Vec<Option<u32>>> {
    let n = out_adj.len();
    let mut dist = vec![vec![None; n]; n];
    let mut queue = VecDeque::new();
    for (start, row) in dist.iter_mut().enumerate() {
        row[start] = Some(0);
        queue.clear();
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            let d = row[node].expect("queued nodes have a distance");
            for &next in &out_adj[node] {
                if row[next].is_none() {
                    row[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}
