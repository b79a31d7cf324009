//! Simple undirected graphs, DIMACS `.col` ingestion and fixture generators.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::ToPrimitive;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ratlp::Rational;

/// Immutable simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: unparseable input `{text}`")]
    Syntax { line: usize, text: String },
    #[error("no problem line (`p edge <n> <m>`) found")]
    MissingProblemLine,
    #[error("line {line}: second problem line")]
    DuplicateProblemLine { line: usize },
    #[error("line {line}: edge line before the problem line")]
    EdgeBeforeProblemLine { line: usize },
    #[error("line {line}: vertex {vertex} outside 1..={n}")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("edge ({u}, {v}) is not a valid simple edge on {n} vertices")]
    InvalidEdge { u: usize, v: usize, n: usize },
}

impl Graph {
    /// Builds a graph from 0-based edges, merging duplicates and both
    /// orientations.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(GraphError::InvalidEdge { u, v, n });
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: set,
            adjacency,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn is_stable(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &u)| set[i + 1..].iter().all(|&v| u != v && !self.has_edge(u, v)))
    }

    /// Canonical DIMACS rendering: `p edge n m` then sorted 1-based edges.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "c {name}");
        }
        let _ = writeln!(out, "p edge {} {}", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "e {} {}", u + 1, v + 1);
        }
        out
    }
}

/// A parsed graph together with non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub declared_edges: usize,
    pub warnings: Vec<String>,
}

pub fn parse_dimacs(text: &str) -> Result<Graph, GraphError> {
    parse_dimacs_with_warnings(text).map(|p| p.graph)
}

pub fn parse_dimacs_with_warnings(text: &str) -> Result<ParsedGraph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut tokens = raw.split_whitespace();
        let Some(kind) = tokens.next() else { continue };
        let syntax = || GraphError::Syntax {
            line,
            text: raw.trim().to_string(),
        };
        match kind {
            "c" => {}
            "p" => {
                if header.is_some() {
                    return Err(GraphError::DuplicateProblemLine { line });
                }
                match tokens.next() {
                    Some("edge") | Some("col") => {}
                    _ => return Err(syntax()),
                }
                let n: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(syntax)?;
                let m: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(syntax)?;
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                header = Some((n, m));
            }
            "e" => {
                let Some((n, _)) = header else {
                    return Err(GraphError::EdgeBeforeProblemLine { line });
                };
                let u: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(syntax)?;
                let v: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(syntax)?;
                if tokens.next().is_some() {
                    return Err(syntax());
                }
                for vertex in [u, v] {
                    if vertex == 0 || vertex > n {
                        return Err(GraphError::VertexOutOfRange { line, vertex, n });
                    }
                }
                if u == v {
                    return Err(GraphError::SelfLoop { line, vertex: u });
                }
                edges.push((u - 1, v - 1));
            }
            _ => return Err(syntax()),
        }
    }
    let (n, declared_edges) = header.ok_or(GraphError::MissingProblemLine)?;
    let graph = Graph::from_edges(n, edges)?;
    let mut warnings = Vec::new();
    if graph.m() != declared_edges {
        warnings.push(format!(
            "problem line declares {declared_edges} edges, parsed {} distinct edges",
            graph.m()
        ));
    }
    Ok(ParsedGraph {
        graph,
        declared_edges,
        warnings,
    })
}

fn build(n: usize, edges: Vec<(usize, usize)>, name: String) -> Graph {
    Graph::from_edges(n, edges)
        .expect("generator produced a simple graph")
        .with_name(name)
}

/// Cycle `0-1-...-(n-1)-0`. Panics for `n < 3`.
pub fn make_cycle(n: usize) -> Graph {
    assert!(n >= 3, "a simple cycle needs at least 3 vertices");
    build(n, (0..n).map(|i| (i, (i + 1) % n)).collect(), format!("C{n}"))
}

pub fn make_complete(n: usize) -> Graph {
    assert!(n >= 1, "graph needs at least one vertex");
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    build(n, edges, format!("K{n}"))
}

pub fn make_edgeless(n: usize) -> Graph {
    assert!(n >= 1, "graph needs at least one vertex");
    build(n, Vec::new(), format!("E{n}"))
}

/// Outer 5-cycle `0..5`, inner pentagram `5..10`, spokes `i -- i+5`.
pub fn make_petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
        edges.push((i, i + 5));
    }
    build(10, edges, "petersen".to_string())
}

/// Mycielski graph numbered as in the DIMACS `mycielK` files: start from
/// `K2` and repeatedly append shadows `n+i` (adjacent to `N(i)`) and an apex
/// `2n` adjacent to every shadow. `order = 2` is `C5`, `3` is `myciel3`.
pub fn make_mycielski(order: usize) -> Graph {
    assert!(order >= 1, "order must be positive");
    let mut n = 2;
    let mut edges = vec![(0usize, 1usize)];
    for _ in 1..order {
        let mut next = edges.clone();
        for &(u, v) in &edges {
            next.push((n + u, v));
            next.push((u, n + v));
        }
        next.extend((0..n).map(|i| (n + i, 2 * n)));
        edges = next;
        n = 2 * n + 1;
    }
    build(n, edges, format!("myciel{order}"))
}

/// Queen graph on a `rows x cols` board, squares numbered row-major.
pub fn make_queen(rows: usize, cols: usize) -> Graph {
    assert!(rows >= 1 && cols >= 1, "board must be nonempty");
    let n = rows * cols;
    let mut edges = Vec::new();
    for a in 0..n {
        let (ra, ca) = (a / cols, a % cols);
        for b in a + 1..n {
            let (rb, cb) = (b / cols, b % cols);
            if ra == rb || ca == cb || ra.abs_diff(rb) == ca.abs_diff(cb) {
                edges.push((a, b));
            }
        }
    }
    build(n, edges, format!("queen{rows}_{cols}"))
}

/// Erdős–Rényi `G(n, p)`.
///
/// Uses ChaCha8 seeded with `seed_from_u64(seed)`. Pairs `(u, v)`, `u < v`,
/// are visited in lexicographic order; each draws one `u64` word `r` and is
/// kept iff `r / 2^64 < p`, compared exactly. The output is therefore a pure
/// function of `(n, p, seed)`.
pub fn make_gnp(n: usize, p: &Rational, seed: u64) -> Graph {
    assert!(n >= 1, "graph needs at least one vertex");
    assert!(
        !p.is_negative() && *p <= Rational::one(),
        "edge probability must lie in [0, 1]"
    );
    let num = p.numer().to_u128().expect("p numerator fits u128");
    let den = p.denom().to_u128().expect("p denominator fits u128");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let r = rng.next_u64() as u128;
            // r / 2^64 < num / den  <=>  r * den < num * 2^64
            let keep = match (r.checked_mul(den), num.checked_mul(1u128 << 64)) {
                (Some(lhs), Some(rhs)) => lhs < rhs,
                _ => {
                    let lhs = num_bigint::BigUint::from(r) * den;
                    let rhs = num_bigint::BigUint::from(num) << 64;
                    lhs < rhs
                }
            };
            if keep {
                edges.push((u, v));
            }
        }
    }
    build(n, edges, format!("gnp_{n}_{p}_{seed}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingKind {
    Identity,
    DegreeDescending,
    Reverse,
}

/// Maps decision-diagram layer index to original vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOrdering {
    order: Vec<usize>,
    position: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("vertex ordering is not a permutation of 0..{n}")]
pub struct NotAPermutation {
    pub n: usize,
}

impl VertexOrdering {
    pub fn from_vec(order: Vec<usize>) -> Result<Self, NotAPermutation> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (layer, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(NotAPermutation { n });
            }
            position[v] = layer;
        }
        Ok(VertexOrdering { order, position })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_vec((0..n).collect()).expect("identity is a permutation")
    }

    pub fn reverse(n: usize) -> Self {
        Self::from_vec((0..n).rev().collect()).expect("reverse is a permutation")
    }

    /// Highest degree first, ties by lower vertex id.
    pub fn degree_descending(g: &Graph) -> Self {
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
        Self::from_vec(order).expect("sorted ids are a permutation")
    }

    pub fn of_kind(kind: OrderingKind, g: &Graph) -> Self {
        match kind {
            OrderingKind::Identity => Self::identity(g.n()),
            OrderingKind::DegreeDescending => Self::degree_descending(g),
            OrderingKind::Reverse => Self::reverse(g.n()),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Vertex decided on 0-based layer `layer`.
    pub fn vertex_at(&self, layer: usize) -> usize {
        self.order[layer]
    }

    pub fn layer_of(&self, vertex: usize) -> usize {
        self.position[vertex]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }
}
