//! Exact reduced decision diagrams of the stable sets of a graph.
//!
//! Layer `j` (0-based here, `j + 1` in dumps) decides vertex
//! `ordering.vertex_at(j)`. A node's state is the set of vertices that can
//! still be added individually to the partial stable set; nodes on a layer
//! with equal state are merged during top-down compilation.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::graph::{Graph, VertexOrdering};
use crate::oracle;

/// Default whole-diagram node budget.
pub const DEFAULT_NODE_LIMIT: usize = 2_000_000;

/// Fixed-width bitset over the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet(Box<[u64]>);

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet(vec![0; n.div_ceil(64)].into_boxed_slice())
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for v in vertices {
            s.insert(v);
        }
        s
    }

    pub fn insert(&mut self, v: usize) {
        self.0[v / 64] |= 1 << (v % 64);
    }

    pub fn remove(&mut self, v: usize) {
        self.0[v / 64] &= !(1 << (v % 64));
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.get(v / 64).is_some_and(|w| w >> (v % 64) & 1 == 1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().zip(other.0.iter()).map(|(a, b)| a & !b).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| k * 64 + b)
        })
    }

    /// Lowercase hex bitmask, bit `v` for vertex `v`.
    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        for w in self.0.iter().rev() {
            if out.is_empty() {
                if *w != 0 {
                    let _ = write!(out, "{w:x}");
                }
            } else {
                let _ = write!(out, "{w:016x}");
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdNode {
    /// 0-based layer index in `0..=n`.
    pub layer: usize,
    pub state: VertexSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DdArc {
    pub tail: usize,
    pub head: usize,
    /// `true` for a 1-arc (vertex taken).
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct DecisionDiagram {
    nodes: Vec<DdNode>,
    arcs: Vec<DdArc>,
    layers: Vec<Vec<usize>>,
    ordering: VertexOrdering,
    /// Per node: first outgoing 0-arc and 1-arc.
    out: Vec<[Option<usize>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DdError {
    #[error("cannot build a decision diagram for a graph without vertices")]
    EmptyGraph,
    #[error("vertex ordering has {ordering} entries but the graph has {n} vertices")]
    OrderingMismatch { ordering: usize, n: usize },
    #[error("node limit {limit} exceeded at layer {layer} with {nodes} nodes")]
    NodeLimitExceeded { limit: usize, layer: usize, nodes: usize },
    #[error("diagram has {count} paths, more than the limit {limit}")]
    PathLimitExceeded { count: BigUint, limit: usize },
}

pub fn compile_exact(g: &Graph, ordering: &VertexOrdering, node_limit: usize) -> Result<DecisionDiagram, DdError> {
    let n = g.n();
    if n == 0 {
        return Err(DdError::EmptyGraph);
    }
    if ordering.len() != n {
        return Err(DdError::OrderingMismatch {
            ordering: ordering.len(),
            n,
        });
    }
    let closed: Vec<VertexSet> = (0..n)
        .map(|v| VertexSet::from_vertices(n, g.neighbors(v).iter().copied().chain([v])))
        .collect();

    let mut nodes = vec![DdNode {
        layer: 0,
        state: VertexSet::full(n),
    }];
    let mut layers = vec![vec![0usize]];
    let mut arcs = Vec::new();
    let mut out = vec![[None, None]];

    for j in 0..n {
        let v = ordering.vertex_at(j);
        let mut index: HashMap<VertexSet, usize> = HashMap::new();
        let mut next = Vec::new();
        for &u in &layers[j] {
            let state = &nodes[u].state;
            let mut zero = state.clone();
            zero.remove(v);
            let one = state.contains(v).then(|| state.difference(&closed[v]));
            for (label, target) in [(false, Some(zero)), (true, one)] {
                let Some(target) = target else { continue };
                let fresh = nodes.len() + next.len();
                let id = *index.entry(target).or_insert_with_key(|key| {
                    next.push((fresh, key.clone()));
                    fresh
                });
                out[u][label as usize] = Some(arcs.len());
                arcs.push(DdArc { tail: u, head: id, label });
            }
        }
        let mut ids = Vec::with_capacity(next.len());
        for (id, state) in next {
            debug_assert_eq!(id, nodes.len());
            nodes.push(DdNode { layer: j + 1, state });
            out.push([None, None]);
            ids.push(id);
        }
        layers.push(ids);
        if nodes.len() > node_limit {
            return Err(DdError::NodeLimitExceeded {
                limit: node_limit,
                layer: j + 2,
                nodes: nodes.len(),
            });
        }
    }
    debug_assert_eq!(layers[n].len(), 1);
    debug_assert!(nodes[layers[n][0]].state.is_empty());
    Ok(DecisionDiagram {
        nodes,
        arcs,
        layers,
        ordering: ordering.clone(),
        out,
    })
}

impl DecisionDiagram {
    /// Assembles a diagram without checking any invariant; use
    /// [`validate`] to inspect the result.
    pub fn from_parts(ordering: VertexOrdering, nodes: Vec<DdNode>, arcs: Vec<DdArc>) -> Self {
        let mut layers = vec![Vec::new(); ordering.len() + 1];
        for (id, node) in nodes.iter().enumerate() {
            if node.layer >= layers.len() {
                layers.resize(node.layer + 1, Vec::new());
            }
            layers[node.layer].push(id);
        }
        let mut out = vec![[None, None]; nodes.len()];
        for (k, a) in arcs.iter().enumerate() {
            if a.tail < nodes.len() {
                out[a.tail][a.label as usize].get_or_insert(k);
            }
        }
        DecisionDiagram {
            nodes,
            arcs,
            layers,
            ordering,
            out,
        }
    }

    pub fn nodes(&self) -> &[DdNode] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[DdArc] {
        &self.arcs
    }

    /// Node ids per 0-based layer.
    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn ordering(&self) -> &VertexOrdering {
        &self.ordering
    }

    pub fn num_vertices(&self) -> usize {
        self.ordering.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn root(&self) -> usize {
        self.layers[0][0]
    }

    pub fn terminal(&self) -> usize {
        self.layers[self.num_vertices()][0]
    }

    /// Outgoing arc of `node` with the given label.
    pub fn out_arc(&self, node: usize, label: bool) -> Option<usize> {
        self.out[node][label as usize]
    }

    /// Text dump: `node <id> <layer> <state-hex>` lines (1-based layers)
    /// followed by `arc <tail> <head> <label>` lines.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "node {id} {} {}", node.layer + 1, node.state.to_hex());
        }
        for a in &self.arcs {
            let _ = writeln!(s, "arc {} {} {}", a.tail, a.head, a.label as u8);
        }
        s
    }
}

/// Number of root-terminal paths, by one bottom-up pass.
pub fn count_paths(d: &DecisionDiagram) -> BigUint {
    let mut paths = vec![BigUint::zero(); d.nodes.len()];
    let Some(&t) = d.layers.last().and_then(|l| l.first()) else {
        return BigUint::zero();
    };
    paths[t] = BigUint::one();
    let mut by_tail: Vec<Vec<usize>> = vec![Vec::new(); d.nodes.len()];
    for a in &d.arcs {
        if a.tail < d.nodes.len() && a.head < d.nodes.len() {
            by_tail[a.tail].push(a.head);
        }
    }
    for layer in d.layers.iter().rev().skip(1) {
        for &u in layer {
            let mut total = BigUint::zero();
            for &h in &by_tail[u] {
                total += &paths[h];
            }
            paths[u] = total;
        }
    }
    d.layers
        .first()
        .and_then(|l| l.first())
        .map_or_else(BigUint::zero, |&r| paths[r].clone())
}

/// Stable set (original vertex ids, sorted) encoded by every r-t path.
pub fn enumerate_paths(d: &DecisionDiagram, limit: usize) -> Result<Vec<Vec<usize>>, DdError> {
    let count = count_paths(d);
    if count > BigUint::from(limit) {
        return Err(DdError::PathLimitExceeded { count, limit });
    }
    let mut result = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut chosen = Vec::new();
    collect_paths(d, d.root(), &mut chosen, &mut result);
    Ok(result)
}

fn collect_paths(d: &DecisionDiagram, u: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if u == d.terminal() {
        let mut set = chosen.clone();
        set.sort_unstable();
        out.push(set);
        return;
    }
    for label in [false, true] {
        let Some(a) = d.out_arc(u, label) else { continue };
        if label {
            chosen.push(d.ordering.vertex_at(d.nodes[u].layer));
        }
        collect_paths(d, d.arcs[a].head, chosen, out);
        if label {
            chosen.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LayerCount { expected: usize, found: usize },
    RootLayerSize(usize),
    TerminalLayerSize(usize),
    ArcEndpoint { arc: usize },
    ArcLayer { arc: usize },
    ZeroArcCount { node: usize, count: usize },
    OneArcCount { node: usize, count: usize },
    TerminalOutArc { arc: usize },
    DuplicateState { layer: usize, first: usize, second: usize },
    TransitionMismatch { arc: usize },
    Unreachable { node: usize },
    DeadEnd { node: usize },
    NotStable { set: Vec<usize> },
    DuplicatePath { set: Vec<usize> },
    PathCountMismatch { diagram: BigUint, oracle: BigUint },
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub path_count: BigUint,
    /// Whether path enumeration against the oracle ran.
    pub semantics_checked: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural checks always; semantic exactness when the diagram has at
/// most `enumeration_cap` paths and the graph is within oracle range.
pub fn validate(d: &DecisionDiagram, g: &Graph, enumeration_cap: usize) -> ValidationReport {
    let n = g.n();
    let mut v = Vec::new();
    let nn = d.nodes.len();
    if d.layers.len() != n + 1 || d.ordering.len() != n {
        v.push(Violation::LayerCount {
            expected: n + 1,
            found: d.layers.len(),
        });
        return ValidationReport {
            violations: v,
            path_count: BigUint::zero(),
            semantics_checked: false,
        };
    }
    if d.layers[0].len() != 1 {
        v.push(Violation::RootLayerSize(d.layers[0].len()));
    }
    if d.layers[n].len() != 1 {
        v.push(Violation::TerminalLayerSize(d.layers[n].len()));
    }

    let mut counts = vec![[0usize; 2]; nn];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nn];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); nn];
    for (k, a) in d.arcs.iter().enumerate() {
        if a.tail >= nn || a.head >= nn {
            v.push(Violation::ArcEndpoint { arc: k });
            continue;
        }
        let (tl, hl) = (d.nodes[a.tail].layer, d.nodes[a.head].layer);
        if tl == n {
            v.push(Violation::TerminalOutArc { arc: k });
        }
        if hl != tl + 1 {
            v.push(Violation::ArcLayer { arc: k });
        } else if tl < n {
            let vertex = d.ordering.vertex_at(tl);
            let state = &d.nodes[a.tail].state;
            let expected = if a.label {
                state.contains(vertex).then(|| {
                    let mut s = state.clone();
                    s.remove(vertex);
                    for &w in g.neighbors(vertex) {
                        s.remove(w);
                    }
                    s
                })
            } else {
                let mut s = state.clone();
                s.remove(vertex);
                Some(s)
            };
            if expected.as_ref() != Some(&d.nodes[a.head].state) {
                v.push(Violation::TransitionMismatch { arc: k });
            }
        }
        counts[a.tail][a.label as usize] += 1;
        succ[a.tail].push(a.head);
        pred[a.head].push(a.tail);
    }
    for (node, c) in counts.iter().enumerate() {
        if d.nodes[node].layer < n {
            if c[0] != 1 {
                v.push(Violation::ZeroArcCount { node, count: c[0] });
            }
            if c[1] > 1 {
                v.push(Violation::OneArcCount { node, count: c[1] });
            }
        }
    }
    for (layer, ids) in d.layers.iter().enumerate() {
        let mut seen: HashMap<&VertexSet, usize> = HashMap::new();
        for &id in ids {
            if let Some(&first) = seen.get(&d.nodes[id].state) {
                v.push(Violation::DuplicateState {
                    layer,
                    first,
                    second: id,
                });
            } else {
                seen.insert(&d.nodes[id].state, id);
            }
        }
    }
    let sweep = |starts: &[usize], adj: &[Vec<usize>]| {
        let mut seen = vec![false; nn];
        let mut stack: Vec<usize> = starts.to_vec();
        for &s in starts {
            seen[s] = true;
        }
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let from_root = sweep(&d.layers[0], &succ);
    let to_term = sweep(&d.layers[n], &pred);
    for node in 0..nn {
        if !from_root[node] {
            v.push(Violation::Unreachable { node });
        }
        if !to_term[node] {
            v.push(Violation::DeadEnd { node });
        }
    }

    let structurally_sound = v.is_empty();
    let path_count = if d.layers[0].is_empty() || d.layers[n].is_empty() {
        BigUint::zero()
    } else {
        count_paths(d)
    };
    let mut semantics_checked = false;
    if structurally_sound && n <= oracle::ENUMERATION_MAX_N && path_count <= BigUint::from(enumeration_cap) {
        semantics_checked = true;
        let sets = enumerate_paths(d, enumeration_cap).expect("count checked against cap");
        let mut distinct = HashSet::new();
        for s in &sets {
            if !g.is_stable(s) {
                v.push(Violation::NotStable { set: s.clone() });
            }
            if !distinct.insert(s.clone()) {
                v.push(Violation::DuplicatePath { set: s.clone() });
            }
        }
        let oracle_count = oracle::count_stable_sets(g, enumeration_cap.saturating_add(1))
            .expect("n within oracle guard");
        if BigUint::from(oracle_count) != path_count {
            v.push(Violation::PathCountMismatch {
                diagram: path_count.clone(),
                oracle: BigUint::from(oracle_count),
            });
        }
    }
    ValidationReport {
        violations: v,
        path_count,
        semantics_checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_edgeless, Graph};

    /// V = {1,2,3,4}, E = {13, 34, 42, 21, 32}, 0-based here.
    fn fig1() -> Graph {
        Graph::from_edges(4, [(0, 2), (2, 3), (3, 1), (1, 0), (2, 1)]).unwrap()
    }

    fn compile(g: &Graph) -> DecisionDiagram {
        compile_exact(g, &VertexOrdering::identity(g.n()), DEFAULT_NODE_LIMIT).unwrap()
    }

    #[test]
    fn fig1_diagram_shape() {
        let d = compile(&fig1());
        assert_eq!(d.layer_sizes(), vec![1, 2, 3, 2, 1]);
        assert_eq!(d.node_count(), 9);
        assert_eq!(d.arc_count(), 12);
        assert_eq!(d.nodes()[d.root()].state, VertexSet::full(4));
        assert_eq!(count_paths(&d), BigUint::from(6u32));
        let sets = enumerate_paths(&d, 100).unwrap();
        let mut sorted = sets.clone();
        sorted.sort();
        assert_eq!(sorted, vec![vec![], vec![0], vec![0, 3], vec![1], vec![2], vec![3]]);
        assert!(validate(&d, &fig1(), 1000).is_valid());
    }

    #[test]
    fn edgeless_diagram_is_a_chain() {
        let d = compile(&make_edgeless(3));
        assert_eq!(d.node_count(), 4);
        for layer in &d.layers()[..3] {
            let u = layer[0];
            assert!(d.out_arc(u, false).is_some() && d.out_arc(u, true).is_some());
        }
        assert_eq!(count_paths(&d), BigUint::from(8u32));
        let two = compile(&make_edgeless(2));
        let mut sets = enumerate_paths(&two, 10).unwrap();
        sets.sort();
        assert_eq!(sets, vec![vec![], vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn complete_graph_counts() {
        assert_eq!(count_paths(&compile(&make_complete(4))), BigUint::from(5u32));
        let mut sets = enumerate_paths(&compile(&make_complete(3)), 10).unwrap();
        sets.sort();
        assert_eq!(sets, vec![vec![], vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn errors() {
        let g = fig1();
        assert_eq!(
            compile_exact(&g, &VertexOrdering::identity(3), 100).unwrap_err(),
            DdError::OrderingMismatch { ordering: 3, n: 4 }
        );
        assert_eq!(
            compile_exact(&g, &VertexOrdering::identity(4), 5).unwrap_err(),
            DdError::NodeLimitExceeded {
                limit: 5,
                layer: 3,
                nodes: 6
            }
        );
        let empty = Graph::from_edges(0, []).unwrap();
        assert_eq!(
            compile_exact(&empty, &VertexOrdering::identity(0), 10).unwrap_err(),
            DdError::EmptyGraph
        );
        assert!(matches!(
            enumerate_paths(&compile(&g), 5),
            Err(DdError::PathLimitExceeded { limit: 5, .. })
        ));
    }

    #[test]
    fn dump_format() {
        let d = compile(&make_edgeless(1));
        assert_eq!(d.dump(), "node 0 1 1\nnode 1 2 0\narc 0 1 0\narc 0 1 1\n");
        let wide = VertexSet::from_vertices(70, [0, 69]);
        assert_eq!(wide.to_hex(), "200000000000000001");
    }

    #[test]
    fn injected_duplicate_state_is_reported() {
        let g = fig1();
        let d = compile(&g);
        let mut nodes = d.nodes().to_vec();
        let mut arcs = d.arcs().to_vec();
        // clone a layer-3 node and reroute one incoming arc to the copy
        let victim = d.layers()[2][0];
        nodes.push(nodes[victim].clone());
        let copy = nodes.len() - 1;
        let incoming = arcs.iter().position(|a| a.head == victim).unwrap();
        arcs[incoming].head = copy;
        for a in d.arcs().iter().filter(|a| a.tail == victim) {
            arcs.push(DdArc { tail: copy, ..*a });
        }
        let bad = DecisionDiagram::from_parts(d.ordering().clone(), nodes, arcs);
        let report = validate(&bad, &g, 1000);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DuplicateState { layer: 2, .. })));
    }

    #[test]
    fn injected_dangling_node_is_reported() {
        let g = fig1();
        let d = compile(&g);
        let mut nodes = d.nodes().to_vec();
        let mut arcs = d.arcs().to_vec();
        nodes.push(DdNode {
            layer: 2,
            state: VertexSet::from_vertices(4, [3]),
        });
        let dangling = nodes.len() - 1;
        let target = d.layers()[3][0];
        arcs.push(DdArc {
            tail: dangling,
            head: target,
            label: false,
        });
        let bad = DecisionDiagram::from_parts(d.ordering().clone(), nodes, arcs);
        let report = validate(&bad, &g, 1000);
        assert!(report.violations.contains(&Violation::Unreachable { node: dangling }));
    }

    #[test]
    fn wrong_transition_is_reported() {
        let g = fig1();
        let d = compile(&g);
        let mut arcs = d.arcs().to_vec();
        // point the root's 1-arc at the other layer-2 node
        let one = d.out_arc(d.root(), true).unwrap();
        let other = d.layers()[1].iter().copied().find(|&u| u != arcs[one].head).unwrap();
        arcs[one].head = other;
        let bad = DecisionDiagram::from_parts(d.ordering().clone(), d.nodes().to_vec(), arcs);
        let report = validate(&bad, &g, 1000);
        assert!(report.violations.contains(&Violation::TransitionMismatch { arc: one }));
    }
}
