//! Flow models over a stable-set decision diagram, and the transformations
//! between weighted stable-set covers and r-t flows.
//!
//! One variable per arc with bounds `0 <= y_a <= n`, one covering row per
//! layer (the 1-arcs leaving layer `j` carry at least one unit), one
//! conservation row per internal node, and the root outflow as objective.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::cover::{dsatur, Coloring};
use crate::dd::DecisionDiagram;
use crate::graph::Graph;
use crate::ratlp::{
    ilp_solve, lp_solve_with, IlpError, IlpOptions, IlpStatus, LpError, LpModel, LpOptions, LpSolution,
    LpStatus,
    Rational, Relation,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("diagram has {layers} layers but the graph has {n} vertices")]
    SizeMismatch { layers: usize, n: usize },
    #[error("flow vector has {found} entries, diagram has {arcs} arcs")]
    LengthMismatch { found: usize, arcs: usize },
    #[error("no r-t path encodes the set {set:?}; the diagram is not exact or the set is not stable")]
    PathNotFound { set: Vec<usize> },
    #[error("negative flow on arc {arc}")]
    NegativeFlow { arc: usize },
    #[error("flow conservation violated at node {node}")]
    ConservationViolated { node: usize },
    #[error("positive flow remains but no r-t path can be traced from node {node}")]
    Stuck { node: usize },
    #[error("flow LP ended with status {0:?}")]
    NotOptimal(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
}

/// Stable sets with rational weights. Sets are sorted lists of 0-based
/// vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightedCover {
    entries: Vec<(Vec<usize>, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverParseError {
    #[error("line {line}: expected `w=<p>/<q> S={{...}}`")]
    Syntax { line: usize },
    #[error("line {line}: vertex ids are 1-based")]
    ZeroVertex { line: usize },
    #[error("total line says {stated}, entries sum to {actual}")]
    TotalMismatch { stated: Rational, actual: Rational },
}

impl WeightedCover {
    pub fn new(entries: Vec<(Vec<usize>, Rational)>) -> Self {
        let entries = entries
            .into_iter()
            .map(|(mut s, w)| {
                s.sort_unstable();
                s.dedup();
                (s, w)
            })
            .collect();
        WeightedCover { entries }
    }

    pub fn entries(&self) -> &[(Vec<usize>, Rational)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> Rational {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Sums the weights of repeated sets, keeping first-appearance order.
    pub fn merged(&self) -> WeightedCover {
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        let mut out: Vec<(Vec<usize>, Rational)> = Vec::new();
        for (s, w) in &self.entries {
            match index.get(s.as_slice()) {
                Some(&k) => out[k].1 += w,
                None => {
                    index.insert(s, out.len());
                    out.push((s.clone(), w.clone()));
                }
            }
        }
        WeightedCover { entries: out }
    }

    /// Sum of weights of the sets containing each vertex.
    pub fn coverage(&self, n: usize) -> Vec<Rational> {
        let mut cov = vec![Rational::zero(); n];
        for (s, w) in &self.entries {
            for &v in s {
                if v < n {
                    cov[v] += w;
                }
            }
        }
        cov
    }

    /// One `w=<p>/<q> S={v1,...}` line per set (1-based ids) and a final
    /// `total=<p>/<q>` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, w) in &self.entries {
            let ids: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
            let _ = writeln!(out, "w={w} S={{{}}}", ids.join(","));
        }
        let _ = writeln!(out, "total={}", self.total_weight());
        out
    }

    pub fn parse(text: &str) -> Result<Self, CoverParseError> {
        let mut entries = Vec::new();
        let mut stated = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('c') {
                continue;
            }
            let syntax = || CoverParseError::Syntax { line };
            if let Some(total) = t.strip_prefix("total=") {
                stated = Some(total.parse::<Rational>().map_err(|_| syntax())?);
                continue;
            }
            let rest = t.strip_prefix("w=").ok_or_else(syntax)?;
            let (w, set) = rest.split_once(char::is_whitespace).ok_or_else(syntax)?;
            let w: Rational = w.parse().map_err(|_| syntax())?;
            let inner = set
                .trim()
                .strip_prefix("S={")
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(syntax)?;
            let mut vs = Vec::new();
            for tok in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let v: usize = tok.parse().map_err(|_| syntax())?;
                if v == 0 {
                    return Err(CoverParseError::ZeroVertex { line });
                }
                vs.push(v - 1);
            }
            entries.push((vs, w));
        }
        let cover = WeightedCover::new(entries);
        if let Some(stated) = stated {
            let actual = cover.total_weight();
            if stated != actual {
                return Err(CoverParseError::TotalMismatch { stated, actual });
            }
        }
        Ok(cover)
    }
}

/// Flow LP over a diagram; variable `k` is arc `k`.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub lp: LpModel,
    /// Row index of the covering row for each 0-based layer.
    pub cover_rows: Vec<usize>,
    /// Covering row per original vertex.
    pub cover_row_of_vertex: Vec<usize>,
    pub conservation_rows: Vec<usize>,
    /// 1-arc variables leaving each layer.
    pub layer_one_arcs: Vec<Vec<usize>>,
    pub integral: bool,
}

impl FlowModel {
    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }

    pub fn integer_vars(&self) -> Vec<usize> {
        if self.integral {
            (0..self.lp.num_vars()).collect()
        } else {
            Vec::new()
        }
    }
}

fn check_sizes(d: &DecisionDiagram, g: &Graph) -> Result<(), FlowError> {
    if d.layers().len() != g.n() + 1 || d.num_vertices() != g.n() {
        return Err(FlowError::SizeMismatch {
            layers: d.layers().len(),
            n: g.n(),
        });
    }
    Ok(())
}

pub fn build_flow_model(d: &DecisionDiagram, g: &Graph, relax: bool) -> Result<FlowModel, FlowError> {
    check_sizes(d, g)?;
    let n = g.n();
    let cap = Rational::from(n);
    let root = d.root();
    let mut lp = LpModel::new();
    for (k, a) in d.arcs().iter().enumerate() {
        let cost = if a.tail == root {
            Rational::one()
        } else {
            Rational::zero()
        };
        let var = lp.add_var(Rational::zero(), Some(cap.clone()), cost);
        lp.set_var_name(var, format!("y{k}"));
    }
    let mut layer_one_arcs = vec![Vec::new(); n];
    let mut inflow: Vec<Vec<usize>> = vec![Vec::new(); d.node_count()];
    let mut outflow: Vec<Vec<usize>> = vec![Vec::new(); d.node_count()];
    for (k, a) in d.arcs().iter().enumerate() {
        if a.label {
            layer_one_arcs[d.nodes()[a.tail].layer].push(k);
        }
        outflow[a.tail].push(k);
        inflow[a.head].push(k);
    }
    let mut cover_rows = Vec::with_capacity(n);
    let mut cover_row_of_vertex = vec![0; n];
    for (j, arcs) in layer_one_arcs.iter().enumerate() {
        let row = lp.add_constraint(
            arcs.iter().map(|&k| (k, Rational::one())),
            Relation::Ge,
            Rational::one(),
        );
        cover_rows.push(row);
        cover_row_of_vertex[d.ordering().vertex_at(j)] = row;
    }
    let terminal = d.terminal();
    let mut conservation_rows = Vec::new();
    for node in 0..d.node_count() {
        if node == root || node == terminal {
            continue;
        }
        let coeffs = inflow[node]
            .iter()
            .map(|&k| (k, Rational::one()))
            .chain(outflow[node].iter().map(|&k| (k, -Rational::one())));
        conservation_rows.push(lp.add_constraint(coeffs, Relation::Eq, Rational::zero()));
    }
    Ok(FlowModel {
        lp,
        cover_rows,
        cover_row_of_vertex,
        conservation_rows,
        layer_one_arcs,
        integral: !relax,
    })
}

#[derive(Debug, Clone)]
pub struct FractionalSolution {
    pub chi_f: Rational,
    pub flow: Vec<Rational>,
    pub lp: LpSolution,
}

/// Optimum of the relaxed flow model; on an exact diagram this is the
/// fractional chromatic number.
pub fn solve_fractional(d: &DecisionDiagram, g: &Graph) -> Result<FractionalSolution, FlowError> {
    solve_fractional_until(d, g, None)
}

/// As [`solve_fractional`], failing with [`LpError::TimeLimit`] once
/// `deadline` passes.
pub fn solve_fractional_until(
    d: &DecisionDiagram,
    g: &Graph,
    deadline: Option<Instant>,
) -> Result<FractionalSolution, FlowError> {
    let model = build_flow_model(d, g, true)?;
    let opts = LpOptions {
        deadline,
        ..LpOptions::default()
    };
    let lp = lp_solve_with(&model.lp, &opts)?;
    if lp.status != LpStatus::Optimal {
        return Err(FlowError::NotOptimal(lp.status));
    }
    Ok(FractionalSolution {
        chi_f: lp.objective.clone(),
        flow: lp.values.clone(),
        lp,
    })
}

#[derive(Debug, Clone, Default)]
pub struct IntegralOptions {
    pub time_limit: Option<Duration>,
    /// Seed branch-and-bound with the flow of a DSATUR coloring.
    pub dsatur_incumbent: bool,
}

#[derive(Debug, Clone)]
pub struct IntegralSolution {
    pub status: IlpStatus,
    /// Best integral flow value found (an upper bound on the chromatic number).
    pub best: Option<usize>,
    /// Proven lower bound.
    pub lower_bound: Option<usize>,
    pub flow: Option<Vec<Rational>>,
    pub nodes: u64,
}

impl IntegralSolution {
    /// The chromatic number, when optimality was proven.
    pub fn chi(&self) -> Option<usize> {
        (self.status == IlpStatus::Optimal).then_some(self.best).flatten()
    }
}

fn rational_to_usize(r: &Rational) -> usize {
    r.to_i64()
        .and_then(|v| usize::try_from(v).ok())
        .expect("flow values are small nonnegative integers")
}

/// Integral flow model by branch-and-bound; on an exact diagram the optimum
/// is the chromatic number.
pub fn solve_integral(d: &DecisionDiagram, g: &Graph, opts: &IntegralOptions) -> Result<IntegralSolution, FlowError> {
    let model = build_flow_model(d, g, false)?;
    let incumbent = if opts.dsatur_incumbent {
        let cover = coloring_to_cover(&dsatur(g));
        Some(cover_to_flow(&cover, d)?)
    } else {
        None
    };
    let ilp_opts = IlpOptions {
        time_limit: opts.time_limit,
        incumbent,
        ..IlpOptions::default()
    };
    let r = ilp_solve(&model.lp, &model.integer_vars(), &ilp_opts)?;
    let best = r.incumbent.as_ref().map(|p| rational_to_usize(&p.objective));
    let lower_bound = r.dual_bound.as_ref().map(|b| rational_to_usize(&b.ceil()));
    Ok(IntegralSolution {
        status: r.status,
        best,
        lower_bound,
        flow: r.incumbent.map(|p| p.values),
        nodes: r.nodes,
    })
}

/// Color classes as unit-weight stable sets.
pub fn coloring_to_cover(c: &Coloring) -> WeightedCover {
    let mut classes = vec![Vec::new(); c.color_count()];
    for (v, &col) in c.colors().iter().enumerate() {
        classes[col].push(v);
    }
    WeightedCover::new(classes.into_iter().map(|s| (s, Rational::one())).collect())
}

/// Routes each weighted set along the unique r-t path whose 1-arcs are
/// exactly the set's layers.
pub fn cover_to_flow(z: &WeightedCover, d: &DecisionDiagram) -> Result<Vec<Rational>, FlowError> {
    let n = d.num_vertices();
    let mut flow = vec![Rational::zero(); d.arc_count()];
    let mut member = vec![false; n];
    for (set, w) in z.entries() {
        let not_found = || FlowError::PathNotFound { set: set.clone() };
        if set.iter().any(|&v| v >= n) {
            return Err(not_found());
        }
        for &v in set {
            member[v] = true;
        }
        let mut path = Vec::with_capacity(n);
        let mut u = d.root();
        for j in 0..n {
            let take = member[d.ordering().vertex_at(j)];
            let Some(a) = d.out_arc(u, take) else {
                for &v in set {
                    member[v] = false;
                }
                return Err(not_found());
            };
            path.push(a);
            u = d.arcs()[a].head;
        }
        for &v in set {
            member[v] = false;
        }
        for a in path {
            flow[a] += w;
        }
    }
    Ok(flow)
}

/// Path decomposition of a conservative nonnegative flow, without merging
/// repeated sets. Each path's weight is its bottleneck residual.
pub fn decompose_paths(y: &[Rational], d: &DecisionDiagram) -> Result<Vec<(Vec<usize>, Rational)>, FlowError> {
    if y.len() != d.arc_count() {
        return Err(FlowError::LengthMismatch {
            found: y.len(),
            arcs: d.arc_count(),
        });
    }
    if let Some(arc) = y.iter().position(Rational::is_negative) {
        return Err(FlowError::NegativeFlow { arc });
    }
    let (root, terminal) = (d.root(), d.terminal());
    let mut balance = vec![Rational::zero(); d.node_count()];
    for (a, arc) in d.arcs().iter().enumerate() {
        balance[arc.head] += &y[a];
        balance[arc.tail] -= &y[a];
    }
    if let Some(node) = (0..d.node_count()).find(|&u| u != root && u != terminal && !balance[u].is_zero()) {
        return Err(FlowError::ConservationViolated { node });
    }

    let mut residual = y.to_vec();
    let mut paths = Vec::new();
    loop {
        let root_out: Vec<usize> = [true, false]
            .iter()
            .filter_map(|&l| d.out_arc(root, l))
            .filter(|&a| residual[a].is_positive())
            .collect();
        if root_out.is_empty() {
            break;
        }
        let mut u = root;
        let mut path = Vec::new();
        while u != terminal {
            let next = [true, false]
                .iter()
                .filter_map(|&l| d.out_arc(u, l))
                .find(|&a| residual[a].is_positive());
            let Some(a) = next else {
                return Err(FlowError::Stuck { node: u });
            };
            path.push(a);
            u = d.arcs()[a].head;
        }
        let bottleneck = path
            .iter()
            .map(|&a| &residual[a])
            .min()
            .expect("path has n arcs")
            .clone();
        let mut set = Vec::new();
        for &a in &path {
            residual[a] -= &bottleneck;
            let arc = d.arcs()[a];
            if arc.label {
                set.push(d.ordering().vertex_at(d.nodes()[arc.tail].layer));
            }
        }
        set.sort_unstable();
        paths.push((set, bottleneck));
    }
    if let Some(a) = residual.iter().position(Rational::is_positive) {
        return Err(FlowError::Stuck { node: d.arcs()[a].tail });
    }
    Ok(paths)
}

/// Path decomposition with repeated sets merged.
pub fn flow_to_cover(y: &[Rational], d: &DecisionDiagram) -> Result<WeightedCover, FlowError> {
    Ok(WeightedCover::new(decompose_paths(y, d)?).merged())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{compile_exact, DEFAULT_NODE_LIMIT};
    use crate::graph::{make_complete, make_cycle, make_edgeless, make_petersen, VertexOrdering};

    fn fig1() -> Graph {
        Graph::from_edges(4, [(0, 2), (2, 3), (3, 1), (1, 0), (2, 1)]).unwrap()
    }

    fn dd(g: &Graph) -> DecisionDiagram {
        compile_exact(g, &VertexOrdering::identity(g.n()), DEFAULT_NODE_LIMIT).unwrap()
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn model_sizes() {
        let g = fig1();
        let m = build_flow_model(&dd(&g), &g, true).unwrap();
        assert_eq!(m.lp.num_vars(), 12);
        assert_eq!(m.cover_rows.len(), 4);
        assert_eq!(m.conservation_rows.len(), 7);

        let e1 = make_edgeless(1);
        let m = build_flow_model(&dd(&e1), &e1, true).unwrap();
        assert_eq!((m.lp.num_vars(), m.cover_rows.len(), m.conservation_rows.len()), (2, 1, 0));
        assert!(m.lp.upper(0) == Some(&q("1")));

        let other = make_edgeless(2);
        assert!(matches!(
            build_flow_model(&dd(&e1), &other, true),
            Err(FlowError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn fractional_values() {
        let k4 = make_complete(4);
        assert_eq!(solve_fractional(&dd(&k4), &k4).unwrap().chi_f, q("4"));
        let c5 = make_cycle(5);
        assert_eq!(solve_fractional(&dd(&c5), &c5).unwrap().chi_f, q("5/2"));
        let p = make_petersen();
        assert_eq!(solve_fractional(&dd(&p), &p).unwrap().chi_f, q("5/2"));
    }

    #[test]
    fn integral_fig1() {
        let g = fig1();
        let d = dd(&g);
        for dsatur_incumbent in [false, true] {
            let opts = IntegralOptions {
                dsatur_incumbent,
                ..IntegralOptions::default()
            };
            let s = solve_integral(&d, &g, &opts).unwrap();
            assert_eq!(s.chi(), Some(3));
            let flow = s.flow.unwrap();
            assert!(flow.iter().all(Rational::is_integer));
            let cover = flow_to_cover(&flow, &d).unwrap();
            assert_eq!(cover.total_weight(), q("3"));
        }
    }

    #[test]
    fn cover_round_trip_fig1() {
        let g = fig1();
        let d = dd(&g);
        let z = WeightedCover::new(vec![
            (vec![0, 3], q("1")),
            (vec![1], q("1")),
            (vec![2], q("1")),
        ]);
        let y = cover_to_flow(&z, &d).unwrap();
        let model = build_flow_model(&d, &g, true).unwrap();
        assert!(model.lp.is_feasible(&y));
        assert_eq!(model.lp.objective_value(&y), q("3"));
        let back = flow_to_cover(&y, &d).unwrap();
        assert_eq!(back.total_weight(), q("3"));

        let empty = WeightedCover::new(vec![(vec![], q("1"))]);
        let y = cover_to_flow(&empty, &d).unwrap();
        assert!(!model.lp.is_feasible(&y));
        assert_eq!(y.iter().filter(|v| v.is_positive()).count(), 4);

        let bad = WeightedCover::new(vec![(vec![1, 2], q("1"))]);
        assert_eq!(
            cover_to_flow(&bad, &d).unwrap_err(),
            FlowError::PathNotFound { set: vec![1, 2] }
        );
    }

    #[test]
    fn decomposition_errors() {
        let g = fig1();
        let d = dd(&g);
        let mut y = vec![Rational::zero(); d.arc_count()];
        y[0] = q("1");
        assert!(matches!(
            flow_to_cover(&y, &d),
            Err(FlowError::ConservationViolated { .. })
        ));
        y[0] = q("-1");
        assert_eq!(flow_to_cover(&y, &d).unwrap_err(), FlowError::NegativeFlow { arc: 0 });
        assert!(matches!(
            flow_to_cover(&y[..3], &d),
            Err(FlowError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cover_text_round_trip() {
        let z = WeightedCover::new(vec![(vec![3, 0], q("1/2")), (vec![], q("2"))]);
        let text = z.to_text();
        assert_eq!(text, "w=1/2 S={1,4}\nw=2/1 S={}\ntotal=5/2\n");
        assert_eq!(WeightedCover::parse(&text).unwrap(), z);
        assert!(matches!(
            WeightedCover::parse("w=1/2 S={1}\ntotal=1/1"),
            Err(CoverParseError::TotalMismatch { .. })
        ));
        assert_eq!(
            WeightedCover::parse("w=1 S={0}"),
            Err(CoverParseError::ZeroVertex { line: 1 })
        );
        assert_eq!(WeightedCover::parse("x"), Err(CoverParseError::Syntax { line: 1 }));
    }

    #[test]
    fn merging_sums_weights() {
        let z = WeightedCover::new(vec![
            (vec![0], q("1/2")),
            (vec![1], q("1")),
            (vec![0], q("1/2")),
        ]);
        let m = z.merged();
        assert_eq!(m.entries(), &[(vec![0], q("1")), (vec![1], q("1"))]);
    }
}
