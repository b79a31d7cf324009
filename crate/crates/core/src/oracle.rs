//! Brute-force ground truth for small graphs: stable-set enumeration, the
//! set-cover LP over stable sets, and exact chromatic numbers.
//!
//! Nothing here touches decision diagrams; the LP is built column-per-set.

use crate::flow::WeightedCover;
use crate::graph::Graph;
use crate::ratlp::{lp_solve, LpError, LpModel, LpStatus, Rational, Relation};

pub const ENUMERATION_MAX_N: usize = 30;
pub const CHROMATIC_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("graph has {n} vertices, oracle guard is {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("set-cover LP did not reach an optimum: {0:?}")]
    NotOptimal(LpStatus),
}

fn guard(g: &Graph, max: usize) -> Result<(), OracleError> {
    if g.n() > max {
        Err(OracleError::TooLarge { n: g.n(), max })
    } else {
        Ok(())
    }
}

fn adjacency_masks(g: &Graph) -> Vec<u64> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &u| m | 1 << u))
        .collect()
}

fn mask_to_vec(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

/// Visits every stable set once, in lexicographic order of sorted vertex
/// lists. The callback returns `false` to stop.
fn for_each_stable(g: &Graph, mut visit: impl FnMut(u64) -> bool) {
    let adj = adjacency_masks(g);
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // stack of (set, candidates greater than the last vertex)
    fn rec(set: u64, cand: u64, adj: &[u64], visit: &mut dyn FnMut(u64) -> bool) -> bool {
        if !visit(set) {
            return false;
        }
        let mut rest = cand;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            // only vertices after v stay candidates
            if !rec(set | 1 << v, rest & !adj[v], adj, visit) {
                return false;
            }
        }
        true
    }
    rec(0, all, &adj, &mut visit);
}

pub fn enumerate_stable_sets(g: &Graph, maximal_only: bool) -> Result<Vec<Vec<usize>>, OracleError> {
    guard(g, ENUMERATION_MAX_N)?;
    let adj = adjacency_masks(g);
    let n = g.n();
    let mut out = Vec::new();
    for_each_stable(g, |set| {
        let maximal = (0..n).all(|v| set >> v & 1 == 1 || adj[v] & set != 0);
        if !maximal_only || maximal {
            out.push(mask_to_vec(set));
        }
        true
    });
    Ok(out)
}

/// Number of stable sets (including the empty set), saturating at
/// `stop_after`.
pub fn count_stable_sets(g: &Graph, stop_after: usize) -> Result<usize, OracleError> {
    guard(g, ENUMERATION_MAX_N)?;
    let mut count = 0usize;
    for_each_stable(g, |_| {
        count += 1;
        count < stop_after
    });
    Ok(count)
}

/// Set-cover LP `min sum z_S` s.t. every vertex covered at least once, over
/// the given stable sets. Returns the optimum and the positive part of the
/// basic optimal solution.
pub fn vclp_solve_over(g: &Graph, sets: &[Vec<usize>]) -> Result<(Rational, WeightedCover), OracleError> {
    let mut model = LpModel::new();
    let vars: Vec<usize> = sets
        .iter()
        .map(|_| model.add_var(Rational::zero(), None, Rational::one()))
        .collect();
    for v in 0..g.n() {
        let row = sets
            .iter()
            .zip(&vars)
            .filter(|(s, _)| s.contains(&v))
            .map(|(_, &x)| (x, Rational::one()));
        model.add_constraint(row, Relation::Ge, Rational::one());
    }
    let sol = lp_solve(&model)?;
    if sol.status != LpStatus::Optimal {
        return Err(OracleError::NotOptimal(sol.status));
    }
    let cover = WeightedCover::new(
        sets.iter()
            .zip(&sol.values)
            .filter(|(_, z)| z.is_positive())
            .map(|(s, z)| (s.clone(), z.clone()))
            .collect(),
    );
    Ok((sol.objective, cover))
}

/// Fractional chromatic number from the set-cover LP over maximal stable sets.
pub fn vclp_solve(g: &Graph) -> Result<Rational, OracleError> {
    vclp_basic_optimum(g).map(|(value, _)| value)
}

/// Optimum and a basic optimal cover over maximal stable sets.
pub fn vclp_basic_optimum(g: &Graph) -> Result<(Rational, WeightedCover), OracleError> {
    let sets = enumerate_stable_sets(g, true)?;
    vclp_solve_over(g, &sets)
}

/// Maximum clique size by branch and bound on bitmasks.
pub fn max_clique(g: &Graph) -> Result<usize, OracleError> {
    guard(g, ENUMERATION_MAX_N)?;
    let adj = adjacency_masks(g);
    fn rec(size: usize, cand: u64, adj: &[u64], best: &mut usize) {
        if cand == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let mut rest = cand;
        while rest != 0 {
            if size + rest.count_ones() as usize <= *best {
                return;
            }
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            rec(size + 1, rest & adj[v], adj, best);
        }
    }
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    rec(0, all, &adj, &mut best);
    Ok(best)
}

/// Exact chromatic number: tries `k = clique, clique + 1, ...` with a
/// backtracking k-coloring search.
pub fn chromatic_number_bf(g: &Graph) -> Result<usize, OracleError> {
    guard(g, CHROMATIC_MAX_N)?;
    let n = g.n();
    if n == 0 {
        return Ok(0);
    }
    // color high-degree vertices first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut k = max_clique(g)?.max(1);
    loop {
        let mut colors = vec![usize::MAX; n];
        if color_with(g, &order, 0, k, &mut colors, 0) {
            return Ok(k);
        }
        k += 1;
    }
}

fn color_with(g: &Graph, order: &[usize], idx: usize, k: usize, colors: &mut [usize], used: usize) -> bool {
    if idx == order.len() {
        return true;
    }
    let v = order[idx];
    // a fresh color is symmetric with any other fresh color
    let limit = (used + 1).min(k);
    for c in 0..limit {
        if g.neighbors(v).iter().all(|&u| colors[u] != c) {
            colors[v] = c;
            if color_with(g, order, idx + 1, k, colors, used.max(c + 1)) {
                return true;
            }
            colors[v] = usize::MAX;
        }
    }
    false
}
