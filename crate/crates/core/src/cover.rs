//! Cover verification, coloring extraction from integral covers, and the
//! DSATUR upper bound.

use std::fmt::Write as _;

use crate::flow::WeightedCover;
use crate::graph::Graph;
use crate::ratlp::Rational;

/// A proper vertex coloring with contiguous color ids `0..count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<usize>,
    count: usize,
}

impl Coloring {
    /// Relabels colors to `0..k` in order of first use.
    pub fn from_colors(raw: &[usize]) -> Self {
        let mut relabel = std::collections::HashMap::new();
        let colors = raw
            .iter()
            .map(|c| {
                let next = relabel.len();
                *relabel.entry(*c).or_insert(next)
            })
            .collect();
        Coloring {
            colors,
            count: relabel.len(),
        }
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn color_count(&self) -> usize {
        self.count
    }

    pub fn color_of(&self, v: usize) -> usize {
        self.colors[v]
    }

    /// True when no edge is monochromatic and every vertex has a color.
    pub fn is_proper(&self, g: &Graph) -> bool {
        self.colors.len() == g.n() && g.edges().all(|(u, v)| self.colors[u] != self.colors[v])
    }

    /// A `c colors <k>` summary line followed by `s <vertex> <color>` lines,
    /// both 1-based.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("c colors {}\n", self.count);
        for (v, c) in self.colors.iter().enumerate() {
            let _ = writeln!(out, "s {} {}", v + 1, c + 1);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    /// Sets (after merging) that contain an edge, with one offending edge.
    pub unstable: Vec<(Vec<usize>, (usize, usize))>,
    /// Vertices out of range in any set.
    pub out_of_range: Vec<usize>,
    /// Vertices whose coverage is below one, with their coverage.
    pub undercovered: Vec<(usize, Rational)>,
    pub nonpositive_weights: usize,
    pub total: Rational,
}

impl CoverReport {
    pub fn stable_ok(&self) -> bool {
        self.unstable.is_empty() && self.out_of_range.is_empty()
    }

    pub fn coverage_ok(&self) -> bool {
        self.undercovered.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.stable_ok() && self.coverage_ok() && self.nonpositive_weights == 0
    }
}

pub fn verify_cover(g: &Graph, z: &WeightedCover) -> CoverReport {
    let z = z.merged();
    let n = g.n();
    let mut out_of_range: Vec<usize> = z
        .entries()
        .iter()
        .flat_map(|(s, _)| s.iter().copied())
        .filter(|&v| v >= n)
        .collect();
    out_of_range.sort_unstable();
    out_of_range.dedup();
    let unstable = z
        .entries()
        .iter()
        .filter_map(|(s, _)| {
            s.iter().enumerate().find_map(|(i, &u)| {
                s[i + 1..]
                    .iter()
                    .find(|&&v| u < n && v < n && g.has_edge(u, v))
                    .map(|&v| (s.clone(), (u, v)))
            })
        })
        .collect();
    let undercovered = z
        .coverage(n)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c < Rational::one())
        .collect();
    CoverReport {
        unstable,
        out_of_range,
        undercovered,
        nonpositive_weights: z.entries().iter().filter(|(_, w)| !w.is_positive()).count(),
        total: z.total_weight(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("vertex {0} is not covered")]
    Uncovered(usize),
}

/// Gives each vertex the color of the first set containing it, then
/// compacts the color ids.
pub fn extract_coloring(g: &Graph, z: &WeightedCover) -> Result<Coloring, ExtractError> {
    let mut raw = vec![None; g.n()];
    for (k, (s, w)) in z.entries().iter().enumerate() {
        if !w.is_positive() {
            continue;
        }
        for &v in s {
            if v < g.n() && raw[v].is_none() {
                raw[v] = Some(k);
            }
        }
    }
    let raw: Vec<usize> = raw
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or(ExtractError::Uncovered(v)))
        .collect::<Result<_, _>>()?;
    // order colors by set index so that ids follow serialized order
    let mut used: Vec<usize> = raw.clone();
    used.sort_unstable();
    used.dedup();
    let colors = raw
        .iter()
        .map(|c| used.binary_search(c).expect("present"))
        .collect();
    Ok(Coloring {
        colors,
        count: used.len(),
    })
}

/// DSATUR: highest saturation first, ties by degree among uncolored
/// vertices, then lowest id; smallest feasible color.
pub fn dsatur(g: &Graph) -> Coloring {
    let n = g.n();
    let mut colors: Vec<Option<usize>> = vec![None; n];
    let mut seen: Vec<Vec<bool>> = vec![Vec::new(); n];
    let mut saturation = vec![0usize; n];
    let mut uncolored_degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut count = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| colors[v].is_none())
            .max_by_key(|&v| (saturation[v], uncolored_degree[v], std::cmp::Reverse(v)))
            .expect("an uncolored vertex remains");
        let c = (0..)
            .find(|&c| !seen[v].get(c).copied().unwrap_or(false))
            .expect("some color is free");
        colors[v] = Some(c);
        count = count.max(c + 1);
        for &u in g.neighbors(v) {
            uncolored_degree[u] -= 1;
            if colors[u].is_some() {
                continue;
            }
            let s = &mut seen[u];
            if s.len() <= c {
                s.resize(c + 1, false);
            }
            if !s[c] {
                s[c] = true;
                saturation[u] += 1;
            }
        }
    }
    Coloring {
        colors: colors.into_iter().map(|c| c.expect("all colored")).collect(),
        count,
    }
}
