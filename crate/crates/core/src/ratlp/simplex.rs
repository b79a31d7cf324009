//! Revised bounded-variable primal and dual simplex, generic over the
//! scalar type.
//!
//! The basis inverse is kept in product form: a list of eta columns built
//! by reinversion from the identity, extended by one eta per pivot, and
//! rebuilt every [`REFACTOR_EVERY`] pivots. Reinversion also recomputes the
//! basic values and reduced costs, so `f64` runs do not drift.

use std::fmt::Debug;
use std::time::Instant;

use super::lp::{LpError, LpModel, LpOptions, LpSolution, LpStatus, Relation};
use super::rational::Rational;

const NONBASIC: usize = usize::MAX;
const REFACTOR_EVERY: usize = 100;

/// Field operations plus the comparisons the simplex needs. Exact for
/// [`Rational`], tolerance-based for `f64`.
pub(crate) trait Scalar: Clone + Default + Debug + PartialOrd {
    /// Exact runs use Bland's rule against cycling; float runs rely on the
    /// pivot cap instead.
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn magnitude(&self) -> Self;
    fn near_zero(&self) -> bool;
    fn definitely_positive(&self) -> bool;
    fn definitely_negative(&self) -> bool;
    /// `a < b` beyond tolerance.
    fn less(a: &Self, b: &Self) -> bool;
    /// Whether `a` is an acceptable pivot next to the largest candidate.
    fn stable_pivot(a: &Self, largest: &Self) -> bool;
    /// Bound violation the ratio tests may accept in exchange for a larger
    /// pivot.
    fn ratio_slack() -> Self;
    /// Whether `a` is large enough to pivot on during an update.
    fn usable_pivot(a: &Self) -> bool;
    /// `a < b` by more than the primal feasibility tolerance.
    fn below(a: &Self, b: &Self) -> bool;
    /// `a > b` by more than the primal feasibility tolerance.
    fn above(a: &Self, b: &Self) -> bool {
        Self::below(&a.negated(), &b.negated())
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self) -> bool {
        self.is_zero()
    }
    fn definitely_positive(&self) -> bool {
        self.is_positive()
    }
    fn definitely_negative(&self) -> bool {
        self.is_negative()
    }
    fn less(a: &Self, b: &Self) -> bool {
        a < b
    }
    fn stable_pivot(a: &Self, _largest: &Self) -> bool {
        !a.is_zero()
    }
    fn ratio_slack() -> Self {
        Rational::zero()
    }
    fn usable_pivot(a: &Self) -> bool {
        !a.is_zero()
    }
    fn below(a: &Self, b: &Self) -> bool {
        a < b
    }
}

const TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(q: &Rational) -> Self {
        q.to_f64()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn near_zero(&self) -> bool {
        self.abs() <= TOL
    }
    fn definitely_positive(&self) -> bool {
        *self > TOL
    }
    fn definitely_negative(&self) -> bool {
        *self < -TOL
    }
    fn less(a: &Self, b: &Self) -> bool {
        *a < *b - TOL * (1.0 + b.abs())
    }
    fn stable_pivot(a: &Self, largest: &Self) -> bool {
        a.abs() > 1e-7 && a.abs() >= 0.01 * largest.abs()
    }
    fn ratio_slack() -> Self {
        TOL
    }
    fn usable_pivot(a: &Self) -> bool {
        a.abs() > 1e-7
    }
    fn below(a: &Self, b: &Self) -> bool {
        *a < *b - FEAS_TOL * (1.0 + b.abs())
    }
}

type SparseVec<T> = Vec<(u32, T)>;

/// A ratio test whose only blocking entries were too small to pivot on.
struct Tiny;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot cap was reached.
    Stalled,
}

/// Elementary column transform replacing row `row` of the identity.
#[derive(Debug, Clone)]
struct Eta<T> {
    row: u32,
    pivot: T,
    /// Off-pivot entries `-alpha_i / alpha_p`.
    rest: SparseVec<T>,
}

#[derive(Debug, Clone)]
struct Factor<T> {
    etas: Vec<Eta<T>>,
    updates: usize,
}

impl<T: Scalar> Factor<T> {
    fn new() -> Self {
        Factor {
            etas: Vec::new(),
            updates: 0,
        }
    }

    fn push(&mut self, row: usize, alpha: &[T]) {
        let inv = T::one().over(&alpha[row]);
        let neg_inv = inv.negated();
        let rest = alpha
            .iter()
            .enumerate()
            .filter(|(i, a)| *i != row && !a.near_zero())
            .map(|(i, a)| (i as u32, a.times(&neg_inv)))
            .collect();
        self.etas.push(Eta {
            row: row as u32,
            pivot: inv,
            rest,
        });
    }

    /// `v <- B^-1 v`.
    fn ftran(&self, v: &mut [T]) {
        for eta in &self.etas {
            let p = eta.row as usize;
            if v[p].near_zero() {
                v[p] = T::zero();
                continue;
            }
            let vp = std::mem::take(&mut v[p]);
            for (i, e) in &eta.rest {
                let i = *i as usize;
                v[i] = v[i].plus(&vp.times(e));
            }
            v[p] = vp.times(&eta.pivot);
        }
    }

    /// `y <- y B^-1` for a row vector `y`.
    fn btran(&self, y: &mut [T]) {
        for eta in self.etas.iter().rev() {
            let p = eta.row as usize;
            let mut acc = y[p].times(&eta.pivot);
            for (i, e) in &eta.rest {
                let yi = &y[*i as usize];
                if !yi.near_zero() {
                    acc = acc.plus(&yi.times(e));
                }
            }
            y[p] = acc;
        }
    }
}

/// A basis by column: the basic column of each row and, for every
/// structural or logical column, whether it sits at its upper bound.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<bool>,
}

/// Bounded-variable simplex state. Cloneable so branch-and-bound can keep a
/// warm basis per open node.
#[derive(Debug, Clone)]
pub(crate) struct Simplex<T> {
    n_struct: usize,
    n_model_rows: usize,
    /// Tableau row -> model row.
    row_map: Vec<usize>,
    row_relation: Vec<Relation>,
    cols: Vec<SparseVec<T>>,
    rows: Vec<SparseVec<T>>,
    rhs: Vec<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    cost: Vec<T>,
    /// Costs the reduced costs currently refer to.
    active_cost: Vec<T>,
    x: Vec<T>,
    d: Vec<T>,
    basic_of_row: Vec<usize>,
    row_of_col: Vec<usize>,
    factor: Factor<T>,
    art_start: usize,
    phase_one_done: bool,
    opts: LpOptions,
    pivot_cap: u64,
    /// Pivot count at which the current call stalls.
    stall_at: u64,
    /// Row multipliers proving the last `Infeasible` result.
    ray: Option<Vec<T>>,
    pub(crate) pivots: u64,
}

impl<T: Scalar> Simplex<T> {
    /// Builds the initial slack basis, with artificials for violated rows
    /// unless the costs are nonnegative, in which case the all-logical basis
    /// is dual feasible and [`Simplex::solve`] skips phase 1. Returns `None`
    /// when an empty row is violated.
    pub(crate) fn new(model: &LpModel, opts: LpOptions) -> Option<Self> {
        let mut s = Self::skeleton(model, opts)?;
        let n_struct = s.n_struct;
        let dual_start = s.cost.iter().all(|c| !c.definitely_negative());
        s.phase_one_done = dual_start;
        for r in 0..s.row_map.len() {
            let residual = s.row_residual(r);
            let logical = n_struct + r;
            let within = s.lower[logical].as_ref().map_or(true, |l| !T::less(&residual, l))
                && s.upper[logical].as_ref().map_or(true, |u| !T::less(u, &residual));
            if within || dual_start {
                s.x[logical] = residual;
                s.basic_of_row.push(logical);
            } else {
                let sign = if residual.definitely_positive() {
                    T::one()
                } else {
                    T::one().negated()
                };
                let art = s.cols.len();
                s.basic_of_row.push(art);
                s.rows[r].push((art as u32, sign.clone()));
                s.cols.push(vec![(r as u32, sign)]);
                s.lower.push(Some(T::zero()));
                s.upper.push(None);
                s.cost.push(T::zero());
                s.x.push(residual.magnitude());
            }
        }
        s.finish_setup();
        s.refactor();
        Some(s)
    }

    /// Starts from a given basis with phase 1 considered done. The basis may
    /// be primal or dual infeasible; columns that make it singular are
    /// swapped for logicals.
    pub(crate) fn from_basis(model: &LpModel, opts: LpOptions, basis: &Basis) -> Option<Self> {
        let mut s = Self::skeleton(model, opts)?;
        let m = s.row_map.len();
        let n = s.cols.len();
        if basis.basic.len() != m || basis.basic.iter().any(|&b| b >= n) || basis.at_upper.len() != n {
            return None;
        }
        for j in 0..n {
            s.x[j] = s.nonbasic_value(j, basis.at_upper[j]);
        }
        s.basic_of_row = basis.basic.clone();
        s.phase_one_done = true;
        s.finish_setup();
        s.refactor();
        let cost = s.cost.clone();
        s.compute_reduced_costs(&cost);
        Some(s)
    }

    /// Columns, rows and bounds without any basis.
    fn skeleton(model: &LpModel, opts: LpOptions) -> Option<Self> {
        let n_struct = model.num_vars();
        let mut row_map = Vec::new();
        for (i, c) in model.constraints().iter().enumerate() {
            if c.coeffs.is_empty() {
                let zero = Rational::zero();
                let ok = match c.relation {
                    Relation::Le => zero <= c.rhs,
                    Relation::Ge => zero >= c.rhs,
                    Relation::Eq => zero == c.rhs,
                };
                if !ok {
                    return None;
                }
            } else {
                row_map.push(i);
            }
        }
        let m = row_map.len();
        let conv = T::from_rational;
        let mut lower: Vec<Option<T>> = (0..n_struct).map(|j| Some(conv(model.lower(j)))).collect();
        let mut upper: Vec<Option<T>> = (0..n_struct).map(|j| model.upper(j).map(conv)).collect();
        let mut cost: Vec<T> = model.objective().iter().map(conv).collect();
        let mut x: Vec<T> = lower.iter().map(|l| l.clone().unwrap_or_default()).collect();
        let mut cols: Vec<SparseVec<T>> = vec![Vec::new(); n_struct];
        let mut rhs = Vec::with_capacity(m);
        let mut row_relation = Vec::with_capacity(m);
        for (r, &i) in row_map.iter().enumerate() {
            let c = &model.constraints()[i];
            for (j, a) in &c.coeffs {
                cols[*j].push((r as u32, conv(a)));
            }
            rhs.push(conv(&c.rhs));
            row_relation.push(c.relation);
        }
        for (r, rel) in row_relation.iter().enumerate() {
            let (lo, up) = match rel {
                Relation::Le => (Some(T::zero()), None),
                Relation::Ge => (None, Some(T::zero())),
                Relation::Eq => (Some(T::zero()), Some(T::zero())),
            };
            cols.push(vec![(r as u32, T::one())]);
            lower.push(lo);
            upper.push(up);
            cost.push(T::zero());
            x.push(T::zero());
        }
        let mut rows: Vec<SparseVec<T>> = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for (r, a) in col {
                rows[*r as usize].push((j as u32, a.clone()));
            }
        }
        Some(Simplex {
            n_struct,
            n_model_rows: model.num_constraints(),
            row_map,
            row_relation,
            cols,
            rows,
            rhs,
            lower,
            upper,
            cost,
            active_cost: Vec::new(),
            x,
            d: Vec::new(),
            basic_of_row: Vec::with_capacity(m),
            row_of_col: Vec::new(),
            factor: Factor::new(),
            art_start: n_struct + m,
            phase_one_done: false,
            opts,
            pivot_cap: u64::MAX,
            stall_at: u64::MAX,
            ray: None,
            pivots: 0,
        })
    }

    fn finish_setup(&mut self) {
        let n_cols = self.cols.len();
        self.d = vec![T::zero(); n_cols];
        self.row_of_col = vec![NONBASIC; n_cols];
        for (r, &b) in self.basic_of_row.iter().enumerate() {
            self.row_of_col[b] = r;
        }
    }

    /// Makes each call stop with [`SimplexStatus::Stalled`] after `cap`
    /// pivots.
    pub(crate) fn with_pivot_cap(mut self, cap: u64) -> Self {
        self.pivot_cap = cap;
        self
    }

    /// `b_r - a_r x` over the structural columns.
    fn row_residual(&self, r: usize) -> T {
        let mut v = self.rhs[r].clone();
        for (j, a) in &self.rows[r] {
            let j = *j as usize;
            if j < self.n_struct {
                v = v.minus(&a.times(&self.x[j]));
            }
        }
        v
    }

    fn nonbasic_value(&self, j: usize, at_upper: bool) -> T {
        match (&self.lower[j], &self.upper[j]) {
            (_, Some(u)) if at_upper => u.clone(),
            (Some(l), _) => l.clone(),
            (None, Some(u)) => u.clone(),
            (None, None) => T::zero(),
        }
    }

    fn n_rows(&self) -> usize {
        self.basic_of_row.len()
    }

    fn n_cols(&self) -> usize {
        self.cols.len()
    }

    fn check_deadline(&self) -> Result<(), LpError> {
        match self.opts.deadline {
            Some(t) if Instant::now() >= t => Err(LpError::TimeLimit),
            _ => Ok(()),
        }
    }

    /// Rebuilds the eta file from the identity for the current basis, then
    /// recomputes basic values and reduced costs. Rows may be reassigned
    /// among the basic columns; a column without an acceptable pivot leaves
    /// the basis and the logical of a free row takes its place.
    fn refactor(&mut self) {
        let m = self.n_rows();
        let old_basic = self.basic_of_row.clone();
        let mut factor = Factor::new();
        let mut owner = vec![NONBASIC; m];
        let mut pending = Vec::new();
        for &b in &old_basic {
            if (self.n_struct..self.art_start).contains(&b) && owner[b - self.n_struct] == NONBASIC {
                owner[b - self.n_struct] = b;
            } else {
                pending.push(b);
            }
        }
        pending.sort_by_key(|&j| (self.cols[j].len(), j));
        pending.dedup();
        let mut alpha = vec![T::zero(); m];
        for j in pending {
            if (self.n_struct..self.art_start).contains(&j) {
                continue;
            }
            for (r, a) in &self.cols[j] {
                alpha[*r as usize] = a.clone();
            }
            factor.ftran(&mut alpha);
            let largest = (0..m)
                .filter(|&r| owner[r] == NONBASIC)
                .map(|r| alpha[r].magnitude())
                .fold(T::zero(), |acc, a| if a > acc { a } else { acc });
            // prefer unit pivots, then sparse rows
            let p = (0..m)
                .filter(|&r| owner[r] == NONBASIC && T::stable_pivot(&alpha[r], &largest))
                .min_by_key(|&r| (alpha[r].magnitude() != T::one(), self.rows[r].len(), r));
            if let Some(p) = p {
                factor.push(p, &alpha);
                owner[p] = j;
            }
            alpha.iter_mut().for_each(|a| *a = T::zero());
        }
        for (r, slot) in owner.iter_mut().enumerate() {
            if *slot == NONBASIC {
                *slot = self.n_struct + r;
            }
        }
        for &b in &old_basic {
            self.row_of_col[b] = NONBASIC;
        }
        for (r, &b) in owner.iter().enumerate() {
            self.basic_of_row[r] = b;
            self.row_of_col[b] = r;
        }
        for &b in &old_basic {
            if self.row_of_col[b] == NONBASIC {
                self.x[b] = self.nonbasic_value(b, false);
            }
        }
        self.factor = factor;
        self.recompute_basic_values();
        if !self.active_cost.is_empty() {
            let cost = std::mem::take(&mut self.active_cost);
            self.compute_reduced_costs(&cost);
        }
    }

    fn recompute_basic_values(&mut self) {
        let mut v = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.row_of_col[j] != NONBASIC || self.x[j] == T::zero() {
                continue;
            }
            for (r, a) in col {
                let r = *r as usize;
                v[r] = v[r].minus(&a.times(&self.x[j]));
            }
        }
        self.factor.ftran(&mut v);
        for (r, val) in v.into_iter().enumerate() {
            self.x[self.basic_of_row[r]] = val;
        }
    }

    /// `B^-1 a_j` as a dense vector over rows.
    fn column(&self, j: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.n_rows()];
        for (r, a) in &self.cols[j] {
            v[*r as usize] = a.clone();
        }
        self.factor.ftran(&mut v);
        v
    }

    /// Row `r` of `B^-1 A` as a dense vector over columns.
    fn tableau_row(&self, r: usize) -> Vec<T> {
        let mut rho = vec![T::zero(); self.n_rows()];
        rho[r] = T::one();
        self.factor.btran(&mut rho);
        let mut out = vec![T::zero(); self.n_cols()];
        for (i, ri) in rho.iter().enumerate() {
            if ri.near_zero() {
                continue;
            }
            for (j, a) in &self.rows[i] {
                let j = *j as usize;
                out[j] = out[j].plus(&ri.times(a));
            }
        }
        out
    }

    fn compute_reduced_costs(&mut self, costs: &[T]) {
        let mut y: Vec<T> = self.basic_of_row.iter().map(|&b| costs[b].clone()).collect();
        self.factor.btran(&mut y);
        let mut d = costs.to_vec();
        for (j, col) in self.cols.iter().enumerate() {
            if self.row_of_col[j] != NONBASIC {
                d[j] = T::zero();
                continue;
            }
            for (r, a) in col {
                let yr = &y[*r as usize];
                if !yr.near_zero() {
                    d[j] = d[j].minus(&yr.times(a));
                }
            }
        }
        self.d = d;
        self.active_cost = costs.to_vec();
    }

    fn start_call(&mut self) {
        self.stall_at = self.pivots.saturating_add(self.pivot_cap);
        self.ray = None;
    }

    /// Runs both phases from the current basis.
    pub(crate) fn solve(&mut self) -> Result<SimplexStatus, LpError> {
        self.start_call();
        if !self.phase_one_done {
            let art_cost: Vec<T> = (0..self.n_cols())
                .map(|j| if j >= self.art_start { T::one() } else { T::zero() })
                .collect();
            self.compute_reduced_costs(&art_cost);
            // phase 1 is bounded below by zero
            let status = self.primal()?;
            if status == SimplexStatus::Stalled {
                return Ok(status);
            }
            let infeasible = self.x[self.art_start..].iter().any(|a| a.definitely_positive());
            if infeasible {
                // phase 1 duals
                self.ray = Some((0..self.n_rows()).map(|r| self.d[self.n_struct + r].negated()).collect());
                return Ok(SimplexStatus::Infeasible);
            }
            self.expel_artificials();
            self.phase_one_done = true;
        }
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        if self.primal_feasible() {
            self.primal()
        } else {
            self.dual()
        }
    }

    /// Finishes from a basis set by [`Simplex::from_basis`]: primal simplex
    /// when it is primal feasible, dual simplex when it is dual feasible,
    /// `None` when it is neither.
    pub(crate) fn resume(&mut self) -> Result<Option<SimplexStatus>, LpError> {
        self.start_call();
        if self.primal_feasible() {
            return self.primal().map(Some);
        }
        if self.choose_entering(false).is_none() {
            return self.dual().map(Some);
        }
        Ok(None)
    }

    fn primal_feasible(&self) -> bool {
        self.basic_of_row.iter().all(|&b| self.infeasibility(b).is_none())
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if !T::less(l, u))
    }

    fn can_increase(&self, j: usize) -> bool {
        self.upper[j].as_ref().map_or(true, |u| T::less(&self.x[j], u))
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.lower[j].as_ref().map_or(true, |l| T::less(l, &self.x[j]))
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        for j in 0..self.n_cols() {
            if self.row_of_col[j] != NONBASIC || self.is_fixed(j) {
                continue;
            }
            let dj = &self.d[j];
            let cand = if dj.definitely_negative() && self.can_increase(j) {
                Some(true)
            } else if dj.definitely_positive() && self.can_decrease(j) {
                Some(false)
            } else {
                None
            };
            if let Some(up) = cand {
                if bland {
                    return Some((j, up));
                }
                match best {
                    Some((k, _)) if self.d[k].magnitude() >= dj.magnitude() => {}
                    _ => best = Some((j, up)),
                }
            }
        }
        best
    }

    fn primal(&mut self) -> Result<SimplexStatus, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            self.check_deadline()?;
            if self.pivots >= self.stall_at {
                return Ok(SimplexStatus::Stalled);
            }
            let bland = T::EXACT && degenerate_run >= self.opts.bland_after;
            let Some((j, increase)) = self.choose_entering(bland) else {
                return Ok(SimplexStatus::Optimal);
            };
            let col = self.column(j);
            let Ok(best) = self.primal_ratio_test(j, increase, &col) else {
                if !self.retry_after_tiny_pivot() {
                    return Ok(SimplexStatus::Stalled);
                }
                continue;
            };
            let Some((theta, leave)) = best else {
                return Ok(SimplexStatus::Unbounded);
            };
            if theta.near_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
                let delta = if increase { theta } else { theta.negated() };
                self.x[j] = self.x[j].plus(&delta);
                for (r, t) in col.iter().enumerate() {
                    if !t.near_zero() {
                        let b = self.basic_of_row[r];
                        self.x[b] = self.x[b].minus(&t.times(&delta));
                    }
                }
            }
            match leave {
                Some(r) => {
                    let b = self.basic_of_row[r];
                    // snap the leaving variable onto the bound it reached
                    let at_upper = if increase {
                        col[r].definitely_negative()
                    } else {
                        col[r].definitely_positive()
                    };
                    self.x[b] = self.nonbasic_value(b, at_upper);
                    let row = (!self.d[j].near_zero()).then(|| self.tableau_row(r));
                    self.pivot(r, j, &col, row.as_deref());
                }
                None => {
                    self.x[j] = self.nonbasic_value(j, increase);
                }
            }
        }
    }

    /// Two-pass ratio test for column `j` moving up or down. Exact runs take
    /// the smallest ratio, then the lowest basic index; float runs take the
    /// largest pivot within the relaxed step. Returns the
    /// step and the blocking row, `None` for a bound flip; `Ok(None)` when
    /// the step is unbounded and `Err` when only unusably small entries
    /// could block it.
    fn primal_ratio_test(&self, j: usize, increase: bool, col: &[T]) -> Result<Option<(T, Option<usize>)>, Tiny> {
        let mut tiny = false;
        let slack = T::ratio_slack();
        let flip = self.lower[j].as_ref().zip(self.upper[j].as_ref()).map(|(l, u)| u.minus(l));
        let mut cap = flip.clone();
        let mut cands = Vec::new();
        for (r, t) in col.iter().enumerate() {
            if !T::usable_pivot(t) {
                tiny |= !t.near_zero();
                continue;
            }
            let b = self.basic_of_row[r];
            // d(x_b)/d(theta) = -t * dir
            let rate_up = if increase { t.definitely_negative() } else { t.definitely_positive() };
            let room = if rate_up {
                self.upper[b].as_ref().map(|u| u.minus(&self.x[b]))
            } else {
                self.lower[b].as_ref().map(|l| self.x[b].minus(l))
            };
            let Some(room) = room else { continue };
            let mag = t.magnitude();
            let relaxed = room.plus(&slack).over(&mag);
            if cap.as_ref().map_or(true, |c| relaxed < *c) {
                cap = Some(relaxed);
            }
            cands.push((r, room.over(&mag), mag));
        }
        let Some(cap) = cap else {
            return if tiny { Err(Tiny) } else { Ok(None) };
        };
        let mut pick: Option<(usize, T, T)> = None;
        for (r, ratio, mag) in cands {
            if ratio > cap {
                continue;
            }
            let better = match &pick {
                None => true,
                Some((pr, pratio, pmag)) => {
                    if T::EXACT {
                        ratio < *pratio || (ratio == *pratio && self.basic_of_row[r] < self.basic_of_row[*pr])
                    } else {
                        mag > *pmag
                    }
                }
            };
            if better {
                pick = Some((r, ratio, mag));
            }
        }
        let clamp = |v: T| if v.definitely_negative() || v.near_zero() { T::zero() } else { v };
        Ok(match (pick, flip) {
            (Some((_, ratio, _)), Some(f)) if f <= ratio => Some((f, None)),
            (Some((r, ratio, _)), _) => Some((clamp(ratio), Some(r))),
            (None, Some(f)) => Some((f, None)),
            (None, None) => None,
        })
    }

    /// Two-pass dual ratio test on tableau row `row` whose basic variable
    /// must move up (`going_up`) or down. Returns the entering column and
    /// its ratio, `Ok(None)` when the row proves infeasibility and `Err` when
    /// only unusably small entries are eligible.
    fn dual_ratio_test(&self, row: &[T], going_up: bool) -> Result<Option<(usize, T)>, Tiny> {
        let mut tiny = false;
        let slack = T::ratio_slack();
        let mut cap: Option<T> = None;
        let mut cands = Vec::new();
        for (k, t) in row.iter().enumerate() {
            if t.near_zero() || self.row_of_col[k] != NONBASIC || self.is_fixed(k) {
                continue;
            }
            if !T::usable_pivot(t) {
                tiny = true;
                continue;
            }
            // x_b moves by -t * dx_k
            let eligible = if going_up {
                (t.definitely_negative() && self.can_increase(k)) || (t.definitely_positive() && self.can_decrease(k))
            } else {
                (t.definitely_positive() && self.can_increase(k)) || (t.definitely_negative() && self.can_decrease(k))
            };
            if !eligible {
                continue;
            }
            let mag = t.magnitude();
            let dk = self.d[k].magnitude();
            let relaxed = dk.plus(&slack).over(&mag);
            if cap.as_ref().map_or(true, |c| relaxed < *c) {
                cap = Some(relaxed);
            }
            cands.push((k, dk.over(&mag), mag));
        }
        let Some(cap) = cap else {
            return if tiny { Err(Tiny) } else { Ok(None) };
        };
        let mut pick: Option<(usize, T, T)> = None;
        for (k, ratio, mag) in cands {
            if ratio > cap {
                continue;
            }
            let better = match &pick {
                None => true,
                Some((_, pratio, pmag)) => {
                    if T::EXACT {
                        ratio < *pratio
                    } else {
                        mag > *pmag
                    }
                }
            };
            if better {
                pick = Some((k, ratio, mag));
            }
        }
        Ok(pick.map(|(k, ratio, _)| (k, ratio)))
    }

    /// Refactors once so a ratio test blocked by tiny entries can be
    /// retried on a fresh factorization. `false` if it already was fresh.
    fn retry_after_tiny_pivot(&mut self) -> bool {
        if self.factor.updates == 0 {
            return false;
        }
        self.refactor();
        true
    }

    /// Column `j` enters in row `r`. `col` is `B^-1 a_j`; `row` is row `r`
    /// of `B^-1 A`, needed only when `d_j` is nonzero. Values are left alone.
    fn pivot(&mut self, r: usize, j: usize, col: &[T], row: Option<&[T]>) {
        self.pivots += 1;
        let p = self.basic_of_row[r];
        let dj = std::mem::take(&mut self.d[j]);
        if !dj.near_zero() {
            let row = row.expect("tableau row for a nonzero reduced cost");
            let ratio = dj.over(&row[j]);
            for (k, a) in row.iter().enumerate() {
                if k != j && !a.near_zero() && self.row_of_col[k] == NONBASIC {
                    self.d[k] = self.d[k].minus(&ratio.times(a));
                }
            }
        }
        self.d[p] = if dj.near_zero() {
            T::zero()
        } else {
            dj.over(&col[r]).negated()
        };
        self.basic_of_row[r] = j;
        self.row_of_col[j] = r;
        self.row_of_col[p] = NONBASIC;
        self.factor.push(r, col);
        self.factor.updates += 1;
        if self.factor.updates >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    /// After a zero-infeasibility phase 1: pivots basic artificials out where
    /// possible and fixes all artificials at zero.
    fn expel_artificials(&mut self) {
        for r in 0..self.n_rows() {
            if self.basic_of_row[r] < self.art_start {
                continue;
            }
            let row = self.tableau_row(r);
            let largest = (0..self.art_start)
                .filter(|&k| self.row_of_col[k] == NONBASIC)
                .map(|k| row[k].magnitude())
                .fold(T::zero(), |acc, a| if a > acc { a } else { acc });
            let entering = (0..self.art_start)
                .find(|&k| self.row_of_col[k] == NONBASIC && T::stable_pivot(&row[k], &largest));
            if let Some(k) = entering {
                let col = self.column(k);
                let art = self.basic_of_row[r];
                self.x[art] = T::zero();
                self.pivot(r, k, &col, Some(&row));
            }
        }
        for j in self.art_start..self.n_cols() {
            self.lower[j] = Some(T::zero());
            self.upper[j] = Some(T::zero());
            if self.row_of_col[j] == NONBASIC {
                self.x[j] = T::zero();
            }
        }
    }

    pub(crate) fn objective(&self) -> T {
        self.cost[..self.n_struct]
            .iter()
            .zip(&self.x)
            .filter(|(c, _)| **c != T::zero())
            .fold(T::zero(), |acc, (c, x)| acc.plus(&c.times(x)))
    }

    pub(crate) fn structural_values(&self) -> &[T] {
        &self.x[..self.n_struct]
    }

    /// Current basis, if no artificial column is basic.
    pub(crate) fn basis(&self) -> Option<Basis> {
        if self.basic_of_row.iter().any(|&b| b >= self.art_start) {
            return None;
        }
        let at_upper = (0..self.art_start)
            .map(|j| {
                self.row_of_col[j] == NONBASIC
                    && self.upper[j].as_ref().is_some_and(|u| self.x[j] == *u)
                    && self.lower[j].as_ref() != Some(&self.x[j])
            })
            .collect();
        Some(Basis {
            basic: self.basic_of_row.clone(),
            at_upper,
        })
    }

    /// Row duals `y_i = -d` of each row's logical, keyed by model row.
    pub(crate) fn row_duals(&self) -> Vec<(usize, Relation, T)> {
        self.row_map
            .iter()
            .enumerate()
            .map(|(r, &i)| (i, self.row_relation[r], self.d[self.n_struct + r].negated()))
            .collect()
    }

    /// Multipliers by model row behind the last `Infeasible` status.
    pub(crate) fn infeasibility_ray(&self) -> Option<Vec<(usize, Relation, T)>> {
        let ray = self.ray.as_ref()?;
        Some(
            self.row_map
                .iter()
                .zip(ray)
                .enumerate()
                .map(|(r, (&i, y))| (i, self.row_relation[r], y.clone()))
                .collect(),
        )
    }

    /// Tightens or relaxes the bounds of a structural column. Returns `false`
    /// when the current basis is no longer dual feasible, in which case the
    /// caller must rebuild from scratch.
    pub(crate) fn set_bounds(&mut self, j: usize, lower: T, upper: Option<T>) -> bool {
        self.lower[j] = Some(lower.clone());
        self.upper[j] = upper.clone();
        if self.row_of_col[j] != NONBASIC {
            return true;
        }
        let target = if T::less(&self.x[j], &lower) {
            lower
        } else if let Some(u) = upper.filter(|u| T::less(u, &self.x[j])) {
            u
        } else {
            return true;
        };
        let delta = target.minus(&self.x[j]);
        for (r, t) in self.column(j).into_iter().enumerate() {
            if !t.near_zero() {
                let b = self.basic_of_row[r];
                self.x[b] = self.x[b].minus(&t.times(&delta));
            }
        }
        self.x[j] = target;
        let dj = &self.d[j];
        !((dj.definitely_negative() && self.can_increase(j)) || (dj.definitely_positive() && self.can_decrease(j)))
    }

    fn infeasibility(&self, b: usize) -> Option<(T, bool)> {
        let x = &self.x[b];
        if let Some(l) = self.lower[b].as_ref().filter(|l| T::below(x, l)) {
            return Some((l.minus(x), true));
        }
        if let Some(u) = self.upper[b].as_ref().filter(|u| T::above(x, u)) {
            return Some((x.minus(u), false));
        }
        None
    }

    /// Dual simplex from a dual-feasible basis, then a primal cleanup pass.
    pub(crate) fn reoptimize(&mut self) -> Result<SimplexStatus, LpError> {
        debug_assert!(self.phase_one_done);
        self.start_call();
        self.dual()
    }

    fn dual(&mut self) -> Result<SimplexStatus, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            self.check_deadline()?;
            if self.pivots >= self.stall_at {
                return Ok(SimplexStatus::Stalled);
            }
            let bland = T::EXACT && degenerate_run >= self.opts.bland_after;
            let mut leave: Option<(usize, T, bool)> = None;
            for r in 0..self.n_rows() {
                let b = self.basic_of_row[r];
                if let Some((amount, up)) = self.infeasibility(b) {
                    let better = match &leave {
                        None => true,
                        Some((lr, la, _)) => {
                            if bland {
                                b < self.basic_of_row[*lr]
                            } else {
                                amount > *la
                            }
                        }
                    };
                    if better {
                        leave = Some((r, amount, up));
                    }
                }
            }
            let Some((r, _, going_up)) = leave else {
                return self.primal();
            };
            let b = self.basic_of_row[r];
            let row = self.tableau_row(r);
            let Ok(enter) = self.dual_ratio_test(&row, going_up) else {
                if !self.retry_after_tiny_pivot() {
                    return Ok(SimplexStatus::Stalled);
                }
                continue;
            };
            let Some((j, ratio)) = enter else {
                let mut rho = vec![T::zero(); self.n_rows()];
                rho[r] = T::one();
                self.factor.btran(&mut rho);
                self.ray = Some(rho);
                return Ok(SimplexStatus::Infeasible);
            };
            if ratio.near_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            let target = if going_up {
                self.lower[b].clone().expect("violated lower bound is finite")
            } else {
                self.upper[b].clone().expect("violated upper bound is finite")
            };
            let col = self.column(j);
            let delta = self.x[b].minus(&target).over(&row[j]);
            for (i, t) in col.iter().enumerate() {
                if !t.near_zero() {
                    let bi = self.basic_of_row[i];
                    self.x[bi] = self.x[bi].minus(&t.times(&delta));
                }
            }
            self.x[j] = self.x[j].plus(&delta);
            self.x[b] = target;
            self.pivot(r, j, &col, Some(&row));
        }
    }
}

impl Simplex<Rational> {
    pub(crate) fn solution(&self, status: SimplexStatus) -> LpSolution {
        match status {
            SimplexStatus::Infeasible => return LpSolution::without_point(LpStatus::Infeasible),
            SimplexStatus::Unbounded => return LpSolution::without_point(LpStatus::Unbounded),
            SimplexStatus::Optimal => {}
            SimplexStatus::Stalled => unreachable!("exact runs have no pivot cap"),
        }
        let mut duals = vec![Rational::zero(); self.n_model_rows];
        for (i, _, y) in self.row_duals() {
            duals[i] = y;
        }
        let basis: Vec<usize> = (0..self.n_struct)
            .filter(|&j| self.row_of_col[j] != NONBASIC)
            .collect();
        LpSolution {
            status: LpStatus::Optimal,
            objective: self.objective(),
            values: self.structural_values().to_vec(),
            basis,
            duals,
            reduced_costs: self.d[..self.n_struct].to_vec(),
        }
    }
}
