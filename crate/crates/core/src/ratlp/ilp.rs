//! Depth-first branch-and-bound. Node relaxations run in `f64`; pruning
//! uses bounds proven exactly from rounded duals, incumbents are checked
//! exactly, and nodes the float run cannot settle are re-solved exactly.

use std::time::{Duration, Instant};

use super::lp::{float_pivot_cap, LpError, LpModel, LpOptions, Relation};
use super::simplex::{Basis, Simplex, SimplexStatus};
use super::rational::Rational;

#[derive(Debug, Clone, Default)]
pub struct IlpOptions {
    pub time_limit: Option<Duration>,
    pub bland_after: Option<usize>,
    /// A known integral feasible point used as the starting incumbent.
    pub incumbent: Option<Vec<Rational>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralPoint {
    pub objective: Rational,
    pub values: Vec<Rational>,
}

#[derive(Debug, Clone)]
pub struct IlpResult {
    pub status: IlpStatus,
    pub incumbent: Option<IntegralPoint>,
    /// Proven lower bound on the optimum; `None` if even the root relaxation
    /// did not finish.
    pub dual_bound: Option<Rational>,
    pub nodes: u64,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum IlpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("integer variable {var} needs a finite upper bound")]
    UnboundedIntegerVar { var: usize },
    #[error("supplied incumbent is not an integral feasible point")]
    InvalidIncumbent,
}

struct OpenNode {
    /// Warm floating-point state; `None` means rebuild from the bounds.
    simplex: Option<Simplex<f64>>,
    bounds: Vec<(Rational, Option<Rational>)>,
    /// Proven lower bound inherited from the parent.
    parent_bound: Option<Rational>,
    branch: Option<(usize, Rational, Option<Rational>)>,
}

/// What a node relaxation established.
enum NodeLp {
    Infeasible,
    Unbounded,
    /// A proven bound, the point to branch on, and whether that point is
    /// exact.
    Solved {
        bound: Option<Rational>,
        values: Vec<f64>,
        exact: Option<Vec<Rational>>,
    },
}

/// Distance from the nearest integer below which a float value counts as
/// integral.
const INTEGRALITY_TOL: f64 = 1e-6;
/// Float duals are rounded to this denominator before the bound is
/// evaluated exactly.
const DUAL_SCALE: f64 = 4_294_967_296.0;

pub fn ilp_solve(model: &LpModel, integer_vars: &[usize], opts: &IlpOptions) -> Result<IlpResult, IlpError> {
    model.validate()?;
    let mut is_int = vec![false; model.num_vars()];
    for &v in integer_vars {
        if v >= model.num_vars() {
            return Err(LpError::VarOutOfRange {
                row: usize::MAX,
                var: v,
                num_vars: model.num_vars(),
            }
            .into());
        }
        if model.upper(v).is_none() {
            return Err(IlpError::UnboundedIntegerVar { var: v });
        }
        is_int[v] = true;
    }
    let all_integer = is_int.iter().all(|&b| b);
    let objective_integral = model
        .objective()
        .iter()
        .enumerate()
        .all(|(j, c)| c.is_zero() || (is_int[j] && c.is_integer()));
    let round_bound = |z: &Rational| if objective_integral { z.ceil() } else { z.clone() };

    let mut incumbent: Option<IntegralPoint> = None;
    if let Some(values) = &opts.incumbent {
        let integral = integer_vars.iter().all(|&v| values.get(v).is_some_and(|x| x.is_integer()));
        if !integral || !model.is_feasible(values) {
            return Err(IlpError::InvalidIncumbent);
        }
        incumbent = Some(IntegralPoint {
            objective: model.objective_value(values),
            values: values.clone(),
        });
    }

    let start = Instant::now();
    let mut lp_opts = LpOptions {
        deadline: opts.time_limit.map(|d| start + d),
        ..LpOptions::default()
    };
    if let Some(b) = opts.bland_after {
        lp_opts.bland_after = b;
    }

    let mut stack = vec![OpenNode {
        simplex: None,
        bounds: (0..model.num_vars())
            .map(|j| (model.lower(j).clone(), model.upper(j).cloned()))
            .collect(),
        parent_bound: None,
        branch: None,
    }];
    let mut nodes = 0u64;
    let prunable = |bound: &Rational, inc: &Option<IntegralPoint>| {
        inc.as_ref().is_some_and(|p| round_bound(bound) >= p.objective)
    };

    while let Some(mut node) = stack.pop() {
        if let Some(pb) = &node.parent_bound {
            if prunable(pb, &incumbent) {
                continue;
            }
        }
        nodes += 1;
        let is_root = nodes == 1;
        if let Some((var, lo, hi)) = node.branch.take() {
            if let Some(s) = &mut node.simplex {
                if !s.set_bounds(var, lo.to_f64(), hi.as_ref().map(Rational::to_f64)) {
                    node.simplex = None;
                }
            }
            node.bounds[var] = (lo, hi);
        }
        let mut outcome = solve_node(model, &node.bounds, &mut node.simplex, &lp_opts);
        if let Ok(NodeLp::Solved { bound, values, exact: None }) = &outcome {
            if is_fractional(values, integer_vars).is_none() {
                // a near-integral float point is kept only if it checks out exactly
                let candidate = all_integer
                    .then(|| values.iter().map(|v| Rational::from_integer(v.round() as i64)).collect::<Vec<_>>())
                    .filter(|p| model.is_feasible(p));
                if let Some(p) = candidate {
                    let objective = model.objective_value(&p);
                    if incumbent.as_ref().map_or(true, |inc| objective < inc.objective) {
                        incumbent = Some(IntegralPoint { objective, values: p });
                    }
                }
                if !bound.as_ref().is_some_and(|b| prunable(b, &incumbent)) {
                    let basis = node.simplex.as_ref().and_then(Simplex::basis);
                    outcome = solve_exact(model, &node.bounds, basis, &lp_opts);
                }
            }
        }
        let lp = match outcome {
            Ok(lp) => lp,
            Err(LpError::TimeLimit) => {
                let mut bound = node.parent_bound.clone();
                for open in &stack {
                    bound = match (bound, &open.parent_bound) {
                        (Some(a), Some(b)) => Some(if *b < a { b.clone() } else { a }),
                        _ => None,
                    };
                }
                let mut dual = bound.map(|b| round_bound(&b));
                if let (Some(d), Some(inc)) = (&dual, &incumbent) {
                    if inc.objective < *d {
                        dual = Some(inc.objective.clone());
                    }
                }
                return Ok(IlpResult {
                    status: IlpStatus::TimedOut,
                    incumbent,
                    dual_bound: dual,
                    nodes,
                });
            }
            Err(e) => return Err(e.into()),
        };
        let (bound, values, exact) = match lp {
            NodeLp::Infeasible => continue,
            NodeLp::Unbounded => {
                if is_root {
                    return Ok(IlpResult {
                        status: IlpStatus::Unbounded,
                        incumbent,
                        dual_bound: None,
                        nodes,
                    });
                }
                continue;
            }
            NodeLp::Solved { bound, values, exact } => (bound, values, exact),
        };
        if bound.as_ref().is_some_and(|b| prunable(b, &incumbent)) {
            continue;
        }
        let branch = match &exact {
            Some(x) => most_fractional_exact(x, integer_vars),
            None => is_fractional(&values, integer_vars),
        };
        let Some(var) = branch else {
            if let Some(x) = exact {
                let objective = model.objective_value(&x);
                if incumbent.as_ref().map_or(true, |inc| objective < inc.objective) {
                    incumbent = Some(IntegralPoint { objective, values: x });
                }
            }
            continue;
        };
        let value = match &exact {
            Some(x) => x[var].clone(),
            None => float_to_rational(values[var]),
        };
        let (lo, hi) = node.bounds[var].clone();
        let floor = value.floor();
        let ceil = if value.is_integer() { &floor + &Rational::one() } else { value.ceil() };
        let up_ok = hi.as_ref().map_or(true, |h| ceil <= *h);
        let down_ok = floor >= lo;
        if up_ok {
            stack.push(OpenNode {
                simplex: node.simplex.clone(),
                bounds: node.bounds.clone(),
                parent_bound: bound.clone(),
                branch: Some((var, ceil, hi)),
            });
        }
        if down_ok {
            stack.push(OpenNode {
                simplex: node.simplex,
                bounds: node.bounds,
                parent_bound: bound,
                branch: Some((var, lo, Some(floor))),
            });
        }
    }

    let status = if incumbent.is_some() {
        IlpStatus::Optimal
    } else {
        IlpStatus::Infeasible
    };
    let dual_bound = incumbent.as_ref().map(|p| p.objective.clone());
    Ok(IlpResult {
        status,
        incumbent,
        dual_bound,
        nodes,
    })
}

fn bounded_model(model: &LpModel, bounds: &[(Rational, Option<Rational>)]) -> LpModel {
    let mut m = model.clone();
    for (j, (l, u)) in bounds.iter().enumerate() {
        m.set_bounds(j, l.clone(), u.clone());
    }
    m
}

/// Solves a node relaxation in `f64`, proving a bound from its duals. Falls
/// back to an exact solve whenever the float result cannot be certified.
fn solve_node(
    model: &LpModel,
    bounds: &[(Rational, Option<Rational>)],
    warm: &mut Option<Simplex<f64>>,
    opts: &LpOptions,
) -> Result<NodeLp, LpError> {
    let status = match warm {
        Some(s) => s.reoptimize()?,
        None => {
            let m = bounded_model(model, bounds);
            match Simplex::<f64>::new(&m, opts.clone()) {
                Some(s) => {
                    let s = warm.insert(s.with_pivot_cap(float_pivot_cap(&m)));
                    s.solve()?
                }
                None => return Ok(NodeLp::Infeasible),
            }
        }
    };
    let s = warm.as_ref().expect("float state present");
    if status == SimplexStatus::Infeasible {
        if let Some(ray) = s.infeasibility_ray() {
            if proves_infeasible(model, bounds, &ray) {
                return Ok(NodeLp::Infeasible);
            }
        }
    }
    if status == SimplexStatus::Optimal {
        if let Some(bound) = safe_bound(model, bounds, &s.row_duals()) {
            return Ok(NodeLp::Solved {
                bound: Some(bound),
                values: s.structural_values().to_vec(),
                exact: None,
            });
        }
    }
    let basis = s.basis().filter(|_| status == SimplexStatus::Optimal || status == SimplexStatus::Infeasible);
    if status != SimplexStatus::Optimal {
        *warm = None;
    }
    solve_exact(model, bounds, basis, opts)
}

/// Exact relaxation of a node, warm-started from `basis` when given.
fn solve_exact(
    model: &LpModel,
    bounds: &[(Rational, Option<Rational>)],
    basis: Option<Basis>,
    opts: &LpOptions,
) -> Result<NodeLp, LpError> {
    let m = bounded_model(model, bounds);
    let mut warm = basis.and_then(|b| Simplex::<Rational>::from_basis(&m, opts.clone(), &b));
    let mut status = None;
    if let Some(s) = &mut warm {
        status = s.resume()?;
    }
    let (s, status) = match (warm, status) {
        (Some(s), Some(st)) => (s, st),
        _ => {
            let Some(mut s) = Simplex::<Rational>::new(&m, opts.clone()) else {
                return Ok(NodeLp::Infeasible);
            };
            let st = s.solve()?;
            (s, st)
        }
    };
    Ok(match status {
        SimplexStatus::Infeasible => NodeLp::Infeasible,
        SimplexStatus::Unbounded => NodeLp::Unbounded,
        SimplexStatus::Stalled => unreachable!("exact runs have no pivot cap"),
        SimplexStatus::Optimal => NodeLp::Solved {
            bound: Some(s.objective()),
            values: s.structural_values().iter().map(Rational::to_f64).collect(),
            exact: Some(s.structural_values().to_vec()),
        },
    })
}

/// Lower bound `y^T b + sum_j min over the box of (c_j - y^T a_j) x_j`,
/// valid for any `y` with the sign pattern of the rows, evaluated exactly.
fn safe_bound(
    model: &LpModel,
    bounds: &[(Rational, Option<Rational>)],
    duals: &[(usize, Relation, f64)],
) -> Option<Rational> {
    let y = round_multipliers(model, duals, true)?;
    let mut bound = Rational::zero();
    let mut reduced = model.objective().to_vec();
    for (c, yi) in model.constraints().iter().zip(&y) {
        if yi.is_zero() {
            continue;
        }
        bound += &(yi * &c.rhs);
        for (j, a) in &c.coeffs {
            reduced[*j] -= &(yi * a);
        }
    }
    for (dj, (lo, hi)) in reduced.iter().zip(bounds) {
        if dj.is_positive() {
            bound += &(dj * lo);
        } else if dj.is_negative() {
            bound += &(dj * hi.as_ref()?);
        }
    }
    Some(bound)
}

/// Float row multipliers rounded to [`DUAL_SCALE`], optionally clamped to
/// the sign each row relation allows.
fn round_multipliers(model: &LpModel, duals: &[(usize, Relation, f64)], clamp: bool) -> Option<Vec<Rational>> {
    let mut y = vec![Rational::zero(); model.num_constraints()];
    for &(i, relation, yf) in duals {
        let scaled = (yf * DUAL_SCALE).round();
        if !scaled.is_finite() || scaled.abs() > 1e15 {
            return None;
        }
        let scaled = match relation {
            Relation::Ge if clamp => scaled.max(0.0),
            Relation::Le if clamp => scaled.min(0.0),
            _ => scaled,
        };
        y[i] = Rational::new(scaled as i64, DUAL_SCALE as i64)?;
    }
    Some(y)
}

/// Checks exactly that `y^T A x` cannot take a value allowed by both the
/// rows and the variable box.
fn proves_infeasible(
    model: &LpModel,
    bounds: &[(Rational, Option<Rational>)],
    ray: &[(usize, Relation, f64)],
) -> bool {
    let Some(y) = round_multipliers(model, ray, false) else {
        return false;
    };
    let add = |acc: Option<Rational>, v: Option<Rational>| Some(acc? + v?);
    // range of y^T A x allowed by the rows; None is infinite
    let (mut row_lo, mut row_hi) = (Some(Rational::zero()), Some(Rational::zero()));
    let mut g = vec![Rational::zero(); model.num_vars()];
    for (c, yi) in model.constraints().iter().zip(&y) {
        if yi.is_zero() {
            continue;
        }
        let b = Some(yi * &c.rhs);
        let (lo, hi) = match (c.relation, yi.is_positive()) {
            (Relation::Eq, _) => (b.clone(), b),
            (Relation::Le, true) | (Relation::Ge, false) => (None, b),
            (Relation::Ge, true) | (Relation::Le, false) => (b, None),
        };
        row_lo = add(row_lo, lo);
        row_hi = add(row_hi, hi);
        for (j, a) in &c.coeffs {
            g[*j] += &(yi * a);
        }
    }
    let (mut box_lo, mut box_hi) = (Some(Rational::zero()), Some(Rational::zero()));
    for (gj, (lo, hi)) in g.iter().zip(bounds) {
        let at_lo = Some(gj * lo);
        let at_hi = hi.as_ref().map(|h| gj * h);
        if gj.is_positive() {
            box_lo = add(box_lo, at_lo);
            box_hi = add(box_hi, at_hi);
        } else if gj.is_negative() {
            box_lo = add(box_lo, at_hi);
            box_hi = add(box_hi, at_lo);
        }
    }
    let below = matches!((&box_hi, &row_lo), (Some(bh), Some(rl)) if bh < rl);
    let above = matches!((&box_lo, &row_hi), (Some(bl), Some(rh)) if bl > rh);
    below || above
}

fn float_to_rational(v: f64) -> Rational {
    Rational::from_integer((v * DUAL_SCALE).round() as i64) / Rational::from_integer(DUAL_SCALE as i64)
}

/// Most fractional integer variable of a float point, lowest index on ties.
fn is_fractional(values: &[f64], integer_vars: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &v in integer_vars {
        let x = values[v];
        if (x - x.round()).abs() <= INTEGRALITY_TOL {
            continue;
        }
        let dist = (x - x.floor() - 0.5).abs();
        match best {
            Some((bv, bd)) if dist > bd || (dist == bd && v > bv) => {}
            _ => best = Some((v, dist)),
        }
    }
    best.map(|(v, _)| v)
}

fn most_fractional_exact(values: &[Rational], integer_vars: &[usize]) -> Option<usize> {
    let half = Rational::new(1, 2).expect("nonzero");
    let mut best: Option<(usize, Rational)> = None;
    for &v in integer_vars {
        let f = values[v].fract();
        if f.is_zero() {
            continue;
        }
        let dist = (&f - &half).abs();
        match &best {
            Some((bv, bd)) if dist > *bd || (dist == *bd && v > *bv) => {}
            _ => best = Some((v, dist)),
        }
    }
    best.map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::super::lp::{lp_solve, Relation};
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn rounds_up_single_variable() {
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), Some(q("10")), q("1"));
        m.add_constraint([(x, q("1"))], Relation::Ge, q("3/2"));
        let r = ilp_solve(&m, &[x], &IlpOptions::default()).unwrap();
        assert_eq!(r.status, IlpStatus::Optimal);
        assert_eq!(r.incumbent.unwrap().objective, q("2"));
        assert_eq!(r.dual_bound, Some(q("2")));
    }

    #[test]
    fn knapsack_cover() {
        // min 3a + 2b + 4c, 2a + b + 3c >= 5, all in {0..3}
        let mut m = LpModel::new();
        let v: Vec<usize> = ["3", "2", "4"]
            .iter()
            .map(|c| m.add_var(q("0"), Some(q("3")), q(c)))
            .collect();
        m.add_constraint(
            [(v[0], q("2")), (v[1], q("1")), (v[2], q("3"))],
            Relation::Ge,
            q("5"),
        );
        let r = ilp_solve(&m, &v, &IlpOptions::default()).unwrap();
        let best = r.incumbent.unwrap();
        // brute force over {0..3}^3
        let mut brute = None::<i64>;
        for a in 0..=3i64 {
            for b in 0..=3i64 {
                for c in 0..=3i64 {
                    if 2 * a + b + 3 * c >= 5 {
                        let obj = 3 * a + 2 * b + 4 * c;
                        brute = Some(brute.map_or(obj, |x| x.min(obj)));
                    }
                }
            }
        }
        assert_eq!(best.objective, Rational::from_integer(brute.unwrap()));
        assert!(m.is_feasible(&best.values));
        assert!(best.objective >= lp_solve(&m).unwrap().objective);
    }

    #[test]
    fn infeasible_integer_program() {
        // 2x = 1 with x integer
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), Some(q("5")), q("1"));
        m.add_constraint([(x, q("2"))], Relation::Eq, q("1"));
        let r = ilp_solve(&m, &[x], &IlpOptions::default()).unwrap();
        assert_eq!(r.status, IlpStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn rejects_unbounded_integer_and_bad_incumbent() {
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), None, q("1"));
        assert_eq!(
            ilp_solve(&m, &[x], &IlpOptions::default()).unwrap_err(),
            IlpError::UnboundedIntegerVar { var: x }
        );
        m.set_bounds(x, q("0"), Some(q("4")));
        m.add_constraint([(x, q("1"))], Relation::Ge, q("1"));
        let opts = IlpOptions {
            incumbent: Some(vec![q("1/2")]),
            ..IlpOptions::default()
        };
        assert_eq!(ilp_solve(&m, &[x], &opts).unwrap_err(), IlpError::InvalidIncumbent);
        let opts = IlpOptions {
            incumbent: Some(vec![q("3")]),
            ..IlpOptions::default()
        };
        let r = ilp_solve(&m, &[x], &opts).unwrap();
        assert_eq!(r.incumbent.unwrap().objective, q("1"));
    }

    #[test]
    fn float_infeasibility_is_certified_exactly() {
        // x <= 1, y <= 1, x + y >= 5, x - y = 0
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), Some(q("1")), q("1"));
        let y = m.add_var(q("0"), Some(q("1")), q("0"));
        m.add_constraint([(x, q("1")), (y, q("1"))], Relation::Ge, q("5"));
        m.add_constraint([(x, q("1")), (y, q("-1"))], Relation::Eq, q("0"));
        let bounds: Vec<_> = (0..2).map(|j| (m.lower(j).clone(), m.upper(j).cloned())).collect();
        let mut s = Simplex::<f64>::new(&m, LpOptions::default()).unwrap();
        assert_eq!(s.solve().unwrap(), SimplexStatus::Infeasible);
        assert!(proves_infeasible(&m, &bounds, &s.infeasibility_ray().unwrap()));
        let mut loose = bounds.clone();
        loose[y].1 = Some(q("4"));
        assert!(!proves_infeasible(&m, &loose, &s.infeasibility_ray().unwrap()));
    }

    #[test]
    fn mixed_integer_program() {
        // min 2x + y, x + y >= 5/2, y <= 1, x integer
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), Some(q("5")), q("2"));
        let y = m.add_var(q("0"), Some(q("1")), q("1"));
        m.add_constraint([(x, q("1")), (y, q("1"))], Relation::Ge, q("5/2"));
        let r = ilp_solve(&m, &[x], &IlpOptions::default()).unwrap();
        assert_eq!(r.status, IlpStatus::Optimal);
        let best = r.incumbent.unwrap();
        assert_eq!(best.objective, q("9/2"));
        assert_eq!(best.values, vec![q("2"), q("1/2")]);
    }

    #[test]
    fn zero_time_limit_reports_timeout() {
        let mut m = LpModel::new();
        let x = m.add_var(q("0"), Some(q("4")), q("1"));
        m.add_constraint([(x, q("1"))], Relation::Ge, q("1/3"));
        let opts = IlpOptions {
            time_limit: Some(Duration::ZERO),
            incumbent: Some(vec![q("4")]),
            ..IlpOptions::default()
        };
        let r = ilp_solve(&m, &[x], &opts).unwrap();
        assert_eq!(r.status, IlpStatus::TimedOut);
        assert_eq!(r.incumbent.unwrap().objective, q("4"));
        assert_eq!(r.dual_bound, None);
    }
}
