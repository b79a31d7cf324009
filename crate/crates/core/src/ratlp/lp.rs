//! Sparse rational LP models and an exact bounded-variable simplex.
//!
//! Every row `a·x (<=|>=|=) b` gets a logical column `r` with `a·x + r = b`
//! whose bounds encode the relation (`[0, inf)`, `(-inf, 0]`, `[0, 0]`).
//! Rows whose logical starts outside its bounds get an artificial column
//! for phase 1.

use std::fmt::{self, Write as _};
use std::time::Instant;

use super::rational::Rational;
use super::simplex::{Simplex, SimplexStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn activity(&self, values: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &values[*j]).sum()
    }

    pub fn is_satisfied(&self, values: &[Rational]) -> bool {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("constraint {row} references variable {var} but the model has {num_vars} variables")]
    VarOutOfRange { row: usize, var: usize, num_vars: usize },
    #[error("variable {var} has lower bound above its upper bound")]
    InvertedBounds { var: usize },
    #[error("time limit reached during simplex")]
    TimeLimit,
}

/// A minimization LP over variables with finite lower bounds and optional
/// upper bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpModel {
    lower: Vec<Rational>,
    upper: Vec<Option<Rational>>,
    objective: Vec<Rational>,
    names: Vec<String>,
    constraints: Vec<Constraint>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: Rational, upper: Option<Rational>, cost: Rational) -> usize {
        let id = self.lower.len();
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.names.push(format!("x{id}"));
        id
    }

    pub fn set_var_name(&mut self, var: usize, name: impl Into<String>) {
        self.names[var] = name.into();
    }

    /// Adds a row; repeated variable indices are summed and zero coefficients
    /// dropped. Index validation is deferred to [`LpModel::validate`].
    pub fn add_constraint(
        &mut self,
        coeffs: impl IntoIterator<Item = (usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        let mut coeffs: Vec<(usize, Rational)> = coeffs.into_iter().collect();
        coeffs.sort_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        self.constraints.push(Constraint {
            coeffs: merged,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn lower(&self, var: usize) -> &Rational {
        &self.lower[var]
    }

    pub fn upper(&self, var: usize) -> Option<&Rational> {
        self.upper[var].as_ref()
    }

    pub fn set_bounds(&mut self, var: usize, lower: Rational, upper: Option<Rational>) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for var in 0..self.num_vars() {
            if let Some(u) = &self.upper[var] {
                if *u < self.lower[var] {
                    return Err(LpError::InvertedBounds { var });
                }
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if let Some((var, _)) = c.coeffs.iter().find(|(j, _)| *j >= self.num_vars()) {
                return Err(LpError::VarOutOfRange {
                    row,
                    var: *var,
                    num_vars: self.num_vars(),
                });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        self.objective
            .iter()
            .zip(values)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Exact primal feasibility: every bound and row holds with no tolerance.
    pub fn is_feasible(&self, values: &[Rational]) -> bool {
        values.len() == self.num_vars()
            && values.iter().enumerate().all(|(j, x)| {
                *x >= self.lower[j] && self.upper[j].as_ref().map_or(true, |u| x <= u)
            })
            && self.constraints.iter().all(|c| c.is_satisfied(values))
    }

    /// Renders the model in CPLEX LP text format with coefficients as `p/q`.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, a: &Rational, name: &str| {
            if a.is_negative() {
                let _ = write!(out, " - {} {}", a.abs(), name);
            } else if first {
                let _ = write!(out, " {a} {name}");
            } else {
                let _ = write!(out, " + {a} {name}");
            }
        };
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                term(&mut out, first, c, &self.names[j]);
                first = false;
            }
        }
        if first {
            out.push_str(" 0/1 x0");
        }
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            for (k, (j, a)) in c.coeffs.iter().enumerate() {
                term(&mut out, k == 0, a, &self.names[*j]);
            }
            if c.coeffs.is_empty() {
                out.push_str(" 0/1 x0");
            }
            let _ = writeln!(out, " {} {}", c.relation, c.rhs);
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            match &self.upper[j] {
                Some(u) => {
                    let _ = writeln!(out, " {} <= {} <= {}", self.lower[j], self.names[j], u);
                }
                None => {
                    let _ = writeln!(out, " {} >= {}", self.names[j], self.lower[j]);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: Rational,
    pub values: Vec<Rational>,
    /// Structural variables that are basic at the returned vertex.
    pub basis: Vec<usize>,
    /// One multiplier per model row (zero for dropped empty rows).
    pub duals: Vec<Rational>,
    pub reduced_costs: Vec<Rational>,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            objective: Rational::zero(),
            values: Vec::new(),
            basis: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Independent optimality certificate check against `model`: primal
    /// feasibility, dual sign conditions, complementary slackness and equal
    /// primal/dual objectives, all exact. Reduced costs are recomputed from
    /// the model rather than taken from the solver.
    pub fn certify(&self, model: &LpModel) -> bool {
        if self.status != LpStatus::Optimal || !model.is_feasible(&self.values) {
            return false;
        }
        if self.duals.len() != model.num_constraints() {
            return false;
        }
        let mut reduced: Vec<Rational> = model.objective.clone();
        let mut dual_obj = Rational::zero();
        for (c, y) in model.constraints.iter().zip(&self.duals) {
            let sign_ok = match c.relation {
                Relation::Ge => !y.is_negative(),
                Relation::Le => !y.is_positive(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            if y.is_zero() {
                continue;
            }
            if c.activity(&self.values) != c.rhs {
                return false;
            }
            dual_obj += y * &c.rhs;
            for (j, a) in &c.coeffs {
                reduced[*j] -= y * a;
            }
        }
        for (j, d) in reduced.iter().enumerate() {
            let x = &self.values[j];
            let at_lower = *x == model.lower[j];
            let at_upper = model.upper[j].as_ref() == Some(x);
            let ok = (d.is_zero())
                || (d.is_positive() && at_lower)
                || (d.is_negative() && at_upper);
            if !ok {
                return false;
            }
            if !d.is_zero() {
                dual_obj += d * x;
            }
        }
        dual_obj == self.objective && model.objective_value(&self.values) == self.objective
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Consecutive degenerate Dantzig pivots tolerated before switching to
    /// Bland's rule until the next nondegenerate pivot.
    pub bland_after: usize,
    pub deadline: Option<Instant>,
    /// Solve in `f64` first and rebuild the final basis exactly. The result
    /// is exact either way; this only changes the work done.
    pub float_guide: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            bland_after: 50,
            deadline: None,
            float_guide: true,
        }
    }
}

pub fn lp_solve(model: &LpModel) -> Result<LpSolution, LpError> {
    lp_solve_with(model, &LpOptions::default())
}

pub fn lp_solve_with(model: &LpModel, opts: &LpOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    if opts.float_guide {
        if let Some(sol) = guided_solve(model, opts)? {
            return Ok(sol);
        }
    }
    let mut simplex = match Simplex::<Rational>::new(model, opts.clone()) {
        Some(s) => s,
        None => return Ok(LpSolution::without_point(LpStatus::Infeasible)),
    };
    let status = simplex.solve()?;
    Ok(simplex.solution(status))
}

/// Pivot budget for a floating-point run before it is abandoned.
pub(crate) fn float_pivot_cap(model: &LpModel) -> u64 {
    20 * (model.num_vars() + model.num_constraints()) as u64 + 1000
}

/// Floating-point solve, then an exact finish from its final basis. `None`
/// when the float run gives no usable optimal basis.
fn guided_solve(model: &LpModel, opts: &LpOptions) -> Result<Option<LpSolution>, LpError> {
    let Some(f) = Simplex::<f64>::new(model, opts.clone()) else {
        return Ok(None);
    };
    let mut f = f.with_pivot_cap(float_pivot_cap(model));
    if f.solve()? != SimplexStatus::Optimal {
        return Ok(None);
    }
    let Some(basis) = f.basis() else {
        return Ok(None);
    };
    let Some(mut exact) = Simplex::<Rational>::from_basis(model, opts.clone(), &basis) else {
        return Ok(None);
    };
    Ok(exact.resume()?.map(|status| exact.solution(status)))
}
