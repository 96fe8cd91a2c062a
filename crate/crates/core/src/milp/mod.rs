//! Self-contained mixed-integer linear programming substrate.
//!
//! [`lp_solve`] runs a bounded-variable revised simplex (two phases, LU
//! factorized basis with product-form updates, Dantzig pricing with a Bland
//! fallback once the objective stalls). [`bb_solve`] wraps it in best-first
//! branch-and-bound over the binary variables. [`export_lp_text`] writes the
//! conventional LP text format for optional external solving.

mod bb;
mod lp_text;
mod simplex;

pub use bb::bb_solve;
pub use lp_text::export_lp_text;

use crate::error::ModelError;

/// Variable kind: binaries carry implicit `[0, 1]` bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)` pairs; duplicates are summed.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization MILP over named variables.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Linear objective terms, minimized.
    pub objective: Vec<(usize, f64)>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
        self.variables.len() - 1
    }

    /// Adds a constraint, summing duplicate variable terms.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let mut combined: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (var, coeff) in terms {
            match combined.iter_mut().find(|(v, _)| *v == var) {
                Some((_, c)) => *c += coeff,
                None => combined.push((var, coeff)),
            }
        }
        combined.retain(|(_, c)| *c != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: combined,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.kind == VarKind::Binary && (v.lower < -1e-12 || v.upper > 1.0 + 1e-12) {
                return Err(ModelError::BadVariable(
                    v.name.clone(),
                    "binary bounds must lie within [0, 1]".into(),
                ));
            }
            if v.lower > v.upper {
                return Err(ModelError::BadVariable(
                    v.name.clone(),
                    format!("lower bound {} above upper bound {}", v.lower, v.upper),
                ));
            }
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::BadVariable(v.name.clone(), "NaN bound".into()));
            }
            let _ = i;
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite(c.name.clone()));
            }
            for (var, coeff) in &c.terms {
                if *var >= self.variables.len() {
                    return Err(ModelError::UnknownVariable(*var));
                }
                if !coeff.is_finite() {
                    return Err(ModelError::NonFinite(c.name.clone()));
                }
            }
        }
        for (var, coeff) in &self.objective {
            if *var >= self.variables.len() {
                return Err(ModelError::UnknownVariable(*var));
            }
            if !coeff.is_finite() {
                return Err(ModelError::NonFinite("objective".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solution of a (relaxed) linear program.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// One value per model variable.
    pub values: Vec<f64>,
    pub iterations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Proven optimal: the search tree was exhausted.
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at a limit; `objective` holds the best incumbent, if any.
    Limit,
}

/// Solution of a mixed-integer program.
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Absolute optimality gap (0 when proven optimal).
    pub gap: f64,
    pub nodes: u64,
}

/// Branch-and-bound options.
#[derive(Debug, Clone, Copy)]
pub struct BbOptions {
    pub node_limit: u64,
    /// Stop early once the absolute gap falls below this value.
    pub gap_tolerance: f64,
    pub lp_iteration_limit: u64,
}

impl Default for BbOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            gap_tolerance: 0.0,
            lp_iteration_limit: 20_000_000,
        }
    }
}

/// Feasibility tolerance on constraint residuals and variable bounds.
pub const FEAS_TOL: f64 = 1e-7;
/// Optimality tolerance on reduced costs.
pub const OPT_TOL: f64 = 1e-9;
/// Integrality tolerance on binary variables.
pub const INT_TOL: f64 = 1e-6;

/// Solves the LP relaxation of the model (binaries relaxed to `[0, 1]`).
pub fn lp_solve(model: &MilpModel) -> LpSolution {
    match model.validate() {
        Ok(()) => simplex::solve(model, &[], BbOptions::default().lp_iteration_limit),
        Err(_) => LpSolution {
            status: LpStatus::IterationLimit,
            objective: f64::NAN,
            values: vec![0.0; model.variables.len()],
            iterations: 0,
        },
    }
}

/// Independent residual check of a candidate solution: bounds, constraint
/// residuals, and (optionally) binary integrality.
pub fn check_solution(model: &MilpModel, values: &[f64], check_integrality: bool) -> Result<(), String> {
    if values.len() != model.variables.len() {
        return Err("value vector length mismatch".into());
    }
    for (v, &x) in model.variables.iter().zip(values) {
        if x < v.lower - FEAS_TOL || x > v.upper + FEAS_TOL {
            return Err(format!("variable {} = {x} outside [{}, {}]", v.name, v.lower, v.upper));
        }
        if check_integrality && v.kind == VarKind::Binary && (x - x.round()).abs() > INT_TOL {
            return Err(format!("binary {} = {x} not integral", v.name));
        }
    }
    for c in &model.constraints {
        let lhs: f64 = c.terms.iter().map(|(j, a)| a * values[*j]).sum();
        let scale = 1.0 + c.rhs.abs().max(lhs.abs());
        let ok = match c.sense {
            Sense::Le => lhs <= c.rhs + FEAS_TOL * scale,
            Sense::Ge => lhs >= c.rhs - FEAS_TOL * scale,
            Sense::Eq => (lhs - c.rhs).abs() <= FEAS_TOL * scale,
        };
        if !ok {
            return Err(format!("constraint {} violated: lhs {lhs} vs rhs {}", c.name, c.rhs));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimize_single_bounded_variable() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c0", vec![(x, 1.0)], Sense::Ge, 3.0);
        m.objective = vec![(x, 1.0)];
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.values[x] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_vertex() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        m.add_constraint("c0", vec![(x, 1.0), (y, 2.0)], Sense::Ge, 4.0);
        m.add_constraint("c1", vec![(x, 3.0), (y, 1.0)], Sense::Ge, 6.0);
        m.objective = vec![(x, 1.0), (y, 1.0)];
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.8).abs() < 1e-9, "objective {}", sol.objective);
        assert!((sol.values[x] - 1.6).abs() < 1e-9);
        assert!((sol.values[y] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c0", vec![(x, 1.0)], Sense::Le, -1.0);
        m.objective = vec![(x, 1.0)];
        assert_eq!(lp_solve(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.objective = vec![(x, 1.0)];
        assert_eq!(lp_solve(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_constraint_honored() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 7.0);
        m.objective = vec![(x, 2.0), (y, 1.0)];
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 7.0).abs() < 1e-9);
        assert!((sol.values[y] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_terms_combine() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c", vec![(x, 1.0), (x, 1.0)], Sense::Ge, 4.0);
        m.objective = vec![(x, 1.0)];
        let sol = lp_solve(&m);
        assert!((sol.values[x] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_overlapping_constraints() {
        // Many redundant constraints through one vertex stress the
        // anti-cycling path.
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        for k in 0..6 {
            let w = 1.0 + k as f64 * 0.0;
            m.add_constraint(format!("c{k}"), vec![(x, w), (y, w)], Sense::Ge, 2.0);
        }
        m.objective = vec![(x, 1.0), (y, 3.0)];
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }
}
