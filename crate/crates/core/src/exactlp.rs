//! Exact two-phase primal simplex over rationals.
//!
//! Maximizes `c·x` subject to rows `a·x {<=,>=,=} b` and `x >= l`. Pivoting
//! follows Bland's rule, so the solver terminates on the heavily degenerate
//! configuration LPs. Every optimal answer carries a dual vector that is
//! re-checked exactly before it is returned.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rat;

/// Largest number of structural variables [`solve_lp`] accepts.
pub const MAX_LP_VARIABLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// A maximization problem. Variables are bounded below by `lower_bounds`
/// (zero unless changed) and unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
    pub lower_bounds: Vec<Rat>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rat>) -> Self {
        let lower_bounds = vec![Rat::zero(); objective.len()];
        LinearProgram {
            objective,
            constraints: Vec::new(),
            lower_bounds,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Rat>, relation: Relation, rhs: Rat) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    fn validate(&self) -> Result<()> {
        let width = self.objective.len();
        if width > MAX_LP_VARIABLES {
            return Err(Error::SizeLimit(format!(
                "{width} LP variables exceeds the cap of {MAX_LP_VARIABLES}"
            )));
        }
        if self.lower_bounds.len() != width {
            return Err(Error::MalformedLp(format!(
                "{} lower bounds for {width} variables",
                self.lower_bounds.len()
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != width {
                return Err(Error::MalformedLp(format!(
                    "row {i} has {} coefficients, objective has {width}",
                    row.coeffs.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_lp`]. `primal`, `dual` are empty unless `Optimal`.
///
/// Dual signs follow the maximization convention: `y_i >= 0` on `Le` rows,
/// `y_i <= 0` on `Ge` rows, free on `Eq` rows, and `Aᵀy >= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<Rat>,
    pub dual: Vec<Rat>,
    pub objective_value: Rat,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            primal: Vec::new(),
            dual: Vec::new(),
            objective_value: Rat::zero(),
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let mut tableau = Tableau::new(lp);

    if tableau.has_artificials() {
        tableau.set_phase_one_objective();
        if tableau.run(false) == PivotOutcome::Unbounded {
            // phase one is bounded above by zero
            return Err(Error::Certificate("phase one reported unbounded".into()));
        }
        if tableau.objective_rhs().is_negative() {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        tableau.drive_out_artificials();
    }

    tableau.set_phase_two_objective(&lp.objective);
    if tableau.run(true) == PivotOutcome::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let solution = tableau.extract(lp);
    check_certificate(lp, &solution)?;
    Ok(solution)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PivotOutcome {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Surplus,
    Artificial,
}

struct Tableau {
    rows: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    /// Reduced costs `c_B B⁻¹ A_j - c_j`.
    objective: Vec<Rat>,
    objective_rhs: Rat,
    costs: Vec<Rat>,
    kinds: Vec<ColumnKind>,
    basis: Vec<usize>,
    /// Column that started as `e_i` for row `i`; its current contents are
    /// column `i` of `B⁻¹`.
    unit_column: Vec<usize>,
    /// Row was multiplied by -1 to make its rhs nonnegative.
    flipped: Vec<bool>,
    num_structural: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();

        let mut extra = 0;
        for row in &lp.constraints {
            extra += match effective_relation(lp, row) {
                Relation::Le => 1,
                Relation::Ge => 2,
                Relation::Eq => 1,
            };
        }
        let width = n + extra;

        let mut kinds = vec![ColumnKind::Structural; n];
        kinds.reserve(extra);
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut unit_column = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);

        for (i, row) in lp.constraints.iter().enumerate() {
            let shifted = shifted_rhs(lp, row);
            let flip = shifted.is_negative();
            let mut coeffs: Vec<Rat> = Vec::with_capacity(width);
            for c in &row.coeffs {
                coeffs.push(if flip { -c } else { c.clone() });
            }
            coeffs.resize(width, Rat::zero());
            let relation = effective_relation(lp, row);
            let col = kinds.len();
            match relation {
                Relation::Le => {
                    kinds.push(ColumnKind::Slack);
                    coeffs[col] = Rat::from_integer(1.into());
                    basis.push(col);
                    unit_column.push(col);
                }
                Relation::Ge => {
                    kinds.push(ColumnKind::Surplus);
                    kinds.push(ColumnKind::Artificial);
                    coeffs[col] = Rat::from_integer((-1).into());
                    coeffs[col + 1] = Rat::from_integer(1.into());
                    basis.push(col + 1);
                    unit_column.push(col + 1);
                }
                Relation::Eq => {
                    kinds.push(ColumnKind::Artificial);
                    coeffs[col] = Rat::from_integer(1.into());
                    basis.push(col);
                    unit_column.push(col);
                }
            }
            debug_assert_eq!(basis.len(), i + 1);
            rows.push(coeffs);
            rhs.push(if flip { -shifted } else { shifted });
            flipped.push(flip);
        }

        Tableau {
            rows,
            rhs,
            objective: vec![Rat::zero(); width],
            objective_rhs: Rat::zero(),
            costs: vec![Rat::zero(); width],
            kinds,
            basis,
            unit_column,
            flipped,
            num_structural: n,
        }
    }

    fn has_artificials(&self) -> bool {
        self.kinds.contains(&ColumnKind::Artificial)
    }

    fn objective_rhs(&self) -> &Rat {
        &self.objective_rhs
    }

    fn set_phase_one_objective(&mut self) {
        let minus_one = Rat::from_integer((-1).into());
        self.costs = self
            .kinds
            .iter()
            .map(|k| {
                if *k == ColumnKind::Artificial {
                    minus_one.clone()
                } else {
                    Rat::zero()
                }
            })
            .collect();
        self.price_out();
    }

    fn set_phase_two_objective(&mut self, objective: &[Rat]) {
        for (j, c) in self.costs.iter_mut().enumerate() {
            *c = if j < self.num_structural {
                objective[j].clone()
            } else {
                Rat::zero()
            };
        }
        self.price_out();
    }

    /// Recomputes reduced costs and objective value from `costs` and basis.
    fn price_out(&mut self) {
        let width = self.costs.len();
        let mut reduced: Vec<Rat> = self.costs.iter().map(|c| -c).collect();
        let mut value = Rat::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &self.costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, entry) in self.rows[r].iter().enumerate().take(width) {
                if !entry.is_zero() {
                    reduced[j] += cb * entry;
                }
            }
            value += cb * &self.rhs[r];
        }
        self.objective = reduced;
        self.objective_rhs = value;
    }

    fn run(&mut self, forbid_artificial: bool) -> PivotOutcome {
        loop {
            // Bland: lowest-index improving column
            let entering = (0..self.costs.len()).find(|&j| {
                !(forbid_artificial && self.kinds[j] == ColumnKind::Artificial)
                    && self.objective[j].is_negative()
            });
            let Some(col) = entering else {
                return PivotOutcome::Optimal;
            };

            let mut leaving: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &leaving {
                    None => true,
                    Some((best_r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*best_r])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((row, _)) = leaving else {
                return PivotOutcome::Unbounded;
            };
            self.pivot(row, col);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        for entry in self.rows[row].iter_mut() {
            if !entry.is_zero() {
                *entry /= &pivot;
            }
        }
        self.rhs[row] /= &pivot;

        let pivot_row = std::mem::take(&mut self.rows[row]);
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (entry, p) in self.rows[r].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *entry -= &factor * p;
                }
            }
            self.rhs[r] -= &factor * &pivot_rhs;
        }
        let factor = self.objective[col].clone();
        if !factor.is_zero() {
            for (entry, p) in self.objective.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *entry -= &factor * p;
                }
            }
            self.objective_rhs -= &factor * &pivot_rhs;
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// After a feasible phase one, pivots zero-level artificials out of the
    /// basis where possible. Rows where no pivot exists are redundant and
    /// stay put; their non-artificial entries are all zero so later pivots
    /// leave them untouched.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows.len() {
            if self.kinds[self.basis[r]] != ColumnKind::Artificial {
                continue;
            }
            let col = (0..self.kinds.len())
                .find(|&j| self.kinds[j] != ColumnKind::Artificial && !self.rows[r][j].is_zero());
            if let Some(col) = col {
                self.pivot(r, col);
            }
        }
    }

    fn extract(&self, lp: &LinearProgram) -> LpSolution {
        let mut primal = lp.lower_bounds.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                primal[b] += &self.rhs[r];
            }
        }
        let dual = (0..self.rows.len())
            .map(|i| {
                // unit columns have zero phase-two cost, so the reduced
                // cost equals (c_B B⁻¹)_i
                let y = self.objective[self.unit_column[i]].clone();
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let objective_value = dot(&lp.objective, &primal);
        LpSolution {
            status: LpStatus::Optimal,
            primal,
            dual,
            objective_value,
        }
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .map(|(x, y)| x * y)
        .sum()
}

fn shifted_rhs(lp: &LinearProgram, row: &Constraint) -> Rat {
    &row.rhs - dot(&row.coeffs, &lp.lower_bounds)
}

fn effective_relation(lp: &LinearProgram, row: &Constraint) -> Relation {
    if shifted_rhs(lp, row).is_negative() {
        match row.relation {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    } else {
        row.relation
    }
}

/// Exact primal feasibility, dual feasibility and strong duality.
pub fn check_certificate(lp: &LinearProgram, sol: &LpSolution) -> Result<()> {
    if sol.status != LpStatus::Optimal {
        return Ok(());
    }
    let x = &sol.primal;
    let y = &sol.dual;
    if x.len() != lp.num_vars() || y.len() != lp.constraints.len() {
        return Err(Error::Certificate("vector lengths".into()));
    }
    for (j, (xj, lj)) in x.iter().zip(&lp.lower_bounds).enumerate() {
        if xj < lj {
            return Err(Error::Certificate(format!("x[{j}] below its lower bound")));
        }
    }
    for (i, row) in lp.constraints.iter().enumerate() {
        let lhs = dot(&row.coeffs, x);
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Ge => lhs >= row.rhs,
            Relation::Eq => lhs == row.rhs,
        };
        if !ok {
            return Err(Error::Certificate(format!("row {i} violated by primal")));
        }
        let sign_ok = match row.relation {
            Relation::Le => !y[i].is_negative(),
            Relation::Ge => !y[i].is_positive(),
            Relation::Eq => true,
        };
        if !sign_ok {
            return Err(Error::Certificate(format!("dual {i} has the wrong sign")));
        }
    }
    for j in 0..lp.num_vars() {
        let col: Rat = lp
            .constraints
            .iter()
            .zip(y)
            .filter(|(row, yi)| !row.coeffs[j].is_zero() && !yi.is_zero())
            .map(|(row, yi)| &row.coeffs[j] * yi)
            .sum();
        if col < lp.objective[j] {
            return Err(Error::Certificate(format!("dual constraint {j} violated")));
        }
    }
    // with x >= l the dual objective is c·l + (b - A l)·y
    let mut dual_value = dot(&lp.objective, &lp.lower_bounds);
    for (row, yi) in lp.constraints.iter().zip(y) {
        dual_value += shifted_rhs(lp, row) * yi;
    }
    if dual_value != sol.objective_value {
        return Err(Error::Certificate(format!(
            "primal {} != dual {dual_value}",
            sol.objective_value
        )));
    }
    if dot(&lp.objective, x) != sol.objective_value {
        return Err(Error::Certificate("objective mismatch".into()));
    }
    Ok(())
}
