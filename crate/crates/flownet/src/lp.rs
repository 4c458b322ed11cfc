//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problem sizes here are tiny (tens of variables), so the tableau is kept
//! dense and the reduced-cost row is recomputed from the cost vector every
//! iteration — no accumulated drift, and switching phases is just swapping
//! cost vectors. Bland's rule makes pivoting deterministic and cycle-free.

use crate::error::{Error, Result};

/// Pivot / feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One row `coeffs · x  <relation>  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Maximize `objective · x` subject to the constraint rows and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m × (ncols + 1), last column is the rhs
    basis: Vec<usize>,
    ncols: usize,
    banned: Vec<bool>, // artificial columns, excluded in phase 2
}

impl Tableau {
    /// One simplex phase: pivot until the reduced costs certify optimality.
    /// Returns the iteration count; `Err(Unbounded)` if a ray is found.
    fn run(&mut self, cost: &[f64]) -> Result<usize> {
        let m = self.rows.len();
        let mut iterations = 0usize;
        loop {
            // z_j = c_B · column_j − c_j, recomputed from scratch.
            let mut entering = None;
            for j in 0..self.ncols {
                if self.banned[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut z = -cost[j];
                for i in 0..m {
                    let cb = cost[self.basis[i]];
                    if cb != 0.0 {
                        z += cb * self.rows[i][j];
                    }
                }
                if z < -LP_TOL {
                    entering = Some(j); // Bland: lowest improving index
                    break;
                }
            }
            let Some(j) = entering else {
                return Ok(iterations);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                if self.rows[i][j] > LP_TOL {
                    let ratio = self.rows[i][self.ncols] / self.rows[i][j];
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - LP_TOL
                                || (ratio <= lr + LP_TOL && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return Err(Error::Unbounded);
            };

            self.pivot(r, j);
            iterations += 1;
            assert!(iterations <= 100_000, "simplex with Bland's rule terminates");
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        for v in &mut self.rows[r] {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j];
            if factor != 0.0 {
                for k in 0..=self.ncols {
                    let delta = factor * self.rows[r][k];
                    self.rows[i][k] -= delta;
                }
                self.rows[i][j] = 0.0; // exact, despite rounding above
            }
        }
        self.basis[r] = j;
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.num_vars;
        assert_eq!(self.objective.len(), n);
        let m = self.constraints.len();

        // Normalize to nonnegative rhs so the artificial basis is feasible.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for c in &self.constraints {
            assert_eq!(c.coeffs.len(), n);
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Eq => Relation::Eq,
                    Relation::Ge => Relation::Le,
                };
                rows.push((c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs));
            } else {
                rows.push((c.coeffs.clone(), c.relation, c.rhs));
            }
        }

        let slack_count =
            rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
        let art_count =
            rows.iter().filter(|(_, rel, _)| *rel != Relation::Le).count();
        let ncols = n + slack_count + art_count;

        let mut tableau = Tableau {
            rows: vec![vec![0.0; ncols + 1]; m],
            basis: vec![0; m],
            ncols,
            banned: vec![false; ncols],
        };
        let mut phase1_cost = vec![0.0; ncols];
        let mut next_slack = n;
        let mut next_art = n + slack_count;
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            tableau.rows[i][..n].copy_from_slice(coeffs);
            tableau.rows[i][ncols] = *rhs;
            match rel {
                Relation::Le => {
                    tableau.rows[i][next_slack] = 1.0;
                    tableau.basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    tableau.rows[i][next_slack] = -1.0;
                    next_slack += 1;
                    tableau.rows[i][next_art] = 1.0;
                    tableau.basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    tableau.rows[i][next_art] = 1.0;
                    tableau.basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        for j in n + slack_count..ncols {
            phase1_cost[j] = -1.0; // maximize −Σ artificials
        }

        let mut iterations = 0;
        if art_count > 0 {
            iterations += tableau.run(&phase1_cost)?;
            let infeasibility: f64 = (0..m)
                .filter(|&i| tableau.basis[i] >= n + slack_count)
                .map(|i| tableau.rows[i][ncols])
                .sum();
            if infeasibility > 1e-7 {
                return Err(Error::Infeasible);
            }
            // Pivot basic-at-zero artificials out on any nonzero structural
            // entry; a fully zero row is redundant and can stay (its
            // artificial is banned, so it never re-enters).
            for i in 0..m {
                if tableau.basis[i] >= n + slack_count {
                    if let Some(j) =
                        (0..n + slack_count).find(|&j| tableau.rows[i][j].abs() > LP_TOL)
                    {
                        tableau.pivot(i, j);
                    }
                }
            }
            for j in n + slack_count..ncols {
                tableau.banned[j] = true;
            }
        }

        let mut phase2_cost = vec![0.0; ncols];
        phase2_cost[..n].copy_from_slice(&self.objective);
        iterations += tableau.run(&phase2_cost)?;

        let mut x = vec![0.0; n];
        for (i, &b) in tableau.basis.iter().enumerate() {
            if b < n {
                x[b] = tableau.rows[i][ncols];
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective, iterations })
    }
}
