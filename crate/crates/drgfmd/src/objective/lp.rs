//! Dense two-phase simplex method for small linear programs in standard
//! form: minimize c'z subject to A z = b, z >= 0.
//!
//! Desk-scale only (tens of variables); Bland's rule keeps it from
//! cycling.

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("infeasible program (phase-1 objective {0})")]
    Infeasible(f64),
    #[error("unbounded program")]
    Unbounded,
    #[error("dimension mismatch between A ({rows}x{cols}), b ({b_len}), c ({c_len})")]
    Shape {
        rows: usize,
        cols: usize,
        b_len: usize,
        c_len: usize,
    },
}

struct Tableau {
    /// m rows of [columns | rhs].
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry holds minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width - 1]
    }

    fn objective(&self) -> f64 {
        -self.cost[self.width - 1]
    }

    /// Rebuilds the reduced-cost row from raw costs for the current basis:
    /// `z_j = c_j - c_B' B^-1 A_j`, rhs entry `-c_B' B^-1 b`.
    fn install_costs(&mut self, c: &[f64]) {
        let mut z = vec![0.0; self.width];
        z[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let coeff = if b < c.len() { c[b] } else { 0.0 };
            if coeff != 0.0 {
                for j in 0..self.width {
                    z[j] -= coeff * self.rows[i][j];
                }
            }
        }
        self.cost = z;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let f = r[col];
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, &pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Simplex iterations with Bland's rule, entering columns restricted
    /// to `0..allowed_cols`.
    fn run(&mut self, allowed_cols: usize) -> Result<(), LpError> {
        loop {
            let Some(col) = (0..allowed_cols).find(|&j| self.cost[j] < -1e-9) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > 1e-12 {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        Some((bi, br))
                            if !(ratio < br - 1e-12
                                || (ratio < br + 1e-12 && self.basis[i] < self.basis[bi])) =>
                        {
                            Some((bi, br))
                        }
                        _ => Some((i, ratio)),
                    };
                }
            }
            let (row, _) = best.ok_or(LpError::Unbounded)?;
            self.pivot(row, col);
        }
    }
}

/// Solves `min c'z  s.t.  A z = b, z >= 0` by the two-phase tableau method.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution, LpError> {
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { c.len() };
    if b.len() != m || c.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(LpError::Shape {
            rows: m,
            cols: n,
            b_len: b.len(),
            c_len: c.len(),
        });
    }

    // Rows with artificial columns appended; flip rows with negative rhs.
    let width = n + m + 1;
    let mut rows = vec![vec![0.0f64; width]; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i][j] = flip * a[i][j];
        }
        rows[i][n + i] = 1.0;
        rows[i][width - 1] = flip * b[i];
    }
    let mut t = Tableau {
        rows,
        cost: vec![0.0; width],
        basis: (n..n + m).collect(),
        width,
    };

    // Phase 1: minimize the artificial mass.
    let mut phase1_cost = vec![0.0; n + m];
    phase1_cost[n..].fill(1.0);
    t.install_costs(&phase1_cost);
    t.run(n + m)?;
    if t.objective() > 1e-8 {
        return Err(LpError::Infeasible(t.objective()));
    }
    // Drive surviving artificials out of degenerate rows.
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
                t.pivot(i, col);
            }
        }
    }

    // Phase 2 on the real costs; artificials may not re-enter.
    t.install_costs(c);
    t.run(n)?;

    let mut point = vec![0.0f64; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            point[b] = t.rhs(i);
        }
    }
    let objective = c.iter().zip(&point).map(|(ci, zi)| ci * zi).sum();
    Ok(LpSolution { objective, point })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_textbook_program() {
        // min -x - y  s.t.  x + y + s = 1 -> optimum -1.
        let a = vec![vec![1.0, 1.0, 1.0]];
        let b = vec![1.0];
        let c = vec![-1.0, -1.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_infeasible() {
        // x + y = 1 and x + y = 2 cannot both hold.
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![1.0, 2.0];
        let c = vec![1.0, 1.0];
        assert!(matches!(solve(&a, &b, &c), Err(LpError::Infeasible(_))));
    }

    #[test]
    fn reports_unbounded() {
        // min -x with only y constrained.
        let a = vec![vec![0.0, 1.0]];
        let b = vec![1.0];
        let c = vec![-1.0, 0.0];
        assert!(matches!(solve(&a, &b, &c), Err(LpError::Unbounded)));
    }

    #[test]
    fn two_constraint_program() {
        // min x1 - 2 x2, x1 + x2 + s1 = 4, x2 + s2 = 2.
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
        let b = vec![4.0, 2.0];
        let c = vec![1.0, -2.0, 0.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective + 4.0).abs() < 1e-12, "{}", sol.objective);
        assert!((sol.point[0] - 0.0).abs() < 1e-12);
        assert!((sol.point[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x - y = -1 is x + y = 1 after the flip.
        let a = vec![vec![-1.0, -1.0]];
        let b = vec![-1.0];
        let c = vec![1.0, 2.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.point[0] - 1.0).abs() < 1e-12);
    }
}
