//! Dense tableau simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Phase 1 adds one artificial variable per row and minimizes their sum.
//! Entering columns follow Dantzig's rule (most negative reduced cost);
//! after a run of degenerate pivots the solver falls back to Bland's rule
//! (lowest-index entering column, lowest-index basic variable among tied
//! leaving rows) until progress resumes, which rules out cycling on the
//! rank-deficient marginal systems. Redundant rows are
//! not removed: their artificials stay basic at zero and never re-enter.
//!
//! The artificial columns are kept in the tableau throughout, so they hold
//! `B⁻¹` and the simplex multipliers `y = c_Bᵀ B⁻¹` can be read off at any
//! basis. At the end of an infeasible phase 1 these multipliers are a Farkas
//! certificate: `yᵀA ≤ 0` and `yᵀb > 0`.

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-11;
const RATIO_TIE: f64 = 1e-12;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 20;

/// Equality-form linear program with a dense row-major constraint matrix.
#[derive(Clone, Debug)]
pub(crate) struct LinearProgram {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub(crate) enum PhaseOne {
    Feasible,
    /// `y` satisfies `yᵀA_j ≤ 0` for every column and `yᵀb = infeasibility`.
    Infeasible { y: Vec<f64>, infeasibility: f64 },
}

pub(crate) enum PhaseTwo {
    Optimal { x: Vec<f64>, y: Vec<f64>, objective: f64 },
    Unbounded,
}

pub(crate) struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    row_sign: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    pub fn new(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.rows, lp.cols);
        let width = n + m + 1;
        let mut t = vec![0.0; m * width];
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
            row_sign[i] = sign;
            let row = &mut t[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = sign * lp.a[i * n + j];
            }
            row[n + i] = 1.0;
            row[width - 1] = sign * lp.b[i];
        }
        Tableau {
            m,
            n,
            width,
            t,
            obj: vec![0.0; width],
            basis: (n..n + m).collect(),
            row_sign,
            pivots: 0,
            max_pivots: 50 * (m + n) + 1000,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n
    }

    /// Reduced costs for objective `cost(j)` at the current basis.
    fn price(&mut self, cost: impl Fn(usize) -> f64) {
        let w = self.width;
        for j in 0..w {
            self.obj[j] = if j < w - 1 { cost(j) } else { 0.0 };
        }
        for i in 0..self.m {
            let cb = cost(self.basis[i]);
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (o, r) in self.obj.iter_mut().zip(row) {
                    *o -= cb * r;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.t[r * w + col];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.t[r * w + col] = 1.0;
        let prow = self.t[r * w..(r + 1) * w].to_vec();
        let eliminate = |(i, row): (usize, &mut [f64])| {
            let f = row[col];
            if i != r && f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        };
        self.t.chunks_exact_mut(w).enumerate().for_each(eliminate);
        let f = self.obj[col];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Entering column: most negative reduced cost, or the lowest-index
    /// negative one (Bland) while a run of degenerate pivots lasts.
    fn entering(&self, bland: bool) -> Option<usize> {
        if bland {
            return (0..self.n).find(|&j| self.obj[j] < -COST_EPS);
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            let r = self.obj[j];
            if r < -COST_EPS && best.is_none_or(|(_, b)| r < b) {
                best = Some((j, r));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Pivots to optimality for the current objective row. Returns `false`
    /// if the problem is unbounded.
    fn iterate(&mut self) -> Result<bool> {
        let mut degenerate_run = 0usize;
        loop {
            let Some(col) = self.entering(degenerate_run >= DEGENERATE_RUN) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= RATIO_TIE * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && self.basis[i] < self.basis[k]) {
                            Some((i, ratio.min(best)))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio > 0.0 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            if self.pivots >= self.max_pivots {
                return Err(Error::NumericalStall(format!("simplex exceeded {} pivots", self.max_pivots)));
            }
            self.pivot(r, col);
        }
    }

    /// `y = c_Bᵀ B⁻¹` mapped back to the unflipped rows.
    fn multipliers(&self, cost: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for k in 0..self.m {
            let cb = cost(self.basis[k]);
            if cb != 0.0 {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += cb * self.at(k, self.n + i);
                }
            }
        }
        for (yi, s) in y.iter_mut().zip(&self.row_sign) {
            *yi *= s;
        }
        y
    }

    pub fn phase_one(&mut self, tolerance: f64) -> Result<PhaseOne> {
        let n = self.n;
        let artificial_cost = move |j: usize| if j >= n { 1.0 } else { 0.0 };
        self.price(artificial_cost);
        self.iterate()?;
        let infeasibility: f64 = (0..self.m).filter(|&i| self.is_artificial(self.basis[i])).map(|i| self.rhs(i)).sum();
        if infeasibility > tolerance {
            let y = self.multipliers(artificial_cost);
            return Ok(PhaseOne::Infeasible { y, infeasibility });
        }
        self.drive_out_artificials();
        Ok(PhaseOne::Feasible)
    }

    /// Pivots zero-level artificials out of the basis where some original
    /// column has a nonzero entry in their row; the remaining rows are
    /// redundant.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let row = &self.t[i * self.width..i * self.width + self.n];
            if let Some(j) = (0..self.n).find(|&j| row[j].abs() > 1e-9) {
                self.pivot(i, j);
            }
        }
    }

    /// Current basic solution over the original columns.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for i in 0..self.m {
            if !self.is_artificial(self.basis[i]) {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        x
    }

    /// Phase 2 from a feasible basis.
    pub fn minimize(&mut self, c: &[f64]) -> Result<PhaseTwo> {
        let n = self.n;
        let cost = |j: usize| if j < n { c[j] } else { 0.0 };
        self.price(cost);
        if !self.iterate()? {
            return Ok(PhaseTwo::Unbounded);
        }
        let x = self.primal();
        let objective = x.iter().zip(c).map(|(x, c)| x * c).sum();
        let y = self.multipliers(cost);
        Ok(PhaseTwo::Optimal { x, y, objective })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: usize, cols: usize, a: &[f64], b: &[f64]) -> LinearProgram {
        LinearProgram { rows, cols, a: a.to_vec(), b: b.to_vec() }
    }

    #[test]
    fn feasible_system_yields_solution() {
        // x0 + x1 = 1, x1 + x2 = 0.5
        let p = lp(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0], &[1.0, 0.5]);
        let mut t = Tableau::new(&p);
        assert!(matches!(t.phase_one(1e-9).unwrap(), PhaseOne::Feasible));
        let x = t.primal();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[1] + x[2] - 0.5).abs() < 1e-12);
        assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn infeasible_system_yields_farkas_vector() {
        // x0 + x1 = 1, x0 + x1 = 2
        let p = lp(2, 2, &[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0]);
        let mut t = Tableau::new(&p);
        match t.phase_one(1e-9).unwrap() {
            PhaseOne::Infeasible { y, infeasibility } => {
                assert!((infeasibility - 1.0).abs() < 1e-12);
                for j in 0..2 {
                    let ya: f64 = (0..2).map(|i| y[i] * p.a[i * 2 + j]).sum();
                    assert!(ya <= 1e-12);
                }
                let yb: f64 = y.iter().zip(&p.b).map(|(y, b)| y * b).sum();
                assert!((yb - infeasibility).abs() < 1e-12);
            }
            PhaseOne::Feasible => panic!("system is infeasible"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x0 = -0.25, x0 + x1 = 1
        let p = lp(2, 2, &[-1.0, 0.0, 1.0, 1.0], &[-0.25, 1.0]);
        let mut t = Tableau::new(&p);
        assert!(matches!(t.phase_one(1e-9).unwrap(), PhaseOne::Feasible));
        let x = t.primal();
        assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn phase_two_optimum_and_duals() {
        // min -x0 - 2 x1 s.t. x0 + x1 + s = 4, x1 + r = 3
        let p = lp(2, 4, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0], &[4.0, 3.0]);
        let c = [-1.0, -2.0, 0.0, 0.0];
        let mut t = Tableau::new(&p);
        assert!(matches!(t.phase_one(1e-9).unwrap(), PhaseOne::Feasible));
        match t.minimize(&c).unwrap() {
            PhaseTwo::Optimal { x, y, objective } => {
                assert!((objective + 7.0).abs() < 1e-12);
                assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
                // Strong duality and dual feasibility.
                assert!((y[0] * 4.0 + y[1] * 3.0 - objective).abs() < 1e-12);
                for j in 0..4 {
                    let ya = y[0] * p.a[j] + y[1] * p.a[4 + j];
                    assert!(c[j] - ya >= -1e-12);
                }
            }
            PhaseTwo::Unbounded => panic!("bounded problem"),
        }
    }

    #[test]
    fn unbounded_detected() {
        // min -x0 s.t. x0 - x1 = 1
        let p = lp(1, 2, &[1.0, -1.0], &[1.0]);
        let mut t = Tableau::new(&p);
        assert!(matches!(t.phase_one(1e-9).unwrap(), PhaseOne::Feasible));
        assert!(matches!(t.minimize(&[-1.0, 0.0]).unwrap(), PhaseTwo::Unbounded));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // Same row three times.
        let p = lp(3, 2, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 2.0]);
        let mut t = Tableau::new(&p);
        assert!(matches!(t.phase_one(1e-9).unwrap(), PhaseOne::Feasible));
        let x = t.primal();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
    }
}
