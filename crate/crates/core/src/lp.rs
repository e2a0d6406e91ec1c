//! Dense linear programming.
//!
//! Problems have the form `min cᵀx s.t. Ax ≤ b` with `x` free. The default
//! backend is a two-phase tableau simplex that prices with Dantzig's rule and
//! falls back to Bland's rule once it sees a run of degenerate pivots, which
//! rules out cycling. Everything downstream talks to [`LpBackend`], so another
//! engine can be slotted in without touching the polyhedral code.

use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    /// Row-major `m × d`.
    lhs: Vec<f64>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    /// Builds `min objectiveᵀx s.t. lhs·x ≤ rhs` from a row-major constraint matrix.
    pub fn new(objective: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let d = objective.len();
        if lhs.len() != d * rhs.len() {
            return Err(Error::input(format!(
                "constraint matrix has {} entries, expected {} rows x {} columns",
                lhs.len(),
                rhs.len(),
                d
            )));
        }
        if d == 0 && !rhs.is_empty() {
            return Err(Error::input("zero-dimensional program with constraints"));
        }
        Ok(LinearProgram {
            objective,
            lhs,
            rhs,
        })
    }

    pub fn from_rows(objective: Vec<f64>, rows: &[Vec<f64>], rhs: Vec<f64>) -> Result<Self> {
        let d = objective.len();
        if rows.len() != rhs.len() {
            return Err(Error::dim(rows.len(), rhs.len()));
        }
        let mut lhs = Vec::with_capacity(d * rows.len());
        for row in rows {
            if row.len() != d {
                return Err(Error::dim(d, row.len()));
            }
            lhs.extend_from_slice(row);
        }
        Self::new(objective, lhs, rhs)
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.lhs[i * d..(i + 1) * d]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Largest constraint violation `max(Ax − b)` at `x` (0 when there are no rows).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.n_constraints())
            .map(|i| dot(self.row(i), x) - self.rhs[i])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { argmin: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// Seam for LP engines.
pub trait LpBackend: Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome>;
}

/// Dense two-phase tableau simplex.
#[derive(Debug, Clone, Copy)]
pub struct DenseSimplex {
    /// Minimum magnitude of an admissible pivot element.
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_run: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex {
            pivot_tol: 1e-9,
            degenerate_run: 30,
        }
    }
}

/// Solves `lp` with the default backend.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    DenseSimplex::default().solve(lp)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Tableau {
    /// Constraint rows; the objective row is stored at index `m`.
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(p, q);
        {
            let row = &mut self.data[p * w..(p + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        let (head, tail) = self.data.split_at_mut(p * w);
        let (prow, rest) = tail.split_at_mut(w);
        let apply = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                    if v.abs() < 1e-14 {
                        *v = 0.0;
                    }
                }
                row[q] = 0.0;
            }
        };
        for row in head.chunks_exact_mut(w) {
            apply(row);
        }
        for row in rest.chunks_exact_mut(w) {
            apply(row);
        }
        self.basis[p] = q;
    }

    /// Runs simplex iterations with entering columns restricted to `0..enter_limit`.
    fn run(&mut self, enter_limit: usize, cfg: &DenseSimplex) -> Result<PhaseEnd> {
        let opt_tol = 1e-10;
        let max_iter = 50 * (self.m + self.width) + 1000;
        let mut degenerate = 0usize;
        let mut bland = false;
        for _ in 0..max_iter {
            let obj = self.m;
            let q = if bland {
                (0..enter_limit).find(|&j| self.at(obj, j) < -opt_tol)
            } else {
                let mut best = None;
                let mut best_val = -opt_tol;
                for j in 0..enter_limit {
                    let r = self.at(obj, j);
                    if r < best_val {
                        best_val = r;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = q else {
                return Ok(PhaseEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a > cfg.pivot_tol {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if (tie && self.basis[i] < self.basis[li]) || (!tie && ratio < lr) {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((p, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > cfg.degenerate_run {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(p, q);
        }
        Err(Error::Numerical(format!(
            "simplex iteration limit exceeded ({} rows, {} columns)",
            self.m,
            self.width - 1
        )))
    }
}

impl LpBackend for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome> {
        let d = lp.dim();
        let m = lp.n_constraints();
        let c = lp.objective();
        if m == 0 {
            return Ok(if c.iter().all(|&v| v == 0.0) {
                LpOutcome::Optimal {
                    argmin: vec![0.0; d],
                    value: 0.0,
                }
            } else {
                LpOutcome::Unbounded
            });
        }

        // Columns: u (d) | v (d) | slack (m) | artificial (k) | rhs, with x = u − v.
        let negative: Vec<usize> = (0..m).filter(|&i| lp.rhs()[i] < 0.0).collect();
        let k = negative.len();
        let n_struct = 2 * d + m;
        let width = n_struct + k + 1;
        let mut t = Tableau {
            m,
            width,
            data: vec![0.0; (m + 1) * width],
            basis: vec![0; m],
        };
        let mut art = 0;
        for i in 0..m {
            let sign = if lp.rhs()[i] < 0.0 { -1.0 } else { 1.0 };
            let row = lp.row(i);
            let base = i * width;
            for j in 0..d {
                t.data[base + j] = sign * row[j];
                t.data[base + d + j] = -sign * row[j];
            }
            t.data[base + 2 * d + i] = sign;
            t.data[base + width - 1] = sign * lp.rhs()[i];
            if sign < 0.0 {
                t.data[base + n_struct + art] = 1.0;
                t.basis[i] = n_struct + art;
                art += 1;
            } else {
                t.basis[i] = 2 * d + i;
            }
        }

        if k > 0 {
            let obj = m * width;
            for &i in &negative {
                for j in 0..n_struct {
                    t.data[obj + j] -= t.data[i * width + j];
                }
                t.data[obj + width - 1] -= t.data[i * width + width - 1];
            }
            match t.run(n_struct + k, self)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return Err(Error::Numerical("phase one reported unbounded".into()));
                }
            }
            let infeasibility = -t.rhs(m);
            if infeasibility > tol::feas() {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..m {
                if t.basis[i] >= n_struct {
                    if let Some(q) = (0..n_struct).find(|&j| t.at(i, j).abs() > self.pivot_tol) {
                        t.pivot(i, q);
                    }
                }
            }
        }

        // Phase two objective row.
        let cost = |j: usize| -> f64 {
            if j < d {
                c[j]
            } else if j < 2 * d {
                -c[j - d]
            } else {
                0.0
            }
        };
        let obj = m * width;
        for j in 0..width {
            t.data[obj + j] = if j < n_struct { cost(j) } else { 0.0 };
        }
        for i in 0..m {
            let cb = cost(t.basis[i]);
            if cb != 0.0 {
                for j in 0..width {
                    t.data[obj + j] -= cb * t.data[i * width + j];
                }
            }
        }
        match t.run(n_struct, self)? {
            PhaseEnd::Unbounded => return Ok(LpOutcome::Unbounded),
            PhaseEnd::Optimal => {}
        }

        let mut x = vec![0.0; d];
        for i in 0..m {
            let b = t.basis[i];
            let val = t.rhs(i);
            if b < d {
                x[b] += val;
            } else if b < 2 * d {
                x[b - d] -= val;
            }
        }
        let residual = lp.max_violation(&x);
        let scale = 1.0 + lp.rhs().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if residual > 1e-7 * scale {
            return Err(Error::Numerical(format!(
                "simplex solution violates constraints by {residual:e}"
            )));
        }
        let value = dot(c, &x);
        Ok(LpOutcome::Optimal { argmin: x, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(obj: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> LinearProgram {
        LinearProgram::from_rows(obj, &rows, rhs).unwrap()
    }

    #[test]
    fn unit_interval_minimum() {
        let out = solve_lp(&lp(vec![1.0], vec![vec![1.0], vec![-1.0]], vec![1.0, 0.0])).unwrap();
        match out {
            LpOutcome::Optimal { argmin, value } => {
                assert!(argmin[0].abs() < 1e-12);
                assert!(value.abs() < 1e-12);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let out = solve_lp(&lp(vec![1.0], vec![vec![1.0], vec![-1.0]], vec![-1.0, -1.0])).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn missing_lower_bound_is_unbounded() {
        let out = solve_lp(&lp(vec![1.0], vec![vec![1.0]], vec![1.0])).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(LinearProgram::new(vec![1.0, 0.0], vec![1.0, 2.0, 3.0], vec![1.0]).is_err());
        assert!(LinearProgram::from_rows(vec![1.0], &[vec![1.0, 2.0]], vec![1.0]).is_err());
    }

    #[test]
    fn two_dimensional_vertex() {
        // max x + y on the triangle x, y >= 0, x + 2y <= 4, 3x + y <= 6 → (8/5, 6/5).
        let out = solve_lp(&lp(
            vec![-1.0, -1.0],
            vec![
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![1.0, 2.0],
                vec![3.0, 1.0],
            ],
            vec![0.0, 0.0, 4.0, 6.0],
        ))
        .unwrap();
        let LpOutcome::Optimal { argmin, value } = out else {
            panic!("expected optimal");
        };
        assert!((argmin[0] - 1.6).abs() < 1e-10);
        assert!((argmin[1] - 1.2).abs() < 1e-10);
        assert!((value + 2.8).abs() < 1e-10);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Forty constraints active at the optimum (0, 0, 0).
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..40 {
            let a = k as f64 * std::f64::consts::TAU / 40.0;
            rows.push(vec![a.cos(), a.sin(), 1.0]);
            rhs.push(0.0);
        }
        rows.push(vec![0.0, 0.0, -1.0]);
        rhs.push(1.0);
        let out = solve_lp(&lp(vec![0.0, 0.0, -1.0], rows, rhs)).unwrap();
        assert!(out.value().unwrap().abs() < 1e-9);
    }

    #[test]
    fn no_constraints() {
        assert!(solve_lp(&lp(vec![0.0, 0.0], vec![], vec![])).unwrap().is_optimal());
        assert_eq!(
            solve_lp(&lp(vec![0.0, 1.0], vec![], vec![])).unwrap(),
            LpOutcome::Unbounded
        );
    }
}
