//! Two-phase revised simplex over streamed columns.
//!
//! The constraint matrix is never materialized: a [`ColumnSource`] writes
//! single columns on demand, so the engine works both for explicit restricted
//! masters and for the full set of strategy columns generated on the fly.
//! The basis inverse is kept explicitly (problems here have at most ~900
//! rows) and refactorized periodically.
//!
//! Pricing uses Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so the iteration provably terminates. The Dantzig scan
//! may run on multiple threads; the reduction keeps the most positive
//! reduced cost with ties broken toward the lowest column index, so the
//! entering column is identical for every worker count.

#![allow(clippy::needless_range_loop)] // index-heavy pivot arithmetic

use rayon::prelude::*;
use thiserror::Error;

/// Streams columns of a standard-form LP `max c'x, Ax = b, x >= 0`.
pub(crate) trait ColumnSource: Sync {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    fn cost(&self, col: usize) -> f64;
    /// Writes column `col` into `out` (`out.len() == num_rows()`).
    fn write_column(&self, col: usize, out: &mut [f64]);
}

#[derive(Debug, Error)]
pub(crate) enum SimplexError {
    #[error("problem is infeasible (phase-1 residual {residual:e})")]
    Infeasible { residual: f64 },
    #[error("objective is unbounded along entering column {column}")]
    Unbounded { column: usize },
    #[error("iteration limit {limit} exceeded without convergence")]
    IterationLimit { limit: u64 },
    #[error("basis became numerically singular")]
    SingularBasis,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOptions {
    /// Optimality / feasibility tolerance.
    pub tol: f64,
    pub max_iters: u64,
    /// Pivots between basis refactorizations.
    pub refactor_every: u64,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            tol: 1e-9,
            max_iters: 1_000_000,
            refactor_every: 64,
            bland_after: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub objective: f64,
    /// Column id basic in each row; ids `>= num_cols()` denote artificials.
    pub basis: Vec<usize>,
    /// Value of the basic variable in each row.
    pub basic_values: Vec<f64>,
    /// Dual multipliers, one per row.
    pub duals: Vec<f64>,
    pub iterations: u64,
}

const PIVOT_TOL: f64 = 1e-10;
const RATIO_TIE_TOL: f64 = 1e-10;

/// Solves the LP, optionally resuming from a known feasible basis.
pub(crate) fn solve_standard_form(
    source: &impl ColumnSource,
    b: &[f64],
    opts: &SimplexOptions,
    warm_basis: Option<&[usize]>,
) -> Result<SimplexOutcome, SimplexError> {
    let mut t = Tableau::new(source, b);
    let mut iterations = 0u64;

    let warmed = matches!(warm_basis, Some(basis) if t.try_warm_start(basis, opts));
    if !warmed {
        t.start_with_artificials();
        t.run(Phase::One, opts, &mut iterations)?;
        let residual: f64 = t
            .basis
            .iter()
            .zip(&t.x)
            .filter(|(&id, _)| id >= t.n)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        if residual > opts.tol {
            return Err(SimplexError::Infeasible { residual });
        }
    }

    t.run(Phase::Two, opts, &mut iterations)?;

    // Final refactorization tightens the solution and the duals.
    t.refactorize()?;
    let duals = t.duals(Phase::Two);
    let objective = t
        .basis
        .iter()
        .zip(&t.x)
        .map(|(&id, &v)| t.phase_cost(Phase::Two, id) * v)
        .sum();
    Ok(SimplexOutcome {
        objective,
        basis: t.basis,
        basic_values: t.x,
        duals,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PricingRule {
    Dantzig,
    Bland,
}

struct Tableau<'a, S: ColumnSource> {
    src: &'a S,
    m: usize,
    /// Number of real columns; artificial for row `r` has id `n + r`.
    n: usize,
    b: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major m x m basis inverse.
    b_inv: Vec<f64>,
    /// Basic variable values, `B^-1 b`.
    x: Vec<f64>,
    pivots_since_refactor: u64,
}

impl<'a, S: ColumnSource> Tableau<'a, S> {
    fn new(src: &'a S, b: &[f64]) -> Self {
        let m = src.num_rows();
        assert_eq!(b.len(), m);
        assert!(
            b.iter().all(|&v| v >= 0.0),
            "engine contract: right-hand side must be nonnegative"
        );
        Tableau {
            src,
            m,
            n: src.num_cols(),
            b: b.to_vec(),
            basis: Vec::new(),
            in_basis: vec![false; src.num_cols()],
            b_inv: vec![0.0; m * m],
            x: vec![0.0; m],
            pivots_since_refactor: 0,
        }
    }

    fn start_with_artificials(&mut self) {
        self.basis = (0..self.m).map(|r| self.n + r).collect();
        self.in_basis.iter_mut().for_each(|f| *f = false);
        self.b_inv.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.m {
            self.b_inv[r * self.m + r] = 1.0;
        }
        self.x = self.b.clone();
        self.pivots_since_refactor = 0;
    }

    /// Adopts `basis` if it factorizes and is primal feasible.
    fn try_warm_start(&mut self, basis: &[usize], opts: &SimplexOptions) -> bool {
        if basis.len() != self.m || basis.iter().any(|&id| id >= self.n + self.m) {
            return false;
        }
        self.basis = basis.to_vec();
        self.in_basis.iter_mut().for_each(|f| *f = false);
        for &id in basis {
            if id < self.n {
                self.in_basis[id] = true;
            }
        }
        if self.refactorize().is_err() {
            self.in_basis.iter_mut().for_each(|f| *f = false);
            return false;
        }
        self.x.iter().all(|&v| v >= -opts.tol)
    }

    fn write_col(&self, id: usize, out: &mut [f64]) {
        if id < self.n {
            self.src.write_column(id, out);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[id - self.n] = 1.0;
        }
    }

    fn phase_cost(&self, phase: Phase, id: usize) -> f64 {
        match phase {
            Phase::One => {
                if id >= self.n {
                    -1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if id >= self.n {
                    0.0
                } else {
                    self.src.cost(id)
                }
            }
        }
    }

    /// `y' = c_B' B^-1` for the given phase costs.
    fn duals(&self, phase: Phase) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (r, &id) in self.basis.iter().enumerate() {
            let c = self.phase_cost(phase, id);
            if c != 0.0 {
                let row = &self.b_inv[r * self.m..(r + 1) * self.m];
                for (yk, &brk) in y.iter_mut().zip(row) {
                    *yk += c * brk;
                }
            }
        }
        y
    }

    /// Picks the entering column, or `None` at optimality.
    fn price(&self, phase: Phase, rule: PricingRule, y: &[f64], tol: f64) -> Option<usize> {
        let reduced_cost = |scratch: &mut Vec<f64>, j: usize| -> f64 {
            self.src.write_column(j, scratch);
            let mut dot = 0.0;
            for (yk, ak) in y.iter().zip(scratch.iter()) {
                dot += yk * ak;
            }
            self.phase_cost(phase, j) - dot
        };

        match rule {
            PricingRule::Bland => {
                let mut scratch = vec![0.0; self.m];
                (0..self.n).find(|&j| !self.in_basis[j] && reduced_cost(&mut scratch, j) > tol)
            }
            PricingRule::Dantzig => {
                let serial = self.n * self.m < 1 << 14;
                let fold = |best: Option<(f64, usize)>, cand: Option<(f64, usize)>| match (best, cand)
                {
                    (None, c) => c,
                    (b, None) => b,
                    (Some((bv, bj)), Some((cv, cj))) => {
                        if cv > bv || (cv == bv && cj < bj) {
                            Some((cv, cj))
                        } else {
                            Some((bv, bj))
                        }
                    }
                };
                let best = if serial {
                    let mut scratch = vec![0.0; self.m];
                    let mut best = None;
                    for j in 0..self.n {
                        if self.in_basis[j] {
                            continue;
                        }
                        let rc = reduced_cost(&mut scratch, j);
                        if rc > tol {
                            best = fold(best, Some((rc, j)));
                        }
                    }
                    best
                } else {
                    (0..self.n)
                        .into_par_iter()
                        .with_min_len(1024)
                        .map_init(
                            || vec![0.0; self.m],
                            |scratch, j| {
                                if self.in_basis[j] {
                                    return None;
                                }
                                let rc = reduced_cost(scratch, j);
                                (rc > tol).then_some((rc, j))
                            },
                        )
                        .reduce(|| None, fold)
                };
                best.map(|(_, j)| j)
            }
        }
    }

    /// Leaving row by the minimum-ratio test. Basic artificials are pinned
    /// at zero in phase 2: any nonzero coefficient forces them out first.
    fn ratio_test(&self, phase: Phase, rule: PricingRule, d: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None; // (row, ratio, |pivot|)
        for r in 0..self.m {
            let dr = d[r];
            let artificial = self.basis[r] >= self.n;
            let ratio = if phase == Phase::Two && artificial && dr.abs() > PIVOT_TOL {
                0.0
            } else if dr > PIVOT_TOL {
                self.x[r].max(0.0) / dr
            } else {
                continue;
            };
            best = match best {
                None => Some((r, ratio, dr.abs())),
                Some((br, bratio, bpivot)) => {
                    let take = match rule {
                        PricingRule::Bland => {
                            ratio < bratio - RATIO_TIE_TOL
                                || (ratio <= bratio + RATIO_TIE_TOL
                                    && self.basis[r] < self.basis[br])
                        }
                        PricingRule::Dantzig => {
                            ratio < bratio - RATIO_TIE_TOL
                                || (ratio <= bratio + RATIO_TIE_TOL && dr.abs() > bpivot)
                        }
                    };
                    if take {
                        Some((r, ratio, dr.abs()))
                    } else {
                        Some((br, bratio, bpivot))
                    }
                }
            };
        }
        best.map(|(r, _, _)| r)
    }

    fn pivot(&mut self, leave_row: usize, entering: usize, d: &[f64]) {
        let piv = d[leave_row];
        let step = (self.x[leave_row] / piv).max(0.0);

        for r in 0..self.m {
            if r != leave_row {
                self.x[r] -= step * d[r];
                if self.x[r].abs() < 1e-14 {
                    self.x[r] = 0.0;
                }
            }
        }
        self.x[leave_row] = step;

        // Row operations keep b_inv equal to the inverse of the new basis.
        let (lo, hi) = (leave_row * self.m, (leave_row + 1) * self.m);
        for k in lo..hi {
            self.b_inv[k] /= piv;
        }
        for r in 0..self.m {
            if r == leave_row {
                continue;
            }
            let factor = d[r];
            if factor == 0.0 {
                continue;
            }
            for k in 0..self.m {
                self.b_inv[r * self.m + k] -= factor * self.b_inv[lo + k];
            }
        }

        let leaving = self.basis[leave_row];
        if leaving < self.n {
            self.in_basis[leaving] = false;
        }
        self.basis[leave_row] = entering;
        self.in_basis[entering] = true;
        self.pivots_since_refactor += 1;
    }

    /// Rebuilds `b_inv` and `x` from the basis by Gauss-Jordan elimination.
    fn refactorize(&mut self) -> Result<(), SimplexError> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (c, &id) in self.basis.iter().enumerate() {
            self.write_col(id, &mut col);
            for r in 0..m {
                mat[r * m + c] = col[r];
            }
        }
        let mut inv = vec![0.0; m * m];
        for r in 0..m {
            inv[r * m + r] = 1.0;
        }
        for c in 0..m {
            let mut piv_row = c;
            let mut piv_val = mat[c * m + c].abs();
            for r in c + 1..m {
                let v = mat[r * m + c].abs();
                if v > piv_val {
                    piv_row = r;
                    piv_val = v;
                }
            }
            if piv_val < 1e-12 {
                return Err(SimplexError::SingularBasis);
            }
            if piv_row != c {
                for k in 0..m {
                    mat.swap(c * m + k, piv_row * m + k);
                    inv.swap(c * m + k, piv_row * m + k);
                }
            }
            let piv = mat[c * m + c];
            for k in 0..m {
                mat[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = mat[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    mat[r * m + k] -= f * mat[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.b_inv = inv;
        for r in 0..m {
            let mut v = 0.0;
            for k in 0..m {
                v += self.b_inv[r * m + k] * self.b[k];
            }
            self.x[r] = if v.abs() < 1e-14 { 0.0 } else { v };
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn run(
        &mut self,
        phase: Phase,
        opts: &SimplexOptions,
        iterations: &mut u64,
    ) -> Result<(), SimplexError> {
        let mut rule = PricingRule::Dantzig;
        let mut degenerate_streak = 0u64;
        let mut d = vec![0.0; self.m];
        let mut col = vec![0.0; self.m];

        loop {
            *iterations += 1;
            if *iterations > opts.max_iters {
                return Err(SimplexError::IterationLimit {
                    limit: opts.max_iters,
                });
            }

            let y = self.duals(phase);
            let entering = match self.price(phase, rule, &y, opts.tol) {
                Some(j) => j,
                None => return Ok(()),
            };

            self.write_col(entering, &mut col);
            for r in 0..self.m {
                let row = &self.b_inv[r * self.m..(r + 1) * self.m];
                let mut v = 0.0;
                for (brk, ak) in row.iter().zip(col.iter()) {
                    v += brk * ak;
                }
                d[r] = v;
            }

            let leave_row = match self.ratio_test(phase, rule, &d) {
                Some(r) => r,
                None => return Err(SimplexError::Unbounded { column: entering }),
            };

            let step = (self.x[leave_row] / d[leave_row]).max(0.0);
            self.pivot(leave_row, entering, &d);

            if step <= RATIO_TIE_TOL {
                degenerate_streak += 1;
                if rule == PricingRule::Dantzig && degenerate_streak >= opts.bland_after {
                    rule = PricingRule::Bland;
                }
            } else {
                degenerate_streak = 0;
                rule = PricingRule::Dantzig;
            }

            if self.pivots_since_refactor >= opts.refactor_every {
                self.refactorize()?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense matrix-backed source for tests.
    struct DenseMat {
        rows: usize,
        cols: Vec<Vec<f64>>,
        costs: Vec<f64>,
    }

    impl ColumnSource for DenseMat {
        fn num_rows(&self) -> usize {
            self.rows
        }
        fn num_cols(&self) -> usize {
            self.cols.len()
        }
        fn cost(&self, col: usize) -> f64 {
            self.costs[col]
        }
        fn write_column(&self, col: usize, out: &mut [f64]) {
            out.copy_from_slice(&self.cols[col]);
        }
    }

    fn solve(src: &DenseMat, b: &[f64]) -> SimplexOutcome {
        solve_standard_form(src, b, &SimplexOptions::default(), None).unwrap()
    }

    #[test]
    fn equality_lp_with_slack_columns() {
        // max 3x + 2y s.t. x + y + s1 = 4, x + 3y + s2 = 6; optimum x=4.
        let src = DenseMat {
            rows: 2,
            cols: vec![
                vec![1.0, 1.0],
                vec![1.0, 3.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            costs: vec![3.0, 2.0, 0.0, 0.0],
        };
        let out = solve(&src, &[4.0, 6.0]);
        assert!((out.objective - 12.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_lp_terminates() {
        // Multiple ties in the ratio test.
        let src = DenseMat {
            rows: 3,
            cols: vec![
                vec![1.0, 1.0, 1.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            costs: vec![1.0, 0.0, 0.0, 0.0],
        };
        let out = solve(&src, &[1.0, 1.0, 1.0]);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp_is_detected() {
        // x1 + x2 = 1 and x1 + x2 = 3 cannot both hold.
        let src = DenseMat {
            rows: 2,
            cols: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            costs: vec![0.0, 0.0],
        };
        let err = solve_standard_form(&src, &[1.0, 3.0], &SimplexOptions::default(), None)
            .unwrap_err();
        assert!(matches!(err, SimplexError::Infeasible { .. }));
    }

    #[test]
    fn unbounded_lp_is_detected() {
        // max x with x - y = 0: x can grow with y.
        let src = DenseMat {
            rows: 1,
            cols: vec![vec![1.0], vec![-1.0]],
            costs: vec![1.0, 0.0],
        };
        let err = solve_standard_form(&src, &[0.0], &SimplexOptions::default(), None).unwrap_err();
        assert!(matches!(err, SimplexError::Unbounded { .. }));
    }

    #[test]
    fn redundant_row_keeps_artificial_and_solves() {
        // Second row duplicates the first; optimum unaffected.
        let src = DenseMat {
            rows: 3,
            cols: vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            costs: vec![5.0, 1.0],
        };
        let out = solve(&src, &[2.0, 2.0, 3.0]);
        assert!((out.objective - 13.0).abs() < 1e-9);
        assert!(out.basis.iter().any(|&id| id >= 2), "artificial stays basic");
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        let src = DenseMat {
            rows: 2,
            cols: vec![
                vec![2.0, 1.0],
                vec![1.0, 3.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            costs: vec![4.0, 5.0, 0.0, 0.0],
        };
        let b = [10.0, 15.0];
        let out = solve(&src, &b);
        let dual_obj: f64 = out.duals.iter().zip(b.iter()).map(|(y, bi)| y * bi).sum();
        assert!((dual_obj - out.objective).abs() < 1e-9);
    }

    #[test]
    fn warm_start_resumes_from_optimal_basis() {
        let src = DenseMat {
            rows: 2,
            cols: vec![
                vec![1.0, 1.0],
                vec![1.0, 3.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            costs: vec![3.0, 2.0, 0.0, 0.0],
        };
        let out = solve(&src, &[4.0, 6.0]);
        let again =
            solve_standard_form(&src, &[4.0, 6.0], &SimplexOptions::default(), Some(&out.basis))
                .unwrap();
        assert!((again.objective - out.objective).abs() < 1e-12);
    }
}
