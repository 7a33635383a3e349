//! Dense backend: the simplex prices every canonical strategy column,
//! generating each one on the fly from its enumeration index. Memory stays
//! linear in the matrix size even though the column set is exponential.

use std::time::Instant;

use crate::predictions::PredictionMatrix;
use crate::strategies::{canonical_pair_at, enumerate_canonical_with_cap};

use super::simplex::{solve_standard_form, ColumnSource, SimplexOptions};
use super::{
    assemble_result, degenerate_zero_result, extract_raw, map_simplex_error, rhs, with_threads,
    write_pair_column, write_slack_column, write_v_column, LpProblem, SolveError, SolveResult,
    SolverBackend, COL_SLACK, COL_V, FIXED_COLS,
};

/// Default cap on n+m for the dense backend.
pub const DENSE_CAP: usize = 22;

pub struct DenseBackend;

impl SolverBackend for DenseBackend {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve(&self, prob: &LpProblem) -> Result<SolveResult, SolveError> {
        let started = Instant::now();
        let q = prob.q();
        let (n, m) = (q.rows(), q.cols());

        // Size check first; it also validates the side lengths.
        let pair_count = enumerate_canonical_with_cap(n, m, DENSE_CAP)?.count();
        if q.is_zero() {
            return degenerate_zero_result(prob, started);
        }

        let source = FullColumnSet {
            q,
            n,
            m,
            pair_count,
        };
        let b = rhs(n * m, prob.v_cap());
        let opts = SimplexOptions {
            tol: prob.tolerance(),
            ..SimplexOptions::default()
        };

        let outcome = with_threads(prob.threads(), || {
            solve_standard_form(&source, &b, &opts, None)
        })?
        .map_err(map_simplex_error)?;

        let raw = extract_raw(
            &outcome,
            |k| canonical_pair_at(k, n, m),
            source.num_cols(),
            prob.tolerance(),
            pair_count as u64,
        );
        assemble_result(prob, raw, started)
    }
}

/// All canonical strategy columns plus the V and cap-slack columns.
struct FullColumnSet<'a> {
    q: &'a PredictionMatrix,
    n: usize,
    m: usize,
    pair_count: usize,
}

impl ColumnSource for FullColumnSet<'_> {
    fn num_rows(&self) -> usize {
        self.n * self.m + 2
    }

    fn num_cols(&self) -> usize {
        FIXED_COLS + self.pair_count
    }

    fn cost(&self, col: usize) -> f64 {
        if col == COL_V {
            1.0
        } else {
            0.0
        }
    }

    fn write_column(&self, col: usize, out: &mut [f64]) {
        match col {
            COL_V => write_v_column(self.q, out),
            COL_SLACK => write_slack_column(self.n * self.m, out),
            _ => {
                let pair = canonical_pair_at(col - FIXED_COLS, self.n, self.m);
                write_pair_column(&pair, self.n, self.m, out);
            }
        }
    }
}
