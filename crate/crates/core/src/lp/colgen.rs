//! Column-generation backend: a restricted master over an explicit column
//! pool, grown by closed-form pricing. Given dual matrix R, the most
//! violated column maximizes `a' R b` over sign vectors, found by
//! enumerating the smaller side and signing the induced linear form.
//! Terminates when no column's reduced cost exceeds the tolerance.

use std::collections::HashSet;
use std::time::Instant;

use crate::predictions::PredictionMatrix;
use crate::strategies::{canonicalize, max_bilinear_form, SignVector, StrategyError, StrategyPair};

use super::simplex::{solve_standard_form, ColumnSource, SimplexOptions};
use super::{
    assemble_result, degenerate_zero_result, extract_raw, map_simplex_error, rhs, with_threads,
    write_pair_column, write_slack_column, write_v_column, LpProblem, SolveError, SolveResult,
    SolverBackend, COL_SLACK, COL_V, FIXED_COLS,
};

/// Rounds without master-objective progress before the stall guard fires.
pub const DEFAULT_STALL_WINDOW: usize = 200;
const MAX_ROUNDS: usize = 1_000_000;

pub struct ColumnGenerationBackend;

impl SolverBackend for ColumnGenerationBackend {
    fn name(&self) -> &'static str {
        "column-generation"
    }

    fn solve(&self, prob: &LpProblem) -> Result<SolveResult, SolveError> {
        let started = Instant::now();
        let q = prob.q();
        // Validates the side lengths against the sign-vector cap.
        seed_pairs(q.rows(), q.cols())?;
        if q.is_zero() {
            return degenerate_zero_result(prob, started);
        }
        with_threads(prob.threads(), || run_column_generation(prob, started))?
    }
}

fn run_column_generation(
    prob: &LpProblem,
    started: Instant,
) -> Result<SolveResult, SolveError> {
    let q = prob.q();
    let (n, m) = (q.rows(), q.cols());
    let nm = n * m;

    let mut pairs = seed_pairs(n, m)?;
    let mut pool: HashSet<StrategyPair> = pairs.iter().copied().collect();
    let b = rhs(nm, prob.v_cap());
    let opts = SimplexOptions {
        tol: prob.tolerance(),
        ..SimplexOptions::default()
    };

    // Warm basis from the previous round; artificial ids shift when the
    // column pool grows, so they are remapped to the new id base.
    let mut warm: Option<(Vec<usize>, usize)> = None;
    let mut total_iterations = 0u64;
    let mut best_objective = f64::NEG_INFINITY;
    let mut stalled_rounds = 0usize;

    for _round in 0..MAX_ROUNDS {
        let source = Master {
            q,
            n,
            m,
            pairs: &pairs,
        };
        let num_cols = source.num_cols();
        let remapped: Option<Vec<usize>> = warm.take().map(|(basis, old_cols)| {
            basis
                .into_iter()
                .map(|id| {
                    if id >= old_cols {
                        id - old_cols + num_cols
                    } else {
                        id
                    }
                })
                .collect()
        });

        let outcome = solve_standard_form(&source, &b, &opts, remapped.as_deref())
            .map_err(map_simplex_error)?;
        total_iterations += outcome.iterations;

        let duals = &outcome.duals;
        let pricing_matrix: Vec<f64> = duals[..nm].iter().map(|&y| -y).collect();
        let (candidate, value) = max_bilinear_form(&pricing_matrix, n, m)?;
        let reduced_cost = value - duals[nm];

        if reduced_cost <= prob.tolerance() {
            let mut raw = extract_raw(
                &outcome,
                |k| pairs[k],
                num_cols,
                prob.tolerance(),
                pairs.len() as u64,
            );
            raw.iterations = total_iterations;
            return assemble_result(prob, raw, started);
        }

        if outcome.objective > best_objective + prob.tolerance() {
            best_objective = outcome.objective;
            stalled_rounds = 0;
        } else {
            stalled_rounds += 1;
            if stalled_rounds >= DEFAULT_STALL_WINDOW {
                return Err(SolveError::Stalled {
                    window: DEFAULT_STALL_WINDOW,
                });
            }
        }

        // A violated column equal to one already pooled means the master
        // and the pricing disagree numerically; surface it instead of
        // looping forever.
        if !pool.insert(candidate) {
            return Err(SolveError::Stalled {
                window: stalled_rounds.max(1),
            });
        }
        pairs.push(candidate);
        warm = Some((outcome.basis, num_cols));
    }
    Err(SolveError::Stalled { window: MAX_ROUNDS })
}

/// Warm-start pool: the all-ones pair and every single-sign-flip strategy,
/// each together with its matrix negation so the zero matrix (V = 0) stays
/// representable.
fn seed_pairs(n: usize, m: usize) -> Result<Vec<StrategyPair>, StrategyError> {
    let a_plus = SignVector::all_plus(n)?;
    let b_plus = SignVector::all_plus(m)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |p: StrategyPair| {
        let c = canonicalize(p);
        if seen.insert(c) {
            out.push(c);
        }
    };
    push(StrategyPair::new(a_plus, b_plus));
    push(StrategyPair::new(a_plus, b_plus.negated()));
    for i in 0..n {
        let a = a_plus.flipped(i);
        push(StrategyPair::new(a, b_plus));
        push(StrategyPair::new(a, b_plus.negated()));
    }
    for j in 0..m {
        let b = b_plus.flipped(j);
        push(StrategyPair::new(a_plus, b));
        push(StrategyPair::new(a_plus, b.negated()));
    }
    Ok(out)
}

/// Restricted master: the pooled strategy columns plus V and cap slack.
struct Master<'a> {
    q: &'a PredictionMatrix,
    n: usize,
    m: usize,
    pairs: &'a [StrategyPair],
}

impl ColumnSource for Master<'_> {
    fn num_rows(&self) -> usize {
        self.n * self.m + 2
    }

    fn num_cols(&self) -> usize {
        FIXED_COLS + self.pairs.len()
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
            _ => write_pair_column(&self.pairs[col - FIXED_COLS], self.n, self.m, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_dense, SolveStatus};
    use crate::predictions::{build_prediction_matrix, Origin, SettingsSpec};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn seed_is_negation_closed_and_canonical() {
        let pairs = seed_pairs(3, 2).unwrap();
        assert!(pairs.iter().all(|p| p.is_canonical()));
        for p in &pairs {
            let negated_matrix = StrategyPair::new(p.a_signs, p.b_signs.negated());
            assert!(
                pairs.contains(&canonicalize(negated_matrix)),
                "missing negation partner of {p:?}"
            );
        }
    }

    #[test]
    fn chsh_matches_dense_backend() {
        let spec =
            SettingsSpec::coplanar(&[0.0, FRAC_PI_2], &[FRAC_PI_4, 3.0 * FRAC_PI_4]).unwrap();
        let prob = LpProblem::new(build_prediction_matrix(&spec).unwrap());
        let cg = ColumnGenerationBackend.solve(&prob).unwrap();
        let dense = solve_dense(&prob).unwrap();
        assert!((cg.critical_v.value() - FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((cg.critical_v.value() - dense.critical_v.value()).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let q = PredictionMatrix::new(3, 3, vec![0.0; 9], Origin::Experimental).unwrap();
        let result = ColumnGenerationBackend.solve(&LpProblem::new(q)).unwrap();
        assert_eq!(result.status, SolveStatus::DegenerateZeroMatrix);
    }

    #[test]
    fn capped_case_matches_dense() {
        let q = PredictionMatrix::new(2, 2, vec![0.05, -0.05, 0.05, 0.05], Origin::Quantum).unwrap();
        let prob = LpProblem::new(q);
        let cg = ColumnGenerationBackend.solve(&prob).unwrap();
        let dense = solve_dense(&prob).unwrap();
        assert_eq!(cg.status, dense.status);
        assert!((cg.critical_v.value() - dense.critical_v.value()).abs() < 1e-9);
    }
}
