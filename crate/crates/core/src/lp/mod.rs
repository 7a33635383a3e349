//! The critical-visibility linear program.
//!
//! Maximize `V` subject to `sum_kl p_kl A_i(k) B_j(l) = V Q_ij`, `p >= 0`,
//! `sum p = 1`, over the canonical deterministic strategy pairs. Two
//! interchangeable backends solve it: a dense solver that prices every
//! canonical column on the fly, and a column-generation solver whose pricing
//! step maximizes the bilinear form in closed form. Both are registered by
//! name and selected at runtime.
//!
//! `V` is a free variable of the program; a configurable cap `V <= v_cap`
//! keeps the program bounded for rank-deficient inputs, and an identically
//! zero matrix is reported as degenerate rather than solved.

mod colgen;
mod dense;
pub(crate) mod simplex;
mod verify;

pub use colgen::ColumnGenerationBackend;
pub use dense::DenseBackend;
pub use verify::{verify_model, verify_witness, ModelCheck, WitnessCheck};

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::predictions::{PredictionMatrix, SettingsError, Visibility};
use crate::strategies::{
    canonical_index_of, enumerate_canonical_with_cap, max_bilinear_form, write_strategy_column,
    StrategyError, StrategyPair, DEFAULT_ENUM_CAP,
};

pub const DEFAULT_V_CAP: f64 = 4.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Largest n+m solved by full enumeration when the backend is chosen
/// automatically.
pub const AUTO_DENSE_LIMIT: usize = 18;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Settings(#[from] SettingsError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("solver did not terminate within {iterations} iterations")]
    NonTermination { iterations: u64 },
    #[error("column generation stalled: no progress over {window} rounds")]
    Stalled { window: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown backend '{0}'")]
    UnknownBackend(String),
}

/// One instance of the LP: the prediction matrix plus solve parameters.
#[derive(Debug, Clone)]
pub struct LpProblem {
    q: PredictionMatrix,
    v_cap: f64,
    tolerance: f64,
    threads: Option<usize>,
}

impl LpProblem {
    pub fn new(q: PredictionMatrix) -> Self {
        LpProblem {
            q,
            v_cap: DEFAULT_V_CAP,
            tolerance: DEFAULT_TOLERANCE,
            threads: None,
        }
    }

    pub fn with_v_cap(mut self, v_cap: f64) -> Result<Self, SolveError> {
        if !v_cap.is_finite() || v_cap <= 0.0 {
            return Err(SolveError::InvalidProblem(format!(
                "v_cap must be a positive real, got {v_cap}"
            )));
        }
        self.v_cap = v_cap;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self, SolveError> {
        if !(tolerance > 0.0 && tolerance < 1e-3) {
            return Err(SolveError::InvalidProblem(format!(
                "tolerance must lie in (0, 1e-3), got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// Number of worker threads for pricing; `None` uses the process-wide
    /// default. The result does not depend on this value.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn q(&self) -> &PredictionMatrix {
        &self.q
    }

    pub fn v_cap(&self) -> f64 {
        self.v_cap
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn threads(&self) -> Option<usize> {
        self.threads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    CappedAtVCap,
    DegenerateZeroMatrix,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::CappedAtVCap => "capped_at_v_cap",
            SolveStatus::DegenerateZeroMatrix => "degenerate_zero_matrix",
        })
    }
}

/// Sparse probability distribution over strategy pairs together with the
/// visibility it achieves.
#[derive(Debug, Clone)]
pub struct LhvModel {
    support: Vec<(StrategyPair, f64)>,
    achieved_v: Visibility,
}

impl LhvModel {
    pub fn new(support: Vec<(StrategyPair, f64)>, achieved_v: Visibility) -> Self {
        LhvModel {
            support,
            achieved_v,
        }
    }

    pub fn support(&self) -> &[(StrategyPair, f64)] {
        &self.support
    }

    pub fn achieved_v(&self) -> Visibility {
        self.achieved_v
    }

    pub fn probability_sum(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// Mixture matrix `sum_k p_k A_i B_j`, row-major `rows x cols`.
    pub fn reconstruct(&self, rows: usize, cols: usize) -> Vec<f64> {
        let mut acc = vec![0.0; rows * cols];
        for (pair, p) in &self.support {
            for i in 0..rows.min(pair.a_signs.len()) {
                for j in 0..cols.min(pair.b_signs.len()) {
                    acc[i * cols + j] += p * pair.entry(i, j);
                }
            }
        }
        acc
    }

    /// Extends the model to settings shifted by pi on both sides: each
    /// support pair is doubled with negated signs, probabilities unchanged.
    /// The extended model reproduces the correspondingly extended
    /// prediction matrix at the same visibility.
    pub fn pi_extended(&self) -> Result<LhvModel, StrategyError> {
        let support = self
            .support
            .iter()
            .map(|(pair, p)| Ok((pair.pi_extended()?, *p)))
            .collect::<Result<Vec<_>, StrategyError>>()?;
        Ok(LhvModel {
            support,
            achieved_v: self.achieved_v,
        })
    }
}

/// Dual certificate: coefficients whose maximum over deterministic
/// strategies is normalized to 1 and whose value on `Q` is `1/V*`.
#[derive(Debug, Clone)]
pub struct BellWitness {
    rows: usize,
    cols: usize,
    coefficients: Vec<f64>,
    lhv_bound: f64,
    quantum_value: f64,
}

impl BellWitness {
    pub fn new(rows: usize, cols: usize, coefficients: Vec<f64>, lhv_bound: f64, quantum_value: f64) -> Self {
        assert_eq!(coefficients.len(), rows * cols);
        BellWitness {
            rows,
            cols,
            coefficients,
            lhv_bound,
            quantum_value,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major coefficients.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lhv_bound(&self) -> f64 {
        self.lhv_bound
    }

    pub fn quantum_value(&self) -> f64 {
        self.quantum_value
    }
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub iterations: u64,
    pub columns_generated: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub critical_v: Visibility,
    pub status: SolveStatus,
    pub model: LhvModel,
    /// Present exactly when `status` is `Optimal`.
    pub witness: Option<BellWitness>,
    pub diagnostics: Diagnostics,
}

/// A solver for the critical-visibility LP, selectable by name.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, prob: &LpProblem) -> Result<SolveResult, SolveError>;
}

static DENSE_BACKEND: DenseBackend = DenseBackend;
static COLGEN_BACKEND: ColumnGenerationBackend = ColumnGenerationBackend;

/// All registered backends.
pub fn registry() -> &'static [&'static dyn SolverBackend] {
    static REGISTRY: [&dyn SolverBackend; 2] = [&DENSE_BACKEND, &COLGEN_BACKEND];
    &REGISTRY
}

/// Looks a backend up by its registered name.
pub fn backend_by_name(name: &str) -> Result<&'static dyn SolverBackend, SolveError> {
    registry()
        .iter()
        .copied()
        .find(|b| b.name() == name)
        .ok_or_else(|| SolveError::UnknownBackend(name.to_string()))
}

/// Dense enumeration for small grids, column generation beyond.
pub fn auto_backend(n: usize, m: usize) -> &'static dyn SolverBackend {
    if n + m <= AUTO_DENSE_LIMIT {
        &DENSE_BACKEND
    } else {
        &COLGEN_BACKEND
    }
}

/// Solves by full enumeration of all canonical strategy columns.
pub fn solve_dense(prob: &LpProblem) -> Result<SolveResult, SolveError> {
    DENSE_BACKEND.solve(prob)
}

/// Solves by column generation with closed-form pricing.
pub fn solve_column_generation(prob: &LpProblem) -> Result<SolveResult, SolveError> {
    COLGEN_BACKEND.solve(prob)
}

/// Solves with the automatically selected backend.
pub fn solve_auto(prob: &LpProblem) -> Result<SolveResult, SolveError> {
    auto_backend(prob.q().rows(), prob.q().cols()).solve(prob)
}

// --- shared LP layout -------------------------------------------------------
//
// Rows: one equality per matrix entry (row-major), then the probability
// normalization row, then the visibility cap row. Columns: id 0 is V, id 1
// is the cap slack, ids 2.. are strategy columns.

pub(crate) const COL_V: usize = 0;
pub(crate) const COL_SLACK: usize = 1;
pub(crate) const FIXED_COLS: usize = 2;

pub(crate) fn rhs(entry_rows: usize, v_cap: f64) -> Vec<f64> {
    let mut b = vec![0.0; entry_rows + 2];
    b[entry_rows] = 1.0;
    b[entry_rows + 1] = v_cap;
    b
}

pub(crate) fn write_v_column(q: &PredictionMatrix, out: &mut [f64]) {
    let nm = q.rows() * q.cols();
    for (k, &qk) in q.entries().iter().enumerate() {
        out[k] = -qk;
    }
    out[nm] = 0.0;
    out[nm + 1] = 1.0;
}

pub(crate) fn write_slack_column(nm: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    out[nm + 1] = 1.0;
}

pub(crate) fn write_pair_column(pair: &StrategyPair, n: usize, m: usize, out: &mut [f64]) {
    let nm = n * m;
    write_strategy_column(pair, n, m, &mut out[..nm]).expect("pair dims match the LP layout");
    out[nm] = 1.0;
    out[nm + 1] = 0.0;
}

/// Raw LP-level solution handed back by a backend.
pub(crate) struct RawSolution {
    pub v_star: f64,
    pub support: Vec<(StrategyPair, f64)>,
    pub duals: Vec<f64>,
    pub iterations: u64,
    pub columns_generated: u64,
}

/// Result for an identically zero matrix: any visibility trivially scales
/// it, so no critical value is reported. The model mixes a strategy matrix
/// with its negation to reproduce the zero matrix exactly.
pub(crate) fn degenerate_zero_result(
    prob: &LpProblem,
    started: Instant,
) -> Result<SolveResult, SolveError> {
    let n = prob.q().rows();
    let m = prob.q().cols();
    let all_plus = StrategyPair::all_plus(n, m)?;
    let negated_b = StrategyPair::new(all_plus.a_signs, all_plus.b_signs.negated());
    let model = LhvModel::new(
        vec![(all_plus, 0.5), (negated_b, 0.5)],
        Visibility::new(0.0).expect("zero is a valid visibility"),
    );
    Ok(SolveResult {
        critical_v: Visibility::new(0.0).expect("zero is a valid visibility"),
        status: SolveStatus::DegenerateZeroMatrix,
        model,
        witness: None,
        diagnostics: Diagnostics {
            iterations: 0,
            columns_generated: 0,
            wall_time: started.elapsed(),
        },
    })
}

/// Maximum of `sum_ij c_ij A_i B_j` over canonical pairs: exhaustive for
/// small grids, closed-form pricing beyond.
pub(crate) fn max_strategy_value(c: &[f64], n: usize, m: usize) -> Result<f64, StrategyError> {
    if n + m <= DEFAULT_ENUM_CAP {
        let mut best = f64::NEG_INFINITY;
        for pair in enumerate_canonical_with_cap(n, m, DEFAULT_ENUM_CAP)? {
            let mut v = 0.0;
            for i in 0..n {
                let ai = pair.a_signs.sign(i);
                for j in 0..m {
                    v += c[i * m + j] * ai * pair.b_signs.sign(j);
                }
            }
            best = best.max(v);
        }
        Ok(best)
    } else {
        Ok(max_bilinear_form(c, n, m)?.1)
    }
}

/// Turns a raw LP solution into a full result with status, model, and
/// (when optimal) the normalized dual witness.
pub(crate) fn assemble_result(
    prob: &LpProblem,
    raw: RawSolution,
    started: Instant,
) -> Result<SolveResult, SolveError> {
    let q = prob.q();
    let (n, m) = (q.rows(), q.cols());
    let nm = n * m;

    let cap_slack = 1e-9 * prob.v_cap().max(1.0);
    let capped = raw.v_star >= prob.v_cap() - cap_slack;
    let critical = raw.v_star.min(prob.v_cap());
    let critical_v = Visibility::new(critical.max(0.0))
        .map_err(|e| SolveError::Numerical(format!("invalid critical visibility: {e}")))?;

    let model = LhvModel::new(raw.support, critical_v);

    let witness = if capped {
        None
    } else {
        let mut c: Vec<f64> = raw.duals[..nm].iter().map(|&y| -y).collect();
        let lhv_max = max_strategy_value(&c, n, m)?;
        if lhv_max <= 0.0 {
            return Err(SolveError::Numerical(format!(
                "dual certificate degenerate: strategy bound {lhv_max}"
            )));
        }
        for ck in &mut c {
            *ck /= lhv_max;
        }
        let quantum_value: f64 = c.iter().zip(q.entries()).map(|(ck, qk)| ck * qk).sum();
        Some(BellWitness::new(n, m, c, 1.0, quantum_value))
    };

    Ok(SolveResult {
        critical_v,
        status: if capped {
            SolveStatus::CappedAtVCap
        } else {
            SolveStatus::Optimal
        },
        model,
        witness,
        diagnostics: Diagnostics {
            iterations: raw.iterations,
            columns_generated: raw.columns_generated,
            wall_time: started.elapsed(),
        },
    })
}

/// Extracts `V` and the strategy support from a simplex outcome under the
/// shared column layout.
pub(crate) fn extract_raw(
    outcome: &simplex::SimplexOutcome,
    pair_of_col: impl Fn(usize) -> StrategyPair,
    real_cols: usize,
    tolerance: f64,
    columns_generated: u64,
) -> RawSolution {
    let mut v_star = 0.0;
    let mut support = Vec::new();
    for (r, &id) in outcome.basis.iter().enumerate() {
        if id >= real_cols {
            continue; // leftover artificial on a redundant row
        }
        let value = outcome.basic_values[r];
        if id == COL_V {
            v_star = value;
        } else if id >= FIXED_COLS && value > tolerance {
            support.push((pair_of_col(id - FIXED_COLS), value));
        }
    }
    support.sort_by_key(|(pair, _)| canonical_index_of(pair));
    RawSolution {
        v_star,
        support,
        duals: outcome.duals.clone(),
        iterations: outcome.iterations,
        columns_generated,
    }
}

/// Runs `f` inside a dedicated rayon pool when a thread count is pinned.
pub(crate) fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, SolveError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| SolveError::Numerical(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn map_simplex_error(err: simplex::SimplexError) -> SolveError {
    match err {
        simplex::SimplexError::IterationLimit { limit } => {
            SolveError::NonTermination { iterations: limit }
        }
        other => SolveError::Numerical(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::{build_prediction_matrix, Origin, SettingsSpec};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn chsh_matrix() -> PredictionMatrix {
        let spec =
            SettingsSpec::coplanar(&[0.0, FRAC_PI_2], &[FRAC_PI_4, 3.0 * FRAC_PI_4]).unwrap();
        build_prediction_matrix(&spec).unwrap()
    }

    #[test]
    fn registry_lists_both_backends_by_name() {
        let names: Vec<&str> = registry().iter().map(|b| b.name()).collect();
        assert_eq!(names, vec!["dense", "column-generation"]);
        assert!(backend_by_name("dense").is_ok());
        assert!(backend_by_name("column-generation").is_ok());
        assert!(matches!(
            backend_by_name("simplex9000"),
            Err(SolveError::UnknownBackend(_))
        ));
    }

    #[test]
    fn auto_selection_switches_at_the_size_threshold() {
        assert_eq!(auto_backend(9, 9).name(), "dense");
        assert_eq!(auto_backend(10, 9).name(), "column-generation");
    }

    #[test]
    fn problem_parameters_are_validated() {
        let q = chsh_matrix();
        assert!(LpProblem::new(q.clone()).with_v_cap(0.0).is_err());
        assert!(LpProblem::new(q.clone()).with_v_cap(-1.0).is_err());
        assert!(LpProblem::new(q.clone()).with_tolerance(0.0).is_err());
        assert!(LpProblem::new(q.clone()).with_tolerance(1e-2).is_err());
        assert!(LpProblem::new(q).with_tolerance(1e-6).is_ok());
    }

    #[test]
    fn solves_are_independent_of_the_thread_count() {
        let q = chsh_matrix();
        let one = solve_dense(&LpProblem::new(q.clone()).with_threads(Some(1))).unwrap();
        let four = solve_dense(&LpProblem::new(q).with_threads(Some(4))).unwrap();
        assert_eq!(
            one.critical_v.value().to_bits(),
            four.critical_v.value().to_bits()
        );
        let w1 = one.witness.unwrap();
        let w4 = four.witness.unwrap();
        assert_eq!(w1.coefficients(), w4.coefficients());
    }

    #[test]
    fn pi_extended_model_reproduces_the_extended_matrix() {
        // Extending each side by pi doubles the grid; the extended model
        // must reproduce the extended predictions at the same visibility.
        let angles_a = [0.0, FRAC_PI_2];
        let angles_b = [FRAC_PI_4, 3.0 * FRAC_PI_4];
        let result = solve_dense(&LpProblem::new(chsh_matrix())).unwrap();

        let ext_a: Vec<f64> = angles_a
            .iter()
            .copied()
            .chain(angles_a.iter().map(|a| a + PI))
            .collect();
        let ext_b: Vec<f64> = angles_b
            .iter()
            .copied()
            .chain(angles_b.iter().map(|b| b + PI))
            .collect();
        let ext_q =
            build_prediction_matrix(&SettingsSpec::coplanar(&ext_a, &ext_b).unwrap()).unwrap();

        let extended = result.model.pi_extended().unwrap();
        let check = verify_model(&extended, &ext_q);
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn optimal_results_carry_verifying_certificates() {
        let q = chsh_matrix();
        for backend in registry() {
            let result = backend.solve(&LpProblem::new(q.clone())).unwrap();
            assert_eq!(result.status, SolveStatus::Optimal);
            assert!(verify_model(&result.model, &q).passed);
            let witness = result.witness.expect("optimal has witness");
            let check = verify_witness(&witness, 2, 2, &q, result.critical_v);
            assert!(check.passed, "{}: {check:?}", backend.name());
        }
    }

    #[test]
    fn experimental_origin_matrices_solve_like_quantum_ones() {
        let q = PredictionMatrix::new(
            2,
            2,
            chsh_matrix().entries().to_vec(),
            Origin::Experimental,
        )
        .unwrap();
        let result = solve_auto(&LpProblem::new(q)).unwrap();
        assert!((result.critical_v.value() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }
}
