//! Independent checks of solver certificates.
//!
//! `verify_model` reconstructs the mixture from the primal support and
//! compares it against `V* Q`; `verify_witness` re-derives the LHV bound of
//! the dual coefficients by brute-force enumeration (closed-form pricing
//! for grids too large to enumerate) and checks the duality gap. Neither
//! touches the simplex path that produced the certificates.

use crate::predictions::{PredictionMatrix, Visibility};
use crate::strategies::MAX_SIGN_LEN;

use super::{max_strategy_value, BellWitness, LhvModel};

/// Largest allowed entrywise deviation of the reconstructed mixture.
pub const MODEL_ENTRY_TOL: f64 = 1e-7;
/// Largest allowed deviation of the probability sum from 1.
pub const MODEL_PROB_SUM_TOL: f64 = 1e-9;
/// Slack on the normalized LHV bound of a witness.
pub const WITNESS_BOUND_TOL: f64 = 1e-9;
/// Largest allowed duality gap `|sum c_ij Q_ij - 1/V*|`.
pub const WITNESS_GAP_TOL: f64 = 1e-7;

/// Outcome of a primal model check; `passed` summarizes the thresholds.
#[derive(Debug, Clone)]
pub struct ModelCheck {
    pub max_entry_deviation: f64,
    pub probability_sum_deviation: f64,
    pub dimensions_match: bool,
    pub passed: bool,
}

/// Recomputes `sum p_k A_i B_j` from the support and reports the maximum
/// entrywise deviation from `achieved_v * Q` plus the probability-sum
/// deviation.
pub fn verify_model(model: &LhvModel, q: &PredictionMatrix) -> ModelCheck {
    let (n, m) = (q.rows(), q.cols());
    let dims_ok = !model.support().is_empty()
        && model
            .support()
            .iter()
            .all(|(p, _)| p.a_signs.len() == n && p.b_signs.len() == m);
    if !dims_ok {
        return ModelCheck {
            max_entry_deviation: f64::INFINITY,
            probability_sum_deviation: f64::INFINITY,
            dimensions_match: false,
            passed: false,
        };
    }
    let reconstructed = model.reconstruct(n, m);
    let v = model.achieved_v().value();
    let mut max_dev: f64 = 0.0;
    for (rec, &qk) in reconstructed.iter().zip(q.entries()) {
        max_dev = max_dev.max((rec - v * qk).abs());
    }
    let sum_dev = (model.probability_sum() - 1.0).abs();
    ModelCheck {
        max_entry_deviation: max_dev,
        probability_sum_deviation: sum_dev,
        dimensions_match: true,
        passed: max_dev <= MODEL_ENTRY_TOL && sum_dev <= MODEL_PROB_SUM_TOL,
    }
}

/// Outcome of a dual witness check.
#[derive(Debug, Clone)]
pub struct WitnessCheck {
    /// Measured `max over canonical pairs of sum c_ij A_i B_j`.
    pub max_strategy_value: f64,
    /// `|max_strategy_value - 1|`; the witness claims normalization to 1.
    pub lhv_bound_deviation: f64,
    /// Recomputed `sum c_ij Q_ij`.
    pub quantum_value: f64,
    /// `|quantum_value - 1/v_star|`.
    pub duality_gap: f64,
    pub dimensions_match: bool,
    pub passed: bool,
}

/// Confirms dual feasibility over all canonical strategies and the claimed
/// duality relation `sum c_ij Q_ij = 1/V*`.
pub fn verify_witness(
    witness: &BellWitness,
    n: usize,
    m: usize,
    q: &PredictionMatrix,
    v_star: Visibility,
) -> WitnessCheck {
    let dims_ok = witness.rows() == n
        && witness.cols() == m
        && q.rows() == n
        && q.cols() == m
        && (1..=MAX_SIGN_LEN).contains(&n)
        && (1..=MAX_SIGN_LEN).contains(&m);
    if !dims_ok {
        return WitnessCheck {
            max_strategy_value: f64::INFINITY,
            lhv_bound_deviation: f64::INFINITY,
            quantum_value: f64::NAN,
            duality_gap: f64::INFINITY,
            dimensions_match: false,
            passed: false,
        };
    }
    let measured = max_strategy_value(witness.coefficients(), n, m)
        .expect("dimensions already validated");
    let quantum_value: f64 = witness
        .coefficients()
        .iter()
        .zip(q.entries())
        .map(|(c, qk)| c * qk)
        .sum();
    let v = v_star.value();
    let duality_gap = if v > 0.0 {
        (quantum_value - 1.0 / v).abs()
    } else {
        f64::INFINITY
    };
    let bound_dev = (measured - 1.0).abs();
    WitnessCheck {
        max_strategy_value: measured,
        lhv_bound_deviation: bound_dev,
        quantum_value,
        duality_gap,
        dimensions_match: true,
        passed: measured <= 1.0 + WITNESS_BOUND_TOL
            && bound_dev <= WITNESS_BOUND_TOL
            && duality_gap <= WITNESS_GAP_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::Origin;
    use crate::strategies::StrategyPair;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn all_ones_q() -> PredictionMatrix {
        PredictionMatrix::new(2, 2, vec![1.0; 4], Origin::Quantum).unwrap()
    }

    #[test]
    fn hand_built_model_passes_exactly() {
        let model = LhvModel::new(
            vec![(StrategyPair::all_plus(2, 2).unwrap(), 1.0)],
            Visibility::new(1.0).unwrap(),
        );
        let check = verify_model(&model, &all_ones_q());
        assert!(check.passed);
        assert_eq!(check.max_entry_deviation, 0.0);
        assert_eq!(check.probability_sum_deviation, 0.0);
    }

    #[test]
    fn wrong_claimed_visibility_fails_with_half_deviation() {
        let model = LhvModel::new(
            vec![(StrategyPair::all_plus(2, 2).unwrap(), 1.0)],
            Visibility::new(0.5).unwrap(),
        );
        let check = verify_model(&model, &all_ones_q());
        assert!(!check.passed);
        assert!((check.max_entry_deviation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mismatched_dimensions_fail() {
        let model = LhvModel::new(
            vec![(StrategyPair::all_plus(3, 2).unwrap(), 1.0)],
            Visibility::new(1.0).unwrap(),
        );
        assert!(!verify_model(&model, &all_ones_q()).passed);
    }

    #[test]
    fn chsh_witness_passes() {
        // The CHSH functional (E11 - E12 + E21 + E22 pattern) scaled so the
        // deterministic bound is 1; its value on the maximally violating
        // matrix is sqrt(2) = 1/(1/sqrt(2)).
        let s = FRAC_1_SQRT_2;
        let q = PredictionMatrix::new(2, 2, vec![-s, s, -s, -s], Origin::Quantum).unwrap();
        let c = vec![-0.5, 0.5, -0.5, -0.5];
        let witness = BellWitness::new(2, 2, c, 1.0, SQRT_2);
        let check = verify_witness(&witness, 2, 2, &q, Visibility::new(s).unwrap());
        assert!(check.passed, "{check:?}");
        assert!((check.max_strategy_value - 1.0).abs() < 1e-12);
        assert!((check.quantum_value - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_witness_fails_quantum_value_check() {
        let q = all_ones_q();
        let witness = BellWitness::new(2, 2, vec![0.0; 4], 1.0, 0.0);
        let check = verify_witness(&witness, 2, 2, &q, Visibility::new(1.0).unwrap());
        assert!(!check.passed);
        assert!(check.duality_gap > 0.9);
    }
}
