//! Batch experiment drivers: evenly spaced N x N scans, randomized settings
//! campaigns, and CHSH-subset classification of the scanned geometries.
//!
//! Every trial is independent and may run on the ambient rayon pool;
//! records are assembled in trial order and random draws are derived from
//! the seed per trial, so a report is byte-identical for a given config
//! regardless of worker count.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lp::{solve_auto, LpProblem, SolveStatus, DEFAULT_TOLERANCE, DEFAULT_V_CAP};
use crate::predictions::{build_prediction_matrix, correlation, Setting, SettingsSpec};

/// Trials below `1/sqrt(2) - CONJECTURE_GUARD_TOL` are flagged.
pub const CONJECTURE_GUARD_TOL: f64 = 1e-7;
/// A fired CHSH subset pins the optimum to `1/sqrt(2)` within this slack.
pub const CLASSIFICATION_TOL: f64 = 1e-6;
/// Default tolerance for calling a subset maximally violating.
pub const DEFAULT_DETECT_TOL: f64 = 1e-9;

const TWO_SQRT_TWO: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    pub start: f64,
    pub end: f64,
}

impl Default for AngleRange {
    fn default() -> Self {
        AngleRange {
            start: 0.0,
            end: PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanKind {
    /// One trial per grid size: coplanar settings `alpha_i = beta_i` evenly
    /// spaced over `range_a`.
    EvenSpaced { n_min: usize, n_max: usize },
    /// Independent uniform angles over the configured ranges.
    RandomCoplanar { n: usize, m: usize, count: u64 },
    /// Independent uniform directions on the unit sphere.
    RandomVector { n: usize, m: usize, count: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub kind: ScanKind,
    pub seed: u64,
    #[serde(default)]
    pub range_a: AngleRange,
    #[serde(default)]
    pub range_b: AngleRange,
    pub v_cap: f64,
    pub tolerance: f64,
}

impl ScanConfig {
    pub fn even_spaced(n_min: usize, n_max: usize) -> Self {
        ScanConfig {
            kind: ScanKind::EvenSpaced { n_min, n_max },
            seed: 0,
            range_a: AngleRange::default(),
            range_b: AngleRange::default(),
            v_cap: DEFAULT_V_CAP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn random_coplanar(n: usize, m: usize, count: u64, seed: u64) -> Self {
        ScanConfig {
            kind: ScanKind::RandomCoplanar { n, m, count },
            seed,
            range_a: AngleRange::default(),
            range_b: AngleRange::default(),
            v_cap: DEFAULT_V_CAP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn random_vector(n: usize, m: usize, count: u64, seed: u64) -> Self {
        ScanConfig {
            kind: ScanKind::RandomVector { n, m, count },
            seed,
            range_a: AngleRange::default(),
            range_b: AngleRange::default(),
            v_cap: DEFAULT_V_CAP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    fn validate(&self) -> Result<(), ScanError> {
        match self.kind {
            ScanKind::EvenSpaced { n_min, n_max } => {
                if n_min == 0 || n_min > n_max {
                    return Err(ScanError::InvalidConfig(format!(
                        "even-spaced range {n_min}..{n_max} is empty"
                    )));
                }
            }
            ScanKind::RandomCoplanar { n, m, count } | ScanKind::RandomVector { n, m, count } => {
                if count == 0 {
                    return Err(ScanError::InvalidConfig("count must be >= 1".into()));
                }
                if n == 0 || m == 0 {
                    return Err(ScanError::InvalidConfig("n and m must be >= 1".into()));
                }
            }
        }
        if self.range_a.start >= self.range_a.end || self.range_b.start >= self.range_b.end {
            return Err(ScanError::InvalidConfig("angle ranges must be nonempty".into()));
        }
        Ok(())
    }
}

/// A maximally violating 2x2 sub-grid (0-based indices) and its ideal
/// quantum CHSH value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSubset {
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
    pub chsh_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub trial: u64,
    pub settings_digest: String,
    pub critical_v: Option<f64>,
    pub status: String,
    pub chsh_subset: Option<ChshSubset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `V* < 1/sqrt(2) - 1e-7`: a counterexample to the conjecture.
    BelowConjectureBound,
    /// A maximal CHSH subset fired but `V*` is not `1/sqrt(2)`.
    ChshClassificationMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanViolation {
    pub trial: u64,
    pub kind: ViolationKind,
    pub critical_v: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub trials: u64,
    pub solved: u64,
    pub errored: u64,
    pub min_v: Option<f64>,
    pub max_v: Option<f64>,
    pub mean_v: Option<f64>,
    pub below_conjecture_count: u64,
    pub violations: Vec<ScanViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub records: Vec<ScanRecord>,
    pub summary: ScanSummary,
}

impl ScanReport {
    /// True when any trial fell below the conjecture bound; campaigns use
    /// this as a CI-checkable guard.
    pub fn conjecture_guard_fired(&self) -> bool {
        self.summary
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::BelowConjectureBound)
    }
}

/// Solves one grid size per trial, `alpha_i = beta_i` evenly spaced.
pub fn run_even_spaced_scan(cfg: &ScanConfig) -> Result<ScanReport, ScanError> {
    cfg.validate()?;
    let (n_min, n_max) = match cfg.kind {
        ScanKind::EvenSpaced { n_min, n_max } => (n_min, n_max),
        _ => return Err(ScanError::InvalidConfig("kind must be even_spaced".into())),
    };
    let records: Vec<ScanRecord> = (n_min..=n_max)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&size| {
            let angles = even_angles(size, cfg.range_a);
            run_coplanar_trial(cfg, size as u64, &angles, &angles)
        })
        .collect();
    Ok(assemble_report(cfg.clone(), records))
}

/// Seeded random campaign; identical configs give byte-identical reports.
pub fn run_random_scan(cfg: &ScanConfig) -> Result<ScanReport, ScanError> {
    cfg.validate()?;
    let records: Vec<ScanRecord> = match cfg.kind {
        ScanKind::RandomCoplanar { n, m, count } => (0..count)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&trial| {
                let mut rng = trial_rng(cfg.seed, trial);
                let alphas = random_angles(&mut rng, n, cfg.range_a);
                let betas = random_angles(&mut rng, m, cfg.range_b);
                run_coplanar_trial(cfg, trial, &alphas, &betas)
            })
            .collect(),
        ScanKind::RandomVector { n, m, count } => (0..count)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&trial| {
                let mut rng = trial_rng(cfg.seed, trial);
                let a = random_directions(&mut rng, n);
                let b = random_directions(&mut rng, m);
                run_vector_trial(cfg, trial, a, b)
            })
            .collect(),
        ScanKind::EvenSpaced { .. } => {
            return Err(ScanError::InvalidConfig(
                "kind must be random_coplanar or random_vector".into(),
            ))
        }
    };
    Ok(assemble_report(cfg.clone(), records))
}

/// Finds a 2x2 sub-grid whose ideal quantum CHSH value reaches `2 sqrt(2)`
/// within `tol`, searching all sub-grids exhaustively. Indices are 0-based,
/// lexicographically first match.
pub fn detect_chsh_subset(spec: &SettingsSpec, tol: f64) -> Option<ChshSubset> {
    let n = spec.rows();
    let m = spec.cols();
    if n < 2 || m < 2 {
        return None;
    }
    let e = |i: usize, j: usize| {
        correlation(&spec.a_settings()[i], &spec.b_settings()[j])
            .expect("settings spec is homogeneous")
    };
    for i1 in 0..n {
        for i2 in i1 + 1..n {
            for j1 in 0..m {
                for j2 in j1 + 1..m {
                    let value = chsh_max(e(i1, j1), e(i1, j2), e(i2, j1), e(i2, j2));
                    if value >= TWO_SQRT_TWO - tol {
                        return Some(ChshSubset {
                            i1,
                            i2,
                            j1,
                            j2,
                            chsh_value: value,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Max of `|+-e11 +- e12 +- e21 +- e22|` over the 8 odd-minus-sign CHSH
/// combinations.
pub fn chsh_max(e11: f64, e12: f64, e21: f64, e22: f64) -> f64 {
    let mut best: f64 = 0.0;
    for pattern in 0..16u32 {
        if pattern.count_ones() % 2 == 0 {
            continue;
        }
        let sign = |bit: u32| if pattern & (1 << bit) != 0 { -1.0 } else { 1.0 };
        let s = sign(0) * e11 + sign(1) * e12 + sign(2) * e21 + sign(3) * e22;
        best = best.max(s.abs());
    }
    best
}

fn even_angles(count: usize, range: AngleRange) -> Vec<f64> {
    let step = (range.end - range.start) / count as f64;
    (0..count).map(|i| range.start + i as f64 * step).collect()
}

fn random_angles(rng: &mut ChaCha12Rng, count: usize, range: AngleRange) -> Vec<f64> {
    (0..count)
        .map(|_| rng.random_range(range.start..range.end))
        .collect()
}

fn random_directions(rng: &mut ChaCha12Rng, count: usize) -> Vec<Setting> {
    (0..count)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            Setting::direction([r * phi.cos(), r * phi.sin(), z])
                .expect("sampled direction is unit norm")
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Per-trial generator derived from the campaign seed; independent of how
/// trials are scheduled.
fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial.wrapping_add(1))))
}

fn run_coplanar_trial(cfg: &ScanConfig, trial: u64, alphas: &[f64], betas: &[f64]) -> ScanRecord {
    let digest = coplanar_digest(alphas, betas);
    let spec = match SettingsSpec::coplanar(alphas, betas) {
        Ok(spec) => spec,
        Err(e) => return error_record(trial, digest, &e.to_string()),
    };
    solve_trial(cfg, trial, digest, &spec)
}

fn run_vector_trial(cfg: &ScanConfig, trial: u64, a: Vec<Setting>, b: Vec<Setting>) -> ScanRecord {
    let digest = vector_digest(&a, &b);
    let spec = match SettingsSpec::new(a, b) {
        Ok(spec) => spec,
        Err(e) => return error_record(trial, digest, &e.to_string()),
    };
    solve_trial(cfg, trial, digest, &spec)
}

fn solve_trial(cfg: &ScanConfig, trial: u64, digest: String, spec: &SettingsSpec) -> ScanRecord {
    let subset = detect_chsh_subset(spec, DEFAULT_DETECT_TOL);
    let q = match build_prediction_matrix(spec) {
        Ok(q) => q,
        Err(e) => return error_record(trial, digest, &e.to_string()),
    };
    let prob = match LpProblem::new(q)
        .with_v_cap(cfg.v_cap)
        .and_then(|p| p.with_tolerance(cfg.tolerance))
    {
        Ok(p) => p,
        Err(e) => return error_record(trial, digest, &e.to_string()),
    };
    match solve_auto(&prob) {
        Ok(result) => ScanRecord {
            trial,
            settings_digest: digest,
            critical_v: Some(result.critical_v.value()),
            status: result.status.to_string(),
            chsh_subset: subset,
        },
        Err(e) => error_record(trial, digest, &e.to_string()),
    }
}

fn error_record(trial: u64, digest: String, message: &str) -> ScanRecord {
    ScanRecord {
        trial,
        settings_digest: digest,
        critical_v: None,
        status: format!("error: {message}"),
        chsh_subset: None,
    }
}

fn coplanar_digest(alphas: &[f64], betas: &[f64]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"coplanar");
    hasher.update((alphas.len() as u64).to_le_bytes());
    for a in alphas {
        hasher.update(a.to_le_bytes());
    }
    hasher.update((betas.len() as u64).to_le_bytes());
    for b in betas {
        hasher.update(b.to_le_bytes());
    }
    short_hex(&hasher.finalize())
}

fn vector_digest(a: &[Setting], b: &[Setting]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"vectors");
    for side in [a, b] {
        hasher.update((side.len() as u64).to_le_bytes());
        for s in side {
            if let Setting::Direction(v) = s {
                for c in v {
                    hasher.update(c.to_le_bytes());
                }
            }
        }
    }
    short_hex(&hasher.finalize())
}

fn short_hex(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn assemble_report(config: ScanConfig, records: Vec<ScanRecord>) -> ScanReport {
    let mut solved = 0u64;
    let mut errored = 0u64;
    let mut min_v: Option<f64> = None;
    let mut max_v: Option<f64> = None;
    let mut sum_v = 0.0;
    let mut below = 0u64;
    let mut violations = Vec::new();

    for record in &records {
        match record.critical_v {
            Some(v) => {
                solved += 1;
                min_v = Some(min_v.map_or(v, |cur| cur.min(v)));
                max_v = Some(max_v.map_or(v, |cur| cur.max(v)));
                sum_v += v;
                // Guards only classify properly solved optima.
                if record.status == SolveStatus::Optimal.to_string() {
                    if v < FRAC_1_SQRT_2 - CONJECTURE_GUARD_TOL {
                        below += 1;
                        violations.push(ScanViolation {
                            trial: record.trial,
                            kind: ViolationKind::BelowConjectureBound,
                            critical_v: v,
                            detail: format!(
                                "V* = {v:.12} below 1/sqrt(2) - {CONJECTURE_GUARD_TOL:e}"
                            ),
                        });
                    }
                    if record.chsh_subset.is_some() && (v - FRAC_1_SQRT_2).abs() > CLASSIFICATION_TOL
                    {
                        violations.push(ScanViolation {
                            trial: record.trial,
                            kind: ViolationKind::ChshClassificationMismatch,
                            critical_v: v,
                            detail: format!(
                                "maximal CHSH subset fired but V* = {v:.12} differs from 1/sqrt(2)"
                            ),
                        });
                    }
                }
            }
            None => errored += 1,
        }
    }

    let summary = ScanSummary {
        trials: records.len() as u64,
        solved,
        errored,
        min_v,
        max_v,
        mean_v: (solved > 0).then(|| sum_v / solved as f64),
        below_conjecture_count: below,
        violations,
    };
    ScanReport {
        config,
        records,
        summary,
    }
}
