//! Quantum predictions for two-particle correlation experiments.
//!
//! A measurement setting is either a coplanar analyzer angle or a unit
//! direction vector. For the singlet state the joint outcome probability at
//! visibility `v` is `(1 - m*l*v*(a.b))/4` and the correlation function is
//! `-a.b` (`-cos(alpha - beta)` in the coplanar case).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit-norm slack accepted when ingesting direction vectors.
pub const VECTOR_NORM_INGEST_TOL: f64 = 1e-6;
/// Entry bound slack for quantum-origin matrices.
pub const QUANTUM_ENTRY_TOL: f64 = 1e-9;
/// Entry bound slack for experimental matrices.
pub const EXPERIMENTAL_ENTRY_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SettingsError {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("direction norm {norm} deviates from 1 by more than {tol}")]
    NotUnitNorm { norm: f64, tol: f64 },
    #[error("settings list on side {side} is empty")]
    EmptySide { side: char },
    #[error("mixed angle and vector settings are not comparable")]
    MixedRepresentation,
    #[error("outcome must be +1 or -1, got {0}")]
    InvalidOutcome(i8),
    #[error("visibility must lie in [0, 1] for model construction, got {0}")]
    VisibilityOutOfRange(f64),
    #[error("visibility must be a finite nonnegative real, got {0}")]
    InvalidVisibility(f64),
    #[error("matrix entry ({row},{col}) = {value} exceeds the allowed bound 1+{tol}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        tol: f64,
    },
}

/// One measurement setting on one side of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    /// Coplanar analyzer angle in radians.
    Angle(f64),
    /// Unit direction vector.
    Direction([f64; 3]),
}

impl Setting {
    pub fn angle(radians: f64) -> Result<Self, SettingsError> {
        if !radians.is_finite() {
            return Err(SettingsError::NonFiniteAngle(radians));
        }
        Ok(Setting::Angle(radians))
    }

    /// Builds a direction setting, normalizing when the norm is within
    /// `VECTOR_NORM_INGEST_TOL` of 1 and rejecting otherwise.
    pub fn direction(v: [f64; 3]) -> Result<Self, SettingsError> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > VECTOR_NORM_INGEST_TOL {
            return Err(SettingsError::NotUnitNorm {
                norm,
                tol: VECTOR_NORM_INGEST_TOL,
            });
        }
        Ok(Setting::Direction([v[0] / norm, v[1] / norm, v[2] / norm]))
    }

    fn is_angle(&self) -> bool {
        matches!(self, Setting::Angle(_))
    }
}

/// Fringe visibility; nonnegative by construction. Values above 1 only occur
/// as solver outputs, never in model construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Visibility(f64);

impl Visibility {
    pub fn new(v: f64) -> Result<Self, SettingsError> {
        if !v.is_finite() || v < 0.0 {
            return Err(SettingsError::InvalidVisibility(v));
        }
        Ok(Visibility(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The measurement directions on each side, defining an N x M grid of
/// prediction points. Both sides must use the same representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsSpec {
    a_settings: Vec<Setting>,
    b_settings: Vec<Setting>,
}

impl SettingsSpec {
    pub fn new(a_settings: Vec<Setting>, b_settings: Vec<Setting>) -> Result<Self, SettingsError> {
        if a_settings.is_empty() {
            return Err(SettingsError::EmptySide { side: 'A' });
        }
        if b_settings.is_empty() {
            return Err(SettingsError::EmptySide { side: 'B' });
        }
        let all = a_settings.iter().chain(b_settings.iter());
        let angles = all.clone().filter(|s| s.is_angle()).count();
        if angles != 0 && angles != a_settings.len() + b_settings.len() {
            return Err(SettingsError::MixedRepresentation);
        }
        Ok(SettingsSpec {
            a_settings,
            b_settings,
        })
    }

    pub fn coplanar(a_angles: &[f64], b_angles: &[f64]) -> Result<Self, SettingsError> {
        let a = a_angles
            .iter()
            .map(|&x| Setting::angle(x))
            .collect::<Result<Vec<_>, _>>()?;
        let b = b_angles
            .iter()
            .map(|&x| Setting::angle(x))
            .collect::<Result<Vec<_>, _>>()?;
        SettingsSpec::new(a, b)
    }

    pub fn a_settings(&self) -> &[Setting] {
        &self.a_settings
    }

    pub fn b_settings(&self) -> &[Setting] {
        &self.b_settings
    }

    pub fn rows(&self) -> usize {
        self.a_settings.len()
    }

    pub fn cols(&self) -> usize {
        self.b_settings.len()
    }
}

/// Where a prediction matrix came from; experimental data carries no
/// settings, so settings-dependent operations never see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Quantum,
    Experimental,
}

/// An N x M real matrix of two-particle correlation values in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    origin: Origin,
}

impl PredictionMatrix {
    /// Wraps raw row-major entries, enforcing the per-origin bound on |Q_ij|.
    pub fn new(
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
        origin: Origin,
    ) -> Result<Self, SettingsError> {
        assert_eq!(entries.len(), rows * cols, "entry count must match shape");
        let tol = match origin {
            Origin::Quantum => QUANTUM_ENTRY_TOL,
            Origin::Experimental => EXPERIMENTAL_ENTRY_TOL,
        };
        for (k, &q) in entries.iter().enumerate() {
            if !q.is_finite() || q.abs() > 1.0 + tol {
                return Err(SettingsError::EntryOutOfRange {
                    row: k / cols,
                    col: k % cols,
                    value: q,
                    tol,
                });
            }
        }
        Ok(PredictionMatrix {
            rows,
            cols,
            entries,
            origin,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&q| q == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, &q| acc.max(q.abs()))
    }

    /// Scales every entry by `factor`, keeping the origin tag.
    pub fn scaled(&self, factor: f64) -> PredictionMatrix {
        PredictionMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&q| q * factor).collect(),
            origin: self.origin,
        }
    }
}

/// Dot product of two settings: `cos(alpha - beta)` for angles, the
/// Euclidean dot product for vectors.
fn setting_dot(a: &Setting, b: &Setting) -> Result<f64, SettingsError> {
    match (a, b) {
        (Setting::Angle(x), Setting::Angle(y)) => Ok((x - y).cos()),
        (Setting::Direction(u), Setting::Direction(v)) => {
            Ok(u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
        }
        _ => Err(SettingsError::MixedRepresentation),
    }
}

/// Singlet correlation function `E(a, b) = -a.b`.
pub fn correlation(a: &Setting, b: &Setting) -> Result<f64, SettingsError> {
    Ok(-setting_dot(a, b)?)
}

/// Joint probability of outcomes `(m, l)` at settings `(a, b)` under
/// visibility `v`: `(1 - m*l*v*(a.b))/4`.
pub fn joint_probability(
    m: i8,
    l: i8,
    a: &Setting,
    b: &Setting,
    v: Visibility,
) -> Result<f64, SettingsError> {
    if m != 1 && m != -1 {
        return Err(SettingsError::InvalidOutcome(m));
    }
    if l != 1 && l != -1 {
        return Err(SettingsError::InvalidOutcome(l));
    }
    if v.value() > 1.0 {
        return Err(SettingsError::VisibilityOutOfRange(v.value()));
    }
    let dot = setting_dot(a, b)?;
    Ok((1.0 - f64::from(m) * f64::from(l) * v.value() * dot) / 4.0)
}

/// Quantum prediction matrix `Q_ij = E(a_i, b_j)` for the given settings.
pub fn build_prediction_matrix(spec: &SettingsSpec) -> Result<PredictionMatrix, SettingsError> {
    let mut entries = Vec::with_capacity(spec.rows() * spec.cols());
    for a in spec.a_settings() {
        for b in spec.b_settings() {
            entries.push(correlation(a, b)?);
        }
    }
    PredictionMatrix::new(spec.rows(), spec.cols(), entries, Origin::Quantum)
}
