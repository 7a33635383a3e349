//! Bundled experimental correlation matrices.
//!
//! Two published Bell-test data sets ship with the crate so the analysis is
//! reproducible offline: a 10x3 scan from the Weinfurter-Michler experiment
//! and an 11x2 scan from the long-distance EPR-Bell experiment.

use crate::predictions::{Origin, PredictionMatrix};

pub const WEINFURTER_MICHLER: &str = "weinfurter-michler";
pub const LONG_DISTANCE: &str = "long-distance";

#[rustfmt::skip]
const WEINFURTER_MICHLER_DATA: [[f64; 3]; 10] = [
    [-0.894, -0.061,  0.761],
    [-0.851,  0.343,  0.765],
    [-0.625,  0.688,  0.516],
    [-0.251,  0.860,  0.103],
    [ 0.226,  0.921, -0.389],
    [ 0.530,  0.651, -0.648],
    [ 0.855,  0.323, -0.832],
    [ 0.852, -0.092, -0.843],
    [ 0.785, -0.539, -0.638],
    [ 0.397, -0.795, -0.253],
];

#[rustfmt::skip]
const LONG_DISTANCE_DATA: [[f64; 2]; 11] = [
    [ 0.960, -0.102],
    [ 0.903, -0.375],
    [ 0.733, -0.660],
    [ 0.479, -0.809],
    [ 0.191, -0.903],
    [-0.120, -0.923],
    [-0.429, -0.807],
    [-0.666, -0.656],
    [-0.842, -0.395],
    [-0.951, -0.152],
    [-0.953,  0.171],
];

/// A named bundled matrix.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub matrix: PredictionMatrix,
}

/// All bundled fixtures, in a stable order.
pub fn bundled_fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: WEINFURTER_MICHLER,
            matrix: from_rows(&WEINFURTER_MICHLER_DATA),
        },
        Fixture {
            name: LONG_DISTANCE,
            matrix: from_rows(&LONG_DISTANCE_DATA),
        },
    ]
}

/// Looks a fixture up by name.
pub fn fixture(name: &str) -> Option<PredictionMatrix> {
    bundled_fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .map(|f| f.matrix)
}

fn from_rows<const C: usize>(rows: &[[f64; C]]) -> PredictionMatrix {
    let entries: Vec<f64> = rows.iter().flatten().copied().collect();
    PredictionMatrix::new(rows.len(), C, entries, Origin::Experimental)
        .expect("bundled data is within range")
}
