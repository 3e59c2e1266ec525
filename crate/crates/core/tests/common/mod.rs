#![allow(dead_code)]

use eigenmotion_core::c64;
use eigenmotion_core::paths::ginibre;
use eigenmotion_core::spectral::eigenvalues;
use eigenmotion_core::tracking::hungarian;
use eigenmotion_core::RealSquareMatrix;

/// Ginibre matrix with entries scaled by `1/sqrt(n)`, so the spectrum fills
/// roughly the unit disc.
pub fn scaled_ginibre(n: usize, seed: u64) -> RealSquareMatrix {
    let m = ginibre(n, seed).unwrap();
    m.scaled(1.0 / (n as f64).sqrt())
}

/// Smallest pairwise eigenvalue distance.
pub fn min_gap(values: &[c64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Eigenvalues of `m`, reordered to best match `reference`.
pub fn matched_eigenvalues(m: &RealSquareMatrix, reference: &[c64]) -> Vec<c64> {
    let values = eigenvalues(m).unwrap();
    let cost: Vec<Vec<f64>> = reference
        .iter()
        .map(|r| values.iter().map(|v| (r - v).norm()).collect())
        .collect();
    let assign = hungarian(&cost);
    assign.iter().map(|&j| values[j]).collect()
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: c64, b: c64, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}
