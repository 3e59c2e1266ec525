//! Shared fixtures for the benchmarks.

use eigenmotion_core::paths::{diagonal_gaussian_impulse, ginibre, hatano_nelson};
use eigenmotion_core::{HatanoNelsonParams, MatrixPath, RealSquareMatrix};

/// Unit-norm Ginibre matrix.
pub fn ginibre_unit(n: usize, seed: u64) -> RealSquareMatrix {
    ginibre(n, seed).expect("valid dimension").normalized()
}

/// Hatano-Nelson matrix pushed along a unit-norm random diagonal.
pub fn hn_wing(n: usize, g: f64, seed: u64) -> MatrixPath {
    let h = hatano_nelson(HatanoNelsonParams::new(n, g).expect("valid parameters")).expect("valid matrix");
    MatrixPath::perturbation(h, diagonal_gaussian_impulse(n, seed).expect("valid dimension")).expect("same size")
}
