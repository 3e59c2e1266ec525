//! Motion of the eigenvalues of smoothly varying real matrices.
//!
//! The crate decomposes a real matrix into biorthogonal left and right
//! eigenvectors ([`spectral`]), computes eigenvalue velocities, accelerations
//! and their split into inertial, conjugate-pair and other-eigenvalue forces
//! ([`forces`]), generates matrix families and paths ([`paths`]), builds
//! random impulse processes ([`stochastic`]), evaluates expectation and
//! variance formulas with Monte-Carlo checks ([`analytics`]), and follows
//! eigenvalue trajectories with event detection ([`tracking`]).

pub mod analytics;
pub mod error;
pub mod forces;
pub mod matrix;
pub mod paths;
pub mod rng;
pub mod spectral;
pub mod stochastic;
pub mod tracking;

pub use faer::c64;

pub use error::{Error, Result};
pub use forces::{
    acceleration, classify_interaction, couplings, eigvec_derivatives, force_decomposition, velocity,
    CouplingCoefficients, EigenForce, ForceReport, Interaction,
};
pub use matrix::{MatrixFile, RealSquareMatrix};
pub use paths::{GeneratorSpec, HatanoNelsonParams, MatrixPath, PathPoint};
pub use spectral::{decompose, BiorthogonalEigenSystem, Tolerances};
pub use stochastic::{
    ImpulseDistribution, Moments, StochasticProcess, StochasticProcessSpec, WindowSpec, BUMP_MASS,
};
pub use tracking::{track, Event, EventKind, Trajectory};
