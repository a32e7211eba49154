//! Radially symmetric Dirac–scalar solitons and their sharp-interface bag
//! limits.

pub mod bag;
pub mod bessel;
pub mod dirac;
pub mod error;
pub mod functional;
pub mod gamma;
pub mod grid;
pub mod optim;
pub mod potentials;
pub mod report;
pub mod soliton;
pub mod tridiag;

pub use bag::{minimize_bag, mit_limit, BagConfig, BagReport, MitLimit};
pub use bessel::{mit_eigenvalue, TwoZoneProblem};
pub use dirac::{
    assemble_hamiltonian, density, eigen_solve, hellmann_feynman, DiracOperator, RadialField,
    RadialSpinor, SpectralResult, Supercharge,
};
pub use error::{Error, Result};
pub use gamma::{run_sweep, GammaConfig, GammaSweep};
pub use grid::{integrate, make_grid, NodeFamily, RadialGrid};
pub use optim::{DescentOptions, Method};
pub use potentials::PotentialSpec;
pub use soliton::{ModelParams, SolitonConfig, SolitonReport};
