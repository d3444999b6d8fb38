//! Numerical laboratory for the semilinear wave equation with localized
//! Kelvin-Voigt damping `u_tt - div(K grad u)/rho + f(u) - div(a(x) grad u_t) = 0`
//! on 1D intervals and 2D rectangles with homogeneous Dirichlet conditions.
//!
//! The crate discretizes the regularized system that adds a `(1/k) b(x) u_t`
//! frictional term and truncates the nonlinearity at level `k`, advances it
//! with an energy-consistent implicit midpoint scheme, and provides the
//! post-processing used to verify the model's structural claims at desk scale:
//! the discrete energy identity, monotone decay, observability ratios and the
//! predicted exponential rate, the `k -> inf` limit toward the untruncated
//! frictionless problem, and spectra of the linearized generator.

pub mod analysis;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod nonlinear;
pub mod operator;
pub mod solver;
pub mod spectral;

pub use analysis::{energy, fit_decay, observability, rate_from_observability, DecayFit, EnergyRecord, ObservabilityReport};
pub use config::{Scenario, ScenarioConfig};
pub use error::{Error, Result};
pub use geometry::{build_damping_preset, build_grid, CoefficientField, DampingPreset, Grid, PresetParams, RegionSpec};
pub use nonlinear::{validate_assumptions, AssumptionReport, Nonlinearity};
pub use operator::{assemble, DiscreteOperator, FluxOperator};
pub use solver::{initial_data, run, InitialData, SolverConfig, State, Trajectory};
pub use spectral::{assemble_generator, liu_liu_diagnostic, spectrum, SpectrumReport};
