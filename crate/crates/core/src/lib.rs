//! Thermal phase diagrams of the massless lattice Schwinger model by exact
//! diagonalization, and their continuous up-scaling with an implicit neural
//! field.
//!
//! The pipeline runs bottom-up: [`spin`] builds the sector-resolved
//! Hamiltonian, [`thermal`] turns its spectrum into Gibbs averages of the
//! chiral condensate, [`phase`] sweeps those over a (T, mu) window,
//! [`dataset`] crops and down-samples diagrams into training pairs, [`net`]
//! learns to up-scale them, and [`interp`] and [`metrics`] provide the
//! classical baselines and the scoring.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod manifest;
pub mod metrics;
pub mod net;
pub mod phase;
pub mod phd;
pub mod rng;
pub mod spin;
pub mod theory;
pub mod thermal;

pub use dataset::{CropStrategy, DatasetSpec, PairConfig, Sample};
pub use error::{Error, Result};
pub use grid::Grid;
pub use interp::InterpolationMethod;
pub use metrics::{ErrorReport, Region, ScenarioTag, TrimmedStats};
pub use net::{ArchConfig, LatentGrid, Network, NetworkState, TrainingConfig};
pub use phase::{AxisGrid, PhaseDiagram, TransitionMask};
pub use spin::ModelParams;
