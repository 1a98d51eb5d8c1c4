//! Simulation and optimization of reconfigurable-intelligent-surface links.
//!
//! The numeric core ([`geometry`], [`codebook`], [`channel`], [`optimizer`])
//! is generic over [`Real`] (`f32` or `f64`); the `f64` aliases below are what
//! the experiment layer and the CLI use.

pub mod band;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod scalar;
pub mod scenario;
pub mod sum;

pub use band::Band;
pub use channel::{
    received_power, reference_plate_power, Antenna, AntennaPattern, ChannelModel, Configuration,
    PatternKind, Scenario,
};
pub use codebook::{equivalent_bits, phase_std, Codebook, PhaseQuality, ReflectionState};
pub use error::{Error, Result};
pub use experiment::{
    bandwidth_3db, compare_resolutions, optimize_and_sweep, quantization_study, ResolutionReport, SweepResult,
};
pub use geometry::{build_grid, column_groups, GroupMap, GroupScheme, SurfaceGrid, Vec3};
pub use optimizer::{
    exhaustive_optimize, greedy_optimize, quantize_profile, OptimizationTrace, Optimized, OptimizerSettings, Start,
};
pub use scalar::Real;
pub use scenario::{load_scenario, LoadedScenario};

pub type Vec3d = Vec3<f64>;
pub type Grid64 = SurfaceGrid<f64>;
pub type Grid32 = SurfaceGrid<f32>;
pub type Codebook64 = Codebook<f64>;
pub type Codebook32 = Codebook<f32>;
pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
pub type ChannelModel64 = ChannelModel<f64>;
pub type ChannelModel32 = ChannelModel<f32>;
pub type Pattern64 = AntennaPattern<f64>;
