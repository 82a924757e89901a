//! Simulation, estimation and concentration bounds for random dynamical
//! systems driven by i.i.d. maps.

pub mod bounds;
pub mod chains;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod rds;
pub mod spaces;
pub mod stats;

pub use chains::{simulate, simulate_coupled, CompositionOrder, RecordFlags, Trajectory};
pub use error::{Error, Result};
pub use estimators::{EmpiricalMeasure, LineMeasure, Observable};
pub use rds::{
    DrivingMeasure, MapDescriptor, MapDraw, Matrix, ParamFamily, ParamSampler, SeededStream,
};
pub use spaces::{Point, RegionSet, StateSpace};
