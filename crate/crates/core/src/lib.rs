#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod measurement;
pub mod real;
pub mod spin;
pub mod waveforms;

pub use error::{Error, Result};
pub use real::Real;

pub type StateVector = spin::StateVector<f64>;
pub type Unitary = spin::Unitary<f64>;
pub type ControlSchedule = waveforms::ControlSchedule<f64>;
pub type MultiLevelDrive = waveforms::MultiLevelDrive<f64>;
