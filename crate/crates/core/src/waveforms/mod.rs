//! Two-level control schedules (square, composite, Blackman adiabatic) and their
//! lift to `d`-level drives.

mod adiabatic;
mod blackman;
mod composite;
mod drive;
mod io;
mod schedule;

pub use adiabatic::{adiabatic_method, AdiabaticParams, Direction};
pub use blackman::{blackman_detuning, blackman_rabi, lab_frame_chirp, lab_frame_chirp_at_zero};
pub use composite::{composite_method, square_pulse, CompositeSequence, Rotation};
pub use drive::{lift_schedule, DrivePerturbation, GainCurve, MultiLevelDrive, Transition};
pub use schedule::{ControlSchedule, Controls, Segment, SegmentKind};
