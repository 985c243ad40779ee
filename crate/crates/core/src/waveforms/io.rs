//! JSON document for schedules. Frequencies are written in Hz (`ω/2π`) and
//! converted back to rad/s on load; times are seconds.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::schedule::{ControlSchedule, Controls, Segment, SegmentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SegmentDoc {
    Square { duration_s: f64, rabi_half_hz: f64, phase_rad: f64, detuning_half_hz: f64 },
    Hold { duration_s: f64, rabi_half_hz: f64, phase_rad: f64 },
    BlackmanSweep { duration_s: f64, peak_rabi_hz: f64, initial_detuning_hz: f64, ramp_s: f64, reversed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ControlsDoc {
    rabi_half_hz: f64,
    phase_rad: f64,
    detuning_half_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScheduleDoc {
    segments: Vec<SegmentDoc>,
    #[serde(default)]
    tail: Option<ControlsDoc>,
}

fn hz(w: f64) -> f64 {
    w / TAU
}

fn rad(f: f64) -> f64 {
    f * TAU
}

impl From<&Controls<f64>> for ControlsDoc {
    fn from(c: &Controls<f64>) -> Self {
        Self { rabi_half_hz: hz(c.rabi_half), phase_rad: c.phase, detuning_half_hz: hz(c.detuning_half) }
    }
}

impl From<&ControlsDoc> for Controls<f64> {
    fn from(c: &ControlsDoc) -> Self {
        Self { rabi_half: rad(c.rabi_half_hz), phase: c.phase_rad, detuning_half: rad(c.detuning_half_hz) }
    }
}

impl From<&Segment<f64>> for SegmentDoc {
    fn from(s: &Segment<f64>) -> Self {
        let duration_s = s.duration;
        match s.kind {
            SegmentKind::Square(c) => SegmentDoc::Square {
                duration_s,
                rabi_half_hz: hz(c.rabi_half),
                phase_rad: c.phase,
                detuning_half_hz: hz(c.detuning_half),
            },
            SegmentKind::Hold { rabi_half, phase } => {
                SegmentDoc::Hold { duration_s, rabi_half_hz: hz(rabi_half), phase_rad: phase }
            }
            SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, ramp_time, reversed } => {
                SegmentDoc::BlackmanSweep {
                    duration_s,
                    peak_rabi_hz: hz(peak_rabi),
                    initial_detuning_hz: hz(initial_detuning),
                    ramp_s: ramp_time,
                    reversed,
                }
            }
        }
    }
}

impl From<&SegmentDoc> for Segment<f64> {
    fn from(d: &SegmentDoc) -> Self {
        match *d {
            SegmentDoc::Square { duration_s, rabi_half_hz, phase_rad, detuning_half_hz } => Segment::square(
                duration_s,
                Controls { rabi_half: rad(rabi_half_hz), phase: phase_rad, detuning_half: rad(detuning_half_hz) },
            ),
            SegmentDoc::Hold { duration_s, rabi_half_hz, phase_rad } => {
                Segment::hold(duration_s, rad(rabi_half_hz), phase_rad)
            }
            SegmentDoc::BlackmanSweep { duration_s, peak_rabi_hz, initial_detuning_hz, ramp_s, reversed } => Segment {
                duration: duration_s,
                kind: SegmentKind::BlackmanSweep {
                    peak_rabi: rad(peak_rabi_hz),
                    initial_detuning: rad(initial_detuning_hz),
                    ramp_time: ramp_s,
                    reversed,
                },
            },
        }
    }
}

impl ControlSchedule<f64> {
    pub fn to_json(&self) -> Result<String> {
        let doc = ScheduleDoc {
            segments: self.segments.iter().map(SegmentDoc::from).collect(),
            tail: self.tail.as_ref().map(ControlsDoc::from),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        let segments = doc.segments.iter().map(Segment::from).collect();
        Ok(ControlSchedule::new(segments)?.with_tail(doc.tail.as_ref().map(Controls::from)))
    }
}
