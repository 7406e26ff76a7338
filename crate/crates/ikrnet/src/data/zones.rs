//! Protocol-zone assignment from record timestamps.

use crate::data::spec::{StressWindow, SyntheticProtocolSpec};
use crate::signal::ProtocolZone;

/// The timeline facts a zone decision needs: where recording starts, when
/// the stress tests run, and how long the post-stress zone stays open.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTimeline {
    pub recording_start_s: f64,
    /// Stress test before intake, if scheduled.
    pub pre_stress: Option<StressWindow>,
    /// Stress test after intake, if scheduled.
    pub post_stress: Option<StressWindow>,
    pub st_plus_window_s: f64,
}

impl ProtocolTimeline {
    pub fn from_spec(spec: &SyntheticProtocolSpec) -> Self {
        let pre_stress = spec.stress_windows.iter().copied().find(|w| w.start_s < 0.0);
        let post_stress = spec.stress_windows.iter().copied().find(|w| w.start_s >= 0.0);
        ProtocolTimeline {
            recording_start_s: spec.recording_start_s(),
            pre_stress,
            post_stress,
            st_plus_window_s: spec.st_plus_window_s,
        }
    }
}

/// Zone of a record starting at `t_s` (seconds relative to intake).
///
/// Baseline runs from the recording start to the first stress test;
/// the no-stress drug zone covers T+2h to T+3h; the stress-and-drug zone
/// opens when the post-intake stress test ends. Seconds in between stay
/// unassigned, mirroring the omitted stress-without-drug subgroup.
pub fn assign_zone(t_s: f64, timeline: &ProtocolTimeline) -> ProtocolZone {
    let baseline_end = timeline.pre_stress.map(|w| w.start_s).unwrap_or(0.0);
    if t_s >= timeline.recording_start_s && t_s < baseline_end {
        return ProtocolZone::Baseline;
    }
    if (2.0 * 3600.0..3.0 * 3600.0).contains(&t_s) {
        return ProtocolZone::StMinusDgPlus;
    }
    if let Some(w) = timeline.post_stress {
        if t_s >= w.end_s && t_s < w.end_s + timeline.st_plus_window_s {
            return ProtocolZone::StPlusDgPlus;
        }
    }
    ProtocolZone::Unassigned
}
