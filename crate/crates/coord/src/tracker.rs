//! Robot-side trajectory tracking: accelerate toward v_max along the path,
//! hold any restriction the last received critical point imposes, and park at
//! the path end.
//!
//! Velocity updates are clamped to +-a_max*dt and position integrates
//! trapezoidally, so constant-acceleration segments are exact. A restriction
//! received too late to brake for is overshot at full braking — that is the
//! collision mechanism under delayed or lost commands.

use crate::envelope::{Envelope, RobotSpec};
use crate::motion::brake_limited_speed;

/// Critical index meaning "unrestricted".
pub const UNRESTRICTED: i32 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub robot_id: u16,
    pub mission_id: u32,
    /// Arc position along the current path, meters.
    pub s: f64,
    pub v: f64,
    /// Envelope index of the last received critical point; -1 unrestricted.
    pub last_received_cp: i32,
    /// Sequence number of the newest CRITICAL_POINT applied (staleness guard).
    pub last_cp_seq: Option<u32>,
    /// Last status sequence number sent.
    pub last_status_seq: u32,
}

impl RobotState {
    pub fn new(robot_id: u16, mission_id: u32) -> Self {
        RobotState {
            robot_id,
            mission_id,
            s: 0.0,
            v: 0.0,
            last_received_cp: UNRESTRICTED,
            last_cp_seq: None,
            last_status_seq: 0,
        }
    }

    /// Begin a new mission: back to the start of the new path, at rest,
    /// unrestricted until a command for this mission arrives.
    pub fn start_mission(&mut self, mission_id: u32) {
        self.mission_id = mission_id;
        self.s = 0.0;
        self.v = 0.0;
        self.last_received_cp = UNRESTRICTED;
        self.last_cp_seq = None;
    }

    /// Apply a received CRITICAL_POINT if it is for the current mission and
    /// newer than anything applied before (out-of-order datagrams are
    /// ignored). Returns true when applied.
    pub fn apply_critical_point(&mut self, mission_id: u32, seq: u32, critical_index: i32) -> bool {
        if mission_id != self.mission_id {
            return false;
        }
        if self.last_cp_seq.is_some_and(|last| seq <= last) {
            return false;
        }
        self.last_cp_seq = Some(seq);
        self.last_received_cp = critical_index;
        true
    }
}

/// Advance the robot one tick of `dt` seconds along `envelope`'s path.
///
/// The commanded stop target is the arc position of the critical-point index;
/// the path end is always an implicit stop target.
pub fn tracker_step(state: &mut RobotState, envelope: &Envelope, spec: &RobotSpec, dt: f64) {
    debug_assert!(dt > 0.0);
    let total = envelope.s_at_index(envelope.len() - 1);

    // Desired speed: lowest of v_max and the brake limits for every active
    // stop target (command restriction and path end).
    let mut desired = spec.v_max.min(brake_limited_speed(state.v, total - state.s, spec.a_max, dt));
    let mut nearest_stop = total;
    if state.last_received_cp != UNRESTRICTED {
        let s_cp = envelope.s_at_index(state.last_received_cp.max(0) as usize);
        desired = desired.min(brake_limited_speed(state.v, s_cp - state.s, spec.a_max, dt));
        nearest_stop = nearest_stop.min(s_cp);
    }

    // Acceleration clamp, then trapezoidal position update.
    let v_next = desired.clamp(state.v - spec.a_max * dt, state.v + spec.a_max * dt).max(0.0);
    let mut s_next = (state.s + 0.5 * (state.v + v_next) * dt).min(total);
    if v_next == 0.0 {
        // Coming to rest within this tick: land on the stop target instead of
        // dribbling a sub-resolution step past it. Never moves backward, so
        // genuine overshoot (late command at speed) is unaffected.
        s_next = s_next.min(nearest_stop.max(state.s));
    }
    state.s = s_next;
    state.v = v_next;
}

/// Mission completion test: parked at the path end.
pub fn mission_complete(state: &RobotState, envelope: &Envelope) -> bool {
    let total = envelope.s_at_index(envelope.len() - 1);
    total - state.s <= 1e-4 && state.v <= 1e-3
}
