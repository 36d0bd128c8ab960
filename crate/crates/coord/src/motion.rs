//! Trapezoidal velocity profiles along a fixed path, plus the kinematic
//! helpers the coordinator and tracker share.

/// Time parameterization s(t) for a rest-to-rest move of `length_m` under
/// symmetric limits: trapezoidal when the cruise speed is reachable,
/// triangular otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile {
    pub length_m: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Peak speed actually reached.
    pub v_peak: f64,
    /// Duration of the acceleration (= deceleration) phase.
    pub t_acc: f64,
    /// Duration of the cruise phase (zero for triangular profiles).
    pub t_cruise: f64,
}

/// Build the profile. Requires length >= 0, v_max > 0, a_max > 0.
pub fn trapezoid_profile(length_m: f64, v_max: f64, a_max: f64) -> TrapezoidProfile {
    assert!(length_m >= 0.0 && v_max > 0.0 && a_max > 0.0);
    let d_full_accel = v_max * v_max / a_max; // accel + decel distance
    if length_m >= d_full_accel {
        TrapezoidProfile {
            length_m,
            v_max,
            a_max,
            v_peak: v_max,
            t_acc: v_max / a_max,
            t_cruise: (length_m - d_full_accel) / v_max,
        }
    } else {
        let v_peak = (length_m * a_max).sqrt();
        TrapezoidProfile { length_m, v_max, a_max, v_peak, t_acc: v_peak / a_max, t_cruise: 0.0 }
    }
}

impl TrapezoidProfile {
    pub fn total_duration(&self) -> f64 {
        2.0 * self.t_acc + self.t_cruise
    }

    /// Arc position at time t, clamped to [0, length].
    pub fn s_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_duration());
        let a = self.a_max;
        if t <= self.t_acc {
            0.5 * a * t * t
        } else if t <= self.t_acc + self.t_cruise {
            0.5 * a * self.t_acc * self.t_acc + self.v_peak * (t - self.t_acc)
        } else {
            let td = t - self.t_acc - self.t_cruise;
            self.length_m - 0.5 * a * (self.t_acc - td).powi(2)
        }
    }

    /// Speed at time t.
    pub fn v_at(&self, t: f64) -> f64 {
        let total = self.total_duration();
        if t <= 0.0 || t >= total {
            return 0.0;
        }
        if t <= self.t_acc {
            self.a_max * t
        } else if t <= self.t_acc + self.t_cruise {
            self.v_peak
        } else {
            self.a_max * (total - t)
        }
    }
}

/// Time for a robot at (distance `d` before the target, speed `v`) to reach
/// the target, accelerating toward v_max and ignoring any stop at the target.
/// Zero when the target is at or behind the robot.
pub fn time_to_reach(d: f64, v: f64, v_max: f64, a_max: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let v = v.clamp(0.0, v_max);
    let d_to_vmax = (v_max * v_max - v * v) / (2.0 * a_max);
    if d <= d_to_vmax {
        // d = v t + a t^2 / 2
        (-v + (v * v + 2.0 * a_max * d).sqrt()) / a_max
    } else {
        (v_max - v) / a_max + (d - d_to_vmax) / v_max
    }
}

/// Continuous braking distance v^2 / (2 a).
pub fn braking_distance(v: f64, a_max: f64) -> f64 {
    v * v / (2.0 * a_max)
}

/// Largest next-step speed that still admits a full stop within `gap` meters,
/// under trapezoidal (midpoint) position integration with step `dt`:
/// choosing v' <= this bound keeps gap' >= v'^2/(2a) after the step.
pub fn brake_limited_speed(v: f64, gap: f64, a_max: f64, dt: f64) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    let disc = a_max * a_max * dt * dt - 4.0 * a_max * dt * v + 8.0 * a_max * gap;
    if disc <= 0.0 {
        0.0
    } else {
        ((-a_max * dt + disc.sqrt()) / 2.0).max(0.0)
    }
}
