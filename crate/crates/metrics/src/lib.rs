//! Pure computation of every reported quantity: collision probability,
//! motion loss rate, peak counting, joint error, tap-derived delay stats,
//! and report tables. No internal state; identical inputs give identical
//! outputs bit-for-bit.

pub mod delay;
pub mod joints;
pub mod peaks;
pub mod rates;
pub mod report;

pub use delay::{one_way_delay_stats, DelayStats, DelayStatsError};
pub use joints::{joint_error_series, DesiredSample, JointErrorSummary, MeasuredSample};
pub use peaks::{count_motion_loops, DEFAULT_PEAK_THRESHOLD_FRACTION};
pub use rates::{format_p_collision_millis, mlr, p_collision, RateError};
pub use report::{render_report, CoordRow, ReportRow, TeleopRow};
