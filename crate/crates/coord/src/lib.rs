//! Case study 1: a fleet of 2-D robots tracking authored paths under a
//! centralized critical-section coordinator whose commands and status reports
//! traverse an impaired channel. Detects and counts collisions.

pub mod collision;
pub mod coordinator;
pub mod critical;
pub mod envelope;
pub mod geom;
pub mod motion;
pub mod run;
pub mod scenario;
pub mod tracker;

pub use collision::{CollisionEvent, CollisionTracker};
pub use coordinator::{CoordContext, Coordinator, CoordinatorConfig, ReportedState};
pub use critical::{find_critical_sections, CriticalSection, CsId, IndexRange};
pub use envelope::{sweep_envelope, Envelope, RobotSpec};
pub use geom::{arc_length_parameterize, obb_intersect, Obb, PathGeom, Point, Pose};
pub use motion::{braking_distance, time_to_reach, trapezoid_profile, TrapezoidProfile};
pub use run::{run_coordination, CoordStats, CoordTaps, MessageCounters, RunError};
pub use scenario::{preset_scenario, Scenario, ScenarioError};
pub use tracker::{mission_complete, tracker_step, RobotState, UNRESTRICTED};
