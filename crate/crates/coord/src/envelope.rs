//! Robot footprints and swept trajectory envelopes.

use crate::geom::{Obb, PathGeom};
use serde::{Deserialize, Serialize};

/// Fleet vehicle parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub robot_id: u16,
    pub length_m: f64,
    pub width_m: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl RobotSpec {
    /// Harbor AGV: 14.8 x 3.0 m, 6 m/s, 2 m/s^2.
    pub fn harbor(robot_id: u16) -> Self {
        RobotSpec { robot_id, length_m: 14.8, width_m: 3.0, v_max: 6.0, a_max: 2.0 }
    }

    /// Warehouse AGV: 2 x 0.5 m, 2 m/s, 1 m/s^2.
    pub fn warehouse(robot_id: u16) -> Self {
        RobotSpec { robot_id, length_m: 2.0, width_m: 0.5, v_max: 2.0, a_max: 1.0 }
    }

    pub fn valid(&self) -> bool {
        self.length_m > 0.0 && self.width_m > 0.0 && self.v_max > 0.0 && self.a_max > 0.0
    }

    pub fn footprint_at(&self, pose: &crate::geom::Pose) -> Obb {
        Obb::from_pose(pose, self.length_m / 2.0, self.width_m / 2.0)
    }
}

/// The swept footprint of a robot along its path: one oriented rectangle per
/// arc sample at 0, ds, 2ds, ..., plus the path end.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    rects: Vec<Obb>,
    /// Arc position of each sample.
    sample_s: Vec<f64>,
    ds: f64,
}

/// Sample the robot's footprint along the path every `ds` meters. The final
/// sample always sits at the path end.
pub fn sweep_envelope(path: &PathGeom, spec: &RobotSpec, ds: f64) -> Envelope {
    assert!(ds > 0.0, "ds must be positive");
    let total = path.total_length();
    let mut sample_s = Vec::new();
    let mut s = 0.0;
    let mut k = 0u64;
    while s <= total {
        sample_s.push(s);
        k += 1;
        s = k as f64 * ds;
    }
    // Append the endpoint unless the grid landed on it.
    if *sample_s.last().unwrap() < total - 1e-9 * total.max(1.0) {
        sample_s.push(total);
    }
    let rects = sample_s
        .iter()
        .map(|&s| spec.footprint_at(&path.pose_at(s)))
        .collect();
    Envelope { rects, sample_s, ds }
}

impl Envelope {
    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn rects(&self) -> &[Obb] {
        &self.rects
    }

    pub fn rect(&self, index: usize) -> &Obb {
        &self.rects[index]
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    /// Arc position of sample `index`.
    pub fn s_at_index(&self, index: usize) -> f64 {
        self.sample_s[index.min(self.sample_s.len() - 1)]
    }

    /// Index of the envelope sample at or before arc position `s`.
    pub fn index_at_s(&self, s: f64) -> usize {
        match self.sample_s.partition_point(|&v| v <= s) {
            0 => 0,
            i => i - 1,
        }
    }

    /// Smallest sample index at or after arc position `s` (saturates at the
    /// last index).
    pub fn index_at_or_after_s(&self, s: f64) -> usize {
        self.sample_s.partition_point(|&v| v < s).min(self.sample_s.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{arc_length_parameterize, Point};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn straight(len: f64) -> PathGeom {
        arc_length_parameterize(&[Point::new(0.0, 0.0), Point::new(len, 0.0)]).unwrap()
    }

    #[test]
    fn straight_path_counts_and_angles() {
        let path = straight(10.0);
        let env = sweep_envelope(&path, &RobotSpec::warehouse(0), 1.0);
        assert_eq!(env.len(), 11);
        assert!(env.rects().iter().all(|r| r.angle == 0.0));
        assert_relative_eq!(env.s_at_index(10), 10.0);
        // Footprint half extents everywhere.
        assert!(env.rects().iter().all(|r| r.half_length == 1.0 && r.half_width == 0.25));
    }

    #[test]
    fn coarse_ds_keeps_start_and_end() {
        let path = straight(3.0);
        let env = sweep_envelope(&path, &RobotSpec::warehouse(0), 10.0);
        assert_eq!(env.len(), 2);
        assert_relative_eq!(env.s_at_index(0), 0.0);
        assert_relative_eq!(env.s_at_index(1), 3.0);
    }

    #[test]
    fn l_shaped_path_rotates_across_the_bend() {
        let path = arc_length_parameterize(&[
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
        ])
        .unwrap();
        let env = sweep_envelope(&path, &RobotSpec::warehouse(0), 1.0);
        assert_eq!(env.len(), 9);
        assert_relative_eq!(env.rect(0).angle, 0.0);
        assert_relative_eq!(env.rect(8).angle, FRAC_PI_2);
        // Heading flips at the corner sample s=4 (start of second segment).
        assert_relative_eq!(env.rect(3).angle, 0.0);
        assert_relative_eq!(env.rect(4).angle, FRAC_PI_2);
    }

    #[test]
    fn zero_length_path_has_one_sample() {
        let path = arc_length_parameterize(&[Point::new(1.0, 1.0)]).unwrap();
        let env = sweep_envelope(&path, &RobotSpec::warehouse(0), 0.5);
        assert_eq!(env.len(), 1);
    }

    #[test]
    fn index_lookups_are_consistent() {
        let path = straight(10.0);
        let env = sweep_envelope(&path, &RobotSpec::warehouse(0), 0.5);
        assert_eq!(env.index_at_s(0.0), 0);
        assert_eq!(env.index_at_s(0.49), 0);
        assert_eq!(env.index_at_s(0.5), 1);
        assert_eq!(env.index_at_s(10.0), 20);
        assert_eq!(env.index_at_or_after_s(0.51), 2);
        assert_eq!(env.index_at_or_after_s(99.0), 20);
    }
}
