//! Pairwise collision detection on current footprints, edge-triggered per
//! robot pair and counted at most once per (pair, critical-section
//! engagement).

use crate::critical::{CriticalSection, CsId};
use crate::geom::{obb_intersect, Obb};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionEvent {
    pub t_ns: u64,
    pub robot_a: u16,
    pub robot_b: u16,
    /// Critical section whose ranges cover both robots' indices, if any.
    pub cs_id: Option<CsId>,
}

#[derive(Debug, Default)]
pub struct CollisionTracker {
    in_contact: Vec<bool>,
    counted_engagements: HashSet<(usize, usize, CsId)>,
    robot_count: usize,
}

impl CollisionTracker {
    pub fn new(robot_count: usize) -> Self {
        CollisionTracker {
            in_contact: vec![false; robot_count * robot_count],
            counted_engagements: HashSet::new(),
            robot_count,
        }
    }

    /// Check all pairs. `footprints` and `path_indices` give each robot's
    /// current pose footprint and envelope index; `world_cs` is the registry
    /// of live critical sections (kept until either robot is reassigned),
    /// used to attribute events and dedupe per engagement.
    pub fn step(
        &mut self,
        t_ns: u64,
        footprints: &[Obb],
        path_indices: &[usize],
        world_cs: &[CriticalSection],
    ) -> Vec<CollisionEvent> {
        let n = self.robot_count;
        debug_assert_eq!(footprints.len(), n);
        let mut events = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let (fa, fb) = (&footprints[a], &footprints[b]);
                // Cheap circle prefilter before the SAT test.
                let dx = fa.cx - fb.cx;
                let dy = fa.cy - fb.cy;
                let reach = fa.bounding_radius() + fb.bounding_radius();
                let overlapping = dx * dx + dy * dy <= reach * reach && obb_intersect(fa, fb);
                let idx = a * n + b;
                let was = self.in_contact[idx];
                self.in_contact[idx] = overlapping;
                if !overlapping || was {
                    continue;
                }
                // New contact: attribute to a covering critical section.
                let (ia, ib) = (path_indices[a], path_indices[b]);
                let cs_id = world_cs.iter().find_map(|cs| {
                    let (ra, rb) = if (cs.robot_a as usize, cs.robot_b as usize) == (a, b) {
                        (&cs.range_a, &cs.range_b)
                    } else if (cs.robot_b as usize, cs.robot_a as usize) == (a, b) {
                        (&cs.range_b, &cs.range_a)
                    } else {
                        return None;
                    };
                    (ra.contains_within(ia, 1) && rb.contains_within(ib, 1)).then_some(cs.cs_id)
                });
                if let Some(id) = cs_id {
                    if !self.counted_engagements.insert((a, b, id)) {
                        continue; // engagement already produced an event
                    }
                }
                events.push(CollisionEvent { t_ns, robot_a: a as u16, robot_b: b as u16, cs_id });
            }
        }
        events
    }
}
