//! Critical sections: maximal connected regions where two trajectory
//! envelopes overlap, reduced to per-envelope index ranges.

use crate::envelope::Envelope;
use crate::geom::obb_intersect;

/// Identifier of a critical section within one run, unique per creation.
pub type CsId = u64;

/// Inclusive index range on one envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    /// Containment with `slack` grid indices of tolerance on both ends
    /// (contact can begin between grid samples).
    pub fn contains_within(&self, i: usize, slack: usize) -> bool {
        self.start.saturating_sub(slack) <= i && i <= self.end + slack
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalSection {
    pub cs_id: CsId,
    pub robot_a: u16,
    pub robot_b: u16,
    pub range_a: IndexRange,
    pub range_b: IndexRange,
}

/// Find all critical sections between two envelopes: connected components
/// (8-neighborhood) of the intersecting (i, j) grid, each reduced to its
/// bounding index ranges. Ordered by range_a.start, then range_b.start.
///
/// cs_ids are assigned from `next_id` in that order.
pub fn find_critical_sections(
    env_a: &Envelope,
    env_b: &Envelope,
    robot_a: u16,
    robot_b: u16,
    next_id: &mut CsId,
) -> Vec<CriticalSection> {
    let n = env_a.len();
    let m = env_b.len();
    if n == 0 || m == 0 {
        return Vec::new();
    }

    // Circle prefilter: rectangles further apart than the sum of their
    // bounding radii cannot intersect.
    let ra = env_a.rect(0).bounding_radius();
    let rb = env_b.rect(0).bounding_radius();
    let reach = ra + rb;

    let mut hits = vec![false; n * m];
    let mut any = false;
    for i in 0..n {
        let a = env_a.rect(i);
        for j in 0..m {
            let b = env_b.rect(j);
            let dx = a.cx - b.cx;
            let dy = a.cy - b.cy;
            if dx * dx + dy * dy > reach * reach {
                continue;
            }
            if obb_intersect(a, b) {
                hits[i * m + j] = true;
                any = true;
            }
        }
    }
    if !any {
        return Vec::new();
    }

    // Flood-fill components over the hit grid.
    let mut seen = vec![false; n * m];
    let mut sections = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n * m {
        if !hits[start] || seen[start] {
            continue;
        }
        let mut min_i = usize::MAX;
        let mut max_i = 0;
        let mut min_j = usize::MAX;
        let mut max_j = 0;
        stack.push(start);
        seen[start] = true;
        while let Some(cell) = stack.pop() {
            let (i, j) = (cell / m, cell % m);
            min_i = min_i.min(i);
            max_i = max_i.max(i);
            min_j = min_j.min(j);
            max_j = max_j.max(j);
            let i_lo = i.saturating_sub(1);
            let j_lo = j.saturating_sub(1);
            for ni in i_lo..=(i + 1).min(n - 1) {
                for nj in j_lo..=(j + 1).min(m - 1) {
                    let c = ni * m + nj;
                    if hits[c] && !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        sections.push((min_i, max_i, min_j, max_j));
    }
    sections.sort_unstable();

    sections
        .into_iter()
        .map(|(min_i, max_i, min_j, max_j)| {
            let cs_id = *next_id;
            *next_id += 1;
            CriticalSection {
                cs_id,
                robot_a,
                robot_b,
                range_a: IndexRange { start: min_i, end: max_i },
                range_b: IndexRange { start: min_j, end: max_j },
            }
        })
        .collect()
}
