//! Desired-vs-measured joint comparison, aligned by sequence number rather
//! than wall time so transport delay does not masquerade as tracking error.

use serde::Serialize;
use std::collections::HashMap;

/// One controller-side sample: the target sent under a sequence number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredSample {
    pub seq: u32,
    pub joints: [f64; 2],
}

/// One robot-side sample: the joints while tracking `seq_last_applied`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredSample {
    pub seq_last_applied: u32,
    pub joints: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointError {
    pub seq: u32,
    pub dq: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointErrorSummary {
    pub matched: usize,
    pub lost: usize,
    pub mean_abs_rad: f64,
    pub max_abs_rad: f64,
}

/// Per-seq error series plus summary. A desired seq matches the first
/// measured sample that applied it; desired seqs never applied are lost.
pub fn joint_error_series(
    desired: &[DesiredSample],
    measured: &[MeasuredSample],
) -> (Vec<JointError>, Vec<u32>, JointErrorSummary) {
    let mut first_applied: HashMap<u32, [f64; 2]> = HashMap::new();
    for m in measured {
        first_applied.entry(m.seq_last_applied).or_insert(m.joints);
    }
    let mut errors = Vec::new();
    let mut lost = Vec::new();
    let mut sum_abs = 0.0;
    let mut max_abs: f64 = 0.0;
    for d in desired {
        match first_applied.get(&d.seq) {
            Some(q) => {
                let dq = [q[0] - d.joints[0], q[1] - d.joints[1]];
                for e in dq {
                    sum_abs += e.abs();
                    max_abs = max_abs.max(e.abs());
                }
                errors.push(JointError { seq: d.seq, dq });
            }
            None => lost.push(d.seq),
        }
    }
    let matched = errors.len();
    let summary = JointErrorSummary {
        matched,
        lost: lost.len(),
        mean_abs_rad: if matched == 0 { 0.0 } else { sum_abs / (2 * matched) as f64 },
        max_abs_rad: max_abs,
    };
    (errors, lost, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_have_zero_error() {
        let desired: Vec<DesiredSample> =
            (0..10).map(|seq| DesiredSample { seq, joints: [seq as f64, -(seq as f64)] }).collect();
        let measured: Vec<MeasuredSample> = desired
            .iter()
            .map(|d| MeasuredSample { seq_last_applied: d.seq, joints: d.joints })
            .collect();
        let (errors, lost, summary) = joint_error_series(&desired, &measured);
        assert_eq!(errors.len(), 10);
        assert!(lost.is_empty());
        assert_eq!(summary.mean_abs_rad, 0.0);
        assert_eq!(summary.max_abs_rad, 0.0);
    }

    #[test]
    fn missing_seq_is_flagged_lost_and_excluded() {
        let desired = vec![
            DesiredSample { seq: 0, joints: [0.0, 0.0] },
            DesiredSample { seq: 1, joints: [1.0, 1.0] },
            DesiredSample { seq: 2, joints: [2.0, 2.0] },
        ];
        let measured = vec![
            MeasuredSample { seq_last_applied: 0, joints: [0.0, 0.0] },
            MeasuredSample { seq_last_applied: 2, joints: [2.5, 2.0] },
        ];
        let (errors, lost, summary) = joint_error_series(&desired, &measured);
        assert_eq!(lost, vec![1]);
        assert_eq!(errors.len(), 2);
        assert_eq!(summary.matched, 2);
        assert_eq!(summary.lost, 1);
        assert_eq!(summary.max_abs_rad, 0.5);
    }

    #[test]
    fn first_application_wins_for_repeated_seq() {
        let desired = vec![DesiredSample { seq: 5, joints: [1.0, 1.0] }];
        let measured = vec![
            MeasuredSample { seq_last_applied: 5, joints: [0.9, 1.0] },
            MeasuredSample { seq_last_applied: 5, joints: [1.0, 1.0] },
        ];
        let (errors, _, _) = joint_error_series(&desired, &measured);
        assert!((errors[0].dq[0] + 0.1).abs() < 1e-12);
    }
}
