//! One-way delay and loss statistics from a pair of taps, matching send and
//! recv records on (msg_type, robot_id, seq).

use netchan::{TapDirection, TapRecord};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayStats {
    pub matched: usize,
    pub lost: usize,
    /// Absent when no pair matched.
    pub mean_ns: Option<f64>,
    pub p95_ns: Option<i64>,
    pub max_ns: Option<i64>,
    /// Latency figures are only meaningful when both taps share a clock;
    /// reports label unsynchronized stats.
    pub clock_synchronized: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelayStatsError {
    #[error("duplicate key {key:?} in {side} tap")]
    DuplicateKey { side: &'static str, key: String },
}

type MatchKey = (&'static str, u16, u32);

fn key_of(r: &TapRecord) -> MatchKey {
    (r.msg_type.name(), r.robot_id, r.seq)
}

/// Compute per-match latency recv.t_ns - send.t_ns over one direction.
/// `send_tap` carries the sender's send records, `recv_tap` the receiver's
/// recv records; other directions in the same files are ignored.
pub fn one_way_delay_stats(
    send_tap: &[TapRecord],
    recv_tap: &[TapRecord],
    clock_synchronized: bool,
) -> Result<DelayStats, DelayStatsError> {
    let mut sends: HashMap<MatchKey, u64> = HashMap::new();
    for r in send_tap.iter().filter(|r| r.direction == TapDirection::Send) {
        if sends.insert(key_of(r), r.t_ns).is_some() {
            return Err(DelayStatsError::DuplicateKey {
                side: "send",
                key: format!("{:?}", key_of(r)),
            });
        }
    }
    let mut recvs: HashMap<MatchKey, u64> = HashMap::new();
    for r in recv_tap.iter().filter(|r| r.direction == TapDirection::Recv) {
        if recvs.insert(key_of(r), r.t_ns).is_some() {
            return Err(DelayStatsError::DuplicateKey {
                side: "recv",
                key: format!("{:?}", key_of(r)),
            });
        }
    }

    let mut latencies: Vec<i64> = Vec::new();
    let mut lost = 0usize;
    for (key, t_send) in &sends {
        match recvs.get(key) {
            Some(t_recv) => latencies.push(*t_recv as i64 - *t_send as i64),
            None => lost += 1,
        }
    }
    latencies.sort_unstable();
    let matched = latencies.len();
    let (mean_ns, p95_ns, max_ns) = if matched == 0 {
        (None, None, None)
    } else {
        let sum: i64 = latencies.iter().sum();
        // Nearest-rank percentile.
        let rank = ((0.95 * matched as f64).ceil() as usize).clamp(1, matched);
        (
            Some(sum as f64 / matched as f64),
            Some(latencies[rank - 1]),
            Some(*latencies.last().unwrap()),
        )
    };
    Ok(DelayStats { matched, lost, mean_ns, p95_ns, max_ns, clock_synchronized })
}
