//! Real-socket forwarding: the agent re-sends every datagram byte-identically
//! to its forward endpoint, the proxy pushes each datagram through the channel
//! model first (wall-clock delayed delivery). Both tap every datagram.

use crate::channel::{sample_channel, ChannelOutcome, LinkState};
use crate::profile::{Jitter, LinkSettings, LossModel};
use crate::tap::{TapDirection, TapError, TapMsgType, TapWriter};
use crate::wire::decode_message;
use std::collections::BinaryHeap;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use thiserror::Error;

/// Wall-clock nanoseconds since the Unix epoch. One-way delays computed from
/// two taps are only meaningful when both hosts share this clock.
pub fn wall_ns() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).expect("clock before epoch").as_nanos() as u64
}

const MAX_DATAGRAM: usize = 65_536;
const IDLE_POLL: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("socket error on {context}: {source}")]
    Socket { context: String, source: std::io::Error },
    #[error(transparent)]
    Tap(#[from] TapError),
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct AgentStats {
    pub received: u64,
    pub forwarded: u64,
}

/// Cooperative stop flag for agents running inside another process (tests,
/// orchestration). The CLI runs them with a flag that never flips.
pub type StopFlag = Arc<AtomicBool>;

fn sock_err(context: &str, source: std::io::Error) -> AgentError {
    AgentError::Socket { context: context.to_string(), source }
}

// Tap identity of a datagram: decoded header fields, or unknown with a
// running per-agent counter standing in for seq.
fn tap_identity(bytes: &[u8], unknown_counter: &mut u32) -> (TapMsgType, u16, u32) {
    match decode_message(bytes) {
        Ok(msg) => (TapMsgType::Known(msg.msg_type()), msg.robot_id, msg.seq),
        Err(_) => {
            let seq = *unknown_counter;
            *unknown_counter += 1;
            (TapMsgType::Unknown, 0, seq)
        }
    }
}

/// Forward every datagram received on `listen` to `forward`, byte-identical,
/// writing a recv and a send tap record per datagram. One agent serves one
/// direction; run two agents for command and status paths.
///
/// Undecodable datagrams are forwarded anyway and tapped as msg_type=unknown.
/// Socket failures terminate with a diagnostic.
pub fn run_forward_agent(
    listen: SocketAddr,
    forward: SocketAddr,
    tap: &mut TapWriter,
    stop: &StopFlag,
) -> Result<AgentStats, AgentError> {
    let socket = UdpSocket::bind(listen).map_err(|e| sock_err(&format!("bind {listen}"), e))?;
    socket.set_read_timeout(Some(IDLE_POLL)).map_err(|e| sock_err("set_read_timeout", e))?;
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let mut stats = AgentStats::default();
    let mut unknown_counter = 0u32;

    while !stop.load(Ordering::Relaxed) {
        let len = match socket.recv_from(&mut buf) {
            Ok((len, _src)) => len,
            Err(e) if is_timeout(&e) => continue,
            Err(e) => return Err(sock_err("recv_from", e)),
        };
        let bytes = &buf[..len];
        let (msg_type, robot_id, seq) = tap_identity(bytes, &mut unknown_counter);
        tap.append_raw(TapDirection::Recv, msg_type, robot_id, seq, wall_ns())?;
        stats.received += 1;
        socket
            .send_to(bytes, forward)
            .map_err(|e| sock_err(&format!("send_to {forward}"), e))?;
        tap.append_raw(TapDirection::Send, msg_type, robot_id, seq, wall_ns())?;
        stats.forwarded += 1;
    }
    Ok(stats)
}

/// Impairment parameters of the proxy, mirroring its CLI flags. Jitter is a
/// uniform half-width around the base delay.
#[derive(Debug, Clone, Copy)]
pub struct ProxyConfig {
    pub delay_ms: f64,
    pub plr: f64,
    pub jitter_ms: f64,
    pub seed: u64,
}

impl ProxyConfig {
    fn link(&self) -> LinkSettings {
        LinkSettings {
            delay_ns: (self.delay_ms * 1e6).round() as u64,
            jitter: if self.jitter_ms > 0.0 {
                Jitter::Uniform { half_width_ns: (self.jitter_ms * 1e6).round() as u64 }
            } else {
                Jitter::None
            },
            loss: LossModel::Bernoulli { p: self.plr },
        }
    }
}

struct Pending {
    due_ns: u64,
    tie: u64,
    bytes: Vec<u8>,
    msg_type: TapMsgType,
    robot_id: u16,
    seq: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        (self.due_ns, self.tie) == (other.due_ns, other.tie)
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (other.due_ns, other.tie).cmp(&(self.due_ns, self.tie))
    }
}

/// As `run_forward_agent`, but each datagram passes the channel model: lost
/// datagrams are tapped on recv and never re-sent; delivered ones are re-sent
/// once their sampled delay has elapsed on the wall clock.
pub fn run_impairment_proxy(
    listen: SocketAddr,
    forward: SocketAddr,
    config: ProxyConfig,
    tap: &mut TapWriter,
    stop: &StopFlag,
) -> Result<AgentStats, AgentError> {
    let link = config.link();
    let mut state = LinkState::from_seed(config.seed);
    let socket = UdpSocket::bind(listen).map_err(|e| sock_err(&format!("bind {listen}"), e))?;
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let mut pending: BinaryHeap<Pending> = BinaryHeap::new();
    let mut tie = 0u64;
    let mut stats = AgentStats::default();
    let mut unknown_counter = 0u32;

    while !stop.load(Ordering::Relaxed) {
        // Flush everything that has come due.
        let now = wall_ns();
        while pending.peek().is_some_and(|p| p.due_ns <= now) {
            let p = pending.pop().unwrap();
            socket
                .send_to(&p.bytes, forward)
                .map_err(|e| sock_err(&format!("send_to {forward}"), e))?;
            tap.append_raw(TapDirection::Send, p.msg_type, p.robot_id, p.seq, wall_ns())?;
            stats.forwarded += 1;
        }
        let timeout = match pending.peek() {
            Some(p) => Duration::from_nanos(p.due_ns.saturating_sub(now)).min(IDLE_POLL),
            None => IDLE_POLL,
        };
        // A zero timeout would mean "block forever" for set_read_timeout.
        socket
            .set_read_timeout(Some(timeout.max(Duration::from_micros(100))))
            .map_err(|e| sock_err("set_read_timeout", e))?;
        let len = match socket.recv_from(&mut buf) {
            Ok((len, _src)) => len,
            Err(e) if is_timeout(&e) => continue,
            Err(e) => return Err(sock_err("recv_from", e)),
        };
        let bytes = buf[..len].to_vec();
        let recv_ns = wall_ns();
        let (msg_type, robot_id, seq) = tap_identity(&bytes, &mut unknown_counter);
        tap.append_raw(TapDirection::Recv, msg_type, robot_id, seq, recv_ns)?;
        stats.received += 1;
        match sample_channel(&link, &mut state) {
            ChannelOutcome::Drop => {}
            ChannelOutcome::DeliverAfter(extra_ns) => {
                pending.push(Pending {
                    due_ns: recv_ns + extra_ns,
                    tie,
                    bytes,
                    msg_type,
                    robot_id,
                    seq,
                });
                tie += 1;
            }
        }
    }
    // Drain what is already queued before shutting down.
    while let Some(p) = pending.pop() {
        let now = wall_ns();
        if p.due_ns > now {
            std::thread::sleep(Duration::from_nanos(p.due_ns - now));
        }
        socket.send_to(&p.bytes, forward).map_err(|e| sock_err(&format!("send_to {forward}"), e))?;
        tap.append_raw(TapDirection::Send, p.msg_type, p.robot_id, p.seq, wall_ns())?;
        stats.forwarded += 1;
    }
    Ok(stats)
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut)
}
