//! The full coordination experiment: mission generation, coordinator and
//! trackers exchanging CRITICAL_POINT / ROBOT_STATUS through the channel,
//! collision accounting, trace emission.
//!
//! Emulated profiles run on the virtual clock and are bit-for-bit
//! reproducible per (scenario, profile, seed). Real-passthrough profiles
//! exchange the same datagrams over UDP sockets under wall-clock pacing.

use crate::collision::CollisionTracker;
use crate::coordinator::{CoordContext, Coordinator, CoordinatorConfig, GrantOutcome, ReportedState};
use crate::critical::{find_critical_sections, CriticalSection, CsId};
use crate::envelope::{sweep_envelope, Envelope};
use crate::geom::{arc_length_parameterize, GeomError, PathGeom, Point, Pose};
use crate::scenario::{Scenario, ScenarioError};
use crate::tracker::{tracker_step, RobotState};
use netchan::{
    decode_message, encode_message, sample_channel, wall_ns, ChannelMode, ChannelOutcome,
    ChannelProfile, Direction, LinkSettings, LinkState, Payload, Scheduler, TapDirection, TapLog,
    WireMessage,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::UdpSocket;
use std::path::Path;
use thiserror::Error;

const NS_PER_MS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("path {from}->{to}: {source}")]
    BadPath { from: String, to: String, source: GeomError },
    #[error("no critical section created for {0:.1} virtual seconds; scenario makes no progress")]
    NoProgress(f64),
    #[error("real-passthrough profile {0:?} lacks status endpoints required for coordination")]
    MissingStatusEndpoints(String),
    #[error("socket error: {0}")]
    Socket(#[from] std::io::Error),
    #[error("trace io error: {0}")]
    TraceIo(std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounters {
    pub command_sent: u64,
    pub command_delivered: u64,
    pub command_dropped: u64,
    pub status_sent: u64,
    pub status_delivered: u64,
    pub status_dropped: u64,
}

/// Outcome of one coordination run. Contains no wall-clock fields so that
/// identical (scenario, profile, seed) runs serialize byte-identically.
#[derive(Debug, Clone, Serialize)]
pub struct CoordStats {
    pub scenario: String,
    pub profile: ChannelProfile,
    pub seed: u64,
    pub min_cs: u64,
    pub cs_total: u64,
    pub collision_count: u64,
    pub p_collision: f64,
    pub virtual_duration_ns: u64,
    pub t_c_ms: u64,
    pub t_r_ms: u64,
    pub ds_m: f64,
    pub safety_margin_indices: usize,
    pub anticipation_s: f64,
    pub messages: MessageCounters,
}

/// In-memory taps of an emulated run, one per endpoint.
#[derive(Debug)]
pub struct CoordTaps {
    pub controller: TapLog,
    pub robots: Vec<TapLog>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dest {
    Controller,
    Robot(usize),
}

struct RobotSim {
    path: PathGeom,
    state: RobotState,
    /// Location index the robot is heading to (= where it sits when parked).
    goal_loc: usize,
    status_seq: u32,
    cmd_seq: u32,
}

struct TraceWriters {
    poses: BufWriter<File>,
    commands: BufWriter<File>,
    events: BufWriter<File>,
}

impl TraceWriters {
    fn create(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(RunError::TraceIo)?;
        let open = |name: &str, header: &str| -> Result<BufWriter<File>, RunError> {
            let mut w = BufWriter::new(File::create(dir.join(name)).map_err(RunError::TraceIo)?);
            writeln!(w, "{header}").map_err(RunError::TraceIo)?;
            Ok(w)
        };
        Ok(TraceWriters {
            poses: open("poses.csv", "t_ns,robot_id,x,y,theta,v,s")?,
            commands: open("commands.csv", "t_ns,robot_id,critical_index,seq")?,
            events: open("events.csv", "t_ns,robot_a,robot_b,cs_id")?,
        })
    }

    fn flush(&mut self) -> Result<(), RunError> {
        self.poses.flush().map_err(RunError::TraceIo)?;
        self.commands.flush().map_err(RunError::TraceIo)?;
        self.events.flush().map_err(RunError::TraceIo)
    }
}

enum Transport {
    Emu {
        sched: Scheduler<Dest>,
        cmd_link: LinkSettings,
        cmd_state: LinkState,
        status_link: LinkSettings,
        status_state: LinkState,
    },
    Real {
        cmd_out: UdpSocket,
        cmd_to: std::net::SocketAddr,
        cmd_in: UdpSocket,
        status_out: UdpSocket,
        status_to: std::net::SocketAddr,
        status_in: UdpSocket,
    },
}

impl Transport {
    /// Returns false when the channel model dropped the message.
    fn send(&mut self, now_ns: u64, direction: Direction, msg: WireMessage, dest: Dest) -> bool {
        match self {
            Transport::Emu { sched, cmd_link, cmd_state, status_link, status_state } => {
                let (link, state) = match direction {
                    Direction::Command => (cmd_link, cmd_state),
                    Direction::Status => (status_link, status_state),
                };
                match sample_channel(link, state) {
                    ChannelOutcome::Drop => false,
                    ChannelOutcome::DeliverAfter(extra) => {
                        sched.schedule(now_ns + extra, msg, dest);
                        true
                    }
                }
            }
            Transport::Real { cmd_out, cmd_to, status_out, status_to, .. } => {
                let bytes = encode_message(&msg);
                let res = match direction {
                    Direction::Command => cmd_out.send_to(&bytes, *cmd_to),
                    Direction::Status => status_out.send_to(&bytes, *status_to),
                };
                res.is_ok()
            }
        }
    }

    /// Deliver everything due by `now_ns` as (dest, message, recv_time).
    fn drain(&mut self, now_ns: u64, mut deliver: impl FnMut(Dest, WireMessage, u64)) {
        match self {
            Transport::Emu { sched, .. } => {
                while let Some(ev) = sched.pop_due(now_ns) {
                    deliver(ev.destination, ev.message, ev.due_ns);
                }
            }
            Transport::Real { cmd_in, status_in, .. } => {
                let mut buf = [0u8; 2048];
                while let Ok((len, _)) = cmd_in.recv_from(&mut buf) {
                    if let Ok(msg) = decode_message(&buf[..len]) {
                        let dest = Dest::Robot(msg.robot_id as usize);
                        deliver(dest, msg, wall_ns());
                    }
                }
                while let Ok((len, _)) = status_in.recv_from(&mut buf) {
                    if let Ok(msg) = decode_message(&buf[..len]) {
                        deliver(Dest::Controller, msg, wall_ns());
                    }
                }
            }
        }
    }

    /// Remaining in-flight deliveries at termination (emulated only).
    fn drain_rest(&mut self, mut deliver: impl FnMut(Dest, WireMessage, u64)) {
        if let Transport::Emu { sched, .. } = self {
            while let Some(ev) = sched.pop() {
                deliver(ev.destination, ev.message, ev.due_ns);
            }
        }
    }
}

fn build_transport(profile: &ChannelProfile, seed: u64) -> Result<Transport, RunError> {
    match profile.mode {
        ChannelMode::Emulated => Ok(Transport::Emu {
            sched: Scheduler::new(),
            cmd_link: profile.link(Direction::Command).clone(),
            cmd_state: LinkState::new(seed, Direction::Command),
            status_link: profile.link(Direction::Status).clone(),
            status_state: LinkState::new(seed, Direction::Status),
        }),
        ChannelMode::RealPassthrough => {
            let pt = profile.passthrough.as_ref().expect("validated profile");
            let (Some(status_send_to), Some(status_bind)) =
                (pt.status_send_to.as_ref(), pt.status_bind.as_ref())
            else {
                return Err(RunError::MissingStatusEndpoints(profile.name.clone()));
            };
            let cmd_out = UdpSocket::bind("0.0.0.0:0")?;
            let status_out = UdpSocket::bind("0.0.0.0:0")?;
            let cmd_in = UdpSocket::bind(pt.command_bind.as_str())?;
            let status_in = UdpSocket::bind(status_bind.as_str())?;
            cmd_in.set_nonblocking(true)?;
            status_in.set_nonblocking(true)?;
            Ok(Transport::Real {
                cmd_out,
                cmd_to: resolve(&pt.command_send_to)?,
                cmd_in,
                status_out,
                status_to: resolve(status_send_to)?,
                status_in,
            })
        }
    }
}

fn resolve(addr: &str) -> Result<std::net::SocketAddr, RunError> {
    use std::net::ToSocketAddrs;
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| RunError::Socket(std::io::Error::other(format!("cannot resolve {addr}"))))
}

struct SimState<'a> {
    scenario: &'a Scenario,
    real_mode: bool,
    robots: Vec<RobotSim>,
    envelopes: Vec<Envelope>,
    reports: Vec<ReportedState>,
    report_seq: Vec<Option<u32>>,
    coordinator: Coordinator,
    /// Live sections for current mission pairs, kept for collision
    /// attribution until either robot is reassigned.
    world_cs: Vec<CriticalSection>,
    next_cs_id: CsId,
    cs_created: u64,
    collision_count: u64,
    collision_tracker: CollisionTracker,
    mission_rng: ChaCha8Rng,
    next_mission_id: u32,
    counters: MessageCounters,
    taps: Option<CoordTaps>,
    last_cs_created_ns: u64,
}

impl<'a> SimState<'a> {
    fn tap_clock(&self, virtual_now: u64) -> u64 {
        if self.real_mode {
            wall_ns()
        } else {
            virtual_now
        }
    }

    fn build_path(&self, from: &str, to: &str) -> Result<PathGeom, RunError> {
        let def = self.scenario.path_between(from, to).expect("validated path");
        let pts: Vec<Point> = def.waypoints.iter().map(|&(x, y)| Point::new(x, y)).collect();
        arc_length_parameterize(&pts).map_err(|source| RunError::BadPath {
            from: def.from.clone(),
            to: def.to.clone(),
            source,
        })
    }

    /// Pick and install a new mission for `robot`.
    ///
    /// Candidate goals are screened with the coordinator's own (possibly
    /// stale) view: a goal whose fresh sections cannot all be granted in
    /// their preferred orientation is rejected, and when no goal survives the
    /// robot stays parked until the next cycle. With fresh reports this keeps
    /// the grant graph clean; staleness makes the screen mispredict, which is
    /// how delayed channels produce collisions.
    ///
    /// Returns false when the assignment was deferred.
    fn assign_mission(&mut self, robot: usize, now_ns: u64) -> Result<bool, RunError> {
        let scenario = self.scenario;
        let n = self.robots.len();
        let current = self.robots[robot].goal_loc;
        let current_name = scenario.locations[current].name.as_str();
        let taken: Vec<usize> = (0..n)
            .filter(|&i| i != robot)
            .map(|i| self.robots[i].goal_loc)
            .collect();
        let eligible: Vec<usize> = (0..scenario.locations.len())
            .filter(|&l| {
                l != current
                    && !taken.contains(&l)
                    && scenario.path_between(current_name, &scenario.locations[l].name).is_some()
            })
            .collect();
        debug_assert!(!eligible.is_empty(), "scenario validation guarantees a free goal");

        struct Candidate {
            goal: usize,
            path: PathGeom,
            envelope: Envelope,
            coordinator: Coordinator,
            sections: Vec<CriticalSection>,
            next_cs_id: CsId,
        }

        // Trial reports: the new mission starts at rest at the path origin.
        let saved_report = self.reports[robot];
        self.reports[robot] = ReportedState::mission_start(self.next_mission_id);

        let mut survivors: Vec<Candidate> = Vec::new();
        for &goal in &eligible {
            let path = self.build_path(current_name, &scenario.locations[goal].name)?;
            let envelope = sweep_envelope(&path, &scenario.robots[robot], scenario.ds_m);
            let mut coordinator = self.coordinator.clone();
            coordinator.remove_robot(robot);
            let mut next_cs_id = self.next_cs_id;
            let mut sections = Vec::new();
            let mut clean = true;
            let old_envelope = std::mem::replace(&mut self.envelopes[robot], envelope);
            for other in 0..n {
                if other == robot {
                    continue;
                }
                let fresh = find_critical_sections(
                    &self.envelopes[robot],
                    &self.envelopes[other],
                    robot as u16,
                    other as u16,
                    &mut next_cs_id,
                );
                for cs in fresh {
                    let ctx = CoordContext {
                        specs: &scenario.robots,
                        envelopes: &self.envelopes,
                        reports: &self.reports,
                    };
                    if coordinator.add_cs(cs.clone(), &ctx) != GrantOutcome::Clean {
                        clean = false;
                    }
                    sections.push(cs);
                }
                if !clean {
                    break;
                }
            }
            let envelope = std::mem::replace(&mut self.envelopes[robot], old_envelope);
            if clean {
                survivors.push(Candidate {
                    goal,
                    path,
                    envelope,
                    coordinator,
                    sections,
                    next_cs_id,
                });
            }
        }
        self.reports[robot] = saved_report;

        if survivors.is_empty() {
            return Ok(false); // defer to the next controller cycle
        }
        let pick = self.mission_rng.random_range(0..survivors.len());
        let chosen = survivors.swap_remove(pick);

        let mission_id = self.next_mission_id;
        self.next_mission_id += 1;
        self.envelopes[robot] = chosen.envelope;
        {
            let r = &mut self.robots[robot];
            r.path = chosen.path;
            r.state.start_mission(mission_id);
            r.goal_loc = chosen.goal;
        }
        self.reports[robot] = ReportedState::mission_start(mission_id);
        self.coordinator = chosen.coordinator;
        self.next_cs_id = chosen.next_cs_id;
        self.world_cs.retain(|cs| cs.robot_a as usize != robot && cs.robot_b as usize != robot);
        if !chosen.sections.is_empty() {
            self.cs_created += chosen.sections.len() as u64;
            self.last_cs_created_ns = now_ns;
            self.world_cs.extend(chosen.sections);
        }
        Ok(true)
    }

    fn deliver(&mut self, dest: Dest, msg: WireMessage, recv_t: u64) {
        match dest {
            Dest::Controller => {
                if let Some(taps) = self.taps.as_mut() {
                    taps.controller.append_msg(TapDirection::Recv, &msg, recv_t);
                }
                self.counters.status_delivered += 1;
                let i = msg.robot_id as usize;
                if i >= self.robots.len() {
                    return;
                }
                if let Payload::RobotStatus { mission_id, path_index, x, y, v, .. } = msg.payload {
                    // Latest sequence wins; reports for stale missions are
                    // dropped after the seq bookkeeping.
                    if self.report_seq[i].is_some_and(|last| msg.seq <= last) {
                        return;
                    }
                    self.report_seq[i] = Some(msg.seq);
                    if mission_id != self.robots[i].state.mission_id {
                        return;
                    }
                    // Recover the arc position from the reported pose; the
                    // index only seeds the segment lookup.
                    let hint = self.envelopes[i].s_at_index(path_index.max(0) as usize);
                    let s = self.robots[i].path.arc_position_of(&Point::new(x, y), hint);
                    self.reports[i] = ReportedState { mission_id, s, v, path_index };
                }
            }
            Dest::Robot(i) => {
                if let Some(taps) = self.taps.as_mut() {
                    if i < self.robots.len() {
                        taps.robots[i].append_msg(TapDirection::Recv, &msg, recv_t);
                    }
                }
                self.counters.command_delivered += 1;
                if i >= self.robots.len() {
                    return;
                }
                if let Payload::CriticalPoint { mission_id, critical_index } = msg.payload {
                    let applied = self.robots[i]
                        .state
                        .apply_critical_point(mission_id, msg.seq, critical_index);
                    if applied
                        && critical_index >= 0
                        && std::env::var_os("COORD_DEBUG_LATE").is_some()
                    {
                        let st = &self.robots[i].state;
                        let s_cp = self.envelopes[i].s_at_index(critical_index as usize);
                        let reach = st.s
                            + st.v * st.v / (2.0 * self.scenario.robots[i].a_max);
                        if reach > s_cp + 1e-9 {
                            eprintln!(
                                "DBG late_cmd robot={i} depth={:.3} v={:.2} cp_idx={critical_index}",
                                reach - s_cp,
                                st.v
                            );
                        }
                    }
                }
            }
        }
    }

    // Tail drain after termination: tap the arrival without processing.
    fn tap_recv_only(&mut self, dest: Dest, msg: WireMessage, recv_t: u64) {
        match dest {
            Dest::Controller => {
                self.counters.status_delivered += 1;
                if let Some(taps) = self.taps.as_mut() {
                    taps.controller.append_msg(TapDirection::Recv, &msg, recv_t);
                }
            }
            Dest::Robot(i) => {
                self.counters.command_delivered += 1;
                if let Some(taps) = self.taps.as_mut() {
                    if i < self.robots.len() {
                        taps.robots[i].append_msg(TapDirection::Recv, &msg, recv_t);
                    }
                }
            }
        }
    }

    fn release_and_command(
        &mut self,
        transport: &mut Transport,
        now: u64,
        mut traces: Option<&mut TraceWriters>,
    ) -> Result<(), RunError> {
        {
            let ctx = CoordContext {
                specs: &self.scenario.robots,
                envelopes: &self.envelopes,
                reports: &self.reports,
            };
            self.coordinator.release_passed(&ctx);
        }
        let commands = self.coordinator.commands(self.robots.len());
        let stamp = self.tap_clock(now);
        for (i, &cp) in commands.iter().enumerate() {
            let (mission_id, seq) = {
                let robot = &mut self.robots[i];
                robot.cmd_seq += 1;
                (robot.state.mission_id, robot.cmd_seq)
            };
            let msg = WireMessage::new(
                i as u16,
                seq,
                stamp,
                Payload::CriticalPoint { mission_id, critical_index: cp },
            );
            if let Some(taps) = self.taps.as_mut() {
                taps.controller.append_msg(TapDirection::Send, &msg, stamp);
            }
            if let Some(tr) = traces.as_deref_mut() {
                writeln!(tr.commands, "{now},{i},{cp},{seq}").map_err(RunError::TraceIo)?;
            }
            self.counters.command_sent += 1;
            if !transport.send(now, Direction::Command, msg, Dest::Robot(i)) {
                self.counters.command_dropped += 1;
            }
        }
        Ok(())
    }

    fn send_status(&mut self, transport: &mut Transport, t: u64, i: usize, pose: &Pose, index: usize) {
        let stamp = self.tap_clock(t);
        let (mission_id, seq, v) = {
            let robot = &mut self.robots[i];
            robot.status_seq += 1;
            (robot.state.mission_id, robot.status_seq, robot.state.v)
        };
        let msg = WireMessage::new(
            i as u16,
            seq,
            stamp,
            Payload::RobotStatus {
                mission_id,
                path_index: index as i32,
                x: pose.x,
                y: pose.y,
                theta: pose.theta,
                v,
            },
        );
        if let Some(taps) = self.taps.as_mut() {
            taps.robots[i].append_msg(TapDirection::Send, &msg, stamp);
        }
        self.counters.status_sent += 1;
        if !transport.send(t, Direction::Status, msg, Dest::Controller) {
            self.counters.status_dropped += 1;
        }
    }
}

/// Run one coordination experiment until at least `min_cs` critical sections
/// have been created. `trace_dir` enables pose/command/event CSVs;
/// `collect_taps` keeps per-endpoint tap logs in memory (short runs only).
pub fn run_coordination(
    scenario: &Scenario,
    profile: &ChannelProfile,
    seed: u64,
    min_cs: u64,
    trace_dir: Option<&Path>,
    collect_taps: bool,
) -> Result<(CoordStats, Option<CoordTaps>), RunError> {
    scenario.validate()?;
    let n = scenario.robots.len();
    let tr_ns = scenario.t_r_ms * NS_PER_MS;
    let tc_ticks = scenario.t_c_ms / scenario.t_r_ms;
    let dt = scenario.t_r_ms as f64 / 1e3;
    let watchdog_ns = (scenario.watchdog_virtual_s * 1e9) as u64;

    let real_mode = profile.mode == ChannelMode::RealPassthrough;
    let mut transport = build_transport(profile, seed)?;
    let mut traces = trace_dir.map(TraceWriters::create).transpose()?;

    // Seed streams: 1/2 channel directions (inside LinkState), 3 missions.
    let mut mission_rng = ChaCha8Rng::seed_from_u64(seed);
    mission_rng.set_stream(3);
    let mut loc_order: Vec<usize> = (0..scenario.locations.len()).collect();
    loc_order.shuffle(&mut mission_rng);

    let mut sim = SimState {
        scenario,
        real_mode,
        robots: Vec::with_capacity(n),
        envelopes: Vec::with_capacity(n),
        reports: vec![ReportedState::mission_start(0); n],
        report_seq: vec![None; n],
        coordinator: Coordinator::new(CoordinatorConfig {
            safety_margin_indices: scenario.safety_margin_indices(),
            anticipation_s: scenario.anticipation_s(),
        }),
        world_cs: Vec::new(),
        next_cs_id: 0,
        cs_created: 0,
        collision_count: 0,
        collision_tracker: CollisionTracker::new(n),
        mission_rng,
        next_mission_id: 0,
        counters: MessageCounters::default(),
        taps: collect_taps.then(|| CoordTaps {
            controller: TapLog::new("controller"),
            robots: (0..n).map(|i| TapLog::new(&format!("robot:{i}"))).collect(),
        }),
        last_cs_created_ns: 0,
    };

    // Seeded placement on zero-length stub paths: every stub reads as a
    // completed mission, so the first controller cycle assigns real missions
    // through the ordinary (screened) path.
    for i in 0..n {
        let start = &scenario.locations[loc_order[i]];
        let stub = arc_length_parameterize(&[Point::new(start.x, start.y)]).expect("one point");
        sim.envelopes.push(sweep_envelope(&stub, &scenario.robots[i], scenario.ds_m));
        sim.robots.push(RobotSim {
            path: stub,
            state: RobotState::new(i as u16, i as u32),
            goal_loc: loc_order[i],
            status_seq: 0,
            cmd_seq: 0,
        });
        sim.reports[i] = ReportedState::mission_start(i as u32);
    }
    sim.next_mission_id = n as u32;

    let wall_start = wall_ns();
    let mut tick: u64 = 0;

    loop {
        let now = tick * tr_ns;
        if real_mode {
            let target = wall_start + now;
            let cur = wall_ns();
            if target > cur {
                std::thread::sleep(std::time::Duration::from_nanos(target - cur));
            }
        }

        // 1. Deliver everything due.
        let mut inbox: Vec<(Dest, WireMessage, u64)> = Vec::new();
        transport.drain(now, |dest, msg, t| inbox.push((dest, msg, t)));
        for (dest, msg, recv_t) in inbox {
            sim.deliver(dest, msg, recv_t);
        }

        // 2. Controller cycle: reassign completed missions, release passed
        //    sections, send the current command to every robot.
        if tick % tc_ticks == 0 {
            for i in 0..n {
                let report = sim.reports[i];
                let total = sim.envelopes[i].s_at_index(sim.envelopes[i].len() - 1);
                if report.mission_id == sim.robots[i].state.mission_id
                    && total - report.s <= 1e-4
                    && report.v <= 1e-3
                {
                    sim.assign_mission(i, now)?;
                }
            }
            sim.release_and_command(&mut transport, now, traces.as_mut())?;
        }

        // 3. Robot ticks: integrate, then report the new state.
        let t_next = now + tr_ns;
        let mut footprints = Vec::with_capacity(n);
        let mut indices = Vec::with_capacity(n);
        for i in 0..n {
            let (pose, index) = {
                let robot = &mut sim.robots[i];
                tracker_step(&mut robot.state, &sim.envelopes[i], &scenario.robots[i], dt);
                let pose = robot.path.pose_at(robot.state.s);
                let index = sim.envelopes[i].index_at_s(robot.state.s);
                (pose, index)
            };
            sim.send_status(&mut transport, t_next, i, &pose, index);
            if let Some(tr) = traces.as_mut() {
                let st = &sim.robots[i].state;
                writeln!(
                    tr.poses,
                    "{},{},{},{},{},{},{}",
                    t_next, i, pose.x, pose.y, pose.theta, st.v, st.s
                )
                .map_err(RunError::TraceIo)?;
            }
            footprints.push(scenario.robots[i].footprint_at(&pose));
            indices.push(index);
        }

        // 4. Collision accounting at the new poses.
        let events = sim.collision_tracker.step(t_next, &footprints, &indices, &sim.world_cs);
        if std::env::var_os("COORD_DEBUG_COLLISIONS").is_some() {
            for ev in &events {
                let (a, b) = (ev.robot_a as usize, ev.robot_b as usize);
                eprintln!(
                    "DBG collision t={} pair=({a},{b}) cs={:?} idx=({},{}) s=({},{}) missions=({},{})",
                    ev.t_ns, ev.cs_id, indices[a], indices[b],
                    sim.robots[a].state.s, sim.robots[b].state.s,
                    sim.robots[a].state.mission_id, sim.robots[b].state.mission_id,
                );
                for cs in sim.world_cs.iter().filter(|cs| {
                    (cs.robot_a as usize == a && cs.robot_b as usize == b)
                        || (cs.robot_a as usize == b && cs.robot_b as usize == a)
                }) {
                    eprintln!("DBG   world_cs {cs:?}");
                }
                eprintln!(
                    "DBG   cp=({:?},{:?}) envlen=({},{})",
                    sim.robots[a].state.last_received_cp,
                    sim.robots[b].state.last_received_cp,
                    sim.envelopes[a].len(),
                    sim.envelopes[b].len(),
                );
            }
        }
        if let Some(tr) = traces.as_mut() {
            for ev in &events {
                writeln!(
                    tr.events,
                    "{},{},{},{}",
                    ev.t_ns,
                    ev.robot_a,
                    ev.robot_b,
                    ev.cs_id.map_or(-1i64, |id| id as i64)
                )
                .map_err(RunError::TraceIo)?;
            }
        }
        sim.collision_count += events.len() as u64;

        // 5. Termination / non-progress watchdog.
        if sim.cs_created >= min_cs {
            break;
        }
        if t_next.saturating_sub(sim.last_cs_created_ns) > watchdog_ns {
            return Err(RunError::NoProgress(watchdog_ns as f64 / 1e9));
        }
        tick += 1;
    }

    // Quiesce: deliver in-flight messages so taps balance exactly
    // (#send - #recv = #dropped).
    let mut tail: Vec<(Dest, WireMessage, u64)> = Vec::new();
    transport.drain_rest(|dest, msg, t| tail.push((dest, msg, t)));
    for (dest, msg, recv_t) in tail {
        sim.tap_recv_only(dest, msg, recv_t);
    }

    if let Some(tr) = traces.as_mut() {
        tr.flush()?;
    }

    let virtual_duration_ns =
        if real_mode { wall_ns() - wall_start } else { (tick + 1) * tr_ns };
    let stats = CoordStats {
        scenario: scenario.name.clone(),
        profile: profile.clone(),
        seed,
        min_cs,
        cs_total: sim.cs_created,
        collision_count: sim.collision_count,
        p_collision: metrics::p_collision(sim.collision_count, sim.cs_created.max(1)).unwrap_or(0.0),
        virtual_duration_ns,
        t_c_ms: scenario.t_c_ms,
        t_r_ms: scenario.t_r_ms,
        ds_m: scenario.ds_m,
        safety_margin_indices: scenario.safety_margin_indices(),
        anticipation_s: scenario.anticipation_s(),
        messages: sim.counters,
    };
    Ok((stats, sim.taps))
}
