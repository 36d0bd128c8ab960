//! Centralized critical-section coordination.
//!
//! Policy: earliest estimated arrival wins precedence (ties to the lower
//! robot id), with two guards on top:
//!   - a robot whose reported braking envelope already reaches past its stop
//!     target cannot be asked to yield when the other robot still can;
//!   - a grant is flipped when it would close a cycle in the waits-for graph,
//!     keeping the fleet deadlock-free by construction.
//! Precedence is sticky once granted. The yielder's stop target is frozen at
//! grant time and released when the holder's reported path index passes the
//! section exit. All decisions use reported (possibly stale) state —
//! staleness sensitivity is the phenomenon under study.

use crate::critical::{CriticalSection, CsId};
use crate::envelope::{Envelope, RobotSpec};
use crate::motion::{braking_distance, time_to_reach};
use crate::tracker::UNRESTRICTED;

/// The controller's latest view of one robot, reset at mission assignment to
/// the known start state (path start, at rest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportedState {
    pub mission_id: u32,
    pub s: f64,
    pub v: f64,
    pub path_index: i32,
}

impl ReportedState {
    pub fn mission_start(mission_id: u32) -> Self {
        ReportedState { mission_id, s: 0.0, v: 0.0, path_index: 0 }
    }
}

/// Read-only world context for grant decisions, indexed by robot id.
pub struct CoordContext<'a> {
    pub specs: &'a [RobotSpec],
    pub envelopes: &'a [Envelope],
    pub reports: &'a [ReportedState],
}

/// One unresolved critical section with its sticky grant.
#[derive(Debug, Clone)]
pub struct ActiveCs {
    pub cs: CriticalSection,
    pub holder: usize,
    pub yielder: usize,
    /// Frozen stop target (envelope index on the yielder's path).
    pub yield_cp: i32,
}

/// How a grant was decided. Anything but `Clean` means the waits-for chains
/// forced the physically dispreferred orientation (or none resolved at all):
/// mission screening rejects goals that would provoke this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantOutcome {
    Clean,
    Flipped,
    Knotted,
}

#[derive(Debug, Clone, Copy)]
pub struct CoordinatorConfig {
    pub safety_margin_indices: usize,
    /// Grant-time anticipation horizon: a robot is judged unable to yield
    /// when its reported braking envelope, projected this many seconds
    /// forward at its reported speed, reaches past the section entry.
    /// Covers the coordinator's own loop latency; network delay beyond it
    /// is exactly what a static model cannot anticipate.
    pub anticipation_s: f64,
}

#[derive(Debug, Default, Clone)]
pub struct Coordinator {
    pub margin: usize,
    anticipation_s: f64,
    active: Vec<ActiveCs>,
}

impl Coordinator {
    pub fn new(cfg: CoordinatorConfig) -> Self {
        Coordinator {
            margin: cfg.safety_margin_indices,
            anticipation_s: cfg.anticipation_s,
            active: Vec::new(),
        }
    }

    pub fn active(&self) -> &[ActiveCs] {
        &self.active
    }

    /// Drop every section involving `robot` (called when its mission
    /// changes and the old path no longer exists).
    pub fn remove_robot(&mut self, robot: usize) {
        self.active
            .retain(|a| a.cs.robot_a as usize != robot && a.cs.robot_b as usize != robot);
    }

    // Can `robot` eventually reach `needed_index` on its own path? It is
    // pinned by every section it yields in whose stop target lies below the
    // needed index; each such wait resolves once its holder clears that
    // section's exit, recursively. Revisiting a section on the walk means a
    // genuine circular wait.
    fn can_pass(&self, robot: usize, needed_index: usize, visiting: &mut Vec<CsId>) -> bool {
        for a in &self.active {
            if a.yielder != robot || a.yield_cp < 0 || a.yield_cp as usize >= needed_index {
                continue;
            }
            if visiting.contains(&a.cs.cs_id) {
                return false;
            }
            let holder_exit = if a.holder == a.cs.robot_a as usize {
                a.cs.range_a.end
            } else {
                a.cs.range_b.end
            };
            visiting.push(a.cs.cs_id);
            let ok = self.can_pass(a.holder, holder_exit + 1, visiting);
            visiting.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Grant precedence for a newly created section and register it.
    pub fn add_cs(&mut self, cs: CriticalSection, ctx: &CoordContext) -> GrantOutcome {
        let a = cs.robot_a as usize;
        let b = cs.robot_b as usize;
        let entry_a = cs.range_a.start;
        let entry_b = cs.range_b.start;

        let stop_index = |entry: usize| entry.saturating_sub(self.margin);
        let reach_min_s = |r: usize| {
            ctx.reports[r].s + braking_distance(ctx.reports[r].v, ctx.specs[r].a_max)
        };
        // Able to come to rest before the section entry, per its report
        // projected one anticipation horizon forward.
        let can_yield = |r: usize, entry: usize| {
            reach_min_s(r) + ctx.reports[r].v * self.anticipation_s
                <= ctx.envelopes[r].s_at_index(entry) + 1e-9
        };
        let eta = |r: usize, entry: usize| {
            time_to_reach(
                ctx.envelopes[r].s_at_index(entry) - ctx.reports[r].s,
                ctx.reports[r].v,
                ctx.specs[r].v_max,
                ctx.specs[r].a_max,
            )
        };

        let a_can = can_yield(a, entry_a);
        let b_can = can_yield(b, entry_b);
        let (holder, yielder) = match (a_can, b_can) {
            (true, false) => (b, a),
            (false, true) => (a, b),
            _ => {
                let (eta_a, eta_b) = (eta(a, entry_a), eta(b, entry_b));
                if eta_a < eta_b || (eta_a == eta_b && a < b) {
                    (a, b)
                } else {
                    (b, a)
                }
            }
        };

        // Never command a stop the reported state already cannot make; the
        // target only ever clamps forward, not backward.
        let cp_for = |y: usize, entry: usize| {
            let nominal = stop_index(entry);
            let clamp = ctx.envelopes[y].index_at_or_after_s(reach_min_s(y));
            nominal.max(clamp) as i32
        };
        let oriented = |holder: usize, yielder: usize| {
            let (yield_entry, holder_exit) = if yielder == a {
                (entry_a, cs.range_b.end)
            } else {
                (entry_b, cs.range_a.end)
            };
            (ActiveCs { cs: cs.clone(), holder, yielder, yield_cp: cp_for(yielder, yield_entry) },
             holder_exit)
        };

        if std::env::var_os("COORD_DEBUG_GRANT").is_some() {
            let dump = |r: usize, entry: usize| {
                format!(
                    "v={:.2} gap={:.2} canyield={}",
                    ctx.reports[r].v,
                    ctx.envelopes[r].s_at_index(entry) - reach_min_s(r),
                    can_yield(r, entry)
                )
            };
            eprintln!(
                "DBG grant cs={} holder={holder} yielder={yielder} a[{a} {}] b[{b} {}]",
                cs.cs_id,
                dump(a, entry_a),
                dump(b, entry_b)
            );
        }

        // Deadlock guard: the holder must be able to clear this section's
        // exit through the chain of waits the grant creates. Flip when the
        // preferred direction cannot resolve but the reverse can.
        let (preferred, preferred_exit) = oriented(holder, yielder);
        self.active.push(preferred);
        if self.can_pass(holder, preferred_exit + 1, &mut Vec::new()) {
            return GrantOutcome::Clean;
        }
        self.active.pop();
        let (flipped, flipped_exit) = oriented(yielder, holder);
        self.active.push(flipped);
        if self.can_pass(yielder, flipped_exit + 1, &mut Vec::new()) {
            return GrantOutcome::Flipped;
        }
        // Neither direction resolves: keep the physically preferred grant
        // and let the non-progress watchdog report the knot if it persists.
        self.active.pop();
        let (preferred, _) = oriented(holder, yielder);
        self.active.push(preferred);
        GrantOutcome::Knotted
    }

    /// Release sections whose holder has passed the exit per its report.
    /// Returns the released cs_ids.
    pub fn release_passed(&mut self, ctx: &CoordContext) -> Vec<CsId> {
        let mut released = Vec::new();
        let debug = std::env::var_os("COORD_DEBUG_GRANT").is_some();
        self.active.retain(|a| {
            let exit = if a.holder == a.cs.robot_a as usize {
                a.cs.range_a.end
            } else {
                a.cs.range_b.end
            };
            if ctx.reports[a.holder].path_index > exit as i32 {
                if debug {
                    eprintln!(
                        "DBG release cs={} holder={} path_index={} exit={exit}",
                        a.cs.cs_id, a.holder, ctx.reports[a.holder].path_index
                    );
                }
                released.push(a.cs.cs_id);
                false
            } else {
                true
            }
        });
        released
    }

    /// Current command per robot: the minimum frozen stop target over every
    /// section the robot yields in, else unrestricted.
    pub fn commands(&self, robot_count: usize) -> Vec<i32> {
        let mut out = vec![UNRESTRICTED; robot_count];
        for a in &self.active {
            let cur = &mut out[a.yielder];
            *cur = if *cur == UNRESTRICTED { a.yield_cp } else { (*cur).min(a.yield_cp) };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{CsId, IndexRange};
    use crate::envelope::sweep_envelope;
    use crate::geom::{arc_length_parameterize, Point};

    const MARGIN: usize = 2;

    fn test_config() -> CoordinatorConfig {
        CoordinatorConfig { safety_margin_indices: MARGIN, anticipation_s: 0.0 }
    }

    fn fleet(n: usize, path_len: f64) -> (Vec<RobotSpec>, Vec<Envelope>, Vec<ReportedState>) {
        let specs: Vec<RobotSpec> = (0..n).map(|i| RobotSpec::warehouse(i as u16)).collect();
        let envelopes: Vec<Envelope> = specs
            .iter()
            .map(|spec| {
                let path = arc_length_parameterize(&[
                    Point::new(0.0, 0.0),
                    Point::new(path_len, 0.0),
                ])
                .unwrap();
                sweep_envelope(&path, spec, 0.5)
            })
            .collect();
        let reports = (0..n).map(|_| ReportedState::mission_start(0)).collect();
        (specs, envelopes, reports)
    }

    fn cs(id: CsId, a: u16, b: u16, entry_a: usize, entry_b: usize) -> CriticalSection {
        CriticalSection {
            cs_id: id,
            robot_a: a,
            robot_b: b,
            range_a: IndexRange { start: entry_a, end: entry_a + 6 },
            range_b: IndexRange { start: entry_b, end: entry_b + 6 },
        }
    }

    #[test]
    fn no_cs_means_everyone_unrestricted() {
        let coord = Coordinator::new(test_config());
        assert_eq!(coord.commands(7), vec![UNRESTRICTED; 7]);
    }

    // Earliest ETA wins: A closer to its entry than B -> A unrestricted,
    // B stopped at entry - margin.
    #[test]
    fn earliest_eta_gets_precedence() {
        let (specs, envelopes, mut reports) = fleet(2, 50.0);
        reports[0].s = 20.0; // A is 5 m from the entry at index 50 (s=25)
        reports[0].v = 2.0;
        reports[1].s = 0.0; // B is 25 m out, at rest
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        let cmds = coord.commands(2);
        assert_eq!(cmds[0], UNRESTRICTED);
        assert_eq!(cmds[1], (50 - MARGIN) as i32);
    }

    #[test]
    fn release_when_holder_reports_past_exit() {
        let (specs, envelopes, mut reports) = fleet(2, 50.0);
        reports[0].s = 20.0;
        reports[0].v = 2.0;
        let mut coord = Coordinator::new(test_config());
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        }
        // Holder (robot 0) reports past the exit index 56.
        reports[0].s = 29.0;
        reports[0].path_index = 58;
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let released = coord.release_passed(&ctx);
        assert_eq!(released, vec![0]);
        assert_eq!(coord.commands(2), vec![UNRESTRICTED, UNRESTRICTED]);
    }

    #[test]
    fn ties_break_to_the_lower_robot_id() {
        let (specs, envelopes, reports) = fleet(2, 50.0);
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        let cmds = coord.commands(2);
        assert_eq!(cmds[0], UNRESTRICTED);
        assert_ne!(cmds[1], UNRESTRICTED);
    }

    // A robot that cannot stop before its entry anymore must not be chosen
    // as the yielder, even when the other robot's ETA is smaller.
    #[test]
    fn overrunning_robot_keeps_precedence() {
        let (specs, envelopes, mut reports) = fleet(2, 50.0);
        // Robot 0: fast right before the entry (s=23.5, v=2 -> braking
        // envelope reaches 25.5, past the entry at s=25).
        reports[0].s = 23.5;
        reports[0].v = 2.0;
        // Robot 1: stopped just before the entry; smaller ETA (0.45 s vs
        // 0.68 s) but still able to hold out.
        reports[1].s = 24.9;
        reports[1].v = 0.0;
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        let cmds = coord.commands(2);
        assert_eq!(cmds[0], UNRESTRICTED, "cannot-stop robot must hold precedence");
        // The yielder's target is clamped forward to its own position, never
        // behind it.
        assert_ne!(cmds[1], UNRESTRICTED);
        assert!(envelopes[1].s_at_index(cmds[1] as usize) >= 24.9 - 1e-9);
    }

    // When even the grant-time clamp cannot place the stop before the entry,
    // the command still never points behind the reported braking envelope.
    #[test]
    fn stop_target_clamps_forward_not_backward() {
        let (specs, envelopes, mut reports) = fleet(2, 50.0);
        reports[0].s = 24.8;
        reports[0].v = 2.0; // both can't stop before entry - margin
        reports[1].s = 24.9;
        reports[1].v = 2.0;
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        let cmds = coord.commands(2);
        let yielder = cmds.iter().position(|&c| c != UNRESTRICTED).unwrap();
        let cp = cmds[yielder] as usize;
        let min_s = reports[yielder].s
            + braking_distance(reports[yielder].v, specs[yielder].a_max);
        assert!(envelopes[yielder].s_at_index(cp) >= min_s - 1e-9);
    }

    // Three interlocking sections whose naive grants would pin each holder
    // below the exit the previous robot needs: the closing grant must flip.
    #[test]
    fn genuinely_circular_grants_are_flipped() {
        let (specs, envelopes, mut reports) = fleet(3, 50.0);
        let mut coord = Coordinator::new(test_config());
        // CS(0,1): holder 0, yielder 1 stopped at 48 < exit_1(CS0)+1.
        reports[0].s = 20.0;
        reports[1].s = 0.0;
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        }
        // CS(1,2): holder 1, yielder 2 stopped at 48; robot 1's own stop (48
        // in CS0) pins it below exit_1(CS1)+1 = 51 (entry 44, exit 50).
        reports[1].s = 20.0;
        reports[2].s = 0.0;
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(1, 1, 2, 44, 50), &ctx);
        }
        // CS(2,0): preferred holder 2 (nearer), but robot 2 is pinned at 48
        // by CS1, whose holder 1 is pinned at 48 by CS0, whose holder 0
        // would be pinned by this very grant -> circular; flip to holder 0.
        reports[2].s = 20.0;
        reports[0].s = 0.0;
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(2, 2, 0, 50, 50), &ctx);
        }
        let last = &coord.active()[2];
        assert_eq!((last.holder, last.yielder), (0, 2), "grant flipped to avoid the circle");
    }

    // A holder that is merely waiting on a resolvable chain keeps the grant:
    // its own stop target lies beyond the exit this section needs.
    #[test]
    fn resolvable_chain_is_not_flipped() {
        let (specs, envelopes, mut reports) = fleet(3, 50.0);
        let mut coord = Coordinator::new(test_config());
        // Robot 2 yields to robot 1 far ahead (entry 90 -> stop 88).
        reports[1].s = 40.0;
        reports[2].s = 20.0;
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(0, 1, 2, 95, 90), &ctx);
        }
        // CS(2,0) with exits well below robot 2's stop at 88: robot 2 can
        // clear it, so the preferred grant stands.
        reports[2].s = 20.0;
        reports[0].s = 0.0;
        {
            let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
            coord.add_cs(cs(1, 2, 0, 50, 50), &ctx);
        }
        let last = &coord.active()[1];
        assert_eq!((last.holder, last.yielder), (2, 0), "resolvable wait keeps precedence");
    }

    #[test]
    fn min_over_multiple_restrictions() {
        let (specs, envelopes, mut reports) = fleet(3, 50.0);
        reports[1].s = 30.0; // holder of both sections
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 80, 90), &ctx);
        coord.add_cs(cs(1, 0, 1, 40, 95), &ctx);
        let cmds = coord.commands(3);
        assert_eq!(cmds[0], (40 - MARGIN) as i32);
    }

    #[test]
    fn remove_robot_clears_its_sections() {
        let (specs, envelopes, reports) = fleet(3, 50.0);
        let ctx = CoordContext { specs: &specs, envelopes: &envelopes, reports: &reports };
        let mut coord = Coordinator::new(test_config());
        coord.add_cs(cs(0, 0, 1, 50, 50), &ctx);
        coord.add_cs(cs(1, 1, 2, 50, 50), &ctx);
        coord.remove_robot(1);
        assert!(coord.active().is_empty());
    }
}
