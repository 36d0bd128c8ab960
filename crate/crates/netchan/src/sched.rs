//! Deterministic discrete-event delivery on a virtual nanosecond clock.
//!
//! Events are released in lexicographic (due_ns, tie_seq) order, where
//! tie_seq is a monotone insertion counter. Identical seeds and send
//! sequences therefore yield identical delivery sequences.

use crate::channel::{sample_channel, ChannelOutcome, LinkState};
use crate::profile::LinkSettings;
use crate::tap::{TapDirection, TapLog};
use crate::wire::WireMessage;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A scheduled delivery.
#[derive(Debug, Clone)]
pub struct EmuEvent<D> {
    pub due_ns: u64,
    pub tie_seq: u64,
    pub message: WireMessage,
    pub destination: D,
}

struct HeapEntry<D>(EmuEvent<D>);

impl<D> PartialEq for HeapEntry<D> {
    fn eq(&self, other: &Self) -> bool {
        self.0.due_ns == other.0.due_ns && self.0.tie_seq == other.0.tie_seq
    }
}
impl<D> Eq for HeapEntry<D> {}
impl<D> PartialOrd for HeapEntry<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<D> Ord for HeapEntry<D> {
    // Reversed so the BinaryHeap pops the (due_ns, tie_seq)-minimal entry.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.due_ns, other.0.tie_seq).cmp(&(self.0.due_ns, self.0.tie_seq))
    }
}

/// Event scheduler plus the virtual clock it advances.
pub struct Scheduler<D> {
    heap: BinaryHeap<HeapEntry<D>>,
    next_tie: u64,
    now_ns: u64,
}

impl<D> Default for Scheduler<D> {
    fn default() -> Self {
        Self::new()
    }
}

impl<D> Scheduler<D> {
    pub fn new() -> Self {
        Scheduler { heap: BinaryHeap::new(), next_tie: 0, now_ns: 0 }
    }

    /// Current virtual time: the due time of the last released event, or the
    /// last explicit advance.
    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    /// Move the clock forward without releasing events (tick boundaries).
    pub fn advance_to(&mut self, t_ns: u64) {
        self.now_ns = self.now_ns.max(t_ns);
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, due_ns: u64, message: WireMessage, destination: D) {
        let tie_seq = self.next_tie;
        self.next_tie += 1;
        self.heap.push(HeapEntry(EmuEvent { due_ns, tie_seq, message, destination }));
    }

    /// Pop the (due_ns, tie_seq)-minimal event and jump the clock to it.
    pub fn pop(&mut self) -> Option<EmuEvent<D>> {
        let ev = self.heap.pop()?.0;
        self.now_ns = self.now_ns.max(ev.due_ns);
        Some(ev)
    }

    /// Pop the next event only if it is due at or before `t_ns`.
    pub fn pop_due(&mut self, t_ns: u64) -> Option<EmuEvent<D>> {
        if self.heap.peek().is_some_and(|e| e.0.due_ns <= t_ns) {
            self.pop()
        } else {
            None
        }
    }

    pub fn next_due_ns(&self) -> Option<u64> {
        self.heap.peek().map(|e| e.0.due_ns)
    }
}

/// Send one message through an emulated link: a tap send record is always
/// written; on Drop nothing is scheduled, otherwise delivery is scheduled at
/// now + sampled delay. Deliveries are independent per message, so jitter may
/// reorder them (datagram semantics).
pub fn emu_send<D>(
    sched: &mut Scheduler<D>,
    now_ns: u64,
    message: WireMessage,
    destination: D,
    link: &LinkSettings,
    state: &mut LinkState,
    tap: &mut TapLog,
) {
    tap.append_msg(TapDirection::Send, &message, now_ns);
    match sample_channel(link, state) {
        ChannelOutcome::Drop => {}
        ChannelOutcome::DeliverAfter(extra_ns) => {
            sched.schedule(now_ns + extra_ns, message, destination);
        }
    }
}
