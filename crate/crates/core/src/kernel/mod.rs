//! Discrete-event kernel: simulation clock, propagation delay and a
//! deterministic `(due_time, seq)` total order over all events.

mod event;
mod latency;
mod schedule;

pub use event::{Event, EventKey, EventKind, Payload};
pub use latency::{Endpoint, LatencyModel};
pub use schedule::{ScheduleStats, SliceSchedule};

use crate::error::{Error, Result};
use crate::types::{AgentId, TimeNs, NANOS_PER_MILLI};

/// Default slice width: 100 ms of simulated time.
pub const DEFAULT_SLICE_WIDTH: TimeNs = 100 * NANOS_PER_MILLI;

/// Counters exported in the run report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelCounters {
    pub events_dispatched: u64,
    pub slices_visited: u64,
    pub max_slice_occupancy: usize,
    pub inserts: u64,
    pub index_updates: u64,
    /// FNV-1a digest of the dispatch trace `(due_time, seq, kind)`.
    pub dispatch_digest: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub struct Kernel {
    now: TimeNs,
    next_seq: u64,
    schedule: SliceSchedule,
    latency: LatencyModel,
    dispatched: u64,
    digest: u64,
    trace: Option<Vec<EventKey>>,
}

impl Kernel {
    pub fn new(slice_width: TimeNs, latency: LatencyModel) -> Self {
        Kernel {
            now: 0,
            next_seq: 0,
            schedule: SliceSchedule::new(slice_width),
            latency,
            dispatched: 0,
            digest: FNV_OFFSET,
            trace: None,
        }
    }

    /// Keep every dispatched key in memory; used by determinism tests.
    pub fn record_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Option<&[EventKey]> {
        self.trace.as_deref()
    }

    pub fn now(&self) -> TimeNs {
        self.now
    }

    pub fn latency(&self) -> &LatencyModel {
        &self.latency
    }

    pub fn slice_of(&self, t: TimeNs) -> u64 {
        self.schedule.slice_of(t)
    }

    pub fn pending(&self) -> usize {
        self.schedule.len()
    }

    pub fn peek_time(&self) -> Option<TimeNs> {
        self.schedule.peek_time()
    }

    /// Enqueue `payload` for delivery at `send_time + delay`.
    pub fn send(&mut self, payload: Payload, send_time: TimeNs, delay: TimeNs) -> Result<EventKey> {
        if send_time < self.now {
            return Err(Error::Causality { send: send_time, now: self.now });
        }
        let event = Event { due_time: send_time + delay, seq: self.next_seq, payload };
        self.next_seq += 1;
        let key = event.key();
        self.schedule.insert(event);
        Ok(key)
    }

    /// Like [`Kernel::send`], with the delay taken from the latency model.
    pub fn send_between(
        &mut self,
        payload: Payload,
        send_time: TimeNs,
        from: Endpoint,
        to: Endpoint,
    ) -> Result<EventKey> {
        let delay = self.latency.delay(from, to);
        self.send(payload, send_time, delay)
    }

    pub fn schedule_at(&mut self, payload: Payload, at: TimeNs) -> Result<EventKey> {
        self.send(payload, at, 0)
    }

    pub fn schedule_wakeup(&mut self, agent: AgentId, at: TimeNs) -> Result<EventKey> {
        self.schedule_at(Payload::AgentWakeup { agent }, at)
    }

    /// Globally minimum live event, or `None` once nothing is left to run.
    pub fn next_event(&mut self) -> Option<Event> {
        let ev = self.schedule.pop()?;
        debug_assert!(ev.due_time >= self.now, "clock moved backward");
        self.now = ev.due_time;
        self.dispatched += 1;
        let mut h = self.digest;
        for b in ev.due_time.to_le_bytes().into_iter().chain(ev.seq.to_le_bytes()).chain([ev.kind().code()]) {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        self.digest = h;
        if let Some(trace) = &mut self.trace {
            trace.push(ev.key());
        }
        Some(ev)
    }

    pub fn counters(&self) -> KernelCounters {
        let s = self.schedule.stats();
        KernelCounters {
            events_dispatched: self.dispatched,
            slices_visited: s.slices_visited,
            max_slice_occupancy: s.max_slice_occupancy,
            inserts: s.inserts,
            index_updates: s.index_updates,
            dispatch_digest: self.digest,
        }
    }
}
