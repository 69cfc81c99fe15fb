use std::cmp::Ordering;

use crate::types::{AgentId, Order, Receipt, TimeNs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    OrderArrival,
    Cancel,
    ExchangeResponse,
    AgentWakeup,
    SessionTransition,
    OracleTrigger,
    RecordingCheckpoint,
}

impl EventKind {
    pub fn code(self) -> u8 {
        match self {
            EventKind::OrderArrival => 0,
            EventKind::Cancel => 1,
            EventKind::ExchangeResponse => 2,
            EventKind::AgentWakeup => 3,
            EventKind::SessionTransition => 4,
            EventKind::OracleTrigger => 5,
            EventKind::RecordingCheckpoint => 6,
        }
    }
}

/// Kind-specific event data.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Limit/market arrival. `source` names the injection stream that must be
    /// polled for its next record once this one is dispatched.
    OrderArrival { order: Order, source: Option<u32> },
    Cancel { order: Order, source: Option<u32> },
    ExchangeResponse { agent: AgentId, receipt: Receipt },
    AgentWakeup { agent: AgentId },
    /// Start of session `session` of trading day `day`. `session == usize::MAX`
    /// marks the end of the horizon.
    SessionTransition { day: usize, session: usize },
    OracleTrigger { checkpoint: usize },
    RecordingCheckpoint { checkpoint: usize },
}

impl Payload {
    pub fn kind(&self) -> EventKind {
        match self {
            Payload::OrderArrival { .. } => EventKind::OrderArrival,
            Payload::Cancel { .. } => EventKind::Cancel,
            Payload::ExchangeResponse { .. } => EventKind::ExchangeResponse,
            Payload::AgentWakeup { .. } => EventKind::AgentWakeup,
            Payload::SessionTransition { .. } => EventKind::SessionTransition,
            Payload::OracleTrigger { .. } => EventKind::OracleTrigger,
            Payload::RecordingCheckpoint { .. } => EventKind::RecordingCheckpoint,
        }
    }

    /// Arrival payload for an order, choosing `Cancel` for cancel messages.
    pub fn for_order(order: Order, source: Option<u32>) -> Payload {
        match order.order_type {
            crate::types::OrderType::Cancel => Payload::Cancel { order, source },
            _ => Payload::OrderArrival { order, source },
        }
    }
}

/// Unit of kernel work. Ordered by `(due_time, seq)` only.
#[derive(Clone, Debug)]
pub struct Event {
    pub due_time: TimeNs,
    pub seq: u64,
    pub payload: Payload,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }

    pub fn key(&self) -> EventKey {
        EventKey { due_time: self.due_time, seq: self.seq, kind: self.kind() }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.due_time == other.due_time && self.seq == other.seq
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.due_time, self.seq).cmp(&(other.due_time, other.seq))
    }
}

/// Handle returned when an event is enqueued.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventKey {
    pub due_time: TimeNs,
    pub seq: u64,
    pub kind: EventKind,
}
