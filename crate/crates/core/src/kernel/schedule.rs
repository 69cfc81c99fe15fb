//! Two-level time-slice schedule.
//!
//! The timeline is cut into slices of width `delta`; an event with due time
//! `t` lives in the local heap of slice `floor(t / delta)`. A sorted index of
//! non-empty slice ids lets the cursor jump over empty stretches (overnight,
//! lunch break) in `O(log S)`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use super::event::Event;
use crate::types::TimeNs;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScheduleStats {
    /// Events pushed into some slice heap.
    pub inserts: u64,
    /// Times a slice id was added to the non-empty index.
    pub index_updates: u64,
    /// Distinct slices events were drained from.
    pub slices_visited: u64,
    pub max_slice_occupancy: usize,
}

#[derive(Debug)]
pub struct SliceSchedule {
    delta: TimeNs,
    slices: HashMap<u64, BinaryHeap<Reverse<Event>>>,
    nonempty: BTreeSet<u64>,
    cursor: u64,
    last_drained: Option<u64>,
    len: usize,
    spare: Vec<BinaryHeap<Reverse<Event>>>,
    stats: ScheduleStats,
}

impl SliceSchedule {
    pub fn new(delta: TimeNs) -> Self {
        assert!(delta > 0, "slice width must be positive");
        SliceSchedule {
            delta,
            slices: HashMap::new(),
            nonempty: BTreeSet::new(),
            cursor: 0,
            last_drained: None,
            len: 0,
            spare: Vec::new(),
            stats: ScheduleStats::default(),
        }
    }

    pub fn delta(&self) -> TimeNs {
        self.delta
    }

    pub fn slice_of(&self, t: TimeNs) -> u64 {
        t / self.delta
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stats(&self) -> ScheduleStats {
        self.stats
    }

    /// Number of events currently held by slice `b`.
    pub fn occupancy(&self, b: u64) -> usize {
        self.slices.get(&b).map_or(0, BinaryHeap::len)
    }

    pub fn insert(&mut self, event: Event) {
        let b = self.slice_of(event.due_time);
        debug_assert!(b >= self.cursor, "event inserted behind the cursor");
        let heap = match self.slices.get_mut(&b) {
            Some(h) => h,
            None => {
                let h = self.spare.pop().unwrap_or_default();
                self.nonempty.insert(b);
                self.stats.index_updates += 1;
                self.slices.entry(b).or_insert(h)
            }
        };
        heap.push(Reverse(event));
        self.stats.inserts += 1;
        self.stats.max_slice_occupancy = self.stats.max_slice_occupancy.max(heap.len());
        self.len += 1;
    }

    /// Smallest `(due_time, seq)` event, advancing the cursor over empty slices.
    pub fn pop(&mut self) -> Option<Event> {
        loop {
            if let Some(heap) = self.slices.get_mut(&self.cursor) {
                if let Some(Reverse(ev)) = heap.pop() {
                    if heap.is_empty() {
                        let h = self.slices.remove(&self.cursor).expect("slice present");
                        self.nonempty.remove(&self.cursor);
                        self.spare.push(h);
                    }
                    if self.last_drained != Some(self.cursor) {
                        self.last_drained = Some(self.cursor);
                        self.stats.slices_visited += 1;
                    }
                    self.len -= 1;
                    return Some(ev);
                }
            }
            let next = *self.nonempty.range(self.cursor..).next()?;
            debug_assert!(next >= self.cursor);
            self.cursor = next;
        }
    }

    /// Due time of the next event without removing it.
    pub fn peek_time(&self) -> Option<TimeNs> {
        if let Some(Reverse(ev)) = self.slices.get(&self.cursor).and_then(|h| h.peek()) {
            return Some(ev.due_time);
        }
        let b = self.nonempty.range(self.cursor..).next()?;
        self.slices[b].peek().map(|Reverse(ev)| ev.due_time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::event::Payload;

    fn ev(t: TimeNs, seq: u64) -> Event {
        Event { due_time: t, seq, payload: Payload::AgentWakeup { agent: 0 } }
    }

    #[test]
    fn skips_empty_slices() {
        let mut s = SliceSchedule::new(10);
        for (t, q) in [(95, 2), (3, 0), (31, 1)] {
            s.insert(ev(t, q));
        }
        let order: Vec<_> = std::iter::from_fn(|| s.pop()).map(|e| e.due_time).collect();
        assert_eq!(order, vec![3, 31, 95]);
        assert_eq!(s.stats().slices_visited, 3);
    }

    #[test]
    fn insert_into_existing_slice_touches_no_index() {
        let mut s = SliceSchedule::new(100);
        s.insert(ev(5, 0));
        let before = s.stats();
        s.insert(ev(50, 1));
        s.insert(ev(99, 2));
        let after = s.stats();
        assert_eq!(after.index_updates, before.index_updates);
        assert_eq!(after.inserts, before.inserts + 2);
        assert_eq!(s.occupancy(0), 3);
        assert_eq!(s.occupancy(1), 0);
    }

    #[test]
    fn ties_break_on_seq() {
        let mut s = SliceSchedule::new(100);
        s.insert(ev(7, 7));
        s.insert(ev(7, 5));
        assert_eq!(s.pop().unwrap().seq, 5);
        assert_eq!(s.pop().unwrap().seq, 7);
        assert!(s.pop().is_none());
    }
}
