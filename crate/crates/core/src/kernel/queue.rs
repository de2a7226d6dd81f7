use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::SimTime;
use super::KernelError;

/// Identifies the component an event is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u32);

/// Cancellation token returned by [`EventQueue::schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle {
    slot: u32,
    sequence: u64,
}

impl EventHandle {
    pub fn sequence(&self) -> u64 {
        self.sequence
    }
}

/// A delivered event.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<E> {
    pub fire_time: SimTime,
    pub sequence: u64,
    pub target: ComponentId,
    pub payload: E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Key {
    time: SimTime,
    sequence: u64,
    slot: u32,
}

impl Ord for Key {
    // BinaryHeap is a max-heap; invert so the earliest (time, sequence) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.sequence).cmp(&(self.time, self.sequence))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Slot<E> {
    sequence: u64,
    target: ComponentId,
    payload: Option<E>,
}

/// Future-event list ordered by `(fire_time, sequence)`.
///
/// Payloads live in a slab so that cancellation is O(1): the heap key stays
/// behind and is skipped when it surfaces.
pub struct EventQueue<E> {
    heap: BinaryHeap<Key>,
    slots: Vec<Slot<E>>,
    free: Vec<u32>,
    next_sequence: u64,
    live: usize,
    now: SimTime,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            free: Vec::new(),
            next_sequence: 0,
            live: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of pending (not yet delivered, not cancelled) events.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn schedule(&mut self, at: SimTime, target: ComponentId, payload: E) -> Result<EventHandle, KernelError> {
        if at < self.now {
            return Err(KernelError::ScheduleInPast { now: self.now, at });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        let slot = match self.free.pop() {
            Some(idx) => {
                self.slots[idx as usize] = Slot { sequence, target, payload: Some(payload) };
                idx
            }
            None => {
                self.slots.push(Slot { sequence, target, payload: Some(payload) });
                (self.slots.len() - 1) as u32
            }
        };
        self.heap.push(Key { time: at, sequence, slot });
        self.live += 1;
        Ok(EventHandle { slot, sequence })
    }

    /// Cancels a pending event. Returns `false` if it was already delivered or
    /// cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        match self.slots.get_mut(handle.slot as usize) {
            Some(slot) if slot.sequence == handle.sequence && slot.payload.is_some() => {
                slot.payload = None;
                self.live -= 1;
                true
            }
            _ => false,
        }
    }

    /// Fire time of the next pending event.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled();
        self.heap.peek().map(|k| k.time)
    }

    /// Removes the next event and advances the clock to its fire time.
    pub fn pop(&mut self) -> Option<SimEvent<E>> {
        self.discard_cancelled();
        let key = self.heap.pop()?;
        let slot = &mut self.slots[key.slot as usize];
        let payload = slot.payload.take().expect("live slot");
        let target = slot.target;
        self.free.push(key.slot);
        self.live -= 1;
        self.now = key.time;
        Some(SimEvent { fire_time: key.time, sequence: key.sequence, target, payload })
    }

    pub(crate) fn advance_to(&mut self, t: SimTime) {
        debug_assert!(t >= self.now);
        self.now = t;
    }

    fn discard_cancelled(&mut self) {
        while let Some(key) = self.heap.peek() {
            let slot = &self.slots[key.slot as usize];
            if slot.sequence == key.sequence && slot.payload.is_some() {
                break;
            }
            let key = self.heap.pop().expect("peeked");
            self.free.push(key.slot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: ComponentId = ComponentId(0);

    #[test]
    fn equal_times_deliver_in_schedule_order() {
        let mut q = EventQueue::new();
        let t = SimTime::from_secs_f64(5.0);
        q.schedule(t, C, 'A').unwrap();
        q.schedule(t, C, 'B').unwrap();
        assert_eq!(q.pop().unwrap().payload, 'A');
        assert_eq!(q.pop().unwrap().payload, 'B');
    }

    #[test]
    fn zero_delay_event_goes_after_queued_peers() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::ZERO, C, 1).unwrap();
        q.schedule(SimTime::ZERO, C, 2).unwrap();
        let first = q.pop().unwrap();
        q.schedule(q.now(), C, 3).unwrap();
        let rest: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.payload).collect();
        assert_eq!(first.payload, 1);
        assert_eq!(rest, vec![2, 3]);
    }

    #[test]
    fn cancel_removes_exactly_once() {
        let mut q = EventQueue::new();
        let h = q.schedule(SimTime::from_nanos(10), C, "x").unwrap();
        q.schedule(SimTime::from_nanos(20), C, "y").unwrap();
        assert_eq!(q.len(), 2);
        assert!(q.cancel(h));
        assert_eq!(q.len(), 1);
        assert!(!q.cancel(h));
        assert_eq!(q.pop().unwrap().payload, "y");
        assert!(q.pop().is_none());
    }

    #[test]
    fn stale_handle_does_not_cancel_slot_reuse() {
        let mut q = EventQueue::new();
        let h = q.schedule(SimTime::from_nanos(1), C, 1).unwrap();
        q.pop().unwrap();
        q.schedule(SimTime::from_nanos(2), C, 2).unwrap();
        assert!(!q.cancel(h));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn scheduling_in_the_past_is_an_error() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_nanos(100), C, ()).unwrap();
        q.pop();
        let err = q.schedule(SimTime::from_nanos(50), C, ()).unwrap_err();
        assert!(matches!(err, KernelError::ScheduleInPast { .. }));
    }

    proptest! {
        #[test]
        fn delivery_is_totally_ordered(
            times in proptest::collection::vec(0u64..50, 1..200),
            cancel_mask in proptest::collection::vec(any::<bool>(), 200),
        ) {
            let mut q = EventQueue::new();
            let mut handles = Vec::new();
            for (i, t) in times.iter().enumerate() {
                handles.push((q.schedule(SimTime::from_nanos(*t), C, i).unwrap(), *t));
            }
            let mut expected: Vec<(u64, usize)> = Vec::new();
            for (i, (h, t)) in handles.iter().enumerate() {
                if cancel_mask[i] {
                    prop_assert!(q.cancel(*h));
                } else {
                    expected.push((*t, i));
                }
            }
            expected.sort();
            let got: Vec<(u64, usize)> = std::iter::from_fn(|| q.pop())
                .map(|e| (e.fire_time.as_nanos(), e.payload))
                .collect();
            prop_assert_eq!(got, expected);
        }
    }
}
