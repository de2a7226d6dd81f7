//! Deterministic discrete-event engine.
//!
//! A run is single threaded: the [`Simulator`] pops events in
//! `(fire_time, sequence)` order and hands each to a [`Model`]. Everything a
//! model needs to be reproducible (clock, queue, named random streams) lives
//! here.

mod queue;
mod rng;
mod time;
mod warmup;

use serde::Serialize;
use thiserror::Error;

pub use queue::{ComponentId, EventHandle, EventQueue, SimEvent};
pub use rng::{derive_stream, RngStream};
pub use time::{SimDuration, SimTime};
pub use warmup::WarmupGate;

/// Error type returned by model handlers.
pub type HandlerError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("event scheduled in the past (now {now}, requested {at})")]
    ScheduleInPast { now: SimTime, at: SimTime },
    #[error("run end time must be positive")]
    InvalidEndTime,
    #[error("handler for component `{component}` failed at {at}: {source}")]
    Handler {
        component: String,
        at: SimTime,
        #[source]
        source: HandlerError,
    },
}

/// An event-driven model executed by the [`Simulator`].
pub trait Model {
    type Event;

    fn handle(&mut self, event: SimEvent<Self::Event>, ctx: &mut Context<'_, Self::Event>) -> Result<(), HandlerError>;
}

/// Scheduling access handed to a model while it processes one event.
pub struct Context<'a, E> {
    queue: &'a mut EventQueue<E>,
}

impl<E> Context<'_, E> {
    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn schedule_at(&mut self, at: SimTime, target: ComponentId, payload: E) -> Result<EventHandle, KernelError> {
        self.queue.schedule(at, target, payload)
    }

    pub fn schedule_in(&mut self, delay: SimDuration, target: ComponentId, payload: E) -> Result<EventHandle, KernelError> {
        let at = self.queue.now() + delay;
        self.queue.schedule(at, target, payload)
    }

    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.cancel(handle)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentStats {
    pub name: String,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub end_time: SimTime,
    pub events_delivered: u64,
    pub pending_at_end: usize,
    pub components: Vec<ComponentStats>,
}

pub struct Simulator<E> {
    queue: EventQueue<E>,
    components: Vec<ComponentStats>,
    delivered: u64,
}

impl<E> Default for Simulator<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Simulator<E> {
    pub fn new() -> Self {
        Simulator { queue: EventQueue::new(), components: Vec::new(), delivered: 0 }
    }

    /// Registers a named component and returns its id for event targeting.
    pub fn register(&mut self, name: impl Into<String>) -> ComponentId {
        self.components.push(ComponentStats { name: name.into(), events: 0 });
        ComponentId((self.components.len() - 1) as u32)
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn schedule(&mut self, at: SimTime, target: ComponentId, payload: E) -> Result<EventHandle, KernelError> {
        self.queue.schedule(at, target, payload)
    }

    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.cancel(handle)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Delivers every event with `fire_time <= t_end`, then sets the clock to `t_end`.
    pub fn run_until<M: Model<Event = E>>(&mut self, model: &mut M, t_end: SimTime) -> Result<RunSummary, KernelError> {
        if t_end == SimTime::ZERO {
            return Err(KernelError::InvalidEndTime);
        }
        while let Some(t) = self.queue.peek_time() {
            if t > t_end {
                break;
            }
            let ev = self.queue.pop().expect("peeked event");
            let target = ev.target;
            let at = ev.fire_time;
            if let Some(c) = self.components.get_mut(target.0 as usize) {
                c.events += 1;
            }
            self.delivered += 1;
            let mut ctx = Context { queue: &mut self.queue };
            model.handle(ev, &mut ctx).map_err(|source| KernelError::Handler {
                component: self.component_name(target),
                at,
                source,
            })?;
        }
        if t_end > self.queue.now() {
            self.queue.advance_to(t_end);
        }
        Ok(RunSummary {
            end_time: self.queue.now(),
            events_delivered: self.delivered,
            pending_at_end: self.queue.len(),
            components: self.components.clone(),
        })
    }

    fn component_name(&self, id: ComponentId) -> String {
        self.components.get(id.0 as usize).map(|c| c.name.clone()).unwrap_or_else(|| format!("component#{}", id.0))
    }
}
