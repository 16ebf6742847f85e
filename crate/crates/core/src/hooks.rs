use crate::event::{Event, EventKind};
use crate::state::State;
use roam_smt::{Expr, Solver, SolverError};
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// What a callback sees: the live state it may constrain or abandon, and the
/// worker's solver for feasibility questions against the state's path
/// predicate.
pub struct HookCtx<'a, C> {
    pub state: &'a mut State<C>,
    pub solver: &'a mut Solver,
}

impl<C> HookCtx<'_, C> {
    pub fn can_be_true(&mut self, cond: &Expr) -> Result<bool, SolverError> {
        self.solver.can_be_true(self.state.constraints(), cond)
    }

    pub fn must_be_true(&mut self, cond: &Expr) -> Result<bool, SolverError> {
        self.solver.must_be_true(self.state.constraints(), cond)
    }
}

type LocationHook<C> = Box<dyn Fn(&mut HookCtx<'_, C>) + Send + Sync>;
type Subscriber<C> = Box<dyn Fn(&mut HookCtx<'_, C>, &Event) + Send + Sync>;

/// Location hooks fire before the instruction at their location executes;
/// event subscribers receive engine and backend events. Both run in
/// registration order on the worker executing the state.
pub struct HookRegistry<C> {
    hooks: HashMap<u64, Vec<LocationHook<C>>>,
    subscribers: HashMap<EventKind, Vec<Subscriber<C>>>,
}

impl<C> Default for HookRegistry<C> {
    fn default() -> Self {
        HookRegistry {
            hooks: HashMap::new(),
            subscribers: HashMap::new(),
        }
    }
}

impl<C> HookRegistry<C> {
    pub fn new() -> HookRegistry<C> {
        HookRegistry::default()
    }

    pub fn register_hook(
        &mut self,
        location: u64,
        callback: impl Fn(&mut HookCtx<'_, C>) + Send + Sync + 'static,
    ) {
        self.hooks
            .entry(location)
            .or_default()
            .push(Box::new(callback));
    }

    pub fn subscribe(
        &mut self,
        kind: EventKind,
        callback: impl Fn(&mut HookCtx<'_, C>, &Event) + Send + Sync + 'static,
    ) {
        self.subscribers
            .entry(kind)
            .or_default()
            .push(Box::new(callback));
    }

    /// Run the hooks registered at `location`. A panicking callback stops
    /// the chain and reports a diagnostic; the engine then abandons the
    /// state.
    pub(crate) fn fire_location(
        &self,
        location: u64,
        ctx: &mut HookCtx<'_, C>,
    ) -> Result<(), String> {
        if let Some(list) = self.hooks.get(&location) {
            for callback in list {
                catch_unwind(AssertUnwindSafe(|| callback(ctx))).map_err(|payload| {
                    format!(
                        "hook at location {location:#x} panicked: {}",
                        panic_message(&*payload)
                    )
                })?;
            }
        }
        Ok(())
    }

    pub(crate) fn dispatch(&self, event: &Event, ctx: &mut HookCtx<'_, C>) -> Result<(), String> {
        if let Some(list) = self.subscribers.get(&event.kind) {
            for callback in list {
                catch_unwind(AssertUnwindSafe(|| callback(ctx, event))).map_err(|payload| {
                    format!(
                        "subscriber for {:?} panicked: {}",
                        event.kind,
                        panic_message(&*payload)
                    )
                })?;
            }
        }
        Ok(())
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}
