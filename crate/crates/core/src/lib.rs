//! Platform-agnostic symbolic exploration engine.
//!
//! A backend implements [`Platform`]: it owns the machine context inside each
//! [`State`] and executes one instruction at a time, reporting either plain
//! progress, a termination, or a request to concretize a symbolic expression.
//! The engine owns everything else: the Ready-state queue and its selection
//! strategy, forking with one child per concrete value, the location-hook and
//! event-subscriber machinery, exploration limits, and the workspace where
//! each terminated state becomes an on-disk test case.

mod engine;
mod error;
mod event;
mod hooks;
mod platform;
mod state;
mod workspace;

pub use engine::{Engine, EngineConfig, ExplorationReport, Selection};
pub use error::CoreError;
pub use event::{Event, EventKind, Policy, TerminateReason};
pub use hooks::{HookCtx, HookRegistry};
pub use platform::{Platform, StepOutcome};
pub use state::{InputSymbol, State, Status, STATE_FORMAT_VERSION};
pub use workspace::Workspace;
