use crate::event::{Policy, TerminateReason};
use crate::state::State;
use roam_smt::{Expr, Model};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Result of attempting one instruction.
#[derive(Clone, Debug)]
pub enum StepOutcome {
    /// The instruction completed and the state can keep running.
    Continue,
    /// The instruction needs a concrete value for `expr` before it can
    /// complete. The engine forks one child per chosen value, appending
    /// `expr = v` and installing `(expr, v)` into the child's concretization
    /// cache; each child then re-attempts the same instruction and finds the
    /// value via [`State::cached`]. `policy: None` uses the engine default.
    Concretize { expr: Expr, policy: Option<Policy> },
    /// The state is finished.
    Terminate(TerminateReason),
}

/// An execution backend. The engine drives the exploration; the platform
/// only knows how to run one instruction of its machine and how to render a
/// finished state's inputs into workspace files.
pub trait Platform: Send + Sync {
    /// Machine context stored inside each state. Must round-trip through
    /// serialization because states travel between workers as byte blobs.
    type Context: Clone + Serialize + DeserializeOwned + Send;

    /// Identifies the platform in serialized state blobs.
    fn tag(&self) -> &'static str;

    /// Current location of the context (program counter or an encoding of
    /// one); used for traces, hooks, and event payloads.
    fn location(&self, context: &Self::Context) -> u64;

    /// Attempt exactly one instruction. Implementations signal failures as
    /// `Terminate` outcomes rather than errors, may emit events through
    /// [`State::emit`], and must consult [`State::cached`] so a re-attempt
    /// after concretization completes instead of signalling again.
    fn execute(&self, state: &mut State<Self::Context>) -> StepOutcome;

    /// Platform-specific files for a terminated state's test case, as
    /// (extension, contents) pairs; `model` assigns every registered input
    /// symbol. The engine writes the platform-independent files itself.
    fn testcase_files(
        &self,
        state: &State<Self::Context>,
        model: &Model,
    ) -> Vec<(String, Vec<u8>)> {
        let _ = (state, model);
        Vec::new()
    }
}
