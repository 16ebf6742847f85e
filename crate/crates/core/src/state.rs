use crate::error::CoreError;
use crate::event::{Event, TerminateReason};
use num_bigint::BigUint;
use roam_smt::{decls_and_asserts, parse_script, ConstraintSet, Expr, SmtError, Sort};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const STATE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Status {
    #[default]
    Ready,
    Busy,
    Terminated(TerminateReason),
}

/// A symbolic input variable together with where it came from, e.g.
/// `("stdin_4", "stdin:4")` or `("txdata_0_3", "tx0:data:3")`. Registration
/// order is the order test-case writers reassemble inputs in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSymbol {
    pub name: String,
    pub provenance: String,
}

/// One explorable snapshot of the program under analysis: the backend-owned
/// machine context plus the path predicate, input registry, trace, message
/// log, and the cache of concretizations already applied on this path.
#[derive(Clone, Debug)]
pub struct State<C> {
    id: u64,
    status: Status,
    constraints: ConstraintSet,
    pub context: C,
    input_registry: Vec<InputSymbol>,
    trace: Vec<u64>,
    messages: Vec<String>,
    cache: Vec<(Expr, BigUint)>,
    child_counter: u64,
    pending: Option<TerminateReason>,
    emitted: Vec<Event>,
}

impl<C> State<C> {
    pub fn new(id: u64, constraints: ConstraintSet, context: C) -> State<C> {
        State {
            id,
            status: Status::Ready,
            constraints,
            context,
            input_registry: Vec::new(),
            trace: Vec::new(),
            messages: Vec::new(),
            cache: Vec::new(),
            child_counter: 0,
            pending: None,
            emitted: Vec::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// Declare a fresh symbolic input and record its provenance. The
    /// expression returned refers to the new variable.
    pub fn declare_input(
        &mut self,
        name: impl Into<String>,
        sort: Sort,
        provenance: impl Into<String>,
    ) -> Result<Expr, SmtError> {
        let name = name.into();
        let var = self.constraints.declare(name.clone(), sort)?;
        self.input_registry.push(InputSymbol {
            name,
            provenance: provenance.into(),
        });
        Ok(var)
    }

    /// Declare an auxiliary variable (no input provenance).
    pub fn declare_aux(
        &mut self,
        name: impl Into<String>,
        sort: Sort,
    ) -> Result<Expr, SmtError> {
        self.constraints.declare(name, sort)
    }

    pub fn input_registry(&self) -> &[InputSymbol] {
        &self.input_registry
    }

    /// Append a condition to the path predicate. Feasibility is checked
    /// lazily (at the next fork or at save time), so contradictions silently
    /// retire the state later rather than failing here.
    pub fn constrain(&mut self, cond: Expr) -> Result<(), SmtError> {
        self.constraints.assert(cond)
    }

    /// Request termination with `Abandoned` before or after the current
    /// instruction; callable from hooks and subscribers.
    pub fn abandon(&mut self) {
        self.pending = Some(TerminateReason::Abandoned);
    }

    pub fn log(&mut self, message: impl Into<String>) {
        self.messages.push(message.into());
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn trace(&self) -> &[u64] {
        &self.trace
    }

    pub fn child_counter(&self) -> u64 {
        self.child_counter
    }

    /// The concrete value a previous concretization pinned this expression
    /// to on this path, if any. Lookup is by structural equality, so a
    /// backend re-executing an instruction rebuilds the same expression and
    /// finds the value installed by the fork that created this state.
    pub fn cached(&self, expr: &Expr) -> Option<&BigUint> {
        self.cache
            .iter()
            .find(|(e, _)| e == expr)
            .map(|(_, v)| v)
    }

    /// Queue an event for the engine to deliver to subscribers once the
    /// current instruction attempt returns.
    pub fn emit(&mut self, event: Event) {
        self.emitted.push(event);
    }

    pub(crate) fn set_status(&mut self, status: Status) {
        self.status = status;
    }

    pub(crate) fn set_id(&mut self, id: u64) {
        self.id = id;
    }

    pub(crate) fn push_trace(&mut self, location: u64) {
        self.trace.push(location);
    }

    pub(crate) fn take_pending(&mut self) -> Option<TerminateReason> {
        self.pending.take()
    }

    pub(crate) fn take_emitted(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.emitted)
    }

    pub(crate) fn install_cache(&mut self, expr: Expr, value: BigUint) {
        self.cache.push((expr, value));
    }

    pub(crate) fn fork_child(&mut self) -> State<C>
    where
        C: Clone,
    {
        self.child_counter += 1;
        let mut child = self.clone();
        child.constraints = self.constraints.fork();
        child.status = Status::Ready;
        child.child_counter = 0;
        child.pending = None;
        child.emitted = Vec::new();
        child
    }
}

#[derive(Serialize, Deserialize)]
struct StateBlob {
    version: u32,
    platform_tag: String,
    id: u64,
    constraints_text: String,
    inherited: usize,
    fresh_counter: u64,
    context: Vec<u8>,
    trace: Vec<u64>,
    input_registry: Vec<InputSymbol>,
    messages: Vec<String>,
    cache: Vec<(Expr, BigUint)>,
    child_counter: u64,
}

impl<C: Serialize> State<C> {
    /// Serialize into the self-contained byte form states travel the work
    /// queue in: format version, platform tag, the constraint set as
    /// deterministic SMT-LIB text plus its counters, the bincode-encoded
    /// platform context, and the bookkeeping lists.
    pub fn to_blob(&self, platform_tag: &str) -> Result<Vec<u8>, CoreError> {
        let (inherited, fresh_counter) = self.constraints.counters();
        let blob = StateBlob {
            version: STATE_FORMAT_VERSION,
            platform_tag: platform_tag.to_string(),
            id: self.id,
            constraints_text: decls_and_asserts(&self.constraints, &[]),
            inherited,
            fresh_counter,
            context: bincode::serialize(&self.context)
                .map_err(|e| CoreError::Serialize(e.to_string()))?,
            trace: self.trace.clone(),
            input_registry: self.input_registry.clone(),
            messages: self.messages.clone(),
            cache: self.cache.clone(),
            child_counter: self.child_counter,
        };
        bincode::serialize(&blob).map_err(|e| CoreError::Serialize(e.to_string()))
    }
}

impl<C: DeserializeOwned> State<C> {
    pub fn from_blob(bytes: &[u8], platform_tag: &str) -> Result<State<C>, CoreError> {
        let blob: StateBlob =
            bincode::deserialize(bytes).map_err(|e| CoreError::Serialize(e.to_string()))?;
        if blob.version != STATE_FORMAT_VERSION {
            return Err(CoreError::BlobVersion(blob.version));
        }
        if blob.platform_tag != platform_tag {
            return Err(CoreError::BlobPlatform {
                expected: platform_tag.to_string(),
                found: blob.platform_tag,
            });
        }
        let mut constraints = parse_script(&blob.constraints_text)?.cs;
        constraints.restore_counters(blob.inherited, blob.fresh_counter);
        let context: C = bincode::deserialize(&blob.context)
            .map_err(|e| CoreError::Serialize(e.to_string()))?;
        Ok(State {
            id: blob.id,
            status: Status::Ready,
            constraints,
            context,
            input_registry: blob.input_registry,
            trace: blob.trace,
            messages: blob.messages,
            cache: blob.cache,
            child_counter: blob.child_counter,
            pending: None,
            emitted: Vec::new(),
        })
    }
}
