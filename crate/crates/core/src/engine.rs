use crate::error::CoreError;
use crate::event::{Event, EventKind, Policy, TerminateReason};
use crate::hooks::{HookCtx, HookRegistry};
use crate::platform::{Platform, StepOutcome};
use crate::state::{State, Status};
use crate::workspace::Workspace;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roam_smt::{script, sort_to_smtlib, Expr, Solver, SolverConfig, SolverError, Sort};
use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Order in which Ready states leave the queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Oldest first: breadth-first over the fork tree. The default.
    Fifo,
    /// Newest first: depth-first.
    Lifo,
    /// Uniformly random, reproducible from the seed.
    Random(u64),
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub workers: usize,
    pub selection: Selection,
    pub default_policy: Policy,
    /// Cap on the total number of states ever created (root included).
    pub max_states: Option<u64>,
    /// Cap on instruction attempts summed over all states.
    pub max_instructions: Option<u64>,
    /// Wall-clock budget for the whole exploration.
    pub time_budget: Option<Duration>,
    pub solver: SolverConfig,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            workers: 1,
            selection: Selection::Fifo,
            default_policy: Policy::default(),
            max_states: None,
            max_instructions: None,
            time_budget: None,
            solver: SolverConfig::builtin(),
        }
    }
}

/// Totals for one exploration run. `terminated` excludes abandoned states;
/// `test_cases` equals the number of file groups in the workspace when one
/// was attached. `drained` counts states dropped unfinished because a limit
/// tripped or the run aborted.
#[derive(Clone, Debug, Default)]
pub struct ExplorationReport {
    pub terminated: u64,
    pub abandoned: u64,
    pub test_cases: u64,
    pub fork_events: u64,
    pub children_created: u64,
    pub instructions: u64,
    pub drained: u64,
    pub limit_hit: bool,
    pub aborted: Option<String>,
    pub diagnostics: Vec<String>,
    pub wall_time: Duration,
    pub coverage: Option<f64>,
}

pub struct Engine<P: Platform> {
    platform: P,
    config: EngineConfig,
    hooks: HookRegistry<P::Context>,
}

struct WorkQueue {
    items: VecDeque<Vec<u8>>,
    in_flight: usize,
    rng: Option<ChaCha8Rng>,
}

struct Shared<'a, P: Platform> {
    platform: &'a P,
    config: &'a EngineConfig,
    hooks: &'a HookRegistry<P::Context>,
    workspace: Option<&'a Workspace>,
    queue: Mutex<WorkQueue>,
    ready: Condvar,
    deadline: Option<Instant>,
    stop: AtomicBool,
    limit_hit: AtomicBool,
    abort: Mutex<Option<String>>,
    diagnostics: Mutex<Vec<String>>,
    next_state_id: AtomicU64,
    states_created: AtomicU64,
    instructions: AtomicU64,
    terminated: AtomicU64,
    abandoned: AtomicU64,
    fork_events: AtomicU64,
    children_created: AtomicU64,
    drained: AtomicU64,
}

enum ForkPlan {
    /// (constraint to assert, concrete value for the cache) per child.
    Children(Vec<(Expr, BigUint)>, Option<String>),
    Infeasible,
    Unknown,
}

impl<P: Platform> Engine<P> {
    pub fn new(platform: P, config: EngineConfig) -> Result<Engine<P>, CoreError> {
        if config.workers == 0 {
            return Err(CoreError::Config("worker count must be at least 1".into()));
        }
        if let Policy::All { cap: 0 } = config.default_policy {
            return Err(CoreError::Config("ALL policy cap must be at least 1".into()));
        }
        Ok(Engine {
            platform,
            config,
            hooks: HookRegistry::new(),
        })
    }

    pub fn platform(&self) -> &P {
        &self.platform
    }

    /// Run `callback` before every instruction executed at `location`.
    pub fn register_hook(
        &mut self,
        location: u64,
        callback: impl Fn(&mut HookCtx<'_, P::Context>) + Send + Sync + 'static,
    ) {
        self.hooks.register_hook(location, callback);
    }

    pub fn subscribe(
        &mut self,
        kind: EventKind,
        callback: impl Fn(&mut HookCtx<'_, P::Context>, &Event) + Send + Sync + 'static,
    ) {
        self.hooks.subscribe(kind, callback);
    }

    /// Explore from `initial` until no Ready state remains or a limit trips,
    /// persisting every non-abandoned terminated state into `workspace`.
    pub fn run(
        &self,
        initial: State<P::Context>,
        workspace: Option<&Workspace>,
    ) -> Result<ExplorationReport, CoreError> {
        if initial.status() != Status::Ready {
            return Err(CoreError::Config(
                "initial state must be Ready".to_string(),
            ));
        }
        let started = Instant::now();
        let root_id = initial.id();
        let root_blob = initial.to_blob(self.platform.tag())?;
        let rng = match self.config.selection {
            Selection::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let shared = Shared {
            platform: &self.platform,
            config: &self.config,
            hooks: &self.hooks,
            workspace,
            queue: Mutex::new(WorkQueue {
                items: VecDeque::from(vec![root_blob]),
                in_flight: 0,
                rng,
            }),
            ready: Condvar::new(),
            deadline: self.config.time_budget.map(|b| started + b),
            stop: AtomicBool::new(false),
            limit_hit: AtomicBool::new(false),
            abort: Mutex::new(None),
            diagnostics: Mutex::new(Vec::new()),
            next_state_id: AtomicU64::new(root_id + 1),
            states_created: AtomicU64::new(1),
            instructions: AtomicU64::new(0),
            terminated: AtomicU64::new(0),
            abandoned: AtomicU64::new(0),
            fork_events: AtomicU64::new(0),
            children_created: AtomicU64::new(0),
            drained: AtomicU64::new(0),
        };

        std::thread::scope(|scope| {
            for _ in 0..self.config.workers {
                scope.spawn(|| worker(&shared));
            }
        });

        let leftover = shared.queue.lock().expect("queue lock").items.len() as u64;
        shared.drained.fetch_add(leftover, Ordering::SeqCst);

        let report = ExplorationReport {
            terminated: shared.terminated.load(Ordering::SeqCst),
            abandoned: shared.abandoned.load(Ordering::SeqCst),
            test_cases: workspace.map_or(0, |w| w.test_count()),
            fork_events: shared.fork_events.load(Ordering::SeqCst),
            children_created: shared.children_created.load(Ordering::SeqCst),
            instructions: shared.instructions.load(Ordering::SeqCst),
            drained: shared.drained.load(Ordering::SeqCst),
            limit_hit: shared.limit_hit.load(Ordering::SeqCst),
            aborted: shared.abort.lock().expect("abort lock").clone(),
            diagnostics: std::mem::take(&mut *shared.diagnostics.lock().expect("diag lock")),
            wall_time: started.elapsed(),
            coverage: None,
        };
        Ok(report)
    }
}

impl<P: Platform> Shared<'_, P> {
    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn trip_limit(&self) {
        self.limit_hit.store(true, Ordering::SeqCst);
        self.stop.store(true, Ordering::SeqCst);
        self.ready.notify_all();
    }

    fn abort_run(&self, message: String) {
        let mut slot = self.abort.lock().expect("abort lock");
        if slot.is_none() {
            *slot = Some(message);
        }
        self.stop.store(true, Ordering::SeqCst);
        self.ready.notify_all();
    }

    fn diagnostic(&self, message: String) {
        self.diagnostics
            .lock()
            .expect("diag lock")
            .push(message);
    }

    fn over_deadline(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Claim the next Ready state, or None when the run is over.
    fn take_work(&self) -> Option<Vec<u8>> {
        let mut queue = self.queue.lock().expect("queue lock");
        loop {
            if self.stopped() {
                return None;
            }
            if let Some(blob) = pick(&mut queue, self.config.selection) {
                queue.in_flight += 1;
                return Some(blob);
            }
            if queue.in_flight == 0 {
                // Nothing queued and nobody executing: exploration is done.
                self.ready.notify_all();
                return None;
            }
            queue = self.ready.wait(queue).expect("queue lock");
        }
    }

    fn finish_work(&self) {
        let mut queue = self.queue.lock().expect("queue lock");
        queue.in_flight -= 1;
        drop(queue);
        self.ready.notify_all();
    }

    fn enqueue(&self, blobs: Vec<Vec<u8>>) {
        let mut queue = self.queue.lock().expect("queue lock");
        queue.items.extend(blobs);
        drop(queue);
        self.ready.notify_all();
    }
}

fn pick(queue: &mut WorkQueue, selection: Selection) -> Option<Vec<u8>> {
    if queue.items.is_empty() {
        return None;
    }
    match selection {
        Selection::Fifo => queue.items.pop_front(),
        Selection::Lifo => queue.items.pop_back(),
        Selection::Random(_) => {
            let rng = queue.rng.as_mut().expect("rng set for random selection");
            let index = rng.random_range(0..queue.items.len());
            queue.items.remove(index)
        }
    }
}

fn worker<P: Platform>(shared: &Shared<'_, P>) {
    let mut solver = Solver::new(&shared.config.solver);
    while let Some(blob) = shared.take_work() {
        match State::<P::Context>::from_blob(&blob, shared.platform.tag()) {
            Ok(state) => run_state(shared, state, &mut solver),
            Err(e) => shared.abort_run(format!("corrupt state in work queue: {e}")),
        }
        shared.finish_work();
    }
}

/// Execute one state until it terminates, forks, or the run stops.
fn run_state<P: Platform>(shared: &Shared<'_, P>, mut state: State<P::Context>, solver: &mut Solver) {
    state.set_status(Status::Busy);
    loop {
        if shared.over_deadline() {
            shared.trip_limit();
        }
        if let Some(max) = shared.config.max_instructions {
            if shared.instructions.load(Ordering::SeqCst) >= max {
                shared.trip_limit();
            }
        }
        if shared.stopped() {
            shared.drained.fetch_add(1, Ordering::SeqCst);
            return;
        }

        let location = shared.platform.location(&state.context);

        // Location hooks, then the will-execute notification. Either may
        // constrain or abandon; a panicking callback abandons the state.
        {
            let mut ctx = HookCtx {
                state: &mut state,
                solver,
            };
            if let Err(diag) = shared.hooks.fire_location(location, &mut ctx) {
                shared.diagnostic(diag);
                finish(shared, state, TerminateReason::Abandoned, solver);
                return;
            }
            let will = Event::at(EventKind::WillExecuteInstruction, location);
            if let Err(diag) = shared.hooks.dispatch(&will, &mut ctx) {
                shared.diagnostic(diag);
                finish(shared, state, TerminateReason::Abandoned, solver);
                return;
            }
        }
        if let Some(reason) = state.take_pending() {
            finish(shared, state, reason, solver);
            return;
        }

        shared.instructions.fetch_add(1, Ordering::SeqCst);
        let outcome = match catch_unwind(AssertUnwindSafe(|| shared.platform.execute(&mut state))) {
            Ok(outcome) => outcome,
            Err(payload) => {
                shared.abort_run(format!(
                    "backend panicked at location {location:#x}: {}",
                    panic_text(&*payload)
                ));
                return;
            }
        };

        // Deliver events the backend queued during the instruction.
        for event in state.take_emitted() {
            let mut ctx = HookCtx {
                state: &mut state,
                solver,
            };
            if let Err(diag) = shared.hooks.dispatch(&event, &mut ctx) {
                shared.diagnostic(diag);
                finish(shared, state, TerminateReason::Abandoned, solver);
                return;
            }
        }

        match outcome {
            StepOutcome::Continue => {
                state.push_trace(location);
                let did = Event::at(EventKind::DidExecuteInstruction, location);
                let mut ctx = HookCtx {
                    state: &mut state,
                    solver,
                };
                if let Err(diag) = shared.hooks.dispatch(&did, &mut ctx) {
                    shared.diagnostic(diag);
                    finish(shared, state, TerminateReason::Abandoned, solver);
                    return;
                }
                if let Some(reason) = state.take_pending() {
                    finish(shared, state, reason, solver);
                    return;
                }
            }
            StepOutcome::Terminate(reason) => {
                state.push_trace(location);
                let did = Event::at(EventKind::DidExecuteInstruction, location);
                let mut ctx = HookCtx {
                    state: &mut state,
                    solver,
                };
                if let Err(diag) = shared.hooks.dispatch(&did, &mut ctx) {
                    shared.diagnostic(diag);
                }
                finish(shared, state, reason, solver);
                return;
            }
            StepOutcome::Concretize { expr, policy } => {
                let policy = policy.unwrap_or(shared.config.default_policy);
                fork(shared, state, solver, expr, policy, location);
                return;
            }
        }
    }
}

/// Replace the parent with one Ready child per chosen concrete value.
fn fork<P: Platform>(
    shared: &Shared<'_, P>,
    mut parent: State<P::Context>,
    solver: &mut Solver,
    expr: Expr,
    policy: Policy,
    location: u64,
) {
    let plan = match plan_fork(solver, &parent, &expr, policy) {
        Ok(plan) => plan,
        Err(SolverError::Unknown) => ForkPlan::Unknown,
        Err(SolverError::NoModel) => ForkPlan::Infeasible,
        Err(e) => {
            shared.abort_run(format!("solver failed while forking: {e}"));
            return;
        }
    };
    let (children, warning) = match plan {
        ForkPlan::Infeasible => {
            finish(shared, parent, TerminateReason::Abandoned, solver);
            return;
        }
        ForkPlan::Unknown => {
            finish(shared, parent, TerminateReason::SolverUnknown, solver);
            return;
        }
        ForkPlan::Children(children, warning) => (children, warning),
    };

    if let Some(max) = shared.config.max_states {
        let created = shared.states_created.load(Ordering::SeqCst);
        if created + children.len() as u64 > max {
            shared.trip_limit();
            shared.drained.fetch_add(1, Ordering::SeqCst);
            return;
        }
    }
    if let Some(warning) = warning {
        parent.log(warning);
    }

    let mut blobs = Vec::with_capacity(children.len());
    for (constraint, value) in children {
        let mut child = parent.fork_child();
        child.set_id(shared.next_state_id.fetch_add(1, Ordering::SeqCst));
        if let Err(e) = child.constrain(constraint) {
            shared.abort_run(format!("fork constraint rejected: {e}"));
            return;
        }
        child.install_cache(expr.clone(), value.clone());
        let child_id = child.id();
        match child.to_blob(shared.platform.tag()) {
            Ok(blob) => blobs.push(blob),
            Err(e) => {
                shared.abort_run(format!("child state serialization failed: {e}"));
                return;
            }
        }
        let event = Event::forked(location, child_id, expr.clone(), value);
        let mut ctx = HookCtx {
            state: &mut parent,
            solver,
        };
        if let Err(diag) = shared.hooks.dispatch(&event, &mut ctx) {
            shared.diagnostic(diag);
        }
    }

    shared
        .states_created
        .fetch_add(blobs.len() as u64, Ordering::SeqCst);
    shared
        .children_created
        .fetch_add(blobs.len() as u64, Ordering::SeqCst);
    shared.fork_events.fetch_add(1, Ordering::SeqCst);
    shared.enqueue(blobs);
    // The parent retires here: replaced by its children, never re-executed.
}

fn plan_fork<C>(
    solver: &mut Solver,
    state: &State<C>,
    expr: &Expr,
    policy: Policy,
) -> Result<ForkPlan, SolverError> {
    let cs = state.constraints();
    if expr.sort() == Sort::Bool {
        let negated = expr.not();
        let mut children = Vec::new();
        if solver.can_be_true(cs, expr)? {
            children.push((expr.clone(), BigUint::from(1u8)));
        }
        if solver.can_be_true(cs, &negated)? {
            children.push((negated, BigUint::from(0u8)));
        }
        return Ok(if children.is_empty() {
            ForkPlan::Infeasible
        } else {
            ForkPlan::Children(children, None)
        });
    }

    let width = expr.width();
    let eq_const = |v: &BigUint| {
        Expr::bv(v.clone(), width)
            .map(|c| expr.eq(&c))
            .expect("feasible value fits the expression width")
    };
    match policy {
        Policy::All { cap } => {
            let cap = cap.max(1);
            let (values, truncated) = solver.all_values(cs, expr, cap)?;
            if values.is_empty() {
                return Ok(ForkPlan::Infeasible);
            }
            let warning = truncated.then(|| {
                format!(
                    "concretization truncated: more than {cap} feasible values, kept the first {cap} discovered"
                )
            });
            let children = values.into_iter().map(|v| (eq_const(&v), v)).collect();
            Ok(ForkPlan::Children(children, warning))
        }
        Policy::One => {
            let value = solver.get_value(cs, expr)?;
            Ok(ForkPlan::Children(
                vec![(eq_const(&value), value)],
                None,
            ))
        }
        Policy::Minmax => {
            let (min, max) = solver.minmax(cs, expr)?;
            let mut children = vec![(eq_const(&min), min.clone())];
            if max != min {
                children.push((eq_const(&max), max));
            }
            Ok(ForkPlan::Children(children, None))
        }
    }
}

/// Mark the state Terminated, notify subscribers, and persist it unless it
/// was abandoned.
fn finish<P: Platform>(
    shared: &Shared<'_, P>,
    mut state: State<P::Context>,
    reason: TerminateReason,
    solver: &mut Solver,
) {
    state.set_status(Status::Terminated(reason));
    let location = shared.platform.location(&state.context);
    let event = Event::terminated(location, reason);
    let mut ctx = HookCtx {
        state: &mut state,
        solver,
    };
    if let Err(diag) = shared.hooks.dispatch(&event, &mut ctx) {
        shared.diagnostic(diag);
    }

    if reason.is_abandoned() {
        shared.abandoned.fetch_add(1, Ordering::SeqCst);
        return;
    }
    shared.terminated.fetch_add(1, Ordering::SeqCst);
    if let Some(workspace) = shared.workspace {
        if let Err(e) = save_testcase(shared, &state, reason, solver, workspace) {
            shared.abort_run(format!("failed to persist test case: {e}"));
        }
    }
}

/// Write the file group for a terminated state: trace, SMT script with the
/// satisfying model, message log, and whatever the platform contributes.
/// Input symbols absent from the constraints complete to zero. When no model
/// exists the group degrades to a messages file recording why.
fn save_testcase<P: Platform>(
    shared: &Shared<'_, P>,
    state: &State<P::Context>,
    reason: TerminateReason,
    solver: &mut Solver,
    workspace: &Workspace,
) -> Result<(), CoreError> {
    let cs = state.constraints();
    let mut names: BTreeSet<String> = cs.constrained_variables();
    for input in state.input_registry() {
        names.insert(input.name.clone());
    }
    // Arrays have no finite printable value; models cover scalars only.
    names.retain(|n| !matches!(cs.sort_of(n), Some(Sort::Array { .. })));

    let mut messages = format!("status: {reason}\n");
    for line in state.messages() {
        messages.push_str(line);
        messages.push('\n');
    }

    let model = match solver.model(cs, &[], &names) {
        Ok(Some(model)) => model,
        Ok(None) => {
            messages.push_str("model unavailable: path constraints are unsatisfiable; no input files generated\n");
            workspace.save(&[("messages".into(), messages.into_bytes())])?;
            return Ok(());
        }
        Err(SolverError::Unknown) => {
            messages.push_str("model unavailable: solver returned unknown; no input files generated\n");
            workspace.save(&[("messages".into(), messages.into_bytes())])?;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };

    let mut trace_text = String::new();
    for location in state.trace() {
        trace_text.push_str(&format!("{location:#x}\n"));
    }

    let mut smt_text = script(cs, &[]);
    smt_text.push_str(";; model\n");
    for (name, value) in model.iter() {
        let sort = cs.sort_of(name).expect("model names come from the set");
        let rendered = match sort {
            Sort::Bool => {
                if value == &BigUint::from(0u8) {
                    "false".to_string()
                } else {
                    "true".to_string()
                }
            }
            Sort::BitVec(w) => format!("(_ bv{value} {w})"),
            Sort::Array { .. } => unreachable!("array names filtered above"),
        };
        smt_text.push_str(&format!(
            "(define-fun {name} () {} {rendered})\n",
            sort_to_smtlib(&sort)
        ));
    }

    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("trace".into(), trace_text.into_bytes()),
        ("smt".into(), smt_text.into_bytes()),
        ("messages".into(), messages.into_bytes()),
    ];
    files.extend(shared.platform.testcase_files(state, &model));
    workspace.save(&files)?;
    Ok(())
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Clone, Serialize, Deserialize)]
    struct NullCtx;

    struct NullPlatform;

    impl Platform for NullPlatform {
        type Context = NullCtx;

        fn tag(&self) -> &'static str {
            "null"
        }

        fn location(&self, _: &NullCtx) -> u64 {
            0
        }

        fn execute(&self, _: &mut State<NullCtx>) -> StepOutcome {
            StepOutcome::Terminate(TerminateReason::Exit(0))
        }
    }

    #[test]
    fn zero_workers_is_rejected() {
        let config = EngineConfig {
            workers: 0,
            ..EngineConfig::default()
        };
        assert!(matches!(
            Engine::new(NullPlatform, config),
            Err(CoreError::Config(_))
        ));
    }

    #[test]
    fn zero_cap_policy_is_rejected() {
        let config = EngineConfig {
            default_policy: Policy::All { cap: 0 },
            ..EngineConfig::default()
        };
        assert!(matches!(
            Engine::new(NullPlatform, config),
            Err(CoreError::Config(_))
        ));
    }

    #[test]
    fn busy_initial_state_is_rejected() {
        let engine = Engine::new(NullPlatform, EngineConfig::default()).unwrap();
        let mut state = State::new(0, roam_smt::ConstraintSet::new(), NullCtx);
        state.set_status(Status::Busy);
        assert!(matches!(
            engine.run(state, None),
            Err(CoreError::Config(_))
        ));
    }
}
