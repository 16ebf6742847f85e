//! Shared harness: run a contract under the engine and capture every
//! terminated state (reason, final machine context, path constraints) for
//! inspection, alongside the workspace the run persisted into.

// Each test binary compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use roam_core::{
    Engine, EngineConfig, EventKind, ExplorationReport, TerminateReason, Workspace,
};
use roam_evm::{EvmContext, EvmPlatform, TxSetup};
use roam_smt::ConstraintSet;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

pub struct Leaf {
    pub id: u64,
    pub reason: TerminateReason,
    pub context: EvmContext,
    pub constraints: ConstraintSet,
}

pub struct Run {
    pub report: ExplorationReport,
    pub leaves: Vec<Leaf>,
    pub workspace: PathBuf,
    #[allow(dead_code)]
    dir: tempfile::TempDir,
}

impl Run {
    /// Leaves that committed or rolled back as real machine outcomes,
    /// excluding abandoned paths.
    pub fn settled(&self) -> impl Iterator<Item = &Leaf> {
        self.leaves
            .iter()
            .filter(|l| l.reason != TerminateReason::Abandoned)
    }

    pub fn reasons(&self) -> Vec<TerminateReason> {
        self.settled().map(|l| l.reason).collect()
    }
}

/// Run `context` to exhaustion with `workers` workers, letting `configure`
/// install extra subscribers before the run starts.
pub fn explore_with(
    context: EvmContext,
    workers: usize,
    configure: impl FnOnce(&mut Engine<EvmPlatform>),
) -> Run {
    let dir = tempfile::tempdir().expect("temp dir");
    let ws = Workspace::create_in(dir.path()).expect("workspace");
    let mut engine = Engine::new(
        EvmPlatform,
        EngineConfig {
            workers,
            ..EngineConfig::default()
        },
    )
    .expect("engine");

    let captured: Arc<Mutex<Vec<Leaf>>> = Arc::new(Mutex::new(Vec::new()));
    let sink = captured.clone();
    engine.subscribe(EventKind::StateTerminated, move |ctx, event| {
        sink.lock().expect("leaf buffer").push(Leaf {
            id: ctx.state.id(),
            reason: event.reason.expect("termination reason"),
            context: ctx.state.context.clone(),
            constraints: ctx.state.constraints().clone(),
        });
    });
    configure(&mut engine);

    let state = roam_core::State::new(0, ConstraintSet::new(), context);
    let report = engine.run(state, Some(&ws)).expect("run");
    assert!(report.aborted.is_none(), "aborted: {:?}", report.aborted);

    let leaves = std::mem::take(&mut *captured.lock().expect("leaf buffer"));
    Run {
        report,
        leaves,
        workspace: ws.path().to_path_buf(),
        dir,
    }
}

/// Single-contract run with default engine settings.
pub fn explore(code: Vec<u8>, setup: TxSetup) -> Run {
    explore_with(EvmContext::for_contract(code, setup), 1, |_| {})
}
