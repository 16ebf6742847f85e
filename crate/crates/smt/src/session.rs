//! Client for an external SMT-LIB 2 solver process. The solver runs as a
//! long-lived subprocess; queries go over stdin as text and answers come
//! back over stdout. Incremental mode wraps each query in `push`/`pop`;
//! if the process misbehaves the session falls back to one process per
//! query. Hitting the query timeout kills the process and reports Unknown.

use crate::constraints::ConstraintSet;
use crate::error::SmtError;
use crate::expr::Expr;
use crate::parse::parse_bv_literal;
use crate::sexpr::{self, SExpr};
use crate::smtlib;
use crate::solve::{SolverError, SolverResult};
use num_bigint::BigUint;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

pub struct ExternalSession {
    command: Vec<String>,
    timeout: Duration,
    incremental: bool,
    live: Option<Live>,
}

struct Live {
    child: Child,
    stdin: ChildStdin,
    rx: Receiver<String>,
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        self.kill();
    }
}

enum ReadOutcome {
    Complete(String),
    TimedOut,
    Closed,
}

impl ExternalSession {
    pub fn new(command: Vec<String>, timeout: Duration) -> ExternalSession {
        ExternalSession {
            command,
            timeout,
            incremental: true,
            live: None,
        }
    }

    fn spawn(&mut self) -> Result<(), SolverError> {
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| {
                SolverError::Unavailable(format!(
                    "failed to start solver `{}`: {e}",
                    self.command.join(" ")
                ))
            })?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut live = Live { child, stdin, rx };
        let preamble = "(set-option :print-success false)\n(set-logic QF_AUFBV)\n";
        if live.stdin.write_all(preamble.as_bytes()).is_err() {
            let _ = live.child.kill();
            return Err(SolverError::Unavailable(
                "solver process closed stdin immediately".into(),
            ));
        }
        let _ = live.stdin.flush();
        self.live = Some(live);
        Ok(())
    }

    fn kill(&mut self) {
        if let Some(mut live) = self.live.take() {
            let _ = live.child.kill();
            let _ = live.child.wait();
        }
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        let live = self.live.as_mut().expect("session is live");
        live.stdin
            .write_all(text.as_bytes())
            .and_then(|_| live.stdin.flush())
            .map_err(|e| SolverError::Unavailable(format!("solver stdin closed: {e}")))
    }

    fn read_balanced(&mut self, deadline: Instant) -> ReadOutcome {
        let live = self.live.as_mut().expect("session is live");
        let mut buf = String::new();
        loop {
            if sexpr::is_complete(&buf) {
                return ReadOutcome::Complete(buf);
            }
            let now = Instant::now();
            if now >= deadline {
                return ReadOutcome::TimedOut;
            }
            match live.rx.recv_timeout(deadline - now) {
                Ok(line) => {
                    buf.push_str(&line);
                    buf.push('\n');
                }
                Err(RecvTimeoutError::Timeout) => return ReadOutcome::TimedOut,
                Err(RecvTimeoutError::Disconnected) => return ReadOutcome::Closed,
            }
        }
    }

    /// One satisfiability query; on sat, also fetch values for the given
    /// variable names. Returns Unknown on per-query timeout (the process is
    /// killed and respawned lazily).
    pub fn query(
        &mut self,
        cs: &ConstraintSet,
        extra: &[Expr],
        wanted: &[String],
    ) -> Result<(SolverResult, Vec<(String, BigUint)>), SolverError> {
        match self.query_once(cs, extra, wanted) {
            Err(SolverError::Protocol(first)) if self.incremental => {
                // The solver rejected the incremental dialect; fall back to
                // one process per query before giving up.
                self.incremental = false;
                self.kill();
                self.query_once(cs, extra, wanted).map_err(|e| match e {
                    SolverError::Protocol(second) => SolverError::Unavailable(format!(
                        "solver protocol errors (incremental: {first}; one-shot: {second})"
                    )),
                    other => other,
                })
            }
            Err(SolverError::Protocol(msg)) => Err(SolverError::Unavailable(format!(
                "solver protocol error: {msg}"
            ))),
            other => other,
        }
    }

    fn query_once(
        &mut self,
        cs: &ConstraintSet,
        extra: &[Expr],
        wanted: &[String],
    ) -> Result<(SolverResult, Vec<(String, BigUint)>), SolverError> {
        if !self.incremental {
            self.kill();
        }
        if self.live.is_none() {
            self.spawn()?;
        }
        let deadline = Instant::now() + self.timeout;
        let body = smtlib::decls_and_asserts(cs, extra);
        let mut script = String::new();
        if self.incremental {
            script.push_str("(push 1)\n");
        }
        script.push_str(&body);
        script.push_str("(check-sat)\n");
        self.send(&script)?;

        let verdict_text = match self.read_balanced(deadline) {
            ReadOutcome::Complete(t) => t,
            ReadOutcome::TimedOut => {
                self.kill();
                return Ok((SolverResult::Unknown, Vec::new()));
            }
            ReadOutcome::Closed => {
                self.kill();
                return Err(SolverError::Protocol("solver closed its stdout".into()));
            }
        };
        let verdict = match verdict_text.trim() {
            "sat" => SolverResult::Sat,
            "unsat" => SolverResult::Unsat,
            "unknown" => SolverResult::Unknown,
            other => {
                self.kill();
                return Err(SolverError::Protocol(format!(
                    "unexpected check-sat reply: {other}"
                )));
            }
        };

        let mut values = Vec::new();
        if verdict == SolverResult::Sat && !wanted.is_empty() {
            let terms = wanted.join(" ");
            self.send(&format!("(get-value ({terms}))\n"))?;
            let reply = match self.read_balanced(deadline) {
                ReadOutcome::Complete(t) => t,
                ReadOutcome::TimedOut => {
                    self.kill();
                    return Ok((SolverResult::Unknown, Vec::new()));
                }
                ReadOutcome::Closed => {
                    self.kill();
                    return Err(SolverError::Protocol("solver closed its stdout".into()));
                }
            };
            values = parse_get_value_reply(&reply, wanted).map_err(|e| {
                self.kill();
                SolverError::Protocol(format!("bad get-value reply: {e}"))
            })?;
        }

        if self.incremental {
            self.send("(pop 1)\n")?;
        } else {
            self.kill();
        }
        Ok((verdict, values))
    }
}

fn parse_get_value_reply(
    reply: &str,
    wanted: &[String],
) -> Result<Vec<(String, BigUint)>, SmtError> {
    let sx = sexpr::parse_one(reply.trim())?;
    let pairs = sx
        .list()
        .ok_or_else(|| SmtError::Parse(format!("expected a list, got `{reply}`")))?;
    if pairs.len() != wanted.len() {
        return Err(SmtError::Parse(format!(
            "expected {} value pairs, got {}",
            wanted.len(),
            pairs.len()
        )));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (name, pair) in wanted.iter().zip(pairs.iter()) {
        let items = pair
            .list()
            .ok_or_else(|| SmtError::Parse(format!("expected a (term value) pair in `{pair}`")))?;
        let value_sx = items
            .last()
            .ok_or_else(|| SmtError::Parse("empty value pair".into()))?;
        let value = match value_sx {
            SExpr::Atom(a) if a == "true" => BigUint::from(1u8),
            SExpr::Atom(a) if a == "false" => BigUint::from(0u8),
            other => {
                parse_bv_literal(other)?
                    .ok_or_else(|| SmtError::Parse(format!("bad value literal `{other}`")))?
                    .0
            }
        };
        out.push((name.clone(), value));
    }
    Ok(out)
}
