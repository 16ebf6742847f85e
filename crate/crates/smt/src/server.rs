//! A small SMT-LIB 2 server over the built-in solving pipeline. Backs the
//! `roam-solve` binary so the external-solver protocol can run against a
//! hermetic subprocess; handles the command subset the session client and
//! common drivers emit (declare/assert/check-sat/get-value/push/pop).

use crate::constraints::ConstraintSet;
use crate::error::SmtError;
use crate::eval::{eval, Model, Value};
use crate::expr::Expr;
use crate::parse::{parse_expr, parse_sort};
use crate::sexpr::SExpr;
use crate::smtlib::expr_to_smtlib;
use crate::solve::SolverResult;
use crate::sort::Sort;
use std::collections::BTreeMap;
use std::time::Duration;

#[derive(Debug, PartialEq, Eq)]
pub enum Reply {
    /// Command handled, nothing to print.
    Silent,
    Text(String),
    Exit,
}

#[derive(Default)]
pub struct Server {
    decls: BTreeMap<String, Sort>,
    assertions: Vec<Expr>,
    scopes: Vec<Checkpoint>,
    last_model: Option<Model>,
}

#[derive(Debug, Default)]
struct Checkpoint {
    declared: Vec<String>,
    assertion_count: usize,
}

fn error_reply(msg: impl std::fmt::Display) -> Reply {
    let text = msg.to_string().replace('"', "'");
    Reply::Text(format!("(error \"{text}\")"))
}

/// True once the buffered input holds at least one complete command.
pub fn buffer_complete(buffer: &str) -> bool {
    crate::sexpr::is_complete(buffer)
}

/// Split buffered input into commands.
pub fn parse_commands(buffer: &str) -> Result<Vec<SExpr>, SmtError> {
    crate::sexpr::parse_all(buffer)
}

impl Server {
    pub fn new() -> Server {
        Server::default()
    }

    pub fn handle(&mut self, cmd: &SExpr) -> Reply {
        match self.dispatch(cmd) {
            Ok(reply) => reply,
            Err(e) => error_reply(e),
        }
    }

    fn dispatch(&mut self, cmd: &SExpr) -> Result<Reply, SmtError> {
        let items = cmd
            .list()
            .ok_or_else(|| SmtError::Parse(format!("expected a command, got `{cmd}`")))?;
        let head = items
            .first()
            .and_then(SExpr::atom)
            .ok_or_else(|| SmtError::Parse("command without a head symbol".into()))?;
        match head {
            "set-logic" | "set-option" | "set-info" | "echo" => Ok(Reply::Silent),
            "exit" => Ok(Reply::Exit),
            "reset" => {
                *self = Server::default();
                Ok(Reply::Silent)
            }
            "declare-fun" => {
                if items.len() != 4 || items[2].list().map(|l| l.len()) != Some(0) {
                    return Err(SmtError::Parse(format!("malformed declare-fun: {cmd}")));
                }
                let name = items[1]
                    .atom()
                    .ok_or_else(|| SmtError::Parse("declare-fun name".into()))?;
                self.declare(name, parse_sort(&items[3])?)?;
                Ok(Reply::Silent)
            }
            "declare-const" => {
                if items.len() != 3 {
                    return Err(SmtError::Parse(format!("malformed declare-const: {cmd}")));
                }
                let name = items[1]
                    .atom()
                    .ok_or_else(|| SmtError::Parse("declare-const name".into()))?;
                self.declare(name, parse_sort(&items[2])?)?;
                Ok(Reply::Silent)
            }
            "assert" => {
                if items.len() != 2 {
                    return Err(SmtError::Parse(format!("malformed assert: {cmd}")));
                }
                let lookup = |n: &str| self.decls.get(n).copied();
                let e = parse_expr(&items[1], &lookup)?;
                if !e.sort().is_bool() {
                    return Err(SmtError::Sort("assert expects a Bool term".into()));
                }
                self.assertions.push(e);
                self.last_model = None;
                Ok(Reply::Silent)
            }
            "push" => {
                let n = scope_count(items)?;
                for _ in 0..n {
                    self.scopes.push(Checkpoint {
                        declared: Vec::new(),
                        assertion_count: self.assertions.len(),
                    });
                }
                self.last_model = None;
                Ok(Reply::Silent)
            }
            "pop" => {
                let n = scope_count(items)?;
                for _ in 0..n {
                    let cp = self
                        .scopes
                        .pop()
                        .ok_or_else(|| SmtError::Parse("pop without matching push".into()))?;
                    self.assertions.truncate(cp.assertion_count);
                    for name in cp.declared {
                        self.decls.remove(&name);
                    }
                }
                self.last_model = None;
                Ok(Reply::Silent)
            }
            "check-sat" => {
                let verdict = self.check()?;
                Ok(Reply::Text(verdict.to_string()))
            }
            "get-value" => {
                let model = self
                    .last_model
                    .as_ref()
                    .ok_or_else(|| SmtError::Parse("model is not available".into()))?;
                let terms = items
                    .get(1)
                    .and_then(SExpr::list)
                    .ok_or_else(|| SmtError::Parse("get-value expects a term list".into()))?;
                let mut out = String::from("(");
                for (i, t) in terms.iter().enumerate() {
                    let lookup = |n: &str| self.decls.get(n).copied();
                    let e = parse_expr(t, &lookup)?;
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push('(');
                    out.push_str(&expr_to_smtlib(&e));
                    out.push(' ');
                    out.push_str(&print_value(&eval(&e, model))?);
                    out.push(')');
                }
                out.push(')');
                Ok(Reply::Text(out))
            }
            other => Err(SmtError::Unsupported(format!("command `{other}`"))),
        }
    }

    fn declare(&mut self, name: &str, sort: Sort) -> Result<(), SmtError> {
        if self.decls.contains_key(name) {
            return Err(SmtError::DuplicateVariable(name.to_string()));
        }
        self.decls.insert(name.to_string(), sort);
        if let Some(scope) = self.scopes.last_mut() {
            scope.declared.push(name.to_string());
        }
        self.last_model = None;
        Ok(())
    }

    fn check(&mut self) -> Result<SolverResult, SmtError> {
        let mut cs = ConstraintSet::new();
        for (name, sort) in &self.decls {
            cs.declare(name.clone(), *sort)?;
        }
        for a in &self.assertions {
            cs.assert(a.clone())?;
        }
        // The server itself imposes no budget; process-level timeouts are
        // the session client's job.
        let (verdict, model) =
            crate::solve::builtin_query(&cs, &[], Duration::from_secs(u64::MAX >> 1), true)
                .map_err(|e| SmtError::Unsupported(e.to_string()))?;
        self.last_model = if verdict == SolverResult::Sat {
            model
        } else {
            None
        };
        Ok(verdict)
    }
}

fn scope_count(items: &[SExpr]) -> Result<u32, SmtError> {
    match items.get(1) {
        None => Ok(1),
        Some(SExpr::Atom(n)) => n
            .parse()
            .map_err(|_| SmtError::Parse(format!("bad scope count `{n}`"))),
        Some(other) => Err(SmtError::Parse(format!("bad scope count `{other}`"))),
    }
}

fn print_value(v: &Value) -> Result<String, SmtError> {
    match v {
        Value::Bool(b) => Ok(if *b { "true".into() } else { "false".into() }),
        Value::Bits { value, width } => Ok(format!("(_ bv{value} {width})")),
        Value::Array(_) => Err(SmtError::Unsupported(
            "get-value on array terms".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_all;

    fn run(server: &mut Server, script: &str) -> Vec<String> {
        parse_all(script)
            .unwrap()
            .iter()
            .filter_map(|cmd| match server.handle(cmd) {
                Reply::Text(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn check_sat_and_get_value() {
        let mut s = Server::new();
        let replies = run(
            &mut s,
            "(set-logic QF_AUFBV)\n\
             (declare-fun x () (_ BitVec 8))\n\
             (assert (= (bvadd x (_ bv1 8)) (_ bv10 8)))\n\
             (check-sat)\n\
             (get-value (x))",
        );
        assert_eq!(replies[0], "sat");
        assert_eq!(replies[1], "((x (_ bv9 8)))");
    }

    #[test]
    fn push_pop_restores_state(){
        let mut s = Server::new();
        let replies = run(
            &mut s,
            "(declare-fun x () (_ BitVec 8))\n\
             (assert (bvult x (_ bv10 8)))\n\
             (push 1)\n\
             (assert (bvult (_ bv20 8) x))\n\
             (check-sat)\n\
             (pop 1)\n\
             (check-sat)",
        );
        assert_eq!(replies, vec!["unsat", "sat"]);
    }

    #[test]
    fn errors_are_reported_inline() {
        let mut s = Server::new();
        let replies = run(&mut s, "(assert (= y y))\n(frobnicate)");
        assert!(replies[0].starts_with("(error "));
        assert!(replies[1].starts_with("(error "));
    }

    #[test]
    fn get_value_without_model_errors() {
        let mut s = Server::new();
        let replies = run(
            &mut s,
            "(declare-fun x () (_ BitVec 8))\n(get-value (x))",
        );
        assert!(replies[0].starts_with("(error "));
    }
}
