//! SMT-LIB 2 solver process: reads commands from stdin, answers on stdout.
//! Speaks the QF_AUFBV subset needed by the exploration engine and decides
//! queries with the built-in bit-blasting pipeline.

use roam_smt::server::{Reply, Server};
use roam_smt::SExpr;
use std::io::{BufRead, Write};

fn main() {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut server = Server::new();
    let mut buffer = String::new();

    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        buffer.push_str(&line);
        buffer.push('\n');
        if !roam_smt::server::buffer_complete(&buffer) {
            continue;
        }
        let commands: Vec<SExpr> = match roam_smt::server::parse_commands(&buffer) {
            Ok(cmds) => cmds,
            Err(e) => {
                let msg = e.to_string().replace('"', "'");
                let _ = writeln!(out, "(error \"{msg}\")");
                let _ = out.flush();
                buffer.clear();
                continue;
            }
        };
        buffer.clear();
        for cmd in &commands {
            match server.handle(cmd) {
                Reply::Silent => {}
                Reply::Text(t) => {
                    let _ = writeln!(out, "{t}");
                    let _ = out.flush();
                }
                Reply::Exit => return,
            }
        }
    }
}
