// SPDX-License-Identifier: Apache-2.0

//! Child solver process speaking SMT-LIB2 over stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::SolverConfig;

const SENTINEL: &str = "cse-done";

pub(crate) struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    pub fn spawn(cfg: &SolverConfig) -> Result<Session, String> {
        let mut cmd = Command::new(&cfg.path);
        cmd.args(&cfg.args);
        if cfg.is_z3() {
            cmd.arg(format!("-t:{}", cfg.timeout_ms));
        }
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| format!("cannot start solver `{}`: {e}", cfg.path.display()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Session {
            child,
            stdin,
            lines: rx,
        })
    }

    /// Sends `script` and collects every output line it produces. Fails on
    /// I/O errors, process exit or when `limit` elapses.
    pub fn run(&mut self, script: &str, limit: Duration) -> Result<Vec<String>, String> {
        let deadline = Instant::now() + limit;
        self.stdin
            .write_all(script.as_bytes())
            .and_then(|_| writeln!(self.stdin, "(echo \"{SENTINEL}\")"))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("write to solver failed: {e}"))?;
        let mut out = Vec::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(l) if l.trim() == SENTINEL => return Ok(out),
                Ok(l) => out.push(l),
                Err(RecvTimeoutError::Timeout) => return Err("solver timed out".into()),
                Err(RecvTimeoutError::Disconnected) => return Err("solver exited".into()),
            }
        }
    }

    /// Clears all declarations and assertions for the next script.
    pub fn reset(&mut self) -> Result<(), String> {
        writeln!(self.stdin, "(reset)")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("write to solver failed: {e}"))
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Minimal s-expression tree for reading `get-value` responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn parse(text: &str) -> Option<Sexp> {
        let mut tokens = tokenize(text).into_iter().peekable();
        let out = parse_one(&mut tokens)?;
        tokens.peek().is_none().then_some(out)
    }

    /// Integer value of a numeral or `(- numeral)`.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sexp::Atom(a) => a.parse().ok(),
            Sexp::List(xs) => match xs.as_slice() {
                [Sexp::Atom(m), v] if m == "-" => v.as_int()?.checked_neg(),
                _ => None,
            },
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            '|' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == '|' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_one(tokens: &mut std::iter::Peekable<std::vec::IntoIter<String>>) -> Option<Sexp> {
    let t = tokens.next()?;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                if tokens.peek()? == ")" {
                    tokens.next();
                    return Some(Sexp::List(items));
                }
                items.push(parse_one(tokens)?);
            }
        }
        ")" => None,
        _ => Some(Sexp::Atom(t)),
    }
}
