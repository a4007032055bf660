//! A session with an external SMT solver speaking SMT-LIB 2 over stdio.
//!
//! The child process is reused across queries with `(reset)` between them,
//! which keeps per-query cost to a few milliseconds.

use std::io::{BufReader, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use thiserror::Error;

use super::encode::interp::StatVal;
use super::smtlib::{decode_model, ModelError, Query};

/// Environment variable overriding the default solver binary.
pub const SOLVER_ENV: &str = "MANIVET_SOLVER";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("failed to start solver {path:?}: {source}")]
    Spawn {
        path: String,
        source: std::io::Error,
    },
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited unexpectedly")]
    Died,
    #[error("solver reported: {0}")]
    Reported(String),
    #[error("unexpected solver output {0:?}")]
    Unexpected(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Solver executable; defaults to `$MANIVET_SOLVER` or `z3`.
    pub path: String,
    pub args: Vec<String>,
    /// Per-query soft timeout, enforced by the solver itself.
    pub timeout_ms: Option<u64>,
    /// When set, each query is also written to this directory as a
    /// standalone `query-NNN.smt2` script, numbered in issue order.
    pub transcript_dir: Option<std::path::PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            path: std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string()),
            args: vec!["-in".to_string(), "-smt2".to_string()],
            timeout_ms: Some(30_000),
            transcript_dir: None,
        }
    }
}

/// The outcome of one satisfiability query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryOutcome {
    Unsat,
    /// Satisfiable, with the model's value for each query variable.
    Sat(Vec<StatVal>),
    /// The solver gave up (timeout or incompleteness).
    Unknown,
}

pub struct SolverSession {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    config: SolverConfig,
    queries: u64,
}

impl SolverSession {
    pub fn new(config: SolverConfig) -> Result<SolverSession, SolverError> {
        let mut child = Command::new(&config.path)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn {
                path: config.path.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SolverSession {
            child,
            stdin,
            stdout,
            config,
            queries: 0,
        })
    }

    /// Number of queries issued on this session.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Runs one query: reset, declare, assert, check, and extract a model
    /// when satisfiable.
    pub fn query(&mut self, q: &Query) -> Result<QueryOutcome, SolverError> {
        if let Some(dir) = &self.config.transcript_dir {
            let file = dir.join(format!("query-{:03}.smt2", self.queries));
            std::fs::write(file, q.standalone_script())?;
        }
        self.queries += 1;
        let mut script = String::from("(reset)\n(set-option :produce-models true)\n");
        if let Some(ms) = self.config.timeout_ms {
            script.push_str(&format!("(set-option :timeout {ms})\n"));
        }
        script.push_str(&q.preamble);
        script.push_str("(check-sat)\n");
        self.stdin.write_all(script.as_bytes())?;
        self.stdin.flush()?;

        match self.read_response()?.as_str() {
            "unsat" => Ok(QueryOutcome::Unsat),
            "unknown" => Ok(QueryOutcome::Unknown),
            "sat" => {
                // A query without variables (two closed expressions) has
                // the empty filesystem as its only model.
                if q.var_names.is_empty() {
                    return Ok(QueryOutcome::Sat(Default::default()));
                }
                let cmd = format!("(get-value ({}))\n", q.var_names.join(" "));
                self.stdin.write_all(cmd.as_bytes())?;
                self.stdin.flush()?;
                let model = self.read_response()?;
                Ok(QueryOutcome::Sat(decode_model(&model, &q.var_names)?))
            }
            other => Err(SolverError::Unexpected(other.to_string())),
        }
    }

    /// Reads one complete response: a bare atom line or a balanced
    /// s-expression (possibly spanning lines). `(error ...)` responses are
    /// surfaced as [`SolverError::Reported`].
    fn read_response(&mut self) -> Result<String, SolverError> {
        let mut out = String::new();
        let mut depth: i32 = 0;
        let mut started = false;
        let mut byte = [0u8; 1];
        loop {
            let n = self.stdout.read(&mut byte)?;
            if n == 0 {
                return Err(SolverError::Died);
            }
            let c = byte[0] as char;
            if !started {
                if c.is_whitespace() {
                    continue;
                }
                started = true;
            }
            out.push(c);
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                '\n' if depth == 0 => {
                    out.pop();
                    break;
                }
                _ => {}
            }
        }
        let out = out.trim().to_string();
        if out.starts_with("(error") {
            return Err(SolverError::Reported(out));
        }
        Ok(out)
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
