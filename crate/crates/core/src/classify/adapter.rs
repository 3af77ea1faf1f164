//! External classifier process speaking line-delimited JSON.
//!
//! Request per line: `{"id": n, "text": "..."}`. Reply per line, in request
//! order: `{"id": n, "decision": bool, "rationale": bool}`. Standard input is
//! closed after the last request; the process must then exit with status 0.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{ClassifyError, LabelVerdict};
use crate::preprocess::SentenceUnit;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Serialize)]
struct Request<'a> {
    id: usize,
    text: &'a str,
}

#[derive(Deserialize)]
struct Reply {
    id: usize,
    decision: bool,
    rationale: bool,
}

#[derive(Debug, Clone)]
pub struct AdapterClassifier {
    command: String,
    argv: Vec<String>,
    timeout: Duration,
}

impl AdapterClassifier {
    /// `command` is split with shell quoting rules; no shell is involved.
    pub fn new(command: &str) -> Result<Self, ClassifyError> {
        let argv = shell_words::split(command).map_err(|e| ClassifyError::AdapterUnavailable {
            command: command.to_string(),
            reason: e.to_string(),
        })?;
        if argv.is_empty() {
            return Err(ClassifyError::AdapterUnavailable {
                command: command.to_string(),
                reason: "empty command".into(),
            });
        }
        Ok(Self {
            command: command.to_string(),
            argv,
            timeout: DEFAULT_TIMEOUT,
        })
    }

    /// Per-sentence reply deadline.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn program(&self) -> &str {
        &self.argv[0]
    }

    /// Checks that the program resolves to an existing file, without running it.
    pub fn preflight(&self) -> Result<(), ClassifyError> {
        if resolve_program(self.program()).is_some() {
            Ok(())
        } else {
            Err(ClassifyError::AdapterUnavailable {
                command: self.command.clone(),
                reason: format!("program `{}` not found", self.program()),
            })
        }
    }

    pub fn classify_units(&self, units: &[SentenceUnit]) -> Result<Vec<LabelVerdict>, ClassifyError> {
        if units.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ClassifyError::AdapterUnavailable {
                command: self.command.clone(),
                reason: e.to_string(),
            })?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let requests: Vec<String> = units
            .iter()
            .enumerate()
            .map(|(id, u)| serde_json::to_string(&Request { id, text: &u.text }).unwrap())
            .collect();
        let writer = thread::spawn(move || {
            for line in requests {
                if writeln!(stdin, "{line}").is_err() {
                    return;
                }
            }
            let _ = stdin.flush();
        });

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let result = self.collect_replies(&mut child, &rx, units.len());
        drop(rx);
        if result.is_err() {
            let _ = child.kill();
            let _ = child.wait();
            // Grandchildren may still hold the pipes open; the threads end
            // when those close, so they are detached rather than joined.
            return result;
        }
        let _ = writer.join();
        let _ = reader.join();
        result
    }

    fn collect_replies(
        &self,
        child: &mut Child,
        rx: &mpsc::Receiver<std::io::Result<String>>,
        expected: usize,
    ) -> Result<Vec<LabelVerdict>, ClassifyError> {
        let mut verdicts = Vec::with_capacity(expected);
        while verdicts.len() < expected {
            let id = verdicts.len();
            let line = match rx.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    return Err(ClassifyError::AdapterProtocol {
                        reason: format!("unreadable reply to request {id}: {e}"),
                        partial: verdicts,
                    })
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ClassifyError::Timeout {
                        index: id,
                        partial: verdicts,
                    })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    let status = child.wait().ok().and_then(|s| s.code());
                    return Err(ClassifyError::AdapterCrashed {
                        status,
                        partial: verdicts,
                    });
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let reply: Reply = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    return Err(ClassifyError::AdapterProtocol {
                        reason: format!("reply to request {id} is not valid: {e}"),
                        partial: verdicts,
                    })
                }
            };
            if reply.id != id {
                return Err(ClassifyError::AdapterProtocol {
                    reason: format!("expected reply id {id}, got {}", reply.id),
                    partial: verdicts,
                });
            }
            verdicts.push(LabelVerdict {
                decision: reply.decision,
                rationale: reply.rationale,
            });
        }

        let deadline = Instant::now() + self.timeout;
        loop {
            match child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(verdicts),
                Ok(Some(status)) => {
                    return Err(ClassifyError::AdapterCrashed {
                        status: status.code(),
                        partial: verdicts,
                    })
                }
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => {
                    return Err(ClassifyError::Timeout {
                        index: expected,
                        partial: verdicts,
                    })
                }
                Err(e) => {
                    return Err(ClassifyError::AdapterProtocol {
                        reason: format!("cannot wait for adapter: {e}"),
                        partial: verdicts,
                    })
                }
            }
        }
    }
}

fn resolve_program(program: &str) -> Option<std::path::PathBuf> {
    let path = std::path::Path::new(program);
    if path.components().count() > 1 {
        return path.is_file().then(|| path.to_path_buf());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(program))
            .find(|p| p.is_file())
    })
}
