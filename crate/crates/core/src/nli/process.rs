//! Child-process backend speaking the line protocol over stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::{GatewayError, Handshake, Scorer, WireRequest, WireResponse};

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn read_line(&self, timeout: Duration) -> Result<String, GatewayError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(GatewayError::Unreachable(format!("reading backend output: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(GatewayError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(GatewayError::Unreachable("backend closed its output".into())),
        }
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Spawns `command` and talks to it one line per request.
///
/// A dead or wedged child is discarded and respawned on the next call, so
/// gateway retries get a fresh process.
pub struct ProcessScorer {
    command: Vec<String>,
    timeout: Duration,
    concurrent: bool,
    state: Mutex<Option<Running>>,
}

impl ProcessScorer {
    pub fn spawn(command: Vec<String>, timeout: Duration) -> Result<Self, GatewayError> {
        let (running, handshake) = start(&command, timeout)?;
        Ok(Self {
            command,
            timeout,
            concurrent: handshake.concurrent,
            state: Mutex::new(Some(running)),
        })
    }

    pub fn handshake_concurrent(&self) -> bool {
        self.concurrent
    }

    fn exchange(
        running: &mut Running,
        requests: &[WireRequest],
        timeout: Duration,
    ) -> Result<Vec<WireResponse>, GatewayError> {
        let mut payload = Vec::new();
        for req in requests {
            serde_json::to_writer(&mut payload, req).expect("request serializes");
            payload.push(b'\n');
        }
        running
            .stdin
            .write_all(&payload)
            .and_then(|_| running.stdin.flush())
            .map_err(|e| GatewayError::Unreachable(format!("writing to backend: {e}")))?;
        requests
            .iter()
            .map(|_| running.read_line(timeout).and_then(|line| WireResponse::parse(&line)))
            .collect()
    }
}

fn start(command: &[String], timeout: Duration) -> Result<(Running, Handshake), GatewayError> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| GatewayError::Unreachable("empty backend command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| GatewayError::Unreachable(format!("spawning {program:?}: {e}")))?;
    let stdin = child.stdin.take().expect("stdin piped");
    let stdout = child.stdout.take().expect("stdout piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    let running = Running {
        child,
        stdin,
        lines: rx,
    };
    let handshake = Handshake::parse(&running.read_line(timeout)?)?;
    Ok((running, handshake))
}

impl Scorer for ProcessScorer {
    fn concurrent(&self) -> bool {
        // one pipe pair per child: calls are serialized by the state lock
        // regardless, so advertising concurrency only lets batches queue up
        self.concurrent
    }

    fn score(&self, requests: &[WireRequest]) -> Result<Vec<WireResponse>, GatewayError> {
        let mut state = self.state.lock().expect("process state poisoned");
        if state.is_none() {
            *state = Some(start(&self.command, self.timeout)?.0);
        }
        let running = state.as_mut().expect("just started");
        let result = Self::exchange(running, requests, self.timeout);
        if matches!(&result, Err(e) if e.is_transient()) {
            *state = None;
        }
        result
    }
}
