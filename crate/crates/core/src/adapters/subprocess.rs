//! External systems driven over a one-line JSON protocol on stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Counting semaphore bounding the number of live child processes.
#[derive(Debug)]
struct Pool {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Pool);

impl Pool {
    fn new(size: usize) -> Self {
        Self {
            free: Mutex::new(size.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut free = self.0.free.lock().unwrap_or_else(|e| e.into_inner());
        *free += 1;
        self.0.cv.notify_one();
    }
}

/// Spawns one child per request; `{system_id}` in the command template is substituted.
#[derive(Debug, Clone)]
pub struct SubprocessAdapter {
    pub command: Vec<String>,
    pool: Arc<Pool>,
}

impl SubprocessAdapter {
    pub fn new(command: Vec<String>, max_children: usize) -> Result<Self> {
        if command.is_empty() || command[0].trim().is_empty() {
            return Err(Error::Config("subprocess command template is empty".into()));
        }
        Ok(Self {
            command,
            pool: Arc::new(Pool::new(max_children)),
        })
    }

    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, system_id: &str, request: &Req) -> Result<Resp> {
        let _permit = self.pool.acquire();
        let adapter_err = |status: Option<i32>, diagnostics: String| Error::Adapter {
            system: system_id.to_string(),
            status,
            diagnostics,
        };
        let argv: Vec<String> = self
            .command
            .iter()
            .map(|a| a.replace("{system_id}", system_id))
            .collect();
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| adapter_err(None, format!("spawn `{}`: {e}", argv[0])))?;

        let line = serde_json::to_string(request)?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            // a child that exits without reading surfaces below via its status
            let _ = writeln!(stdin, "{line}");
        }
        let mut reply = String::new();
        if let Some(out) = child.stdout.take() {
            BufReader::new(out)
                .read_line(&mut reply)
                .map_err(|e| adapter_err(None, format!("read stdout: {e}")))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| adapter_err(None, format!("wait: {e}")))?;
        if !output.status.success() {
            return Err(adapter_err(
                output.status.code(),
                String::from_utf8_lossy(&output.stderr).trim().to_string(),
            ));
        }
        serde_json::from_str(reply.trim()).map_err(|e| {
            adapter_err(
                output.status.code(),
                format!("unparseable reply `{}`: {e}", reply.trim()),
            )
        })
    }
}
