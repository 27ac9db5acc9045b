use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::Sender;
use std::sync::{Arc, Mutex};

/// Post-processing of a finished run: full stdout in, one record out.
pub type Extractor = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Builds the command that runs `argv`, possibly on another machine.
pub trait Transport: Send + Sync {
    fn command(&self, argv: &[String]) -> Command;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocalTransport;

impl Transport for LocalTransport {
    fn command(&self, argv: &[String]) -> Command {
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..]);
        cmd
    }
}

/// Runs the command through `ssh <host>`.
#[derive(Debug, Clone)]
pub struct SshTransport {
    pub host: String,
    pub ssh: String,
}

impl SshTransport {
    pub fn new(host: &str) -> Self {
        SshTransport {
            host: host.to_string(),
            ssh: "ssh".to_string(),
        }
    }
}

impl Transport for SshTransport {
    fn command(&self, argv: &[String]) -> Command {
        let mut cmd = Command::new(&self.ssh);
        cmd.arg("-o").arg("BatchMode=yes").arg(&self.host).arg("--").args(argv);
        cmd
    }
}

/// Runs locally and remembers what it was asked to run.
#[derive(Debug, Clone, Default)]
pub struct LoopbackTransport {
    pub calls: Arc<Mutex<Vec<Vec<String>>>>,
}

impl Transport for LoopbackTransport {
    fn command(&self, argv: &[String]) -> Command {
        self.calls.lock().unwrap().push(argv.to_vec());
        LocalTransport.command(argv)
    }
}

/// Transports keyed by host name. Hosts without an entry use ssh; `nil`,
/// `localhost` and the empty host run locally.
#[derive(Clone, Default)]
pub struct TransportTable {
    hosts: HashMap<String, Arc<dyn Transport>>,
}

impl fmt::Debug for TransportTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut hosts: Vec<&String> = self.hosts.keys().collect();
        hosts.sort();
        f.debug_struct("TransportTable").field("hosts", &hosts).finish()
    }
}

impl TransportTable {
    pub fn insert(&mut self, host: &str, transport: Arc<dyn Transport>) {
        self.hosts.insert(host.to_string(), transport);
    }

    pub fn for_host(&self, host: Option<&str>) -> Arc<dyn Transport> {
        match host {
            None | Some("") | Some("localhost") | Some("nil") => self
                .hosts
                .get("localhost")
                .cloned()
                .unwrap_or_else(|| Arc::new(LocalTransport)),
            Some(h) => self
                .hosts
                .get(h)
                .cloned()
                .unwrap_or_else(|| Arc::new(SshTransport::new(h))),
        }
    }
}

/// What a node asks the engine to run.
#[derive(Clone)]
pub struct ProcessRequest {
    pub argv: Vec<String>,
    pub host: Option<String>,
    /// Output receiving stdout and the exit record.
    pub output: usize,
    /// Output receiving the extractor result, if any.
    pub extract: Option<(usize, Extractor)>,
}

impl fmt::Debug for ProcessRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessRequest")
            .field("argv", &self.argv)
            .field("host", &self.host)
            .field("output", &self.output)
            .field("extract", &self.extract.as_ref().map(|(o, _)| *o))
            .finish()
    }
}

pub(crate) enum External {
    Line { token: u64, text: String },
    Eof { token: u64 },
}

pub(crate) struct Running {
    pub node: String,
    pub child: Child,
    pub request: ProcessRequest,
    pub stdout: String,
    pub first_seq: u64,
}

pub(crate) fn spawn(
    transport: &dyn Transport,
    request: &ProcessRequest,
    token: u64,
    tx: Sender<External>,
) -> std::io::Result<Child> {
    let mut cmd = transport.command(&request.argv);
    cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::null());
    let mut child = cmd.spawn()?;
    let stdout = child.stdout.take().expect("piped stdout");
    std::thread::spawn(move || {
        let mut reader = BufReader::new(stdout);
        let mut line = String::new();
        loop {
            line.clear();
            match reader.read_line(&mut line) {
                Ok(0) | Err(_) => break,
                Ok(_) => {
                    if tx
                        .send(External::Line {
                            token,
                            text: line.clone(),
                        })
                        .is_err()
                    {
                        return;
                    }
                }
            }
        }
        let _ = tx.send(External::Eof { token });
    });
    Ok(child)
}

/// Canned tool output for tests and offline scenarios: a directory of
/// `<Class>.<instance>.txt` transcripts with `<Class>.default.txt` as the
/// fallback. A sibling `.exit` file holds the exit code (default 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubBackend {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubReply {
    pub stdout: String,
    pub code: i32,
}

impl StubBackend {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        StubBackend {
            dir: dir.as_ref().to_path_buf(),
        }
    }

    pub fn reply(&self, class: &str, instance: &str) -> Option<StubReply> {
        for case in [instance, "default"] {
            let path = self.dir.join(format!("{class}.{case}.txt"));
            if let Ok(stdout) = std::fs::read_to_string(&path) {
                let code = std::fs::read_to_string(path.with_extension("exit"))
                    .ok()
                    .and_then(|s| s.trim().parse().ok())
                    .unwrap_or(0);
                return Some(StubReply { stdout, code });
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_hosts_resolve_to_local_transport() {
        let mut table = TransportTable::default();
        let loopback = LoopbackTransport::default();
        table.insert("lab", Arc::new(loopback.clone()));
        let cmd = table.for_host(Some("localhost")).command(&["echo".into(), "x".into()]);
        assert_eq!(cmd.get_program(), "echo");
        let cmd = table.for_host(Some("far")).command(&["echo".into()]);
        assert_eq!(cmd.get_program(), "ssh");
        table.for_host(Some("lab")).command(&["true".into()]);
        assert_eq!(loopback.calls.lock().unwrap().len(), 1);
    }

    #[test]
    fn stub_falls_back_to_default_case() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("Ping.default.txt"), "pong\n").unwrap();
        std::fs::write(dir.path().join("Ping.p2.txt"), "").unwrap();
        std::fs::write(dir.path().join("Ping.p2.exit"), "1\n").unwrap();
        let stub = StubBackend::new(dir.path());
        assert_eq!(stub.reply("Ping", "p1").unwrap().stdout, "pong\n");
        assert_eq!(stub.reply("Ping", "p2").unwrap(), StubReply { stdout: String::new(), code: 1 });
        assert!(stub.reply("Arp", "a").is_none());
    }
}
