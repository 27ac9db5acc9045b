//! The `tsg` command line: run, check, dot, serve and recommend.
//!
//! Exit codes: 0 clean, 1 parse, validation or build failure, 2 runtime
//! failure (node errors, bad flags, unknown dump targets, bind errors).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::api::{self, EngineHandle};
use crate::engine::{ClockMode, Engine, EngineOptions, EventKind, RecordKind};
use crate::graph::{build_graph, export_dot, Tsg};
use crate::lang::{has_errors, parse_document, validate_document};
use crate::nodes::{NodeRegistry, SUMMARY_CLASS};
use crate::recommend::{index_with_cache, recommend_nodes, repository_files, IndexCache};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// How long a run without a duration waits for running tools.
const QUIESCE_LIMIT: Duration = Duration::from_secs(60);

#[derive(Debug, Parser)]
#[command(name = "tsg", version, about = "Build, run and inspect troubleshooting graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a graph headless and print the decision summary.
    Run {
        file: PathBuf,
        /// Answer tool nodes from `<Class>.<instance>.txt` transcripts.
        #[arg(long)]
        stub_dir: Option<PathBuf>,
        /// Comma-separated virtual times in seconds, e.g. "0,5,10".
        #[arg(long, value_name = "SCHEDULE")]
        virtual_clock: Option<String>,
        /// Seconds of wall-clock time to run for.
        #[arg(long)]
        duration: Option<f64>,
        /// Print every output buffer of this node; repeatable.
        #[arg(long, value_name = "NODE")]
        dump: Vec<String>,
        /// Also print the event log as JSON lines.
        #[arg(long)]
        events: bool,
    },
    /// Parse and validate, printing diagnostics.
    Check { file: PathBuf },
    /// Print the graph in Graphviz dot syntax.
    Dot { file: PathBuf },
    /// Run a graph behind the HTTP control API until interrupted.
    Serve {
        file: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        #[arg(long)]
        stub_dir: Option<PathBuf>,
    },
    /// Suggest node classes popular in a repository of graphs.
    Recommend {
        file: PathBuf,
        #[arg(long)]
        repo: PathBuf,
        #[arg(short = 'k', default_value_t = 5)]
        k: usize,
        /// Index cache keyed by file content hash.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

/// Parses `t0,t1,...` (seconds) into milliseconds.
pub fn parse_schedule(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let secs: f64 = p.parse().map_err(|_| format!("bad schedule entry '{p}'"))?;
            if secs < 0.0 || !secs.is_finite() {
                return Err(format!("bad schedule entry '{p}'"));
            }
            Ok((secs * 1000.0).round() as u64)
        })
        .collect()
}

fn load(file: &Path, registry: &NodeRegistry, err: &mut dyn Write) -> Result<Tsg, i32> {
    let text = std::fs::read_to_string(file).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", file.display());
        EXIT_INPUT
    })?;
    let name = file.display().to_string();
    let doc = parse_document(&text, &name).map_err(|e| {
        let _ = writeln!(err, "{name}:{e}");
        EXIT_INPUT
    })?;
    let diags = validate_document(&doc, registry);
    for d in &diags {
        let _ = writeln!(err, "{name}:{d}");
    }
    if has_errors(&diags) {
        return Err(EXIT_INPUT);
    }
    build_graph(&doc, registry).map_err(|e| {
        let _ = writeln!(err, "{name}: {e}");
        EXIT_INPUT
    })
}

fn print_dump(engine: &Engine, node: &str, out: &mut dyn Write) {
    let Some(inst) = engine.tsg().node(node) else {
        return;
    };
    for o in 0..inst.output_count {
        let id = crate::graph::buffer_id(node, o);
        let _ = writeln!(out, "== {id} ==");
        if let Some(b) = engine.buffer(&id) {
            for r in b.records() {
                match r.kind {
                    RecordKind::Exit => {
                        let _ = writeln!(out, "[{}]", r.text);
                    }
                    RecordKind::Data => {
                        let _ = write!(out, "{}", r.text);
                        if !r.text.ends_with('\n') {
                            let _ = writeln!(out);
                        }
                    }
                }
            }
        }
    }
}

fn print_summaries(engine: &Engine, out: &mut dyn Write) {
    for n in engine.tsg().nodes.values().filter(|n| n.class == SUMMARY_CLASS) {
        let _ = writeln!(out, "== {} ==", n.id);
        let table = engine.display(&n.id).unwrap_or_default();
        let _ = write!(out, "{table}");
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    file: &Path,
    stub_dir: Option<PathBuf>,
    schedule: Option<String>,
    duration: Option<f64>,
    dumps: &[String],
    events: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = match load(file, &registry, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    for d in dumps {
        if tsg.node(d).is_none() {
            let _ = writeln!(err, "--dump: unknown node '{d}'");
            return EXIT_RUNTIME;
        }
    }
    let schedule = match schedule.as_deref().map(parse_schedule).transpose() {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "--virtual-clock: {e}");
            return EXIT_RUNTIME;
        }
    };
    if let Some(d) = duration {
        if !(d >= 0.0) || !d.is_finite() {
            let _ = writeln!(err, "--duration must be a non-negative number of seconds");
            return EXIT_RUNTIME;
        }
    }
    let mut opts = EngineOptions {
        clock: if duration.is_some() && schedule.is_none() {
            ClockMode::Real
        } else {
            ClockMode::Virtual
        },
        ..EngineOptions::default()
    };
    opts.stub_dir = stub_dir;
    let mut engine = Engine::start(tsg, registry, opts);
    match (&schedule, duration) {
        (Some(times), _) => {
            engine.run_until_quiescent(QUIESCE_LIMIT);
            for t in times {
                engine.advance_to(*t);
                engine.run_until_quiescent(QUIESCE_LIMIT);
            }
        }
        (None, Some(d)) => engine.run_for(Duration::from_secs_f64(d)),
        (None, None) => engine.run_until_quiescent(QUIESCE_LIMIT),
    }
    for d in dumps {
        print_dump(&engine, d, out);
    }
    print_summaries(&engine, out);
    let report = engine.stop();
    if events {
        let _ = write!(out, "{}", crate::engine::events_to_jsonl(&report.events));
    }
    for e in report.events.iter().filter(|e| e.kind == EventKind::NodeError) {
        let _ = writeln!(
            err,
            "node error: {}: {}",
            e.node.as_deref().unwrap_or("-"),
            e.detail.as_deref().unwrap_or("")
        );
    }
    if report.has_errors() {
        EXIT_RUNTIME
    } else {
        EXIT_OK
    }
}

fn cmd_check(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", file.display());
            return EXIT_INPUT;
        }
    };
    let name = file.display().to_string();
    let doc = match parse_document(&text, &name) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(out, "{name}:{e}");
            return EXIT_INPUT;
        }
    };
    let diags = validate_document(&doc, &NodeRegistry::builtin());
    for d in &diags {
        let _ = writeln!(out, "{name}:{d}");
    }
    if has_errors(&diags) {
        EXIT_INPUT
    } else {
        EXIT_OK
    }
}

fn cmd_dot(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load(file, &NodeRegistry::builtin(), err) {
        Ok(tsg) => {
            let _ = write!(out, "{}", export_dot(&tsg));
            EXIT_OK
        }
        Err(code) => code,
    }
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = match signal(SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
                return;
            }
        };
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

fn cmd_serve(file: &Path, listen: &str, stub_dir: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let registry = Arc::new(NodeRegistry::builtin());
    let tsg = match load(file, &registry, err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let listener = match std::net::TcpListener::bind(listen) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "cannot listen on '{listen}': {e}");
            return EXIT_RUNTIME;
        }
    };
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_RUNTIME;
        }
    };
    let opts = EngineOptions {
        clock: ClockMode::Real,
        stub_dir,
        ..EngineOptions::default()
    };
    let handle = Arc::new(EngineHandle::spawn(
        Engine::start(tsg, registry, opts),
        Some(file.to_path_buf()),
    ));
    let addr = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();
    let _ = writeln!(out, "listening on http://{addr}/api/v1");
    let _ = out.flush();
    let app = api::router(Some(handle.clone()));
    let served = rt.block_on(async move {
        listener.set_nonblocking(true)?;
        let listener = tokio::net::TcpListener::from_std(listener)?;
        axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await
    });
    drop(rt);
    let report = match Arc::try_unwrap(handle) {
        Ok(h) => h.shutdown(),
        Err(h) => h.call_blocking(|e| e.stop()).unwrap_or_else(|_| crate::engine::EngineReport {
            events: Vec::new(),
            buffer_lengths: Default::default(),
        }),
    };
    let _ = writeln!(out, "stopped after {} events", report.events.len());
    match served {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_RUNTIME
        }
    }
}

fn cmd_recommend(
    file: &Path,
    repo: &Path,
    k: usize,
    cache: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if k == 0 {
        let _ = writeln!(err, "-k must be at least 1");
        return EXIT_RUNTIME;
    }
    let tsg = match load(file, &NodeRegistry::builtin(), err) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let mut c = cache.as_deref().map(IndexCache::load).unwrap_or_default();
    let index = index_with_cache(&repository_files(repo), &mut c);
    if let Some(p) = &cache {
        if let Err(e) = c.save(p) {
            let _ = writeln!(err, "cannot write cache {}: {e}", p.display());
        }
    }
    for f in index.files.iter().filter(|f| !f.ok) {
        let _ = writeln!(err, "skipped unparseable {}", f.path.display());
    }
    for (class, n) in recommend_nodes(&index, &tsg, k) {
        let _ = writeln!(out, "{class} {n}");
    }
    EXIT_OK
}

/// Entry point with injectable streams; returns the process exit code.
pub fn main_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_RUNTIME } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Run {
            file,
            stub_dir,
            virtual_clock,
            duration,
            dump,
            events,
        } => cmd_run(&file, stub_dir, virtual_clock, duration, &dump, events, out, err),
        Command::Check { file } => cmd_check(&file, out, err),
        Command::Dot { file } => cmd_dot(&file, out, err),
        Command::Serve { file, listen, stub_dir } => cmd_serve(&file, &listen, stub_dir, out, err),
        Command::Recommend { file, repo, k, cache } => cmd_recommend(&file, &repo, k, cache, out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_parse() {
        assert_eq!(parse_schedule("0, 5,12.5").unwrap(), vec![0, 5000, 12500]);
        assert!(parse_schedule("x").is_err());
        assert!(parse_schedule("-1").is_err());
    }
}
