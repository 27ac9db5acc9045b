//! Node life cycles, buffers and the FIFO scheduler.
//!
//! An output change appends every node linked to that output by an input
//! edge to the back of the queue; the scheduler always runs the node at the
//! front. Config links are read when their destination next runs and never
//! enqueue it.

mod buffer;
mod context;
mod event;
mod process;

use std::any::Any;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::Serialize;

pub use buffer::{Buffer, BufferRecord, Cursor, Origin, RecordKind};
pub use context::{NodeContext, Phase};
pub use event::{events_to_jsonl, EngineEvent, EventKind};
pub use process::{
    Extractor, LocalTransport, LoopbackTransport, ProcessRequest, SshTransport, StubBackend, StubReply,
    Transport, TransportTable,
};

use crate::graph::{
    buffer_id, BuildError, Edge, EdgeSource, EdgeTarget, LifecycleState, Tsg,
};
use crate::lang::ConfigValue;
use crate::nodes::{NodeError, NodeRegistry, VIEW_CLASS};
use context::{Effects, InputLink};
use process::{External, Running};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    /// Time only moves through [`Engine::advance_to`].
    Virtual,
    Real,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub clock: ClockMode,
    /// Skip enqueueing a node that is already waiting in the queue.
    pub coalesce: bool,
    /// Executions allowed per drain of the queue.
    pub budget: usize,
    pub stub_dir: Option<PathBuf>,
    pub transports: TransportTable,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            clock: ClockMode::Virtual,
            coalesce: false,
            budget: DEFAULT_BUDGET,
            stub_dir: None,
            transports: TransportTable::default(),
        }
    }
}

impl EngineOptions {
    pub fn with_stub_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.stub_dir = Some(dir.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown buffer '{0}'")]
    UnknownBuffer(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("engine stopped")]
    Stopped,
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngineReport {
    pub events: Vec<EngineEvent>,
    pub buffer_lengths: BTreeMap<String, u64>,
}

impl EngineReport {
    pub fn has_errors(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::NodeError)
    }
}

#[derive(Default)]
struct Slot {
    state: Option<Box<dyn Any + Send>>,
    init_ok: bool,
    display: Option<String>,
}

struct Timer {
    node: String,
    period_ms: u64,
    next_due: u64,
}

pub type Listener = Box<dyn FnMut(&EngineEvent) + Send>;

pub struct Engine {
    tsg: Tsg,
    registry: Arc<NodeRegistry>,
    opts: EngineOptions,
    stub: Option<StubBackend>,
    buffers: IndexMap<String, Buffer>,
    cursors: HashMap<String, Cursor>,
    slots: HashMap<String, Slot>,
    queue: VecDeque<String>,
    log: Vec<EngineEvent>,
    listeners: Vec<Listener>,
    timers: Vec<Timer>,
    started: Instant,
    virtual_ms: u64,
    init_order: Vec<String>,
    processes: BTreeMap<u64, Running>,
    next_token: u64,
    tx: Sender<External>,
    rx: Receiver<External>,
    report: Option<EngineReport>,
}

impl Engine {
    /// Creates buffers, runs every init callback in node order and queues
    /// input-less autostart nodes. Nothing executes until the queue is
    /// drained.
    pub fn start(tsg: Tsg, registry: Arc<NodeRegistry>, opts: EngineOptions) -> Engine {
        let (tx, rx) = mpsc::channel();
        let stub = opts.stub_dir.as_ref().map(StubBackend::new);
        let mut engine = Engine {
            tsg,
            registry,
            opts,
            stub,
            buffers: IndexMap::new(),
            cursors: HashMap::new(),
            slots: HashMap::new(),
            queue: VecDeque::new(),
            log: Vec::new(),
            listeners: Vec::new(),
            timers: Vec::new(),
            started: Instant::now(),
            virtual_ms: 0,
            init_order: Vec::new(),
            processes: BTreeMap::new(),
            next_token: 0,
            tx,
            rx,
            report: None,
        };
        for b in engine.tsg.output_buffers() {
            let (node, out) = b.rsplit_once(':').expect("buffer ids carry an output");
            engine
                .buffers
                .insert(b.clone(), Buffer::new(node, out.parse().expect("numeric output")));
        }
        let ids: Vec<String> = engine.tsg.nodes.keys().cloned().collect();
        for id in &ids {
            engine.slots.insert(id.clone(), Slot::default());
            let result = engine.run_callback(id, Phase::Init);
            let ok = result.is_ok();
            engine.slots.get_mut(id).unwrap().init_ok = ok;
            engine.init_order.push(id.clone());
            engine.tsg.set_state(id, LifecycleState::Initialized);
            engine.emit(EventKind::Lifecycle, Some(id), None, None, vec![], Some("init".into()));
            if let Err(e) = result {
                engine.emit(EventKind::NodeError, Some(id), None, None, vec![], Some(format!("init: {e}")));
            }
        }
        let mut autostart = Vec::new();
        for id in &ids {
            engine.tsg.set_state(id, LifecycleState::Running);
            let node = &engine.tsg.nodes[id];
            let spec = engine.registry.get(&node.class);
            let has_inputs = engine
                .tsg
                .edges
                .iter()
                .any(|e| e.dst.node() == id && matches!(e.dst, EdgeTarget::Input { .. }));
            if spec.is_some_and(|s| s.autostart) && !has_inputs && engine.slots[id].init_ok {
                autostart.push(id.clone());
            }
        }
        engine.queue.extend(autostart.iter().cloned());
        engine.emit(EventKind::Lifecycle, None, None, None, autostart, Some("start".into()));
        engine
    }

    pub fn tsg(&self) -> &Tsg {
        &self.tsg
    }

    pub fn registry(&self) -> &Arc<NodeRegistry> {
        &self.registry
    }

    pub fn options(&self) -> &EngineOptions {
        &self.opts
    }

    pub fn buffer(&self, id: &str) -> Option<&Buffer> {
        self.buffers.get(id)
    }

    pub fn buffers(&self) -> impl Iterator<Item = &Buffer> {
        self.buffers.values()
    }

    pub fn events(&self) -> &[EngineEvent] {
        &self.log
    }

    pub fn queue(&self) -> Vec<String> {
        self.queue.iter().cloned().collect()
    }

    pub fn is_stopped(&self) -> bool {
        self.report.is_some()
    }

    /// Called for every event logged from now on.
    pub fn subscribe(&mut self, listener: Listener) {
        self.listeners.push(listener);
    }

    pub fn now_ms(&self) -> u64 {
        match self.opts.clock {
            ClockMode::Virtual => self.virtual_ms,
            ClockMode::Real => self.started.elapsed().as_millis() as u64,
        }
    }

    /// Display text of a node. A View shows its slots in order: linked nodes
    /// by their own display, linked outputs by their newest record.
    pub fn display(&self, node: &str) -> Option<String> {
        let inst = self.tsg.node(node)?;
        if inst.class != VIEW_CLASS {
            return self.slots.get(node).and_then(|s| s.display.clone());
        }
        let mut slots: Vec<&Edge> = self.tsg.edges.iter().filter(|e| e.dst.node() == node).collect();
        slots.sort_by_key(|e| match e.dst {
            EdgeTarget::Input { index, .. } => index,
            EdgeTarget::Config { index, .. } => usize::MAX - index,
        });
        let mut out = String::new();
        for e in slots {
            let text = match &e.src {
                EdgeSource::NodeSelf { node } => self.display(node).unwrap_or_default(),
                EdgeSource::Output { .. } => e
                    .buffer
                    .as_ref()
                    .and_then(|b| self.buffers.get(b))
                    .and_then(|b| b.latest())
                    .unwrap_or_default()
                    .to_string(),
            };
            out.push_str(&format!("== {} ==\n{}", e.src.node(), text));
            if !text.ends_with('\n') {
                out.push('\n');
            }
        }
        Some(out)
    }

    fn emit(
        &mut self,
        kind: EventKind,
        node: Option<&str>,
        buffer: Option<&str>,
        seq_range: Option<(u64, u64)>,
        enqueued: Vec<String>,
        detail: Option<String>,
    ) {
        let event = EngineEvent {
            index: self.log.len() as u64,
            kind,
            node: node.map(str::to_string),
            buffer: buffer.map(str::to_string),
            seq_range,
            enqueued,
            detail,
            timestamp: self.now_ms(),
        };
        for l in &mut self.listeners {
            l(&event);
        }
        self.log.push(event);
    }

    fn node_error(&mut self, node: &str, detail: String) {
        self.emit(EventKind::NodeError, Some(node), None, None, vec![], Some(detail));
    }

    /// Resolved config values of a node, index 0 holding config 1.
    fn resolve_configs(&self, id: &str) -> Vec<Option<String>> {
        let node = &self.tsg.nodes[id];
        let spec_len = self.registry.get(&node.class).map_or(0, |s| s.configs.len());
        let mut linked: BTreeMap<usize, Option<String>> = BTreeMap::new();
        for e in &self.tsg.edges {
            if let EdgeTarget::Config { node: n, index } = &e.dst {
                if n == id {
                    let latest = e
                        .buffer
                        .as_ref()
                        .and_then(|b| self.buffers.get(b))
                        .and_then(|b| b.latest())
                        .map(|t| t.trim_end_matches('\n').to_string());
                    if let Some(text) = latest {
                        linked.insert(*index, Some(text));
                    }
                }
            }
        }
        let max = node
            .static_configs
            .keys()
            .chain(linked.keys())
            .copied()
            .max()
            .unwrap_or(0)
            .max(spec_len);
        (1..=max)
            .map(|i| match linked.get(&i) {
                Some(v) => v.clone(),
                None => node.static_configs.get(&i).and_then(ConfigValue::as_text),
            })
            .collect()
    }

    fn input_links(&self, id: &str) -> Vec<Vec<InputLink>> {
        let node = &self.tsg.nodes[id];
        let mut inputs: Vec<Vec<InputLink>> = vec![Vec::new(); node.input_count];
        for e in &self.tsg.edges {
            if let (EdgeTarget::Input { node: n, index }, Some(buffer)) = (&e.dst, &e.buffer) {
                if n == id {
                    if inputs.len() <= *index {
                        inputs.resize(index + 1, Vec::new());
                    }
                    inputs[*index].push(InputLink {
                        edge: e.id.clone(),
                        buffer: buffer.clone(),
                    });
                }
            }
        }
        inputs
    }

    fn run_callback(&mut self, id: &str, phase: Phase) -> Result<(), NodeError> {
        let node = self.tsg.nodes[id].clone();
        let Some(spec) = self.registry.get(&node.class).cloned() else {
            return Err(NodeError(format!("unknown node class '{}'", node.class)));
        };
        let cb = match phase {
            Phase::Init => spec.callbacks.init.clone(),
            Phase::Exec => spec.callbacks.exec.clone(),
            Phase::Term => spec.callbacks.term.clone(),
        };
        let Some(cb) = cb else {
            return Ok(());
        };
        let configs = self.resolve_configs(id);
        let inputs = self.input_links(id);
        let now_ms = self.now_ms();
        let slot = self.slots.entry(id.to_string()).or_default();
        let mut ctx = NodeContext {
            id: &node.id,
            class: &node.class,
            phase,
            configs,
            inputs,
            output_count: node.output_count,
            buffers: &self.buffers,
            cursors: &mut self.cursors,
            state: &mut slot.state,
            stub: self.stub.as_ref(),
            now_ms,
            effects: Effects::default(),
        };
        let result = cb(&mut ctx);
        let effects = std::mem::take(&mut ctx.effects);
        self.apply(id, effects);
        result
    }

    fn apply(&mut self, id: &str, effects: Effects) {
        if let Some(d) = effects.display {
            self.slots.entry(id.to_string()).or_default().display = Some(d);
        }
        // One notification per written output, in order of first write.
        let mut order: Vec<usize> = Vec::new();
        for (o, _, _) in &effects.writes {
            if !order.contains(o) {
                order.push(*o);
            }
        }
        let now = self.now_ms();
        for o in order {
            let bid = buffer_id(id, o);
            let Some(buf) = self.buffers.get_mut(&bid) else {
                continue;
            };
            let first = buf.len();
            for (_, kind, text) in effects.writes.iter().filter(|(w, _, _)| *w == o) {
                buf.append(text.clone(), Origin::Node, *kind, now);
            }
            let last = buf.len();
            self.notify(&bid, (first, last), EventKind::OutputChanged);
        }
        for e in effects.errors {
            self.node_error(id, e);
        }
        for period in effects.timers {
            self.timers.push(Timer {
                node: id.to_string(),
                period_ms: period.max(1),
                next_due: 0,
            });
        }
        for req in effects.spawns {
            self.spawn(id, req);
        }
    }

    /// Fans an output change out to the nodes reading it.
    fn notify(&mut self, buffer: &str, range: (u64, u64), kind: EventKind) {
        let mut targets: Vec<String> = Vec::new();
        for e in &self.tsg.edges {
            if e.buffer.as_deref() == Some(buffer) {
                if let EdgeTarget::Input { node, .. } = &e.dst {
                    if !targets.contains(node) {
                        targets.push(node.clone());
                    }
                }
            }
        }
        let mut enqueued = Vec::new();
        for t in targets {
            if self.opts.coalesce && self.queue.contains(&t) {
                continue;
            }
            self.queue.push_back(t.clone());
            enqueued.push(t);
        }
        let owner = self.buffers.get(buffer).map(|b| b.node.clone());
        self.emit(kind, owner.as_deref(), Some(buffer), Some(range), enqueued, None);
    }

    fn execute(&mut self, id: &str) {
        let runnable = self.slots.get(id).is_some_and(|s| s.init_ok)
            && self.tsg.node(id).is_some_and(|n| n.state == LifecycleState::Running);
        if !runnable {
            self.node_error(id, "skipped: node is not running".into());
            return;
        }
        self.emit(EventKind::NodeExecuted, Some(id), None, None, vec![], None);
        if let Err(e) = self.run_callback(id, Phase::Exec) {
            self.node_error(id, e.0);
        }
    }

    /// Runs the node at the head of the queue.
    pub fn step(&mut self) -> Option<String> {
        let id = self.queue.pop_front()?;
        self.execute(&id);
        Some(id)
    }

    /// Drains the queue, stopping after the propagation budget. Returns the
    /// number of executions.
    pub fn run_until_idle(&mut self) -> usize {
        let mut count = 0;
        while !self.queue.is_empty() {
            if count >= self.opts.budget {
                let head = self.queue.front().cloned();
                self.queue.clear();
                self.emit(
                    EventKind::NodeError,
                    head.as_deref(),
                    None,
                    None,
                    vec![],
                    Some("propagation budget exceeded".into()),
                );
                break;
            }
            self.step();
            count += 1;
        }
        count
    }

    /// Appends an injected record and fans it out like a node write.
    pub fn inject(&mut self, buffer: &str, text: &str) -> Result<u64, EngineError> {
        if self.report.is_some() {
            return Err(EngineError::Stopped);
        }
        let now = self.now_ms();
        let buf = self
            .buffers
            .get_mut(buffer)
            .ok_or_else(|| EngineError::UnknownBuffer(buffer.to_string()))?;
        let seq = buf.append(text.to_string(), Origin::Injected, RecordKind::Data, now);
        self.notify(buffer, (seq, seq + 1), EventKind::Injected);
        Ok(seq)
    }

    fn fire_timer(&mut self, i: usize) {
        let t = &mut self.timers[i];
        t.next_due += t.period_ms;
        let node = t.node.clone();
        self.queue.push_back(node.clone());
        self.emit(EventKind::TimerTick, Some(&node), None, None, vec![node.clone()], None);
        self.run_until_idle();
    }

    fn earliest_due(&self, limit: u64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, t) in self.timers.iter().enumerate() {
            if t.next_due <= limit && best.is_none_or(|b| t.next_due < self.timers[b].next_due) {
                best = Some(i);
            }
        }
        best
    }

    /// Moves the virtual clock to `t_ms`, firing every tick due on the way
    /// and draining after each.
    pub fn advance_to(&mut self, t_ms: u64) {
        while let Some(i) = self.earliest_due(t_ms) {
            self.virtual_ms = self.virtual_ms.max(self.timers[i].next_due);
            self.fire_timer(i);
        }
        self.virtual_ms = self.virtual_ms.max(t_ms);
    }

    fn spawn(&mut self, id: &str, req: ProcessRequest) {
        let transport = self.opts.transports.for_host(req.host.as_deref());
        let token = self.next_token;
        self.next_token += 1;
        match process::spawn(transport.as_ref(), &req, token, self.tx.clone()) {
            Ok(child) => {
                let first_seq = self.buffers.get(&buffer_id(id, req.output)).map_or(0, Buffer::len);
                self.processes.insert(
                    token,
                    Running {
                        node: id.to_string(),
                        child,
                        request: req,
                        stdout: String::new(),
                        first_seq,
                    },
                );
            }
            Err(e) => {
                let reason = format!("ERROR: {}: {e}", req.argv.first().map_or("", String::as_str));
                let bid = buffer_id(id, req.output);
                let now = self.now_ms();
                if let Some(buf) = self.buffers.get_mut(&bid) {
                    let seq = buf.append(reason.clone(), Origin::Node, RecordKind::Data, now);
                    self.notify(&bid, (seq, seq + 1), EventKind::OutputChanged);
                }
                self.node_error(id, reason);
            }
        }
    }

    pub fn running_processes(&self) -> usize {
        self.processes.len()
    }

    fn handle(&mut self, msg: External) {
        match msg {
            External::Line { token, text } => {
                let now = self.now_ms();
                if let Some(p) = self.processes.get_mut(&token) {
                    p.stdout.push_str(&text);
                    let bid = buffer_id(&p.node, p.request.output);
                    if let Some(buf) = self.buffers.get_mut(&bid) {
                        buf.append(text, Origin::Node, RecordKind::Data, now);
                    }
                }
            }
            External::Eof { token } => {
                let Some(mut p) = self.processes.remove(&token) else {
                    return;
                };
                let code = p.child.wait().ok().and_then(|s| s.code()).unwrap_or(-1);
                let now = self.now_ms();
                let bid = buffer_id(&p.node, p.request.output);
                if let Some(buf) = self.buffers.get_mut(&bid) {
                    buf.append(format!("exit {code}"), Origin::Node, RecordKind::Exit, now);
                    let last = buf.len();
                    self.notify(&bid, (p.first_seq, last), EventKind::OutputChanged);
                }
                if let Some((out, extractor)) = &p.request.extract {
                    let text = extractor(&p.stdout);
                    let xid = buffer_id(&p.node, *out);
                    if let Some(buf) = self.buffers.get_mut(&xid) {
                        let seq = buf.append(text, Origin::Node, RecordKind::Data, now);
                        self.notify(&xid, (seq, seq + 1), EventKind::OutputChanged);
                    }
                }
                self.run_until_idle();
            }
        }
    }

    /// Handles process output that arrives within `timeout`. Returns whether
    /// anything was handled.
    pub fn pump(&mut self, timeout: Duration) -> bool {
        match self.rx.recv_timeout(timeout) {
            Ok(msg) => {
                self.handle(msg);
                while let Ok(msg) = self.rx.try_recv() {
                    self.handle(msg);
                }
                true
            }
            Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => false,
        }
    }

    /// Drains the queue and waits for running processes, at most `max`.
    pub fn run_until_quiescent(&mut self, max: Duration) {
        let deadline = Instant::now() + max;
        loop {
            self.run_until_idle();
            if self.processes.is_empty() {
                break;
            }
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            self.pump(deadline - now);
        }
    }

    /// Wall-clock loop: fires due timers and handles process output until
    /// `duration` has passed.
    pub fn run_for(&mut self, duration: Duration) {
        let deadline = Instant::now() + duration;
        loop {
            self.run_until_idle();
            match self.opts.clock {
                ClockMode::Real => {
                    let now = self.now_ms();
                    while let Some(i) = self.earliest_due(now) {
                        self.fire_timer(i);
                    }
                }
                ClockMode::Virtual => {}
            }
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            let mut wait = deadline - now;
            if self.opts.clock == ClockMode::Real {
                if let Some(next) = self.timers.iter().map(|t| t.next_due).min() {
                    let ms = next.saturating_sub(self.now_ms());
                    wait = wait.min(Duration::from_millis(ms.max(1)));
                }
            }
            self.pump(wait);
        }
    }

    /// Adds an edge to the running graph.
    pub fn add_edge(&mut self, src: EdgeSource, dst: EdgeTarget) -> Result<Edge, EngineError> {
        if self.report.is_some() {
            return Err(EngineError::Stopped);
        }
        let registry = self.registry.clone();
        let edge = self.tsg.add_edge(&registry, src, dst)?;
        for b in self.tsg.output_buffers() {
            if !self.buffers.contains_key(&b) {
                let (node, out) = b.rsplit_once(':').expect("buffer ids carry an output");
                self.buffers.insert(b.clone(), Buffer::new(node, out.parse().expect("numeric output")));
            }
        }
        if let Some(b) = &edge.buffer {
            let len = self.buffers[b].len();
            self.cursors.insert(edge.id.clone(), Cursor { next_seq: len });
        }
        Ok(edge)
    }

    /// Replaces a static config value; used at the node's next execution.
    pub fn set_config(&mut self, node: &str, index: usize, value: ConfigValue) -> Result<u64, EngineError> {
        if self.report.is_some() {
            return Err(EngineError::Stopped);
        }
        if self.tsg.node(node).is_none() {
            return Err(EngineError::UnknownNode(node.to_string()));
        }
        let registry = self.registry.clone();
        self.tsg.set_config_value(&registry, node, index, value)?;
        Ok(self.tsg.revision)
    }

    /// Kills running processes and runs term callbacks in reverse init
    /// order. Calling it again returns the same report.
    pub fn stop(&mut self) -> EngineReport {
        if let Some(r) = &self.report {
            return r.clone();
        }
        for (_, mut p) in std::mem::take(&mut self.processes) {
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
        let order: Vec<String> = self.init_order.iter().rev().cloned().collect();
        for id in order {
            if self.slots.get(&id).is_some_and(|s| s.init_ok) {
                let result = self.run_callback(&id, Phase::Term);
                self.emit(EventKind::Lifecycle, Some(&id), None, None, vec![], Some("term".into()));
                if let Err(e) = result {
                    self.node_error(&id, format!("term: {e}"));
                }
            }
            self.tsg.set_state(&id, LifecycleState::Terminated);
        }
        self.queue.clear();
        let report = EngineReport {
            events: self.log.clone(),
            buffer_lengths: self.buffers.iter().map(|(k, b)| (k.clone(), b.len())).collect(),
        };
        self.report = Some(report.clone());
        report
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        for p in self.processes.values_mut() {
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
    }
}
