use std::any::Any;
use std::collections::HashMap;

use indexmap::IndexMap;

use super::buffer::{Buffer, Cursor, RecordKind};
use super::process::{ProcessRequest, StubBackend};
use crate::nodes::NodeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Exec,
    Term,
}

#[derive(Debug, Clone)]
pub(crate) struct InputLink {
    pub edge: String,
    pub buffer: String,
}

/// Everything a callback asked for; applied by the engine afterwards.
#[derive(Debug, Default)]
pub(crate) struct Effects {
    pub writes: Vec<(usize, RecordKind, String)>,
    pub spawns: Vec<ProcessRequest>,
    pub timers: Vec<u64>,
    pub errors: Vec<String>,
    pub display: Option<String>,
}

/// The handle a node callback works through.
pub struct NodeContext<'a> {
    pub(crate) id: &'a str,
    pub(crate) class: &'a str,
    pub(crate) phase: Phase,
    /// Index 0 holds config 1.
    pub(crate) configs: Vec<Option<String>>,
    pub(crate) inputs: Vec<Vec<InputLink>>,
    pub(crate) output_count: usize,
    pub(crate) buffers: &'a IndexMap<String, Buffer>,
    pub(crate) cursors: &'a mut HashMap<String, Cursor>,
    pub(crate) state: &'a mut Option<Box<dyn Any + Send>>,
    pub(crate) stub: Option<&'a StubBackend>,
    pub(crate) now_ms: u64,
    pub(crate) effects: Effects,
}

impl<'a> NodeContext<'a> {
    pub fn id(&self) -> &str {
        self.id
    }

    pub fn class(&self) -> &str {
        self.class
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Config `index` (1-based): the newest record of a linked output if
    /// there is one, else the static value. `nil` and unset slots are `None`.
    pub fn config(&self, index: usize) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.configs.get(i))
            .and_then(|v| v.as_deref())
    }

    pub fn config_count(&self) -> usize {
        self.configs.len()
    }

    pub fn require_config(&self, index: usize, name: &str) -> Result<&str, NodeError> {
        self.config(index)
            .ok_or_else(|| NodeError(format!("config {index} ({name}) is not set")))
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    pub fn is_connected(&self, input: usize) -> bool {
        self.inputs.get(input).is_some_and(|l| !l.is_empty())
    }

    fn links(&self, input: usize) -> &[InputLink] {
        self.inputs.get(input).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether any record arrived on `input` since it was last read.
    pub fn has_news(&self, input: usize) -> bool {
        self.links(input).iter().any(|l| {
            let cursor = self.cursors.get(&l.edge).copied().unwrap_or_default();
            cursor.has_news(&self.buffers[&l.buffer])
        })
    }

    /// New text on `input` since the last read, across every edge landing on
    /// it in creation order.
    pub fn read_delta(&mut self, input: usize) -> String {
        let links: Vec<InputLink> = self.links(input).to_vec();
        let mut out = String::new();
        for l in links {
            let cursor = self.cursors.entry(l.edge).or_default();
            out.push_str(&self.buffers[&l.buffer].read_delta(cursor));
        }
        out
    }

    /// Marks everything on every input as read.
    pub fn consume_all(&mut self) {
        for i in 0..self.inputs.len() {
            self.read_delta(i);
        }
    }

    /// Nodes feeding `input`, in edge creation order.
    pub fn sources(&self, input: usize) -> Vec<String> {
        self.links(input)
            .iter()
            .map(|l| self.buffers[&l.buffer].node.clone())
            .collect()
    }

    /// Newest data record on `input`, regardless of cursors.
    pub fn latest(&self, input: usize) -> Option<String> {
        self.links(input)
            .iter()
            .filter_map(|l| {
                let buf = &self.buffers[&l.buffer];
                let rec = buf.records().iter().rev().find(|r| r.kind == RecordKind::Data)?;
                Some((rec.timestamp, rec.text.clone()))
            })
            .max_by_key(|(ts, _)| *ts)
            .map(|(_, t)| t)
    }

    pub fn write(&mut self, output: usize, text: impl Into<String>) -> Result<(), NodeError> {
        self.push_write(output, RecordKind::Data, text.into())
    }

    pub fn write_exit(&mut self, output: usize, code: i32) -> Result<(), NodeError> {
        self.push_write(output, RecordKind::Exit, format!("exit {code}"))
    }

    fn push_write(&mut self, output: usize, kind: RecordKind, text: String) -> Result<(), NodeError> {
        if output >= self.output_count {
            return Err(NodeError(format!(
                "{} has no output {output}",
                self.id
            )));
        }
        self.effects.writes.push((output, kind, text));
        Ok(())
    }

    /// Private per-instance state, created on first use.
    pub fn state<T: Default + Send + 'static>(&mut self) -> &mut T {
        let fresh = !self.state.as_ref().is_some_and(|s| s.is::<T>());
        if fresh {
            *self.state = Some(Box::new(T::default()));
        }
        self.state
            .as_mut()
            .and_then(|s| s.downcast_mut::<T>())
            .expect("state type checked above")
    }

    /// Runs an external command; its output arrives asynchronously.
    pub fn spawn(&mut self, request: ProcessRequest) {
        self.effects.spawns.push(request);
    }

    /// Registers a periodic timer that enqueues this node.
    pub fn set_timer(&mut self, period_ms: u64) {
        self.effects.timers.push(period_ms);
    }

    /// Logs a node error without failing the callback.
    pub fn report_error(&mut self, message: impl Into<String>) {
        self.effects.errors.push(message.into());
    }

    /// Text shown for display-only nodes.
    pub fn set_display(&mut self, text: impl Into<String>) {
        self.effects.display = Some(text.into());
    }

    pub fn stub(&self) -> Option<&StubBackend> {
        self.stub
    }
}
