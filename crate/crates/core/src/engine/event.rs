use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    OutputChanged,
    TimerTick,
    Injected,
    NodeExecuted,
    NodeError,
    Lifecycle,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::OutputChanged => "output-changed",
            EventKind::TimerTick => "timer-tick",
            EventKind::Injected => "injected",
            EventKind::NodeExecuted => "node-executed",
            EventKind::NodeError => "node-error",
            EventKind::Lifecycle => "lifecycle",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        [
            EventKind::OutputChanged,
            EventKind::TimerTick,
            EventKind::Injected,
            EventKind::NodeExecuted,
            EventKind::NodeError,
            EventKind::Lifecycle,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

/// One entry of the execution trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineEvent {
    pub index: u64,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub buffer: Option<String>,
    /// Half-open seq range of the records involved.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seq_range: Option<(u64, u64)>,
    /// Nodes appended to the scheduler queue by this event.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub enqueued: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
    pub timestamp: u64,
}

/// One JSON object per line.
pub fn events_to_jsonl(events: &[EngineEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}
