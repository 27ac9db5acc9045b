use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Node,
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Data,
    /// Exit status of a wrapped process.
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferRecord {
    pub seq: u64,
    /// Engine clock, milliseconds.
    pub timestamp: u64,
    pub origin: Origin,
    pub kind: RecordKind,
    pub text: String,
}

/// Append-only record stream of one node output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Buffer {
    pub id: String,
    pub node: String,
    pub output: usize,
    records: Vec<BufferRecord>,
}

impl Buffer {
    pub fn new(node: &str, output: usize) -> Self {
        Buffer {
            id: crate::graph::buffer_id(node, output),
            node: node.to_string(),
            output,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[BufferRecord] {
        &self.records
    }

    /// Appends a record and returns its seq.
    pub fn append(&mut self, text: String, origin: Origin, kind: RecordKind, timestamp: u64) -> u64 {
        let seq = self.len();
        self.records.push(BufferRecord {
            seq,
            timestamp,
            origin,
            kind,
            text,
        });
        seq
    }

    /// At most `limit` records starting at `from`.
    pub fn page(&self, from: u64, limit: usize) -> &[BufferRecord] {
        let start = (from as usize).min(self.records.len());
        let end = start.saturating_add(limit).min(self.records.len());
        &self.records[start..end]
    }

    /// Text of the newest data record.
    pub fn latest(&self) -> Option<&str> {
        self.records
            .iter()
            .rev()
            .find(|r| r.kind == RecordKind::Data)
            .map(|r| r.text.as_str())
    }

    /// Concatenated data records in `[cursor.next_seq, len)`; moves the cursor
    /// to the end.
    pub fn read_delta(&self, cursor: &mut Cursor) -> String {
        let start = (cursor.next_seq as usize).min(self.records.len());
        let text = self.records[start..]
            .iter()
            .filter(|r| r.kind == RecordKind::Data)
            .map(|r| r.text.as_str())
            .collect();
        cursor.next_seq = self.len();
        text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Cursor {
    pub next_seq: u64,
}

impl Cursor {
    pub fn has_news(&self, buffer: &Buffer) -> bool {
        self.next_seq < buffer.len()
    }
}
