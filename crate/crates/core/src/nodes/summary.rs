//! Aggregates Decision status records into a table with an overall verdict.

use std::fmt;

use super::decision::{DecisionStatus, Verdict};
use super::spec::{callback, noop, NodeClassSpec, NodeRegistry, RegistryError};
use super::SUMMARY_CLASS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowState {
    Pass,
    Fail,
    Pending,
    Invalid,
}

impl RowState {
    pub fn as_str(self) -> &'static str {
        match self {
            RowState::Pass => "pass",
            RowState::Fail => "fail",
            RowState::Pending => "pending",
            RowState::Invalid => "invalid",
        }
    }

    pub fn parse(s: &str) -> Option<RowState> {
        Some(match s {
            "pass" => RowState::Pass,
            "fail" => RowState::Fail,
            "pending" => RowState::Pending,
            "invalid" => RowState::Invalid,
            _ => return None,
        })
    }
}

impl fmt::Display for RowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub label: String,
    pub state: RowState,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub overall: SummaryRow,
}

pub const OVERALL: &str = "OVERALL";

/// One row per input: `source` labels inputs that have not reported yet.
pub fn summarize(inputs: &[(String, Option<String>)]) -> Summary {
    let rows: Vec<SummaryRow> = inputs
        .iter()
        .map(|(source, latest)| match latest {
            None => SummaryRow {
                label: source.clone(),
                state: RowState::Pending,
                detail: String::new(),
            },
            Some(text) => match DecisionStatus::from_json(text) {
                Ok(st) => SummaryRow {
                    label: st.label,
                    state: match st.result {
                        Verdict::Pass => RowState::Pass,
                        Verdict::Fail => RowState::Fail,
                    },
                    detail: st.detail,
                },
                Err(_) => SummaryRow {
                    label: source.clone(),
                    state: RowState::Invalid,
                    detail: "not a decision status record".into(),
                },
            },
        })
        .collect();
    let overall = overall(&rows);
    Summary { rows, overall }
}

/// Pass when every reporting decision passed, pending when none reported.
pub fn overall(rows: &[SummaryRow]) -> SummaryRow {
    let reported: Vec<&SummaryRow> = rows.iter().filter(|r| r.state != RowState::Pending).collect();
    let failing: Vec<&str> = reported
        .iter()
        .filter(|r| r.state != RowState::Pass)
        .map(|r| r.label.as_str())
        .collect();
    let (state, detail) = if reported.is_empty() {
        (RowState::Pending, String::new())
    } else if failing.is_empty() {
        (RowState::Pass, String::new())
    } else {
        (RowState::Fail, failing.join(", "))
    };
    SummaryRow {
        label: OVERALL.into(),
        state,
        detail,
    }
}

impl Summary {
    pub fn render(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain([OVERALL.len(), "decision".len()])
            .max()
            .unwrap_or(0);
        let mut out = format!("{:<width$} | {:<7} | detail\n", "decision", "result");
        for r in self.rows.iter().chain([&self.overall]) {
            let line = format!("{:<width$} | {:<7} | {}", r.label, r.state.as_str(), r.detail);
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// Reads back a rendered table.
    pub fn parse(text: &str) -> Option<Summary> {
        let mut rows = Vec::new();
        for line in text.lines().skip(1) {
            let mut parts = line.splitn(3, '|').map(str::trim);
            let label = parts.next()?.to_string();
            let state = RowState::parse(parts.next()?)?;
            let detail = parts.next().unwrap_or("").to_string();
            rows.push(SummaryRow { label, state, detail });
        }
        let overall = rows.pop().filter(|r| r.label == OVERALL)?;
        Some(Summary { rows, overall })
    }
}

pub fn register(reg: &mut NodeRegistry) -> Result<(), RegistryError> {
    reg.register(
        NodeClassSpec::new(SUMMARY_CLASS, "table of decision results with an overall verdict")
            .input("status", "a Decision status output; one row per input")
            .variadic_inputs()
            .output("table", "the rendered table after every change")
            .on_init(noop())
            .on_exec(callback(|ctx| {
                ctx.consume_all();
                let inputs: Vec<(String, Option<String>)> = (0..ctx.input_count())
                    .filter(|i| ctx.is_connected(*i))
                    .map(|i| (ctx.sources(i).join(","), ctx.latest(i)))
                    .collect();
                let table = summarize(&inputs).render();
                ctx.set_display(table.clone());
                ctx.write(0, table)
            }))
            .on_term(noop()),
    )
}
