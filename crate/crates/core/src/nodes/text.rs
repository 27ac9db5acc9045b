//! Text-processing and display nodes.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::net::Ipv4Addr;

use indexmap::IndexMap;
use regex::Regex;
use serde_json::Value as Json;

use super::expr::ExprProgram;
use super::functions::{self, FnValue};
use super::spec::{callback, noop, NodeClassSpec, NodeError, NodeRegistry, RegistryError};
use super::VIEW_CLASS;
use crate::engine::NodeContext;

// ---- Clock

fn clock_period_ms(ctx: &NodeContext<'_>) -> Result<u64, NodeError> {
    let raw = ctx.require_config(1, "period")?;
    let secs: f64 = raw
        .parse()
        .map_err(|_| NodeError(format!("period '{raw}' is not a number")))?;
    if !(secs > 0.0) || !secs.is_finite() {
        return Err(NodeError(format!("period must be positive, got {raw}")));
    }
    Ok((secs * 1000.0).round().max(1.0) as u64)
}

fn clock_spec() -> NodeClassSpec {
    NodeClassSpec::new("Clock", "periodic trigger")
        .config("period", "seconds between ticks", true)
        .output("tick", "tick counter, starting at 0")
        .on_init(callback(|ctx| {
            let ms = clock_period_ms(ctx)?;
            ctx.set_timer(ms);
            Ok(())
        }))
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            let n = ctx.state::<u64>();
            let tick = *n;
            *n += 1;
            ctx.write(0, tick.to_string())
        }))
        .on_term(noop())
}

// ---- Filter

/// Input lines with the matching ones wrapped as `>>> line <<<`; line
/// terminators kept.
pub fn highlight_lines(re: &Regex, text: &str) -> String {
    let mut out = String::new();
    for line in text.split_inclusive('\n') {
        let (body, nl) = match line.strip_suffix('\n') {
            Some(b) => (b, "\n"),
            None => (line, ""),
        };
        if re.is_match(body) {
            out.push_str(">>> ");
            out.push_str(body);
            out.push_str(" <<<");
        } else {
            out.push_str(body);
        }
        out.push_str(nl);
    }
    out
}

fn filter_spec() -> NodeClassSpec {
    NodeClassSpec::new("Filter", "marks the lines matching a regular expression")
        .input("text", "text to filter")
        .config("pattern", "regular expression", true)
        .output("marked", "the input with matching lines wrapped in >>> <<<")
        .on_init(callback(|ctx| {
            let p = ctx.require_config(1, "pattern")?;
            Regex::new(p).map_err(|e| NodeError(format!("bad pattern: {e}")))?;
            Ok(())
        }))
        .on_exec(callback(|ctx| {
            let re = Regex::new(ctx.require_config(1, "pattern")?)
                .map_err(|e| NodeError(format!("bad pattern: {e}")))?;
            let text = ctx.read_delta(0);
            let out = highlight_lines(&re, &text);
            if out.is_empty() {
                return Ok(());
            }
            ctx.write(0, out)
        }))
        .on_term(noop())
}

// ---- Format

/// Substitutes each `{N}` (decimal N) with `values[N]` minus one trailing
/// newline. Other braces are literal.
pub fn format_template(template: &str, values: &[Option<String>]) -> Result<String, String> {
    let re = Regex::new(r"\{(\d+)\}").expect("static pattern");
    let mut out = String::new();
    let mut last = 0;
    for cap in re.captures_iter(template) {
        let m = cap.get(0).expect("whole match");
        out.push_str(&template[last..m.start()]);
        last = m.end();
        let n: usize = cap[1].parse().map_err(|_| format!("bad placeholder '{}'", m.as_str()))?;
        match values.get(n) {
            Some(Some(v)) => out.push_str(v.strip_suffix('\n').unwrap_or(v)),
            _ => return Err(format!("input {n} is not connected")),
        }
    }
    out.push_str(&template[last..]);
    Ok(out)
}

/// Input indices referenced by `{N}` placeholders.
pub fn template_inputs(template: &str) -> Vec<usize> {
    let re = Regex::new(r"\{(\d+)\}").expect("static pattern");
    re.captures_iter(template).filter_map(|c| c[1].parse().ok()).collect()
}

fn format_spec() -> NodeClassSpec {
    NodeClassSpec::new("Format", "fills a template from the newest record of each input")
        .input("value", "value for {0}")
        .variadic_inputs()
        .config("template", "text with {N} placeholders", true)
        .output("text", "the filled template")
        .on_init(noop())
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            let template = ctx.require_config(1, "template")?.to_string();
            let values: Vec<Option<String>> = (0..ctx.input_count())
                .map(|i| if ctx.is_connected(i) { Some(ctx.latest(i).unwrap_or_default()) } else { None })
                .collect();
            let text = format_template(&template, &values).map_err(NodeError)?;
            ctx.write(0, text)
        }))
        .on_term(noop())
}

// ---- Json-filter

/// Every value reached by `path` (dot-separated keys) starting from any
/// object in the document, in document order.
pub fn json_select<'a>(doc: &'a Json, path: &str) -> Vec<&'a Json> {
    let keys: Vec<&str> = path.split('.').filter(|k| !k.is_empty()).collect();
    let mut out = Vec::new();
    if !keys.is_empty() {
        search(doc, &keys, &mut out);
    }
    out
}

fn search<'a>(v: &'a Json, keys: &[&str], out: &mut Vec<&'a Json>) {
    match v {
        Json::Object(map) => {
            for (k, child) in map {
                if k == keys[0] {
                    if let Some(hit) = follow(child, &keys[1..]) {
                        out.push(hit);
                    }
                }
                search(child, keys, out);
            }
        }
        Json::Array(items) => items.iter().for_each(|c| search(c, keys, out)),
        _ => {}
    }
}

fn follow<'a>(v: &'a Json, keys: &[&str]) -> Option<&'a Json> {
    let mut cur = v;
    for k in keys {
        cur = cur.as_object()?.get(*k)?;
    }
    Some(cur)
}

/// Strings unquoted, everything else as compact JSON.
pub fn json_text(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn json_filter_spec() -> NodeClassSpec {
    NodeClassSpec::new("Json-filter", "selects values from JSON documents")
        .input("json", "one JSON document per record")
        .config("path", "dot-separated key path", true)
        .output("values", "one line per selected value")
        .on_init(noop())
        .on_exec(callback(|ctx| {
            let path = ctx.require_config(1, "path")?.to_string();
            let text = ctx.read_delta(0);
            if text.trim().is_empty() {
                return Ok(());
            }
            let doc: Json = match serde_json::from_str(&text) {
                Ok(d) => d,
                Err(e) => {
                    ctx.write(0, format!("ERROR: {e}"))?;
                    return Err(NodeError(format!("invalid JSON: {e}")));
                }
            };
            let lines: Vec<String> = json_select(&doc, &path).into_iter().map(json_text).collect();
            if lines.is_empty() {
                return Ok(());
            }
            ctx.write(0, lines.join("\n"))
        }))
        .on_term(noop())
}

// ---- Tee

fn tee_spec() -> NodeClassSpec {
    NodeClassSpec::new("Tee", "forwards its input and appends it to a file")
        .input("text", "text to forward")
        .config("path", "file to append to", true)
        .output("text", "the input, unchanged")
        .on_init(noop())
        .on_exec(callback(|ctx| {
            let path = ctx.require_config(1, "path")?.to_string();
            let text = ctx.read_delta(0);
            if text.is_empty() {
                return Ok(());
            }
            let appended = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(text.as_bytes()));
            if let Err(e) = appended {
                ctx.report_error(format!("cannot append to {path}: {e}"));
            }
            ctx.write(0, text)
        }))
        .on_term(noop())
}

// ---- Table-view

/// `k=v,k=v` pairs of one line; a line without `=` is a single `value` cell.
pub fn parse_row(line: &str) -> IndexMap<String, String> {
    let mut row = IndexMap::new();
    if !line.contains('=') {
        row.insert("value".to_string(), line.trim().to_string());
        return row;
    }
    for part in line.split(',') {
        let (k, v) = part.split_once('=').unwrap_or((part, ""));
        row.insert(k.trim().to_string(), v.trim().to_string());
    }
    row
}

/// A text table of `k=v` rows; columns are the union of keys in first-seen
/// order.
pub fn render_table(text: &str) -> String {
    let rows: Vec<IndexMap<String, String>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse_row)
        .collect();
    if rows.is_empty() {
        return String::new();
    }
    let mut cols: Vec<String> = Vec::new();
    for r in &rows {
        for k in r.keys() {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let widths: Vec<usize> = cols
        .iter()
        .map(|c| {
            rows.iter()
                .map(|r| r.get(c).map_or(0, String::len))
                .chain([c.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<&str>| -> String {
        let s: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(cols.iter().map(String::as_str).collect());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in &rows {
        out.push_str(&line(cols.iter().map(|c| r.get(c).map_or("", String::as_str)).collect()));
    }
    out
}

/// Data rows in a Table-view rendering, over every section.
pub fn table_row_count(rendered: &str) -> usize {
    let mut count = 0;
    let mut seen_in_section = 0;
    for line in rendered.lines() {
        if line.starts_with("[input ") {
            seen_in_section = 0;
            continue;
        }
        seen_in_section += 1;
        // Column header and dash rule come first.
        if seen_in_section > 2 {
            count += 1;
        }
    }
    count
}

fn table_view_spec() -> NodeClassSpec {
    NodeClassSpec::new("Table-view", "renders k=v records as a table")
        .input("rows", "records of k=v lines")
        .variadic_inputs()
        .output("table", "the rendered table")
        .on_init(noop())
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            let mut out = String::new();
            for i in 0..ctx.input_count() {
                if !ctx.is_connected(i) {
                    continue;
                }
                out.push_str(&format!("[input {i}]\n"));
                out.push_str(&render_table(&ctx.latest(i).unwrap_or_default()));
            }
            ctx.set_display(out.clone());
            ctx.write(0, out)
        }))
        .on_term(noop())
}

// ---- Flow-space-filter

/// An IPv4 prefix; a bare address is a /32.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prefix {
    pub addr: u32,
    pub len: u8,
}

impl Prefix {
    pub const ANY: Prefix = Prefix { addr: 0, len: 0 };

    pub fn parse(s: &str) -> Option<Prefix> {
        let s = s.trim();
        if s == "*" || s.is_empty() || s == "any" {
            return Some(Prefix::ANY);
        }
        let (a, l) = s.split_once('/').unwrap_or((s, "32"));
        let addr: Ipv4Addr = a.parse().ok()?;
        let len: u8 = l.parse().ok().filter(|l| *l <= 32)?;
        Some(Prefix {
            addr: u32::from(addr) & Prefix::mask(len),
            len,
        })
    }

    fn mask(len: u8) -> u32 {
        if len == 0 {
            0
        } else {
            u32::MAX << (32 - len)
        }
    }

    /// Two prefixes share at least one address.
    pub fn overlaps(&self, other: &Prefix) -> bool {
        let m = Prefix::mask(self.len.min(other.len));
        self.addr & m == other.addr & m
    }
}

/// One normalized flow line: `dpid=..,nw_src=..,nw_dst=..,actions=..`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEntry {
    pub dpid: String,
    pub nw_src: Prefix,
    pub nw_dst: Prefix,
    pub actions: String,
}

impl FlowEntry {
    pub fn parse(line: &str) -> Option<FlowEntry> {
        let row = parse_row(line);
        let dpid = row.get("dpid")?.clone();
        let nw_src = Prefix::parse(row.get("nw_src").map_or("*", String::as_str))?;
        let nw_dst = Prefix::parse(row.get("nw_dst").map_or("*", String::as_str))?;
        Some(FlowEntry {
            dpid,
            nw_src,
            nw_dst,
            actions: row.get("actions").cloned().unwrap_or_default(),
        })
    }
}

/// Kept lines verbatim and the number of unparseable lines. A flow is kept
/// when its source and destination spaces overlap the configured ones;
/// `None` matches anything.
pub fn filter_flows(text: &str, src: Option<Prefix>, dst: Option<Prefix>) -> (Vec<String>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let Some(f) = FlowEntry::parse(line) else {
            dropped += 1;
            continue;
        };
        let ok_src = src.is_none_or(|p| p.overlaps(&f.nw_src));
        let ok_dst = dst.is_none_or(|p| p.overlaps(&f.nw_dst));
        if ok_src && ok_dst {
            kept.push(line.to_string());
        }
    }
    (kept, dropped)
}

fn prefix_config(ctx: &NodeContext<'_>, index: usize, name: &str) -> Result<Option<Prefix>, NodeError> {
    match ctx.config(index) {
        None => Ok(None),
        Some(s) => Prefix::parse(s)
            .map(Some)
            .ok_or_else(|| NodeError(format!("{name} '{s}' is not an IPv4 address or prefix"))),
    }
}

fn flow_space_filter_spec() -> NodeClassSpec {
    NodeClassSpec::new("Flow-space-filter", "keeps flow entries overlapping a source and destination space")
        .input("flows", "normalized flow lines; every input is merged")
        .variadic_inputs()
        .config("src", "source address or prefix, nil for any", false)
        .config("dst", "destination address or prefix, nil for any", false)
        .output("flows", "kept flow lines")
        .output("dropped", "count of lines that could not be parsed")
        .on_init(callback(|ctx| {
            prefix_config(ctx, 1, "src")?;
            prefix_config(ctx, 2, "dst")?;
            Ok(())
        }))
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            let src = prefix_config(ctx, 1, "src")?;
            let dst = prefix_config(ctx, 2, "dst")?;
            let mut all = String::new();
            for i in 0..ctx.input_count() {
                if let Some(t) = ctx.latest(i) {
                    all.push_str(&t);
                    if !t.ends_with('\n') {
                        all.push('\n');
                    }
                }
            }
            let (kept, dropped) = filter_flows(&all, src, dst);
            let mut body = kept.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            ctx.write(0, body)?;
            ctx.write(1, format!("{dropped} dropped"))
        }))
        .on_term(noop())
}

// ---- Function

/// `'input-N` or `input-N`.
pub fn parse_selector(s: &str) -> Option<usize> {
    s.trim().trim_start_matches('\'').strip_prefix("input-")?.parse().ok()
}

fn function_spec() -> NodeClassSpec {
    NodeClassSpec::new("Function", "applies a named function or lambda to its inputs")
        .input("trigger", "new records here run the function")
        .variadic_inputs()
        .config("function", "function name or lambda", true)
        .config("argument", "'input-N selector; more may follow", false)
        .variadic_configs()
        .output("result", "the result; list results go to output i per element")
        .variadic_outputs()
        .on_init(callback(|ctx| {
            let f = ctx.require_config(1, "function")?;
            if f.trim_start().starts_with('(') {
                ExprProgram::parse(f).map_err(|e| NodeError(format!("bad function: {e}")))?;
            } else if functions::lookup(f).is_none() {
                return Err(NodeError(format!("unknown function '{f}'")));
            }
            for i in 2..=ctx.config_count() {
                if let Some(s) = ctx.config(i) {
                    if parse_selector(s).is_none() {
                        return Err(NodeError(format!("config {i}: '{s}' is not an input selector")));
                    }
                }
            }
            Ok(())
        }))
        .on_exec(callback(|ctx| {
            if !ctx.has_news(0) {
                ctx.consume_all();
                return Ok(());
            }
            ctx.consume_all();
            let f = ctx.require_config(1, "function")?.to_string();
            let mut selectors: Vec<usize> = (2..=ctx.config_count())
                .filter_map(|i| ctx.config(i).and_then(parse_selector))
                .collect();
            if selectors.is_empty() {
                selectors.push(0);
            }
            let args: Vec<String> = selectors
                .iter()
                .map(|i| ctx.latest(*i).unwrap_or_default())
                .collect();
            let result = if f.trim_start().starts_with('(') {
                let prog = ExprProgram::parse(&f).map_err(|e| NodeError(e.0))?;
                FnValue::from_option(prog.eval_text(&args).map_err(|e| NodeError(e.0))?)
            } else {
                let func = functions::lookup(&f).ok_or_else(|| NodeError(format!("unknown function '{f}'")))?;
                func(&args).map_err(NodeError)?
            };
            match result {
                FnValue::False => Ok(()),
                FnValue::Text(t) => ctx.write(0, t),
                FnValue::List(items) => {
                    let n = ctx.output_count();
                    for (i, item) in items.into_iter().enumerate().take(n) {
                        ctx.write(i, item)?;
                    }
                    Ok(())
                }
            }
        }))
        .on_term(noop())
}

// ---- Graph and View

fn graph_spec() -> NodeClassSpec {
    NodeClassSpec::new("Graph", "draws the records it receives")
        .input("data", "records to draw")
        .variadic_inputs()
        .on_init(noop())
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            let shown: Vec<String> = (0..ctx.input_count()).filter_map(|i| ctx.latest(i)).collect();
            ctx.set_display(shown.join("\n"));
            Ok(())
        }))
        .on_term(noop())
}

fn view_spec() -> NodeClassSpec {
    NodeClassSpec::new(VIEW_CLASS, "groups outputs and nodes for display")
        .input("slot", "an output or a node linked with -->")
        .variadic_inputs()
        .on_init(noop())
        .on_exec(callback(|ctx| {
            ctx.consume_all();
            Ok(())
        }))
        .on_term(noop())
}

pub fn register(reg: &mut NodeRegistry) -> Result<(), RegistryError> {
    for spec in [
        clock_spec(),
        filter_spec(),
        format_spec(),
        json_filter_spec(),
        tee_spec(),
        table_view_spec(),
        flow_space_filter_spec(),
        function_spec(),
        graph_spec(),
        view_spec(),
    ] {
        reg.register(spec)?;
    }
    Ok(())
}
