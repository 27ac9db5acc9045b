//! Wrappers around command-line diagnostic tools.
//!
//! Config 1 of every wrapper is the host to run on (`nil` or `localhost`
//! for the local machine). Output 0 relays stdout unmodified followed by an
//! `exit N` record; classes with an extractor also write one derived record
//! to output 1 per run.

use std::sync::Arc;

use super::functions::{iptables_matches, ping_summary, route_matches, traceroute_status};
use super::spec::{callback, noop, NodeClassSpec, NodeError, NodeRegistry, RegistryError};
use crate::engine::{NodeContext, ProcessRequest};

/// Derives output 1 from the full stdout and the node's resolved configs.
pub type ToolExtractor = fn(&str, &ToolArgs) -> String;

/// Config values seen by templates and extractors, index 0 = config 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ToolArgs {
    pub configs: Vec<Option<String>>,
    pub inputs: Vec<Option<String>>,
}

impl ToolArgs {
    pub fn config(&self, index: usize) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.configs.get(i))
            .and_then(|v| v.as_deref())
    }
}

/// How a tool class builds and post-processes its command.
#[derive(Debug, Clone)]
pub struct ToolSpec {
    pub class: &'static str,
    pub doc: &'static str,
    /// `(name, doc, required)`, config 1 (host) excluded.
    pub configs: Vec<(&'static str, &'static str, bool)>,
    /// Argument patterns. `{N}` is config N (required), `{N?}` drops the
    /// whole pattern when config N is unset, `{N|dflt}` falls back to
    /// `dflt`, `{N*}` splits config N on whitespace and `{iN}` is the newest
    /// record of input N. Patterns containing spaces are split after
    /// substitution; others stay one argument.
    pub template: Vec<&'static str>,
    pub extractor: Option<(&'static str, ToolExtractor)>,
}

/// Expands a template. Fails when a required placeholder is unset.
pub fn expand_template(template: &[&str], args: &ToolArgs) -> Result<Vec<String>, String> {
    let mut argv = Vec::new();
    'pattern: for pat in template {
        let mut out = String::new();
        let mut rest = *pat;
        let mut split_words: Option<Vec<String>> = None;
        while let Some(open) = rest.find('{') {
            let Some(close) = rest[open..].find('}').map(|c| open + c) else {
                return Err(format!("unclosed placeholder in '{pat}'"));
            };
            out.push_str(&rest[..open]);
            let body = &rest[open + 1..close];
            rest = &rest[close + 1..];
            if let Some(n) = body.strip_prefix('i') {
                let n: usize = n.parse().map_err(|_| format!("bad placeholder '{{{body}}}'"))?;
                let v = args.inputs.get(n).cloned().flatten().unwrap_or_default();
                out.push_str(v.trim());
                continue;
            }
            let (num, mode) = match body.find(['?', '|', '*']) {
                Some(i) => (&body[..i], &body[i..]),
                None => (body, ""),
            };
            let n: usize = num.parse().map_err(|_| format!("bad placeholder '{{{body}}}'"))?;
            let value = args.config(n);
            match (mode.chars().next(), value) {
                (None, Some(v)) => out.push_str(v),
                (None, None) => return Err(format!("config {n} is required")),
                (Some('?'), Some(v)) => out.push_str(v),
                (Some('?'), None) => continue 'pattern,
                (Some('|'), v) => out.push_str(v.unwrap_or(&mode[1..])),
                (Some('*'), v) => {
                    split_words = Some(v.unwrap_or("").split_whitespace().map(str::to_string).collect());
                }
                _ => unreachable!("mode chars are limited by find"),
            }
        }
        out.push_str(rest);
        if let Some(words) = split_words {
            argv.extend(words);
        }
        if pat.contains(char::is_whitespace) {
            argv.extend(out.split_whitespace().map(str::to_string));
        } else if !out.is_empty() {
            argv.push(out);
        }
    }
    Ok(argv)
}

fn tool_args(ctx: &NodeContext<'_>) -> ToolArgs {
    ToolArgs {
        configs: (1..=ctx.config_count()).map(|i| ctx.config(i).map(str::to_string)).collect(),
        inputs: (0..ctx.input_count()).map(|i| ctx.latest(i)).collect(),
    }
}

fn run_tool(tool: &ToolSpec, ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
    // Input 0 is the enable signal; input-less instances run once at start.
    if ctx.input_count() > 0 && ctx.is_connected(0) && !ctx.has_news(0) {
        ctx.consume_all();
        return Ok(());
    }
    let args = tool_args(ctx);
    ctx.consume_all();
    let argv = match expand_template(&tool.template, &args) {
        Ok(a) => a,
        Err(e) => {
            ctx.write(0, format!("ERROR: {e}"))?;
            return Err(NodeError(e));
        }
    };
    if let Some(stub) = ctx.stub() {
        let Some(reply) = stub.reply(tool.class, ctx.id()) else {
            let msg = format!("ERROR: no stub transcript for {}.{}", tool.class, ctx.id());
            ctx.write(0, msg.clone())?;
            return Err(NodeError(msg));
        };
        ctx.write(0, reply.stdout.clone())?;
        ctx.write_exit(0, reply.code)?;
        if let Some((_, f)) = tool.extractor {
            ctx.write(1, f(&reply.stdout, &args))?;
        }
        return Ok(());
    }
    let host = args.config(1).map(str::to_string);
    let extract = tool.extractor.map(|(_, f)| {
        let args = args.clone();
        (1, Arc::new(move |out: &str| f(out, &args)) as crate::engine::Extractor)
    });
    ctx.spawn(ProcessRequest {
        argv,
        host,
        output: 0,
        extract,
    });
    Ok(())
}

impl ToolSpec {
    pub fn node_spec(&self) -> NodeClassSpec {
        let mut spec = NodeClassSpec::new(self.class, self.doc)
            .input("enable", "any new record starts a run")
            .config("host", "machine to run on; nil or localhost for the local one", false)
            .output("stdout", "unmodified tool output followed by an exit record")
            .autostart();
        for (name, doc, required) in &self.configs {
            spec = spec.config(name, doc, *required);
        }
        if let Some((doc, _)) = self.extractor {
            spec = spec.output("status", doc);
        }
        let tool = self.clone();
        spec.on_init(noop())
            .on_exec(callback(move |ctx| run_tool(&tool, ctx)))
            .on_term(noop())
    }
}

fn ping_x(out: &str, _: &ToolArgs) -> String {
    ping_summary(out)
}

fn trace_x(out: &str, args: &ToolArgs) -> String {
    traceroute_status(out, args.config(2))
}

fn route_x(out: &str, args: &ToolArgs) -> String {
    route_matches(out, args.config(2))
}

fn iptables_x(out: &str, args: &ToolArgs) -> String {
    iptables_matches(out, args.config(2))
}

pub fn tool_specs() -> Vec<ToolSpec> {
    vec![
        ToolSpec {
            class: "Ping",
            doc: "wraps the ping command",
            configs: vec![
                ("target", "address to ping", true),
                ("count", "number of probes, default 3", false),
            ],
            template: vec!["ping", "-c {3|3}", "{2}"],
            extractor: Some(("packet-loss summary line", ping_x)),
        },
        ToolSpec {
            class: "Traceroute",
            doc: "wraps the traceroute command; reports success or the last hop",
            configs: vec![("target", "address to trace", true)],
            template: vec!["traceroute", "-n", "{2}"],
            extractor: Some((
                "'Success <target>', 'LastHop <addr>' or 'LastHop none'",
                trace_x,
            )),
        },
        ToolSpec {
            class: "Ifconfig",
            doc: "wraps the ifconfig command",
            configs: vec![("options", "extra ifconfig arguments", false)],
            template: vec!["ifconfig", "{2*}"],
            extractor: None,
        },
        ToolSpec {
            class: "Arp",
            doc: "queries the ARP cache with the arp command",
            configs: vec![
                ("interface", "restrict to one interface", false),
                ("options", "extra arp arguments such as -n", false),
            ],
            template: vec!["arp", "-i {2?}", "{3*}"],
            extractor: None,
        },
        ToolSpec {
            class: "Route",
            doc: "wraps the route command",
            configs: vec![("target", "address whose routes are reported on output 1", false)],
            template: vec!["route", "-n"],
            extractor: Some(("routing-table lines covering the target", route_x)),
        },
        ToolSpec {
            class: "Iptables",
            doc: "lists firewall rules with iptables",
            configs: vec![("target", "address whose rules are reported on output 1", false)],
            template: vec!["iptables", "-L", "-n"],
            extractor: Some(("rules naming a network that covers the target", iptables_x)),
        },
        ToolSpec {
            class: "Host",
            doc: "performs a DNS lookup with the host command",
            configs: vec![("name", "name to resolve", true)],
            template: vec!["host", "{2}"],
            extractor: None,
        },
        ToolSpec {
            class: "Iperf",
            doc: "wraps the iperf client",
            configs: vec![
                ("server", "iperf server to measure against", true),
                ("options", "extra iperf arguments", false),
            ],
            template: vec!["iperf", "-c", "{2}", "{3*}"],
            extractor: None,
        },
        ToolSpec {
            class: "Command",
            doc: "runs any shell command",
            configs: vec![("command", "command line passed to sh -c", true)],
            template: vec!["sh", "-c", "{2}"],
            extractor: None,
        },
    ]
}

pub fn register(reg: &mut NodeRegistry) -> Result<(), RegistryError> {
    for t in tool_specs() {
        reg.register(t.node_spec())?;
    }
    Ok(())
}
