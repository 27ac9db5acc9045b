//! REST access and SDN controller queries.
//!
//! Every controller flavor serves `/dpids`, `/flowstats/<dpid>` and
//! `/topology`; the JSON shapes differ and are normalized here into
//! `dpid=..,nw_src=..,nw_dst=..,actions=..` flow lines and `a -> b` links.

use std::time::Duration;

use serde_json::Value as Json;

use super::spec::{callback, noop, NodeClassSpec, NodeError, NodeRegistry, RegistryError};
use crate::engine::NodeContext;

pub const HTTP_TIMEOUT: Duration = Duration::from_secs(5);

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(HTTP_TIMEOUT))
        .http_status_as_error(false)
        .build()
        .into()
}

/// Status code and body. Transport failures are errors.
pub fn http_request(method: &str, url: &str, body: Option<&str>) -> Result<(u16, String), String> {
    let a = agent();
    let resp = match method.to_ascii_uppercase().as_str() {
        "GET" => a.get(url).call(),
        "DELETE" => a.delete(url).call(),
        "POST" => a
            .post(url)
            .header("Content-Type", "application/json")
            .send(body.unwrap_or("")),
        "PUT" => a
            .put(url)
            .header("Content-Type", "application/json")
            .send(body.unwrap_or("")),
        other => return Err(format!("unsupported method '{other}'")),
    };
    let mut resp = resp.map_err(|e| format!("{method} {url}: {e}"))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| format!("{method} {url}: {e}"))?;
    Ok((status, text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Pox,
    Floodlight,
    Odl,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Pox, Flavor::Floodlight, Flavor::Odl];

    pub fn suffix(self) -> &'static str {
        match self {
            Flavor::Pox => "POX",
            Flavor::Floodlight => "Floodlight",
            Flavor::Odl => "ODL",
        }
    }

    pub fn parse(s: &str) -> Option<Flavor> {
        match s.to_ascii_lowercase().as_str() {
            "pox" | "sdn" => Some(Flavor::Pox),
            "floodlight" => Some(Flavor::Floodlight),
            "odl" => Some(Flavor::Odl),
            _ => None,
        }
    }

    /// Native DPID spelling of switch `n`.
    pub fn format_dpid(self, n: u64) -> String {
        let bytes = n.to_be_bytes();
        match self {
            Flavor::Pox => bytes[2..].iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join("-"),
            Flavor::Floodlight => bytes.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(":"),
            Flavor::Odl => format!("openflow:{n}"),
        }
    }

    pub fn parse_dpid(self, s: &str) -> Option<u64> {
        match self {
            Flavor::Pox | Flavor::Floodlight => {
                let hex: String = s.split(['-', ':']).collect();
                u64::from_str_radix(&hex, 16).ok()
            }
            Flavor::Odl => s.strip_prefix("openflow:")?.parse().ok(),
        }
    }
}

/// `http://host:8080` for a bare host, the value itself for a URL.
pub fn controller_base(controller: &str) -> String {
    let c = controller.trim().trim_end_matches('/');
    if c.starts_with("http://") || c.starts_with("https://") {
        c.to_string()
    } else if c.contains(':') {
        format!("http://{c}")
    } else {
        format!("http://{c}:8080")
    }
}

fn str_at<'a>(v: &'a Json, path: &[&str]) -> Option<&'a str> {
    let mut cur = v;
    for k in path {
        cur = cur.get(*k)?;
    }
    cur.as_str()
}

fn array<'a>(v: &'a Json, path: &[&str]) -> Vec<&'a Json> {
    let mut cur = v;
    for k in path {
        match cur.get(*k) {
            Some(n) => cur = n,
            None => return Vec::new(),
        }
    }
    cur.as_array().map(|a| a.iter().collect()).unwrap_or_default()
}

/// `(dpid, name)` pairs.
pub fn normalize_dpids(flavor: Flavor, doc: &Json) -> Vec<(String, String)> {
    let (items, id_key): (Vec<&Json>, &str) = match flavor {
        Flavor::Pox => (array(doc, &[]), "dpid"),
        Flavor::Floodlight => (array(doc, &[]), "switchDPID"),
        Flavor::Odl => (array(doc, &["nodes", "node"]), "id"),
    };
    items
        .into_iter()
        .filter_map(|s| {
            let id = s.get(id_key)?.as_str()?.to_string();
            let name = s.get("name").and_then(Json::as_str).unwrap_or(&id).to_string();
            Some((id, name))
        })
        .collect()
}

fn field_or_any(v: Option<&str>) -> String {
    v.filter(|s| !s.is_empty()).unwrap_or("*").to_string()
}

/// Flow lines for one switch.
pub fn normalize_flows(flavor: Flavor, dpid: &str, doc: &Json) -> Vec<String> {
    let line = |src: Option<&str>, dst: Option<&str>, actions: Vec<String>| {
        format!(
            "dpid={dpid},nw_src={},nw_dst={},actions={}",
            field_or_any(src),
            field_or_any(dst),
            if actions.is_empty() { "drop".to_string() } else { actions.join(";") }
        )
    };
    match flavor {
        Flavor::Pox => array(doc, &[])
            .into_iter()
            .map(|f| {
                let actions = array(f, &["actions"])
                    .into_iter()
                    .filter_map(|a| a.get("port").and_then(Json::as_u64))
                    .map(|p| format!("output:{p}"))
                    .collect();
                line(str_at(f, &["match", "nw_src"]), str_at(f, &["match", "nw_dst"]), actions)
            })
            .collect(),
        Flavor::Floodlight => array(doc, &[dpid])
            .into_iter()
            .map(|f| {
                let actions = str_at(f, &["instructions", "instruction_apply_actions", "actions"])
                    .unwrap_or("")
                    .split(',')
                    .filter_map(|a| a.trim().strip_prefix("output="))
                    .map(|p| format!("output:{p}"))
                    .collect();
                line(str_at(f, &["match", "ipv4_src"]), str_at(f, &["match", "ipv4_dst"]), actions)
            })
            .collect(),
        Flavor::Odl => array(doc, &["flows"])
            .into_iter()
            .map(|f| {
                let actions = array(f, &["actions"])
                    .into_iter()
                    .filter_map(|a| a.as_str().map(str::to_string))
                    .collect();
                line(
                    str_at(f, &["match", "ipv4-source"]),
                    str_at(f, &["match", "ipv4-destination"]),
                    actions,
                )
            })
            .collect(),
    }
}

/// `(src, dst)` switch pairs.
pub fn normalize_links(flavor: Flavor, doc: &Json) -> Vec<(String, String)> {
    let pairs: Vec<(Option<&str>, Option<&str>)> = match flavor {
        Flavor::Pox => array(doc, &[])
            .into_iter()
            .map(|l| (str_at(l, &["src", "dpid"]), str_at(l, &["dst", "dpid"])))
            .collect(),
        Flavor::Floodlight => array(doc, &[])
            .into_iter()
            .map(|l| (str_at(l, &["src-switch"]), str_at(l, &["dst-switch"])))
            .collect(),
        Flavor::Odl => array(doc, &["topology"])
            .into_iter()
            .flat_map(|t| array(t, &["link"]))
            .map(|l| (str_at(l, &["source", "source-node"]), str_at(l, &["destination", "dest-node"])))
            .collect(),
    };
    pairs
        .into_iter()
        .filter_map(|(a, b)| Some((a?.to_string(), b?.to_string())))
        .collect()
}

fn fetch_json(url: &str) -> Result<Json, String> {
    let (status, body) = http_request("GET", url, None)?;
    if !(200..300).contains(&status) {
        return Err(format!("GET {url}: HTTP {status}"));
    }
    serde_json::from_str(&body).map_err(|e| format!("GET {url}: invalid JSON: {e}"))
}

/// Writes an `ERROR:` record on output 0 and fails the callback.
fn fail(ctx: &mut NodeContext<'_>, msg: String) -> Result<(), NodeError> {
    ctx.write(0, format!("ERROR: {msg}"))?;
    Err(NodeError(msg))
}

/// Input 0 is the trigger; input-less instances run once at start.
fn triggered(ctx: &mut NodeContext<'_>) -> bool {
    let go = !ctx.is_connected(0) || ctx.has_news(0);
    if !go {
        ctx.consume_all();
    }
    go
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    let mut s: String = items.into_iter().map(|l| l + "\n").collect();
    if s.is_empty() {
        s.push('\n');
    }
    s
}

fn rest_api_spec() -> NodeClassSpec {
    NodeClassSpec::new("Rest-api", "issues an HTTP request")
        .input("trigger", "new records send the request; also the body of POST and PUT")
        .config("url", "request URL", true)
        .config("method", "GET (default), POST, PUT or DELETE", false)
        .output("body", "response body")
        .output("status", "HTTP status code, 0 when the request failed")
        .autostart()
        .on_init(noop())
        .on_exec(callback(|ctx| {
            if !triggered(ctx) {
                return Ok(());
            }
            ctx.consume_all();
            let body = ctx.latest(0).unwrap_or_default();
            let url = ctx.require_config(1, "url")?.to_string();
            let method = ctx.config(2).unwrap_or("GET").to_string();
            let send = matches!(method.to_ascii_uppercase().as_str(), "POST" | "PUT");
            match http_request(&method, &url, send.then_some(body.as_str())) {
                Ok((status, text)) => {
                    ctx.write(0, text)?;
                    ctx.write(1, status.to_string())
                }
                Err(e) => {
                    ctx.write(1, "0")?;
                    fail(ctx, e)
                }
            }
        }))
        .on_term(noop())
}

fn dpids_spec(class: &str, flavor: Flavor) -> NodeClassSpec {
    NodeClassSpec::new(class, format!("lists the switches known to a {} controller", flavor.suffix()))
        .input("trigger", "new records repeat the query")
        .config("controller", "controller host or base URL", true)
        .output("dpids", "one datapath id per line")
        .output("names", "one switch name per line")
        .autostart()
        .on_init(noop())
        .on_exec(callback(move |ctx| {
            if !triggered(ctx) {
                return Ok(());
            }
            ctx.consume_all();
            let base = controller_base(ctx.require_config(1, "controller")?);
            match fetch_json(&format!("{base}/dpids")) {
                Ok(doc) => {
                    let pairs = normalize_dpids(flavor, &doc);
                    ctx.write(0, lines(pairs.iter().map(|p| p.0.clone())))?;
                    ctx.write(1, lines(pairs.into_iter().map(|p| p.1)))
                }
                Err(e) => fail(ctx, e),
            }
        }))
        .on_term(noop())
}

fn flow_stat_spec(class: &str, flavor: Flavor) -> NodeClassSpec {
    NodeClassSpec::new(class, format!("flow table of switches on a {} controller", flavor.suffix()))
        .input("dpids", "datapath ids, one per line; each new record repeats the query")
        .config("controller", "controller host or base URL", true)
        .config("dpid", "switch to query when nothing arrives on input 0", false)
        .output("flows", "normalized flow lines")
        .autostart()
        .on_init(noop())
        .on_exec(callback(move |ctx| {
            if !triggered(ctx) {
                return Ok(());
            }
            let delta = ctx.read_delta(0);
            ctx.consume_all();
            let mut dpids: Vec<String> = delta
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("ERROR"))
                .map(str::to_string)
                .collect();
            if dpids.is_empty() {
                if let Some(d) = ctx.config(2) {
                    dpids.push(d.to_string());
                }
            }
            if dpids.is_empty() {
                return Ok(());
            }
            let base = controller_base(ctx.require_config(1, "controller")?);
            let mut out = Vec::new();
            for dpid in dpids {
                match fetch_json(&format!("{base}/flowstats/{dpid}")) {
                    Ok(doc) => out.extend(normalize_flows(flavor, &dpid, &doc)),
                    Err(e) => return fail(ctx, e),
                }
            }
            ctx.write(0, lines(out))
        }))
        .on_term(noop())
}

fn topology_spec(class: &str, flavor: Flavor) -> NodeClassSpec {
    NodeClassSpec::new(class, format!("switch links known to a {} controller", flavor.suffix()))
        .input("trigger", "new records repeat the query")
        .config("controller", "controller host or base URL", true)
        .output("links", "one 'src -> dst' line per link")
        .autostart()
        .on_init(noop())
        .on_exec(callback(move |ctx| {
            if !triggered(ctx) {
                return Ok(());
            }
            ctx.consume_all();
            let base = controller_base(ctx.require_config(1, "controller")?);
            match fetch_json(&format!("{base}/topology")) {
                Ok(doc) => {
                    let links = normalize_links(flavor, &doc);
                    ctx.write(0, lines(links.into_iter().map(|(a, b)| format!("{a} -> {b}"))))
                }
                Err(e) => fail(ctx, e),
            }
        }))
        .on_term(noop())
}

pub fn register(reg: &mut NodeRegistry) -> Result<(), RegistryError> {
    reg.register(rest_api_spec())?;
    let mut flavors: Vec<(&str, Flavor)> = vec![("SDN", Flavor::Pox)];
    flavors.extend(Flavor::ALL.iter().map(|f| (f.suffix(), *f)));
    for (suffix, flavor) in flavors {
        reg.register(dpids_spec(&format!("Dpids-{suffix}"), flavor))?;
        reg.register(flow_stat_spec(&format!("Flow-stat-{suffix}"), flavor))?;
        reg.register(topology_spec(&format!("Topology-{suffix}"), flavor))?;
    }
    Ok(())
}
