//! Named functions usable as Decision verifiers and inside Function nodes,
//! plus the text extractors of the tool wrappers.

use std::net::Ipv4Addr;

use super::expr::first_match;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FnValue {
    False,
    Text(String),
    /// One element per output of a Function node.
    List(Vec<String>),
}

impl FnValue {
    pub fn from_option(v: Option<String>) -> FnValue {
        v.map_or(FnValue::False, FnValue::Text)
    }

    /// Single-text view: lists are joined by newlines.
    pub fn into_text(self) -> Option<String> {
        match self {
            FnValue::False => None,
            FnValue::Text(s) => Some(s),
            FnValue::List(items) => Some(items.join("\n")),
        }
    }
}

/// `args[0]` is the subject text, the rest are extra arguments.
pub type RegistryFn = fn(&[String]) -> Result<FnValue, String>;

pub const FUNCTION_NAMES: &[&str] = &[
    "identity",
    "string-match",
    "ifconfig-check-interfaces",
    "ifconfig-get-interfaces",
    "validate",
    "split-lines",
    "last-hop",
    "nth-line",
    "non-empty",
];

pub fn lookup(name: &str) -> Option<RegistryFn> {
    Some(match name {
        "identity" => identity,
        "string-match" => string_match,
        "ifconfig-check-interfaces" => check_interfaces,
        "ifconfig-get-interfaces" => get_interfaces,
        "validate" => validate,
        "split-lines" => split_lines,
        "last-hop" => last_hop,
        "nth-line" => nth_line,
        "non-empty" => non_empty,
        _ => return None,
    })
}

fn subject(args: &[String]) -> &str {
    args.first().map(String::as_str).unwrap_or("")
}

fn identity(args: &[String]) -> Result<FnValue, String> {
    Ok(FnValue::Text(subject(args).to_string()))
}

fn non_empty(args: &[String]) -> Result<FnValue, String> {
    let s = subject(args);
    Ok(if s.is_empty() { FnValue::False } else { FnValue::Text(s.to_string()) })
}

/// First line matching the pattern in `args[1]`.
fn string_match(args: &[String]) -> Result<FnValue, String> {
    let pattern = args.get(1).ok_or("string-match needs a pattern")?;
    first_match(pattern, subject(args))
        .map(FnValue::from_option)
        .map_err(|e| e.0)
}

/// One interface block of `ifconfig` output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub name: String,
    pub up: bool,
    pub inet: Option<String>,
}

/// Parses both the `eth0: flags=<UP,...>` and the older
/// `eth0  Link encap:...` layouts.
pub fn parse_ifconfig(text: &str) -> Vec<Interface> {
    let mut out: Vec<Interface> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(char::is_whitespace) {
            let name = line
                .split(|c: char| c.is_whitespace() || c == ':')
                .next()
                .unwrap_or("")
                .to_string();
            let up = flags_up(line);
            out.push(Interface { name, up, inet: None });
            continue;
        }
        let Some(cur) = out.last_mut() else {
            continue;
        };
        let t = line.trim();
        if t.starts_with("UP ") || t == "UP" {
            cur.up = true;
        }
        if let Some(rest) = t.strip_prefix("inet addr:") {
            cur.inet = rest.split_whitespace().next().map(str::to_string);
        } else if let Some(rest) = t.strip_prefix("inet ") {
            cur.inet = rest.split_whitespace().next().map(str::to_string);
        }
    }
    out
}

fn flags_up(header: &str) -> bool {
    match (header.find('<'), header.find('>')) {
        (Some(a), Some(b)) if a < b => header[a + 1..b].split(',').any(|f| f == "UP"),
        _ => false,
    }
}

fn excluded(args: &[String]) -> Vec<&str> {
    let extra: Vec<&str> = args[1.min(args.len())..]
        .iter()
        .flat_map(|a| a.split_whitespace())
        .collect();
    if extra.is_empty() {
        vec!["lo"]
    } else {
        extra
    }
}

/// Passes (returning the whole text) when some interface other than the
/// excluded ones is up and has an IPv4 address.
fn check_interfaces(args: &[String]) -> Result<FnValue, String> {
    let skip = excluded(args);
    let ok = parse_ifconfig(subject(args))
        .iter()
        .any(|i| !skip.contains(&i.name.as_str()) && i.up && i.inet.is_some());
    Ok(if ok { FnValue::Text(subject(args).to_string()) } else { FnValue::False })
}

/// Interface names minus the excluded ones (`lo` by default).
fn get_interfaces(args: &[String]) -> Result<FnValue, String> {
    let skip = excluded(args);
    let names: Vec<String> = parse_ifconfig(subject(args))
        .into_iter()
        .map(|i| i.name)
        .filter(|n| !skip.contains(&n.as_str()))
        .collect();
    Ok(if names.is_empty() { FnValue::False } else { FnValue::List(names) })
}

/// A `host` lookup succeeded.
fn validate(args: &[String]) -> Result<FnValue, String> {
    Ok(FnValue::from_option(
        subject(args)
            .lines()
            .find(|l| l.contains("has address"))
            .map(str::to_string),
    ))
}

fn split_lines(args: &[String]) -> Result<FnValue, String> {
    let lines: Vec<String> = subject(args)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    Ok(if lines.is_empty() { FnValue::False } else { FnValue::List(lines) })
}

/// Address from a `LastHop <addr>` status line.
fn last_hop(args: &[String]) -> Result<FnValue, String> {
    let hop = subject(args)
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix("LastHop "))
        .map(str::trim)
        .filter(|a| *a != "none")
        .map(str::to_string);
    Ok(FnValue::from_option(hop))
}

/// Line `args[1]` (0-based) of the subject.
fn nth_line(args: &[String]) -> Result<FnValue, String> {
    let n: usize = args
        .get(1)
        .ok_or("nth-line needs an index")?
        .parse()
        .map_err(|_| "nth-line index must be a number".to_string())?;
    Ok(FnValue::from_option(subject(args).lines().nth(n).map(str::to_string)))
}

/// Combines per-input verification results.
pub type Combiner = fn(&[Option<String>]) -> Option<String>;

pub fn combiner(name: &str) -> Option<Combiner> {
    match name {
        "or" => Some(combine_or),
        "and" => Some(combine_and),
        _ => None,
    }
}

/// First passing result.
pub fn combine_or(results: &[Option<String>]) -> Option<String> {
    results.iter().flatten().next().cloned()
}

/// Last result when all pass.
pub fn combine_and(results: &[Option<String>]) -> Option<String> {
    if results.is_empty() || results.iter().any(Option::is_none) {
        return None;
    }
    results.last().cloned().flatten()
}

fn find_ipv4(token: &str) -> Option<Ipv4Addr> {
    token
        .trim_matches(|c: char| c == '(' || c == ')' || c == ',')
        .parse()
        .ok()
}

/// Status line of a traceroute run: `Success <target>` when the last hop is
/// the target, else `LastHop <addr>` of the last hop that answered, else
/// `LastHop none`.
pub fn traceroute_status(trace: &str, target: Option<&str>) -> String {
    let mut last_addr: Option<String> = None;
    let mut final_hop: Vec<String> = Vec::new();
    for line in trace.lines() {
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        if first.parse::<u32>().is_err() {
            continue;
        }
        let rest: Vec<String> = tokens.map(str::to_string).collect();
        if let Some(addr) = rest.iter().find_map(|t| find_ipv4(t)) {
            last_addr = Some(addr.to_string());
        }
        final_hop = rest;
    }
    if let Some(target) = target {
        let reached = final_hop.iter().any(|t| {
            t.trim_matches(|c: char| c == '(' || c == ')') == target
        });
        if reached {
            return format!("Success {target}");
        }
    }
    match last_addr {
        Some(a) => format!("LastHop {a}"),
        None => "LastHop none".to_string(),
    }
}

/// Summary line of a ping run.
pub fn ping_summary(out: &str) -> String {
    out.lines()
        .find(|l| l.contains("packet loss"))
        .unwrap_or("")
        .to_string()
}

fn mask_bits(mask: Ipv4Addr) -> u32 {
    u32::from(mask)
}

/// `route -n` lines whose destination network (default route excluded)
/// contains `target`.
pub fn route_matches(out: &str, target: Option<&str>) -> String {
    let Some(target) = target.and_then(|t| t.parse::<Ipv4Addr>().ok()) else {
        return String::new();
    };
    let t = u32::from(target);
    let mut hits = String::new();
    for line in out.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 3 {
            continue;
        }
        let (Some(dest), Some(mask)) = (find_ipv4(f[0]), find_ipv4(f[2])) else {
            continue;
        };
        let m = mask_bits(mask);
        if m != 0 && (u32::from(dest) & m) == (t & m) {
            hits.push_str(line);
            hits.push('\n');
        }
    }
    hits
}

fn cidr_contains(token: &str, target: u32) -> bool {
    let (addr, bits) = match token.split_once('/') {
        Some((a, b)) => (a, b.parse::<u32>().ok()),
        None => (token, Some(32)),
    };
    let (Ok(addr), Some(bits)) = (addr.parse::<Ipv4Addr>(), bits) else {
        return false;
    };
    if bits == 0 || bits > 32 {
        return false;
    }
    let mask = u32::MAX << (32 - bits);
    (u32::from(addr) & mask) == (target & mask)
}

/// `iptables -L -n` rules naming an address or network (0.0.0.0/0 excluded)
/// that contains `target`.
pub fn iptables_matches(out: &str, target: Option<&str>) -> String {
    let Some(target) = target.and_then(|t| t.parse::<Ipv4Addr>().ok()) else {
        return String::new();
    };
    let t = u32::from(target);
    let mut hits = String::new();
    for line in out.lines() {
        if line.split_whitespace().any(|tok| cidr_contains(tok, t)) {
            hits.push_str(line);
            hits.push('\n');
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    const IFCONFIG: &str = "\
eth0: flags=4163<UP,BROADCAST,RUNNING,MULTICAST>  mtu 1500
        inet 10.0.0.2  netmask 255.255.255.0  broadcast 10.0.0.255
        ether 02:42:0a:00:00:02  txqueuelen 0  (Ethernet)

lo: flags=73<UP,LOOPBACK,RUNNING>  mtu 65536
        inet 127.0.0.1  netmask 255.0.0.0
";

    fn call(name: &str, args: &[&str]) -> FnValue {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        lookup(name).unwrap()(&args).unwrap()
    }

    #[test]
    fn interface_names_skip_loopback() {
        assert_eq!(call("ifconfig-get-interfaces", &[IFCONFIG]), FnValue::List(vec!["eth0".into()]));
        assert_eq!(call("ifconfig-check-interfaces", &[IFCONFIG, "lo"]), FnValue::Text(IFCONFIG.into()));
        let down = IFCONFIG.replace("4163<UP,", "4098<");
        assert_eq!(call("ifconfig-check-interfaces", &[&down, "lo"]), FnValue::False);
    }

    #[test]
    fn old_style_ifconfig() {
        let text = "eth1      Link encap:Ethernet  HWaddr 00:11\n          inet addr:192.168.1.5  Bcast:192.168.1.255\n          UP BROADCAST RUNNING  MTU:1500\n";
        let ifs = parse_ifconfig(text);
        assert_eq!(ifs.len(), 1);
        assert!(ifs[0].up);
        assert_eq!(ifs[0].inet.as_deref(), Some("192.168.1.5"));
    }

    #[test]
    fn host_lookup_validation() {
        assert!(matches!(call("validate", &["a.example has address 1.2.3.4\n"]), FnValue::Text(_)));
        assert_eq!(call("validate", &["Host a.example not found: 3(NXDOMAIN)\n"]), FnValue::False);
    }

    #[test]
    fn combiners() {
        let r = vec![None, Some("B".to_string()), Some("C".to_string())];
        assert_eq!(combine_or(&r), Some("B".into()));
        assert_eq!(combine_and(&r), None);
        assert_eq!(combine_and(&r[1..]), Some("C".into()));
        assert_eq!(combine_or(&[]), None);
    }

    #[test]
    fn traceroute_outcomes() {
        let reached = "traceroute to 125.0.1.254\n 1  10.0.0.1  0.3 ms\n 2  10.0.1.254  1.0 ms\n 3  125.0.1.254  2.0 ms\n";
        assert_eq!(traceroute_status(reached, Some("125.0.1.254")), "Success 125.0.1.254");
        let stuck = "traceroute to 125.0.1.254\n 1  10.0.0.1  0.3 ms\n 2  10.0.1.254  1.0 ms\n 3  * * *\n 4  * * *\n";
        assert_eq!(traceroute_status(stuck, Some("125.0.1.254")), "LastHop 10.0.1.254");
        assert_eq!(traceroute_status("", Some("1.2.3.4")), "LastHop none");
        assert_eq!(traceroute_status(" 1  * * *\n", Some("1.2.3.4")), "LastHop none");
    }

    #[test]
    fn route_and_firewall_matching() {
        let routes = "Kernel IP routing table\nDestination     Gateway         Genmask         Flags Metric Ref    Use Iface\n0.0.0.0         10.0.0.1        0.0.0.0         UG    0      0        0 eth0\n125.0.1.0       10.0.1.254      255.255.255.0   UG    0      0        0 eth0\n";
        assert_eq!(route_matches(routes, Some("125.0.1.254")).lines().count(), 1);
        assert_eq!(route_matches(routes, Some("8.8.8.8")), "");
        let rules = "Chain INPUT (policy ACCEPT)\ntarget     prot opt source               destination\nDROP       all  --  0.0.0.0/0            125.0.1.0/24\nACCEPT     all  --  0.0.0.0/0            0.0.0.0/0\n";
        assert_eq!(iptables_matches(rules, Some("125.0.1.254")).lines().count(), 1);
        assert_eq!(iptables_matches(rules, Some("9.9.9.9")), "");
    }

    #[test]
    fn small_helpers() {
        assert_eq!(call("last-hop", &["LastHop 10.0.1.254"]), FnValue::Text("10.0.1.254".into()));
        assert_eq!(call("last-hop", &["LastHop none"]), FnValue::False);
        assert_eq!(call("split-lines", &["a\n\nb\n"]), FnValue::List(vec!["a".into(), "b".into()]));
        assert_eq!(call("nth-line", &["a\nb", "1"]), FnValue::Text("b".into()));
        assert!(lookup("nope").is_none());
        assert_eq!(ping_summary("x\n3 packets transmitted, 0 received, 100% packet loss\n"), "3 packets transmitted, 0 received, 100% packet loss");
    }
}
