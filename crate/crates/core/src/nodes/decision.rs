//! Branching: per-input verification, a combiner, then positive, negative
//! and status outputs.

use serde::{Deserialize, Serialize};

use super::expr::ExprProgram;
use super::functions::{self, Combiner, FnValue};
use super::spec::{callback, noop, NodeClassSpec, NodeError, NodeRegistry, RegistryError};
use super::DECISION_CLASS;
use crate::engine::NodeContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One evaluation of a Decision node, as written to its status output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionStatus {
    pub label: String,
    pub result: Verdict,
    pub detail: String,
    pub seq: u64,
    pub timestamp: u64,
}

impl DecisionStatus {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("status serializes")
    }

    pub fn from_json(text: &str) -> Result<DecisionStatus, serde_json::Error> {
        serde_json::from_str(text.trim())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifierFn {
    Named(String),
    Expr(String),
    /// No verifier configured: the input text is the result.
    PassThrough,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verifier {
    pub func: VerifierFn,
    pub extra: Option<String>,
}

impl Verifier {
    /// `Ok(None)` is a failed verification.
    pub fn run(&self, text: &str) -> Result<Option<String>, String> {
        match &self.func {
            VerifierFn::PassThrough => Ok(Some(text.to_string())),
            VerifierFn::Expr(src) => {
                let prog = ExprProgram::parse(src).map_err(|e| e.0)?;
                let mut inputs = vec![text.to_string()];
                inputs.extend(self.extra.clone());
                prog.eval_text(&inputs).map_err(|e| e.0)
            }
            VerifierFn::Named(name) => {
                let f = functions::lookup(name).ok_or_else(|| format!("unknown function '{name}'"))?;
                let mut args = vec![text.to_string()];
                args.extend(self.extra.clone());
                f(&args).map(FnValue::into_text)
            }
        }
    }
}

/// Positional layout: label, then a (verifier, extra argument) pair per
/// input, optionally ending with `combine=<name>` (default `or`).
#[derive(Debug, Clone)]
pub struct DecisionConfig {
    pub label: String,
    pub verifiers: Vec<Verifier>,
    pub combiner_name: String,
    pub combiner: Combiner,
}

impl DecisionConfig {
    /// `configs[0]` is config 1.
    pub fn parse(configs: &[Option<String>], fallback_label: &str) -> Result<DecisionConfig, NodeError> {
        let mut rest: Vec<Option<String>> = configs.to_vec();
        while rest.last().is_some_and(Option::is_none) {
            rest.pop();
        }
        let mut combiner_name = "or".to_string();
        if let Some(Some(last)) = rest.last() {
            if let Some(name) = last.strip_prefix("combine=") {
                combiner_name = name.trim().to_string();
                rest.pop();
            }
        }
        let combiner = functions::combiner(&combiner_name)
            .ok_or_else(|| NodeError(format!("unknown combiner '{combiner_name}'")))?;
        let label = rest
            .first()
            .cloned()
            .flatten()
            .unwrap_or_else(|| fallback_label.to_string());
        let verifiers = rest
            .get(1..)
            .unwrap_or(&[])
            .chunks(2)
            .map(|pair| {
                let func = match &pair[0] {
                    None => VerifierFn::PassThrough,
                    Some(s) if s.trim_start().starts_with('(') => VerifierFn::Expr(s.clone()),
                    Some(s) => VerifierFn::Named(s.clone()),
                };
                Verifier {
                    func,
                    extra: pair.get(1).cloned().flatten(),
                }
            })
            .collect::<Vec<_>>();
        for v in &verifiers {
            match &v.func {
                VerifierFn::Named(n) if functions::lookup(n).is_none() => {
                    return Err(NodeError(format!("unknown function '{n}'")));
                }
                VerifierFn::Expr(src) => {
                    ExprProgram::parse(src).map_err(|e| NodeError(format!("bad verifier: {e}")))?;
                }
                _ => {}
            }
        }
        Ok(DecisionConfig {
            label,
            verifiers,
            combiner_name,
            combiner,
        })
    }

    pub fn verifier(&self, input: usize) -> Verifier {
        self.verifiers.get(input).cloned().unwrap_or(Verifier {
            func: VerifierFn::PassThrough,
            extra: None,
        })
    }
}

#[derive(Debug, Default)]
struct DecisionState {
    /// Latest verification result per input; `None` until it reports.
    results: Vec<Option<Option<String>>>,
    details: Vec<String>,
    seq: u64,
}

fn evaluate(ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
    let cfg = DecisionConfig::parse(
        &(1..=ctx.config_count()).map(|i| ctx.config(i).map(str::to_string)).collect::<Vec<_>>(),
        ctx.id(),
    )?;
    let n = ctx.input_count();
    let news: Vec<bool> = (0..n).map(|i| ctx.has_news(i)).collect();
    if !news.iter().any(|b| *b) {
        return Ok(());
    }
    let texts: Vec<Option<String>> = (0..n)
        .map(|i| if news[i] { Some(ctx.read_delta(i)) } else { None })
        .collect();
    let now = ctx.now_ms();
    let st = ctx.state::<DecisionState>();
    st.results.resize(n, None);
    st.details.resize(n, String::new());
    for (i, text) in texts.iter().enumerate() {
        let Some(text) = text else { continue };
        match cfg.verifier(i).run(text) {
            Ok(r) => {
                st.details[i] = if r.is_some() {
                    String::new()
                } else {
                    format!("input {i} did not verify")
                };
                st.results[i] = Some(r);
            }
            Err(e) => {
                st.details[i] = format!("input {i}: {e}");
                st.results[i] = Some(None);
            }
        }
    }
    let flat: Vec<Option<String>> = st.results.iter().map(|r| r.clone().flatten()).collect();
    let combined = (cfg.combiner)(&flat);
    st.seq += 1;
    let seq = st.seq;
    let failures: Vec<String> = st.details.iter().filter(|d| !d.is_empty()).cloned().collect();
    let status = DecisionStatus {
        label: cfg.label.clone(),
        result: if combined.is_some() { Verdict::Pass } else { Verdict::Fail },
        detail: match &combined {
            Some(s) => s.lines().next().unwrap_or("").to_string(),
            None if failures.is_empty() => "no input verified".to_string(),
            None => failures.join("; "),
        },
        seq,
        timestamp: now,
    };
    match combined {
        Some(s) => ctx.write(0, s)?,
        None => ctx.write(1, format!("{}: {}", cfg.label, status.detail))?,
    }
    ctx.write(2, status.to_json())?;
    Ok(())
}

pub fn register(reg: &mut NodeRegistry) -> Result<(), RegistryError> {
    reg.register(
        NodeClassSpec::new(DECISION_CLASS, "conditional branching over verified inputs")
            .input("data", "text to verify; further inputs are verified by later verifier pairs")
            .variadic_inputs()
            .config("label", "name shown in summaries", false)
            .config("verifier", "function name or lambda for input 0", false)
            .config("argument", "extra argument for the verifier", false)
            .variadic_configs()
            .output("positive", "combined result when the decision passes")
            .output("negative", "failure message when it does not")
            .output("status", "one JSON status record per evaluation")
            .on_init(callback(|ctx| {
                let configs: Vec<Option<String>> =
                    (1..=ctx.config_count()).map(|i| ctx.config(i).map(str::to_string)).collect();
                DecisionConfig::parse(&configs, ctx.id()).map(|_| ())
            }))
            .on_exec(callback(evaluate))
            .on_term(noop()),
    )
}
