//! A small s-expression language for inline verifiers and functions.
//!
//! Atoms are integers, strings, `t`, `nil`, quoted symbols and the input
//! symbols `input` / `input-N`. Operators: `length`, `string-match`,
//! `> < >= <= =`, `not`, `and`, `or` and single-parameter `lambda`.

use std::fmt;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Int(i64),
    Str(String),
    Sym(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ExprError(pub String);

fn err<T>(msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError(msg.into()))
}

/// A parsed program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprProgram {
    pub root: Sexp,
}

impl ExprProgram {
    pub fn parse(src: &str) -> Result<ExprProgram, ExprError> {
        let mut p = Reader {
            chars: src.chars().collect(),
            pos: 0,
        };
        let root = p.read()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return err(format!("trailing text at offset {}", p.pos));
        }
        check(&root)?;
        Ok(ExprProgram { root })
    }

    /// Evaluates with `input-N` bound to `inputs[N]`. A program that is a
    /// lambda is applied to input 0.
    pub fn eval(&self, inputs: &[String]) -> Result<Value, ExprError> {
        let env = Env { inputs, bindings: Vec::new() };
        match eval(&self.root, &env)? {
            Value::Lambda(param, body) => {
                let arg = Value::Str(inputs.first().cloned().unwrap_or_default());
                apply(&param, &body, arg, &env)
            }
            v => Ok(v),
        }
    }

    /// `None` stands for false.
    pub fn eval_text(&self, inputs: &[String]) -> Result<Option<String>, ExprError> {
        Ok(self.eval(inputs)?.render())
    }
}

/// Parses and evaluates in one go.
pub fn eval_expr(src: &str, inputs: &[String]) -> Result<Option<String>, ExprError> {
    ExprProgram::parse(src)?.eval_text(inputs)
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
}

impl Reader {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn read(&mut self) -> Result<Sexp, ExprError> {
        self.skip_ws();
        let Some(&c) = self.chars.get(self.pos) else {
            return err("unexpected end of expression");
        };
        match c {
            '(' => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.get(self.pos) {
                        None => return err("unclosed '('"),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            ')' => err(format!("unexpected ')' at offset {}", self.pos)),
            '\'' => {
                self.pos += 1;
                let quoted = self.read()?;
                Ok(Sexp::List(vec![Sexp::Sym("quote".into()), quoted]))
            }
            '"' => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.chars.get(self.pos) {
                        None => return err("unterminated string"),
                        Some('"') => {
                            self.pos += 1;
                            return Ok(Sexp::Str(s));
                        }
                        Some('\\') => {
                            let esc = self.chars.get(self.pos + 1).copied();
                            s.push(match esc {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some(c) => c,
                                None => return err("unterminated string"),
                            });
                            self.pos += 2;
                        }
                        Some(&c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
            }
            _ => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && !self.chars[self.pos].is_whitespace()
                    && !matches!(self.chars[self.pos], '(' | ')' | '"' | '\'')
                {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                Ok(match word.parse::<i64>() {
                    Ok(n) => Sexp::Int(n),
                    Err(_) => Sexp::Sym(word),
                })
            }
        }
    }
}

/// Static shape checks: lambdas take exactly one symbol parameter.
fn check(s: &Sexp) -> Result<(), ExprError> {
    if let Sexp::List(items) = s {
        if let Some(Sexp::Sym(head)) = items.first() {
            if head == "lambda" {
                match items.as_slice() {
                    [_, Sexp::List(params), _] if params.len() == 1 && matches!(params[0], Sexp::Sym(_)) => {}
                    _ => return err("lambda takes exactly one parameter and one body"),
                }
            }
        }
        for i in items {
            check(i)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Lambda(String, Box<Sexp>),
}

impl Value {
    fn truthy(&self) -> bool {
        !matches!(self, Value::Bool(false))
    }

    /// `t` for true, decimal for integers, `None` for false.
    pub fn render(&self) -> Option<String> {
        match self {
            Value::Int(n) => Some(n.to_string()),
            Value::Str(s) => Some(s.clone()),
            Value::Bool(true) => Some("t".into()),
            Value::Bool(false) => None,
            Value::Lambda(..) => Some("#<lambda>".into()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.render() {
            Some(s) => f.write_str(&s),
            None => f.write_str("nil"),
        }
    }
}

struct Env<'a> {
    inputs: &'a [String],
    bindings: Vec<(String, Value)>,
}

fn lookup(sym: &str, env: &Env<'_>) -> Result<Value, ExprError> {
    if let Some((_, v)) = env.bindings.iter().rev().find(|(n, _)| n == sym) {
        return Ok(v.clone());
    }
    match sym {
        "t" => return Ok(Value::Bool(true)),
        "nil" => return Ok(Value::Bool(false)),
        "input" => return Ok(Value::Str(env.inputs.first().cloned().unwrap_or_default())),
        _ => {}
    }
    if let Some(n) = sym.strip_prefix("input-").and_then(|n| n.parse::<usize>().ok()) {
        return Ok(Value::Str(env.inputs.get(n).cloned().unwrap_or_default()));
    }
    err(format!("unbound symbol '{sym}'"))
}

fn as_int(v: &Value, op: &str) -> Result<i64, ExprError> {
    match v {
        Value::Int(n) => Ok(*n),
        other => err(format!("{op}: expected an integer, got {other}")),
    }
}

fn as_str(v: &Value, op: &str) -> Result<String, ExprError> {
    match v {
        Value::Str(s) => Ok(s.clone()),
        other => err(format!("{op}: expected a string, got {other}")),
    }
}

fn apply(param: &str, body: &Sexp, arg: Value, env: &Env<'_>) -> Result<Value, ExprError> {
    let mut bindings = env.bindings.clone();
    bindings.push((param.to_string(), arg));
    eval(body, &Env { inputs: env.inputs, bindings })
}

/// First line of `text` matching `pattern`.
pub fn first_match(pattern: &str, text: &str) -> Result<Option<String>, ExprError> {
    let re = Regex::new(pattern).map_err(|e| ExprError(format!("bad pattern: {e}")))?;
    Ok(text.lines().find(|l| re.is_match(l)).map(str::to_string))
}

fn eval(s: &Sexp, env: &Env<'_>) -> Result<Value, ExprError> {
    match s {
        Sexp::Int(n) => Ok(Value::Int(*n)),
        Sexp::Str(s) => Ok(Value::Str(s.clone())),
        Sexp::Sym(sym) => lookup(sym, env),
        Sexp::List(items) => {
            let Some(head) = items.first() else {
                return Ok(Value::Bool(false));
            };
            let args = &items[1..];
            if let Sexp::Sym(op) = head {
                if let Some(v) = special(op, args, env)? {
                    return Ok(v);
                }
            }
            match eval(head, env)? {
                Value::Lambda(param, body) => {
                    if args.len() != 1 {
                        return err("lambda applied to wrong number of arguments");
                    }
                    let arg = eval(&args[0], env)?;
                    apply(&param, &body, arg, env)
                }
                other => err(format!("{other} is not a function")),
            }
        }
    }
}

fn special(op: &str, args: &[Sexp], env: &Env<'_>) -> Result<Option<Value>, ExprError> {
    let arity = |n: usize| -> Result<(), ExprError> {
        if args.len() == n {
            Ok(())
        } else {
            err(format!("{op} takes {n} argument(s), got {}", args.len()))
        }
    };
    let v = match op {
        "quote" => {
            arity(1)?;
            match &args[0] {
                Sexp::Sym(s) | Sexp::Str(s) => Value::Str(s.clone()),
                Sexp::Int(n) => Value::Int(*n),
                Sexp::List(_) => return err("quote: lists are not supported"),
            }
        }
        "lambda" => match args {
            [Sexp::List(params), body] if params.len() == 1 => match &params[0] {
                Sexp::Sym(p) => Value::Lambda(p.clone(), Box::new(body.clone())),
                _ => return err("lambda parameter must be a symbol"),
            },
            _ => return err("lambda takes exactly one parameter and one body"),
        },
        "length" => {
            arity(1)?;
            let s = as_str(&eval(&args[0], env)?, op)?;
            Value::Int(s.chars().count() as i64)
        }
        "string-match" => {
            arity(2)?;
            let pat = as_str(&eval(&args[0], env)?, op)?;
            let text = as_str(&eval(&args[1], env)?, op)?;
            match first_match(&pat, &text)? {
                Some(line) => Value::Str(line),
                None => Value::Bool(false),
            }
        }
        ">" | "<" | ">=" | "<=" => {
            arity(2)?;
            let a = as_int(&eval(&args[0], env)?, op)?;
            let b = as_int(&eval(&args[1], env)?, op)?;
            Value::Bool(match op {
                ">" => a > b,
                "<" => a < b,
                ">=" => a >= b,
                _ => a <= b,
            })
        }
        "=" => {
            arity(2)?;
            let a = eval(&args[0], env)?;
            let b = eval(&args[1], env)?;
            match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => Value::Bool(x == y),
                (Value::Str(x), Value::Str(y)) => Value::Bool(x == y),
                (Value::Bool(x), Value::Bool(y)) => Value::Bool(x == y),
                _ => return err(format!("=: cannot compare {a} and {b}")),
            }
        }
        "not" => {
            arity(1)?;
            Value::Bool(!eval(&args[0], env)?.truthy())
        }
        "and" => {
            let mut last = Value::Bool(true);
            for a in args {
                last = eval(a, env)?;
                if !last.truthy() {
                    break;
                }
            }
            last
        }
        "or" => {
            let mut last = Value::Bool(false);
            for a in args {
                last = eval(a, env)?;
                if last.truthy() {
                    break;
                }
            }
            last
        }
        _ => return Ok(None),
    };
    Ok(Some(v))
}
