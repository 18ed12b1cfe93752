//! Printing programs from object models.
//!
//! Every grammar line starts a physical line and keyword-delimited block
//! bodies are indented four spaces. Under layout grammars the indentation is
//! carried by INDENT/DEDENT blocks alone, so keyword blocks stay inline.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::lexer::is_identifier;
use super::{InstanceModel, InstanceObject, Value};
use crate::generate::TypedGrammar;
use crate::grammar::{Delimiter, Element, Grammar, LexemeClass, Line, ParserRule};

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
pub enum SerializeError {
    #[error("no rule produces objects of class `{0}`")]
    NoRule(String),
    #[error("`{class}.{feature}` cannot be expressed by the grammar")]
    Inexpressible { class: String, feature: String },
    #[error("`{class}.{feature}` is required by the grammar but has no value")]
    Missing { class: String, feature: String },
    #[error("`{class}.{feature}`: {detail}")]
    BadValue {
        class: String,
        feature: String,
        detail: String,
    },
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Lines,
    Inline,
}

struct Writer {
    out: String,
    current: String,
    current_indent: usize,
    indent: usize,
    modes: Vec<Mode>,
    tokens: usize,
}

impl Writer {
    fn token(&mut self, t: &str) {
        self.tokens += 1;
        if self.current.is_empty() {
            self.current_indent = self.indent;
        } else if !matches!(t, ":" | ";" | ",") {
            self.current.push(' ');
        }
        self.current.push_str(t);
    }

    fn newline(&mut self) {
        if self.current.is_empty() {
            return;
        }
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        for _ in 0..self.current_indent {
            self.out.push_str("    ");
        }
        self.out.push_str(&self.current);
        self.current.clear();
    }

    fn line_start(&mut self) {
        if self.modes.last() != Some(&Mode::Inline) {
            self.newline();
        }
    }
}

type Remaining = BTreeMap<String, VecDeque<Value>>;

struct Printer<'a> {
    tg: &'a TypedGrammar,
    keywords: Vec<&'a str>,
    layout: bool,
    w: Writer,
}

impl<'a> Printer<'a> {
    fn g(&self) -> &'a Grammar {
        &self.tg.grammar
    }

    /// The concrete rule for `class` reachable from `rule_name`.
    fn rule_for(&self, rule_name: &str, class: &str) -> Option<&'a ParserRule> {
        fn search<'g>(g: &'g Grammar, name: &str, class: &str, seen: &mut Vec<String>) -> Option<&'g ParserRule> {
            if seen.iter().any(|s| s == name) {
                return None;
            }
            seen.push(name.to_string());
            let r = g.rule(name)?;
            match r.dispatch_options() {
                Some(opts) => opts.iter().find_map(|o| search(g, o, class, seen)),
                None => (r.returns == class).then_some(r),
            }
        }
        search(self.g(), rule_name, class, &mut Vec::new())
    }

    fn object(&mut self, rule_name: &str, obj: &InstanceObject) -> Result<(), SerializeError> {
        let rule = self
            .rule_for(rule_name, &obj.class)
            .ok_or_else(|| SerializeError::NoRule(obj.class.clone()))?;
        let mut remaining: Remaining = obj
            .slots
            .iter()
            .filter(|(_, vs)| !vs.is_empty())
            .map(|(k, vs)| (k.clone(), vs.iter().cloned().collect()))
            .collect();
        self.lines(obj, &rule.body, &mut remaining, true)?;
        if let Some((feature, _)) = remaining.iter().find(|(_, vs)| !vs.is_empty()) {
            return Err(SerializeError::Inexpressible {
                class: obj.class.clone(),
                feature: feature.clone(),
            });
        }
        Ok(())
    }

    fn has_values(line: &Line, remaining: &Remaining) -> bool {
        line.carried_features()
            .iter()
            .any(|f| remaining.get(*f).is_some_and(|vs| !vs.is_empty()))
    }

    fn lines(
        &mut self,
        obj: &InstanceObject,
        lines: &[Line],
        remaining: &mut Remaining,
        first_inline: bool,
    ) -> Result<(), SerializeError> {
        for (i, line) in lines.iter().enumerate() {
            let required = !line.cardinality.allows_absence();
            let mut count = 0;
            loop {
                let wanted = if count == 0 && required {
                    true
                } else if count > 0 && !line.cardinality.repeats() {
                    false
                } else {
                    Self::has_values(line, remaining)
                };
                if !wanted {
                    break;
                }
                if !(first_inline && i == 0 && count == 0) {
                    self.w.line_start();
                }
                let before: usize = remaining.values().map(VecDeque::len).sum();
                self.elements(obj, &line.elements, remaining)?;
                count += 1;
                let after: usize = remaining.values().map(VecDeque::len).sum();
                if after == before {
                    break;
                }
            }
        }
        Ok(())
    }

    fn elements(&mut self, obj: &InstanceObject, elements: &[Element], remaining: &mut Remaining) -> Result<(), SerializeError> {
        for e in elements {
            match e {
                Element::Keyword(k) => self.w.token(k),
                Element::Assignment { feature, callee, .. } => {
                    let v = take(obj, feature, remaining)?;
                    match self.g().terminal(callee) {
                        Some(t) => {
                            let text = self.literal(obj, feature, &v, t.class)?;
                            self.w.token(&text);
                        }
                        None => match v {
                            Value::Object(child) => self.object(callee, &child)?,
                            other => return Err(bad(obj, feature, format!("expected an object, found {other:?}"))),
                        },
                    }
                }
                Element::CrossRef { feature, .. } => match take(obj, feature, remaining)? {
                    Value::Ref(name) => {
                        let text = self.identifier(obj, feature, &name)?;
                        self.w.token(&text);
                    }
                    other => return Err(bad(obj, feature, format!("expected a reference, found {other:?}"))),
                },
                Element::Block { open, close, body } => self.block(obj, open, close, body, remaining)?,
                Element::Alternatives(_) => {}
            }
        }
        Ok(())
    }

    fn block(
        &mut self,
        obj: &InstanceObject,
        open: &Delimiter,
        close: &Delimiter,
        body: &[Line],
        remaining: &mut Remaining,
    ) -> Result<(), SerializeError> {
        if let Delimiter::Keyword(k) = open {
            self.w.token(k);
        }
        let mode = if self.layout && !open.is_layout() { Mode::Inline } else { Mode::Lines };
        let step = usize::from(mode == Mode::Lines);
        let before = self.w.tokens;
        self.w.modes.push(mode);
        self.w.indent += step;
        self.lines(obj, body, remaining, false)?;
        self.w.indent -= step;
        self.w.modes.pop();
        let empty = self.w.tokens == before;
        if !empty && mode == Mode::Lines {
            self.w.newline();
        }
        if let Delimiter::Keyword(k) = close {
            self.w.token(k);
        }
        Ok(())
    }

    fn identifier(&self, obj: &InstanceObject, feature: &str, name: &str) -> Result<String, SerializeError> {
        if !is_identifier(name) || self.keywords.contains(&name) || name == "true" || name == "false" {
            return Err(bad(obj, feature, format!("`{name}` cannot be written as an identifier")));
        }
        Ok(name.to_string())
    }

    fn literal(&self, obj: &InstanceObject, feature: &str, v: &Value, class: LexemeClass) -> Result<String, SerializeError> {
        match (class, v) {
            (LexemeClass::String, Value::Str(s)) => Ok(quote(s)),
            (LexemeClass::Id, Value::Str(s) | Value::Enum(s)) => self.identifier(obj, feature, s),
            (LexemeClass::Int, Value::Int(i)) => Ok(i.to_string()),
            (LexemeClass::Int, Value::Float(x)) if x.fract() == 0.0 && x.abs() < 9.0e15 => Ok(format!("{}", *x as i64)),
            (LexemeClass::Float, Value::Float(x)) if x.is_finite() => Ok(format!("{x:?}")),
            (LexemeClass::Float, Value::Int(i)) => Ok(i.to_string()),
            (LexemeClass::Bool, Value::Bool(b)) => Ok(b.to_string()),
            (c, v) => Err(bad(obj, feature, format!("{v:?} cannot be written as {}", c.name()))),
        }
    }
}

fn bad(obj: &InstanceObject, feature: &str, detail: String) -> SerializeError {
    SerializeError::BadValue {
        class: obj.class.clone(),
        feature: feature.to_string(),
        detail,
    }
}

fn take(obj: &InstanceObject, feature: &str, remaining: &mut Remaining) -> Result<Value, SerializeError> {
    remaining
        .get_mut(feature)
        .and_then(VecDeque::pop_front)
        .ok_or_else(|| SerializeError::Missing {
            class: obj.class.clone(),
            feature: feature.to_string(),
        })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Prints `model` in the concrete syntax of `tg`, starting at the root rule.
pub fn serialize_instance(tg: &TypedGrammar, model: &InstanceModel) -> Result<String, SerializeError> {
    let g = &tg.grammar;
    let root = g
        .root_rule()
        .ok_or_else(|| SerializeError::NoRule(model.root.class.clone()))?;
    let mut p = Printer {
        tg,
        keywords: g.keywords(),
        layout: g.uses_layout(),
        w: Writer {
            out: String::new(),
            current: String::new(),
            current_indent: 0,
            indent: 0,
            modes: Vec::new(),
            tokens: 0,
        },
    };
    p.object(&root.name, &model.root)?;
    p.w.newline();
    let mut out = p.w.out;
    out.push('\n');
    Ok(out)
}
