//! The line-oriented `.goc` configuration format.
//!
//! ```text
//! # comment
//! remove_keyword rule=* attr=shortName keyword=shortName
//! change_block_delimiters rule=* open={ close=} new_open=': INDENT' new_close=DEDENT
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::catalog::{rule_spec, AttrUse, ParamType, RuleSpec};
use crate::grammar::{Cardinality, RuleScope, Selector};

/// One configured invocation of a catalog rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub rule_id: String,
    pub scope: Selector,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
    #[serde(default)]
    pub index: usize,
}

impl RuleConfig {
    pub fn new(rule_id: &str, scope: Selector) -> RuleConfig {
        RuleConfig {
            rule_id: rule_id.to_string(),
            scope,
            args: BTreeMap::new(),
            index: 0,
        }
    }

    pub fn with_arg(mut self, name: &str, value: &str) -> RuleConfig {
        self.args.insert(name.to_string(), value.to_string());
        self
    }

    pub fn arg(&self, name: &str) -> Option<&str> {
        self.args.get(name).map(String::as_str)
    }

    pub fn flag(&self, name: &str) -> bool {
        self.arg(name) == Some("true")
    }

    pub fn list(&self, name: &str) -> Vec<&str> {
        self.arg(name)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    pub fn spec(&self) -> Option<&'static RuleSpec> {
        rule_spec(&self.rule_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConfigProblem {
    Malformed { detail: String },
    UnknownRule { rule_id: String },
    UnknownArg { rule_id: String, arg: String },
    MissingArg { rule_id: String, arg: String },
    DuplicateArg { arg: String },
    BadValue { arg: String, value: String, expected: String },
}

impl fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigProblem::Malformed { detail } => write!(f, "malformed entry: {detail}"),
            ConfigProblem::UnknownRule { rule_id } => write!(f, "unknown rule `{rule_id}`"),
            ConfigProblem::UnknownArg { rule_id, arg } => {
                write!(f, "`{rule_id}` does not take `{arg}=`")
            }
            ConfigProblem::MissingArg { rule_id, arg } => {
                write!(f, "`{rule_id}` requires `{arg}=`")
            }
            ConfigProblem::DuplicateArg { arg } => write!(f, "`{arg}=` given twice"),
            ConfigProblem::BadValue {
                arg,
                value,
                expected,
            } => write!(f, "`{arg}={value}`: expected {expected}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("line {line}: {problem}")]
pub struct ConfigError {
    pub line: usize,
    pub problem: ConfigProblem,
}

fn malformed(detail: impl Into<String>) -> ConfigProblem {
    ConfigProblem::Malformed {
        detail: detail.into(),
    }
}

/// Splits one line into `rule_id` and `key=value` pairs; `#` starts a
/// comment at a token boundary.
fn tokenize(line: &str) -> Result<Option<(String, Vec<(String, String)>)>, ConfigProblem> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut head: Option<String> = None;
    let mut pairs = Vec::new();
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() || chars[i] == '#' {
            break;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '=' {
            i += 1;
        }
        let word: String = chars[start..i].iter().collect();
        if head.is_none() {
            if i < chars.len() && chars[i] == '=' {
                return Err(malformed(format!("expected a rule name, found `{word}=`")));
            }
            head = Some(word);
            continue;
        }
        if i >= chars.len() || chars[i] != '=' {
            return Err(malformed(format!("expected `key=value`, found `{word}`")));
        }
        if word.is_empty() {
            return Err(malformed("missing key before `=`"));
        }
        i += 1;
        let mut value = String::new();
        if i < chars.len() && chars[i] == '\'' {
            i += 1;
            let mut closed = false;
            while i < chars.len() {
                match chars[i] {
                    '\\' if i + 1 < chars.len() => {
                        value.push(chars[i + 1]);
                        i += 2;
                    }
                    '\'' => {
                        closed = true;
                        i += 1;
                        break;
                    }
                    c => {
                        value.push(c);
                        i += 1;
                    }
                }
            }
            if !closed {
                return Err(malformed(format!("unterminated quote in `{word}=`")));
            }
            if i < chars.len() && !chars[i].is_whitespace() {
                return Err(malformed(format!("text after closing quote of `{word}=`")));
            }
        } else {
            while i < chars.len() && !chars[i].is_whitespace() {
                value.push(chars[i]);
                i += 1;
            }
        }
        pairs.push((word, value));
    }
    Ok(head.map(|h| (h, pairs)))
}

fn check_value(ty: ParamType, arg: &str, value: &str) -> Result<(), ConfigProblem> {
    let bad = |expected: &str| ConfigProblem::BadValue {
        arg: arg.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    };
    match ty {
        ParamType::Text if value.is_empty() => Err(bad("a non-empty value")),
        ParamType::Text => Ok(()),
        ParamType::Bool if value == "true" || value == "false" => Ok(()),
        ParamType::Bool => Err(bad("true or false")),
        ParamType::Cardinality if Cardinality::from_name(value).is_some() => Ok(()),
        ParamType::Cardinality => Err(bad("one of required, optional, star, plus")),
        ParamType::List => {
            let items: Vec<&str> = value.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                Err(bad("a comma-separated list of names"))
            } else {
                Ok(())
            }
        }
    }
}

/// Checks an entry against its catalog schema.
pub fn validate_entry(c: &RuleConfig) -> Result<(), ConfigProblem> {
    let spec = c.spec().ok_or_else(|| ConfigProblem::UnknownRule {
        rule_id: c.rule_id.clone(),
    })?;
    if spec.named_rule_only && c.scope.rule == RuleScope::All {
        return Err(ConfigProblem::BadValue {
            arg: "rule".into(),
            value: "*".into(),
            expected: "a rule name".into(),
        });
    }
    match (spec.attr, &c.scope.feature) {
        (AttrUse::Required, None) => {
            return Err(ConfigProblem::MissingArg {
                rule_id: c.rule_id.clone(),
                arg: "attr".into(),
            })
        }
        (AttrUse::Forbidden, Some(_)) => {
            return Err(ConfigProblem::UnknownArg {
                rule_id: c.rule_id.clone(),
                arg: "attr".into(),
            })
        }
        _ => {}
    }
    if c.scope.keyword.is_some() {
        return Err(ConfigProblem::UnknownArg {
            rule_id: c.rule_id.clone(),
            arg: "scope keyword".into(),
        });
    }
    for (name, value) in &c.args {
        let p = spec.param(name).ok_or_else(|| ConfigProblem::UnknownArg {
            rule_id: c.rule_id.clone(),
            arg: name.clone(),
        })?;
        check_value(p.ty, name, value)?;
    }
    for p in spec.params.iter().filter(|p| p.required) {
        if !c.args.contains_key(p.name) {
            return Err(ConfigProblem::MissingArg {
                rule_id: c.rule_id.clone(),
                arg: p.name.into(),
            });
        }
    }
    if c.rule_id == "change_block_delimiters" {
        if c.arg("new_open").is_none() && c.arg("new_close").is_none() {
            return Err(ConfigProblem::MissingArg {
                rule_id: c.rule_id.clone(),
                arg: "new_open or new_close".into(),
            });
        }
        for key in ["open", "close", "new_close"] {
            if let Some(v) = c.arg(key) {
                if v.split_whitespace().count() != 1 {
                    return Err(ConfigProblem::BadValue {
                        arg: key.into(),
                        value: v.into(),
                        expected: "a single delimiter token".into(),
                    });
                }
            }
        }
        if c.arg("new_open").is_some_and(|v| v.split_whitespace().count() == 0) {
            return Err(ConfigProblem::BadValue {
                arg: "new_open".into(),
                value: String::new(),
                expected: "one or more tokens".into(),
            });
        }
    }
    Ok(())
}

fn entry_from_pairs(
    rule_id: String,
    pairs: Vec<(String, String)>,
    default_all: bool,
) -> Result<RuleConfig, ConfigProblem> {
    let spec = rule_spec(&rule_id).ok_or_else(|| ConfigProblem::UnknownRule {
        rule_id: rule_id.clone(),
    })?;
    let mut rule = None;
    let mut attr = None;
    let mut context = None;
    let mut args = BTreeMap::new();
    for (k, v) in pairs {
        let slot = match k.as_str() {
            "rule" => &mut rule,
            "attr" => &mut attr,
            "context" => &mut context,
            _ => {
                if args.insert(k.clone(), v).is_some() {
                    return Err(ConfigProblem::DuplicateArg { arg: k });
                }
                continue;
            }
        };
        if slot.is_some() {
            return Err(ConfigProblem::DuplicateArg { arg: k });
        }
        if v.is_empty() {
            return Err(ConfigProblem::BadValue {
                arg: k,
                value: v,
                expected: "a non-empty value".into(),
            });
        }
        *slot = Some(v);
    }
    let rule = match rule {
        Some(r) => RuleScope::parse(&r),
        None if spec.rule_optional || default_all => RuleScope::All,
        None => {
            return Err(ConfigProblem::MissingArg {
                rule_id,
                arg: "rule".into(),
            })
        }
    };
    let c = RuleConfig {
        rule_id,
        scope: Selector {
            rule,
            feature: attr,
            keyword: None,
            context_feature: context,
        },
        args,
        index: 0,
    };
    validate_entry(&c)?;
    Ok(c)
}

/// Parses a `.goc` document; entries keep file order and get consecutive
/// indices.
pub fn parse_config(text: &str) -> Result<Vec<RuleConfig>, ConfigError> {
    parse_entries(text, false, 0)
}

/// Shared by configs and style bundles: `default_all` lets entries omit
/// `rule=`, and reported line numbers are shifted by `first_line`.
pub(crate) fn parse_entries(
    text: &str,
    default_all: bool,
    first_line: usize,
) -> Result<Vec<RuleConfig>, ConfigError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |problem| ConfigError {
            line: first_line + n + 1,
            problem,
        };
        let Some((rule_id, pairs)) = tokenize(line).map_err(err)? else {
            continue;
        };
        let mut c = entry_from_pairs(rule_id, pairs, default_all).map_err(err)?;
        c.index = out.len();
        out.push(c);
    }
    Ok(out)
}

fn quote(v: &str) -> String {
    let plain = !v.is_empty()
        && !v.starts_with('#')
        && !v.starts_with('\'')
        && !v.chars().any(|c| c.is_whitespace() || c == '\\');
    if plain {
        return v.to_string();
    }
    let mut s = String::from("'");
    for c in v.chars() {
        if c == '\'' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('\'');
    s
}

/// One entry in `.goc` syntax: scope keys first, then parameters in schema
/// order.
pub fn print_entry(c: &RuleConfig) -> String {
    let mut s = c.rule_id.clone();
    let spec = c.spec();
    let omit_rule = spec.is_some_and(|sp| sp.rule_optional) && c.scope.rule == RuleScope::All;
    if !omit_rule {
        s.push_str(&format!(" rule={}", quote(&c.scope.rule.to_string())));
    }
    if let Some(a) = &c.scope.feature {
        s.push_str(&format!(" attr={}", quote(a)));
    }
    if let Some(ctx) = &c.scope.context_feature {
        s.push_str(&format!(" context={}", quote(ctx)));
    }
    let order: Vec<&str> = match spec {
        Some(sp) => sp.params.iter().map(|p| p.name).collect(),
        None => c.args.keys().map(String::as_str).collect(),
    };
    for name in order {
        if let Some(v) = c.args.get(name) {
            s.push_str(&format!(" {name}={}", quote(v)));
        }
    }
    s
}

pub fn print_config(cs: &[RuleConfig]) -> String {
    let mut out = String::new();
    for c in cs {
        out.push_str(&print_entry(c));
        out.push('\n');
    }
    out
}
