//! Grammar optimization: configured rewrite rules applied in sequence with a
//! per-entry report.

mod catalog;
mod config;
mod report;
mod rewrite;

use std::collections::BTreeMap;

use serde::Serialize;

pub use catalog::{rule_spec, AttrUse, Param, ParamType, RuleSpec, Semantics, CATALOG};
pub(crate) use config::parse_entries;
pub use config::{
    parse_config, print_config, print_entry, validate_entry, ConfigError, ConfigProblem,
    RuleConfig,
};
pub use report::{
    line_diff, ApplicationReport, EntryReport, EntryStatus, RuleDiff, Totals,
};

use crate::grammar::{
    element_at, line_at, validate_grammar, Element, Grammar, Location, RuleScope, Selector,
};

/// Applies one entry. Errors and no-matches return the input grammar
/// unchanged.
pub fn apply_rule(g: &Grammar, c: &RuleConfig) -> (Grammar, EntryReport) {
    let mut entry = EntryReport {
        index: c.index,
        rule_id: c.rule_id.clone(),
        status: EntryStatus::NoMatch,
        matched: 0,
        locations: Vec::new(),
        message: None,
        diff: Vec::new(),
    };
    if let Err(p) = validate_entry(c) {
        entry.status = EntryStatus::Error;
        entry.message = Some(p.to_string());
        return (g.clone(), entry);
    }
    let mut out = g.clone();
    match rewrite::dispatch(&mut out, c) {
        Err(message) => {
            entry.status = EntryStatus::Error;
            entry.message = Some(message);
            (g.clone(), entry)
        }
        Ok(outcome) if outcome.locations.is_empty() => (g.clone(), entry),
        Ok(outcome) => {
            entry.matched = outcome.locations.len();
            entry.locations = outcome.locations;
            let diags = validate_grammar(&out);
            if !diags.is_empty() {
                entry.status = EntryStatus::Error;
                entry.message = Some(format!(
                    "rewrite would produce an invalid grammar: {}",
                    diags
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join("; ")
                ));
                return (g.clone(), entry);
            }
            entry.status = EntryStatus::Applied;
            let renamed = outcome
                .renamed
                .as_ref()
                .map(|(a, b)| (a.as_str(), b.as_str()));
            entry.diff = report::diff_grammars(g, &out, renamed);
            (out, entry)
        }
    }
}

/// Applies entries in order, continuing past errors.
pub fn apply_config(g: &Grammar, cs: &[RuleConfig]) -> (Grammar, ApplicationReport) {
    apply_config_with(g, cs, false)
}

/// With `strict`, stops at the first error entry; the grammar is the one
/// produced by the entries before it.
pub fn apply_config_with(g: &Grammar, cs: &[RuleConfig], strict: bool) -> (Grammar, ApplicationReport) {
    let mut cur = g.clone();
    let mut entries = Vec::with_capacity(cs.len());
    let mut halted = None;
    for c in cs {
        let (next, entry) = apply_rule(&cur, c);
        let failed = entry.status == EntryStatus::Error;
        cur = next;
        entries.push(entry);
        if strict && failed {
            halted = Some(c.index);
            break;
        }
    }
    (cur, ApplicationReport::from_entries(entries, halted))
}

/// A catalog rule offered for a selected grammar element, with the
/// parameters the selection determines already filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub rule_id: &'static str,
    pub doc: &'static str,
    pub scope: Selector,
    pub args: BTreeMap<String, String>,
    /// Required parameters still to be supplied.
    pub missing: Vec<&'static str>,
}

fn candidate(id: &'static str, scope: Selector, args: &[(&str, String)]) -> Candidate {
    let spec = rule_spec(id).expect("candidate ids come from the catalog");
    let args: BTreeMap<String, String> =
        args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    let missing = spec
        .params
        .iter()
        .filter(|p| p.required && !args.contains_key(p.name))
        .map(|p| p.name)
        .collect();
    let scope = match spec.attr {
        AttrUse::Forbidden => Selector::rule(scope.rule),
        _ => scope,
    };
    Candidate {
        rule_id: id,
        doc: spec.doc,
        scope,
        args,
        missing,
    }
}

/// Catalog rules applicable at `loc`, in catalog order.
pub fn candidates(g: &Grammar, loc: &Location) -> Vec<Candidate> {
    let Some(rule) = g.rule(&loc.rule) else {
        return Vec::new();
    };
    let named = Selector::rule(RuleScope::Named(rule.name.clone()));
    let mut out = Vec::new();
    if loc.is_rule() {
        out.push(candidate("reorder_features", named.clone(), &[]));
        out.push(candidate("remove_rule", named.clone(), &[]));
        out.push(candidate("rename_rule", named.clone(), &[]));
        if rule.outermost_block().is_some() {
            out.push(candidate("remove_block", named, &[]));
        }
        return out;
    }
    if loc.is_line() {
        let Some(line) = line_at(&rule.body, &loc.path) else {
            return Vec::new();
        };
        if let Some(f) = line.carried_features().first() {
            let scope = named.clone().with_feature(*f);
            out.push(candidate("set_line_cardinality", scope.clone(), &[("card", line.cardinality.name().into())]));
        }
        out.push(candidate("reorder_features", named, &[]));
        out.sort_by_key(|c| CATALOG.iter().position(|s| s.id == c.rule_id));
        return out;
    }
    let Some(element) = element_at(&rule.body, &loc.path) else {
        return Vec::new();
    };
    let line = line_at(&rule.body, &loc.path[..loc.path.len() - 1]).expect("element has a line");
    let line_feature = {
        let carried = line.carried_features();
        (carried.len() == 1).then(|| carried[0].to_string())
    };
    match element {
        Element::Keyword(k) => {
            let scope = match &line_feature {
                Some(f) => named.clone().with_feature(f.clone()),
                None => named.clone(),
            };
            out.push(candidate("remove_keyword", scope.clone(), &[("keyword", k.clone())]));
            out.push(candidate("rename_keyword", scope, &[("old", k.clone())]));
            out.push(candidate(
                "remove_attr_keyword_everywhere",
                Selector::rule(RuleScope::All),
                &[("keyword", k.clone())],
            ));
        }
        Element::Assignment { feature, op, .. } | Element::CrossRef { feature, op, .. } => {
            let scope = named.clone().with_feature(feature.clone());
            let idx = *loc.path.last().expect("element path");
            let preceding = idx
                .checked_sub(1)
                .and_then(|i| line.elements.get(i))
                .and_then(|e| match e {
                    Element::Keyword(k) => Some(k.clone()),
                    _ => None,
                });
            let kw_args: Vec<(&str, String)> = preceding.into_iter().map(|k| ("keyword", k)).collect();
            out.push(candidate("remove_keyword", scope.clone(), &kw_args));
            out.push(candidate("add_keyword_to_attr", scope.clone(), &[("before", "false".into())]));
            out.push(candidate("move_attr_out_of_block", scope.clone(), &[]));
            out.push(candidate("set_line_cardinality", scope.clone(), &[]));
            if *op == crate::grammar::AssignOp::Add {
                out.push(candidate("add_list_separator", scope, &[("sep", ",".into())]));
            }
        }
        Element::Block { open, close, .. } => {
            let scope = match &line_feature {
                Some(f) => named.clone().with_feature(f.clone()),
                None => named.clone(),
            };
            out.push(candidate("remove_block", scope.clone(), &[]));
            out.push(candidate(
                "change_block_delimiters",
                scope,
                &[("open", open.to_string()), ("close", close.to_string())],
            ));
        }
        Element::Alternatives(_) => {
            out.push(candidate("rename_rule", named.clone(), &[]));
            out.push(candidate("remove_rule", named, &[]));
        }
    }
    out.sort_by_key(|c| CATALOG.iter().position(|s| s.id == c.rule_id));
    out
}

/// The catalog as served to clients.
pub fn catalog() -> &'static [RuleSpec] {
    CATALOG
}
