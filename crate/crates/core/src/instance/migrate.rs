//! Carrying programs over to a regenerated or re-optimized grammar.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::{parse_program, resolve_reference, serialize_instance, InstanceObject, ParseFailure, SerializeError, Value};
use crate::generate::TypedGrammar;
use crate::grammar::{Element, Grammar, Line};
use crate::metamodel::diff_metamodels;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Migration {
    pub text: String,
    /// Values the new grammar cannot express, as `Class.feature` (with the
    /// reason when it is not a missing feature).
    pub dropped: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MigrateError {
    #[error("program does not parse under the old grammar: {0}")]
    Parse(#[from] ParseFailure),
    #[error("root class `{0}` has no rule in the new grammar")]
    NoRootRule(String),
    #[error("program cannot be printed with the new grammar: {0}")]
    Serialize(#[from] SerializeError),
}

fn assigned_features(lines: &[Line], out: &mut BTreeSet<String>) {
    for l in lines {
        for e in &l.elements {
            match e {
                Element::Block { body, .. } => assigned_features(body, out),
                other => {
                    if let Some(f) = other.feature() {
                        out.insert(f.to_string());
                    }
                }
            }
        }
    }
}

fn features_for(g: &Grammar, class: &str) -> Option<BTreeSet<String>> {
    let rule = g.rules.iter().find(|r| !r.is_dispatch() && r.returns == class)?;
    let mut out = BTreeSet::new();
    assigned_features(&rule.body, &mut out);
    Some(out)
}

fn rename_classes(obj: &mut InstanceObject, rename: &dyn Fn(&str) -> Option<String>) {
    if let Some(n) = rename(&obj.class) {
        obj.class = n;
    }
    for vs in obj.slots.values_mut() {
        for v in vs {
            if let Value::Object(c) = v {
                rename_classes(c, rename);
            }
        }
    }
}

fn prune(g: &Grammar, obj: &mut InstanceObject, dropped: &mut Vec<String>) {
    let allowed = features_for(g, &obj.class).unwrap_or_default();
    let class = obj.class.clone();
    obj.slots.retain(|f, _| {
        let keep = allowed.contains(f);
        if !keep {
            dropped.push(format!("{class}.{f}"));
        }
        keep
    });
    for (f, vs) in obj.slots.iter_mut() {
        vs.retain_mut(|v| match v {
            Value::Object(child) if features_for(g, &child.class).is_none() => {
                dropped.push(format!("{class}.{f} (class `{}` has no rule)", child.class));
                false
            }
            Value::Object(child) => {
                prune(g, child, dropped);
                true
            }
            _ => true,
        });
    }
    obj.slots.retain(|_, vs| !vs.is_empty());
}

fn drop_dangling(tg: &TypedGrammar, root: &InstanceObject, obj: &mut InstanceObject, dropped: &mut Vec<String>) {
    let m = &tg.metamodel;
    let class = obj.class.clone();
    for (f, vs) in obj.slots.iter_mut() {
        let target = m.feature(&class, f).map(|mf| mf.type_name.clone()).unwrap_or_default();
        vs.retain_mut(|v| match v {
            Value::Ref(name) if resolve_reference(m, root, &target, name).is_none() => {
                dropped.push(format!("{class}.{f} (reference `{name}` no longer resolves)"));
                false
            }
            Value::Object(child) => {
                drop_dangling(tg, root, child, dropped);
                true
            }
            _ => true,
        });
    }
    obj.slots.retain(|_, vs| !vs.is_empty());
}

/// Parses `text` with `old`, renames classes the new metamodel declares as
/// renamed, drops what `new` cannot express and prints the rest with `new`.
pub fn migrate_program(old: &TypedGrammar, new: &TypedGrammar, text: &str) -> Result<Migration, MigrateError> {
    let mut model = parse_program(old, text)?;
    let delta = diff_metamodels(&old.metamodel, &new.metamodel);
    rename_classes(&mut model.root, &|c| delta.renamed_to(c).map(str::to_string));
    if features_for(&new.grammar, &model.root.class).is_none() {
        return Err(MigrateError::NoRootRule(model.root.class.clone()));
    }
    let mut dropped = Vec::new();
    prune(&new.grammar, &mut model.root, &mut dropped);
    let snapshot = model.root.clone();
    drop_dangling(new, &snapshot, &mut model.root, &mut dropped);
    let text = serialize_instance(new, &model)?;
    Ok(Migration { text, dropped })
}
