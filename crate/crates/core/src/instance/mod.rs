//! Domain programs: the object model, grammar-driven parsing and printing,
//! sampling of example programs, and migration between grammar versions.

mod lexer;
mod migrate;
mod parser;
mod sample;
mod serialize;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::generate::TypedGrammar;
use crate::metamodel::{FeatureKind, Metamodel, Primitive, TypeRef};

pub use migrate::{migrate_program, MigrateError, Migration};
pub use parser::{parse_program, parse_program_with_coverage, Coverage, ParseFailure};
pub use sample::{sample_instances, sample_models, Sample};
pub use serialize::{serialize_instance, SerializeError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Enum(String),
    Object(InstanceObject),
    Ref(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceObject {
    pub class: String,
    pub slots: BTreeMap<String, Vec<Value>>,
}

impl InstanceObject {
    pub fn new(class: impl Into<String>) -> InstanceObject {
        InstanceObject {
            class: class.into(),
            slots: BTreeMap::new(),
        }
    }

    pub fn with(mut self, feature: &str, value: Value) -> InstanceObject {
        self.slots.entry(feature.to_string()).or_default().push(value);
        self
    }

    /// Pre-order walk over this object and every contained object.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a InstanceObject)) {
        f(self);
        for values in self.slots.values() {
            for v in values {
                if let Value::Object(o) = v {
                    o.walk(f);
                }
            }
        }
    }

    /// Containment nesting depth; a lone object has depth 1.
    pub fn depth(&self) -> usize {
        1 + self
            .slots
            .values()
            .flatten()
            .filter_map(|v| match v {
                Value::Object(o) => Some(o.depth()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceModel {
    pub root: InstanceObject,
}

/// Name under which `obj` can be referenced: the value of its identifying
/// attribute.
pub fn object_name<'a>(m: &Metamodel, obj: &'a InstanceObject) -> Option<&'a str> {
    let attr = m.identifying_attribute(&obj.class)?;
    match obj.slots.get(&attr.name)?.first()? {
        Value::Str(s) => Some(s),
        _ => None,
    }
}

/// Finds an object of class `target` (or a subclass) named `name`.
pub fn resolve_reference<'a>(
    m: &Metamodel,
    root: &'a InstanceObject,
    target: &str,
    name: &str,
) -> Option<&'a InstanceObject> {
    let mut found = None;
    root.walk(&mut |o| {
        if found.is_none()
            && m.is_subclass_of(&o.class, target)
            && object_name(m, o) == Some(name)
        {
            found = Some(o);
        }
    });
    found
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceDiagnostic {
    pub class: String,
    pub feature: Option<String>,
    pub message: String,
}

impl fmt::Display for InstanceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.feature {
            Some(feat) => write!(f, "{}.{}: {}", self.class, feat, self.message),
            None => write!(f, "{}: {}", self.class, self.message),
        }
    }
}

/// Checks a model against the grammar's metamodel: concrete classes,
/// typed slots, multiplicities and resolvable references.
pub fn validate_instance(tg: &TypedGrammar, model: &InstanceModel) -> Vec<InstanceDiagnostic> {
    let m = &tg.metamodel;
    let mut out = Vec::new();
    model.root.walk(&mut |o| {
        let diag = |feature: Option<&str>, message: String| InstanceDiagnostic {
            class: o.class.clone(),
            feature: feature.map(str::to_string),
            message,
        };
        match m.class(&o.class) {
            None => {
                out.push(diag(None, "unknown class".into()));
                return;
            }
            Some(c) if c.is_abstract => out.push(diag(None, "abstract class instantiated".into())),
            _ => {}
        }
        for (name, values) in &o.slots {
            let Some(f) = m.feature(&o.class, name) else {
                out.push(diag(Some(name), "no such feature".into()));
                continue;
            };
            if values.is_empty() {
                out.push(diag(Some(name), "empty slot".into()));
            }
            if !f.is_many() && values.len() > 1 {
                out.push(diag(Some(name), format!("{} values for a single-valued feature", values.len())));
            }
            for v in values {
                let ok = match (f.kind, m.resolve_type(&f.type_name), v) {
                    (FeatureKind::Attribute, Some(TypeRef::Primitive(Primitive::String)), Value::Str(_)) => true,
                    (FeatureKind::Attribute, Some(TypeRef::Primitive(Primitive::Int)), Value::Int(_)) => true,
                    (FeatureKind::Attribute, Some(TypeRef::Primitive(Primitive::Float)), Value::Float(_)) => true,
                    (FeatureKind::Attribute, Some(TypeRef::Primitive(Primitive::Bool)), Value::Bool(_)) => true,
                    (FeatureKind::Attribute, Some(TypeRef::Enum(e)), Value::Enum(l)) => e.literals.contains(l),
                    (FeatureKind::Containment, _, Value::Object(child)) => m.is_subclass_of(&child.class, &f.type_name),
                    (FeatureKind::Reference, _, Value::Ref(name)) => {
                        resolve_reference(m, &model.root, &f.type_name, name).is_some()
                    }
                    _ => false,
                };
                if !ok {
                    out.push(diag(Some(name), format!("value {v:?} does not fit type `{}`", f.type_name)));
                }
            }
        }
        for (_, f) in m.all_features_of(&o.class) {
            if f.is_required() && !o.slots.contains_key(&f.name) {
                out.push(diag(Some(&f.name), "required feature has no value".into()));
            }
        }
    });
    out
}
