//! Metamodels: the class models that drive grammar generation and type
//! domain programs.
//!
//! A metamodel is loaded from a `.mm.json` document, validated, and can be
//! diffed against an evolved version (see [`diff`]).

mod diff;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::{
    apply_delta, diff_metamodels, ClassAddition, ClassHeaderChange, ClassRename, EnumAddition,
    FeatureAddition, FeatureChange, FeatureOrder, MetamodelDelta, QualifiedFeature,
};

/// Built-in attribute types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    String,
    Int,
    Bool,
    Float,
}

impl Primitive {
    pub const ALL: [Primitive; 4] = [
        Primitive::String,
        Primitive::Int,
        Primitive::Bool,
        Primitive::Float,
    ];

    /// Accepts the canonical names plus the Ecore spellings (`EString`, ...).
    pub fn from_name(name: &str) -> Option<Primitive> {
        match name {
            "string" | "EString" => Some(Primitive::String),
            "int" | "EInt" => Some(Primitive::Int),
            "bool" | "EBoolean" => Some(Primitive::Bool),
            "float" | "EFloat" | "EDouble" => Some(Primitive::Float),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Primitive::String => "string",
            Primitive::Int => "int",
            Primitive::Bool => "bool",
            Primitive::Float => "float",
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Attribute,
    Containment,
    Reference,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Attribute => "attribute",
            FeatureKind::Containment => "containment",
            FeatureKind::Reference => "reference",
        })
    }
}

/// Upper multiplicity bound: exactly one or unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Upper {
    One,
    Unbounded,
}

impl Serialize for Upper {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Upper::One => s.serialize_i64(1),
            Upper::Unbounded => s.serialize_i64(-1),
        }
    }
}

impl<'de> Deserialize<'de> for Upper {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) if n.as_i64() == Some(1) => Ok(Upper::One),
            serde_json::Value::Number(n) if n.as_i64() == Some(-1) => Ok(Upper::Unbounded),
            serde_json::Value::String(s) if s == "*" => Ok(Upper::Unbounded),
            other => Err(D::Error::custom(format!(
                "upper bound must be 1, -1 or \"*\", found {other}"
            ))),
        }
    }
}

fn deserialize_lower<'de, D: serde::Deserializer<'de>>(d: D) -> Result<u8, D::Error> {
    use serde::de::Error;
    let v = u8::deserialize(d)?;
    if v > 1 {
        return Err(D::Error::custom(format!("lower bound must be 0 or 1, found {v}")));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MFeature {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(deserialize_with = "deserialize_lower")]
    pub lower: u8,
    pub upper: Upper,
}

impl MFeature {
    pub fn is_many(&self) -> bool {
        self.upper == Upper::Unbounded
    }

    pub fn is_required(&self) -> bool {
        self.lower >= 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MClass {
    pub name: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "is_false")]
    pub is_abstract: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supertypes: Vec<String>,
    /// Set in an evolved document to declare that this class is the renamed
    /// successor of a class in the previous version.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renamed_from: Option<String>,
    #[serde(default)]
    pub features: Vec<MFeature>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MEnum {
    pub name: String,
    pub literals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    pub name: String,
    #[serde(default)]
    pub classes: Vec<MClass>,
    #[serde(default)]
    pub enums: Vec<MEnum>,
}

/// What a feature's type name resolves to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeRef<'a> {
    Primitive(Primitive),
    Enum(&'a MEnum),
    Class(&'a MClass),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Diagnostic {
    DuplicateClass { name: String },
    DuplicateEnum { name: String },
    EnumClassClash { name: String },
    DuplicateFeature { class: String, feature: String },
    UnresolvedType { class: String, feature: String, type_name: String },
    UnresolvedSupertype { class: String, supertype: String },
    CyclicSupertype { class: String },
    MultipleInheritance { class: String },
    KindTypeMismatch { class: String, feature: String, detail: String },
    EmptyEnum { name: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateClass { name } => write!(f, "duplicate class name `{name}`"),
            Diagnostic::DuplicateEnum { name } => write!(f, "duplicate enum name `{name}`"),
            Diagnostic::EnumClassClash { name } => {
                write!(f, "`{name}` is declared both as an enum and as a class")
            }
            Diagnostic::DuplicateFeature { class, feature } => {
                write!(f, "class `{class}` declares or inherits feature `{feature}` more than once")
            }
            Diagnostic::UnresolvedType { class, feature, type_name } => {
                write!(f, "feature `{class}.{feature}` has unresolved type `{type_name}`")
            }
            Diagnostic::UnresolvedSupertype { class, supertype } => {
                write!(f, "class `{class}` extends unknown class `{supertype}`")
            }
            Diagnostic::CyclicSupertype { class } => {
                write!(f, "class `{class}` is part of a cyclic supertype chain")
            }
            Diagnostic::MultipleInheritance { class } => {
                write!(f, "class `{class}` has more than one supertype (unsupported)")
            }
            Diagnostic::KindTypeMismatch { class, feature, detail } => {
                write!(f, "feature `{class}.{feature}`: {detail}")
            }
            Diagnostic::EmptyEnum { name } => write!(f, "enum `{name}` has no literals"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("metamodel syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid metamodel: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses a `.mm.json` document and validates it.
pub fn load_metamodel(doc: &str) -> Result<Metamodel, LoadError> {
    let mut m: Metamodel = serde_json::from_str(doc).map_err(|e| LoadError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    for class in &mut m.classes {
        for feature in &mut class.features {
            if let Some(p) = Primitive::from_name(&feature.type_name) {
                feature.type_name = p.name().to_string();
            }
        }
    }
    let diags = validate_metamodel(&m);
    if diags.is_empty() {
        Ok(m)
    } else {
        Err(LoadError::Invalid(diags))
    }
}

/// Renders a metamodel as a `.mm.json` document.
pub fn to_document(m: &Metamodel) -> String {
    serde_json::to_string_pretty(m).expect("metamodel serialization is infallible")
}

/// Checks every metamodel invariant; an empty result means the metamodel is
/// valid.
pub fn validate_metamodel(m: &Metamodel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut class_names = HashSet::new();
    for c in &m.classes {
        if !class_names.insert(c.name.as_str()) {
            diags.push(Diagnostic::DuplicateClass { name: c.name.clone() });
        }
    }
    let mut enum_names = HashSet::new();
    for e in &m.enums {
        if !enum_names.insert(e.name.as_str()) {
            diags.push(Diagnostic::DuplicateEnum { name: e.name.clone() });
        }
        if class_names.contains(e.name.as_str()) {
            diags.push(Diagnostic::EnumClassClash { name: e.name.clone() });
        }
        if e.literals.is_empty() {
            diags.push(Diagnostic::EmptyEnum { name: e.name.clone() });
        }
    }

    for c in &m.classes {
        if c.supertypes.len() > 1 {
            diags.push(Diagnostic::MultipleInheritance { class: c.name.clone() });
        }
        for s in &c.supertypes {
            if !class_names.contains(s.as_str()) {
                diags.push(Diagnostic::UnresolvedSupertype {
                    class: c.name.clone(),
                    supertype: s.clone(),
                });
            }
        }
        for f in &c.features {
            let is_class = class_names.contains(f.type_name.as_str());
            let is_enum = enum_names.contains(f.type_name.as_str());
            let is_prim = Primitive::from_name(&f.type_name).is_some();
            if !is_class && !is_enum && !is_prim {
                diags.push(Diagnostic::UnresolvedType {
                    class: c.name.clone(),
                    feature: f.name.clone(),
                    type_name: f.type_name.clone(),
                });
                continue;
            }
            let detail = match f.kind {
                FeatureKind::Attribute if is_class => {
                    Some(format!("attribute type `{}` is a class", f.type_name))
                }
                FeatureKind::Containment | FeatureKind::Reference if !is_class => Some(format!(
                    "{} type `{}` is not a class",
                    f.kind, f.type_name
                )),
                _ => None,
            };
            if let Some(detail) = detail {
                diags.push(Diagnostic::KindTypeMismatch {
                    class: c.name.clone(),
                    feature: f.name.clone(),
                    detail,
                });
            }
        }
    }

    let cyclic = cyclic_classes(m);
    for c in &m.classes {
        if cyclic.contains(c.name.as_str()) {
            diags.push(Diagnostic::CyclicSupertype { class: c.name.clone() });
        }
    }

    // Inherited feature uniqueness only makes sense on an acyclic hierarchy.
    if cyclic.is_empty() {
        for c in &m.classes {
            let mut seen = HashSet::new();
            let mut reported = HashSet::new();
            for (_, f) in m.all_features_of(&c.name) {
                if !seen.insert(f.name.as_str()) && reported.insert(f.name.as_str()) {
                    diags.push(Diagnostic::DuplicateFeature {
                        class: c.name.clone(),
                        feature: f.name.clone(),
                    });
                }
            }
        }
    }

    diags
}

fn cyclic_classes(m: &Metamodel) -> BTreeSet<&str> {
    let parents: BTreeMap<&str, Vec<&str>> = m
        .classes
        .iter()
        .map(|c| (c.name.as_str(), c.supertypes.iter().map(String::as_str).collect()))
        .collect();
    let mut cyclic = BTreeSet::new();
    for start in parents.keys() {
        // Depth-first walk up the hierarchy looking for `start` again.
        let mut stack: Vec<&str> = parents[start].clone();
        let mut visited = HashSet::new();
        while let Some(cur) = stack.pop() {
            if cur == *start {
                cyclic.insert(*start);
                break;
            }
            if visited.insert(cur) {
                if let Some(ps) = parents.get(cur) {
                    stack.extend(ps.iter().copied());
                }
            }
        }
    }
    cyclic
}

impl Metamodel {
    pub fn empty(name: impl Into<String>) -> Self {
        Metamodel {
            name: name.into(),
            classes: Vec::new(),
            enums: Vec::new(),
        }
    }

    pub fn class(&self, name: &str) -> Option<&MClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn enumeration(&self, name: &str) -> Option<&MEnum> {
        self.enums.iter().find(|e| e.name == name)
    }

    pub fn resolve_type(&self, name: &str) -> Option<TypeRef<'_>> {
        if let Some(p) = Primitive::from_name(name) {
            return Some(TypeRef::Primitive(p));
        }
        if let Some(e) = self.enumeration(name) {
            return Some(TypeRef::Enum(e));
        }
        self.class(name).map(TypeRef::Class)
    }

    /// Supertype chain from the root ancestor down to (and including) `name`.
    /// Stops at unknown classes and never loops on cyclic hierarchies.
    pub fn lineage(&self, name: &str) -> Vec<&MClass> {
        let mut chain = Vec::new();
        let mut seen = HashSet::new();
        let mut cur = self.class(name);
        while let Some(c) = cur {
            if !seen.insert(c.name.as_str()) {
                break;
            }
            chain.push(c);
            cur = c.supertypes.first().and_then(|s| self.class(s));
        }
        chain.reverse();
        chain
    }

    /// Inherited features first (root ancestor down), then the class's own,
    /// each paired with the class that declares it.
    pub fn all_features_of(&self, class: &str) -> Vec<(&MClass, &MFeature)> {
        self.lineage(class)
            .into_iter()
            .flat_map(|c| c.features.iter().map(move |f| (c, f)))
            .collect()
    }

    pub fn feature(&self, class: &str, feature: &str) -> Option<&MFeature> {
        self.all_features_of(class)
            .into_iter()
            .map(|(_, f)| f)
            .find(|f| f.name == feature)
    }

    /// True when `class` equals `ancestor` or inherits from it.
    pub fn is_subclass_of(&self, class: &str, ancestor: &str) -> bool {
        self.lineage(class).iter().any(|c| c.name == ancestor)
    }

    pub fn direct_subclasses(&self, class: &str) -> Vec<&MClass> {
        self.classes
            .iter()
            .filter(|c| c.supertypes.iter().any(|s| s == class))
            .collect()
    }

    pub fn concrete_subclasses(&self, class: &str) -> Vec<&MClass> {
        self.classes
            .iter()
            .filter(|c| !c.is_abstract && self.is_subclass_of(&c.name, class))
            .collect()
    }

    /// The attribute used to name instances of `class` in references: its
    /// first string-typed attribute, inherited ones included.
    pub fn identifying_attribute(&self, class: &str) -> Option<&MFeature> {
        self.all_features_of(class)
            .into_iter()
            .map(|(_, f)| f)
            .find(|f| f.kind == FeatureKind::Attribute && f.type_name == Primitive::String.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EAPACKAGE: &str = r#"{
        "name": "Mini",
        "classes": [
            {"name": "EAPackage", "features": [
                {"name": "shortName", "kind": "attribute", "type": "string", "lower": 0, "upper": 1}
            ]}
        ],
        "enums": []
    }"#;

    #[test]
    fn loads_single_class_document() {
        let m = load_metamodel(EAPACKAGE).unwrap();
        assert_eq!(m.classes.len(), 1);
        assert_eq!(m.classes[0].name, "EAPackage");
        assert_eq!(m.classes[0].features.len(), 1);
        assert_eq!(m.classes[0].features[0].kind, FeatureKind::Attribute);
    }

    #[test]
    fn empty_class_list_is_valid() {
        let m = load_metamodel(r#"{"name": "Empty", "classes": [], "enums": []}"#).unwrap();
        assert!(m.classes.is_empty());
    }

    #[test]
    fn unresolved_type_is_rejected() {
        let doc = r#"{"name": "M", "classes": [
            {"name": "A", "features": [{"name": "b", "kind": "containment", "type": "B", "lower": 0, "upper": 1}]}
        ], "enums": []}"#;
        match load_metamodel(doc) {
            Err(LoadError::Invalid(d)) => assert!(matches!(
                &d[..],
                [Diagnostic::UnresolvedType { type_name, .. }] if type_name == "B"
            )),
            other => panic!("expected unresolved type, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = load_metamodel("{\n  \"name\": \"M\",\n  \"classes\": [,]\n}").unwrap_err();
        match err {
            LoadError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn ecore_primitive_names_are_normalized() {
        let doc = EAPACKAGE.replace("\"string\"", "\"EString\"");
        let m = load_metamodel(&doc).unwrap();
        assert_eq!(m.classes[0].features[0].type_name, "string");
    }

    #[test]
    fn upper_accepts_star() {
        let doc = r#"{"name": "M", "classes": [
            {"name": "A", "features": [{"name": "xs", "kind": "attribute", "type": "int", "lower": 0, "upper": "*"}]}
        ]}"#;
        let m = load_metamodel(doc).unwrap();
        assert!(m.classes[0].features[0].is_many());
    }

    #[test]
    fn cyclic_supertypes_are_diagnosed() {
        let m = Metamodel {
            name: "M".into(),
            classes: vec![
                MClass {
                    name: "A".into(),
                    is_abstract: false,
                    supertypes: vec!["B".into()],
                    renamed_from: None,
                    features: vec![],
                },
                MClass {
                    name: "B".into(),
                    is_abstract: false,
                    supertypes: vec!["A".into()],
                    renamed_from: None,
                    features: vec![],
                },
            ],
            enums: vec![],
        };
        let diags = validate_metamodel(&m);
        assert!(diags.contains(&Diagnostic::CyclicSupertype { class: "A".into() }));
        assert!(diags.contains(&Diagnostic::CyclicSupertype { class: "B".into() }));
    }

    #[test]
    fn duplicate_class_names_are_diagnosed() {
        let class = MClass {
            name: "X".into(),
            is_abstract: false,
            supertypes: vec![],
            renamed_from: None,
            features: vec![],
        };
        let m = Metamodel {
            name: "M".into(),
            classes: vec![class.clone(), class],
            enums: vec![],
        };
        assert_eq!(
            validate_metamodel(&m),
            vec![Diagnostic::DuplicateClass { name: "X".into() }]
        );
    }

    #[test]
    fn inherited_feature_clash_is_diagnosed() {
        let doc = r#"{"name": "M", "classes": [
            {"name": "Base", "abstract": true, "features": [{"name": "n", "kind": "attribute", "type": "string", "lower": 0, "upper": 1}]},
            {"name": "Sub", "supertypes": ["Base"], "features": [{"name": "n", "kind": "attribute", "type": "int", "lower": 0, "upper": 1}]}
        ]}"#;
        let err = load_metamodel(doc).unwrap_err();
        assert!(err.to_string().contains("`Sub` declares or inherits feature `n`"));
    }

    #[test]
    fn multiple_inheritance_is_unsupported() {
        let doc = r#"{"name": "M", "classes": [
            {"name": "A", "abstract": true},
            {"name": "B", "abstract": true},
            {"name": "C", "supertypes": ["A", "B"]}
        ]}"#;
        let err = load_metamodel(doc).unwrap_err();
        assert!(matches!(err, LoadError::Invalid(d) if d == vec![Diagnostic::MultipleInheritance { class: "C".into() }]));
    }

    #[test]
    fn identifying_attribute_is_first_inherited_string() {
        let doc = r#"{"name": "M", "classes": [
            {"name": "Base", "abstract": true, "features": [
                {"name": "count", "kind": "attribute", "type": "int", "lower": 0, "upper": 1},
                {"name": "id", "kind": "attribute", "type": "string", "lower": 1, "upper": 1}]},
            {"name": "Sub", "supertypes": ["Base"], "features": [
                {"name": "label", "kind": "attribute", "type": "string", "lower": 0, "upper": 1}]}
        ]}"#;
        let m = load_metamodel(doc).unwrap();
        assert_eq!(m.identifying_attribute("Sub").unwrap().name, "id");
        assert!(m.is_subclass_of("Sub", "Base"));
        assert_eq!(m.concrete_subclasses("Base").len(), 1);
    }
}
