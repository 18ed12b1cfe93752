//! Structural differences between two metamodel versions.
//!
//! Classes and features are matched by name. A class only counts as renamed
//! when the new document declares `renamed_from`; otherwise a changed name is
//! a removal plus an addition.

use serde::Serialize;

use super::{MClass, MEnum, MFeature, Metamodel};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassRename {
    pub old: String,
    pub new: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassAddition {
    /// Index of the class in the new metamodel.
    pub position: usize,
    pub class: MClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassHeaderChange {
    pub class: String,
    pub is_abstract: bool,
    pub supertypes: Vec<String>,
    pub renamed_from: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QualifiedFeature {
    pub class: String,
    pub feature: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureAddition {
    pub class: String,
    pub position: usize,
    pub feature: MFeature,
}

/// A feature whose type, kind or bounds changed between versions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureChange {
    pub class: String,
    pub old: MFeature,
    pub new: MFeature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumAddition {
    pub position: usize,
    pub enumeration: MEnum,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeatureOrder {
    pub class: String,
    pub order: Vec<String>,
}

/// Class and feature entries are qualified by the class name in the new
/// version (renames are applied first).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetamodelDelta {
    pub renamed_metamodel: Option<String>,
    pub renamed_classes: Vec<ClassRename>,
    pub removed_classes: Vec<String>,
    pub added_classes: Vec<ClassAddition>,
    pub changed_classes: Vec<ClassHeaderChange>,
    pub removed_features: Vec<QualifiedFeature>,
    pub added_features: Vec<FeatureAddition>,
    pub retyped_features: Vec<FeatureChange>,
    pub removed_enums: Vec<String>,
    pub added_enums: Vec<EnumAddition>,
    pub changed_enums: Vec<MEnum>,
    /// Only present when additions/removals alone do not reproduce the new
    /// ordering.
    pub class_order: Option<Vec<String>>,
    pub feature_orders: Vec<FeatureOrder>,
    pub enum_order: Option<Vec<String>>,
}

impl MetamodelDelta {
    pub fn is_empty(&self) -> bool {
        *self == MetamodelDelta::default()
    }

    /// New name of `class` if the delta renames it.
    pub fn renamed_to(&self, class: &str) -> Option<&str> {
        self.renamed_classes
            .iter()
            .find(|r| r.old == class)
            .map(|r| r.new.as_str())
    }
}

pub fn diff_metamodels(old: &Metamodel, new: &Metamodel) -> MetamodelDelta {
    let mut delta = MetamodelDelta {
        renamed_metamodel: (old.name != new.name).then(|| new.name.clone()),
        ..MetamodelDelta::default()
    };

    for c in &new.classes {
        if let Some(from) = &c.renamed_from {
            if old.class(from).is_some() && new.class(from).is_none() && old.class(&c.name).is_none() {
                delta.renamed_classes.push(ClassRename {
                    old: from.clone(),
                    new: c.name.clone(),
                });
            }
        }
    }
    let renamed = apply_renames(old, &delta.renamed_classes);

    for c in &renamed.classes {
        if new.class(&c.name).is_none() {
            delta.removed_classes.push(c.name.clone());
        }
    }
    for (position, c) in new.classes.iter().enumerate() {
        let Some(before) = renamed.class(&c.name) else {
            delta.added_classes.push(ClassAddition {
                position,
                class: c.clone(),
            });
            continue;
        };
        if before.is_abstract != c.is_abstract
            || before.supertypes != c.supertypes
            || before.renamed_from != c.renamed_from
        {
            delta.changed_classes.push(ClassHeaderChange {
                class: c.name.clone(),
                is_abstract: c.is_abstract,
                supertypes: c.supertypes.clone(),
                renamed_from: c.renamed_from.clone(),
            });
        }
        for f in &before.features {
            if !c.features.iter().any(|g| g.name == f.name) {
                delta.removed_features.push(QualifiedFeature {
                    class: c.name.clone(),
                    feature: f.name.clone(),
                });
            }
        }
        for (position, f) in c.features.iter().enumerate() {
            match before.features.iter().find(|g| g.name == f.name) {
                None => delta.added_features.push(FeatureAddition {
                    class: c.name.clone(),
                    position,
                    feature: f.clone(),
                }),
                Some(g) if g != f => delta.retyped_features.push(FeatureChange {
                    class: c.name.clone(),
                    old: g.clone(),
                    new: f.clone(),
                }),
                Some(_) => {}
            }
        }
    }

    for e in &renamed.enums {
        if new.enumeration(&e.name).is_none() {
            delta.removed_enums.push(e.name.clone());
        }
    }
    for (position, e) in new.enums.iter().enumerate() {
        match renamed.enumeration(&e.name) {
            None => delta.added_enums.push(EnumAddition {
                position,
                enumeration: e.clone(),
            }),
            Some(before) if before != e => delta.changed_enums.push(e.clone()),
            Some(_) => {}
        }
    }

    // Whatever ordering the structural edits do not reproduce is recorded
    // explicitly.
    let simulated = apply_delta(&delta, old);
    let names = |cs: &[MClass]| cs.iter().map(|c| c.name.clone()).collect::<Vec<_>>();
    if names(&simulated.classes) != names(&new.classes) {
        delta.class_order = Some(names(&new.classes));
    }
    for c in &new.classes {
        if let Some(s) = simulated.class(&c.name) {
            let want: Vec<String> = c.features.iter().map(|f| f.name.clone()).collect();
            let have: Vec<String> = s.features.iter().map(|f| f.name.clone()).collect();
            if want != have {
                delta.feature_orders.push(FeatureOrder {
                    class: c.name.clone(),
                    order: want,
                });
            }
        }
    }
    let enum_names = |es: &[MEnum]| es.iter().map(|e| e.name.clone()).collect::<Vec<_>>();
    if enum_names(&simulated.enums) != enum_names(&new.enums) {
        delta.enum_order = Some(enum_names(&new.enums));
    }
    delta
}

fn apply_renames(m: &Metamodel, renames: &[ClassRename]) -> Metamodel {
    let map = |name: &str| -> String {
        renames
            .iter()
            .find(|r| r.old == name)
            .map(|r| r.new.clone())
            .unwrap_or_else(|| name.to_string())
    };
    let mut out = m.clone();
    for c in &mut out.classes {
        c.name = map(&c.name);
        for s in &mut c.supertypes {
            *s = map(s);
        }
        for f in &mut c.features {
            f.type_name = map(&f.type_name);
        }
    }
    out
}

/// Replays a delta on the metamodel it was computed from.
pub fn apply_delta(delta: &MetamodelDelta, old: &Metamodel) -> Metamodel {
    let mut m = apply_renames(old, &delta.renamed_classes);
    if let Some(name) = &delta.renamed_metamodel {
        m.name = name.clone();
    }

    m.classes.retain(|c| !delta.removed_classes.contains(&c.name));
    for change in &delta.changed_classes {
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == change.class) {
            c.is_abstract = change.is_abstract;
            c.supertypes = change.supertypes.clone();
            c.renamed_from = change.renamed_from.clone();
        }
    }
    for removed in &delta.removed_features {
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == removed.class) {
            c.features.retain(|f| f.name != removed.feature);
        }
    }
    for change in &delta.retyped_features {
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == change.class) {
            if let Some(f) = c.features.iter_mut().find(|f| f.name == change.old.name) {
                *f = change.new.clone();
            }
        }
    }
    let mut additions: Vec<&FeatureAddition> = delta.added_features.iter().collect();
    additions.sort_by_key(|a| a.position);
    for a in additions {
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == a.class) {
            let at = a.position.min(c.features.len());
            c.features.insert(at, a.feature.clone());
        }
    }
    let mut added: Vec<&ClassAddition> = delta.added_classes.iter().collect();
    added.sort_by_key(|a| a.position);
    for a in added {
        let at = a.position.min(m.classes.len());
        m.classes.insert(at, a.class.clone());
    }

    m.enums.retain(|e| !delta.removed_enums.contains(&e.name));
    for changed in &delta.changed_enums {
        if let Some(e) = m.enums.iter_mut().find(|e| e.name == changed.name) {
            *e = changed.clone();
        }
    }
    let mut added_enums: Vec<&EnumAddition> = delta.added_enums.iter().collect();
    added_enums.sort_by_key(|a| a.position);
    for a in added_enums {
        let at = a.position.min(m.enums.len());
        m.enums.insert(at, a.enumeration.clone());
    }

    if let Some(order) = &delta.class_order {
        m.classes.sort_by_key(|c| order.iter().position(|n| *n == c.name));
    }
    for fo in &delta.feature_orders {
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == fo.class) {
            c.features
                .sort_by_key(|f| fo.order.iter().position(|n| *n == f.name));
        }
    }
    if let Some(order) = &delta.enum_order {
        m.enums.sort_by_key(|e| order.iter().position(|n| *n == e.name));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::{load_metamodel, FeatureKind, Upper};

    fn base() -> Metamodel {
        load_metamodel(
            r#"{"name": "M", "classes": [
                {"name": "EAPackage", "features": [
                    {"name": "shortName", "kind": "attribute", "type": "string", "lower": 1, "upper": 1},
                    {"name": "elements", "kind": "containment", "type": "Element", "lower": 0, "upper": -1}]},
                {"name": "Element", "features": [
                    {"name": "shortName", "kind": "attribute", "type": "string", "lower": 1, "upper": 1}]}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn identical_metamodels_have_empty_delta() {
        let m = base();
        assert!(diff_metamodels(&m, &m).is_empty());
    }

    #[test]
    fn added_class_is_reported() {
        let old = base();
        let mut new = base();
        new.classes.push(MClass {
            name: "FunctionType".into(),
            is_abstract: false,
            supertypes: vec![],
            renamed_from: None,
            features: vec![],
        });
        let d = diff_metamodels(&old, &new);
        let added: Vec<&str> = d.added_classes.iter().map(|a| a.class.name.as_str()).collect();
        assert_eq!(added, ["FunctionType"]);
        assert!(d.removed_classes.is_empty());
        assert_eq!(apply_delta(&d, &old), new);
    }

    #[test]
    fn retyped_feature_is_reported() {
        let old = base();
        let mut new = base();
        new.classes[0].features[0].type_name = "int".into();
        let d = diff_metamodels(&old, &new);
        assert_eq!(d.retyped_features.len(), 1);
        assert_eq!(d.retyped_features[0].class, "EAPackage");
        assert_eq!(d.retyped_features[0].old.type_name, "string");
        assert_eq!(d.retyped_features[0].new.type_name, "int");
        assert_eq!(apply_delta(&d, &old), new);
    }

    #[test]
    fn undeclared_rename_is_remove_plus_add() {
        let old = base();
        let mut new = base();
        new.classes[1].name = "Elem".into();
        new.classes[0].features[1].type_name = "Elem".into();
        let d = diff_metamodels(&old, &new);
        assert!(d.renamed_classes.is_empty());
        assert_eq!(d.removed_classes, ["Element"]);
        assert_eq!(d.added_classes.len(), 1);
        assert_eq!(apply_delta(&d, &old), new);
    }

    #[test]
    fn declared_rename_rewrites_references() {
        let old = base();
        let mut new = base();
        new.classes[1].name = "Elem".into();
        new.classes[1].renamed_from = Some("Element".into());
        new.classes[0].features[1].type_name = "Elem".into();
        let d = diff_metamodels(&old, &new);
        assert_eq!(
            d.renamed_classes,
            [ClassRename {
                old: "Element".into(),
                new: "Elem".into()
            }]
        );
        assert!(d.removed_classes.is_empty() && d.added_classes.is_empty());
        assert!(d.retyped_features.is_empty());
        assert_eq!(d.renamed_to("Element"), Some("Elem"));
        assert_eq!(apply_delta(&d, &old), new);
    }

    #[test]
    fn pure_reordering_is_recorded() {
        let old = base();
        let mut new = base();
        new.classes.swap(0, 1);
        new.classes[1].features.swap(0, 1);
        let d = diff_metamodels(&old, &new);
        assert!(d.class_order.is_some());
        assert_eq!(d.feature_orders.len(), 1);
        assert_eq!(apply_delta(&d, &old), new);
    }

    #[test]
    fn feature_additions_keep_positions() {
        let old = base();
        let mut new = base();
        let f = |name: &str| MFeature {
            name: name.into(),
            kind: FeatureKind::Attribute,
            type_name: "int".into(),
            lower: 0,
            upper: Upper::One,
        };
        new.classes[0].features.insert(0, f("first"));
        new.classes[0].features.push(f("last"));
        new.classes[1].features.clear();
        let d = diff_metamodels(&old, &new);
        assert_eq!(d.added_features.len(), 2);
        assert_eq!(d.removed_features.len(), 1);
        assert!(d.feature_orders.is_empty());
        assert_eq!(apply_delta(&d, &old), new);
    }
}
