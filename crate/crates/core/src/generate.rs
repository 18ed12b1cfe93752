//! Grammar generation from a metamodel, following the layout Xtext uses
//! for grammars generated from Ecore models, and typing of grammars
//! against a metamodel.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::grammar::{
    AssignOp, Cardinality, Delimiter, Element, Grammar, LexemeClass, Line, ParserRule,
    TerminalRule,
};
use crate::metamodel::{
    validate_metamodel, Diagnostic, FeatureKind, MClass, MFeature, Metamodel, Primitive, TypeRef,
    Upper,
};

/// Terminal used for cross-references and enum literals.
pub const ID_TERMINAL: &str = "ID";

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid metamodel: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unreachable rule: abstract class `{0}` has no concrete subclass")]
    UnreachableRule(String),
}

pub fn terminal_name(p: Primitive) -> &'static str {
    match p {
        Primitive::String => "EString",
        Primitive::Int => "EInt",
        Primitive::Bool => "EBoolean",
        Primitive::Float => "EFloat",
    }
}

pub fn lexeme_of(p: Primitive) -> LexemeClass {
    match p {
        Primitive::String => LexemeClass::String,
        Primitive::Int => LexemeClass::Int,
        Primitive::Bool => LexemeClass::Bool,
        Primitive::Float => LexemeClass::Float,
    }
}

fn kw(s: &str) -> Element {
    Element::Keyword(s.to_string())
}

fn brace_block(body: Vec<Line>) -> Element {
    Element::Block {
        open: Delimiter::Keyword("{".into()),
        close: Delimiter::Keyword("}".into()),
        body,
    }
}

fn feature_line(m: &Metamodel, f: &MFeature, used: &mut BTreeSet<&'static str>) -> Line {
    let name = f.name.as_str();
    let value = |op: AssignOp, used: &mut BTreeSet<&'static str>| match m.resolve_type(&f.type_name) {
        Some(TypeRef::Primitive(p)) => {
            used.insert(terminal_name(p));
            Element::Assignment {
                feature: name.into(),
                op,
                callee: terminal_name(p).into(),
            }
        }
        Some(TypeRef::Enum(_)) => {
            used.insert(ID_TERMINAL);
            Element::Assignment {
                feature: name.into(),
                op,
                callee: ID_TERMINAL.into(),
            }
        }
        _ if f.kind == FeatureKind::Reference => {
            used.insert(ID_TERMINAL);
            Element::CrossRef {
                feature: name.into(),
                op,
                target_class: f.type_name.clone(),
                id_terminal: ID_TERMINAL.into(),
            }
        }
        _ => Element::Assignment {
            feature: name.into(),
            op,
            callee: f.type_name.clone(),
        },
    };
    if !f.is_many() {
        return Line::new(Cardinality::Optional, vec![kw(name), value(AssignOp::Set, used)]);
    }
    let first = value(AssignOp::Add, used);
    let rest = value(AssignOp::Add, used);
    let block = if f.kind == FeatureKind::Reference {
        Element::Block {
            open: Delimiter::Keyword("(".into()),
            close: Delimiter::Keyword(")".into()),
            body: vec![
                Line::new(Cardinality::Required, vec![first]),
                Line::new(Cardinality::Star, vec![kw(","), rest]),
            ],
        }
    } else {
        brace_block(vec![
            Line::new(Cardinality::Required, vec![first]),
            Line::new(Cardinality::Star, vec![rest]),
        ])
    };
    Line::new(Cardinality::Optional, vec![kw(name), block])
}

fn class_rule(m: &Metamodel, c: &MClass, used: &mut BTreeSet<&'static str>) -> ParserRule {
    let body = m
        .all_features_of(&c.name)
        .into_iter()
        .map(|(_, f)| feature_line(m, f, used))
        .collect();
    ParserRule {
        name: c.name.clone(),
        returns: c.name.clone(),
        body: vec![Line::new(
            Cardinality::Required,
            vec![kw(&c.name), brace_block(body)],
        )],
    }
}

/// One rule per class in metamodel order: concrete classes get a keyword-led
/// brace block with one optional line per feature, abstract classes become
/// dispatch rules over their direct subclasses.
pub fn generate_grammar(m: &Metamodel) -> Result<Grammar, GenerateError> {
    let diags = validate_metamodel(m);
    if !diags.is_empty() {
        return Err(GenerateError::Invalid(diags));
    }
    let mut g = Grammar::new(m.name.clone());
    let mut used = BTreeSet::new();
    for c in &m.classes {
        if c.is_abstract {
            if m.concrete_subclasses(&c.name).is_empty() {
                return Err(GenerateError::UnreachableRule(c.name.clone()));
            }
            let options = m
                .direct_subclasses(&c.name)
                .into_iter()
                .filter(|s| !s.is_abstract || !m.concrete_subclasses(&s.name).is_empty())
                .map(|s| s.name.clone())
                .collect();
            g.rules.push(ParserRule {
                name: c.name.clone(),
                returns: c.name.clone(),
                body: vec![Line::new(
                    Cardinality::Required,
                    vec![Element::Alternatives(options)],
                )],
            });
        } else {
            g.rules.push(class_rule(m, c, &mut used));
        }
    }
    for p in Primitive::ALL {
        if used.contains(terminal_name(p)) {
            g.terminals.push(TerminalRule {
                name: terminal_name(p).into(),
                class: lexeme_of(p),
            });
        }
    }
    if used.contains(ID_TERMINAL) {
        g.terminals.push(TerminalRule {
            name: ID_TERMINAL.into(),
            class: LexemeClass::Id,
        });
    }
    Ok(g)
}

/// Rules that cannot be reached from the root rule through assignments and
/// alternatives.
pub fn unreachable_rules(g: &Grammar) -> Vec<String> {
    let Some(root) = g.root_rule() else {
        return Vec::new();
    };
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack = vec![root.name.as_str()];
    while let Some(name) = stack.pop() {
        if !seen.insert(name) {
            continue;
        }
        let Some(rule) = g.rule(name) else { continue };
        crate::grammar::visit_lines(&rule.body, &mut |_, line| {
            for e in &line.elements {
                match e {
                    Element::Assignment { callee, .. } if g.rule(callee).is_some() => {
                        stack.push(callee)
                    }
                    Element::Alternatives(opts) => stack.extend(opts.iter().map(String::as_str)),
                    _ => {}
                }
            }
        });
    }
    g.rules
        .iter()
        .filter(|r| !seen.contains(r.name.as_str()) && !r.is_dispatch())
        .map(|r| r.name.clone())
        .collect()
}

/// A grammar together with the metamodel its rules resolve against.
#[derive(Clone, Debug, PartialEq)]
pub struct TypedGrammar {
    pub grammar: Grammar,
    pub metamodel: Metamodel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttachFailure {
    UnresolvedClass { rule: String, class: String },
    UnresolvedFeature { rule: String, class: String, feature: String },
    Mismatch { rule: String, feature: String, detail: String },
}

impl fmt::Display for AttachFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttachFailure::UnresolvedClass { rule, class } => {
                write!(f, "rule `{rule}`: unresolved class `{class}`")
            }
            AttachFailure::UnresolvedFeature { rule, class, feature } => {
                write!(f, "rule `{rule}`: class `{class}` has no feature `{feature}`")
            }
            AttachFailure::Mismatch { rule, feature, detail } => {
                write!(f, "rule `{rule}`, feature `{feature}`: {detail}")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("grammar does not fit the metamodel: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
pub struct AttachError(pub Vec<AttachFailure>);

fn check_element(
    g: &Grammar,
    m: &Metamodel,
    rule: &ParserRule,
    e: &Element,
    out: &mut Vec<AttachFailure>,
) {
    let (feature, many) = match e {
        Element::Assignment { feature, op, .. } | Element::CrossRef { feature, op, .. } => {
            (feature, *op == AssignOp::Add)
        }
        _ => return,
    };
    let Some(f) = m.feature(&rule.returns, feature) else {
        out.push(AttachFailure::UnresolvedFeature {
            rule: rule.name.clone(),
            class: rule.returns.clone(),
            feature: feature.clone(),
        });
        return;
    };
    let mismatch = |detail: String| AttachFailure::Mismatch {
        rule: rule.name.clone(),
        feature: feature.clone(),
        detail,
    };
    if many && f.upper != Upper::Unbounded {
        out.push(mismatch("`+=` used on a single-valued feature".into()));
    }
    match e {
        Element::CrossRef { target_class, .. } => {
            if f.kind != FeatureKind::Reference {
                out.push(mismatch(format!("cross-reference on a {} feature", f.kind)));
            } else if m.class(target_class).is_none() {
                out.push(AttachFailure::UnresolvedClass {
                    rule: rule.name.clone(),
                    class: target_class.clone(),
                });
            } else if !m.is_subclass_of(target_class, &f.type_name) {
                out.push(mismatch(format!(
                    "target `{target_class}` is not a `{}`",
                    f.type_name
                )));
            }
        }
        Element::Assignment { callee, .. } => {
            if let Some(t) = g.terminal(callee) {
                let ok = match m.resolve_type(&f.type_name) {
                    Some(TypeRef::Primitive(p)) => {
                        t.class == lexeme_of(p)
                            || (p == Primitive::Float && t.class == LexemeClass::Int)
                            || (p == Primitive::String && t.class == LexemeClass::Id)
                    }
                    Some(TypeRef::Enum(_)) => t.class == LexemeClass::Id,
                    _ => false,
                };
                if f.kind != FeatureKind::Attribute || !ok {
                    out.push(mismatch(format!(
                        "terminal `{callee}` cannot hold a value of type `{}`",
                        f.type_name
                    )));
                }
            } else if let Some(target) = g.rule(callee) {
                if f.kind != FeatureKind::Containment {
                    out.push(mismatch(format!("rule call on a {} feature", f.kind)));
                } else if m.class(&target.returns).is_some()
                    && !m.is_subclass_of(&target.returns, &f.type_name)
                {
                    out.push(mismatch(format!(
                        "rule `{callee}` returns `{}`, not a `{}`",
                        target.returns, f.type_name
                    )));
                }
            }
        }
        _ => {}
    }
}

/// Resolves every rule's returned class and every assigned feature in `m`.
pub fn attach_metamodel(g: &Grammar, m: &Metamodel) -> Result<TypedGrammar, AttachError> {
    let mut failures = Vec::new();
    for rule in &g.rules {
        if m.class(&rule.returns).is_none() {
            failures.push(AttachFailure::UnresolvedClass {
                rule: rule.name.clone(),
                class: rule.returns.clone(),
            });
            continue;
        }
        crate::grammar::visit_lines(&rule.body, &mut |_, line| {
            for e in &line.elements {
                check_element(g, m, rule, e, &mut failures);
            }
        });
    }
    if failures.is_empty() {
        Ok(TypedGrammar {
            grammar: g.clone(),
            metamodel: m.clone(),
        })
    } else {
        Err(AttachError(failures))
    }
}

/// Reconstructs a metamodel that a grammar is typed by when none is given:
/// every returned class becomes a class, dispatch rules become abstract
/// supertypes, assignments become features (all optional).
pub fn derive_metamodel(g: &Grammar) -> Metamodel {
    let mut m = Metamodel::empty(g.name.clone());
    for rule in &g.rules {
        if m.class(&rule.returns).is_none() {
            m.classes.push(MClass {
                name: rule.returns.clone(),
                is_abstract: rule.is_dispatch(),
                supertypes: Vec::new(),
                renamed_from: None,
                features: Vec::new(),
            });
        }
    }
    for rule in &g.rules {
        if let Some(opts) = rule.dispatch_options() {
            for o in opts {
                let Some(sub) = g.rule(o).map(|r| r.returns.clone()) else {
                    continue;
                };
                if let Some(c) = m.classes.iter_mut().find(|c| c.name == sub) {
                    if c.supertypes.is_empty() && c.name != rule.returns {
                        c.supertypes.push(rule.returns.clone());
                    }
                }
            }
        }
    }
    for rule in &g.rules {
        let mut feats: Vec<MFeature> = Vec::new();
        crate::grammar::visit_lines(&rule.body, &mut |_, line| {
            for e in &line.elements {
                let (name, op, kind, ty) = match e {
                    Element::Assignment {
                        feature,
                        op,
                        callee,
                    } => match g.terminal(callee) {
                        Some(t) => {
                            let p = match t.class {
                                LexemeClass::Id | LexemeClass::String => Primitive::String,
                                LexemeClass::Int => Primitive::Int,
                                LexemeClass::Float => Primitive::Float,
                                LexemeClass::Bool => Primitive::Bool,
                            };
                            (feature, op, FeatureKind::Attribute, p.name().to_string())
                        }
                        None => (
                            feature,
                            op,
                            FeatureKind::Containment,
                            g.rule(callee).map_or(callee.clone(), |r| r.returns.clone()),
                        ),
                    },
                    Element::CrossRef {
                        feature,
                        op,
                        target_class,
                        ..
                    } => (feature, op, FeatureKind::Reference, target_class.clone()),
                    _ => continue,
                };
                let upper = if *op == AssignOp::Add {
                    Upper::Unbounded
                } else {
                    Upper::One
                };
                match feats.iter_mut().find(|f| &f.name == name) {
                    Some(f) if upper == Upper::Unbounded => f.upper = upper,
                    Some(_) => {}
                    None => feats.push(MFeature {
                        name: name.clone(),
                        kind,
                        type_name: ty,
                        lower: 0,
                        upper,
                    }),
                }
            }
        });
        // Features already present on a supertype are inherited, not redeclared.
        let inherited: Vec<String> = m
            .lineage(&rule.returns)
            .iter()
            .filter(|c| c.name != rule.returns)
            .flat_map(|c| c.features.iter().map(|f| f.name.clone()))
            .collect();
        if let Some(c) = m.classes.iter_mut().find(|c| c.name == rule.returns) {
            for f in feats {
                if !inherited.contains(&f.name) && !c.features.iter().any(|x| x.name == f.name) {
                    c.features.push(f);
                }
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, print_grammar};
    use crate::metamodel::load_metamodel;

    const ONE_CLASS: &str = r#"{"name": "Mini", "classes": [
        {"name": "EAPackage", "features": [
            {"name": "shortName", "kind": "attribute", "type": "string", "lower": 0, "upper": 1}
        ]}], "enums": []}"#;

    #[test]
    fn single_class_rule_matches_convention() {
        let m = load_metamodel(ONE_CLASS).unwrap();
        let g = generate_grammar(&m).unwrap();
        let expected = parse_grammar(
            "grammar Mini\nEAPackage returns EAPackage: 'EAPackage' '{' ('shortName' shortName=EString)? '}';\nterminal EString: STRING;\n",
        )
        .unwrap();
        assert_eq!(g, expected);
        assert_eq!(parse_grammar(&print_grammar(&g)).unwrap(), g);
    }

    #[test]
    fn empty_metamodel_gives_empty_grammar() {
        let g = generate_grammar(&Metamodel::empty("E")).unwrap();
        assert!(g.rules.is_empty());
        assert!(g.terminals.is_empty());
    }

    #[test]
    fn abstract_without_concrete_subclass_is_unreachable() {
        let m = load_metamodel(
            r#"{"name": "M", "classes": [{"name": "A", "abstract": true, "features": []}], "enums": []}"#,
        )
        .unwrap();
        assert_eq!(
            generate_grammar(&m),
            Err(GenerateError::UnreachableRule("A".into()))
        );
    }

    #[test]
    fn attach_reports_removed_class() {
        let m = load_metamodel(ONE_CLASS).unwrap();
        let g = generate_grammar(&m).unwrap();
        assert!(attach_metamodel(&g, &m).is_ok());
        let other = load_metamodel(
            r#"{"name": "Mini", "classes": [{"name": "EAPkg", "features": []}], "enums": []}"#,
        )
        .unwrap();
        let err = attach_metamodel(&g, &other).unwrap_err();
        assert_eq!(
            err.0,
            vec![AttachFailure::UnresolvedClass {
                rule: "EAPackage".into(),
                class: "EAPackage".into()
            }]
        );
    }

    #[test]
    fn derived_metamodel_types_the_grammar() {
        let m = load_metamodel(ONE_CLASS).unwrap();
        let g = generate_grammar(&m).unwrap();
        let d = derive_metamodel(&g);
        assert!(attach_metamodel(&g, &d).is_ok());
        assert_eq!(d.classes[0].features[0].name, "shortName");
    }
}
