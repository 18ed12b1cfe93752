//! Selecting places in a grammar.
//!
//! A [`Location`] is a rule name plus a path into its body: an empty path is
//! the whole rule, an odd-length path (`[line]`, `[line, block, line]`, ...)
//! is a line, and an even-length path ends in an element index.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::print::quote_keyword;
use super::{visit_lines, Delimiter, Element, Grammar, Line, ParserRule};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleScope {
    All,
    Named(String),
}

impl RuleScope {
    pub fn parse(s: &str) -> RuleScope {
        if s == "*" {
            RuleScope::All
        } else {
            RuleScope::Named(s.to_string())
        }
    }

    pub fn matches(&self, rule: &str) -> bool {
        match self {
            RuleScope::All => true,
            RuleScope::Named(n) => n == rule,
        }
    }
}

impl fmt::Display for RuleScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleScope::All => f.write_str("*"),
            RuleScope::Named(n) => f.write_str(n),
        }
    }
}

impl Serialize for RuleScope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RuleScope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(RuleScope::parse(&String::deserialize(d)?))
    }
}

/// Which grammar places a rewrite targets. `feature` may be `*` for every
/// assigned feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub rule: RuleScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_feature: Option<String>,
}

impl Selector {
    pub fn rule(scope: RuleScope) -> Selector {
        Selector {
            rule: scope,
            feature: None,
            keyword: None,
            context_feature: None,
        }
    }

    pub fn with_feature(mut self, feature: impl Into<String>) -> Selector {
        self.feature = Some(feature.into());
        self
    }

    pub fn with_keyword(mut self, keyword: impl Into<String>) -> Selector {
        self.keyword = Some(keyword.into());
        self
    }

    pub fn with_context(mut self, feature: impl Into<String>) -> Selector {
        self.context_feature = Some(feature.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub rule: String,
    pub path: Vec<usize>,
}

impl Location {
    pub fn is_rule(&self) -> bool {
        self.path.is_empty()
    }

    pub fn is_line(&self) -> bool {
        self.path.len() % 2 == 1
    }

    pub fn is_element(&self) -> bool {
        !self.path.is_empty() && self.path.len() % 2 == 0
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule)?;
        if !self.path.is_empty() {
            let parts: Vec<String> = self.path.iter().map(|p| p.to_string()).collect();
            write!(f, "@{}", parts.join("."))?;
        }
        Ok(())
    }
}

/// A line found for a feature. `deep` lines are dedicated to the feature so
/// their nested blocks are searched too; shallow ones also hold other
/// features and are only searched at their own level.
struct FeatureLine {
    path: Vec<usize>,
    deep: bool,
}

fn matches_feature(f: &str, wanted: &str) -> bool {
    wanted == "*" || f == wanted
}

/// A block that only repeats assignments of `feature`, like the body of a
/// many-valued feature line.
fn is_repetition_block(body: &[Line], feature: &str) -> bool {
    !body.is_empty()
        && body.iter().any(|l| l.cardinality.repeats())
        && body.iter().all(|l| {
            let carried = l.carried_features();
            !carried.is_empty() && carried.iter().all(|f| matches_feature(f, feature))
        })
}

/// Lines that "own" `feature`: lines assigning it directly, or lines whose
/// carrying blocks are all repetition blocks of it. Structural blocks (a
/// class body) are looked through.
fn feature_lines(lines: &[Line], prefix: &[usize], feature: &str, out: &mut Vec<FeatureLine>) {
    for (i, line) in lines.iter().enumerate() {
        let mut path = prefix.to_vec();
        path.push(i);
        let carried = line.carried_features();
        if !carried.iter().any(|f| matches_feature(f, feature)) {
            continue;
        }
        let only = carried.iter().all(|f| matches_feature(f, feature));
        let direct = line
            .elements
            .iter()
            .any(|e| e.feature().is_some_and(|f| matches_feature(f, feature)));
        let carrying_blocks: Vec<&Vec<Line>> = line
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::Block { body, .. }
                    if body.iter().any(|l| {
                        l.carried_features()
                            .iter()
                            .any(|f| matches_feature(f, feature))
                    }) =>
                {
                    Some(body)
                }
                _ => None,
            })
            .collect();
        let repetition = !carrying_blocks.is_empty()
            && carrying_blocks
                .iter()
                .all(|b| is_repetition_block(b, feature));
        if only && (direct || repetition) {
            out.push(FeatureLine { path, deep: true });
            continue;
        }
        if direct {
            out.push(FeatureLine {
                path: path.clone(),
                deep: false,
            });
        }
        for (ei, e) in line.elements.iter().enumerate() {
            if let Element::Block { body, .. } = e {
                let mut p = path.clone();
                p.push(ei);
                feature_lines(body, &p, feature, out);
            }
        }
    }
}

fn elements_in_line(
    line: &Line,
    path: &[usize],
    deep: bool,
    pred: &dyn Fn(&Element) -> bool,
    out: &mut Vec<Vec<usize>>,
) {
    for (ei, e) in line.elements.iter().enumerate() {
        let mut p = path.to_vec();
        p.push(ei);
        if pred(e) {
            out.push(p.clone());
        }
        if deep {
            if let Element::Block { body, .. } = e {
                for (li, l) in body.iter().enumerate() {
                    let mut lp = p.clone();
                    lp.push(li);
                    elements_in_line(l, &lp, true, pred, out);
                }
            }
        }
    }
}

fn search_roots(rule: &ParserRule, context: Option<&str>) -> Vec<FeatureLine> {
    match context {
        Some(ctx) => {
            let mut v = Vec::new();
            feature_lines(&rule.body, &[], ctx, &mut v);
            v
        }
        None => (0..rule.body.len())
            .map(|i| FeatureLine {
                path: vec![i],
                deep: true,
            })
            .collect(),
    }
}

fn feature_targets(rule: &ParserRule, roots: &[FeatureLine], feature: &str) -> Vec<FeatureLine> {
    let mut targets: Vec<FeatureLine> = Vec::new();
    for root in roots {
        let line = super::line_at(&rule.body, &root.path).expect("root path is valid");
        let mut found = Vec::new();
        feature_lines(std::slice::from_ref(line), &[], feature, &mut found);
        for mut fl in found {
            let mut p = root.path.clone();
            p.extend_from_slice(&fl.path[1..]);
            fl.path = p;
            if !targets.iter().any(|t| t.path == fl.path) {
                targets.push(fl);
            }
        }
    }
    targets
}

/// Every place matched by `sel`, in grammar order. Nothing matching is an
/// empty list, not an error.
pub fn locate(g: &Grammar, sel: &Selector) -> Vec<Location> {
    let mut out = Vec::new();
    for rule in g.rules.iter().filter(|r| sel.rule.matches(&r.name)) {
        let mut paths: Vec<Vec<usize>> = Vec::new();
        let roots = search_roots(rule, sel.context_feature.as_deref());
        match (&sel.feature, &sel.keyword) {
            (None, None) => match &sel.context_feature {
                Some(_) => paths.extend(roots.into_iter().map(|r| r.path)),
                None => paths.push(Vec::new()),
            },
            (None, Some(k)) => {
                for root in &roots {
                    let line = super::line_at(&rule.body, &root.path).expect("root path is valid");
                    elements_in_line(
                        line,
                        &root.path,
                        root.deep,
                        &|e| matches!(e, Element::Keyword(x) if x == k),
                        &mut paths,
                    );
                }
            }
            (Some(f), keyword) => {
                for t in &feature_targets(rule, &roots, f) {
                    let line = super::line_at(&rule.body, &t.path).expect("feature path is valid");
                    match keyword {
                        Some(k) => elements_in_line(
                            line,
                            &t.path,
                            t.deep,
                            &|e| matches!(e, Element::Keyword(x) if x == k),
                            &mut paths,
                        ),
                        None => elements_in_line(
                            line,
                            &t.path,
                            t.deep,
                            &|e| e.feature().is_some_and(|x| matches_feature(x, f)),
                            &mut paths,
                        ),
                    }
                }
            }
        }
        paths.sort();
        paths.dedup();
        out.extend(paths.into_iter().map(|path| Location {
            rule: rule.name.clone(),
            path,
        }));
    }
    out
}

/// The lines owning `sel.feature` (inside the context lines when a context
/// is set). Without a feature, the context lines themselves.
pub fn locate_lines(g: &Grammar, sel: &Selector) -> Vec<Location> {
    let mut out = Vec::new();
    for rule in g.rules.iter().filter(|r| sel.rule.matches(&r.name)) {
        let roots = search_roots(rule, sel.context_feature.as_deref());
        let mut paths: Vec<Vec<usize>> = match (&sel.feature, &sel.context_feature) {
            (Some(f), _) => feature_targets(rule, &roots, f)
                .into_iter()
                .map(|t| t.path)
                .collect(),
            (None, Some(_)) => roots.into_iter().map(|r| r.path).collect(),
            (None, None) => Vec::new(),
        };
        paths.sort();
        paths.dedup();
        out.extend(paths.into_iter().map(|path| Location {
            rule: rule.name.clone(),
            path,
        }));
    }
    out
}

/// A selectable item of the generated-grammar view.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexedElement {
    pub location: Location,
    pub kind: &'static str,
    pub text: String,
}

fn element_text(e: &Element) -> String {
    match e {
        Element::Keyword(k) => quote_keyword(k),
        Element::Assignment {
            feature,
            op,
            callee,
        } => format!("{feature}{}{callee}", op.symbol()),
        Element::CrossRef {
            feature,
            op,
            target_class,
            id_terminal,
        } => format!("{feature}{}[{target_class}|{id_terminal}]", op.symbol()),
        Element::Block { open, close, .. } => {
            let d = |d: &Delimiter| match d {
                Delimiter::Keyword(k) => quote_keyword(k),
                other => other.to_string(),
            };
            format!("{} ... {}", d(open), d(close))
        }
        Element::Alternatives(o) => o.join(" | "),
    }
}

/// Every rule, line and element of `g` with its location.
pub fn elements_index(g: &Grammar) -> Vec<IndexedElement> {
    let mut out = Vec::new();
    for rule in &g.rules {
        out.push(IndexedElement {
            location: Location {
                rule: rule.name.clone(),
                path: Vec::new(),
            },
            kind: "rule",
            text: rule.name.clone(),
        });
        visit_lines(&rule.body, &mut |path, line| {
            out.push(IndexedElement {
                location: Location {
                    rule: rule.name.clone(),
                    path: path.to_vec(),
                },
                kind: "line",
                text: line
                    .elements
                    .iter()
                    .map(element_text)
                    .collect::<Vec<_>>()
                    .join(" "),
            });
            for (ei, e) in line.elements.iter().enumerate() {
                let mut p = path.to_vec();
                p.push(ei);
                out.push(IndexedElement {
                    location: Location {
                        rule: rule.name.clone(),
                        path: p,
                    },
                    kind: e.kind_name(),
                    text: element_text(e),
                });
            }
        });
    }
    out
}

/// Element at an even-length location path.
pub fn element_at<'a>(body: &'a [Line], path: &[usize]) -> Option<&'a Element> {
    let (last, line_path) = path.split_last()?;
    super::line_at(body, line_path)?.elements.get(*last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const G: &str = "grammar T\n\nEAPackage returns EAPackage:\n\t'EAPackage' '{'\n\t\t('shortName' shortName=EString)?\n\t\t('uuid' uuid=EString)?\n\t\t('elements' '{'\n\t\t\telements+=Element\n\t\t\t(elements+=Element)*\n\t\t'}')?\n\t'}'\n\t;\n\nElement returns Element:\n\t'Element' '{'\n\t\t('shortName' shortName=EString)?\n\t'}'\n\t;\n\nterminal EString: STRING;\n";

    #[test]
    fn wildcard_keyword_finds_one_per_rule() {
        let g = parse_grammar(G).unwrap();
        let sel = Selector::rule(RuleScope::All).with_keyword("shortName");
        let locs = locate(&g, &sel);
        assert_eq!(
            locs,
            vec![
                Location {
                    rule: "EAPackage".into(),
                    path: vec![0, 1, 0, 0]
                },
                Location {
                    rule: "Element".into(),
                    path: vec![0, 1, 0, 0]
                }
            ]
        );
    }

    #[test]
    fn rule_and_feature_find_the_assignment() {
        let g = parse_grammar(G).unwrap();
        let sel = Selector::rule(RuleScope::Named("EAPackage".into())).with_feature("shortName");
        let locs = locate(&g, &sel);
        assert_eq!(locs.len(), 1);
        assert_eq!(locs[0].path, vec![0, 1, 0, 1]);
        assert_eq!(
            element_at(&g.rules[0].body, &locs[0].path).and_then(Element::feature),
            Some("shortName")
        );
    }

    #[test]
    fn unknown_rule_matches_nothing() {
        let g = parse_grammar(G).unwrap();
        assert!(locate(&g, &Selector::rule(RuleScope::Named("NoSuchRule".into()))).is_empty());
    }

    #[test]
    fn many_feature_keyword_is_found_in_its_line() {
        let g = parse_grammar(G).unwrap();
        let sel = Selector::rule(RuleScope::All)
            .with_feature("elements")
            .with_keyword("elements");
        let locs = locate(&g, &sel);
        assert_eq!(locs.len(), 1);
        assert_eq!(locs[0].path, vec![0, 1, 2, 0]);
        let lines = locate(&g, &Selector::rule(RuleScope::All).with_context("elements"));
        assert_eq!(lines[0].path, vec![0, 1, 2]);
    }

    #[test]
    fn context_restricts_keyword_matches() {
        let g = parse_grammar(G).unwrap();
        let sel = Selector::rule(RuleScope::All)
            .with_keyword("uuid")
            .with_context("shortName");
        assert!(locate(&g, &sel).is_empty());
        let sel = Selector::rule(RuleScope::All)
            .with_keyword("uuid")
            .with_context("uuid");
        assert_eq!(locate(&g, &sel).len(), 1);
    }

    #[test]
    fn class_body_is_looked_through_for_single_feature_rules() {
        let g = parse_grammar(
            "grammar T\n\nX returns X:\n\t'X' '{'\n\t\t('items' '{'\n\t\t\titems+=Y\n\t\t\t(items+=Y)*\n\t\t'}')?\n\t'}'\n\t;\n\nY returns Y:\n\t'Y'\n\t;\n",
        )
        .unwrap();
        let lines = locate(&g, &Selector::rule(RuleScope::All).with_context("items"));
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].path, vec![0, 1, 0]);
    }

    #[test]
    fn index_covers_rules_lines_and_elements() {
        let g = parse_grammar(G).unwrap();
        let idx = elements_index(&g);
        assert!(idx.iter().any(|e| e.kind == "rule" && e.text == "Element"));
        assert!(idx.iter().any(|e| e.kind == "keyword" && e.text == "'shortName'"));
        assert!(idx.iter().any(|e| e.kind == "block" && e.text == "'{' ... '}'"));
    }
}
