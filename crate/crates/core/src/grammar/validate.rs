use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Delimiter, Element, Grammar, Line};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GrammarDiagnostic {
    DuplicateRule { name: String },
    ReservedName { name: String },
    BadName { name: String },
    UnresolvedReference { rule: String, name: String },
    LeftRecursion { rules: Vec<String> },
    EmptyBody { rule: String },
    EmptyLine { rule: String },
    BlockNotLast { rule: String },
    MismatchedDelimiters { rule: String },
    BadKeyword { rule: String, literal: String },
    MisplacedAlternatives { rule: String },
}

impl fmt::Display for GrammarDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarDiagnostic::DuplicateRule { name } => write!(f, "duplicate rule name `{name}`"),
            GrammarDiagnostic::ReservedName { name } => {
                write!(f, "`{name}` is reserved for layout blocks")
            }
            GrammarDiagnostic::BadName { name } => write!(f, "`{name}` is not a valid rule name"),
            GrammarDiagnostic::UnresolvedReference { rule, name } => {
                write!(f, "rule `{rule}` references unknown rule `{name}`")
            }
            GrammarDiagnostic::LeftRecursion { rules } => {
                write!(f, "left recursion through {}", rules.join(" -> "))
            }
            GrammarDiagnostic::EmptyBody { rule } => write!(f, "rule `{rule}` has an empty body"),
            GrammarDiagnostic::EmptyLine { rule } => write!(f, "rule `{rule}` contains an empty line"),
            GrammarDiagnostic::BlockNotLast { rule } => {
                write!(f, "rule `{rule}` has elements after a block on the same line")
            }
            GrammarDiagnostic::MismatchedDelimiters { rule } => {
                write!(f, "rule `{rule}` pairs INDENT/DEDENT with a keyword delimiter")
            }
            GrammarDiagnostic::BadKeyword { rule, literal } => {
                write!(f, "rule `{rule}` has an invalid keyword literal {literal:?}")
            }
            GrammarDiagnostic::MisplacedAlternatives { rule } => {
                write!(f, "rule `{rule}` mixes rule alternatives with other elements")
            }
        }
    }
}

/// All grammar invariants; empty means valid.
pub fn validate_grammar(g: &Grammar) -> Vec<GrammarDiagnostic> {
    let mut diags = Vec::new();
    let mut names = HashSet::new();
    for name in g.rules.iter().map(|r| &r.name).chain(g.terminals.iter().map(|t| &t.name)) {
        if !names.insert(name.as_str()) {
            diags.push(GrammarDiagnostic::DuplicateRule { name: name.clone() });
        }
        if name == "INDENT" || name == "DEDENT" {
            diags.push(GrammarDiagnostic::ReservedName { name: name.clone() });
        } else if !is_rule_name(name) {
            diags.push(GrammarDiagnostic::BadName { name: name.clone() });
        }
    }

    for rule in &g.rules {
        if rule.body.is_empty() {
            diags.push(GrammarDiagnostic::EmptyBody {
                rule: rule.name.clone(),
            });
        }
        let dispatch = rule.is_dispatch();
        check_lines(g, &rule.name, &rule.body, dispatch, &mut diags);
    }

    if diags.iter().all(|d| !matches!(d, GrammarDiagnostic::UnresolvedReference { .. })) {
        diags.extend(left_recursion(g));
    }
    diags
}

/// Names the grammar reader accepts in rule position.
fn is_rule_name(name: &str) -> bool {
    let mut cs = name.chars();
    cs.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(name, "terminal" | "enum" | "fragment" | "hidden")
}

fn check_lines(
    g: &Grammar,
    rule: &str,
    lines: &[Line],
    dispatch: bool,
    diags: &mut Vec<GrammarDiagnostic>,
) {
    let push_unique = |diags: &mut Vec<GrammarDiagnostic>, d: GrammarDiagnostic| {
        if !diags.contains(&d) {
            diags.push(d);
        }
    };
    for line in lines {
        if line.elements.is_empty() {
            push_unique(diags, GrammarDiagnostic::EmptyLine { rule: rule.into() });
        }
        for (i, e) in line.elements.iter().enumerate() {
            match e {
                Element::Keyword(k) => check_keyword(rule, k, diags),
                Element::Assignment { callee, .. } => {
                    if g.rule(callee).is_none() && g.terminal(callee).is_none() {
                        push_unique(
                            diags,
                            GrammarDiagnostic::UnresolvedReference {
                                rule: rule.into(),
                                name: callee.clone(),
                            },
                        );
                    }
                }
                Element::CrossRef { id_terminal, .. } => {
                    if g.terminal(id_terminal).is_none() {
                        push_unique(
                            diags,
                            GrammarDiagnostic::UnresolvedReference {
                                rule: rule.into(),
                                name: id_terminal.clone(),
                            },
                        );
                    }
                }
                Element::Alternatives(options) => {
                    if !dispatch {
                        push_unique(
                            diags,
                            GrammarDiagnostic::MisplacedAlternatives { rule: rule.into() },
                        );
                    }
                    for o in options {
                        if g.rule(o).is_none() {
                            push_unique(
                                diags,
                                GrammarDiagnostic::UnresolvedReference {
                                    rule: rule.into(),
                                    name: o.clone(),
                                },
                            );
                        }
                    }
                }
                Element::Block { open, close, body } => {
                    if i + 1 != line.elements.len() {
                        push_unique(diags, GrammarDiagnostic::BlockNotLast { rule: rule.into() });
                    }
                    let layout_ok = match (open, close) {
                        (Delimiter::Indent, Delimiter::Dedent) => true,
                        (Delimiter::Keyword(o), Delimiter::Keyword(c)) => {
                            check_keyword(rule, o, diags);
                            check_keyword(rule, c, diags);
                            true
                        }
                        _ => false,
                    };
                    if !layout_ok {
                        push_unique(
                            diags,
                            GrammarDiagnostic::MismatchedDelimiters { rule: rule.into() },
                        );
                    }
                    check_lines(g, rule, body, false, diags);
                }
            }
        }
    }
}

fn check_keyword(rule: &str, k: &str, diags: &mut Vec<GrammarDiagnostic>) {
    if k.is_empty() || k.chars().any(char::is_whitespace) || k == "INDENT" || k == "DEDENT" {
        let d = GrammarDiagnostic::BadKeyword {
            rule: rule.into(),
            literal: k.into(),
        };
        if !diags.contains(&d) {
            diags.push(d);
        }
    }
}

/// Per-rule flag: the rule can match without consuming a token.
pub fn nullable_rules(g: &Grammar) -> Vec<bool> {
    let index: HashMap<&str, usize> = g
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let mut nullable = vec![false; g.rules.len()];
    loop {
        let mut changed = false;
        for (i, r) in g.rules.iter().enumerate() {
            if !nullable[i] && lines_nullable(&r.body, &index, &nullable) {
                nullable[i] = true;
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

fn lines_nullable(lines: &[Line], index: &HashMap<&str, usize>, nullable: &[bool]) -> bool {
    lines.iter().all(|l| {
        l.cardinality.allows_absence()
            || l.elements
                .iter()
                .all(|e| element_nullable(e, index, nullable))
    })
}

fn element_nullable(e: &Element, index: &HashMap<&str, usize>, nullable: &[bool]) -> bool {
    match e {
        Element::Keyword(_) | Element::CrossRef { .. } => false,
        Element::Assignment { callee, .. } => {
            index.get(callee.as_str()).is_some_and(|&i| nullable[i])
        }
        Element::Alternatives(options) => options
            .iter()
            .any(|o| index.get(o.as_str()).is_some_and(|&i| nullable[i])),
        // An empty layout block produces no tokens at all.
        Element::Block { open, body, .. } => {
            *open == Delimiter::Indent && lines_nullable(body, index, nullable)
        }
    }
}

/// Rules that can be entered before the rule consumes a token.
fn first_position_refs(
    lines: &[Line],
    index: &HashMap<&str, usize>,
    nullable: &[bool],
    out: &mut BTreeSet<usize>,
) -> bool {
    for line in lines {
        let mut line_nullable = true;
        for e in &line.elements {
            match e {
                Element::Assignment { callee, .. } => {
                    if let Some(&i) = index.get(callee.as_str()) {
                        out.insert(i);
                    }
                }
                Element::Alternatives(options) => {
                    out.extend(options.iter().filter_map(|o| index.get(o.as_str()).copied()));
                }
                Element::Block {
                    open: Delimiter::Indent,
                    body,
                    ..
                } => {
                    first_position_refs(body, index, nullable, out);
                }
                _ => {}
            }
            if !element_nullable(e, index, nullable) {
                line_nullable = false;
                break;
            }
        }
        if !(line_nullable || line.cardinality.allows_absence()) {
            return false;
        }
    }
    true
}

fn left_recursion(g: &Grammar) -> Vec<GrammarDiagnostic> {
    let index: HashMap<&str, usize> = g
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let nullable = nullable_rules(g);
    let edges: Vec<BTreeSet<usize>> = g
        .rules
        .iter()
        .map(|r| {
            let mut out = BTreeSet::new();
            first_position_refs(&r.body, &index, &nullable, &mut out);
            out
        })
        .collect();

    // Report each rule on a cycle once, with the cycle that first reaches it.
    let mut reported: HashSet<usize> = HashSet::new();
    let mut diags = Vec::new();
    for start in 0..g.rules.len() {
        if reported.contains(&start) {
            continue;
        }
        if let Some(cycle) = find_cycle(start, &edges) {
            reported.extend(cycle.iter().copied());
            diags.push(GrammarDiagnostic::LeftRecursion {
                rules: cycle
                    .iter()
                    .chain(std::iter::once(&cycle[0]))
                    .map(|&i| g.rules[i].name.clone())
                    .collect(),
            });
        }
    }
    diags
}

fn find_cycle(start: usize, edges: &[BTreeSet<usize>]) -> Option<Vec<usize>> {
    // Iterative DFS from `start` returning the path back to `start`.
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(start, vec![start])];
    let mut visited = HashSet::new();
    while let Some((node, path)) = stack.pop() {
        for &next in &edges[node] {
            if next == start {
                return Some(path);
            }
            if visited.insert(next) {
                let mut p = path.clone();
                p.push(next);
                stack.push((next, p));
            }
        }
    }
    None
}
