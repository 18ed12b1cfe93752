//! The grammar data model and its text format.
//!
//! A grammar is a list of parser rules whose bodies are sequences of
//! [`Line`]s. A line is the unit that prints on one physical line and carries
//! one cardinality for its whole element group. Blocks (`'{' ... '}'` or
//! `INDENT ... DEDENT`) nest further lines.

mod locate;
mod parse;
mod print;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use locate::{element_at, elements_index, locate, locate_lines, IndexedElement, Location, RuleScope, Selector};
pub use parse::{parse_grammar, GrammarError};
pub use print::print_grammar;
pub use validate::{nullable_rules, validate_grammar, GrammarDiagnostic};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    pub name: String,
    pub rules: Vec<ParserRule>,
    pub terminals: Vec<TerminalRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParserRule {
    pub name: String,
    pub returns: String,
    pub body: Vec<Line>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub elements: Vec<Element>,
    pub cardinality: Cardinality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    Required,
    Optional,
    Star,
    Plus,
}

impl Cardinality {
    pub fn suffix(self) -> &'static str {
        match self {
            Cardinality::Required => "",
            Cardinality::Optional => "?",
            Cardinality::Star => "*",
            Cardinality::Plus => "+",
        }
    }

    pub fn from_name(s: &str) -> Option<Cardinality> {
        match s {
            "required" => Some(Cardinality::Required),
            "optional" => Some(Cardinality::Optional),
            "star" => Some(Cardinality::Star),
            "plus" => Some(Cardinality::Plus),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cardinality::Required => "required",
            Cardinality::Optional => "optional",
            Cardinality::Star => "star",
            Cardinality::Plus => "plus",
        }
    }

    /// The line may match nothing.
    pub fn allows_absence(self) -> bool {
        matches!(self, Cardinality::Optional | Cardinality::Star)
    }

    pub fn repeats(self) -> bool {
        matches!(self, Cardinality::Star | Cardinality::Plus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssignOp {
    #[serde(rename = "=")]
    Set,
    #[serde(rename = "+=")]
    Add,
    #[serde(rename = "?=")]
    Flag,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Flag => "?=",
        }
    }
}

/// Block delimiter: a keyword literal or a layout marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delimiter {
    Keyword(String),
    Indent,
    Dedent,
}

impl Delimiter {
    /// Reads the configuration spelling: `INDENT`, `DEDENT` or a literal.
    pub fn from_token(tok: &str) -> Delimiter {
        match tok {
            "INDENT" => Delimiter::Indent,
            "DEDENT" => Delimiter::Dedent,
            other => Delimiter::Keyword(other.to_string()),
        }
    }

    pub fn is_layout(&self) -> bool {
        !matches!(self, Delimiter::Keyword(_))
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delimiter::Keyword(k) => f.write_str(k),
            Delimiter::Indent => f.write_str("INDENT"),
            Delimiter::Dedent => f.write_str("DEDENT"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Element {
    Keyword(String),
    Assignment {
        feature: String,
        op: AssignOp,
        callee: String,
    },
    CrossRef {
        feature: String,
        op: AssignOp,
        target_class: String,
        id_terminal: String,
    },
    Block {
        open: Delimiter,
        close: Delimiter,
        body: Vec<Line>,
    },
    Alternatives(Vec<String>),
}

impl Element {
    /// Feature assigned by this element, for assignments and cross-references.
    pub fn feature(&self) -> Option<&str> {
        match self {
            Element::Assignment { feature, .. } | Element::CrossRef { feature, .. } => {
                Some(feature)
            }
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Element::Keyword(_) => "keyword",
            Element::Assignment { .. } => "assignment",
            Element::CrossRef { .. } => "crossref",
            Element::Block { .. } => "block",
            Element::Alternatives(_) => "alternatives",
        }
    }
}

/// Lexeme classes a terminal rule may stand for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LexemeClass {
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "STRING")]
    String,
    #[serde(rename = "INT")]
    Int,
    #[serde(rename = "FLOAT")]
    Float,
    #[serde(rename = "BOOL")]
    Bool,
}

impl LexemeClass {
    pub fn from_name(s: &str) -> Option<LexemeClass> {
        match s {
            "ID" => Some(LexemeClass::Id),
            "STRING" => Some(LexemeClass::String),
            "INT" => Some(LexemeClass::Int),
            "FLOAT" => Some(LexemeClass::Float),
            "BOOL" => Some(LexemeClass::Bool),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LexemeClass::Id => "ID",
            LexemeClass::String => "STRING",
            LexemeClass::Int => "INT",
            LexemeClass::Float => "FLOAT",
            LexemeClass::Bool => "BOOL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalRule {
    pub name: String,
    pub class: LexemeClass,
}

impl Line {
    pub fn new(cardinality: Cardinality, elements: Vec<Element>) -> Line {
        Line {
            elements,
            cardinality,
        }
    }

    /// True if the line assigns `feature`, directly or inside one of its
    /// blocks.
    pub fn carries(&self, feature: &str) -> bool {
        self.elements.iter().any(|e| match e {
            Element::Block { body, .. } => body.iter().any(|l| l.carries(feature)),
            other => other.feature() == Some(feature),
        })
    }

    /// Features assigned anywhere in the line, in order of appearance.
    pub fn carried_features(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for e in &self.elements {
            match e {
                Element::Block { body, .. } => {
                    for l in body {
                        for f in l.carried_features() {
                            if !out.contains(&f) {
                                out.push(f);
                            }
                        }
                    }
                }
                other => {
                    if let Some(f) = other.feature() {
                        if !out.contains(&f) {
                            out.push(f);
                        }
                    }
                }
            }
        }
        out
    }
}

impl ParserRule {
    /// An alternatives-only dispatch rule (`A: B | C;`).
    pub fn is_dispatch(&self) -> bool {
        matches!(
            &self.body[..],
            [Line { elements, cardinality: Cardinality::Required }]
                if matches!(&elements[..], [Element::Alternatives(_)])
        )
    }

    pub fn dispatch_options(&self) -> Option<&[String]> {
        match &self.body[..] {
            [Line { elements, .. }] => match &elements[..] {
                [Element::Alternatives(opts)] => Some(opts),
                _ => None,
            },
            _ => None,
        }
    }

    /// Index into `body` of the first top-level line holding a block, plus
    /// the element index of that block.
    pub fn outermost_block(&self) -> Option<(usize, usize)> {
        self.body.iter().enumerate().find_map(|(li, line)| {
            line.elements
                .iter()
                .position(|e| matches!(e, Element::Block { .. }))
                .map(|ei| (li, ei))
        })
    }
}

impl Grammar {
    pub fn new(name: impl Into<String>) -> Grammar {
        Grammar {
            name: name.into(),
            rules: Vec::new(),
            terminals: Vec::new(),
        }
    }

    pub fn rule(&self, name: &str) -> Option<&ParserRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    /// Entry rule for programs: the first rule that is not a dispatch rule.
    pub fn root_rule(&self) -> Option<&ParserRule> {
        self.rules.iter().find(|r| !r.is_dispatch())
    }

    pub fn terminal(&self, name: &str) -> Option<&TerminalRule> {
        self.terminals.iter().find(|t| t.name == name)
    }

    /// True if any block uses layout delimiters.
    pub fn uses_layout(&self) -> bool {
        fn lines_use(lines: &[Line]) -> bool {
            lines.iter().any(|l| {
                l.elements.iter().any(|e| match e {
                    Element::Block { open, close, body } => {
                        open.is_layout() || close.is_layout() || lines_use(body)
                    }
                    _ => false,
                })
            })
        }
        self.rules.iter().any(|r| lines_use(&r.body))
    }

    /// Every keyword literal used anywhere, block delimiters included.
    pub fn keywords(&self) -> Vec<&str> {
        fn collect<'a>(lines: &'a [Line], out: &mut Vec<&'a str>) {
            for l in lines {
                for e in &l.elements {
                    match e {
                        Element::Keyword(k) => out.push(k),
                        Element::Block { open, close, body } => {
                            for d in [open, close] {
                                if let Delimiter::Keyword(k) = d {
                                    out.push(k);
                                }
                            }
                            collect(body, out);
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut out = Vec::new();
        for r in &self.rules {
            collect(&r.body, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Follows a line path (`[line, element, line, ...]`, odd length) into a
/// rule body.
pub fn line_at<'a>(body: &'a [Line], path: &[usize]) -> Option<&'a Line> {
    let (&first, rest) = path.split_first()?;
    let line = body.get(first)?;
    match rest {
        [] => Some(line),
        [elem, tail @ ..] => match line.elements.get(*elem)? {
            Element::Block { body, .. } => line_at(body, tail),
            _ => None,
        },
    }
}

pub fn line_at_mut<'a>(body: &'a mut [Line], path: &[usize]) -> Option<&'a mut Line> {
    let (&first, rest) = path.split_first()?;
    let line = body.get_mut(first)?;
    match rest {
        [] => Some(line),
        [elem, tail @ ..] => match line.elements.get_mut(*elem)? {
            Element::Block { body, .. } => line_at_mut(body, tail),
            _ => None,
        },
    }
}

/// Lines list that a line path lives in (the rule body or a block body).
pub fn lines_containing_mut<'a>(body: &'a mut Vec<Line>, path: &[usize]) -> Option<&'a mut Vec<Line>> {
    match path {
        [_] => Some(body),
        [first, elem, tail @ ..] => match body.get_mut(*first)?.elements.get_mut(*elem)? {
            Element::Block { body, .. } => lines_containing_mut(body, tail),
            _ => None,
        },
        [] => None,
    }
}

/// Visits every line in pre-order with its path.
pub fn visit_lines<'a>(body: &'a [Line], f: &mut dyn FnMut(&[usize], &'a Line)) {
    fn go<'a>(lines: &'a [Line], prefix: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], &'a Line)) {
        for (i, line) in lines.iter().enumerate() {
            prefix.push(i);
            f(prefix, line);
            for (ei, e) in line.elements.iter().enumerate() {
                if let Element::Block { body, .. } = e {
                    prefix.push(ei);
                    go(body, prefix, f);
                    prefix.pop();
                }
            }
            prefix.pop();
        }
    }
    go(body, &mut Vec::new(), f);
}
