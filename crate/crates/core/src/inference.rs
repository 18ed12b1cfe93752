//! Grammar inference from one example program whose tokens are labelled.
//!
//! Labels: `object-class` starts an object, `block-open`/`block-close`
//! delimit its body or a keyed group of child objects, `keyword` and
//! `attr-name` name the value that follows, `attr-value` and `reference`
//! carry values. The example file format is JSON:
//!
//! ```text
//! {"text": "EAPackage { shortName \"P1\" }",
//!  "spans": [{"start": 0, "end": 9, "label": "object-class"}, ...]}
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::TypedGrammar;
use crate::grammar::{
    visit_lines, AssignOp, Cardinality, Delimiter, Element, Grammar, LexemeClass, Line, Location, ParserRule,
    TerminalRule,
};
use crate::instance::{parse_program_with_coverage, InstanceModel, ParseFailure};
use crate::metamodel::{FeatureKind, MClass, MFeature, Metamodel, Primitive, Upper};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Keyword,
    AttrName,
    AttrValue,
    ObjectClass,
    BlockOpen,
    BlockClose,
    Reference,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: Label,
    /// Primitive type of an `attr-value`, or the target class of a
    /// `reference`.
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub type_name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub text: String,
    pub spans: Vec<Span>,
}

#[derive(Debug, Error, PartialEq)]
pub enum InferError {
    #[error("the example has no annotations")]
    Empty,
    #[error("annotation file: {0}")]
    Format(String),
    #[error("span {index} ({start}..{end}): {message}")]
    BadSpan {
        index: usize,
        start: usize,
        end: usize,
        message: String,
    },
    #[error("unannotated text `{text}` at offset {offset}")]
    Unannotated { offset: usize, text: String },
    #[error("unbalanced blocks: {0}")]
    Unbalanced(String),
    #[error("{0}")]
    Structure(String),
    #[error("`{class}.{feature}` is used with conflicting types: {first} and {second}")]
    ConflictingTypes {
        class: String,
        feature: String,
        first: String,
        second: String,
    },
    #[error("members of `{0}` appear in inconsistent orders")]
    InconsistentOrder(String),
    #[error("the inferred grammar does not parse the example: {0}")]
    NotSound(ParseFailure),
}

impl AnnotatedExample {
    pub fn from_json(doc: &str) -> Result<AnnotatedExample, InferError> {
        serde_json::from_str(doc).map_err(|e| InferError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("examples serialize")
    }

    fn span_text(&self, s: &Span) -> &str {
        &self.text[s.start..s.end]
    }

    /// Spans must be non-empty, sorted, disjoint, within the text, and cover
    /// every non-blank character.
    pub fn validate(&self) -> Result<(), InferError> {
        if self.spans.is_empty() {
            return Err(InferError::Empty);
        }
        let mut covered_to = 0;
        for (index, s) in self.spans.iter().enumerate() {
            let bad = |message: &str| InferError::BadSpan {
                index,
                start: s.start,
                end: s.end,
                message: message.to_string(),
            };
            if s.start >= s.end {
                return Err(bad("empty span"));
            }
            if s.end > self.text.len() || !self.text.is_char_boundary(s.start) || !self.text.is_char_boundary(s.end) {
                return Err(bad("outside the text"));
            }
            if s.start < covered_to {
                return Err(bad("overlaps or precedes the previous span"));
            }
            unannotated(&self.text, covered_to, s.start)?;
            covered_to = s.end;
        }
        unannotated(&self.text, covered_to, self.text.len())
    }
}

fn unannotated(text: &str, from: usize, to: usize) -> Result<(), InferError> {
    let gap = &text[from..to];
    match gap.find(|c: char| !c.is_whitespace()) {
        None => Ok(()),
        Some(i) => {
            let rest = &gap[i..];
            let word = rest.split(char::is_whitespace).next().unwrap_or(rest);
            Err(InferError::Unannotated {
                offset: from + i,
                text: word.to_string(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct ValueTok {
    primitive: Primitive,
    lexeme: LexemeClass,
}

#[derive(Clone, Debug)]
enum Member {
    Keyword(String),
    Attr {
        keyword: Option<String>,
        feature: String,
        value: ValueTok,
    },
    Ref {
        keyword: Option<String>,
        feature: String,
        target: String,
    },
    Group {
        keyword: String,
        open: String,
        close: String,
        objects: Vec<Obj>,
    },
    Child(Obj),
}

#[derive(Clone, Debug)]
struct Obj {
    class: String,
    header: Vec<Member>,
    body: Option<(String, String, Vec<Member>)>,
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `EAPackage` -> `eaPackage`, `DesignFunctionType` -> `designFunctionType`.
fn lower_camel(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut upper_run = chars.iter().take_while(|c| c.is_ascii_uppercase()).count();
    if upper_run > 1 && upper_run < chars.len() {
        upper_run -= 1;
    }
    let upper_run = upper_run.max(1);
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| if i < upper_run { c.to_ascii_lowercase() } else { *c })
        .collect()
}

fn classify_value(text: &str, declared: Option<&str>) -> Result<ValueTok, String> {
    let lexeme = if text.starts_with('"') {
        if text.len() < 2 || !text.ends_with('"') {
            return Err(format!("`{text}` is not a complete string literal"));
        }
        LexemeClass::String
    } else if text == "true" || text == "false" {
        LexemeClass::Bool
    } else if text.parse::<i64>().is_ok() {
        LexemeClass::Int
    } else if text.parse::<f64>().is_ok() && text.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
        LexemeClass::Float
    } else if is_identifier(text) {
        LexemeClass::Id
    } else {
        return Err(format!("`{text}` is not a literal"));
    };
    let natural = match lexeme {
        LexemeClass::String | LexemeClass::Id => Primitive::String,
        LexemeClass::Bool => Primitive::Bool,
        LexemeClass::Int => Primitive::Int,
        LexemeClass::Float => Primitive::Float,
    };
    let primitive = match declared {
        None => natural,
        Some(t) => Primitive::from_name(t).ok_or_else(|| format!("unknown value type `{t}`"))?,
    };
    let fits = primitive == natural || (primitive == Primitive::Float && lexeme == LexemeClass::Int);
    if !fits {
        return Err(format!("`{text}` is not a {} value", primitive.name()));
    }
    let lexeme = if primitive == Primitive::Float { LexemeClass::Float } else { lexeme };
    Ok(ValueTok { primitive, lexeme })
}

struct Reader<'a> {
    ex: &'a AnnotatedExample,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<&'a Span> {
        self.ex.spans.get(self.pos)
    }

    fn text(&self, s: &Span) -> &'a str {
        &self.ex.text[s.start..s.end]
    }

    fn object(&mut self) -> Result<Obj, InferError> {
        let head = self.peek().expect("caller checked");
        let class = self.text(head).to_string();
        if !is_identifier(&class) {
            return Err(InferError::Structure(format!("class name `{class}` is not an identifier")));
        }
        self.pos += 1;
        let mut obj = Obj {
            class,
            header: Vec::new(),
            body: None,
        };
        let (header, opened) = self.members(true)?;
        obj.header = header;
        if let Some(open) = opened {
            let (body, _) = self.members(false)?;
            let close = self.close(&open)?;
            obj.body = Some((open, close, body));
        }
        Ok(obj)
    }

    fn close(&mut self, open: &str) -> Result<String, InferError> {
        match self.peek() {
            Some(s) if s.label == Label::BlockClose => {
                self.pos += 1;
                Ok(self.text(s).to_string())
            }
            _ => Err(InferError::Unbalanced(format!("`{open}` is never closed"))),
        }
    }

    /// Reads members up to the end of the current object. In a header, an
    /// unkeyed block-open starts the body and its text is returned.
    fn members(&mut self, header: bool) -> Result<(Vec<Member>, Option<String>), InferError> {
        let mut out = Vec::new();
        let mut pending: Option<(String, Label)> = None;
        let flush = |pending: &mut Option<(String, Label)>, out: &mut Vec<Member>| -> Result<(), InferError> {
            match pending.take() {
                Some((k, Label::AttrName)) => Err(InferError::Structure(format!("attribute name `{k}` has no value"))),
                Some((k, _)) => {
                    out.push(Member::Keyword(k));
                    Ok(())
                }
                None => Ok(()),
            }
        };
        let feature_of = |pending: &Option<(String, Label)>, out: &[Member], prefix: &str| -> String {
            match pending {
                Some((k, _)) if is_identifier(k) => k.clone(),
                _ => {
                    let n = out
                        .iter()
                        .filter(|m| match m {
                            Member::Attr { keyword: None, .. } => prefix == "value",
                            Member::Ref { keyword: None, .. } => prefix == "ref",
                            _ => false,
                        })
                        .count();
                    format!("{prefix}{}", n + 1)
                }
            }
        };
        while let Some(s) = self.peek() {
            let text = self.text(s).to_string();
            match s.label {
                Label::Keyword | Label::AttrName => {
                    flush(&mut pending, &mut out)?;
                    pending = Some((text, s.label));
                    self.pos += 1;
                }
                Label::AttrValue => {
                    let value = classify_value(&text, s.type_name.as_deref()).map_err(|message| InferError::BadSpan {
                        index: self.pos,
                        start: s.start,
                        end: s.end,
                        message,
                    })?;
                    let feature = feature_of(&pending, &out, "value");
                    out.push(Member::Attr {
                        keyword: pending.take().map(|p| p.0),
                        feature,
                        value,
                    });
                    self.pos += 1;
                }
                Label::Reference => {
                    let target = s.type_name.clone().ok_or_else(|| InferError::BadSpan {
                        index: self.pos,
                        start: s.start,
                        end: s.end,
                        message: "a reference needs `type` naming the target class".into(),
                    })?;
                    if !is_identifier(&text) {
                        return Err(InferError::Structure(format!("reference `{text}` is not an identifier")));
                    }
                    let feature = feature_of(&pending, &out, "ref");
                    out.push(Member::Ref {
                        keyword: pending.take().map(|p| p.0),
                        feature,
                        target,
                    });
                    self.pos += 1;
                }
                Label::BlockOpen => match pending.take() {
                    Some((keyword, _)) => {
                        if !is_identifier(&keyword) {
                            return Err(InferError::Structure(format!("group keyword `{keyword}` cannot name a feature")));
                        }
                        self.pos += 1;
                        let mut objects = Vec::new();
                        while self.peek().is_some_and(|s| s.label == Label::ObjectClass) {
                            objects.push(self.object()?);
                        }
                        if objects.is_empty() {
                            return Err(InferError::Structure(format!("group `{keyword}` holds no objects")));
                        }
                        let close = self.close(&text)?;
                        out.push(Member::Group {
                            keyword,
                            open: text,
                            close,
                            objects,
                        });
                    }
                    None if header => {
                        self.pos += 1;
                        return Ok((out, Some(text)));
                    }
                    None => return Err(InferError::Structure(format!("unexpected `{text}` inside a body"))),
                },
                Label::ObjectClass if header => break,
                Label::ObjectClass => {
                    flush(&mut pending, &mut out)?;
                    out.push(Member::Child(self.object()?));
                }
                Label::BlockClose => break,
            }
        }
        flush(&mut pending, &mut out)?;
        Ok((out, None))
    }
}

/// What a member contributes to its class, keyed for merging occurrences.
#[derive(Clone, Debug)]
struct Slot {
    key: String,
    count: usize,
    member: Member,
}

fn member_key(m: &Member) -> String {
    match m {
        Member::Keyword(k) => format!("k:{k}"),
        Member::Attr { feature, .. } | Member::Ref { feature, .. } => format!("f:{feature}"),
        Member::Group { keyword, .. } => format!("f:{keyword}"),
        Member::Child(o) => format!("f:{}", lower_camel(&o.class)),
    }
}

/// Collapses consecutive repeats; a key that reappears later is an error.
fn slots(class: &str, members: &[Member]) -> Result<Vec<Slot>, InferError> {
    let mut out: Vec<Slot> = Vec::new();
    for m in members {
        let key = member_key(m);
        match out.last_mut() {
            Some(last) if last.key == key => last.count += 1,
            _ => {
                if out.iter().any(|s| s.key == key) {
                    return Err(InferError::InconsistentOrder(class.to_string()));
                }
                out.push(Slot {
                    key,
                    count: 1,
                    member: m.clone(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Default)]
struct ClassInfo {
    occurrences: usize,
    header: Vec<Vec<Slot>>,
    body: Vec<Option<(String, String, Vec<Slot>)>>,
}

fn collect(obj: &Obj, classes: &mut BTreeMap<String, ClassInfo>, order: &mut Vec<String>) -> Result<(), InferError> {
    if !classes.contains_key(&obj.class) {
        order.push(obj.class.clone());
    }
    let header = slots(&obj.class, &obj.header)?;
    let body = match &obj.body {
        Some((o, c, ms)) => Some((o.clone(), c.clone(), slots(&obj.class, ms)?)),
        None => None,
    };
    let info = classes.entry(obj.class.clone()).or_default();
    info.occurrences += 1;
    info.header.push(header);
    info.body.push(body);
    let children: Vec<&Obj> = obj
        .header
        .iter()
        .chain(obj.body.iter().flat_map(|(_, _, ms)| ms))
        .flat_map(|m| match m {
            Member::Child(o) => vec![o],
            Member::Group { objects, .. } => objects.iter().collect(),
            _ => Vec::new(),
        })
        .collect();
    for c in children {
        collect(c, classes, order)?;
    }
    Ok(())
}

/// Orders keys consistently with every observed sequence, preferring first
/// appearance.
fn merge_order(class: &str, seqs: &[Vec<Slot>]) -> Result<Vec<String>, InferError> {
    let mut keys: Vec<String> = Vec::new();
    for seq in seqs {
        for s in seq {
            if !keys.contains(&s.key) {
                keys.push(s.key.clone());
            }
        }
    }
    let mut before: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for seq in seqs {
        for (i, a) in seq.iter().enumerate() {
            for b in &seq[i + 1..] {
                before.entry(b.key.as_str()).or_default().insert(a.key.as_str());
            }
        }
    }
    let mut placed: Vec<String> = Vec::new();
    while placed.len() < keys.len() {
        let next = keys.iter().find(|k| {
            !placed.contains(k)
                && before
                    .get(k.as_str())
                    .is_none_or(|deps| deps.iter().all(|d| placed.iter().any(|p| p == d)))
        });
        match next {
            Some(k) => placed.push(k.clone()),
            None => return Err(InferError::InconsistentOrder(class.to_string())),
        }
    }
    Ok(placed)
}

fn kw(s: &str) -> Element {
    Element::Keyword(s.to_string())
}

fn terminal_for(v: &ValueTok) -> (&'static str, LexemeClass) {
    match v.lexeme {
        LexemeClass::Id => ("ID", LexemeClass::Id),
        LexemeClass::String => ("EString", LexemeClass::String),
        LexemeClass::Int => ("EInt", LexemeClass::Int),
        LexemeClass::Float => ("EFloat", LexemeClass::Float),
        LexemeClass::Bool => ("EBoolean", LexemeClass::Bool),
    }
}

struct Builder {
    features: BTreeMap<String, Vec<MFeature>>,
    terminals: BTreeMap<&'static str, LexemeClass>,
}

impl Builder {
    fn feature(&mut self, class: &str, f: MFeature, describe: String) -> Result<(), InferError> {
        let list = self.features.entry(class.to_string()).or_default();
        match list.iter_mut().find(|x| x.name == f.name) {
            Some(existing) if existing.kind != f.kind || existing.type_name != f.type_name => {
                Err(InferError::ConflictingTypes {
                    class: class.to_string(),
                    feature: f.name.clone(),
                    first: format!("{} {}", existing.kind, existing.type_name),
                    second: describe,
                })
            }
            Some(existing) => {
                if f.upper == Upper::Unbounded {
                    existing.upper = Upper::Unbounded;
                }
                Ok(())
            }
            None => {
                list.push(f);
                Ok(())
            }
        }
    }

    /// Lines for the slots of one region (header or body) of a class.
    fn region(&mut self, class: &str, seqs: &[Vec<Slot>], total: usize) -> Result<Vec<Line>, InferError> {
        let order = merge_order(class, seqs)?;
        let mut lines = Vec::new();
        for key in order {
            let seen: Vec<&Slot> = seqs.iter().flat_map(|s| s.iter().filter(|x| x.key == key)).collect();
            let many = seen.iter().any(|s| s.count > 1);
            let first = &seen[0].member;
            match first {
                Member::Keyword(k) => {
                    let card = if seen.len() == total && !many {
                        Cardinality::Required
                    } else if many {
                        Cardinality::Star
                    } else {
                        Cardinality::Optional
                    };
                    lines.push(Line::new(card, vec![kw(k)]));
                }
                Member::Attr { keyword, feature, value } => {
                    for s in &seen {
                        if let Member::Attr { value: v, keyword: k, .. } = &s.member {
                            if v != value || k != keyword {
                                return Err(InferError::ConflictingTypes {
                                    class: class.to_string(),
                                    feature: feature.clone(),
                                    first: format!("{:?} {}", value.lexeme, value.primitive.name()),
                                    second: format!("{:?} {}", v.lexeme, v.primitive.name()),
                                });
                            }
                        }
                    }
                    let (term, lex) = terminal_for(value);
                    self.terminals.insert(term, lex);
                    self.feature(
                        class,
                        MFeature {
                            name: feature.clone(),
                            kind: FeatureKind::Attribute,
                            type_name: value.primitive.name().to_string(),
                            lower: 0,
                            upper: if many { Upper::Unbounded } else { Upper::One },
                        },
                        format!("attribute {}", value.primitive.name()),
                    )?;
                    let mut es: Vec<Element> = keyword.iter().map(|k| kw(k)).collect();
                    es.push(Element::Assignment {
                        feature: feature.clone(),
                        op: if many { AssignOp::Add } else { AssignOp::Set },
                        callee: term.to_string(),
                    });
                    lines.push(Line::new(if many { Cardinality::Star } else { Cardinality::Optional }, es));
                }
                Member::Ref { keyword, feature, target } => {
                    self.terminals.insert("ID", LexemeClass::Id);
                    self.feature(
                        class,
                        MFeature {
                            name: feature.clone(),
                            kind: FeatureKind::Reference,
                            type_name: target.clone(),
                            lower: 0,
                            upper: if many { Upper::Unbounded } else { Upper::One },
                        },
                        format!("reference {target}"),
                    )?;
                    let mut es: Vec<Element> = keyword.iter().map(|k| kw(k)).collect();
                    es.push(Element::CrossRef {
                        feature: feature.clone(),
                        op: if many { AssignOp::Add } else { AssignOp::Set },
                        target_class: target.clone(),
                        id_terminal: "ID".into(),
                    });
                    lines.push(Line::new(if many { Cardinality::Star } else { Cardinality::Optional }, es));
                }
                Member::Group { keyword, open, close, .. } => {
                    let mut classes = BTreeSet::new();
                    let mut group_many = false;
                    for s in &seen {
                        if let Member::Group { objects, .. } = &s.member {
                            group_many |= objects.len() > 1 || s.count > 1;
                            classes.extend(objects.iter().map(|o| o.class.clone()));
                        }
                    }
                    if classes.len() > 1 {
                        return Err(InferError::Structure(format!(
                            "group `{keyword}` of `{class}` mixes classes {}",
                            classes.into_iter().collect::<Vec<_>>().join(", ")
                        )));
                    }
                    let child = classes.into_iter().next().expect("groups hold objects");
                    self.feature(
                        class,
                        MFeature {
                            name: keyword.clone(),
                            kind: FeatureKind::Containment,
                            type_name: child.clone(),
                            lower: 0,
                            upper: if group_many { Upper::Unbounded } else { Upper::One },
                        },
                        format!("containment {child}"),
                    )?;
                    let op = if group_many { AssignOp::Add } else { AssignOp::Set };
                    let assign = Element::Assignment {
                        feature: keyword.clone(),
                        op,
                        callee: child.clone(),
                    };
                    let mut body = vec![Line::new(Cardinality::Required, vec![assign.clone()])];
                    if group_many {
                        body.push(Line::new(Cardinality::Star, vec![assign]));
                    }
                    let block = Element::Block {
                        open: Delimiter::Keyword(open.clone()),
                        close: Delimiter::Keyword(close.clone()),
                        body,
                    };
                    lines.push(Line::new(Cardinality::Optional, vec![kw(keyword), block]));
                }
                Member::Child(o) => {
                    let feature = lower_camel(&o.class);
                    self.feature(
                        class,
                        MFeature {
                            name: feature.clone(),
                            kind: FeatureKind::Containment,
                            type_name: o.class.clone(),
                            lower: 0,
                            upper: if many { Upper::Unbounded } else { Upper::One },
                        },
                        format!("containment {}", o.class),
                    )?;
                    let assign = Element::Assignment {
                        feature,
                        op: if many { AssignOp::Add } else { AssignOp::Set },
                        callee: o.class.clone(),
                    };
                    lines.push(Line::new(if many { Cardinality::Star } else { Cardinality::Optional }, vec![assign]));
                }
            }
        }
        Ok(lines)
    }
}

/// Builds a metamodel and grammar under which the example parses. Every
/// attribute line is optional; repeated siblings become many-valued.
pub fn infer_grammar(ex: &AnnotatedExample) -> Result<(Metamodel, Grammar), InferError> {
    ex.validate()?;
    let mut r = Reader { ex, pos: 0 };
    match r.peek() {
        Some(s) if s.label == Label::ObjectClass => {}
        Some(s) => {
            return Err(InferError::Structure(format!(
                "the example must start with an object-class span, found `{}`",
                ex.span_text(s)
            )))
        }
        None => return Err(InferError::Empty),
    }
    let root = r.object()?;
    if let Some(s) = r.peek() {
        return Err(match s.label {
            Label::BlockClose => InferError::Unbalanced(format!("`{}` closes nothing", ex.span_text(s))),
            _ => InferError::Structure(format!("text after the root object: `{}`", ex.span_text(s))),
        });
    }
    let mut classes = BTreeMap::new();
    let mut order = Vec::new();
    collect(&root, &mut classes, &mut order)?;

    let mut b = Builder {
        features: BTreeMap::new(),
        terminals: BTreeMap::new(),
    };
    let mut g = Grammar::new("Inferred");
    for class in &order {
        let info = &classes[class];
        let mut body = vec![Line::new(Cardinality::Required, vec![kw(class)])];
        body.extend(b.region(class, &info.header, info.occurrences)?);
        let bodies: Vec<&(String, String, Vec<Slot>)> = info.body.iter().flatten().collect();
        if let Some((open, close, _)) = bodies.first() {
            if bodies.iter().any(|(o, c, _)| o != open || c != close) {
                return Err(InferError::Structure(format!("`{class}` bodies use different delimiters")));
            }
            let seqs: Vec<Vec<Slot>> = bodies.iter().map(|(_, _, s)| s.clone()).collect();
            let inner = b.region(class, &seqs, bodies.len())?;
            let block = Element::Block {
                open: Delimiter::Keyword(open.clone()),
                close: Delimiter::Keyword(close.clone()),
                body: inner,
            };
            let card = if bodies.len() == info.occurrences {
                Cardinality::Required
            } else {
                Cardinality::Optional
            };
            if card == Cardinality::Required && body.len() == 1 {
                body[0].elements.push(block);
            } else {
                body.push(Line::new(card, vec![block]));
            }
        }
        g.rules.push(ParserRule {
            name: class.clone(),
            returns: class.clone(),
            body,
        });
    }
    for (name, class) in &b.terminals {
        g.terminals.push(TerminalRule {
            name: name.to_string(),
            class: *class,
        });
    }
    let mut m = Metamodel::empty("Inferred");
    for class in &order {
        m.classes.push(MClass {
            name: class.clone(),
            is_abstract: false,
            supertypes: Vec::new(),
            renamed_from: None,
            features: b.features.remove(class).unwrap_or_default(),
        });
    }
    let tg = TypedGrammar {
        grammar: g,
        metamodel: m,
    };
    parse_program_with_coverage(&tg, &ex.text).map_err(InferError::NotSound)?;
    Ok((tg.metamodel, tg.grammar))
}

/// Parses the example with `g`, typed by the metamodel `g` implies.
pub fn verify_inference(g: &Grammar, ex: &AnnotatedExample) -> Result<InstanceModel, ParseFailure> {
    let tg = TypedGrammar {
        grammar: g.clone(),
        metamodel: crate::generate::derive_metamodel(g),
    };
    crate::instance::parse_program(&tg, &ex.text)
}

/// Rules and lines of `g` that parsing the example never uses.
pub fn dead_productions(g: &Grammar, ex: &AnnotatedExample) -> Result<Vec<Location>, ParseFailure> {
    let tg = TypedGrammar {
        grammar: g.clone(),
        metamodel: crate::generate::derive_metamodel(g),
    };
    let (_, coverage) = parse_program_with_coverage(&tg, &ex.text)?;
    let mut dead = Vec::new();
    for r in &g.rules {
        let mut lines = Vec::new();
        visit_lines(&r.body, &mut |path, _| {
            lines.push(Location {
                rule: r.name.clone(),
                path: path.to_vec(),
            })
        });
        if !lines.iter().any(|l| coverage.contains(l)) {
            dead.push(Location {
                rule: r.name.clone(),
                path: Vec::new(),
            });
        }
        dead.extend(lines.into_iter().filter(|l| !coverage.contains(l)));
    }
    Ok(dead)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Labels every whitespace-separated word of `text` in order.
    fn annotate(text: &str, labels: &[(Label, Option<&str>)]) -> AnnotatedExample {
        let mut spans = Vec::new();
        let mut offset = 0;
        for (word, (label, ty)) in text.split_whitespace().zip(labels) {
            let start = offset + text[offset..].find(word).unwrap();
            spans.push(Span {
                start,
                end: start + word.len(),
                label: *label,
                type_name: ty.map(str::to_string),
            });
            offset = start + word.len();
        }
        assert_eq!(spans.len(), text.split_whitespace().count());
        AnnotatedExample {
            text: text.to_string(),
            spans,
        }
    }

    #[test]
    fn lower_camel_names() {
        assert_eq!(lower_camel("EAPackage"), "eaPackage");
        assert_eq!(lower_camel("DesignFunctionType"), "designFunctionType");
        assert_eq!(lower_camel("X"), "x");
        assert_eq!(lower_camel("URL"), "url");
    }

    #[test]
    fn lone_class_token() {
        let ex = annotate("X", &[(Label::ObjectClass, None)]);
        let (m, g) = infer_grammar(&ex).unwrap();
        assert_eq!(crate::grammar::print_grammar(&g).lines().nth(2), Some("X returns X:"));
        assert_eq!(g.rules[0].body, vec![Line::new(Cardinality::Required, vec![kw("X")])]);
        assert!(m.classes[0].features.is_empty());
    }

    #[test]
    fn unannotated_text_is_rejected() {
        let mut ex = annotate("X {", &[(Label::ObjectClass, None), (Label::BlockOpen, None)]);
        ex.text.push_str(" }");
        assert!(matches!(infer_grammar(&ex), Err(InferError::Unannotated { offset: 4, .. })));
    }

    #[test]
    fn unbalanced_blocks() {
        let ex = annotate("X {", &[(Label::ObjectClass, None), (Label::BlockOpen, None)]);
        assert!(matches!(infer_grammar(&ex), Err(InferError::Unbalanced(_))));
        let ex = annotate("X }", &[(Label::ObjectClass, None), (Label::BlockClose, None)]);
        assert!(matches!(infer_grammar(&ex), Err(InferError::Unbalanced(_))));
    }

    #[test]
    fn conflicting_attribute_types() {
        let ex = annotate(
            "X { a 1 } ",
            &[(Label::ObjectClass, None), (Label::BlockOpen, None), (Label::Keyword, None), (Label::AttrValue, None), (Label::BlockClose, None)],
        );
        assert!(infer_grammar(&ex).is_ok());
        let text = "R { xs { X { a 1 } X { a \"s\" } } }";
        let labels = [
            (Label::ObjectClass, None),
            (Label::BlockOpen, None),
            (Label::Keyword, None),
            (Label::BlockOpen, None),
            (Label::ObjectClass, None),
            (Label::BlockOpen, None),
            (Label::Keyword, None),
            (Label::AttrValue, None),
            (Label::BlockClose, None),
            (Label::ObjectClass, None),
            (Label::BlockOpen, None),
            (Label::Keyword, None),
            (Label::AttrValue, None),
            (Label::BlockClose, None),
            (Label::BlockClose, None),
            (Label::BlockClose, None),
        ];
        assert!(matches!(
            infer_grammar(&annotate(text, &labels)),
            Err(InferError::ConflictingTypes { .. })
        ));
    }
}
