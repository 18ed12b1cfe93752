//! Packrat parsing of programs against a typed grammar.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::lexer::{LexError, Lexer, Tok, Token};
use super::{resolve_reference, InstanceModel, InstanceObject, Value};
use crate::generate::TypedGrammar;
use crate::grammar::{AssignOp, Delimiter, Element, Grammar, LexemeClass, Line, Location};
use crate::metamodel::{FeatureKind, TypeRef};

/// Rule invocations allowed on one parse path.
const MAX_DEPTH: usize = 256;

/// Stack for the parsing thread; comfortably holds `MAX_DEPTH` levels in
/// unoptimized builds.
const PARSE_STACK: usize = 64 << 20;

/// Grammar lines that matched at least once in a successful parse.
pub type Coverage = BTreeSet<Location>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseFailure {
    /// Byte offset into the program text.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        if let Some(m) = &self.message {
            return write!(f, "{m}");
        }
        if self.expected.is_empty() {
            write!(f, "unexpected {}", self.found)
        } else {
            write!(f, "expected {}, found {}", self.expected.join(", "), self.found)
        }
    }
}

impl std::error::Error for ParseFailure {}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn failure(src: &str, offset: usize, expected: Vec<String>, found: String, message: Option<String>) -> ParseFailure {
    let (line, column) = line_col(src, offset);
    ParseFailure {
        offset,
        line,
        column,
        expected,
        found,
        message,
    }
}

type Assigned = (String, AssignOp, Value);
type Covered = (usize, Vec<usize>);

#[derive(Clone)]
struct Parsed {
    value: Value,
    covered: Vec<Covered>,
    end: usize,
}

#[derive(Default)]
struct Acc {
    assigned: Vec<Assigned>,
    covered: Vec<Covered>,
}

impl Acc {
    fn mark(&self) -> (usize, usize) {
        (self.assigned.len(), self.covered.len())
    }

    fn reset(&mut self, m: (usize, usize)) {
        self.assigned.truncate(m.0);
        self.covered.truncate(m.1);
    }
}

struct Parser<'a> {
    tg: &'a TypedGrammar,
    toks: Vec<Token>,
    memo: HashMap<(usize, usize), Option<Parsed>>,
    furthest: usize,
    expected: BTreeSet<String>,
    depth: usize,
    too_deep: Option<usize>,
}

impl<'a> Parser<'a> {
    fn g(&self) -> &'a Grammar {
        &self.tg.grammar
    }

    fn fail(&mut self, pos: usize, label: impl Into<String>) {
        if pos > self.furthest {
            self.furthest = pos;
            self.expected.clear();
        }
        if pos == self.furthest {
            self.expected.insert(label.into());
        }
    }

    fn tok(&self, pos: usize) -> Option<&Tok> {
        self.toks.get(pos).map(|t| &t.tok)
    }

    fn keyword(&mut self, pos: usize, k: &str) -> Option<usize> {
        match self.tok(pos) {
            Some(Tok::Keyword(t)) if t == k => Some(pos + 1),
            _ => {
                self.fail(pos, format!("'{k}'"));
                None
            }
        }
    }

    fn rule(&mut self, ri: usize, pos: usize) -> Option<Parsed> {
        if let Some(hit) = self.memo.get(&(ri, pos)) {
            return hit.clone();
        }
        if self.depth >= MAX_DEPTH {
            self.too_deep.get_or_insert(pos);
            return None;
        }
        self.depth += 1;
        let result = self.rule_uncached(ri, pos);
        self.depth -= 1;
        self.memo.insert((ri, pos), result.clone());
        result
    }

    fn rule_uncached(&mut self, ri: usize, pos: usize) -> Option<Parsed> {
        let rule = &self.g().rules[ri];
        if let Some(opts) = rule.dispatch_options() {
            for opt in opts {
                let Some(oi) = self.g().rule_index(opt) else {
                    continue;
                };
                if let Some(mut p) = self.rule(oi, pos) {
                    p.covered.push((ri, vec![0]));
                    return Some(p);
                }
            }
            return None;
        }
        let mut acc = Acc::default();
        let end = self.lines(ri, &rule.body, &[], pos, &mut acc)?;
        let mut obj = InstanceObject::new(rule.returns.clone());
        for (feature, op, value) in acc.assigned {
            let slot = obj.slots.entry(feature).or_default();
            match op {
                AssignOp::Add => slot.push(value),
                AssignOp::Set | AssignOp::Flag => *slot = vec![value],
            }
        }
        Some(Parsed {
            value: Value::Object(obj),
            covered: acc.covered,
            end,
        })
    }

    fn lines(&mut self, ri: usize, lines: &[Line], prefix: &[usize], mut pos: usize, acc: &mut Acc) -> Option<usize> {
        for (li, line) in lines.iter().enumerate() {
            let mut path = prefix.to_vec();
            path.push(li);
            let mut count = 0;
            loop {
                let m = acc.mark();
                match self.line(ri, line, &path, pos, acc) {
                    Some(next) => {
                        let progressed = next > pos;
                        pos = next;
                        count += 1;
                        if count == 1 {
                            acc.covered.push((ri, path.clone()));
                        }
                        if !line.cardinality.repeats() || !progressed {
                            break;
                        }
                    }
                    None => {
                        acc.reset(m);
                        break;
                    }
                }
            }
            if count == 0 && !line.cardinality.allows_absence() {
                return None;
            }
        }
        Some(pos)
    }

    fn line(&mut self, ri: usize, line: &Line, path: &[usize], mut pos: usize, acc: &mut Acc) -> Option<usize> {
        for (ei, e) in line.elements.iter().enumerate() {
            let mut epath = path.to_vec();
            epath.push(ei);
            pos = self.element(ri, e, &epath, pos, acc)?;
        }
        Some(pos)
    }

    fn element(&mut self, ri: usize, e: &Element, path: &[usize], pos: usize, acc: &mut Acc) -> Option<usize> {
        match e {
            Element::Keyword(k) => self.keyword(pos, k),
            Element::Assignment { feature, op, callee } => {
                let class = self.g().rules[ri].returns.as_str();
                if let Some(t) = self.g().terminal(callee) {
                    let (value, next) = self.terminal(pos, class, feature, callee, t.class)?;
                    acc.assigned.push((feature.clone(), *op, value));
                    return Some(next);
                }
                let ci = self.g().rule_index(callee)?;
                let p = self.rule(ci, pos)?;
                acc.assigned.push((feature.clone(), *op, p.value));
                acc.covered.extend(p.covered);
                Some(p.end)
            }
            Element::CrossRef {
                feature,
                op,
                id_terminal,
                ..
            } => match self.tok(pos) {
                Some(Tok::Ident(name)) => {
                    acc.assigned.push((feature.clone(), *op, Value::Ref(name.clone())));
                    Some(pos + 1)
                }
                _ => {
                    self.fail(pos, id_terminal.clone());
                    None
                }
            },
            Element::Block { open, close, body } => {
                let mut pos = match open {
                    Delimiter::Keyword(k) => self.keyword(pos, k)?,
                    _ => match self.tok(pos) {
                        Some(Tok::Indent) => pos + 1,
                        _ => {
                            self.fail(pos, "INDENT");
                            let empty_ok = matches!(close, Delimiter::Dedent)
                                && body.iter().all(|l| l.cardinality.allows_absence());
                            return empty_ok.then_some(pos);
                        }
                    },
                };
                pos = self.lines(ri, body, path, pos, acc)?;
                match close {
                    Delimiter::Keyword(k) => self.keyword(pos, k),
                    _ => match self.tok(pos) {
                        Some(Tok::Dedent) => Some(pos + 1),
                        _ => {
                            self.fail(pos, "DEDENT");
                            None
                        }
                    },
                }
            }
            Element::Alternatives(opts) => {
                for opt in opts {
                    let Some(oi) = self.g().rule_index(opt) else {
                        continue;
                    };
                    if let Some(p) = self.rule(oi, pos) {
                        acc.covered.extend(p.covered);
                        return Some(p.end);
                    }
                }
                None
            }
        }
    }

    fn terminal(
        &mut self,
        pos: usize,
        class: &str,
        feature: &str,
        terminal: &str,
        lexeme: LexemeClass,
    ) -> Option<(Value, usize)> {
        let m = &self.tg.metamodel;
        let ty = m
            .feature(class, feature)
            .filter(|f| f.kind == FeatureKind::Attribute)
            .and_then(|f| m.resolve_type(&f.type_name));
        let is_float = matches!(ty, Some(TypeRef::Primitive(crate::metamodel::Primitive::Float)));
        let value = match (lexeme, self.tok(pos)) {
            (LexemeClass::String, Some(Tok::Str(s))) => Some(Value::Str(s.clone())),
            (LexemeClass::Id, Some(Tok::Ident(s))) => match ty {
                Some(TypeRef::Enum(e)) => {
                    if e.literals.contains(s) {
                        Some(Value::Enum(s.clone()))
                    } else {
                        for l in &e.literals {
                            self.fail(pos, l.clone());
                        }
                        return None;
                    }
                }
                _ => Some(Value::Str(s.clone())),
            },
            (LexemeClass::Int, Some(Tok::Int(i))) if is_float => Some(Value::Float(*i as f64)),
            (LexemeClass::Int, Some(Tok::Int(i))) => Some(Value::Int(*i)),
            (LexemeClass::Float, Some(Tok::Float(x))) => Some(Value::Float(*x)),
            (LexemeClass::Float, Some(Tok::Int(i))) => Some(Value::Float(*i as f64)),
            (LexemeClass::Bool, Some(Tok::Ident(s) | Tok::Keyword(s))) if s == "true" || s == "false" => {
                Some(Value::Bool(s == "true"))
            }
            _ => None,
        };
        match value {
            Some(v) => Some((v, pos + 1)),
            None => {
                self.fail(pos, terminal.to_string());
                None
            }
        }
    }
}

/// Parses `text` with the grammar's root rule. The whole input must be
/// consumed and every reference must resolve.
pub fn parse_program(tg: &TypedGrammar, text: &str) -> Result<InstanceModel, ParseFailure> {
    parse_program_with_coverage(tg, text).map(|(m, _)| m)
}

pub fn parse_program_with_coverage(
    tg: &TypedGrammar,
    text: &str,
) -> Result<(InstanceModel, Coverage), ParseFailure> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(PARSE_STACK)
            .spawn_scoped(s, || parse_on_this_thread(tg, text))
            .expect("spawn parser thread")
            .join()
            .expect("parser thread panicked")
    })
}

fn parse_on_this_thread(tg: &TypedGrammar, text: &str) -> Result<(InstanceModel, Coverage), ParseFailure> {
    let g = &tg.grammar;
    let keywords = g.keywords();
    let toks = Lexer::new(&keywords, g.uses_layout())
        .tokenize(text)
        .map_err(|LexError { offset, message }| {
            let found = text[offset..].chars().next().map_or("end of input".into(), |c| format!("{c:?}"));
            failure(text, offset, Vec::new(), found, Some(message))
        })?;
    let Some(root) = g.root_rule() else {
        return Err(failure(text, 0, Vec::new(), "input".into(), Some("grammar has no root rule".into())));
    };
    let ri = g.rule_index(&root.name).expect("root rule is in the grammar");
    let mut p = Parser {
        tg,
        toks,
        memo: HashMap::new(),
        furthest: 0,
        expected: BTreeSet::new(),
        depth: 0,
        too_deep: None,
    };
    let parsed = p.rule(ri, 0);
    let complete = match parsed {
        Some(r) if r.end == p.toks.len() => Some(r),
        Some(r) => {
            p.fail(r.end, "end of input");
            None
        }
        None => None,
    };
    let offset_of = |p: &Parser, pos: usize| p.toks.get(pos).map_or(text.len(), |t| t.offset);
    let Some(parsed) = complete else {
        if let Some(pos) = p.too_deep {
            return Err(failure(
                text,
                offset_of(&p, pos),
                Vec::new(),
                p.tok(pos).map_or("end of input".into(), |t| t.to_string()),
                Some(format!("nesting deeper than {MAX_DEPTH} levels")),
            ));
        }
        let pos = p.furthest;
        return Err(failure(
            text,
            offset_of(&p, pos),
            p.expected.iter().cloned().collect(),
            p.tok(pos).map_or("end of input".into(), |t| t.to_string()),
            None,
        ));
    };
    let Value::Object(root_obj) = parsed.value else {
        unreachable!("rules produce objects")
    };
    check_references(tg, &root_obj, &root_obj, &p.toks, text)?;
    let coverage = parsed
        .covered
        .into_iter()
        .map(|(ri, path)| Location {
            rule: g.rules[ri].name.clone(),
            path,
        })
        .collect();
    Ok((InstanceModel { root: root_obj }, coverage))
}

fn check_references(
    tg: &TypedGrammar,
    root: &InstanceObject,
    obj: &InstanceObject,
    toks: &[Token],
    text: &str,
) -> Result<(), ParseFailure> {
    let m = &tg.metamodel;
    for (feature, values) in &obj.slots {
        for v in values {
            match v {
                Value::Object(child) => check_references(tg, root, child, toks, text)?,
                Value::Ref(name) => {
                    let target = m
                        .feature(&obj.class, feature)
                        .map_or(String::new(), |f| f.type_name.clone());
                    if resolve_reference(m, root, &target, name).is_none() {
                        let offset = toks
                            .iter()
                            .find(|t| matches!(&t.tok, Tok::Ident(s) if s == name))
                            .map_or(0, |t| t.offset);
                        return Err(failure(
                            text,
                            offset,
                            vec![format!("name of a {target}")],
                            format!("identifier `{name}`"),
                            Some(format!("unresolved reference `{name}`: no {target} has that name")),
                        ));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}
