//! Reader for the `.gxt` grammar text format.
//!
//! Lines are delimited by layout: every line of a rule body or block body
//! starts on its own physical line, and a keyword that ends a physical line
//! opens a block when the following lines are indented deeper (or when the
//! next line at the same depth starts with the closing keyword, for an empty
//! block). Rules written entirely on their header line are read in inline
//! mode instead, where `'{' ... '}'` pairs form blocks and every
//! parenthesized group is its own line.

use std::fmt;

use thiserror::Error;

use super::{
    validate_grammar, AssignOp, Cardinality, Delimiter, Element, Grammar, GrammarDiagnostic,
    LexemeClass, Line, ParserRule, TerminalRule,
};

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("grammar syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid grammar: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<GrammarDiagnostic>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Keyword(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Keyword(s) => write!(f, "'{s}'"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
    indent: usize,
    first_on_line: bool,
    last_on_line: bool,
}

const SYMBOLS: [&str; 13] = [
    "+=", "?=", ":", ";", "(", ")", "?", "*", "+", "|", "=", "[", "]",
];

fn lex(text: &str) -> Result<Vec<Token>, GrammarError> {
    let mut tokens: Vec<Token> = Vec::new();
    for (line_idx, raw_line) in text.split('\n').enumerate() {
        let line_no = line_idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let indent = line
            .chars()
            .take_while(|c| *c == ' ' || *c == '\t')
            .map(|c| if c == '\t' { 4 } else { 1 })
            .sum();
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        let mut first = true;
        let err = |col: usize, message: String| GrammarError::Syntax {
            line: line_no,
            column: col,
            message,
        };
        while i < chars.len() {
            let (_, c) = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1).map(|p| p.1) == Some('/') {
                break;
            }
            let tok = if c == '\'' || c == '"' {
                let quote = c;
                let mut lit = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(column, "unterminated keyword literal".into())),
                        Some(&(_, '\\')) => {
                            match chars.get(i + 1) {
                                Some(&(_, e)) => lit.push(e),
                                None => {
                                    return Err(err(column, "unterminated keyword literal".into()))
                                }
                            }
                            i += 2;
                        }
                        Some(&(_, ch)) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some(&(_, ch)) => {
                            lit.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Keyword(lit)
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().map(|p| p.1).collect())
            } else {
                let rest: String = chars[i..].iter().take(2).map(|p| p.1).collect();
                let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                    let message = match c {
                        '{' => "actions `{...}` are not supported".to_string(),
                        '=' | '-' | '&' => "predicates, unordered groups and guards are not supported"
                            .to_string(),
                        _ => format!("unexpected character `{c}`"),
                    };
                    return Err(err(column, message));
                };
                i += sym.len();
                Tok::Sym(sym)
            };
            tokens.push(Token {
                tok,
                line: line_no,
                column,
                indent,
                first_on_line: first,
                last_on_line: false,
            });
            first = false;
        }
        if let Some(last) = tokens.last_mut() {
            if last.line == line_no {
                last.last_on_line = true;
            }
        }
    }
    Ok(tokens)
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Layout,
    Inline,
}

#[derive(Clone, Copy)]
enum End {
    Semicolon,
    Dedent,
    Layout { base: usize },
    InlineClose,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        let (line, column) = match self.peek() {
            Some(t) => (t.line, t.column),
            None => (self.last_line, 1),
        };
        GrammarError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.tok.to_string(),
            None => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(x), .. }) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Token, GrammarError> {
        if self.is_sym(s) {
            Ok(self.bump())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.found())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, GrammarError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    fn grammar(&mut self) -> Result<Grammar, GrammarError> {
        if !self.is_ident("grammar") {
            return Err(self.error(format!("expected `grammar` header, found {}", self.found())));
        }
        self.pos += 1;
        let name = self.expect_ident("grammar name")?;
        if self.is_ident("with") || self.is_ident("import") || self.is_ident("generate") {
            return Err(self.error("`with`, `import` and `generate` clauses are not supported"));
        }
        let mut g = Grammar::new(name);
        while self.peek().is_some() {
            if self.is_ident("terminal") && matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Ident(_))) {
                self.pos += 1;
                let name = self.expect_ident("terminal name")?;
                self.expect_sym(":")?;
                let class_name = self.expect_ident("lexeme class")?;
                let class = LexemeClass::from_name(&class_name).ok_or_else(|| GrammarError::Syntax {
                    line: self.tokens[self.pos - 1].line,
                    column: self.tokens[self.pos - 1].column,
                    message: format!(
                        "terminal `{name}` must be one of ID, STRING, INT, FLOAT, BOOL; found `{class_name}`"
                    ),
                })?;
                self.expect_sym(";")?;
                g.terminals.push(TerminalRule { name, class });
                continue;
            }
            for unsupported in ["enum", "fragment", "hidden"] {
                if self.is_ident(unsupported)
                    && matches!(self.peek_at(1).map(|t| &t.tok), Some(Tok::Ident(_)))
                {
                    return Err(self.error(format!("`{unsupported}` rules are not supported")));
                }
            }
            g.rules.push(self.rule()?);
        }
        Ok(g)
    }

    fn rule(&mut self) -> Result<ParserRule, GrammarError> {
        let name = self.expect_ident("rule name")?;
        let returns = if self.is_ident("returns") {
            self.pos += 1;
            self.expect_ident("return class")?
        } else {
            name.clone()
        };
        let colon = self.expect_sym(":")?;
        let mode = match self.peek() {
            Some(t) if t.line == colon.line => Mode::Inline,
            _ => Mode::Layout,
        };
        let body = self.lines(End::Semicolon, mode)?;
        self.expect_sym(";")?;
        if body.is_empty() {
            return Err(GrammarError::Syntax {
                line: colon.line,
                column: colon.column,
                message: format!("rule `{name}` has an empty body"),
            });
        }
        Ok(ParserRule {
            name,
            returns,
            body,
        })
    }

    fn at_end(&self, end: End) -> bool {
        let Some(t) = self.peek() else {
            return true;
        };
        if self.is_sym(";") {
            return true;
        }
        match end {
            End::Semicolon => false,
            End::Dedent => self.is_ident("DEDENT"),
            End::Layout { base } => t.first_on_line && t.indent <= base,
            End::InlineClose => matches!(&t.tok, Tok::Keyword(k) if k == "}"),
        }
    }

    fn lines(&mut self, end: End, mode: Mode) -> Result<Vec<Line>, GrammarError> {
        let mut lines = Vec::new();
        while !self.at_end(end) {
            lines.push(self.line(mode)?);
        }
        Ok(lines)
    }

    fn line(&mut self, mode: Mode) -> Result<Line, GrammarError> {
        let start = self.peek().expect("line() called at end of input").clone();
        let base = start.indent;
        if self.is_sym("(") {
            self.pos += 1;
            let mut elements = Vec::new();
            while !self.is_sym(")") {
                if self.peek().is_none() || self.is_sym(";") {
                    return Err(self.error("unclosed group"));
                }
                if self.is_sym("(") {
                    return Err(self.error("nested groups are only allowed inside blocks"));
                }
                elements.push(self.element(base, mode)?);
            }
            self.pos += 1;
            if elements.is_empty() {
                return Err(self.error("empty group"));
            }
            let cardinality = if self.is_sym("?") {
                Cardinality::Optional
            } else if self.is_sym("*") {
                Cardinality::Star
            } else if self.is_sym("+") {
                Cardinality::Plus
            } else {
                Cardinality::Required
            };
            if cardinality != Cardinality::Required {
                self.pos += 1;
            }
            return Ok(Line {
                elements,
                cardinality,
            });
        }

        let mut elements = Vec::new();
        loop {
            let Some(t) = self.peek() else { break };
            let starts_element = match &t.tok {
                Tok::Keyword(k) => !(mode == Mode::Inline && k == "}"),
                Tok::Ident(s) => s != "DEDENT",
                Tok::Sym(_) => false,
            };
            if !starts_element || (!elements.is_empty() && t.line != start.line) {
                break;
            }
            let e = self.element(base, mode)?;
            let is_block = matches!(e, Element::Block { .. });
            elements.push(e);
            if is_block {
                break;
            }
        }
        if elements.is_empty() {
            return Err(self.error(format!("expected a grammar element, found {}", self.found())));
        }
        Ok(Line {
            elements,
            cardinality: Cardinality::Required,
        })
    }

    fn element(&mut self, base: usize, mode: Mode) -> Result<Element, GrammarError> {
        let t = self.peek().cloned().ok_or_else(|| self.error("unexpected end of input"))?;
        match &t.tok {
            Tok::Keyword(k) => {
                self.pos += 1;
                if mode == Mode::Inline {
                    if k == "{" {
                        let body = self.lines(End::InlineClose, mode)?;
                        match self.peek() {
                            Some(Token {
                                tok: Tok::Keyword(c),
                                ..
                            }) if c == "}" => {
                                self.pos += 1;
                            }
                            _ => return Err(self.error("unclosed `'{'` block")),
                        }
                        return Ok(Element::Block {
                            open: Delimiter::Keyword(k.clone()),
                            close: Delimiter::Keyword("}".into()),
                            body,
                        });
                    }
                    return Ok(Element::Keyword(k.clone()));
                }
                if t.last_on_line {
                    if let Some(next) = self.peek().cloned() {
                        let empty_block = next.first_on_line
                            && next.indent == base
                            && matches!(next.tok, Tok::Keyword(_));
                        if next.indent > base || empty_block {
                            let body = if empty_block {
                                Vec::new()
                            } else {
                                self.lines(End::Layout { base }, mode)?
                            };
                            let close = match self.peek() {
                                Some(Token {
                                    tok: Tok::Keyword(c),
                                    ..
                                }) => c.clone(),
                                _ => {
                                    return Err(self.error(format!(
                                        "expected closing keyword for block opened at line {}, found {}",
                                        t.line,
                                        self.found()
                                    )))
                                }
                            };
                            self.pos += 1;
                            return Ok(Element::Block {
                                open: Delimiter::Keyword(k.clone()),
                                close: Delimiter::Keyword(close),
                                body,
                            });
                        }
                    }
                }
                Ok(Element::Keyword(k.clone()))
            }
            Tok::Ident(name) if name == "INDENT" => {
                self.pos += 1;
                let body = self.lines(End::Dedent, mode)?;
                if !self.is_ident("DEDENT") {
                    return Err(self.error(format!("expected `DEDENT`, found {}", self.found())));
                }
                self.pos += 1;
                Ok(Element::Block {
                    open: Delimiter::Indent,
                    close: Delimiter::Dedent,
                    body,
                })
            }
            Tok::Ident(name) => {
                self.pos += 1;
                let op = if self.is_sym("=") {
                    Some(AssignOp::Set)
                } else if self.is_sym("+=") {
                    Some(AssignOp::Add)
                } else if self.is_sym("?=") {
                    Some(AssignOp::Flag)
                } else {
                    None
                };
                let Some(op) = op else {
                    let mut options = vec![name.clone()];
                    while self.is_sym("|") {
                        self.pos += 1;
                        options.push(self.expect_ident("rule name after `|`")?);
                    }
                    return Ok(Element::Alternatives(options));
                };
                self.pos += 1;
                if self.is_sym("[") {
                    self.pos += 1;
                    let target_class = self.expect_ident("cross-reference class")?;
                    let id_terminal = if self.is_sym("|") {
                        self.pos += 1;
                        self.expect_ident("cross-reference terminal")?
                    } else {
                        "ID".to_string()
                    };
                    self.expect_sym("]")?;
                    return Ok(Element::CrossRef {
                        feature: name.clone(),
                        op,
                        target_class,
                        id_terminal,
                    });
                }
                let callee = self.expect_ident("rule or terminal name")?;
                Ok(Element::Assignment {
                    feature: name.clone(),
                    op,
                    callee,
                })
            }
            Tok::Sym(_) => Err(self.error(format!("expected a grammar element, found {}", self.found()))),
        }
    }
}

/// Reads grammar text. The result always satisfies the grammar invariants.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last_line: text.split('\n').count(),
    };
    let g = p.grammar()?;
    let diags = validate_grammar(&g);
    if diags.is_empty() {
        Ok(g)
    } else {
        Err(GrammarError::Invalid(diags))
    }
}
