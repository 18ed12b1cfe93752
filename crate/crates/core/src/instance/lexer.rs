//! Tokenizer for domain programs. The keyword set comes from the grammar;
//! grammars with layout blocks get INDENT/DEDENT tokens from indentation.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Keyword(String),
    Ident(String),
    Str(String),
    Int(i64),
    Float(f64),
    Indent,
    Dedent,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Keyword(k) => write!(f, "'{k}'"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Float(x) => write!(f, "number {x}"),
            Tok::Indent => f.write_str("INDENT"),
            Tok::Dedent => f.write_str("DEDENT"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    /// Byte offset of the first character.
    pub offset: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LexError {
    pub offset: usize,
    pub message: String,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(is_ident_start) && cs.all(is_ident_char)
}

pub(crate) struct Lexer<'k> {
    keywords: &'k [&'k str],
    layout: bool,
}

impl<'k> Lexer<'k> {
    pub fn new(keywords: &'k [&'k str], layout: bool) -> Lexer<'k> {
        Lexer { keywords, layout }
    }

    /// Longest keyword matching at `rest`; keywords ending in an identifier
    /// character must not run into a following one.
    fn keyword_at(&self, rest: &str) -> Option<&'k str> {
        self.keywords
            .iter()
            .copied()
            .filter(|k| !k.is_empty() && rest.starts_with(*k))
            .filter(|k| {
                let ends_ident = k.chars().last().is_some_and(is_ident_char);
                !(ends_ident && rest[k.len()..].chars().next().is_some_and(is_ident_char))
            })
            .max_by_key(|k| k.len())
    }

    pub fn tokenize(&self, src: &str) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        let mut indents = vec![0usize];
        let mut at_line_start = true;
        let mut i = 0;
        let bytes = src.as_bytes();
        while i < src.len() {
            if at_line_start && self.layout {
                let mut width = 0;
                let mut j = i;
                while j < src.len() {
                    match bytes[j] {
                        b' ' => width += 1,
                        b'\t' => width += 4 - width % 4,
                        _ => break,
                    }
                    j += 1;
                }
                i = j;
                if i >= src.len() {
                    break;
                }
                if bytes[i] == b'\n' || bytes[i] == b'\r' || src[i..].starts_with("//") {
                    // blank or comment-only line
                } else {
                    at_line_start = false;
                    let top = *indents.last().expect("indent stack");
                    if width > top {
                        indents.push(width);
                        out.push(Token {
                            tok: Tok::Indent,
                            offset: i,
                            text: String::new(),
                        });
                    } else {
                        while width < *indents.last().expect("indent stack") {
                            indents.pop();
                            out.push(Token {
                                tok: Tok::Dedent,
                                offset: i,
                                text: String::new(),
                            });
                        }
                        if width != *indents.last().expect("indent stack") {
                            return Err(LexError {
                                offset: i,
                                message: "indentation does not match any enclosing level".into(),
                            });
                        }
                    }
                }
            }
            let rest = &src[i..];
            let c = rest.chars().next().expect("non-empty rest");
            if c == '\n' {
                at_line_start = true;
                i += 1;
                continue;
            }
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            if rest.starts_with("//") {
                i += rest.find('\n').unwrap_or(rest.len());
                continue;
            }
            let start = i;
            if c == '"' {
                let (value, len) = lex_string(rest).map_err(|message| LexError {
                    offset: start,
                    message,
                })?;
                i += len;
                out.push(Token {
                    tok: Tok::Str(value),
                    offset: start,
                    text: src[start..i].to_string(),
                });
                continue;
            }
            let starts_number = c.is_ascii_digit()
                || (c == '-' && rest[1..].chars().next().is_some_and(|d| d.is_ascii_digit()));
            if starts_number {
                let (tok, len) = lex_number(rest).map_err(|message| LexError {
                    offset: start,
                    message,
                })?;
                i += len;
                out.push(Token {
                    tok,
                    offset: start,
                    text: src[start..i].to_string(),
                });
                continue;
            }
            let ident_len = if is_ident_start(c) {
                rest.find(|ch: char| !is_ident_char(ch)).unwrap_or(rest.len())
            } else {
                0
            };
            let kw = self.keyword_at(rest);
            match kw {
                Some(k) if k.len() >= ident_len => {
                    i += k.len();
                    out.push(Token {
                        tok: Tok::Keyword(k.to_string()),
                        offset: start,
                        text: k.to_string(),
                    });
                }
                _ if ident_len > 0 => {
                    i += ident_len;
                    out.push(Token {
                        tok: Tok::Ident(rest[..ident_len].to_string()),
                        offset: start,
                        text: rest[..ident_len].to_string(),
                    });
                }
                _ => {
                    return Err(LexError {
                        offset: start,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            }
        }
        while indents.len() > 1 {
            indents.pop();
            out.push(Token {
                tok: Tok::Dedent,
                offset: src.len(),
                text: String::new(),
            });
        }
        Ok(out)
    }
}

/// Returns the unescaped value and the byte length including quotes.
fn lex_string(rest: &str) -> Result<(String, usize), String> {
    let mut value = String::new();
    let mut chars = rest.char_indices().skip(1);
    while let Some((idx, c)) = chars.next() {
        match c {
            '"' => return Ok((value, idx + 1)),
            '\n' => return Err("line break inside a string".into()),
            '\\' => match chars.next() {
                Some((_, 'n')) => value.push('\n'),
                Some((_, 't')) => value.push('\t'),
                Some((_, 'r')) => value.push('\r'),
                Some((_, '"')) => value.push('"'),
                Some((_, '\\')) => value.push('\\'),
                Some((_, other)) => return Err(format!("unknown escape `\\{other}`")),
                None => break,
            },
            c => value.push(c),
        }
    }
    Err("unterminated string".into())
}

fn lex_number(rest: &str) -> Result<(Tok, usize), String> {
    let b = rest.as_bytes();
    let mut i = usize::from(b[0] == b'-');
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > s
    };
    digits(&mut i);
    let mut float = false;
    if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
        i += 1;
        digits(&mut i);
        float = true;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if digits(&mut j) {
            i = j;
            float = true;
        }
    }
    if rest[i..].chars().next().is_some_and(is_ident_char) {
        return Err(format!("malformed number `{}`", &rest[..=i]));
    }
    let text = &rest[..i];
    if float {
        text.parse::<f64>()
            .map(|x| (Tok::Float(x), i))
            .map_err(|e| format!("malformed number `{text}`: {e}"))
    } else {
        text.parse::<i64>()
            .map(|x| (Tok::Int(x), i))
            .map_err(|_| format!("integer `{text}` is out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(kws: &[&str], layout: bool, src: &str) -> Vec<Tok> {
        Lexer::new(kws, layout)
            .tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn keywords_beat_identifiers_only_when_whole() {
        let t = toks(&["EAPackage", "{", "}"], false, "EAPackage EAPackages {}");
        assert_eq!(
            t,
            [
                Tok::Keyword("EAPackage".into()),
                Tok::Ident("EAPackages".into()),
                Tok::Keyword("{".into()),
                Tok::Keyword("}".into()),
            ]
        );
    }

    #[test]
    fn literals() {
        let t = toks(&[], false, r#""a\"b" -3 2.5 1e3"#);
        assert_eq!(
            t,
            [Tok::Str("a\"b".into()), Tok::Int(-3), Tok::Float(2.5), Tok::Float(1000.0)]
        );
    }

    #[test]
    fn layout_tokens() {
        let t = toks(&[":"], true, "a:\n    b\n\n    c:\n        d\ne\n");
        let names: Vec<String> = t.iter().map(|t| t.to_string()).collect();
        assert_eq!(
            names,
            [
                "identifier `a`", "':'", "INDENT", "identifier `b`", "identifier `c`", "':'",
                "INDENT", "identifier `d`", "DEDENT", "DEDENT", "identifier `e`",
            ]
        );
    }

    #[test]
    fn bad_dedent_is_an_error() {
        assert!(Lexer::new(&[], true).tokenize("a\n    b\n  c\n").is_err());
    }
}
