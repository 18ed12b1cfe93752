use std::fmt::Write;

use super::{Cardinality, Delimiter, Element, Grammar, Line};

/// Canonical text of a grammar: header line, one paragraph per rule, each
/// line indented by tabs, `;` on its own line. Deterministic byte output.
pub fn print_grammar(g: &Grammar) -> String {
    let mut out = format!("grammar {}\n", g.name);
    for rule in &g.rules {
        out.push('\n');
        let _ = writeln!(out, "{} returns {}:", rule.name, rule.returns);
        print_lines(&rule.body, 1, &mut out);
        out.push_str("\t;\n");
    }
    if !g.terminals.is_empty() {
        out.push('\n');
        for t in &g.terminals {
            let _ = writeln!(out, "terminal {}: {};", t.name, t.class.name());
        }
    }
    out
}

pub(crate) fn quote_keyword(k: &str) -> String {
    let mut s = String::with_capacity(k.len() + 2);
    s.push('\'');
    for c in k.chars() {
        if c == '\'' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('\'');
    s
}

fn delimiter_text(d: &Delimiter) -> String {
    match d {
        Delimiter::Keyword(k) => quote_keyword(k),
        Delimiter::Indent => "INDENT".into(),
        Delimiter::Dedent => "DEDENT".into(),
    }
}

/// A bare line that ends in a keyword followed by a sibling starting with a
/// keyword would read back as an empty block, so it gets parentheses.
fn needs_parens(line: &Line, next: Option<&Line>) -> bool {
    if line.cardinality != Cardinality::Required {
        return true;
    }
    let ends_with_keyword = matches!(line.elements.last(), Some(Element::Keyword(_)));
    let next_starts_with_keyword = next.is_some_and(|n| {
        n.cardinality == Cardinality::Required
            && matches!(
                n.elements.first(),
                Some(Element::Keyword(_))
                    | Some(Element::Block {
                        open: Delimiter::Keyword(_),
                        ..
                    })
            )
    });
    ends_with_keyword && next_starts_with_keyword
}

fn print_lines(lines: &[Line], indent: usize, out: &mut String) {
    for (i, line) in lines.iter().enumerate() {
        let parens = needs_parens(line, lines.get(i + 1));
        push_indent(indent, out);
        if parens {
            out.push('(');
        }
        let mut first = true;
        for e in &line.elements {
            if !first {
                out.push(' ');
            }
            first = false;
            match e {
                Element::Keyword(k) => out.push_str(&quote_keyword(k)),
                Element::Assignment {
                    feature,
                    op,
                    callee,
                } => {
                    let _ = write!(out, "{feature}{}{callee}", op.symbol());
                }
                Element::CrossRef {
                    feature,
                    op,
                    target_class,
                    id_terminal,
                } => {
                    let _ = write!(out, "{feature}{}[{target_class}|{id_terminal}]", op.symbol());
                }
                Element::Alternatives(options) => out.push_str(&options.join(" | ")),
                Element::Block { open, close, body } => {
                    out.push_str(&delimiter_text(open));
                    out.push('\n');
                    print_lines(body, indent + 1, out);
                    push_indent(indent, out);
                    out.push_str(&delimiter_text(close));
                }
            }
        }
        if parens {
            out.push(')');
            out.push_str(line.cardinality.suffix());
        }
        out.push('\n');
    }
}

fn push_indent(n: usize, out: &mut String) {
    for _ in 0..n {
        out.push('\t');
    }
}
