use std::collections::BTreeSet;
use std::fmt::{self, Write};

use serde::Serialize;

use crate::grammar::{print_grammar, Grammar, Location, ParserRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    Applied,
    NoMatch,
    Error,
}

impl fmt::Display for EntryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryStatus::Applied => "applied",
            EntryStatus::NoMatch => "no-match",
            EntryStatus::Error => "error",
        })
    }
}

/// Printed size of one rule before and after an entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleDiff {
    pub rule: String,
    pub before_lines: usize,
    pub after_lines: usize,
    pub lines_changed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryReport {
    pub index: usize,
    pub rule_id: String,
    pub status: EntryStatus,
    pub matched: usize,
    pub locations: Vec<Location>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub diff: Vec<RuleDiff>,
}

impl EntryReport {
    pub fn lines_changed(&self) -> usize {
        self.diff.iter().map(|d| d.lines_changed).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub rules_touched: usize,
    pub lines_changed: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ApplicationReport {
    pub entries: Vec<EntryReport>,
    pub totals: Totals,
    /// Index of the entry that stopped a strict run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<usize>,
}

impl ApplicationReport {
    pub fn from_entries(entries: Vec<EntryReport>, halted_at: Option<usize>) -> Self {
        let touched: BTreeSet<&str> = entries
            .iter()
            .flat_map(|e| e.diff.iter().filter(|d| d.lines_changed > 0).map(|d| d.rule.as_str()))
            .collect();
        let totals = Totals {
            rules_touched: touched.len(),
            lines_changed: entries.iter().map(EntryReport::lines_changed).sum(),
        };
        ApplicationReport {
            entries,
            totals,
            halted_at,
        }
    }

    pub fn count(&self, status: EntryStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// Plain-text rendering used by the CLI `--report` flag.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = write!(
                out,
                "[{}] {} {}: {} location(s), {} line(s) changed",
                e.index,
                e.rule_id,
                e.status,
                e.matched,
                e.lines_changed()
            );
            if let Some(m) = &e.message {
                let _ = write!(out, " ({m})");
            }
            out.push('\n');
            for d in e.diff.iter().filter(|d| d.lines_changed > 0) {
                let _ = writeln!(
                    out,
                    "    {}: {} -> {} lines, {} changed",
                    d.rule, d.before_lines, d.after_lines, d.lines_changed
                );
            }
        }
        let _ = writeln!(
            out,
            "total: {} entries, {} applied, {} no-match, {} error; {} rules touched, {} lines changed",
            self.entries.len(),
            self.count(EntryStatus::Applied),
            self.count(EntryStatus::NoMatch),
            self.count(EntryStatus::Error),
            self.totals.rules_touched,
            self.totals.lines_changed
        );
        if let Some(i) = self.halted_at {
            let _ = writeln!(out, "halted at entry {i}");
        }
        out
    }
}

/// Printed lines of one rule paragraph.
pub(crate) fn rule_lines(rule: &ParserRule) -> Vec<String> {
    let mut g = Grammar::new("_");
    g.rules.push(rule.clone());
    print_grammar(&g)
        .lines()
        .skip(2)
        .map(str::to_string)
        .collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Lines changed between two texts: the larger of removed and added lines
/// in a longest-common-subsequence line diff.
pub fn line_diff(before: &[String], after: &[String]) -> usize {
    let common = lcs_len(before, after);
    (before.len() - common).max(after.len() - common)
}

/// Per-rule diff between two grammars. `renamed` maps an old rule name to
/// its new one so a renamed rule is compared with itself.
pub(crate) fn diff_grammars(before: &Grammar, after: &Grammar, renamed: Option<(&str, &str)>) -> Vec<RuleDiff> {
    let mut out = Vec::new();
    let mut seen_after = BTreeSet::new();
    for r in &before.rules {
        let new_name = match renamed {
            Some((old, new)) if old == r.name => new,
            _ => r.name.as_str(),
        };
        let b = rule_lines(r);
        let a = after.rule(new_name).map(rule_lines).unwrap_or_default();
        seen_after.insert(new_name.to_string());
        out.push(RuleDiff {
            rule: new_name.to_string(),
            before_lines: b.len(),
            after_lines: a.len(),
            lines_changed: line_diff(&b, &a),
        });
    }
    for r in after.rules.iter().filter(|r| !seen_after.contains(&r.name)) {
        let a = rule_lines(r);
        out.push(RuleDiff {
            rule: r.name.clone(),
            before_lines: 0,
            after_lines: a.len(),
            lines_changed: a.len(),
        });
    }
    out.retain(|d| d.lines_changed > 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(s: &str) -> Vec<String> {
        s.lines().map(str::to_string).collect()
    }

    #[test]
    fn diff_counts_replacements_once() {
        assert_eq!(line_diff(&lines("a\nb\nc"), &lines("a\nx\nc")), 1);
        assert_eq!(line_diff(&lines("a\nb\nc"), &lines("a\nc")), 1);
        assert_eq!(line_diff(&lines("a\nb"), &lines("b\na")), 1);
        assert_eq!(line_diff(&lines(""), &lines("")), 0);
    }
}
