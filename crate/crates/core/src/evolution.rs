//! Re-applying a saved configuration to the grammar of an evolved metamodel
//! and reporting which entries still fit.

use std::fmt::Write as _;

use serde::Serialize;

use crate::generate::{generate_grammar, GenerateError};
use crate::grammar::{print_grammar, Grammar, RuleScope, Selector};
use crate::metamodel::{diff_metamodels, Metamodel};
use crate::optimize::{apply_rule, print_entry, ApplicationReport, EntryStatus, RuleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReuseStatus {
    Applied,
    /// The rule or feature the entry is scoped to no longer exists.
    StaleNoTarget,
    /// The target exists but nothing in it matched (e.g. a keyword is gone).
    StaleNoMatch,
    Error,
}

impl ReuseStatus {
    pub fn name(self) -> &'static str {
        match self {
            ReuseStatus::Applied => "applied",
            ReuseStatus::StaleNoTarget => "stale-no-target",
            ReuseStatus::StaleNoMatch => "stale-no-match",
            ReuseStatus::Error => "error",
        }
    }

    pub fn is_stale(self) -> bool {
        matches!(self, ReuseStatus::StaleNoTarget | ReuseStatus::StaleNoMatch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Suggestion {
    pub renamed_from: String,
    pub rename_to: String,
    /// The entry rewritten to the new name.
    pub entry: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReuseEntry {
    pub index: usize,
    pub rule_id: String,
    pub entry: String,
    pub status: ReuseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<Suggestion>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReuseSummary {
    pub applied: usize,
    pub stale_no_target: usize,
    pub stale_no_match: usize,
    pub error: usize,
    /// Rules of added classes that no entry changed; each likely needs a
    /// new entry.
    pub uncovered_new_rules: Vec<String>,
    /// Stale entries plus uncovered new rules.
    pub adjustments: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReuseReport {
    pub entries: Vec<ReuseEntry>,
    pub summary: ReuseSummary,
}

impl ReuseReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = write!(out, "[{}] {}: {}", e.index, e.status.name(), e.entry);
            if let Some(d) = &e.detail {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
            if let Some(s) = &e.suggestion {
                let _ = writeln!(out, "    suggestion: `{}` is now `{}`: {}", s.renamed_from, s.rename_to, s.entry);
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "applied {}, stale-no-target {}, stale-no-match {}, error {}",
            s.applied, s.stale_no_target, s.stale_no_match, s.error
        );
        if !s.uncovered_new_rules.is_empty() {
            let _ = writeln!(out, "new rules without entries: {}", s.uncovered_new_rules.join(", "));
        }
        let _ = writeln!(out, "adjustments needed: {}", s.adjustments);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evolution {
    pub grammar: Grammar,
    pub report: ApplicationReport,
    pub reuse: ReuseReport,
}

fn feature_present(g: &Grammar, rule: &RuleScope, feature: &str) -> bool {
    if feature == "*" {
        return true;
    }
    g.rules.iter().filter(|r| rule.matches(&r.name)).any(|r| {
        let mut found = false;
        crate::grammar::visit_lines(&r.body, &mut |_, l| found |= l.carries(feature));
        found
    })
}

/// Why an entry that did not apply is stale, judged against the grammar it
/// was applied to.
fn missing_target(g: &Grammar, scope: &Selector) -> Option<String> {
    if let RuleScope::Named(r) = &scope.rule {
        if g.rule(r).is_none() {
            return Some(format!("no rule `{r}`"));
        }
    }
    for f in scope.feature.iter().chain(&scope.context_feature) {
        if !feature_present(g, &scope.rule, f) {
            return Some(format!("no feature `{f}` in {}", scope.rule));
        }
    }
    None
}

fn with_rule(c: &RuleConfig, name: &str) -> RuleConfig {
    let mut c = c.clone();
    c.scope.rule = RuleScope::Named(name.to_string());
    c
}

/// Generates the grammar of `m_new` and applies `cs` to it. With `m_old`,
/// entries scoped to renamed classes get suggestions and rules of added
/// classes are checked for coverage.
pub fn regenerate_and_reapply(
    m_new: &Metamodel,
    cs: &[RuleConfig],
    m_old: Option<&Metamodel>,
) -> Result<Evolution, GenerateError> {
    let generated = generate_grammar(m_new)?;
    let delta = m_old.map(|old| diff_metamodels(old, m_new));
    let mut cur = generated.clone();
    let mut entries = Vec::with_capacity(cs.len());
    let mut reuse = Vec::with_capacity(cs.len());
    for c in cs {
        let before = cur.clone();
        let (next, entry) = apply_rule(&cur, c);
        cur = next;
        let target = missing_target(&before, &c.scope);
        let status = match (&entry.status, &target) {
            (EntryStatus::Applied, _) => ReuseStatus::Applied,
            (_, Some(_)) => ReuseStatus::StaleNoTarget,
            (EntryStatus::NoMatch, None) => ReuseStatus::StaleNoMatch,
            (EntryStatus::Error, None) => ReuseStatus::Error,
        };
        let detail = match status {
            ReuseStatus::StaleNoTarget => target,
            ReuseStatus::StaleNoMatch => Some("nothing in the target matched".into()),
            ReuseStatus::Error => entry.message.clone(),
            ReuseStatus::Applied => None,
        };
        let suggestion = match (&c.scope.rule, &delta) {
            (RuleScope::Named(r), Some(d)) if status.is_stale() => d.renamed_to(r).map(|new| Suggestion {
                renamed_from: r.clone(),
                rename_to: new.to_string(),
                entry: print_entry(&with_rule(c, new)),
            }),
            _ => None,
        };
        reuse.push(ReuseEntry {
            index: c.index,
            rule_id: c.rule_id.clone(),
            entry: print_entry(c),
            status,
            detail,
            suggestion,
        });
        entries.push(entry);
    }
    let report = ApplicationReport::from_entries(entries, None);
    let mut summary = ReuseSummary::default();
    for e in &reuse {
        match e.status {
            ReuseStatus::Applied => summary.applied += 1,
            ReuseStatus::StaleNoTarget => summary.stale_no_target += 1,
            ReuseStatus::StaleNoMatch => summary.stale_no_match += 1,
            ReuseStatus::Error => summary.error += 1,
        }
    }
    if let Some(d) = &delta {
        for added in &d.added_classes {
            let name = &added.class.name;
            let (Some(g0), Some(g1)) = (generated.rule(name), cur.rule(name)) else {
                continue;
            };
            if g0.is_dispatch() {
                continue;
            }
            let mut a = Grammar::new("");
            a.rules.push(g0.clone());
            let mut b = Grammar::new("");
            b.rules.push(g1.clone());
            if print_grammar(&a) == print_grammar(&b) {
                summary.uncovered_new_rules.push(name.clone());
            }
        }
    }
    summary.adjustments = summary.stale_no_target + summary.stale_no_match + summary.uncovered_new_rules.len();
    Ok(Evolution {
        grammar: cur,
        report,
        reuse: ReuseReport {
            entries: reuse,
            summary,
        },
    })
}
