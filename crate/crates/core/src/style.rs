//! Style libraries: named bundles of configured rules, shipped built in or
//! installed into a styles directory.
//!
//! A `.style` file starts with `name:`, `description:` and `version:` header
//! lines followed by `.goc` entries whose `rule=` defaults to `*`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::grammar::Grammar;
use crate::optimize::{apply_config, parse_entries, print_entry, ApplicationReport, ConfigError, RuleConfig};

pub const STYLES_ENV: &str = "GRAMMAR_FORGE_STYLES";

const BUILTIN: &[&str] = &[
    include_str!("../styles/python_style.style"),
    include_str!("../styles/c_style.style"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StyleLibrary {
    pub name: String,
    pub description: String,
    pub version: u32,
    pub entries: Vec<RuleConfig>,
    pub builtin: bool,
}

#[derive(Debug, Error)]
pub enum StyleError {
    #[error("style header, line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("style body, {0}")]
    Config(#[from] ConfigError),
    #[error("a style named `{0}` is already installed")]
    Duplicate(String),
    #[error("style `{name}` version {version} does not replace installed version {installed}")]
    NotNewer {
        name: String,
        version: u32,
        installed: u32,
    },
    #[error("built-in style `{0}` cannot be replaced")]
    Builtin(String),
    #[error("unknown style `{0}`")]
    Unknown(String),
    #[error("styles directory: {0}")]
    Io(#[from] std::io::Error),
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn parse_style(doc: &str) -> Result<StyleLibrary, StyleError> {
    let mut name = None;
    let mut description = None;
    let mut version = None;
    let mut consumed = 0;
    let lines: Vec<&str> = doc.lines().collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            consumed = i + 1;
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            break;
        };
        let key = key.trim();
        let value = value.trim();
        let err = |message: String| StyleError::Header {
            line: i + 1,
            message,
        };
        let slot = match key {
            "name" => &mut name,
            "description" => &mut description,
            "version" => &mut version,
            _ => break,
        };
        if slot.is_some() {
            return Err(err(format!("`{key}:` given twice")));
        }
        *slot = Some(value.to_string());
        consumed = i + 1;
    }
    let missing = |k: &str| StyleError::Header {
        line: consumed + 1,
        message: format!("missing `{k}:` header"),
    };
    let name = name.ok_or_else(|| missing("name"))?;
    if !is_identifier(&name) {
        return Err(StyleError::Header {
            line: 1,
            message: format!("`{name}` is not a valid style name"),
        });
    }
    let description = description.ok_or_else(|| missing("description"))?;
    let version_text = version.ok_or_else(|| missing("version"))?;
    let version = version_text.parse::<u32>().map_err(|_| StyleError::Header {
        line: 1,
        message: format!("version `{version_text}` is not a non-negative integer"),
    })?;
    let body = lines[consumed..].join("\n");
    let entries = parse_entries(&body, true, consumed)?;
    Ok(StyleLibrary {
        name,
        description,
        version,
        entries,
        builtin: false,
    })
}

pub fn print_style(s: &StyleLibrary) -> String {
    let mut out = format!(
        "name: {}\ndescription: {}\nversion: {}\n",
        s.name, s.description, s.version
    );
    for e in &s.entries {
        out.push_str(&print_entry(e));
        out.push('\n');
    }
    out
}

/// Applies a style's entries as a configuration.
pub fn apply_style(g: &Grammar, style: &StyleLibrary) -> (Grammar, ApplicationReport) {
    apply_config(g, &style.entries)
}

pub fn builtin_styles() -> Vec<StyleLibrary> {
    BUILTIN
        .iter()
        .map(|doc| {
            let mut s = parse_style(doc).expect("built-in styles parse");
            s.builtin = true;
            s
        })
        .collect()
}

/// Installed styles: the built-ins plus every `.style` file in a directory.
/// Readers take a cheap snapshot; installs are serialized.
pub struct StyleRegistry {
    dir: PathBuf,
    styles: RwLock<Arc<Vec<StyleLibrary>>>,
    writer: Mutex<()>,
}

impl StyleRegistry {
    /// Loads the built-ins and the `.style` files of `dir` (which need not
    /// exist yet). Files are read in name order.
    pub fn open(dir: impl Into<PathBuf>) -> Result<StyleRegistry, StyleError> {
        let dir = dir.into();
        let mut styles = builtin_styles();
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "style"))
                .collect();
            files.sort();
            for f in files {
                let s = parse_style(&fs::read_to_string(&f)?)?;
                match styles.iter_mut().find(|x| x.name == s.name) {
                    Some(existing) if existing.builtin => {}
                    Some(existing) if s.version > existing.version => *existing = s,
                    Some(_) => {}
                    None => styles.push(s),
                }
            }
        }
        Ok(StyleRegistry {
            dir,
            styles: RwLock::new(Arc::new(styles)),
            writer: Mutex::new(()),
        })
    }

    /// Uses `$GRAMMAR_FORGE_STYLES`, or `./styles`.
    pub fn from_env() -> Result<StyleRegistry, StyleError> {
        let dir = std::env::var_os(STYLES_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("styles"));
        StyleRegistry::open(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot(&self) -> Arc<Vec<StyleLibrary>> {
        self.styles.read().expect("style registry lock").clone()
    }

    pub fn list(&self) -> Vec<(String, String)> {
        self.snapshot()
            .iter()
            .map(|s| (s.name.clone(), s.description.clone()))
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<StyleLibrary> {
        self.snapshot().iter().find(|s| s.name == name).cloned()
    }

    pub fn apply(&self, g: &Grammar, name: &str) -> Result<(Grammar, ApplicationReport), StyleError> {
        let style = self
            .get(name)
            .ok_or_else(|| StyleError::Unknown(name.to_string()))?;
        Ok(apply_style(g, &style))
    }

    /// Parses, persists and registers a bundle. An existing name is only
    /// replaced with `force` and a higher version; built-ins never are.
    pub fn install(&self, doc: &str, force: bool) -> Result<StyleLibrary, StyleError> {
        let style = parse_style(doc)?;
        let _guard = self.writer.lock().expect("style writer lock");
        let current = self.snapshot();
        if let Some(existing) = current.iter().find(|s| s.name == style.name) {
            if existing.builtin {
                return Err(StyleError::Builtin(style.name));
            }
            if !force {
                return Err(StyleError::Duplicate(style.name));
            }
            if style.version <= existing.version {
                return Err(StyleError::NotNewer {
                    name: style.name,
                    version: style.version,
                    installed: existing.version,
                });
            }
        }
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(format!("{}.style", style.name)), print_style(&style))?;
        let mut next: Vec<StyleLibrary> = current.as_ref().clone();
        match next.iter_mut().find(|s| s.name == style.name) {
            Some(slot) => *slot = style.clone(),
            None => next.push(style.clone()),
        }
        *self.styles.write().expect("style registry lock") = Arc::new(next);
        Ok(style)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::RuleScope;

    #[test]
    fn builtins_parse_with_wildcard_scope() {
        let styles = builtin_styles();
        let names: Vec<&str> = styles.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["python_style", "c_style"]);
        assert!(styles
            .iter()
            .flat_map(|s| &s.entries)
            .all(|e| e.scope.rule == RuleScope::All));
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(
            parse_style("remove_keyword keyword=a\n"),
            Err(StyleError::Header { .. })
        ));
    }

    #[test]
    fn body_errors_carry_file_line() {
        let err = parse_style("name: s\ndescription: d\nversion: 1\nfrobnicate\n").unwrap_err();
        match err {
            StyleError::Config(e) => assert_eq!(e.line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn printed_style_parses_back() {
        for s in builtin_styles() {
            let mut back = parse_style(&print_style(&s)).unwrap();
            back.builtin = true;
            assert_eq!(back, s);
        }
    }
}
