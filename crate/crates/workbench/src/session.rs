//! Workbench sessions independent of any transport. Every config mutation
//! recomputes the optimized grammar from scratch and bumps the revision.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use grammar_forge::evolution::{regenerate_and_reapply, ReuseReport};
use grammar_forge::generate::{attach_metamodel, generate_grammar, TypedGrammar};
use grammar_forge::grammar::{elements_index, print_grammar, Grammar, IndexedElement, Location, Selector};
use grammar_forge::inference::{infer_grammar, AnnotatedExample};
use grammar_forge::instance::{migrate_program, parse_program, sample_instances};
use grammar_forge::metamodel::{load_metamodel, to_document, Metamodel};
use grammar_forge::optimize::{
    apply_config, candidates, parse_config, print_config, print_entry, validate_entry, ApplicationReport, Candidate,
    RuleConfig,
};
use grammar_forge::style::{StyleLibrary, StyleRegistry};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_COUNT: usize = 3;
pub const DEFAULT_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    StaleRevision,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApiError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
}

impl ApiError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> ApiError {
        ApiError {
            kind,
            message: message.into(),
            revision: None,
        }
    }

    fn invalid(e: impl std::fmt::Display) -> ApiError {
        ApiError::new(ErrorKind::Invalid, e.to_string())
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

/// A metamodel given either as the `.mm.json` document text or inline.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum MetamodelInput {
    Text(String),
    Inline(serde_json::Value),
}

impl MetamodelInput {
    pub fn load(&self) -> ApiResult<Metamodel> {
        let doc = match self {
            MetamodelInput::Text(s) => s.clone(),
            MetamodelInput::Inline(v) => v.to_string(),
        };
        load_metamodel(&doc).map_err(ApiError::invalid)
    }
}

/// A config entry as a `.goc` line or as its structured form.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EntryInput {
    Text(String),
    Structured(RuleConfig),
}

impl EntryInput {
    pub fn resolve(&self) -> ApiResult<RuleConfig> {
        match self {
            EntryInput::Text(line) => {
                let mut cs = parse_config(line).map_err(ApiError::invalid)?;
                if cs.len() != 1 {
                    return Err(ApiError::new(ErrorKind::Invalid, format!("expected one entry, found {}", cs.len())));
                }
                Ok(cs.remove(0))
            }
            EntryInput::Structured(c) => {
                validate_entry(c).map_err(ApiError::invalid)?;
                Ok(c.clone())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Program {
    pub name: String,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub revision: u64,
    pub metamodel: String,
    pub seed: u64,
    pub count: usize,
    pub entries: usize,
    pub programs: Vec<String>,
}

/// Window ①.
#[derive(Clone, Debug, Serialize)]
pub struct GeneratedView {
    pub revision: u64,
    pub text: String,
    pub elements: Vec<IndexedElement>,
}

/// Window ②.
#[derive(Clone, Debug, Serialize)]
pub struct OptimizedView {
    pub revision: u64,
    pub text: String,
    pub report: ApplicationReport,
    pub report_text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProgramPreview {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub dropped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Window ③.
#[derive(Clone, Debug, Serialize)]
pub struct PreviewsView {
    pub revision: u64,
    pub programs: Vec<ProgramPreview>,
    pub samples: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryView {
    pub index: usize,
    pub text: String,
    pub rule_id: String,
    pub scope: Selector,
    pub args: std::collections::BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigView {
    pub revision: u64,
    pub text: String,
    pub entries: Vec<EntryView>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MutationView {
    pub revision: u64,
    pub config: ConfigView,
    pub optimized: OptimizedView,
    pub previews: PreviewsView,
}

#[derive(Clone, Debug, Serialize)]
pub struct InferView {
    pub metamodel: Metamodel,
    pub metamodel_document: String,
    pub grammar: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveView {
    pub grammar: String,
    pub report: ApplicationReport,
    pub reuse: ReuseReport,
    pub reuse_text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StyleView {
    pub name: String,
    pub description: String,
    pub version: u32,
    pub builtin: bool,
    pub entries: Vec<String>,
}

impl From<&StyleLibrary> for StyleView {
    fn from(s: &StyleLibrary) -> Self {
        StyleView {
            name: s.name.clone(),
            description: s.description.clone(),
            version: s.version,
            builtin: s.builtin,
            entries: s.entries.iter().map(print_entry).collect(),
        }
    }
}

pub struct Session {
    id: String,
    metamodel: Metamodel,
    generated: TypedGrammar,
    config: Vec<RuleConfig>,
    optimized: Grammar,
    report: ApplicationReport,
    programs: Vec<Program>,
    seed: u64,
    count: usize,
    revision: u64,
}

impl Session {
    pub fn new(id: String, metamodel: Metamodel, seed: u64, count: usize) -> ApiResult<Session> {
        let g = generate_grammar(&metamodel).map_err(ApiError::invalid)?;
        let generated = attach_metamodel(&g, &metamodel).map_err(ApiError::invalid)?;
        let mut s = Session {
            id,
            metamodel,
            optimized: g,
            generated,
            config: Vec::new(),
            report: ApplicationReport::default(),
            programs: Vec::new(),
            seed,
            count,
            revision: 1,
        };
        s.recompute();
        Ok(s)
    }

    fn recompute(&mut self) {
        for (i, c) in self.config.iter_mut().enumerate() {
            c.index = i;
        }
        let (g, report) = apply_config(&self.generated.grammar, &self.config);
        self.optimized = g;
        self.report = report;
    }

    fn check(&self, revision: u64) -> ApiResult<()> {
        if revision != self.revision {
            return Err(ApiError {
                kind: ErrorKind::StaleRevision,
                message: format!("revision {revision} is stale; current revision is {}", self.revision),
                revision: Some(self.revision),
            });
        }
        Ok(())
    }

    /// Runs `f` on a copy of the config; the session only changes when `f`
    /// succeeds.
    fn mutate(&mut self, revision: u64, f: impl FnOnce(&mut Vec<RuleConfig>) -> ApiResult<()>) -> ApiResult<MutationView> {
        self.check(revision)?;
        let mut next = self.config.clone();
        f(&mut next)?;
        self.config = next;
        self.recompute();
        self.revision += 1;
        Ok(self.mutation_view())
    }

    fn entry_index(&self, index: usize) -> ApiResult<usize> {
        if index < self.config.len() {
            Ok(index)
        } else {
            Err(ApiError::new(ErrorKind::NotFound, format!("no config entry {index}")))
        }
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            revision: self.revision,
            metamodel: self.metamodel.name.clone(),
            seed: self.seed,
            count: self.count,
            entries: self.config.len(),
            programs: self.programs.iter().map(|p| p.name.clone()).collect(),
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn metamodel(&self) -> &Metamodel {
        &self.metamodel
    }

    pub fn config(&self) -> &[RuleConfig] {
        &self.config
    }

    pub fn generated(&self) -> GeneratedView {
        GeneratedView {
            revision: self.revision,
            text: print_grammar(&self.generated.grammar),
            elements: elements_index(&self.generated.grammar),
        }
    }

    pub fn optimized(&self) -> OptimizedView {
        OptimizedView {
            revision: self.revision,
            text: print_grammar(&self.optimized),
            report: self.report.clone(),
            report_text: self.report.render(),
        }
    }

    pub fn previews(&self) -> PreviewsView {
        let mut view = PreviewsView {
            revision: self.revision,
            programs: Vec::new(),
            samples: Vec::new(),
            error: None,
        };
        let target = match attach_metamodel(&self.optimized, &self.metamodel) {
            Ok(t) => t,
            Err(e) => {
                view.error = Some(e.to_string());
                return view;
            }
        };
        for p in &self.programs {
            view.programs.push(match migrate_program(&self.generated, &target, &p.text) {
                Ok(m) => ProgramPreview {
                    name: p.name.clone(),
                    text: Some(m.text),
                    dropped: m.dropped,
                    error: None,
                },
                Err(e) => ProgramPreview {
                    name: p.name.clone(),
                    text: None,
                    dropped: Vec::new(),
                    error: Some(e.to_string()),
                },
            });
        }
        view.samples = sample_instances(&target, self.seed, self.count, DEFAULT_DEPTH)
            .into_iter()
            .map(|s| s.text)
            .collect();
        view
    }

    pub fn config_view(&self) -> ConfigView {
        ConfigView {
            revision: self.revision,
            text: print_config(&self.config),
            entries: self
                .config
                .iter()
                .enumerate()
                .map(|(index, c)| EntryView {
                    index,
                    text: print_entry(c),
                    rule_id: c.rule_id.clone(),
                    scope: c.scope.clone(),
                    args: c.args.clone(),
                })
                .collect(),
        }
    }

    pub fn mutation_view(&self) -> MutationView {
        MutationView {
            revision: self.revision,
            config: self.config_view(),
            optimized: self.optimized(),
            previews: self.previews(),
        }
    }

    pub fn replace_config(&mut self, revision: u64, text: &str) -> ApiResult<MutationView> {
        let cs = parse_config(text).map_err(ApiError::invalid)?;
        self.mutate(revision, |config| {
            *config = cs;
            Ok(())
        })
    }

    /// Inserts at `position`, or appends.
    pub fn add_entry(&mut self, revision: u64, entry: &EntryInput, position: Option<usize>) -> ApiResult<MutationView> {
        let c = entry.resolve()?;
        self.mutate(revision, |config| {
            let at = position.unwrap_or(config.len());
            if at > config.len() {
                return Err(ApiError::new(ErrorKind::BadRequest, format!("position {at} is past the end")));
            }
            config.insert(at, c);
            Ok(())
        })
    }

    pub fn update_entry(&mut self, revision: u64, index: usize, entry: &EntryInput) -> ApiResult<MutationView> {
        let c = entry.resolve()?;
        let i = self.entry_index(index)?;
        self.mutate(revision, |config| {
            config[i] = c;
            Ok(())
        })
    }

    pub fn delete_entry(&mut self, revision: u64, index: usize) -> ApiResult<MutationView> {
        let i = self.entry_index(index)?;
        self.mutate(revision, |config| {
            config.remove(i);
            Ok(())
        })
    }

    /// `order` lists the current indices in their new order.
    pub fn reorder(&mut self, revision: u64, order: &[usize]) -> ApiResult<MutationView> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.config.len()).collect::<Vec<_>>() {
            return Err(ApiError::new(
                ErrorKind::BadRequest,
                format!("order must be a permutation of 0..{}", self.config.len()),
            ));
        }
        self.mutate(revision, |config| {
            *config = order.iter().map(|&i| config[i].clone()).collect();
            Ok(())
        })
    }

    /// Appends a style's entries to the config.
    pub fn apply_style(&mut self, revision: u64, style: &StyleLibrary) -> ApiResult<MutationView> {
        self.mutate(revision, |config| {
            config.extend(style.entries.iter().cloned());
            Ok(())
        })
    }

    /// Imports a program written against the generated grammar.
    pub fn import_program(&mut self, revision: u64, name: &str, text: &str) -> ApiResult<MutationView> {
        self.check(revision)?;
        parse_program(&self.generated, text).map_err(ApiError::invalid)?;
        match self.programs.iter_mut().find(|p| p.name == name) {
            Some(p) => p.text = text.to_string(),
            None => self.programs.push(Program {
                name: name.to_string(),
                text: text.to_string(),
            }),
        }
        self.revision += 1;
        Ok(self.mutation_view())
    }

    pub fn set_sampling(&mut self, revision: u64, seed: u64, count: usize) -> ApiResult<MutationView> {
        self.check(revision)?;
        self.seed = seed;
        self.count = count;
        self.revision += 1;
        Ok(self.mutation_view())
    }

    /// Catalog rules for an element of the generated grammar.
    pub fn candidates(&self, location: &Location) -> ApiResult<Vec<Candidate>> {
        if self.generated.grammar.rule(&location.rule).is_none() {
            return Err(ApiError::new(ErrorKind::NotFound, format!("no rule `{}`", location.rule)));
        }
        Ok(candidates(&self.generated.grammar, location))
    }

    pub fn evolve(&self, new: &Metamodel) -> ApiResult<EvolveView> {
        evolve(new, &self.config, Some(&self.metamodel))
    }
}

pub fn evolve(new: &Metamodel, config: &[RuleConfig], old: Option<&Metamodel>) -> ApiResult<EvolveView> {
    let e = regenerate_and_reapply(new, config, old).map_err(ApiError::invalid)?;
    Ok(EvolveView {
        grammar: print_grammar(&e.grammar),
        reuse_text: e.reuse.render(),
        report: e.report,
        reuse: e.reuse,
    })
}

pub fn infer(example: &AnnotatedExample) -> ApiResult<InferView> {
    let (m, g) = infer_grammar(example).map_err(ApiError::invalid)?;
    Ok(InferView {
        metamodel_document: to_document(&m),
        metamodel: m,
        grammar: print_grammar(&g),
    })
}

/// All sessions plus the style registry. Sessions are independent; within
/// one session calls are serialized by its lock.
pub struct Workbench {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    styles: StyleRegistry,
}

impl Workbench {
    pub fn new(styles: StyleRegistry) -> Workbench {
        Workbench {
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            styles,
        }
    }

    pub fn styles(&self) -> &StyleRegistry {
        &self.styles
    }

    pub fn create(&self, metamodel: Metamodel, seed: Option<u64>, count: Option<usize>) -> ApiResult<SessionView> {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let s = Session::new(id.clone(), metamodel, seed.unwrap_or(DEFAULT_SEED), count.unwrap_or(DEFAULT_COUNT))?;
        let view = s.view();
        self.sessions.write().expect("session table").insert(id, Arc::new(Mutex::new(s)));
        Ok(view)
    }

    pub fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(ErrorKind::NotFound, format!("no session `{id}`")))
    }

    /// Runs `f` with the session locked.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
        let s = self.session(id)?;
        let mut guard = s.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    }

    pub fn delete(&self, id: &str) -> ApiResult<()> {
        self.sessions
            .write()
            .expect("session table")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ApiError::new(ErrorKind::NotFound, format!("no session `{id}`")))
    }

    pub fn style(&self, name: &str) -> ApiResult<StyleLibrary> {
        self.styles
            .get(name)
            .ok_or_else(|| ApiError::new(ErrorKind::NotFound, format!("unknown style `{name}`")))
    }

    pub fn list_styles(&self) -> Vec<StyleView> {
        self.styles.snapshot().iter().map(StyleView::from).collect()
    }

    pub fn install_style(&self, document: &str, force: bool) -> ApiResult<StyleView> {
        self.styles
            .install(document, force)
            .map(|s| StyleView::from(&s))
            .map_err(ApiError::invalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use grammar_forge::grammar::RuleScope;

    const MM: &str = r#"{"name":"M","classes":[{"name":"Box","features":[
        {"name":"label","kind":"attribute","type":"string","lower":0,"upper":1},
        {"name":"size","kind":"attribute","type":"int","lower":0,"upper":1}]}]}"#;

    fn session() -> Session {
        Session::new("t".into(), load_metamodel(MM).unwrap(), 1, 2).unwrap()
    }

    #[test]
    fn mutations_bump_the_revision() {
        let mut s = session();
        let v = s.add_entry(1, &EntryInput::Text("remove_keyword rule=* keyword=size".into()), None).unwrap();
        assert_eq!(v.revision, 2);
        assert!(!v.optimized.text.contains("'size'"));
        let v = s.delete_entry(2, 0).unwrap();
        assert_eq!(v.revision, 3);
        assert!(v.optimized.text.contains("'size'"));
    }

    #[test]
    fn stale_writes_change_nothing() {
        let mut s = session();
        let err = s.add_entry(0, &EntryInput::Text("remove_keyword rule=* keyword=size".into()), None).unwrap_err();
        assert_eq!(err.kind, ErrorKind::StaleRevision);
        assert_eq!(err.revision, Some(1));
        assert_eq!(s.revision(), 1);
        assert!(s.config().is_empty());
    }

    #[test]
    fn invalid_entries_are_rejected_before_the_revision_check() {
        let mut s = session();
        let err = s.add_entry(1, &EntryInput::Text("no_such_rule rule=*".into()), None).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Invalid);
        assert_eq!(s.revision(), 1);
    }

    #[test]
    fn structured_entries_are_validated() {
        let mut s = session();
        let c = RuleConfig::new("remove_keyword", Selector::rule(RuleScope::All));
        let err = s.add_entry(1, &EntryInput::Structured(c.clone()), None).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Invalid);
        let ok = c.with_arg("keyword", "label");
        assert_eq!(s.add_entry(1, &EntryInput::Structured(ok), None).unwrap().config.entries.len(), 1);
    }

    #[test]
    fn reorder_needs_a_permutation() {
        let mut s = session();
        s.replace_config(1, "remove_keyword rule=* keyword=size\nremove_keyword rule=* keyword=label\n").unwrap();
        assert_eq!(s.reorder(2, &[0, 0]).unwrap_err().kind, ErrorKind::BadRequest);
        let v = s.reorder(2, &[1, 0]).unwrap();
        assert_eq!(v.config.entries[0].text, "remove_keyword rule=* keyword=label");
        assert_eq!(v.config.entries[0].index, 0);
    }
}
