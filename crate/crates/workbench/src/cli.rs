//! The `grammar-forge` command line. Exit status 0 on success, 2 for invalid
//! input (bad documents, failed rewrites), 1 for I/O failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use grammar_forge::evolution::regenerate_and_reapply;
use grammar_forge::generate::{attach_metamodel, derive_metamodel, generate_grammar};
use grammar_forge::grammar::{parse_grammar, print_grammar, Grammar};
use grammar_forge::inference::{infer_grammar, AnnotatedExample};
use grammar_forge::instance::{parse_program, sample_instances, serialize_instance};
use grammar_forge::metamodel::{load_metamodel, to_document, Metamodel};
use grammar_forge::optimize::{apply_config_with, parse_config, EntryStatus};
use grammar_forge::style::StyleRegistry;

use crate::service::{serve, DEFAULT_PORT};
use crate::session::{Workbench, DEFAULT_COUNT, DEFAULT_DEPTH, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "grammar-forge", version, about = "Generate, optimize and preview textual grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the grammar of a metamodel.
    Generate {
        #[arg(short, long)]
        metamodel: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply a configuration to a grammar.
    Optimize {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Stop at the first entry that fails.
        #[arg(long)]
        strict: bool,
    },
    /// Print sampled programs, and the given programs re-printed.
    Preview {
        #[arg(short, long)]
        grammar: PathBuf,
        /// Types the grammar; derived from the grammar when absent.
        #[arg(short, long)]
        metamodel: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_COUNT)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(short, long = "program")]
        programs: Vec<PathBuf>,
    },
    /// List, apply or install style libraries.
    Style {
        #[command(subcommand)]
        action: StyleAction,
    },
    /// Infer a metamodel and grammar from an annotated example.
    Infer {
        #[arg(short, long)]
        annotations: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        metamodel_out: Option<PathBuf>,
    },
    /// Regenerate the grammar of an evolved metamodel and re-apply a configuration.
    Evolve {
        #[arg(short, long)]
        metamodel: PathBuf,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        old: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the reuse report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the local HTTP service.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
    },
}

#[derive(Subcommand)]
enum StyleAction {
    List,
    Apply(StyleApply),
    Install {
        file: PathBuf,
        /// Replace an installed style with a newer version.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args)]
struct StyleApply {
    #[arg(short, long)]
    grammar: PathBuf,
    #[arg(short, long)]
    name: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Io(String),
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Failure {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn load_mm(path: &Path) -> Result<Metamodel, Failure> {
    load_metamodel(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<Grammar, Failure> {
    parse_grammar(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<Vec<grammar_forge::optimize::RuleConfig>, Failure> {
    parse_config(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Runs one command line; returns the exit status.
pub fn run(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return e.exit_code();
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(Failure::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Io(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Generate { metamodel, output } => {
            let g = generate_grammar(&load_mm(&metamodel)?).map_err(Failure::input)?;
            emit(out, output.as_deref(), &print_grammar(&g))
        }
        Command::Optimize {
            grammar,
            config,
            output,
            report,
            strict,
        } => {
            let g = load_grammar(&grammar)?;
            let cs = load_config(&config)?;
            let (g, r) = apply_config_with(&g, &cs, strict);
            emit(out, output.as_deref(), &print_grammar(&g))?;
            match report {
                Some(p) => write_file(&p, &r.render())?,
                None => {
                    let _ = err.write_all(r.render().as_bytes());
                }
            }
            if r.count(EntryStatus::Error) > 0 {
                let failed: Vec<String> = r
                    .entries
                    .iter()
                    .filter(|e| e.status == EntryStatus::Error)
                    .map(|e| format!("entry {}: {}", e.index, e.message.as_deref().unwrap_or("failed")))
                    .collect();
                return Err(Failure::Input(failed.join("; ")));
            }
            Ok(())
        }
        Command::Preview {
            grammar,
            metamodel,
            seed,
            count,
            depth,
            programs,
        } => {
            let g = load_grammar(&grammar)?;
            let m = match metamodel {
                Some(p) => load_mm(&p)?,
                None => derive_metamodel(&g),
            };
            let tg = attach_metamodel(&g, &m).map_err(Failure::input)?;
            let mut text = String::new();
            for p in &programs {
                let model = parse_program(&tg, &read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
                let printed = serialize_instance(&tg, &model).map_err(Failure::input)?;
                text.push_str(&format!("# program {}\n{printed}", p.display()));
            }
            for (i, s) in sample_instances(&tg, seed, count, depth).iter().enumerate() {
                text.push_str(&format!("# sample {}\n{}", i + 1, s.text));
            }
            emit(out, None, &text)
        }
        Command::Style { action } => style(action, out),
        Command::Infer {
            annotations,
            output,
            metamodel_out,
        } => {
            let ex = AnnotatedExample::from_json(&read(&annotations)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", annotations.display())))?;
            let (m, g) = infer_grammar(&ex).map_err(Failure::input)?;
            if let Some(p) = metamodel_out {
                write_file(&p, &to_document(&m))?;
            }
            emit(out, output.as_deref(), &print_grammar(&g))
        }
        Command::Evolve {
            metamodel,
            config,
            old,
            output,
            json,
        } => {
            let new = load_mm(&metamodel)?;
            let old = old.as_deref().map(load_mm).transpose()?;
            let cs = load_config(&config)?;
            let e = regenerate_and_reapply(&new, &cs, old.as_ref()).map_err(Failure::input)?;
            let report = if json { e.reuse.to_json() + "\n" } else { e.reuse.render() };
            match output {
                Some(p) => {
                    write_file(&p, &print_grammar(&e.grammar))?;
                    emit(out, None, &report)
                }
                None => {
                    let _ = err.write_all(report.as_bytes());
                    emit(out, None, &print_grammar(&e.grammar))
                }
            }
        }
        Command::Serve { port } => {
            let styles = StyleRegistry::from_env().map_err(Failure::input)?;
            let wb = Arc::new(Workbench::new(styles));
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            rt.block_on(serve(wb, port)).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn style(action: StyleAction, out: &mut dyn Write) -> Outcome {
    let reg = StyleRegistry::from_env().map_err(Failure::input)?;
    match action {
        StyleAction::List => {
            let mut text = String::new();
            for s in reg.snapshot().iter() {
                let origin = if s.builtin { "built-in" } else { "installed" };
                text.push_str(&format!("{}\tv{}\t{origin}\t{}\n", s.name, s.version, s.description));
            }
            emit(out, None, &text)
        }
        StyleAction::Apply(a) => {
            let g = load_grammar(&a.grammar)?;
            let (g, r) = reg.apply(&g, &a.name).map_err(Failure::input)?;
            if let Some(p) = &a.report {
                write_file(p, &r.render())?;
            }
            emit(out, a.output.as_deref(), &print_grammar(&g))
        }
        StyleAction::Install { file, force } => {
            let s = reg.install(&read(&file)?, force).map_err(Failure::input)?;
            emit(out, None, &format!("installed {} v{} into {}\n", s.name, s.version, reg.dir().display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(args.iter().map(|s| s.to_string()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        let (code, _, err) = run_args(&["grammar-forge", "frobnicate"]);
        assert_eq!(code, 2);
        assert!(err.contains("frobnicate"));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let (code, _, err) = run_args(&["grammar-forge", "generate", "-m", "/nonexistent/m.mm.json"]);
        assert_eq!(code, 1);
        assert!(err.contains("/nonexistent/m.mm.json"));
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run_args(&["grammar-forge", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("optimize"));
    }
}
