#![allow(dead_code)]

use grammar_forge::generate::{attach_metamodel, generate_grammar, TypedGrammar};
use grammar_forge::grammar::Grammar;
use grammar_forge::metamodel::{load_metamodel, Metamodel};
use grammar_forge::optimize::{apply_config, parse_config};
use grammar_forge::style::{apply_style, builtin_styles};

pub fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn metamodel() -> Metamodel {
    load_metamodel(&fixture("mini_eatxt.mm.json")).unwrap()
}

pub fn typed(g: Grammar) -> TypedGrammar {
    attach_metamodel(&g, &metamodel()).unwrap()
}

pub fn generated() -> TypedGrammar {
    typed(generate_grammar(&metamodel()).unwrap())
}

pub fn optimized() -> TypedGrammar {
    let base = generate_grammar(&metamodel()).unwrap();
    let (g, _) = apply_config(&base, &parse_config(&fixture("mini_eatxt.goc")).unwrap());
    typed(g)
}

pub fn styled(name: &str) -> TypedGrammar {
    let base = generate_grammar(&metamodel()).unwrap();
    let style = builtin_styles().into_iter().find(|s| s.name == name).unwrap();
    typed(apply_style(&base, &style).0)
}

/// The four grammars programs are exercised against.
pub fn all_grammars() -> Vec<(&'static str, TypedGrammar)> {
    vec![
        ("generated", generated()),
        ("optimized", optimized()),
        ("python_style", styled("python_style")),
        ("c_style", styled("c_style")),
    ]
}
