mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use grammar_forge::generate::TypedGrammar;
use grammar_forge::instance::{parse_program, sample_instances};
use proptest::prelude::*;

struct Corpus {
    grammars: Vec<TypedGrammar>,
    /// Keywords plus punctuation and literals, per grammar.
    words: Vec<Vec<String>>,
    /// Valid programs, per grammar.
    programs: Vec<Vec<String>>,
}

fn corpus() -> &'static Corpus {
    static C: OnceLock<Corpus> = OnceLock::new();
    C.get_or_init(|| {
        let grammars: Vec<TypedGrammar> = common::all_grammars().into_iter().map(|(_, g)| g).collect();
        let words = grammars
            .iter()
            .map(|g| {
                let mut w: Vec<String> = g.grammar.keywords().into_iter().map(str::to_string).collect();
                w.extend(["\"s\"", "12", "-3.5e2", "true", "name", "\n", "    ", "\t", "//c\n", "\"", "{", "}"].map(String::from));
                w
            })
            .collect();
        let programs = grammars.iter().map(|g| sample_instances(g, 3, 20, 4).into_iter().map(|s| s.text).collect()).collect();
        Corpus {
            grammars,
            words,
            programs,
        }
    })
}

#[derive(Clone, Debug)]
enum Input {
    Bytes(Vec<u8>),
    Soup(Vec<usize>),
    Mutated { program: usize, at: usize, cut: usize, insert: Vec<u8> },
}

fn arb_input() -> impl Strategy<Value = Input> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..200).prop_map(Input::Bytes),
        prop::collection::vec(any::<usize>(), 0..80).prop_map(Input::Soup),
        (any::<usize>(), any::<usize>(), 0usize..20, prop::collection::vec(any::<u8>(), 0..8))
            .prop_map(|(program, at, cut, insert)| Input::Mutated { program, at, cut, insert }),
    ]
}

fn render(c: &Corpus, gi: usize, input: &Input) -> String {
    match input {
        Input::Bytes(b) => String::from_utf8_lossy(b).into_owned(),
        Input::Soup(picks) => {
            let w = &c.words[gi];
            picks.iter().map(|p| w[p % w.len()].as_str()).collect::<Vec<_>>().join(" ")
        }
        Input::Mutated { program, at, cut, insert } => {
            let ps = &c.programs[gi];
            let mut bytes = ps[program % ps.len()].clone().into_bytes();
            let at = at % (bytes.len() + 1);
            let end = (at + cut).min(bytes.len());
            bytes.splice(at..end, insert.iter().copied());
            String::from_utf8_lossy(&bytes).into_owned()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn parser_is_total_and_fast(gi in 0usize..4, input in arb_input()) {
        let c = corpus();
        let text = render(c, gi, &input);
        let t = Instant::now();
        let result = parse_program(&c.grammars[gi], &text);
        prop_assert!(t.elapsed() < Duration::from_millis(100), "{:?} on {:?}", t.elapsed(), text);
        if let Err(f) = result {
            prop_assert!(f.offset <= text.len());
            prop_assert!(!f.to_string().is_empty());
        }
    }
}

#[test]
fn corpus_programs_parse() {
    let c = corpus();
    for (g, ps) in c.grammars.iter().zip(&c.programs) {
        assert!(ps.len() >= 10);
        for p in ps {
            parse_program(g, p).unwrap();
        }
    }
}
