mod common;

use common::{fixture, generated, metamodel, optimized, styled};
use grammar_forge::generate::generate_grammar;
use grammar_forge::grammar::{
    parse_grammar, print_grammar, validate_grammar, visit_lines, Element, Grammar, RuleScope, Selector,
};
use grammar_forge::instance::{parse_program, sample_models, serialize_instance};
use grammar_forge::optimize::{apply_config, apply_rule, parse_config, EntryStatus, RuleConfig, CATALOG};
use proptest::prelude::*;

fn base() -> Grammar {
    generate_grammar(&metamodel()).unwrap()
}

const EXTRA_WORDS: &[&str] = &["nothing", "packages", "elementary", "x"];

/// Entries built from the fixture grammar's own vocabulary plus a few names
/// it lacks, so every status turns up.
fn arb_entry() -> impl Strategy<Value = RuleConfig> {
    let g = base();
    let mut rules: Vec<String> = g.rules.iter().map(|r| r.name.clone()).collect();
    rules.push("*".into());
    rules.push("*".into());
    rules.push("Missing".into());
    let mut feats: Vec<String> =
        metamodel().classes.iter().flat_map(|c| c.features.iter().map(|f| f.name.clone())).collect();
    feats.sort();
    feats.dedup();
    feats.push("absent".into());
    let mut words: Vec<String> = g.keywords().into_iter().map(str::to_string).collect();
    words.extend(EXTRA_WORDS.iter().map(|s| s.to_string()));
    (
        0..CATALOG.len(),
        prop::sample::select(rules),
        prop::option::of(prop::sample::select(feats.clone())),
        prop::sample::select(words.clone()),
        prop::sample::select(words),
        prop::sample::subsequence(feats, 0..4),
        0usize..4,
        any::<bool>(),
    )
        .prop_map(|(id, rule, feature, w1, w2, order, card, flag)| {
            let spec = &CATALOG[id];
            let mut sel = Selector::rule(RuleScope::parse(&rule));
            if spec.attr != grammar_forge::optimize::AttrUse::Forbidden {
                sel.feature = feature;
            }
            let mut c = RuleConfig::new(spec.id, sel);
            for p in spec.params {
                let v = match p.name {
                    "order" => order.join(","),
                    "card" => ["optional", "required", "star", "plus"][card].to_string(),
                    "before" => flag.to_string(),
                    "new_name" => format!("{w2}Renamed"),
                    "open" | "new_open" => if flag { "{".into() } else { "[".into() },
                    "close" | "new_close" => if flag { "}".into() } else { "]".into() },
                    "old" | "keyword" => w1.clone(),
                    _ => w2.clone(),
                };
                c = c.with_arg(p.name, &v);
            }
            c
        })
}

fn arb_config() -> impl Strategy<Value = Vec<RuleConfig>> {
    prop::collection::vec(arb_entry(), 0..6).prop_map(|mut cs| {
        for (i, c) in cs.iter_mut().enumerate() {
            c.index = i;
        }
        cs
    })
}

fn wildcard_entry() -> impl Strategy<Value = RuleConfig> {
    arb_entry()
        .prop_filter("accepts a wildcard", |c| !c.spec().unwrap().named_rule_only)
        .prop_map(|mut c| {
            c.scope.rule = RuleScope::All;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn application_is_deterministic(cs in arb_config()) {
        let g = base();
        let (a, ra) = apply_config(&g, &cs);
        let (b, rb) = apply_config(&g.clone(), &cs.clone());
        prop_assert_eq!(print_grammar(&a), print_grammar(&b));
        prop_assert_eq!(a, b);
        prop_assert_eq!(ra, rb);
    }

    #[test]
    fn unapplied_entries_change_nothing(cs in arb_config()) {
        let mut cur = base();
        for c in &cs {
            let (next, e) = apply_rule(&cur, c);
            match e.status {
                EntryStatus::Applied => prop_assert!(e.matched >= 1),
                EntryStatus::NoMatch | EntryStatus::Error => {
                    prop_assert_eq!(&next, &cur);
                    prop_assert!(e.diff.is_empty());
                    prop_assert_eq!(e.lines_changed(), 0);
                }
            }
            cur = next;
        }
    }

    #[test]
    fn every_output_is_a_valid_grammar(cs in arb_config()) {
        let mut cur = base();
        for c in &cs {
            let (next, _) = apply_rule(&cur, c);
            prop_assert!(validate_grammar(&next).is_empty(), "{:?}", validate_grammar(&next));
            let text = print_grammar(&next);
            let back = parse_grammar(&text).unwrap();
            prop_assert_eq!(&back, &next);
            prop_assert_eq!(print_grammar(&back), text);
            cur = next;
        }
    }

    #[test]
    fn wildcard_equals_fold_over_rules(prefix in arb_config(), c in wildcard_entry()) {
        let (g, _) = apply_config(&base(), &prefix);
        let (whole, _) = apply_rule(&g, &c);
        let mut folded = g.clone();
        for name in g.rules.iter().map(|r| r.name.clone()) {
            let mut named = c.clone();
            named.scope.rule = RuleScope::Named(name);
            folded = apply_rule(&folded, &named).0;
        }
        prop_assert_eq!(print_grammar(&whole), print_grammar(&folded));
    }

    #[test]
    fn sampled_programs_print_under_the_optimized_grammar(seed in any::<u64>()) {
        let (gen, opt) = (generated(), optimized());
        for m in sample_models(&gen, seed, 3, 4) {
            prop_assert!(serialize_instance(&gen, &m).is_ok());
            let text = serialize_instance(&opt, &m).unwrap();
            prop_assert_eq!(parse_program(&opt, &text).unwrap(), m);
        }
    }
}

/// Every line made of one keyword followed by the only assignment of its
/// feature in the rule, in `g`.
fn keyword_lines(g: &Grammar) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    for r in &g.rules {
        let mut carriers: Vec<&str> = Vec::new();
        visit_lines(&r.body, &mut |_, l| carriers.extend(l.elements.iter().filter_map(|e| e.feature())));
        visit_lines(&r.body, &mut |_, l| {
            if let [Element::Keyword(k), e] = l.elements.as_slice() {
                if let Some(f) = e.feature() {
                    if carriers.iter().filter(|c| **c == f).count() == 1 {
                        out.push((r.name.clone(), f.to_string(), k.clone()));
                    }
                }
            }
        });
    }
    out
}

fn inverse_cases() -> Vec<(Grammar, String, String, String)> {
    let grammars = [base(), styled("python_style").grammar, styled("c_style").grammar, optimized().grammar];
    grammars
        .into_iter()
        .flat_map(|g| keyword_lines(&g).into_iter().map(move |(r, f, k)| (g.clone(), r, f, k)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn keyword_removal_is_undone_by_insertion(case in prop::sample::select(inverse_cases())) {
        let (g, rule, feature, keyword) = case;
        let mut sel = Selector::rule(RuleScope::Named(rule));
        sel.feature = Some(feature);
        let remove = RuleConfig::new("remove_keyword", sel.clone()).with_arg("keyword", &keyword);
        let (without, e) = apply_rule(&g, &remove);
        prop_assert_eq!(e.status, EntryStatus::Applied);
        prop_assert_ne!(&without, &g);
        let add = RuleConfig::new("add_keyword_to_attr", sel)
            .with_arg("keyword", &keyword)
            .with_arg("before", "true");
        let (back, e) = apply_rule(&without, &add);
        prop_assert_eq!(e.status, EntryStatus::Applied);
        prop_assert_eq!(back, g);
    }
}

#[test]
fn inverse_pair_covers_many_lines() {
    assert!(keyword_lines(&base()).len() >= 15);
}

#[test]
fn fixture_config_reproduces_the_golden_grammar() {
    let cs = parse_config(&fixture("mini_eatxt.goc")).unwrap();
    assert_eq!(cs.len(), 8);
    let (g, report) = apply_config(&base(), &cs);
    assert_eq!(print_grammar(&g), fixture("mini_eatxt.optimized.gxt"));
    assert_eq!(report.count(EntryStatus::Applied), 8);
}

#[test]
fn empty_config_is_identity() {
    let (g, report) = apply_config(&base(), &[]);
    assert_eq!(g, base());
    assert!(report.entries.is_empty());
}

#[test]
fn no_match_entry_is_flagged_and_harmless() {
    let mut cs = parse_config(&fixture("mini_eatxt.goc")).unwrap();
    let (want, _) = apply_config(&base(), &cs);
    cs.insert(3, parse_config("remove_keyword rule=* keyword=nowhere").unwrap().remove(0));
    let (got, report) = apply_config(&base(), &cs);
    assert_eq!(got, want);
    assert_eq!(report.count(EntryStatus::NoMatch), 1);
    assert_eq!(report.entries[3].status, EntryStatus::NoMatch);
}

#[test]
fn leverage_of_the_fixture_config() {
    let (_, report) = apply_config(&base(), &parse_config(&fixture("mini_eatxt.goc")).unwrap());
    let changed: usize = report.entries.iter().map(|e| e.lines_changed()).sum();
    assert!(changed >= 24, "{changed}");
}
