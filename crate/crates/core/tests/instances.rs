mod common;

use grammar_forge::instance::{
    parse_program, sample_instances, sample_models, serialize_instance, validate_instance, InstanceModel,
    InstanceObject, Value,
};

fn package(name: &str) -> InstanceObject {
    InstanceObject::new("EAPackage").with("shortName", Value::Str(name.into()))
}

#[test]
fn single_package_under_generated_grammar() {
    let tg = common::generated();
    let m = InstanceModel {
        root: package("P1"),
    };
    let text = "EAPackage {\n    shortName \"P1\"\n}";
    let eaxml = InstanceModel {
        root: InstanceObject::new("EAXML").with("topLevelPackages", Value::Object(package("P1"))),
    };
    let printed = serialize_instance(&tg, &eaxml).unwrap();
    assert!(printed.contains(&text.replace('\n', "\n        ")), "{printed}");
    assert_eq!(parse_program(&tg, &printed).unwrap(), eaxml);
    assert_eq!(m.root.depth(), 1);
}

#[test]
fn single_package_under_optimized_grammar() {
    let tg = common::optimized();
    let eaxml = InstanceModel {
        root: InstanceObject::new("EAXML").with("topLevelPackages", Value::Object(package("P1"))),
    };
    let printed = serialize_instance(&tg, &eaxml).unwrap();
    assert!(printed.contains("EAPackage \"P1\" { }"), "{printed}");
    assert_eq!(parse_program(&tg, &printed).unwrap(), eaxml);
}

#[test]
fn sampled_programs_round_trip_on_every_grammar() {
    for (name, tg) in common::all_grammars() {
        let mut n = 0;
        for seed in 1..=200u64 {
            for model in sample_models(&tg, seed, 1, 4) {
                let text = serialize_instance(&tg, &model).unwrap_or_else(|e| panic!("{name} seed {seed}: {e}"));
                let back = parse_program(&tg, &text).unwrap_or_else(|e| panic!("{name} seed {seed}: {e}\n{text}"));
                assert_eq!(back, model, "{name} seed {seed}\n{text}");
                assert_eq!(validate_instance(&tg, &model), vec![], "{name} seed {seed}");
                n += 1;
            }
        }
        assert_eq!(n, 200, "{name}");
    }
}

#[test]
fn samples_reach_references_and_separators() {
    let tg = common::optimized();
    let texts: Vec<String> = (1..=200u64)
        .flat_map(|seed| sample_instances(&tg, seed, 1, 4))
        .map(|s| s.text)
        .collect();
    assert!(texts.iter().any(|t| t.contains("type ")));
    assert!(texts.iter().any(|t| t.contains(", FunctionPort")));
    assert!(texts.iter().any(|t| t.contains("direction ")));
}

#[test]
fn sampling_is_deterministic_and_depth_bounded() {
    let tg = common::generated();
    assert_eq!(sample_models(&tg, 42, 5, 3), sample_models(&tg, 42, 5, 3));
    for m in sample_models(&tg, 3, 50, 3) {
        assert!(m.root.depth() <= 3);
    }
    for m in sample_models(&tg, 3, 20, 1) {
        assert_eq!(m.root.depth(), 1);
    }
}

#[test]
fn empty_input_expects_the_root_keyword() {
    let f = parse_program(&common::generated(), "").unwrap_err();
    assert_eq!(f.offset, 0);
    assert_eq!(f.expected, ["'EAXML'"]);
    assert_eq!(f.found, "end of input");
}

#[test]
fn wrong_token_is_reported_at_its_position() {
    let text = "EAXML { topLevelPackages { EAPackage { shortName 5 } } }";
    let f = parse_program(&common::generated(), text).unwrap_err();
    assert_eq!(f.offset, text.find('5').unwrap());
    assert_eq!((f.line, f.column), (1, 50));
    assert_eq!(f.expected, ["EString"]);
}

#[test]
fn unknown_enum_literal_lists_the_literals() {
    let text = "EAXML { topLevelPackages { EAPackage { elements { DesignFunctionType { ports { FunctionPort { direction sideways } } } } } } }";
    let f = parse_program(&common::generated(), text).unwrap_err();
    assert_eq!(f.offset, text.find("sideways").unwrap());
    assert_eq!(f.expected, ["in", "inout", "out"]);
}

#[test]
fn references_must_resolve() {
    let ok = "EAXML { topLevelPackages { EAPackage { shortName \"P\" elements {
        EAInteger { shortName \"u8\" }
        DesignFunctionType { shortName \"f\" ports { FunctionPort { shortName \"p\" type u8 } } }
    } } } }";
    let m = parse_program(&common::generated(), ok).unwrap();
    assert!(validate_instance(&common::generated(), &m).is_empty());
    let bad = ok.replace("type u8", "type u16");
    let f = parse_program(&common::generated(), &bad).unwrap_err();
    assert_eq!(f.offset, bad.find("u16").unwrap());
    assert!(f.message.unwrap().contains("u16"));
}

#[test]
fn deep_nesting_fails_cleanly() {
    let depth = 5000;
    let mut text = String::from("EAXML { topLevelPackages { ");
    for _ in 0..depth {
        text.push_str("EAPackage { subPackages { ");
    }
    let f = parse_program(&common::generated(), &text).unwrap_err();
    assert!(f.message.unwrap().contains("nesting"));
}

#[test]
fn layout_programs_parse_with_empty_blocks() {
    let tg = common::styled("python_style");
    let text = "EAXML:\n    topLevelPackages:\n        EAPackage:\n        EAPackage:\n            \"x\"\n";
    let m = parse_program(&tg, text).unwrap();
    let pkgs = &m.root.slots["topLevelPackages"];
    assert_eq!(pkgs.len(), 2);
    assert_eq!(serialize_instance(&tg, &m).unwrap(), text);
    let f = parse_program(&tg, "EAXML:\n    topLevelPackages:\n  EAPackage:\n").unwrap_err();
    assert!(f.message.unwrap().contains("indentation"));
}

#[test]
fn missing_required_value_is_a_serialize_error() {
    let tg = common::optimized();
    let m = InstanceModel {
        root: InstanceObject::new("EAXML").with("topLevelPackages", Value::Object(InstanceObject::new("EAPackage"))),
    };
    let e = serialize_instance(&tg, &m).unwrap_err();
    assert!(e.to_string().contains("EAPackage.shortName"), "{e}");
}

#[test]
fn programs_migrate_between_grammars() {
    use grammar_forge::instance::migrate_program;
    let old = common::generated();
    let new = common::optimized();
    for seed in 1..=30u64 {
        for s in sample_instances(&old, seed, 1, 4) {
            let mig = migrate_program(&old, &new, &s.text).unwrap();
            assert!(mig.dropped.is_empty());
            assert_eq!(parse_program(&new, &mig.text).unwrap(), s.model);
        }
    }
}
