mod common;

use std::time::{Duration, Instant};

use common::{fixture, metamodel};
use grammar_forge::evolution::{regenerate_and_reapply, ReuseStatus};
use grammar_forge::generate::{attach_metamodel, generate_grammar};
use grammar_forge::grammar::{parse_grammar, print_grammar};
use grammar_forge::instance::{migrate_program, parse_program, sample_instances, validate_instance};
use grammar_forge::metamodel::{load_metamodel, Metamodel};
use grammar_forge::optimize::{apply_config, parse_config, print_entry, RuleConfig};

fn v2() -> Metamodel {
    load_metamodel(&fixture("mini_eatxt_v2.mm.json")).unwrap()
}

fn config() -> Vec<RuleConfig> {
    parse_config(&fixture("mini_eatxt.goc")).unwrap()
}

#[test]
fn renamed_class_entry_is_the_only_stale_one() {
    let t = Instant::now();
    let evo = regenerate_and_reapply(&v2(), &config(), Some(&metamodel())).unwrap();
    assert!(t.elapsed() < Duration::from_secs(1));

    let stale: Vec<_> = evo.reuse.entries.iter().filter(|e| e.status.is_stale()).collect();
    assert_eq!(stale.len(), 1);
    let e = stale[0];
    assert_eq!(e.status, ReuseStatus::StaleNoTarget);
    assert_eq!(e.rule_id, "reorder_features");
    assert_eq!(e.entry, "reorder_features rule=EAPackage order=subPackages,elements");
    let s = e.suggestion.as_ref().unwrap();
    assert_eq!(s.rename_to, "EAPkg");
    assert_eq!(s.entry, "reorder_features rule=EAPkg order=subPackages,elements");

    assert_eq!(evo.reuse.summary.applied, config().len() - 1);
    assert_eq!(evo.reuse.summary.error, 0);
    assert!(evo.reuse.summary.adjustments <= 4);
    assert!(evo.reuse.render().contains("stale-no-target"));
}

#[test]
fn taking_the_suggestion_makes_every_entry_apply() {
    let first = regenerate_and_reapply(&v2(), &config(), Some(&metamodel())).unwrap();
    let fixed: String = first
        .reuse
        .entries
        .iter()
        .map(|e| e.suggestion.as_ref().map_or(e.entry.clone(), |s| s.entry.clone()) + "\n")
        .collect();
    let evo = regenerate_and_reapply(&v2(), &parse_config(&fixed).unwrap(), Some(&metamodel())).unwrap();
    assert!(evo.reuse.entries.iter().all(|e| e.status == ReuseStatus::Applied));
    let pkg = print_grammar(&evo.grammar);
    let sub = pkg.find("('subPackages'").unwrap();
    let elems = pkg.find("('elements'").unwrap();
    assert!(sub < elems);
}

#[test]
fn unchanged_metamodel_reproduces_the_optimized_grammar() {
    let evo = regenerate_and_reapply(&metamodel(), &config(), Some(&metamodel())).unwrap();
    let want = parse_grammar(&fixture("mini_eatxt.optimized.gxt")).unwrap();
    assert_eq!(print_grammar(&evo.grammar), print_grammar(&want));
    assert_eq!(evo.reuse.summary.adjustments, 0);
    assert!(evo.reuse.entries.iter().all(|e| e.suggestion.is_none()));
}

#[test]
fn empty_config_yields_the_generated_grammar() {
    let evo = regenerate_and_reapply(&v2(), &[], None).unwrap();
    assert_eq!(evo.grammar, generate_grammar(&v2()).unwrap());
    assert!(evo.reuse.entries.is_empty());
}

#[test]
fn replay_matches_applying_prefix_then_suffix() {
    let cs = config();
    let evo = regenerate_and_reapply(&v2(), &cs, None).unwrap();
    let base = generate_grammar(&v2()).unwrap();
    for k in 0..=cs.len() {
        let (a, _) = apply_config(&base, &cs[..k]);
        let (b, _) = apply_config(&a, &cs[k..]);
        assert_eq!(b, evo.grammar, "split at {k}");
    }
}

#[test]
fn stale_entries_leave_the_grammar_alone() {
    let cs = config();
    let evo = regenerate_and_reapply(&v2(), &cs, None).unwrap();
    let kept: Vec<RuleConfig> = cs
        .iter()
        .zip(&evo.reuse.entries)
        .filter(|(_, e)| !e.status.is_stale())
        .map(|(c, _)| c.clone())
        .collect();
    assert!(kept.len() < cs.len());
    let (g, _) = apply_config(&generate_grammar(&v2()).unwrap(), &kept);
    assert_eq!(g, evo.grammar);
}

#[test]
fn evolved_grammar_is_sound_for_the_new_metamodel() {
    let evo = regenerate_and_reapply(&v2(), &config(), None).unwrap();
    let tg = attach_metamodel(&evo.grammar, &v2()).unwrap();
    let samples = sample_instances(&tg, 11, 60, 4);
    assert!(samples.len() >= 50);
    for s in &samples {
        let back = parse_program(&tg, &s.text).unwrap_or_else(|f| panic!("{f}\n{}", s.text));
        assert_eq!(back, s.model);
        assert!(validate_instance(&tg, &back).is_empty());
    }
}

#[test]
fn programs_follow_the_rename() {
    let old = common::optimized();
    let evo = regenerate_and_reapply(&v2(), &config(), Some(&metamodel())).unwrap();
    let new = attach_metamodel(&evo.grammar, &v2()).unwrap();
    let text = "EAXML {\n    packages {\n        EAPackage \"P1\" { }\n    }\n}\n";
    parse_program(&old, text).unwrap();
    let m = migrate_program(&old, &new, text).unwrap();
    assert!(m.text.contains("EAPkg \"P1\""), "{}", m.text);
    assert!(m.dropped.is_empty());
}

#[test]
fn report_json_names_statuses() {
    let evo = regenerate_and_reapply(&v2(), &config(), Some(&metamodel())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&evo.reuse.to_json()).unwrap();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), config().len());
    assert_eq!(entries[5]["status"], "stale-no-target");
    assert_eq!(entries[5]["suggestion"]["rename_to"], "EAPkg");
    assert_eq!(entries[0]["status"], "applied");
    assert_eq!(v["summary"]["adjustments"], 1);
    assert_eq!(print_entry(&config()[5]), entries[5]["entry"]);
}

#[test]
fn entries_with_surviving_targets_keep_their_status() {
    let before = regenerate_and_reapply(&metamodel(), &config(), None).unwrap();
    let after = regenerate_and_reapply(&v2(), &config(), Some(&metamodel())).unwrap();
    let mut compared = 0;
    for (a, b) in before.reuse.entries.iter().zip(&after.reuse.entries) {
        if b.status != ReuseStatus::StaleNoTarget {
            assert_eq!(a.status, b.status, "{}", a.entry);
            compared += 1;
        }
    }
    assert_eq!(compared, config().len() - 1);
}
