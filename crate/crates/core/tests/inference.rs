mod common;

use std::time::Instant;

use grammar_forge::grammar::{parse_grammar, Cardinality};
use grammar_forge::inference::{dead_productions, infer_grammar, verify_inference, AnnotatedExample};
use grammar_forge::metamodel::{FeatureKind, Upper};

const EXAMPLES: &[&str] = &["package", "siblings", "reference", "positional", "recursive"];

fn example(name: &str) -> AnnotatedExample {
    AnnotatedExample::from_json(&common::fixture(&format!("infer/{name}.ann.json"))).unwrap()
}

#[test]
fn every_example_is_sound_and_minimal() {
    let start = Instant::now();
    for name in EXAMPLES {
        let ex = example(name);
        let (_, g) = infer_grammar(&ex).unwrap_or_else(|e| panic!("{name}: {e}"));
        verify_inference(&g, &ex).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(dead_productions(&g, &ex).unwrap(), vec![], "{name}");
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn package_rule_matches_the_generated_one() {
    let (m, g) = infer_grammar(&example("package")).unwrap();
    let mut expected = parse_grammar(&common::fixture("mini_eatxt.generated.gxt"))
        .unwrap()
        .rule("EAPackage")
        .unwrap()
        .clone();
    let grammar_forge::grammar::Element::Block { body, .. } = &mut expected.body[0].elements[1] else {
        panic!("generated rule has a body block");
    };
    body.retain(|l| l.carries("shortName"));
    assert_eq!(g.rules, vec![expected]);
    let f = &m.classes[0].features[0];
    assert_eq!((f.name.as_str(), f.type_name.as_str(), f.lower, f.upper), ("shortName", "string", 0, Upper::One));
}

#[test]
fn repeated_siblings_become_many_containment() {
    let (m, _) = infer_grammar(&example("siblings")).unwrap();
    let names: Vec<&str> = m.classes.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["EAPackage", "DesignFunctionType"]);
    let pkg = &m.classes[0].features;
    assert_eq!(pkg.len(), 2);
    assert_eq!(pkg[1].name, "elements");
    assert_eq!(pkg[1].kind, FeatureKind::Containment);
    assert_eq!(pkg[1].type_name, "DesignFunctionType");
    assert_eq!(pkg[1].upper, Upper::Unbounded);
    let dft: Vec<(&str, &str)> = m.classes[1]
        .features
        .iter()
        .map(|f| (f.name.as_str(), f.type_name.as_str()))
        .collect();
    assert_eq!(dft, [("shortName", "string"), ("isElementary", "bool")]);
    assert!(m.classes[1].features.iter().all(|f| f.lower == 0 && f.upper == Upper::One));
}

#[test]
fn references_are_typed_by_the_annotation() {
    let (m, g) = infer_grammar(&example("reference")).unwrap();
    let port = m.class("Port").unwrap();
    let ty = port.features.iter().find(|f| f.name == "type").unwrap();
    assert_eq!((ty.kind, ty.type_name.as_str()), (FeatureKind::Reference, "Datatype"));
    let generalized = "System {\n    types {\n        Datatype { name i16 bits 16 }\n    }\n    ports {\n        Port { name q type i16 direction out }\n    }\n}\n";
    let ex = AnnotatedExample {
        text: generalized.into(),
        spans: Vec::new(),
    };
    verify_inference(&g, &ex).unwrap();
    let dangling = generalized.replace("type i16", "type i32");
    assert!(verify_inference(&g, &AnnotatedExample { text: dangling, spans: Vec::new() }).is_err());
}

#[test]
fn positional_values_and_unkeyed_children() {
    let (m, g) = infer_grammar(&example("positional")).unwrap();
    let lib = m.class("Library").unwrap();
    let feats: Vec<(&str, Upper)> = lib.features.iter().map(|f| (f.name.as_str(), f.upper)).collect();
    assert_eq!(feats, [("value1", Upper::One), ("book", Upper::Unbounded), ("shelf", Upper::One)]);
    let book = g.rule("Book").unwrap();
    assert_eq!(book.body.last().unwrap().cardinality, Cardinality::Required);
}

#[test]
fn mutated_keyword_fails_verification() {
    let ex = example("siblings");
    let (_, g) = infer_grammar(&ex).unwrap();
    let mutated = AnnotatedExample {
        text: ex.text.replace("isElementary", "elementary"),
        spans: Vec::new(),
    };
    let f = verify_inference(&g, &mutated).unwrap_err();
    assert_eq!(f.offset, ex.text.find("isElementary").unwrap());
}

#[test]
fn inference_is_deterministic() {
    for name in EXAMPLES {
        assert_eq!(infer_grammar(&example(name)).unwrap(), infer_grammar(&example(name)).unwrap());
    }
}

mod generated_examples {
    use grammar_forge::inference::{dead_productions, infer_grammar, verify_inference, AnnotatedExample, Label, Span};
    use proptest::prelude::*;

    #[derive(Clone, Debug)]
    struct Obj {
        class: usize,
        attrs: [Option<u8>; 3],
        groups: Vec<(usize, Vec<Obj>)>,
    }

    const CLASSES: &[&str] = &["Alpha", "Beta", "Gamma"];
    const GROUPS: &[&str] = &["alphas", "betas", "gammas"];
    const ATTRS: &[(&str, &[&str])] = &[
        ("name", &["\"x\"", "\"long name\"", "\"\""]),
        ("count", &["0", "42", "-7"]),
        ("flag", &["true", "false", "true"]),
    ];

    fn arb_obj(depth: u32) -> BoxedStrategy<Obj> {
        let attrs = prop::array::uniform3(prop::option::of(0u8..3));
        let leaf = (0..CLASSES.len(), attrs.clone()).prop_map(|(class, attrs)| Obj {
            class,
            attrs,
            groups: Vec::new(),
        });
        if depth == 0 {
            return leaf.boxed();
        }
        let group = (0..GROUPS.len(), prop::collection::vec(arb_obj(depth - 1), 1..3));
        (0..CLASSES.len(), attrs, prop::collection::vec(group, 0..3))
            .prop_map(|(class, attrs, mut groups)| {
                groups.sort_by_key(|g| g.0);
                groups.dedup_by_key(|g| g.0);
                Obj { class, attrs, groups }
            })
            .boxed()
    }

    struct Writer {
        text: String,
        spans: Vec<Span>,
    }

    impl Writer {
        fn token(&mut self, s: &str, label: Label) {
            if !self.text.is_empty() && !self.text.ends_with('\n') {
                self.text.push(' ');
            }
            let start = self.text.len();
            self.text.push_str(s);
            self.spans.push(Span {
                start,
                end: self.text.len(),
                label,
                type_name: None,
            });
        }

        fn newline(&mut self, indent: usize) {
            self.text.push('\n');
            self.text.push_str(&"  ".repeat(indent));
        }

        fn object(&mut self, o: &Obj, indent: usize) {
            self.token(CLASSES[o.class], Label::ObjectClass);
            self.token("{", Label::BlockOpen);
            for ((name, values), v) in ATTRS.iter().zip(o.attrs) {
                if let Some(v) = v {
                    self.newline(indent + 1);
                    self.token(name, Label::Keyword);
                    self.token(values[v as usize], Label::AttrValue);
                }
            }
            for (g, children) in &o.groups {
                self.newline(indent + 1);
                self.token(GROUPS[*g], Label::Keyword);
                self.token("{", Label::BlockOpen);
                for c in children {
                    self.newline(indent + 2);
                    self.object(c, indent + 2);
                }
                self.newline(indent + 1);
                self.token("}", Label::BlockClose);
            }
            self.newline(indent);
            self.token("}", Label::BlockClose);
        }
    }

    /// Children of group `k` are always of class `k`, so no group mixes
    /// classes.
    fn normalize(o: &mut Obj) {
        for (g, cs) in &mut o.groups {
            for c in cs.iter_mut() {
                c.class = *g;
                normalize(c);
            }
        }
    }

    fn example(mut root: Obj) -> AnnotatedExample {
        normalize(&mut root);
        let mut w = Writer {
            text: String::new(),
            spans: Vec::new(),
        };
        w.object(&root, 0);
        w.text.push('\n');
        AnnotatedExample {
            text: w.text,
            spans: w.spans,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn inferred_grammars_parse_their_example(root in arb_obj(3)) {
            let ex = example(root);
            prop_assert!(ex.validate().is_ok());
            let (m, g) = infer_grammar(&ex).unwrap_or_else(|e| panic!("{e}\n{}", ex.text));
            verify_inference(&g, &ex).unwrap_or_else(|e| panic!("{e}\n{}", ex.text));
            prop_assert_eq!(dead_productions(&g, &ex).unwrap(), vec![]);
            let (m2, g2) = infer_grammar(&ex.clone()).unwrap();
            prop_assert_eq!(m, m2);
            prop_assert_eq!(g, g2);
        }
    }
}
