//! Seeded, grammar-driven generation of example programs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{object_name, serialize_instance, InstanceModel, InstanceObject, Value};
use crate::generate::TypedGrammar;
use crate::grammar::{AssignOp, Element, Grammar, Line, ParserRule};
use crate::metamodel::{FeatureKind, Primitive, TypeRef};

/// Recursion the grammar forces beyond `max_depth` is followed this much
/// further before a draw is abandoned.
const DEPTH_SLACK: usize = 8;

const STRINGS: &[&str] = &["a", "b", "c", "d"];
const INTS: &[i64] = &[0, 1, 2];
const FLOATS: &[f64] = &[0.5, 1.5, 2.5];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub model: InstanceModel,
    pub text: String,
}

struct Sampler<'a> {
    tg: &'a TypedGrammar,
    rng: ChaCha8Rng,
    max_depth: usize,
}

struct Abandon;

impl<'a> Sampler<'a> {
    fn g(&self) -> &'a Grammar {
        &self.tg.grammar
    }

    fn object(&mut self, rule: &'a ParserRule, depth: usize) -> Result<InstanceObject, Abandon> {
        if depth > self.max_depth + DEPTH_SLACK {
            return Err(Abandon);
        }
        if let Some(opts) = rule.dispatch_options() {
            let pick = opts.choose(&mut self.rng).ok_or(Abandon)?;
            let r = self.g().rule(pick).ok_or(Abandon)?;
            return self.object(r, depth);
        }
        let mut obj = InstanceObject::new(rule.returns.clone());
        self.lines(&rule.body, &mut obj, depth)?;
        Ok(obj)
    }

    fn calls_rule(&self, line: &Line) -> bool {
        fn walk(g: &Grammar, es: &[Element]) -> bool {
            es.iter().any(|e| match e {
                Element::Assignment { callee, .. } => g.terminal(callee).is_none(),
                Element::Block { body, .. } => body.iter().any(|l| walk(g, &l.elements)),
                _ => false,
            })
        }
        walk(self.g(), &line.elements)
    }

    /// A lower bound of 1 on a feature the line carries and the object
    /// still lacks.
    fn demanded(&self, line: &Line, obj: &InstanceObject, depth: usize) -> bool {
        let m = &self.tg.metamodel;
        line.carried_features().iter().any(|f| {
            m.feature(&obj.class, f).is_some_and(|mf| {
                mf.is_required()
                    && !obj.slots.contains_key(*f)
                    && (mf.kind != FeatureKind::Containment || depth < self.max_depth)
            })
        })
    }

    fn single_valued_only(line: &Line) -> bool {
        fn walk(es: &[Element]) -> bool {
            es.iter().all(|e| match e {
                Element::Assignment { op, .. } | Element::CrossRef { op, .. } => *op != AssignOp::Add,
                Element::Block { body, .. } => body.iter().all(|l| walk(&l.elements)),
                _ => true,
            })
        }
        walk(&line.elements)
    }

    fn lines(&mut self, lines: &'a [Line], obj: &mut InstanceObject, depth: usize) -> Result<(), Abandon> {
        use crate::grammar::Cardinality::*;
        for line in lines {
            let carried = line.carried_features();
            let already = !carried.is_empty()
                && Self::single_valued_only(line)
                && carried.iter().all(|f| obj.slots.contains_key(*f));
            let nested_cut = depth >= self.max_depth && self.calls_rule(line);
            let mut reps = match line.cardinality {
                Required => 1,
                Optional | Star if self.demanded(line, obj, depth) => 1,
                Optional => self.rng.gen_range(0..=1),
                Star => self.rng.gen_range(0..=2),
                Plus => self.rng.gen_range(1..=2),
            };
            if line.cardinality.allows_absence() && (nested_cut || already) {
                reps = 0;
            }
            if Self::single_valued_only(line) && !carried.is_empty() {
                reps = reps.min(1);
            }
            for _ in 0..reps {
                self.elements(&line.elements, obj, depth)?;
            }
        }
        Ok(())
    }

    fn elements(&mut self, es: &'a [Element], obj: &mut InstanceObject, depth: usize) -> Result<(), Abandon> {
        for e in es {
            match e {
                Element::Assignment { feature, op, callee } => {
                    let v = match self.g().terminal(callee) {
                        Some(_) => self.attribute(&obj.class, feature)?,
                        None => {
                            let r = self.g().rule(callee).ok_or(Abandon)?;
                            Value::Object(self.object(r, depth + 1)?)
                        }
                    };
                    assign(obj, feature, *op, v);
                }
                Element::CrossRef { feature, op, .. } => assign(obj, feature, *op, Value::Ref(String::new())),
                Element::Block { body, .. } => self.lines(body, obj, depth)?,
                Element::Keyword(_) | Element::Alternatives(_) => {}
            }
        }
        Ok(())
    }

    fn attribute(&mut self, class: &str, feature: &str) -> Result<Value, Abandon> {
        let m = &self.tg.metamodel;
        let f = m.feature(class, feature).ok_or(Abandon)?;
        Ok(match m.resolve_type(&f.type_name).ok_or(Abandon)? {
            TypeRef::Primitive(Primitive::String) => Value::Str(STRINGS.choose(&mut self.rng).expect("pool").to_string()),
            TypeRef::Primitive(Primitive::Int) => Value::Int(*INTS.choose(&mut self.rng).expect("pool")),
            TypeRef::Primitive(Primitive::Float) => Value::Float(*FLOATS.choose(&mut self.rng).expect("pool")),
            TypeRef::Primitive(Primitive::Bool) => Value::Bool(self.rng.gen()),
            TypeRef::Enum(e) => Value::Enum(e.literals.choose(&mut self.rng).ok_or(Abandon)?.clone()),
            TypeRef::Class(_) => return Err(Abandon),
        })
    }

    /// Points every placeholder reference at a random compatible named
    /// object; references with no candidate are dropped.
    fn resolve(&mut self, root: &mut InstanceObject) {
        let m = &self.tg.metamodel;
        let mut named: Vec<(String, String)> = Vec::new();
        root.walk(&mut |o| {
            if let Some(n) = object_name(m, o) {
                named.push((o.class.clone(), n.to_string()));
            }
        });
        fn fill(s: &mut Sampler, o: &mut InstanceObject, named: &[(String, String)]) {
            let m = &s.tg.metamodel;
            let class = o.class.clone();
            for (feature, values) in o.slots.iter_mut() {
                let target = m.feature(&class, feature).map(|f| f.type_name.clone());
                values.retain_mut(|v| match v {
                    Value::Object(child) => {
                        fill(s, child, named);
                        true
                    }
                    Value::Ref(name) => {
                        let cands: Vec<&String> = named
                            .iter()
                            .filter(|(c, _)| target.as_deref().is_some_and(|t| m.is_subclass_of(c, t)))
                            .map(|(_, n)| n)
                            .collect();
                        match cands.choose(&mut s.rng) {
                            Some(n) => {
                                *name = (*n).clone();
                                true
                            }
                            None => false,
                        }
                    }
                    _ => true,
                });
            }
            o.slots.retain(|_, vs| !vs.is_empty());
        }
        fill(self, root, &named);
    }
}

fn assign(obj: &mut InstanceObject, feature: &str, op: AssignOp, v: Value) {
    let slot = obj.slots.entry(feature.to_string()).or_default();
    match op {
        AssignOp::Add => slot.push(v),
        AssignOp::Set | AssignOp::Flag => *slot = vec![v],
    }
}

/// Draws up to `count` models for the root rule from a ChaCha8 stream seeded
/// with `seed`. Optional containment stops at `max_depth` objects (the root
/// is depth 1); draws the grammar cannot finish are skipped.
pub fn sample_models(tg: &TypedGrammar, seed: u64, count: usize, max_depth: usize) -> Vec<InstanceModel> {
    let Some(root) = tg.grammar.root_rule() else {
        return Vec::new();
    };
    let mut s = Sampler {
        tg,
        rng: ChaCha8Rng::seed_from_u64(seed),
        max_depth: max_depth.max(1),
    };
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < count * 10 + 10 {
        attempts += 1;
        if let Ok(mut obj) = s.object(root, 1) {
            s.resolve(&mut obj);
            out.push(InstanceModel { root: obj });
        }
    }
    out
}

/// Sampled models together with their printed programs.
pub fn sample_instances(tg: &TypedGrammar, seed: u64, count: usize, max_depth: usize) -> Vec<Sample> {
    sample_models(tg, seed, count, max_depth)
        .into_iter()
        .filter_map(|model| {
            let text = serialize_instance(tg, &model).ok()?;
            Some(Sample { model, text })
        })
        .collect()
}
