//! The rewrites behind each catalog rule. Each function edits the grammar in
//! place and returns the matched locations; an empty list means no match
//! and leaves the grammar untouched.

use crate::grammar::{
    line_at, line_at_mut, lines_containing_mut, locate, locate_lines, visit_lines, AssignOp,
    Cardinality, Delimiter, Element, Grammar, Line, Location, ParserRule, RuleScope, Selector,
};

use super::config::RuleConfig;

pub(crate) struct Outcome {
    pub locations: Vec<Location>,
    pub renamed: Option<(String, String)>,
}

impl Outcome {
    fn at(locations: Vec<Location>) -> Outcome {
        Outcome {
            locations,
            renamed: None,
        }
    }
}

type Rewrite = Result<Outcome, String>;

fn rule_mut<'a>(g: &'a mut Grammar, name: &str) -> &'a mut ParserRule {
    g.rules
        .iter_mut()
        .find(|r| r.name == name)
        .expect("location names an existing rule")
}

fn split_element_path(path: &[usize]) -> (&[usize], usize) {
    let (last, line) = path.split_last().expect("element path is non-empty");
    (line, *last)
}

fn prune_empty_lines(lines: &mut Vec<Line>) {
    lines.retain(|l| !l.elements.is_empty());
    for l in lines {
        for e in &mut l.elements {
            if let Element::Block { body, .. } = e {
                prune_empty_lines(body);
            }
        }
    }
}

pub(crate) fn dispatch(g: &mut Grammar, c: &RuleConfig) -> Rewrite {
    let arg = |name: &str| c.arg(name).unwrap_or_default().to_string();
    match c.rule_id.as_str() {
        "remove_keyword" | "remove_attr_keyword_everywhere" => {
            remove_keyword(g, &c.scope, &arg("keyword"))
        }
        "add_keyword_to_attr" => add_keyword(g, &c.scope, &arg("keyword"), c.flag("before")),
        "rename_keyword" => rename_keyword(g, &c.scope, &arg("old"), &arg("new")),
        "move_attr_out_of_block" => move_attr_out_of_block(g, &c.scope),
        "remove_block" => remove_block(g, &c.scope),
        "change_block_delimiters" => change_block_delimiters(
            g,
            &c.scope,
            c.arg("open"),
            c.arg("close"),
            c.arg("new_open"),
            c.arg("new_close"),
        ),
        "set_line_cardinality" => set_line_cardinality(
            g,
            &c.scope,
            Cardinality::from_name(&arg("card")).ok_or("bad cardinality")?,
        ),
        "reorder_features" => reorder_features(g, &c.scope, &c.list("order")),
        "remove_rule" => remove_rule(g, &c.scope.rule),
        "rename_rule" => rename_rule(g, &c.scope.rule, &arg("new_name")),
        "add_list_separator" => add_list_separator(g, &c.scope, &arg("sep")),
        other => Err(format!("unknown rule `{other}`")),
    }
}

fn remove_keyword(g: &mut Grammar, scope: &Selector, keyword: &str) -> Rewrite {
    let sel = scope.clone().with_keyword(keyword);
    let locs = locate(g, &sel);
    for loc in locs.iter().rev() {
        let rule = rule_mut(g, &loc.rule);
        let (line_path, idx) = split_element_path(&loc.path);
        line_at_mut(&mut rule.body, line_path)
            .expect("located line exists")
            .elements
            .remove(idx);
    }
    for name in locs.iter().map(|l| l.rule.clone()).collect::<std::collections::BTreeSet<_>>() {
        prune_empty_lines(&mut rule_mut(g, &name).body);
    }
    Ok(Outcome::at(locs))
}

fn add_keyword(g: &mut Grammar, scope: &Selector, keyword: &str, before: bool) -> Rewrite {
    let locs = locate(g, scope);
    let mut applied = Vec::new();
    for loc in locs.iter().rev() {
        let rule = rule_mut(g, &loc.rule);
        let (line_path, idx) = split_element_path(&loc.path);
        let line = line_at_mut(&mut rule.body, line_path).expect("located line exists");
        let neighbour = if before {
            idx.checked_sub(1).and_then(|i| line.elements.get(i))
        } else {
            line.elements.get(idx + 1)
        };
        if matches!(neighbour, Some(Element::Keyword(k)) if k == keyword) {
            continue;
        }
        let at = if before { idx } else { idx + 1 };
        line.elements.insert(at, Element::Keyword(keyword.to_string()));
        applied.push(loc.clone());
    }
    applied.reverse();
    Ok(Outcome::at(applied))
}

fn rename_keyword(g: &mut Grammar, scope: &Selector, old: &str, new: &str) -> Rewrite {
    let locs = locate(g, &scope.clone().with_keyword(old));
    for loc in &locs {
        let rule = rule_mut(g, &loc.rule);
        let (line_path, idx) = split_element_path(&loc.path);
        line_at_mut(&mut rule.body, line_path).expect("located line exists").elements[idx] =
            Element::Keyword(new.to_string());
    }
    Ok(Outcome::at(locs))
}

fn move_attr_out_of_block(g: &mut Grammar, scope: &Selector) -> Rewrite {
    let locs = locate(g, scope);
    let mut matched = Vec::new();
    let mut by_rule: Vec<(String, usize, usize, Vec<usize>)> = Vec::new();
    for loc in &locs {
        let rule = g.rule(&loc.rule).expect("located rule exists");
        let Some((li, ei)) = rule.outermost_block() else {
            continue;
        };
        if loc.path.len() < 4 || loc.path[0] != li || loc.path[1] != ei {
            continue;
        }
        matched.push(loc.clone());
        match by_rule.iter_mut().find(|(r, ..)| r == &loc.rule) {
            Some((_, _, _, lines)) => {
                if !lines.contains(&loc.path[2]) {
                    lines.push(loc.path[2]);
                }
            }
            None => by_rule.push((loc.rule.clone(), li, ei, vec![loc.path[2]])),
        }
    }
    for (name, li, ei, mut lines) in by_rule {
        lines.sort_unstable();
        let rule = rule_mut(g, &name);
        let header = &mut rule.body[li];
        let Element::Block { body, .. } = &mut header.elements[ei] else {
            unreachable!("outermost block index points at a block");
        };
        let mut moved = Vec::new();
        for &l in lines.iter().rev() {
            moved.push(body.remove(l));
        }
        moved.reverse();
        let hoisted: Vec<Element> = moved.into_iter().flat_map(|l| l.elements).collect();
        for (k, e) in hoisted.into_iter().enumerate() {
            header.elements.insert(ei + k, e);
        }
    }
    Ok(Outcome::at(matched))
}

fn remove_block(g: &mut Grammar, scope: &Selector) -> Rewrite {
    // (rule, line path, element index of the block)
    let mut targets: Vec<(String, Vec<usize>, usize)> = Vec::new();
    match &scope.feature {
        None => {
            for rule in g.rules.iter().filter(|r| scope.rule.matches(&r.name)) {
                if let Some((li, ei)) = rule.outermost_block() {
                    targets.push((rule.name.clone(), vec![li], ei));
                }
            }
        }
        Some(_) => {
            for loc in locate_lines(g, scope) {
                let rule = g.rule(&loc.rule).expect("located rule exists");
                let line = line_at(&rule.body, &loc.path).expect("located line exists");
                if let Some(ei) = line
                    .elements
                    .iter()
                    .position(|e| matches!(e, Element::Block { .. }))
                {
                    targets.push((loc.rule.clone(), loc.path.clone(), ei));
                }
            }
        }
    }
    for (rule, path, _) in &targets {
        let line = line_at(&g.rule(rule).expect("rule exists").body, path).expect("line exists");
        if line.cardinality != Cardinality::Required {
            return Err(format!(
                "block in rule `{rule}` sits in a line with cardinality {}; its lines cannot be spliced",
                line.cardinality.name()
            ));
        }
    }
    targets.sort();
    for (rule, path, ei) in targets.iter().rev() {
        let r = rule_mut(g, rule);
        let container = lines_containing_mut(&mut r.body, path).expect("line container exists");
        let i = *path.last().expect("line path is non-empty");
        let mut line = container.remove(i);
        let Element::Block { body, .. } = line.elements.remove(*ei) else {
            unreachable!("target index points at a block");
        };
        line.elements.truncate(*ei);
        let mut replacement = Vec::new();
        if !line.elements.is_empty() {
            replacement.push(line);
        }
        replacement.extend(body);
        for (k, l) in replacement.into_iter().enumerate() {
            container.insert(i + k, l);
        }
    }
    Ok(Outcome::at(
        targets
            .into_iter()
            .map(|(rule, mut path, ei)| {
                path.push(ei);
                Location { rule, path }
            })
            .collect(),
    ))
}

fn blocks_in_line(line: &Line, path: &[usize], out: &mut Vec<Vec<usize>>) {
    for (ei, e) in line.elements.iter().enumerate() {
        if let Element::Block { body, .. } = e {
            let mut p = path.to_vec();
            p.push(ei);
            out.push(p.clone());
            for (li, l) in body.iter().enumerate() {
                let mut lp = p.clone();
                lp.push(li);
                blocks_in_line(l, &lp, out);
            }
        }
    }
}

fn change_block_delimiters(
    g: &mut Grammar,
    scope: &Selector,
    open: Option<&str>,
    close: Option<&str>,
    new_open: Option<&str>,
    new_close: Option<&str>,
) -> Rewrite {
    let mut blocks: Vec<Location> = Vec::new();
    match &scope.feature {
        None => {
            for rule in g.rules.iter().filter(|r| scope.rule.matches(&r.name)) {
                let mut paths = Vec::new();
                for (li, l) in rule.body.iter().enumerate() {
                    blocks_in_line(l, &[li], &mut paths);
                }
                if let Some(ctx) = &scope.context_feature {
                    let ctx_lines = locate_lines(
                        g,
                        &Selector::rule(RuleScope::Named(rule.name.clone())).with_context(ctx.clone()),
                    );
                    paths.retain(|p| ctx_lines.iter().any(|c| p.starts_with(&c.path)));
                }
                blocks.extend(paths.into_iter().map(|path| Location {
                    rule: rule.name.clone(),
                    path,
                }));
            }
        }
        Some(_) => {
            for loc in locate_lines(g, scope) {
                let rule = g.rule(&loc.rule).expect("located rule exists");
                let line = line_at(&rule.body, &loc.path).expect("located line exists");
                let mut paths = Vec::new();
                blocks_in_line(line, &loc.path, &mut paths);
                blocks.extend(paths.into_iter().map(|path| Location {
                    rule: loc.rule.clone(),
                    path,
                }));
            }
        }
    }
    blocks.sort();
    blocks.dedup();

    let want_open = open.map(Delimiter::from_token);
    let want_close = close.map(Delimiter::from_token);
    let (prefix, new_open_delim): (Vec<String>, Option<Delimiter>) = match new_open {
        Some(v) => {
            let toks: Vec<&str> = v.split_whitespace().collect();
            let (last, rest) = toks.split_last().ok_or("new_open is empty")?;
            (
                rest.iter().map(|s| s.to_string()).collect(),
                Some(Delimiter::from_token(last)),
            )
        }
        None => (Vec::new(), None),
    };
    let new_close_delim = new_close.map(Delimiter::from_token);

    let mut changed = Vec::new();
    for loc in blocks.iter().rev() {
        let rule = rule_mut(g, &loc.rule);
        let (line_path, ei) = split_element_path(&loc.path);
        let line = line_at_mut(&mut rule.body, line_path).expect("block line exists");
        let Element::Block { open: o, close: c, .. } = &mut line.elements[ei] else {
            continue;
        };
        if want_open.as_ref().is_some_and(|w| w != o) || want_close.as_ref().is_some_and(|w| w != c) {
            continue;
        }
        let mut touched = false;
        if let Some(n) = &new_open_delim {
            if o != n {
                *o = n.clone();
                touched = true;
            }
        }
        if let Some(n) = &new_close_delim {
            if c != n {
                *c = n.clone();
                touched = true;
            }
        }
        let has_prefix = ei >= prefix.len()
            && line.elements[ei - prefix.len()..ei]
                .iter()
                .zip(&prefix)
                .all(|(e, p)| matches!(e, Element::Keyword(k) if k == p));
        if !has_prefix {
            for (k, p) in prefix.iter().enumerate() {
                line.elements.insert(ei + k, Element::Keyword(p.clone()));
            }
            touched = true;
        }
        if touched {
            changed.push(loc.clone());
        }
    }
    changed.reverse();
    Ok(Outcome::at(changed))
}

fn set_line_cardinality(g: &mut Grammar, scope: &Selector, card: Cardinality) -> Rewrite {
    let feature = scope.feature.clone().unwrap_or_default();
    let mut matched = Vec::new();
    for loc in locate_lines(g, scope) {
        let rule = rule_mut(g, &loc.rule);
        let line = line_at_mut(&mut rule.body, &loc.path).expect("located line exists");
        let owned = line
            .carried_features()
            .iter()
            .all(|f| feature == "*" || *f == feature);
        if !owned {
            continue;
        }
        line.cardinality = card;
        matched.push(loc);
    }
    Ok(Outcome::at(matched))
}

fn reorder_features(g: &mut Grammar, scope: &Selector, order: &[&str]) -> Rewrite {
    let mut matched = Vec::new();
    for rule in g.rules.iter_mut().filter(|r| scope.rule.matches(&r.name)) {
        let Some((li, ei)) = rule.outermost_block() else {
            continue;
        };
        let Element::Block { body, .. } = &mut rule.body[li].elements[ei] else {
            continue;
        };
        let rank = |l: &Line| {
            l.carried_features()
                .first()
                .and_then(|f| order.iter().position(|o| o == f))
        };
        let slots: Vec<usize> = (0..body.len()).filter(|&i| rank(&body[i]).is_some()).collect();
        if slots.is_empty() {
            continue;
        }
        let mut picked: Vec<Line> = slots.iter().map(|&i| body[i].clone()).collect();
        picked.sort_by_key(|l| rank(l));
        for (slot, line) in slots.into_iter().zip(picked) {
            body[slot] = line;
        }
        matched.push(Location {
            rule: rule.name.clone(),
            path: vec![li, ei],
        });
    }
    Ok(Outcome::at(matched))
}

fn named(scope: &RuleScope) -> Result<&str, String> {
    match scope {
        RuleScope::Named(n) => Ok(n),
        RuleScope::All => Err("this rule needs a named rule scope".into()),
    }
}

fn remove_rule(g: &mut Grammar, scope: &RuleScope) -> Rewrite {
    let name = named(scope)?.to_string();
    if g.rule(&name).is_none() {
        return Ok(Outcome::at(Vec::new()));
    }
    let mut users = Vec::new();
    for r in g.rules.iter().filter(|r| r.name != name) {
        visit_lines(&r.body, &mut |_, line| {
            for e in &line.elements {
                if let Element::Assignment { feature, callee, .. } = e {
                    if *callee == name {
                        users.push(format!("{}.{}", r.name, feature));
                    }
                }
            }
        });
    }
    if !users.is_empty() {
        return Err(format!(
            "rule `{name}` is still assigned by {}",
            users.join(", ")
        ));
    }
    for r in g.rules.iter_mut() {
        for line in r.body.iter_mut() {
            for e in line.elements.iter_mut() {
                if let Element::Alternatives(opts) = e {
                    opts.retain(|o| *o != name);
                    if opts.is_empty() {
                        return Err(format!(
                            "removing `{name}` leaves dispatch rule `{}` without alternatives",
                            r.name
                        ));
                    }
                }
            }
        }
    }
    g.rules.retain(|r| r.name != name);
    Ok(Outcome::at(vec![Location {
        rule: name,
        path: Vec::new(),
    }]))
}

fn rename_in_lines(lines: &mut [Line], old: &str, new: &str) {
    for line in lines {
        for e in &mut line.elements {
            match e {
                Element::Assignment { callee, .. } if callee == old => *callee = new.to_string(),
                Element::Alternatives(opts) => {
                    for o in opts.iter_mut().filter(|o| *o == old) {
                        *o = new.to_string();
                    }
                }
                Element::Block { body, .. } => rename_in_lines(body, old, new),
                _ => {}
            }
        }
    }
}

fn rename_rule(g: &mut Grammar, scope: &RuleScope, new_name: &str) -> Rewrite {
    let old = named(scope)?.to_string();
    if g.rule(&old).is_none() {
        return Ok(Outcome::at(Vec::new()));
    }
    if old != new_name && (g.rule(new_name).is_some() || g.terminal(new_name).is_some()) {
        return Err(format!("a rule named `{new_name}` already exists"));
    }
    for r in g.rules.iter_mut() {
        if r.name == old {
            r.name = new_name.to_string();
        }
        rename_in_lines(&mut r.body, &old, new_name);
    }
    Ok(Outcome {
        locations: vec![Location {
            rule: old.clone(),
            path: Vec::new(),
        }],
        renamed: Some((old, new_name.to_string())),
    })
}

fn add_list_separator(g: &mut Grammar, scope: &Selector, sep: &str) -> Rewrite {
    let feature = scope.feature.clone().unwrap_or_default();
    let mut targets = Vec::new();
    for loc in locate_lines(g, scope) {
        let rule = g.rule(&loc.rule).expect("located rule exists");
        let line = line_at(&rule.body, &loc.path).expect("located line exists");
        let mut sub = vec![loc.path.clone()];
        visit_lines(std::slice::from_ref(line), &mut |p, _| {
            if p.len() > 1 {
                let mut full = loc.path.clone();
                full.extend_from_slice(&p[1..]);
                sub.push(full);
            }
        });
        for p in sub {
            let l = line_at(&rule.body, &p).expect("nested line exists");
            let repeats_feature = l.cardinality.repeats()
                && l.elements.iter().any(|e| match e {
                    Element::Assignment { feature: f, op, .. } | Element::CrossRef { feature: f, op, .. } => {
                        *op == AssignOp::Add && (feature == "*" || *f == feature)
                    }
                    _ => false,
                });
            let has_sep = matches!(l.elements.first(), Some(Element::Keyword(k)) if k == sep);
            if repeats_feature && !has_sep {
                targets.push(Location {
                    rule: loc.rule.clone(),
                    path: p,
                });
            }
        }
    }
    targets.sort();
    targets.dedup();
    for t in &targets {
        let rule = rule_mut(g, &t.rule);
        line_at_mut(&mut rule.body, &t.path)
            .expect("target line exists")
            .elements
            .insert(0, Element::Keyword(sep.to_string()));
    }
    Ok(Outcome::at(targets))
}
