//! The rule catalog: parameter schemas and one-line documentation for every
//! optimization rule.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Text,
    Bool,
    Cardinality,
    /// Comma-separated names.
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
}

/// Whether a rule takes `attr=`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrUse {
    Required,
    Optional,
    Forbidden,
}

/// How a rule rewrites the grammar, shown next to the documentation line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    DeleteElements,
    InsertElements,
    ReplaceLiteral,
    MoveLine,
    SpliceBlock,
    Retarget,
    Cardinality,
    Permute,
    DeleteRule,
    RenameRule,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RuleSpec {
    pub id: &'static str,
    pub doc: &'static str,
    pub semantics: Semantics,
    pub attr: AttrUse,
    /// `rule=` may be left out (defaults to `*`).
    pub rule_optional: bool,
    /// `rule=*` is not allowed.
    pub named_rule_only: bool,
    pub params: &'static [Param],
}

const fn text(name: &'static str, required: bool) -> Param {
    Param {
        name,
        ty: ParamType::Text,
        required,
    }
}

pub const CATALOG: &[RuleSpec] = &[
    RuleSpec {
        id: "remove_keyword",
        doc: "Delete a keyword from the selected rules, optionally only on the line of an attribute.",
        semantics: Semantics::DeleteElements,
        attr: AttrUse::Optional,
        rule_optional: false,
        named_rule_only: false,
        params: &[text("keyword", true)],
    },
    RuleSpec {
        id: "add_keyword_to_attr",
        doc: "Insert a keyword right before or after an attribute's assignment.",
        semantics: Semantics::InsertElements,
        attr: AttrUse::Required,
        rule_optional: false,
        named_rule_only: false,
        params: &[
            text("keyword", true),
            Param {
                name: "before",
                ty: ParamType::Bool,
                required: false,
            },
        ],
    },
    RuleSpec {
        id: "rename_keyword",
        doc: "Replace a keyword literal.",
        semantics: Semantics::ReplaceLiteral,
        attr: AttrUse::Optional,
        rule_optional: false,
        named_rule_only: false,
        params: &[text("old", true), text("new", true)],
    },
    RuleSpec {
        id: "move_attr_out_of_block",
        doc: "Move an attribute's line out of the rule's outermost block, in front of its opening delimiter.",
        semantics: Semantics::MoveLine,
        attr: AttrUse::Required,
        rule_optional: false,
        named_rule_only: false,
        params: &[],
    },
    RuleSpec {
        id: "remove_block",
        doc: "Drop a block's delimiters and splice its lines into the enclosing body.",
        semantics: Semantics::SpliceBlock,
        attr: AttrUse::Optional,
        rule_optional: false,
        named_rule_only: false,
        params: &[],
    },
    RuleSpec {
        id: "change_block_delimiters",
        doc: "Change the opening and closing delimiters of matching blocks (INDENT/DEDENT allowed).",
        semantics: Semantics::Retarget,
        attr: AttrUse::Optional,
        rule_optional: false,
        named_rule_only: false,
        params: &[
            text("open", false),
            text("close", false),
            text("new_open", false),
            text("new_close", false),
        ],
    },
    RuleSpec {
        id: "set_line_cardinality",
        doc: "Set the cardinality of an attribute's line.",
        semantics: Semantics::Cardinality,
        attr: AttrUse::Required,
        rule_optional: false,
        named_rule_only: false,
        params: &[Param {
            name: "card",
            ty: ParamType::Cardinality,
            required: true,
        }],
    },
    RuleSpec {
        id: "reorder_features",
        doc: "Reorder the feature lines of the outermost block.",
        semantics: Semantics::Permute,
        attr: AttrUse::Forbidden,
        rule_optional: false,
        named_rule_only: false,
        params: &[Param {
            name: "order",
            ty: ParamType::List,
            required: true,
        }],
    },
    RuleSpec {
        id: "remove_rule",
        doc: "Delete a rule and its alternatives references.",
        semantics: Semantics::DeleteRule,
        attr: AttrUse::Forbidden,
        rule_optional: false,
        named_rule_only: true,
        params: &[],
    },
    RuleSpec {
        id: "rename_rule",
        doc: "Rename a rule and every reference to it.",
        semantics: Semantics::RenameRule,
        attr: AttrUse::Forbidden,
        rule_optional: false,
        named_rule_only: true,
        params: &[text("new_name", true)],
    },
    RuleSpec {
        id: "add_list_separator",
        doc: "Put a separator keyword between the repetitions of a many-valued attribute.",
        semantics: Semantics::InsertElements,
        attr: AttrUse::Required,
        rule_optional: false,
        named_rule_only: false,
        params: &[text("sep", true)],
    },
    RuleSpec {
        id: "remove_attr_keyword_everywhere",
        doc: "Delete a keyword in every rule.",
        semantics: Semantics::DeleteElements,
        attr: AttrUse::Optional,
        rule_optional: true,
        named_rule_only: false,
        params: &[text("keyword", true)],
    },
];

pub fn rule_spec(id: &str) -> Option<&'static RuleSpec> {
    CATALOG.iter().find(|r| r.id == id)
}

impl RuleSpec {
    pub fn param(&self, name: &str) -> Option<&'static Param> {
        self.params.iter().find(|p| p.name == name)
    }
}
