//! Task schemas: the closed inventories of relations, entity types, event
//! types, and chained-attribute plans that drive extraction.
//!
//! Schemas are data, not code. Each benchmark ships as a TOML file under
//! `assets/schemas/`; adding a dataset means writing a new file, not new Rust.
//! A loaded [`TaskSchema`] is immutable and safe to share across workers.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::templates::TemplateRegistry;

/// The three extraction tasks a schema can describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Re,
    Ner,
    Ee,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Re => write!(f, "re"),
            Task::Ner => write!(f, "ner"),
            Task::Ee => write!(f, "ee"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Language::En => write!(f, "en"),
            Language::Zh => write!(f, "zh"),
        }
    }
}

/// One follow-up attribute in a chained extraction plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub attribute: String,
    /// Template id resolved against the template registry at load time.
    pub template: String,
}

/// A relation type together with its prompt header types and optional
/// chained-attribute plan for complex-object values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationType {
    pub name: String,
    pub subject_type: String,
    pub object_type: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub object_chain: Vec<AttributeSpec>,
}

impl RelationType {
    pub fn has_chain(&self) -> bool {
        !self.object_chain.is_empty()
    }
}

/// An event type with its ordered argument-role list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventTypeSpec {
    pub name: String,
    pub roles: Vec<String>,
}

/// A validated task schema: exactly the task-appropriate inventory is
/// populated, the others stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSchema {
    pub task: Task,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<RelationType>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventTypeSpec>,
    /// NER only: ask one Stage II question per inventory type and skip the
    /// type-filtering stage entirely.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skip_stage1: bool,
    /// Pairs `(a, b)` declaring `(s, a, o)` equivalent to `(o, b, s)` for
    /// scoring. The first member is the canonical orientation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inverse_relations: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("failed to read schema file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed schema: {0}")]
    Malformed(#[from] toml::de::Error),
    #[error("invalid schema: {0}")]
    Invalid(String),
    #[error("unresolved template '{template}' referenced by relation '{relation}' attribute '{attribute}'")]
    UnresolvedTemplate {
        relation: String,
        attribute: String,
        template: String,
    },
    #[error("unknown type '{0}'")]
    UnknownType(String),
}

/// Canonical key for matching type names across prompt, reply, and schema:
/// surrounding whitespace and quote characters stripped, ASCII case folded,
/// internal whitespace runs collapsed. Underscores and hyphens stay distinct.
pub fn canonical_key(name: &str) -> String {
    let trimmed = name.trim_matches(|c: char| c.is_whitespace() || is_quote_char(c));
    let mut out = String::with_capacity(trimmed.len());
    let mut pending_space = false;
    for c in trimmed.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c.to_ascii_lowercase());
        }
    }
    out
}

pub(crate) fn is_quote_char(c: char) -> bool {
    matches!(c, '\'' | '"' | '`' | '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{00b4}')
}

impl TaskSchema {
    /// Parse and validate a schema document, resolving chain templates
    /// against `registry`.
    pub fn from_toml(text: &str, registry: &TemplateRegistry) -> Result<Self, SchemaError> {
        let schema: TaskSchema = toml::from_str(text)?;
        schema.validate(registry)?;
        Ok(schema)
    }

    pub fn load_with_registry(
        path: impl AsRef<Path>,
        registry: &TemplateRegistry,
    ) -> Result<Self, SchemaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, registry)
    }

    /// Load a schema file, resolving chain templates against the built-in
    /// template registry.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SchemaError> {
        Self::load_with_registry(path, TemplateRegistry::builtin())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("schema serializes")
    }

    fn validate(&self, registry: &TemplateRegistry) -> Result<(), SchemaError> {
        let invalid = |msg: String| Err(SchemaError::Invalid(msg));
        match self.task {
            Task::Re => {
                if self.relations.is_empty() {
                    return invalid("task 're' requires a non-empty [[relations]] inventory".into());
                }
                if !self.entities.is_empty() || !self.events.is_empty() {
                    return invalid("task 're' must not declare entities or events".into());
                }
            }
            Task::Ner => {
                if self.entities.is_empty() {
                    return invalid("task 'ner' requires a non-empty entities list".into());
                }
                if !self.relations.is_empty() || !self.events.is_empty() {
                    return invalid("task 'ner' must not declare relations or events".into());
                }
            }
            Task::Ee => {
                if self.events.is_empty() {
                    return invalid("task 'ee' requires a non-empty [[events]] inventory".into());
                }
                if !self.relations.is_empty() || !self.entities.is_empty() {
                    return invalid("task 'ee' must not declare relations or entities".into());
                }
            }
        }
        if self.skip_stage1 && self.task != Task::Ner {
            return invalid("skip_stage1 is only valid for task 'ner'".into());
        }
        if !self.inverse_relations.is_empty() && self.task != Task::Re {
            return invalid("inverse_relations is only valid for task 're'".into());
        }

        let mut seen = HashMap::new();
        for rel in &self.relations {
            if rel.name.trim().is_empty() {
                return invalid("relation with empty name".into());
            }
            if let Some(prev) = seen.insert(canonical_key(&rel.name), rel.name.clone()) {
                return invalid(format!("duplicate relation name '{}' (also '{prev}')", rel.name));
            }
            let mut attrs = HashMap::new();
            for spec in &rel.object_chain {
                if let Some(prev) = attrs.insert(canonical_key(&spec.attribute), &spec.attribute) {
                    return invalid(format!(
                        "relation '{}' repeats chain attribute '{}' (also '{prev}')",
                        rel.name, spec.attribute
                    ));
                }
                if registry.get(&spec.template).is_none() {
                    return Err(SchemaError::UnresolvedTemplate {
                        relation: rel.name.clone(),
                        attribute: spec.attribute.clone(),
                        template: spec.template.clone(),
                    });
                }
            }
        }

        let mut seen = HashMap::new();
        for ty in &self.entities {
            if let Some(prev) = seen.insert(canonical_key(ty), ty) {
                return invalid(format!("duplicate entity type '{ty}' (also '{prev}')"));
            }
        }

        let mut seen = HashMap::new();
        for ev in &self.events {
            if let Some(prev) = seen.insert(canonical_key(&ev.name), &ev.name) {
                return invalid(format!("duplicate event type '{}' (also '{prev}')", ev.name));
            }
            if ev.roles.is_empty() {
                return invalid(format!("event type '{}' has no argument roles", ev.name));
            }
            let mut roles = HashMap::new();
            for role in &ev.roles {
                if let Some(prev) = roles.insert(canonical_key(role), role) {
                    return invalid(format!(
                        "event type '{}' repeats role '{role}' (also '{prev}')",
                        ev.name
                    ));
                }
            }
        }

        for (a, b) in &self.inverse_relations {
            if a.trim().is_empty() || b.trim().is_empty() {
                return invalid("inverse_relations pair with empty member".into());
            }
            let known = |name: &str| {
                self.relations
                    .iter()
                    .any(|r| canonical_key(&r.name) == canonical_key(name))
            };
            if !known(a) && !known(b) {
                return invalid(format!(
                    "inverse pair ('{a}', '{b}') references no relation in the inventory"
                ));
            }
        }
        Ok(())
    }

    /// Find a relation by canonicalized name.
    pub fn lookup_relation(&self, name: &str) -> Result<&RelationType, SchemaError> {
        let key = canonical_key(name);
        self.relations
            .iter()
            .find(|r| canonical_key(&r.name) == key)
            .ok_or_else(|| SchemaError::UnknownType(name.to_string()))
    }

    pub fn lookup_event(&self, name: &str) -> Result<&EventTypeSpec, SchemaError> {
        let key = canonical_key(name);
        self.events
            .iter()
            .find(|e| canonical_key(&e.name) == key)
            .ok_or_else(|| SchemaError::UnknownType(name.to_string()))
    }

    pub fn lookup_entity_type(&self, name: &str) -> Result<&str, SchemaError> {
        let key = canonical_key(name);
        self.entities
            .iter()
            .find(|t| canonical_key(t) == key)
            .map(String::as_str)
            .ok_or_else(|| SchemaError::UnknownType(name.to_string()))
    }

    /// The Stage I type inventory for this schema's task, in declaration order.
    pub fn type_inventory(&self) -> Vec<&str> {
        match self.task {
            Task::Re => self.relations.iter().map(|r| r.name.as_str()).collect(),
            Task::Ner => self.entities.iter().map(String::as_str).collect(),
            Task::Ee => self.events.iter().map(|e| e.name.as_str()).collect(),
        }
    }

    /// Relation names valid in gold data: the inventory plus any aliases
    /// introduced by inverse-relation declarations.
    pub fn gold_relation_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.relations.iter().map(|r| r.name.as_str()).collect();
        for (a, b) in &self.inverse_relations {
            for name in [a.as_str(), b.as_str()] {
                if !names.iter().any(|n| canonical_key(n) == canonical_key(name)) {
                    names.push(name);
                }
            }
        }
        names
    }
}

/// Convenience wrapper matching the file-oriented loader name used by the CLI.
pub fn load_schema(path: impl AsRef<Path>) -> Result<TaskSchema, SchemaError> {
    TaskSchema::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re_schema_toml() -> &'static str {
        r#"
            task = "re"
            language = "en"
            inverse_relations = [["location-contains", "location-located_in"]]

            [[relations]]
            name = "location-located_in"
            subject_type = "location"
            object_type = "location"

            [[relations]]
            name = "person-nationality"
            subject_type = "person"
            object_type = "country"
        "#
    }

    #[test]
    fn loads_and_validates_re_schema() {
        let schema = TaskSchema::from_toml(re_schema_toml(), TemplateRegistry::builtin()).unwrap();
        assert_eq!(schema.task, Task::Re);
        assert_eq!(schema.relations.len(), 2);
        assert_eq!(schema.type_inventory(), vec!["location-located_in", "person-nationality"]);
        assert!(schema.gold_relation_names().contains(&"location-contains"));
    }

    #[test]
    fn lookup_is_case_insensitive_but_separator_exact() {
        let schema = TaskSchema::from_toml(re_schema_toml(), TemplateRegistry::builtin()).unwrap();
        let rel = schema.lookup_relation("Person-Nationality").unwrap();
        assert_eq!(rel.subject_type, "person");
        assert_eq!(rel.object_type, "country");
        assert!(schema.lookup_relation("person_nationality").is_err());
        assert!(matches!(
            schema.lookup_relation("not-a-relation"),
            Err(SchemaError::UnknownType(_))
        ));
    }

    #[test]
    fn duplicate_relation_names_rejected() {
        let toml = r#"
            task = "re"
            language = "en"
            [[relations]]
            name = "person-company"
            subject_type = "person"
            object_type = "organization"
            [[relations]]
            name = "Person-Company"
            subject_type = "person"
            object_type = "organization"
        "#;
        let err = TaskSchema::from_toml(toml, TemplateRegistry::builtin()).unwrap_err();
        assert!(matches!(err, SchemaError::Invalid(msg) if msg.contains("duplicate relation")));
    }

    #[test]
    fn unknown_fields_rejected() {
        let toml = r#"
            task = "ner"
            language = "en"
            entities = ["LOC"]
            bogus = 1
        "#;
        assert!(matches!(
            TaskSchema::from_toml(toml, TemplateRegistry::builtin()),
            Err(SchemaError::Malformed(_))
        ));
    }

    #[test]
    fn skip_stage1_requires_ner() {
        let toml = r#"
            task = "ee"
            language = "en"
            skip_stage1 = true
            [[events]]
            name = "Life:Die"
            roles = ["Agent"]
        "#;
        assert!(matches!(
            TaskSchema::from_toml(toml, TemplateRegistry::builtin()),
            Err(SchemaError::Invalid(_))
        ));
    }

    #[test]
    fn unresolved_chain_template_named_in_error() {
        let toml = r#"
            task = "re"
            language = "en"
            [[relations]]
            name = "award"
            subject_type = "person"
            object_type = "prize"
            object_chain = [{ attribute = "year", template = "no-such-template" }]
        "#;
        let err = TaskSchema::from_toml(toml, TemplateRegistry::builtin()).unwrap_err();
        assert!(matches!(
            err,
            SchemaError::UnresolvedTemplate { ref template, .. } if template == "no-such-template"
        ));
    }

    #[test]
    fn canonical_key_rules() {
        assert_eq!(canonical_key("  'Person-Nationality' "), "person-nationality");
        assert_eq!(canonical_key("\u{2018}LOC\u{2019}"), "loc");
        assert_eq!(canonical_key("Life:Die"), "life:die");
        assert_eq!(canonical_key("a   b\tc"), "a b c");
        assert_ne!(canonical_key("person_company"), canonical_key("person-company"));
    }

    #[test]
    fn round_trips_through_toml() {
        let schema = TaskSchema::from_toml(re_schema_toml(), TemplateRegistry::builtin()).unwrap();
        let text = schema.to_toml();
        let again = TaskSchema::from_toml(&text, TemplateRegistry::builtin()).unwrap();
        assert_eq!(schema, again);
    }
}
