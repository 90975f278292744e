//! Prompt templates and rendering.
//!
//! Templates are TOML documents, one file per (task, language) set, with a
//! named-slot body. Slots are written `{{name}}`; a literal `{{` or `}}` is
//! doubled (`{{{{`, `}}}}`). The delimiters never occur in natural prompt
//! text, so no further escaping is needed. Rendering is pure: identical
//! inputs yield identical text, and a complete binding leaves no unfilled
//! slot marker behind.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{Language, Task, TaskSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stage {
    One,
    Two,
}

impl TryFrom<u8> for Stage {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            other => Err(format!("stage must be 1 or 2, got {other}")),
        }
    }
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        match s {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

/// The reply shape a prompt asks for; drives both parsing and the gold
/// oracle's formatting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerForm {
    TypeTuple,
    TypeList,
    PairTable,
    EntityList,
    RoleTable,
    EventTypeLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub id: String,
    pub task: Task,
    pub stage: Stage,
    pub language: Language,
    pub answer_form: AnswerForm,
    /// Declared slot names; every slot used in `body` must appear here.
    pub slots: Vec<String>,
    /// Marks the chained-attribute follow-up template for complex objects.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub chain: bool,
    pub body: String,
}

/// A concrete question produced from a template plus slot bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub text: String,
    pub answer_form: AnswerForm,
    /// The element type a Stage II question asks about (relation, entity
    /// type, or event type). Absent for Stage I.
    pub element_type: Option<String>,
    /// The chained attribute a follow-up question asks for.
    pub attribute: Option<String>,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("failed to read template file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed template document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("template '{template}': {msg}")]
    Invalid { template: String, msg: String },
    #[error("duplicate template id '{0}'")]
    DuplicateId(String),
    #[error("no template registered for ({task}, stage {stage:?}, {language})")]
    NotFound {
        task: Task,
        stage: Stage,
        language: Language,
    },
    #[error("template '{template}' used with task {got}, expects {want}")]
    TaskMismatch {
        template: String,
        want: String,
        got: String,
    },
    #[error("missing binding for slot '{slot}' in template '{template}'")]
    SlotMissing { slot: String, template: String },
    #[error("sentence must be non-empty")]
    EmptySentence,
}

#[derive(Deserialize)]
struct TemplateFile {
    templates: Vec<PromptTemplate>,
}

/// Immutable template store keyed by id. Rendering borrows from it freely
/// across threads.
#[derive(Debug, Default)]
pub struct TemplateRegistry {
    by_id: HashMap<String, PromptTemplate>,
}

static BUILTIN: LazyLock<TemplateRegistry> = LazyLock::new(|| {
    let docs = [
        include_str!("../../../assets/templates/re_en.toml"),
        include_str!("../../../assets/templates/ner_en.toml"),
        include_str!("../../../assets/templates/ee_en.toml"),
        include_str!("../../../assets/templates/re_zh.toml"),
        include_str!("../../../assets/templates/ner_zh.toml"),
        include_str!("../../../assets/templates/ee_zh.toml"),
    ];
    let mut registry = TemplateRegistry::default();
    for doc in docs {
        registry
            .merge_toml(doc)
            .expect("built-in template documents are valid");
    }
    registry
});

impl TemplateRegistry {
    /// The compiled-in template set covering all shipped benchmarks.
    pub fn builtin() -> &'static TemplateRegistry {
        &BUILTIN
    }

    pub fn from_toml(text: &str) -> Result<Self, TemplateError> {
        let mut registry = TemplateRegistry::default();
        registry.merge_toml(text)?;
        Ok(registry)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Parse a template document and add its templates to this registry.
    pub fn merge_toml(&mut self, text: &str) -> Result<(), TemplateError> {
        let file: TemplateFile = toml::from_str(text)?;
        for template in file.templates {
            validate_template(&template)?;
            if self.by_id.contains_key(&template.id) {
                return Err(TemplateError::DuplicateId(template.id));
            }
            self.by_id.insert(template.id.clone(), template);
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.by_id.get(id)
    }

    /// The default (non-chain) template for a task/stage/language combination.
    pub fn find(
        &self,
        task: Task,
        stage: Stage,
        language: Language,
    ) -> Result<&PromptTemplate, TemplateError> {
        self.by_id
            .values()
            .find(|t| t.task == task && t.stage == stage && t.language == language && !t.chain)
            .ok_or(TemplateError::NotFound {
                task,
                stage,
                language,
            })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.by_id.keys().map(String::as_str)
    }
}

/// Serialize a type inventory the way prompts embed it: bracketed,
/// comma-separated, each name in straight single quotes.
pub fn quoted_list<S: AsRef<str>>(names: &[S]) -> String {
    let mut out = String::from("[");
    for (i, name) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('\'');
        out.push_str(name.as_ref());
        out.push('\'');
    }
    out.push(']');
    out
}

/// The two-column table header used by pair questions: `('person', 'country')`.
pub fn tuple_header(subject_type: &str, object_type: &str) -> String {
    format!("('{subject_type}', '{object_type}')")
}

fn validate_template(template: &PromptTemplate) -> Result<(), TemplateError> {
    let invalid = |msg: String| {
        Err(TemplateError::Invalid {
            template: template.id.clone(),
            msg,
        })
    };
    let used = match body_slots(&template.body) {
        Ok(used) => used,
        Err(msg) => return invalid(msg),
    };
    for slot in &used {
        if !template.slots.iter().any(|s| s == slot) {
            return invalid(format!("body uses undeclared slot '{slot}'"));
        }
    }
    let declares = |slot: &str| template.slots.iter().any(|s| s == slot);
    match template.stage {
        Stage::One => {
            if !declares("sentence") {
                return invalid("stage 1 templates must declare a 'sentence' slot".into());
            }
            let inventory_slot = match template.task {
                Task::Re => "relation_inventory",
                Task::Ner => "entity_inventory",
                Task::Ee => "event_inventory",
            };
            if !declares(inventory_slot) {
                return invalid(format!("stage 1 templates must declare '{inventory_slot}'"));
            }
        }
        Stage::Two => {
            if declares("sentence") {
                return invalid(
                    "stage 2 templates rely on dialogue context and must not declare 'sentence'"
                        .into(),
                );
            }
        }
    }
    Ok(())
}

/// Slot names referenced by a body, in order of first appearance.
fn body_slots(body: &str) -> Result<Vec<String>, String> {
    let mut slots = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"{{{{") {
            i += 4;
        } else if bytes[i..].starts_with(b"}}}}") {
            i += 4;
        } else if bytes[i..].starts_with(b"{{") {
            let rest = &body[i + 2..];
            let Some(end) = rest.find("}}") else {
                return Err("unterminated '{{' slot marker".into());
            };
            let name = &rest[..end];
            if name.is_empty() || !name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
                return Err(format!("bad slot name '{name}' (use [a-z0-9_]+)"));
            }
            if !slots.iter().any(|s| s == name) {
                slots.push(name.to_string());
            }
            i += 2 + end + 2;
        } else {
            i += 1;
        }
    }
    Ok(slots)
}

fn render_body(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    let body = &template.body;
    let mut out = String::with_capacity(body.len());
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"{{{{") {
            out.push_str("{{");
            i += 4;
        } else if bytes[i..].starts_with(b"}}}}") {
            out.push_str("}}");
            i += 4;
        } else if bytes[i..].starts_with(b"{{") {
            let rest = &body[i + 2..];
            let end = rest.find("}}").expect("validated at load");
            let name = &rest[..end];
            let value = bindings.get(name).ok_or_else(|| TemplateError::SlotMissing {
                slot: name.to_string(),
                template: template.id.clone(),
            })?;
            out.push_str(value);
            i += 2 + end + 2;
        } else {
            let c = body[i..].chars().next().expect("in bounds");
            out.push(c);
            i += c.len_utf8();
        }
    }
    Ok(out)
}

/// Render a Stage I type question: the sentence plus the serialized type
/// inventory of `schema`.
pub fn render_stage1(
    template: &PromptTemplate,
    schema: &TaskSchema,
    sentence: &str,
) -> Result<RenderedPrompt, TemplateError> {
    if template.stage != Stage::One || template.task != schema.task {
        return Err(TemplateError::TaskMismatch {
            template: template.id.clone(),
            want: format!("({}, stage 1)", template.task),
            got: format!("({}, stage 1 render)", schema.task),
        });
    }
    if sentence.is_empty() {
        return Err(TemplateError::EmptySentence);
    }
    let inventory = quoted_list(&schema.type_inventory());
    let inventory_slot = match schema.task {
        Task::Re => "relation_inventory",
        Task::Ner => "entity_inventory",
        Task::Ee => "event_inventory",
    };
    let mut bindings = BTreeMap::new();
    bindings.insert("sentence".to_string(), sentence.to_string());
    bindings.insert(inventory_slot.to_string(), inventory);
    let text = render_body(template, &bindings)?;
    Ok(RenderedPrompt {
        template_id: template.id.clone(),
        text,
        answer_form: template.answer_form,
        element_type: None,
        attribute: None,
    })
}

/// Render a Stage II extraction question for one element type. `bindings`
/// must cover every slot the template declares.
pub fn render_stage2(
    template: &PromptTemplate,
    element_type: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<RenderedPrompt, TemplateError> {
    if template.stage != Stage::Two {
        return Err(TemplateError::TaskMismatch {
            template: template.id.clone(),
            want: "stage 2".into(),
            got: "stage 1 template".into(),
        });
    }
    let text = render_body(template, bindings)?;
    Ok(RenderedPrompt {
        template_id: template.id.clone(),
        text,
        answer_form: template.answer_form,
        element_type: Some(element_type.to_string()),
        attribute: None,
    })
}

/// Render a chained-attribute follow-up for a complex-object relation.
pub fn render_chain(
    template: &PromptTemplate,
    relation: &str,
    attribute: &str,
    bindings: &BTreeMap<String, String>,
) -> Result<RenderedPrompt, TemplateError> {
    let mut prompt = render_stage2(template, relation, bindings)?;
    prompt.attribute = Some(attribute.to_string());
    Ok(prompt)
}
