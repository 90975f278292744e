//! Loaders for the benchmark gold annotations, normalized onto a task
//! schema at load time so scoring never meets an unknown label.
//!
//! Every format is line-delimited (JSON records or CoNLL token blocks) and
//! documented field-by-field in `docs/file-formats.md`. Loading is
//! deterministic and order-preserving; gold relation labels may use either
//! member of an inverse-relation declaration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::schema::{canonical_key, Language, Task, TaskSchema};
use crate::types::{Entity, EventRecord, GoldAnnotation, Sample, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Nyt11,
    Duie2,
    Conllpp,
    Msra,
    Duee1,
    Ace05Lines,
}

impl DatasetFormat {
    pub fn task(self) -> Task {
        match self {
            DatasetFormat::Nyt11 | DatasetFormat::Duie2 => Task::Re,
            DatasetFormat::Conllpp | DatasetFormat::Msra => Task::Ner,
            DatasetFormat::Duee1 | DatasetFormat::Ace05Lines => Task::Ee,
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DatasetFormat::Nyt11 => "nyt11",
            DatasetFormat::Duie2 => "duie2",
            DatasetFormat::Conllpp => "conllpp",
            DatasetFormat::Msra => "msra",
            DatasetFormat::Duee1 => "duee1",
            DatasetFormat::Ace05Lines => "ace05-lines",
        };
        write!(f, "{name}")
    }
}

impl FromStr for DatasetFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| format!("unknown dataset format '{s}'"))
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },
    #[error("unknown label '{label}' on line {line} (not in schema and not an alias)")]
    UnknownLabel { line: usize, label: String },
    #[error("dataset format {format} is for task {expected}, schema is for {got}")]
    TaskMismatch {
        format: DatasetFormat,
        expected: Task,
        got: Task,
    },
    #[error("bad subsample size {n} for {len} samples")]
    BadSize { n: usize, len: usize },
}

/// Load a dataset file into samples with gold annotations attached.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    schema: &TaskSchema,
) -> Result<Vec<Sample>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_records(&text, format, schema)
}

/// Parse dataset records from text; `load_dataset` is the file-backed front.
pub fn load_records(
    text: &str,
    format: DatasetFormat,
    schema: &TaskSchema,
) -> Result<Vec<Sample>, DatasetError> {
    if format.task() != schema.task {
        return Err(DatasetError::TaskMismatch {
            format,
            expected: format.task(),
            got: schema.task,
        });
    }
    match format {
        DatasetFormat::Nyt11 => load_nyt11(text, schema),
        DatasetFormat::Duie2 => load_duie2(text, schema),
        DatasetFormat::Conllpp | DatasetFormat::Msra => load_token_tag(text, format, schema),
        DatasetFormat::Duee1 => load_events(text, schema, "duee1", "text", "argument"),
        DatasetFormat::Ace05Lines => load_events(text, schema, "ace05", "sentence", "content"),
    }
}

fn json_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Deserialize)]
struct Nyt11Record {
    #[serde(default)]
    id: Option<String>,
    #[serde(rename = "sentText")]
    sent_text: String,
    #[serde(rename = "relationMentions", default)]
    relation_mentions: Vec<Nyt11Mention>,
}

#[derive(Deserialize)]
struct Nyt11Mention {
    #[serde(rename = "em1Text")]
    em1_text: String,
    label: String,
    #[serde(rename = "em2Text")]
    em2_text: String,
}

fn load_nyt11(text: &str, schema: &TaskSchema) -> Result<Vec<Sample>, DatasetError> {
    let known = schema.gold_relation_names();
    let mut samples = Vec::new();
    for (line, raw) in json_lines(text) {
        let record: Nyt11Record =
            serde_json::from_str(raw).map_err(|e| DatasetError::MalformedRecord {
                line,
                msg: e.to_string(),
            })?;
        let mut triples = BTreeSet::new();
        for mention in record.relation_mentions {
            let label = known
                .iter()
                .find(|name| canonical_key(name) == canonical_key(&mention.label))
                .ok_or_else(|| DatasetError::UnknownLabel {
                    line,
                    label: mention.label.clone(),
                })?;
            triples.insert(Triple::new(mention.em1_text, *label, mention.em2_text));
        }
        let id = record.id.unwrap_or_else(|| format!("nyt11-{}", samples.len()));
        samples.push(Sample::new(id, record.sent_text).with_gold(GoldAnnotation::Triples(triples)));
    }
    Ok(samples)
}

#[derive(Deserialize)]
struct Duie2Record {
    #[serde(default)]
    id: Option<String>,
    text: String,
    #[serde(default)]
    spo_list: Vec<Duie2Spo>,
}

#[derive(Deserialize)]
struct Duie2Spo {
    predicate: String,
    subject: String,
    #[serde(default)]
    subject_type: Option<String>,
    object: Value,
    #[serde(default)]
    object_type: Option<Value>,
}

fn at_value(value: &Value) -> Option<&str> {
    match value {
        Value::String(s) => Some(s),
        Value::Object(map) => map.get("@value").and_then(Value::as_str),
        _ => None,
    }
}

fn load_duie2(text: &str, schema: &TaskSchema) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    for (line, raw) in json_lines(text) {
        let record: Duie2Record =
            serde_json::from_str(raw).map_err(|e| DatasetError::MalformedRecord {
                line,
                msg: e.to_string(),
            })?;
        let mut triples = BTreeSet::new();
        for spo in record.spo_list {
            let relation =
                schema
                    .lookup_relation(&spo.predicate)
                    .map_err(|_| DatasetError::UnknownLabel {
                        line,
                        label: spo.predicate.clone(),
                    })?;
            let object = at_value(&spo.object).ok_or_else(|| DatasetError::MalformedRecord {
                line,
                msg: format!("object of '{}' has no @value", spo.predicate),
            })?;
            // Types are normalized onto the schema's declared spelling; a
            // record disagreeing with the schema is a labeling error.
            for (field, declared, got) in [
                ("subject_type", &relation.subject_type, spo.subject_type.as_deref()),
                (
                    "object_type",
                    &relation.object_type,
                    spo.object_type.as_ref().and_then(at_value),
                ),
            ] {
                if let Some(got) = got {
                    if canonical_key(got) != canonical_key(declared) {
                        return Err(DatasetError::UnknownLabel {
                            line,
                            label: format!("{field} '{got}' (schema declares '{declared}')"),
                        });
                    }
                }
            }
            let mut triple = Triple::new(spo.subject, relation.name.clone(), object)
                .with_types(relation.subject_type.clone(), relation.object_type.clone());
            if let Value::Object(map) = &spo.object {
                for (key, value) in map {
                    if key == "@value" {
                        continue;
                    }
                    let attr = relation
                        .object_chain
                        .iter()
                        .find(|a| canonical_key(&a.attribute) == canonical_key(key))
                        .ok_or_else(|| DatasetError::UnknownLabel {
                            line,
                            label: format!("attribute '{key}' of '{}'", relation.name),
                        })?;
                    let value = value.as_str().ok_or_else(|| DatasetError::MalformedRecord {
                        line,
                        msg: format!("attribute '{key}' value is not a string"),
                    })?;
                    triple
                        .attributes
                        .insert(attr.attribute.clone(), value.to_string());
                }
            }
            triples.insert(triple);
        }
        let id = record.id.unwrap_or_else(|| format!("duie2-{}", samples.len()));
        samples.push(Sample::new(id, record.text).with_gold(GoldAnnotation::Triples(triples)));
    }
    Ok(samples)
}

/// Shared CoNLL-style loader: one token per line with its tag in the last
/// column, blank lines separating sentences. Contiguous same-type tokens are
/// concatenated into surface-string entities (BIO boundaries honored).
fn load_token_tag(
    text: &str,
    format: DatasetFormat,
    schema: &TaskSchema,
) -> Result<Vec<Sample>, DatasetError> {
    let joiner = match schema.language {
        Language::En => " ",
        Language::Zh => "",
    };
    let prefix = match format {
        DatasetFormat::Conllpp => "conllpp",
        _ => "msra",
    };
    let mut samples = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut entities: BTreeSet<Entity> = BTreeSet::new();
    let mut current: Option<(Vec<String>, String)> = None;

    let flush_entity =
        |current: &mut Option<(Vec<String>, String)>, entities: &mut BTreeSet<Entity>| {
            if let Some((parts, ty)) = current.take() {
                entities.insert(Entity::new(parts.join(joiner), ty));
            }
        };

    let mut lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    lines.push((lines.len() + 1, "")); // sentinel terminator

    for (line, raw) in lines {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            flush_entity(&mut current, &mut entities);
            if !tokens.is_empty() {
                let sentence = tokens.join(joiner);
                let id = format!("{prefix}-{}", samples.len());
                samples.push(
                    Sample::new(id, sentence)
                        .with_gold(GoldAnnotation::Entities(std::mem::take(&mut entities))),
                );
                tokens.clear();
            }
            continue;
        }
        let mut columns = trimmed.split_whitespace();
        let token = columns.next().expect("non-empty line");
        let tag = columns.last().unwrap_or("O");
        tokens.push(token.to_string());
        if tag == "O" {
            flush_entity(&mut current, &mut entities);
            continue;
        }
        let (bio, ty) = tag.split_once('-').ok_or(DatasetError::MalformedRecord {
            line,
            msg: format!("tag '{tag}' is neither O nor BIO"),
        })?;
        let ty = schema
            .lookup_entity_type(ty)
            .map_err(|_| DatasetError::UnknownLabel {
                line,
                label: tag.to_string(),
            })?
            .to_string();
        match bio {
            "B" => {
                flush_entity(&mut current, &mut entities);
                current = Some((vec![token.to_string()], ty));
            }
            "I" => match &mut current {
                Some((parts, cur_ty)) if *cur_ty == ty => parts.push(token.to_string()),
                _ => {
                    // Lenient IOB1-style continuation without a B opener.
                    flush_entity(&mut current, &mut entities);
                    current = Some((vec![token.to_string()], ty));
                }
            },
            other => {
                return Err(DatasetError::MalformedRecord {
                    line,
                    msg: format!("unknown BIO prefix '{other}'"),
                })
            }
        }
    }
    Ok(samples)
}

fn load_events(
    text: &str,
    schema: &TaskSchema,
    prefix: &str,
    sentence_field: &str,
    content_field: &str,
) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    for (line, raw) in json_lines(text) {
        let record: Value = serde_json::from_str(raw).map_err(|e| DatasetError::MalformedRecord {
            line,
            msg: e.to_string(),
        })?;
        let sentence = record
            .get(sentence_field)
            .and_then(Value::as_str)
            .ok_or_else(|| DatasetError::MalformedRecord {
                line,
                msg: format!("missing '{sentence_field}' field"),
            })?;
        let events_field = if record.get("event_list").is_some() {
            "event_list"
        } else {
            "events"
        };
        let empty = Vec::new();
        let raw_events = record
            .get(events_field)
            .and_then(Value::as_array)
            .unwrap_or(&empty);

        // Same-type instances merge into one record with pooled arguments,
        // mirroring how Stage II composes reply rows.
        let mut by_type: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for event in raw_events {
            let ty = event
                .get("event_type")
                .and_then(Value::as_str)
                .ok_or_else(|| DatasetError::MalformedRecord {
                    line,
                    msg: "event without event_type".into(),
                })?;
            let spec = schema
                .lookup_event(ty)
                .map_err(|_| DatasetError::UnknownLabel {
                    line,
                    label: ty.to_string(),
                })?;
            let arguments = by_type.entry(spec.name.clone()).or_default();
            for argument in event
                .get("arguments")
                .and_then(Value::as_array)
                .unwrap_or(&empty)
            {
                let role = argument
                    .get("role")
                    .and_then(Value::as_str)
                    .ok_or_else(|| DatasetError::MalformedRecord {
                        line,
                        msg: "argument without role".into(),
                    })?;
                let role = spec
                    .roles
                    .iter()
                    .find(|r| canonical_key(r) == canonical_key(role))
                    .ok_or_else(|| DatasetError::UnknownLabel {
                        line,
                        label: format!("role '{role}' of '{}'", spec.name),
                    })?;
                let content = argument
                    .get(content_field)
                    .or_else(|| argument.get("argument"))
                    .or_else(|| argument.get("content"))
                    .and_then(Value::as_str)
                    .ok_or_else(|| DatasetError::MalformedRecord {
                        line,
                        msg: format!("argument without '{content_field}'"),
                    })?;
                arguments.push((role.clone(), content.to_string()));
            }
        }
        let events: BTreeSet<EventRecord> = by_type
            .into_iter()
            .map(|(ty, arguments)| EventRecord::new(ty, arguments))
            .collect();
        let id = record
            .get("id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("{prefix}-{}", samples.len()));
        samples.push(Sample::new(id, sentence).with_gold(GoldAnnotation::Events(events)));
    }
    Ok(samples)
}

/// Deterministic pseudo-random subset: same `(n, seed)` picks the same
/// samples on every platform, and the subset preserves input order.
pub fn subsample(samples: &[Sample], n: usize, seed: u64) -> Result<Vec<Sample>, DatasetError> {
    if n == 0 || n > samples.len() {
        return Err(DatasetError::BadSize {
            n,
            len: samples.len(),
        });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    for i in 0..n {
        let j = i + (rng.next_u64() as usize) % (indices.len() - i);
        indices.swap(i, j);
    }
    let mut picked: Vec<usize> = indices[..n].to_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| samples[i].clone()).collect())
}
