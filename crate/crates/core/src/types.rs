//! Domain values shared across the pipeline, datasets, and scoring.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::schema::Task;

/// One input sentence, optionally with its gold annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub sentence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<GoldAnnotation>,
}

impl Sample {
    pub fn new(id: impl Into<String>, sentence: impl Into<String>) -> Self {
        Sample {
            id: id.into(),
            sentence: sentence.into(),
            gold: None,
        }
    }

    pub fn with_gold(mut self, gold: GoldAnnotation) -> Self {
        self.gold = Some(gold);
        self
    }
}

/// An extracted or gold relation triple. `attributes` carries the chained
/// values of a complex object; entity types are present only when the source
/// annotates them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
            subject_type: None,
            object_type: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_types(mut self, subject_type: impl Into<String>, object_type: impl Into<String>) -> Self {
        self.subject_type = Some(subject_type.into());
        self.object_type = Some(object_type.into());
        self
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: String,
}

impl Entity {
    pub fn new(name: impl Into<String>, entity_type: impl Into<String>) -> Self {
        Entity {
            name: name.into(),
            entity_type: entity_type.into(),
        }
    }
}

/// One event with its argument fillers. Arguments are kept sorted and
/// deduplicated; multiple gold instances of the same event type in one
/// sentence are merged into one record (argument tuples pooled), matching
/// how Stage II composes reply rows.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_type: String,
    /// `(role, content)` pairs, sorted, no duplicates.
    pub arguments: Vec<(String, String)>,
}

impl EventRecord {
    pub fn new(event_type: impl Into<String>, mut arguments: Vec<(String, String)>) -> Self {
        arguments.sort();
        arguments.dedup();
        EventRecord {
            event_type: event_type.into(),
            arguments,
        }
    }
}

/// Gold annotation for one sample, tagged by task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldAnnotation {
    Triples(BTreeSet<Triple>),
    Entities(BTreeSet<Entity>),
    Events(BTreeSet<EventRecord>),
}

impl GoldAnnotation {
    pub fn task(&self) -> Task {
        match self {
            GoldAnnotation::Triples(_) => Task::Re,
            GoldAnnotation::Entities(_) => Task::Ner,
            GoldAnnotation::Events(_) => Task::Ee,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            GoldAnnotation::Triples(t) => t.is_empty(),
            GoldAnnotation::Entities(e) => e.is_empty(),
            GoldAnnotation::Events(e) => e.is_empty(),
        }
    }
}

/// Task-specific structured payload of an extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    Triples(BTreeSet<Triple>),
    Entities(BTreeSet<Entity>),
    Events(BTreeSet<EventRecord>),
}

impl Extraction {
    pub fn task(&self) -> Task {
        match self {
            Extraction::Triples(_) => Task::Re,
            Extraction::Entities(_) => Task::Ner,
            Extraction::Events(_) => Task::Ee,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Extraction::Triples(t) => t.len(),
            Extraction::Entities(e) => e.len(),
            Extraction::Events(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The structured output for one sample together with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub sample_id: String,
    pub task: Task,
    #[serde(flatten)]
    pub extraction: Extraction,
    pub turns_used: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Transcript key of the conversation's first turn, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_ref: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_arguments_sorted_and_deduped() {
        let ev = EventRecord::new(
            "Life:Die",
            vec![
                ("Victim".into(), "b".into()),
                ("Agent".into(), "a".into()),
                ("Agent".into(), "a".into()),
            ],
        );
        assert_eq!(
            ev.arguments,
            vec![("Agent".into(), "a".into()), ("Victim".into(), "b".into())]
        );
    }

    #[test]
    fn extraction_result_serializes_with_flat_payload() {
        let mut triples = BTreeSet::new();
        triples.insert(Triple::new("Jacques Chirac", "person-nationality", "France"));
        let result = ExtractionResult {
            sample_id: "s1".into(),
            task: Task::Re,
            extraction: Extraction::Triples(triples),
            turns_used: 2,
            warnings: vec![],
            transcript_ref: None,
        };
        let json = serde_json::to_string(&result).unwrap();
        assert!(json.contains("\"triples\""));
        let back: ExtractionResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, result);
    }
}
