//! Random schema-valid fixtures for property tests, the acceptance suite,
//! and benchmarks. Generated strings stay inside the reply grammars'
//! round-trippable alphabet (lowercase words, single spaces) so the gold
//! oracle can format them.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::schema::{Language, Task, TaskSchema};
use crate::types::{Entity, EventRecord, GoldAnnotation, Sample, Triple};

pub struct SynthRng(ChaCha8Rng);

impl SynthRng {
    pub fn seed(seed: u64) -> Self {
        SynthRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn range(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.0.next_u64() % bound as u64) as usize
    }

    pub fn chance(&mut self, percent: usize) -> bool {
        self.range(100) < percent
    }

    fn letters(&mut self, len: usize) -> String {
        (0..len)
            .map(|_| (b'a' + self.range(26) as u8) as char)
            .collect()
    }

    pub fn word(&mut self) -> String {
        let len = 3 + self.range(6);
        self.letters(len)
    }

    pub fn phrase(&mut self, max_words: usize) -> String {
        let n = 1 + self.range(max_words);
        (0..n).map(|_| self.word()).collect::<Vec<_>>().join(" ")
    }

    fn distinct_words(&mut self, n: usize) -> Vec<String> {
        let mut words = Vec::new();
        while words.len() < n {
            let word = self.word();
            if !words.contains(&word) {
                words.push(word);
            }
        }
        words
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub language: Language,
    /// Give roughly half of the relations a chained-attribute plan.
    pub with_chains: bool,
    pub skip_stage1: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            language: Language::En,
            with_chains: false,
            skip_stage1: false,
        }
    }
}

/// A random valid schema for `task`, drawing on the built-in templates.
pub fn random_schema(task: Task, options: SynthOptions, rng: &mut SynthRng) -> TaskSchema {
    let chain_template = match options.language {
        Language::En => "re.chain.en",
        Language::Zh => "re.chain.zh",
    };
    let mut schema = TaskSchema {
        task,
        language: options.language,
        relations: Vec::new(),
        entities: Vec::new(),
        events: Vec::new(),
        skip_stage1: options.skip_stage1 && task == Task::Ner,
        inverse_relations: Vec::new(),
    };
    match task {
        Task::Re => {
            let n = 3 + rng.range(5);
            let names = rng.distinct_words(2 * n);
            let type_pool = ["person", "location", "organization", "work", "country"];
            for i in 0..n {
                let mut relation = crate::schema::RelationType {
                    name: format!("{}-{}", names[2 * i], names[2 * i + 1]),
                    subject_type: type_pool[rng.range(type_pool.len())].to_string(),
                    object_type: type_pool[rng.range(type_pool.len())].to_string(),
                    object_chain: Vec::new(),
                };
                if options.with_chains && rng.chance(50) {
                    let chain_len = 1 + rng.range(3);
                    let attrs = rng.distinct_words(chain_len);
                    relation.object_chain = attrs
                        .into_iter()
                        .map(|attribute| crate::schema::AttributeSpec {
                            attribute,
                            template: chain_template.to_string(),
                        })
                        .collect();
                }
                schema.relations.push(relation);
            }
        }
        Task::Ner => {
            let n = 3 + rng.range(4);
            schema.entities = rng
                .distinct_words(n)
                .into_iter()
                .map(|w| w.to_uppercase())
                .collect();
        }
        Task::Ee => {
            let n = 3 + rng.range(4);
            let names = rng.distinct_words(2 * n);
            for i in 0..n {
                let role_count = 2 + rng.range(4);
                let roles = rng
                    .distinct_words(role_count)
                    .into_iter()
                    .map(|w| capitalize(&w))
                    .collect();
                schema.events.push(crate::schema::EventTypeSpec {
                    name: format!("{}:{}", capitalize(&names[2 * i]), capitalize(&names[2 * i + 1])),
                    roles,
                });
            }
        }
    }
    schema
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A non-empty random gold annotation valid under `schema`.
///
/// Constraints beyond validity keep the oracle round trip unambiguous:
/// objects are unique within a sample (a two-column attribute reply keys
/// rows by object), at most one event per type (same-type instances merge),
/// and every event carries at least one argument.
pub fn random_gold(schema: &TaskSchema, rng: &mut SynthRng) -> GoldAnnotation {
    match schema.task {
        Task::Re => {
            let n = 1 + rng.range(4);
            let mut used_objects: Vec<String> = Vec::new();
            let mut triples = BTreeSet::new();
            for _ in 0..n {
                let relation = &schema.relations[rng.range(schema.relations.len())];
                let mut object = rng.phrase(2);
                while used_objects.contains(&object) {
                    object = rng.phrase(2);
                }
                used_objects.push(object.clone());
                let mut triple = Triple::new(rng.phrase(2), relation.name.clone(), object)
                    .with_types(relation.subject_type.clone(), relation.object_type.clone());
                for spec in &relation.object_chain {
                    if rng.chance(70) {
                        triple
                            .attributes
                            .insert(spec.attribute.clone(), rng.phrase(2));
                    }
                }
                triples.insert(triple);
            }
            GoldAnnotation::Triples(triples)
        }
        Task::Ner => {
            let n = 1 + rng.range(4);
            let entities = (0..n)
                .map(|_| {
                    Entity::new(
                        rng.phrase(2),
                        schema.entities[rng.range(schema.entities.len())].clone(),
                    )
                })
                .collect();
            GoldAnnotation::Entities(entities)
        }
        Task::Ee => {
            let count = 1 + rng.range(schema.events.len().min(3));
            let mut picked: Vec<usize> = Vec::new();
            while picked.len() < count {
                let i = rng.range(schema.events.len());
                if !picked.contains(&i) {
                    picked.push(i);
                }
            }
            let events = picked
                .into_iter()
                .map(|i| {
                    let spec = &schema.events[i];
                    let n_args = 1 + rng.range(3.min(spec.roles.len()));
                    let arguments = (0..n_args)
                        .map(|_| {
                            (
                                spec.roles[rng.range(spec.roles.len())].clone(),
                                rng.phrase(3),
                            )
                        })
                        .collect();
                    EventRecord::new(spec.name.clone(), arguments)
                })
                .collect();
            GoldAnnotation::Events(events)
        }
    }
}

/// A sample whose sentence mentions every gold string, with filler between.
pub fn sample_with_gold(schema: &TaskSchema, id: impl Into<String>, rng: &mut SynthRng) -> Sample {
    let gold = random_gold(schema, rng);
    let mut mentions: Vec<String> = Vec::new();
    match &gold {
        GoldAnnotation::Triples(triples) => {
            for t in triples {
                mentions.push(t.subject.clone());
                mentions.push(t.object.clone());
                mentions.extend(t.attributes.values().cloned());
            }
        }
        GoldAnnotation::Entities(entities) => {
            mentions.extend(entities.iter().map(|e| e.name.clone()));
        }
        GoldAnnotation::Events(events) => {
            for e in events {
                mentions.extend(e.arguments.iter().map(|(_, c)| c.clone()));
            }
        }
    }
    let mut sentence = String::new();
    for mention in mentions {
        sentence.push_str(&mention);
        sentence.push(' ');
        sentence.push_str(&rng.word());
        sentence.push(' ');
    }
    sentence.push_str(&rng.word());
    Sample::new(id, sentence).with_gold(gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::TemplateRegistry;

    #[test]
    fn generated_schemas_validate() {
        let mut rng = SynthRng::seed(1);
        for task in [Task::Re, Task::Ner, Task::Ee] {
            for _ in 0..20 {
                let options = SynthOptions {
                    with_chains: true,
                    skip_stage1: task == Task::Ner,
                    ..SynthOptions::default()
                };
                let schema = random_schema(task, options, &mut rng);
                let text = schema.to_toml();
                TaskSchema::from_toml(&text, TemplateRegistry::builtin())
                    .expect("generated schema must validate");
            }
        }
    }

    #[test]
    fn generated_gold_is_non_empty_and_deterministic() {
        let mut a = SynthRng::seed(42);
        let mut b = SynthRng::seed(42);
        let schema = random_schema(Task::Re, SynthOptions::default(), &mut a);
        let schema_b = random_schema(Task::Re, SynthOptions::default(), &mut b);
        assert_eq!(schema, schema_b);
        let gold = random_gold(&schema, &mut a);
        let gold_b = random_gold(&schema_b, &mut b);
        assert_eq!(gold, gold_b);
        assert!(!gold.is_empty());
    }

    #[test]
    fn sample_sentence_contains_gold_mentions() {
        let mut rng = SynthRng::seed(7);
        let schema = random_schema(Task::Ner, SynthOptions::default(), &mut rng);
        let sample = sample_with_gold(&schema, "s0", &mut rng);
        let GoldAnnotation::Entities(entities) = sample.gold.as_ref().unwrap() else {
            panic!()
        };
        for entity in entities {
            assert!(sample.sentence.contains(&entity.name));
        }
    }
}
