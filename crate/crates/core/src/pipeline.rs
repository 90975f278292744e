//! Two-stage extraction orchestration.
//!
//! One conversation per sample spans both stages: the Stage I turn filters
//! the schema's type inventory down to the types the model affirms, and
//! Stage II asks one extraction question per surviving type in reply order
//! (plus one chained follow-up per declared attribute of a surviving
//! complex-object relation). Per-turn answers compose into set-valued
//! results; repeated rows collapse silently but are counted in warnings.
//!
//! Turn counts are closed-form: RE uses `1 + |surviving| + Σ chain lengths
//! over surviving chained relations`, NER with `skip_stage1` uses exactly
//! `|inventory|`, NER otherwise `1 + |surviving types|`, and EE uses
//! `1 + |predicted event types|`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{Backend, ChatError, Conversation};
use crate::parse::{self, clean_for_match, ParseError, Parsed, ParsedAnswer};
use crate::schema::{Language, RelationType, Task, TaskSchema};
use crate::templates::{
    quoted_list, render_chain, render_stage1, render_stage2, tuple_header, Stage, TemplateError,
    TemplateRegistry,
};
use crate::types::{Entity, EventRecord, Extraction, ExtractionResult, Sample, Triple};

/// Knobs shared by the per-sample extractors and `run_batch`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchOptions {
    /// Worker bound for sample-level parallelism; 0 picks the default pool
    /// size, 1 forces sequential execution.
    pub workers: usize,
    /// Drop extracted strings that do not occur (after cleanup) in the
    /// sentence. Off by default.
    pub span_check: bool,
    /// Override the schema's `skip_stage1` flag (NER only).
    pub skip_stage1: Option<bool>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            workers: 0,
            span_check: false,
            skip_stage1: None,
        }
    }
}

/// Per-sample failure; `run_batch` records these instead of aborting.
#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("template: {0}")]
    Template(#[from] TemplateError),
    #[error("backend: {0}")]
    Chat(#[from] ChatError),
    #[error("cannot parse {context} reply: {source}")]
    Parse {
        context: String,
        source: ParseError,
    },
    #[error("configuration: {0}")]
    Config(String),
}

/// Batch-level misconfiguration; sample-level failures are data, not errors.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
}

fn parse_err(context: &str, source: ParseError) -> ExtractError {
    ExtractError::Parse {
        context: context.to_string(),
        source,
    }
}

/// The system message carrying the sentence when Stage I is skipped and no
/// user turn would otherwise state it.
fn sentence_context(language: Language, sentence: &str) -> String {
    match language {
        Language::En => format!("Given sentence: \"{sentence}\""),
        Language::Zh => format!("给定的句子为：\"{sentence}\""),
    }
}

struct TurnState<'a> {
    session: crate::chat::Session<'a>,
    conversation: Conversation,
    turns: u32,
    warnings: Vec<String>,
}

impl<'a> TurnState<'a> {
    fn ask(&mut self, prompt: &crate::templates::RenderedPrompt) -> Result<String, ExtractError> {
        let reply = self.session.ask(&mut self.conversation, prompt)?;
        self.turns += 1;
        Ok(reply)
    }

    fn absorb(&mut self, parsed: &Parsed) {
        self.warnings.extend(parsed.warnings.iter().cloned());
    }
}

fn start<'a>(
    sample: &'a Sample,
    schema: &'a TaskSchema,
    backend: &'a Backend,
    with_system_sentence: bool,
) -> TurnState<'a> {
    let conversation = if with_system_sentence {
        Conversation::with_system(&sample.id, sentence_context(schema.language, &sample.sentence))
    } else {
        Conversation::new(&sample.id)
    };
    TurnState {
        session: backend.session(sample, schema),
        conversation,
        turns: 0,
        warnings: Vec::new(),
    }
}

fn finish(
    sample: &Sample,
    schema: &TaskSchema,
    state: TurnState<'_>,
    extraction: Extraction,
) -> ExtractionResult {
    ExtractionResult {
        sample_id: sample.id.clone(),
        task: schema.task,
        extraction,
        turns_used: state.turns,
        warnings: state.warnings,
        transcript_ref: state.session.transcript_ref().map(str::to_string),
    }
}

fn registry() -> &'static TemplateRegistry {
    TemplateRegistry::builtin()
}

fn span_check_filter(
    enabled: bool,
    sentence: &str,
    value: &str,
    warnings: &mut Vec<String>,
) -> bool {
    if !enabled {
        return true;
    }
    let cleaned = clean_for_match(value);
    if sentence.contains(cleaned.as_str()) {
        true
    } else {
        warnings.push(format!("span check dropped '{value}' (not in sentence)"));
        false
    }
}

/// Relation-triple extraction (schema task must be `re`).
pub fn extract_triples(
    sample: &Sample,
    schema: &TaskSchema,
    backend: &Backend,
    options: &BatchOptions,
) -> Result<ExtractionResult, ExtractError> {
    if schema.task != Task::Re {
        return Err(ExtractError::Config(format!(
            "extract_triples needs an 're' schema, got '{}'",
            schema.task
        )));
    }
    let mut state = start(sample, schema, backend, false);

    let stage1 = registry().find(Task::Re, Stage::One, schema.language)?;
    let prompt = render_stage1(stage1, schema, &sample.sentence)?;
    let reply = state.ask(&prompt)?;
    let parsed =
        parse::parse_type_list(&reply, &schema.type_inventory()).map_err(|e| parse_err("stage 1", e))?;
    state.absorb(&parsed);

    let surviving: Vec<&RelationType> = match &parsed.answer {
        ParsedAnswer::NoneAnswer => Vec::new(),
        ParsedAnswer::TypeList(names) => names
            .iter()
            .map(|name| {
                schema
                    .lookup_relation(name)
                    .map_err(|_| ExtractError::Config(format!("parsed unknown relation '{name}'")))
            })
            .collect::<Result<_, _>>()?,
        _ => unreachable!("parse_type_list yields TypeList or NoneAnswer"),
    };

    let stage2 = registry().find(Task::Re, Stage::Two, schema.language)?;
    let mut collected: Vec<Triple> = Vec::new();
    for relation in surviving {
        let header = tuple_header(&relation.subject_type, &relation.object_type);
        let mut bindings = BTreeMap::new();
        bindings.insert("relation".to_string(), relation.name.clone());
        bindings.insert("type_header".to_string(), header);
        let prompt = render_stage2(stage2, &relation.name, &bindings)?;
        let reply = state.ask(&prompt)?;
        let parsed = parse::parse_pair_table(
            &reply,
            (relation.subject_type.as_str(), relation.object_type.as_str()),
        )
        .map_err(|e| parse_err(&format!("stage 2 for '{}'", relation.name), e))?;
        state.absorb(&parsed);

        let mut rel_triples: Vec<Triple> = match &parsed.answer {
            ParsedAnswer::NoneAnswer => Vec::new(),
            ParsedAnswer::PairTable { rows, .. } => rows
                .iter()
                .filter(|(s, o)| {
                    span_check_filter(options.span_check, &sample.sentence, s, &mut state.warnings)
                        && span_check_filter(
                            options.span_check,
                            &sample.sentence,
                            o,
                            &mut state.warnings,
                        )
                })
                .map(|(s, o)| {
                    Triple::new(s.clone(), relation.name.clone(), o.clone())
                        .with_types(relation.subject_type.clone(), relation.object_type.clone())
                })
                .collect(),
            _ => unreachable!("parse_pair_table yields PairTable or NoneAnswer"),
        };

        // Chained attributes: one follow-up per declared attribute whenever
        // the relation survived Stage I, so turn counts stay closed-form.
        for spec in &relation.object_chain {
            let template = registry().get(&spec.template).ok_or_else(|| {
                ExtractError::Config(format!("chain template '{}' not registered", spec.template))
            })?;
            let mut bindings = BTreeMap::new();
            bindings.insert("relation".to_string(), relation.name.clone());
            bindings.insert("attribute".to_string(), spec.attribute.clone());
            bindings.insert("object_type".to_string(), relation.object_type.clone());
            let prompt = render_chain(template, &relation.name, &spec.attribute, &bindings)?;
            let reply = state.ask(&prompt)?;
            let parsed = parse::parse_pair_table(
                &reply,
                (relation.object_type.as_str(), spec.attribute.as_str()),
            )
            .map_err(|e| {
                parse_err(
                    &format!("chain '{}' of '{}'", spec.attribute, relation.name),
                    e,
                )
            })?;
            state.absorb(&parsed);
            let rows = match &parsed.answer {
                ParsedAnswer::NoneAnswer => continue,
                ParsedAnswer::PairTable { rows, .. } => rows,
                _ => unreachable!(),
            };
            // Rows key triples by object; ties resolve to the smallest
            // unassigned (subject, object) for determinism.
            for (object, value) in rows {
                let object_key = clean_for_match(object);
                let candidate = rel_triples
                    .iter_mut()
                    .filter(|t| {
                        clean_for_match(&t.object) == object_key
                            && !t.attributes.contains_key(&spec.attribute)
                    })
                    .min_by(|a, b| (&a.subject, &a.object).cmp(&(&b.subject, &b.object)));
                match candidate {
                    Some(triple) => {
                        triple.attributes.insert(spec.attribute.clone(), value.clone());
                    }
                    None => state.warnings.push(format!(
                        "attribute '{}' row for unmatched object '{object}' dropped",
                        spec.attribute
                    )),
                }
            }
        }
        collected.extend(rel_triples);
    }

    let total = collected.len();
    let set: BTreeSet<Triple> = collected.into_iter().collect();
    if set.len() < total {
        state
            .warnings
            .push(format!("{} duplicate triple(s) collapsed", total - set.len()));
    }
    Ok(finish(sample, schema, state, Extraction::Triples(set)))
}

/// Named-entity extraction (schema task must be `ner`).
pub fn extract_entities(
    sample: &Sample,
    schema: &TaskSchema,
    backend: &Backend,
    options: &BatchOptions,
) -> Result<ExtractionResult, ExtractError> {
    if schema.task != Task::Ner {
        return Err(ExtractError::Config(format!(
            "extract_entities needs a 'ner' schema, got '{}'",
            schema.task
        )));
    }
    let skip_stage1 = options.skip_stage1.unwrap_or(schema.skip_stage1);
    let mut state = start(sample, schema, backend, skip_stage1);

    let types_to_ask: Vec<String> = if skip_stage1 {
        schema.entities.clone()
    } else {
        let stage1 = registry().find(Task::Ner, Stage::One, schema.language)?;
        let prompt = render_stage1(stage1, schema, &sample.sentence)?;
        let reply = state.ask(&prompt)?;
        let parsed = parse::parse_type_list(&reply, &schema.entities)
            .map_err(|e| parse_err("stage 1", e))?;
        state.absorb(&parsed);
        match parsed.answer {
            ParsedAnswer::NoneAnswer => Vec::new(),
            ParsedAnswer::TypeList(names) => names,
            _ => unreachable!(),
        }
    };

    let stage2 = registry().find(Task::Ner, Stage::Two, schema.language)?;
    let mut collected: Vec<Entity> = Vec::new();
    for entity_type in &types_to_ask {
        let mut bindings = BTreeMap::new();
        bindings.insert("entity_type".to_string(), entity_type.clone());
        let prompt = render_stage2(stage2, entity_type, &bindings)?;
        let reply = state.ask(&prompt)?;
        let parsed = parse::parse_entity_list(&reply, &schema.entities)
            .map_err(|e| parse_err(&format!("stage 2 for '{entity_type}'"), e))?;
        state.absorb(&parsed);
        match &parsed.answer {
            ParsedAnswer::NoneAnswer => {}
            ParsedAnswer::EntityList(items) => {
                collected.extend(
                    items
                        .iter()
                        .filter(|(name, _)| {
                            span_check_filter(
                                options.span_check,
                                &sample.sentence,
                                name,
                                &mut state.warnings,
                            )
                        })
                        .map(|(name, ty)| Entity::new(name.clone(), ty.clone())),
                );
            }
            _ => unreachable!("parse_entity_list yields EntityList or NoneAnswer"),
        }
    }

    let total = collected.len();
    let set: BTreeSet<Entity> = collected.into_iter().collect();
    if set.len() < total {
        state
            .warnings
            .push(format!("{} duplicate entity mention(s) collapsed", total - set.len()));
    }
    Ok(finish(sample, schema, state, Extraction::Entities(set)))
}

/// Event extraction (schema task must be `ee`).
pub fn extract_events(
    sample: &Sample,
    schema: &TaskSchema,
    backend: &Backend,
    options: &BatchOptions,
) -> Result<ExtractionResult, ExtractError> {
    if schema.task != Task::Ee {
        return Err(ExtractError::Config(format!(
            "extract_events needs an 'ee' schema, got '{}'",
            schema.task
        )));
    }
    let mut state = start(sample, schema, backend, false);

    let stage1 = registry().find(Task::Ee, Stage::One, schema.language)?;
    let prompt = render_stage1(stage1, schema, &sample.sentence)?;
    let reply = state.ask(&prompt)?;
    let parsed = parse::parse_event_types(&reply, &schema.type_inventory())
        .map_err(|e| parse_err("stage 1", e))?;
    state.absorb(&parsed);
    let predicted: Vec<String> = match parsed.answer {
        ParsedAnswer::NoneAnswer => Vec::new(),
        ParsedAnswer::TypeList(names) => names,
        _ => unreachable!(),
    };

    let stage2 = registry().find(Task::Ee, Stage::Two, schema.language)?;
    let mut grouped: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for event_type in &predicted {
        let spec = schema
            .lookup_event(event_type)
            .map_err(|_| ExtractError::Config(format!("parsed unknown event '{event_type}'")))?;
        let mut bindings = BTreeMap::new();
        bindings.insert("event_type".to_string(), spec.name.clone());
        bindings.insert("role_inventory".to_string(), quoted_list(&spec.roles));
        let prompt = render_stage2(stage2, &spec.name, &bindings)?;
        let reply = state.ask(&prompt)?;
        let parsed = parse::parse_role_table(&reply, &spec.name, &spec.roles)
            .map_err(|e| parse_err(&format!("stage 2 for '{}'", spec.name), e))?;
        state.absorb(&parsed);
        let rows = match &parsed.answer {
            ParsedAnswer::NoneAnswer => continue,
            ParsedAnswer::RoleTable(rows) => rows,
            _ => unreachable!("parse_role_table yields RoleTable or NoneAnswer"),
        };
        for row in rows {
            let Ok(row_spec) = schema.lookup_event(&row.event_type) else {
                state.warnings.push(format!(
                    "argument row for unknown event type '{}' dropped",
                    row.event_type
                ));
                continue;
            };
            if !span_check_filter(
                options.span_check,
                &sample.sentence,
                &row.content,
                &mut state.warnings,
            ) {
                continue;
            }
            grouped
                .entry(row_spec.name.clone())
                .or_default()
                .push((row.role.clone(), row.content.clone()));
        }
    }

    let mut duplicates = 0usize;
    let events: BTreeSet<EventRecord> = grouped
        .into_iter()
        .map(|(event_type, arguments)| {
            let before = arguments.len();
            let record = EventRecord::new(event_type, arguments);
            duplicates += before - record.arguments.len();
            record
        })
        .collect();
    if duplicates > 0 {
        state
            .warnings
            .push(format!("{duplicates} duplicate argument row(s) collapsed"));
    }
    Ok(finish(sample, schema, state, Extraction::Events(events)))
}

/// Dispatch on the schema's task.
pub fn extract_sample(
    sample: &Sample,
    schema: &TaskSchema,
    backend: &Backend,
    options: &BatchOptions,
) -> Result<ExtractionResult, ExtractError> {
    match schema.task {
        Task::Re => extract_triples(sample, schema, backend, options),
        Task::Ner => extract_entities(sample, schema, backend, options),
        Task::Ee => extract_events(sample, schema, backend, options),
    }
}

/// One line of a batch report: a result or a recorded failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SampleOutcome {
    Ok {
        #[serde(flatten)]
        result: ExtractionResult,
    },
    Failed {
        sample_id: String,
        error: String,
    },
}

impl SampleOutcome {
    pub fn sample_id(&self) -> &str {
        match self {
            SampleOutcome::Ok { result } => &result.sample_id,
            SampleOutcome::Failed { sample_id, .. } => sample_id,
        }
    }

    pub fn result(&self) -> Option<&ExtractionResult> {
        match self {
            SampleOutcome::Ok { result } => Some(result),
            SampleOutcome::Failed { .. } => None,
        }
    }
}

/// Pooled tallies for one run. Wall time is measurement, not semantics:
/// replay comparisons ignore it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub samples: usize,
    pub ok: usize,
    pub failures: usize,
    pub turns_total: u64,
    pub warnings_total: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub outcomes: Vec<SampleOutcome>,
    pub summary: BatchSummary,
}

impl BatchReport {
    /// Line-delimited serialization: one record per sample in input order,
    /// then a summary record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for outcome in &self.outcomes {
            out.push_str(&serde_json::to_string(outcome).expect("serializable"));
            out.push('\n');
        }
        out.push_str(
            &serde_json::to_string(&serde_json::json!({ "summary": self.summary }))
                .expect("serializable"),
        );
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<BatchReport, serde_json::Error> {
        let mut outcomes: Vec<SampleOutcome> = Vec::new();
        let mut summary = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let value: serde_json::Value = serde_json::from_str(line)?;
            if let Some(s) = value.get("summary") {
                summary = Some(serde_json::from_value(s.clone())?);
            } else {
                outcomes.push(serde_json::from_value(value)?);
            }
        }
        let summary = summary.unwrap_or(BatchSummary {
            samples: outcomes.len(),
            ok: outcomes.iter().filter(|o| o.result().is_some()).count(),
            failures: outcomes.iter().filter(|o| o.result().is_none()).count(),
            turns_total: 0,
            warnings_total: 0,
            wall_ms: 0,
        });
        Ok(BatchReport { outcomes, summary })
    }

    /// The same report with volatile measurement fields zeroed, for
    /// byte-comparisons across runs.
    pub fn normalized_for_comparison(&self) -> BatchReport {
        let mut report = self.clone();
        report.summary.wall_ms = 0;
        report
    }
}

/// Run the task extractor over every sample with bounded parallelism.
/// Output order matches input order regardless of completion order; failed
/// samples become records, never batch errors.
pub fn run_batch(
    samples: &[Sample],
    schema: &TaskSchema,
    backend: &Backend,
    options: &BatchOptions,
) -> Result<BatchReport, PipelineError> {
    if samples.is_empty() {
        return Err(PipelineError::Config("no samples to extract".into()));
    }
    registry()
        .find(schema.task, Stage::Two, schema.language)
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let started = Instant::now();
    let run_one = |sample: &Sample| -> SampleOutcome {
        match extract_sample(sample, schema, backend, options) {
            Ok(result) => SampleOutcome::Ok { result },
            Err(error) => SampleOutcome::Failed {
                sample_id: sample.id.clone(),
                error: error.to_string(),
            },
        }
    };

    let outcomes: Vec<SampleOutcome> = run_parallel(samples, options.workers, run_one)
        .map_err(PipelineError::Config)?;

    let summary = BatchSummary {
        samples: outcomes.len(),
        ok: outcomes.iter().filter(|o| o.result().is_some()).count(),
        failures: outcomes.iter().filter(|o| o.result().is_none()).count(),
        turns_total: outcomes
            .iter()
            .filter_map(SampleOutcome::result)
            .map(|r| r.turns_used as u64)
            .sum(),
        warnings_total: outcomes
            .iter()
            .filter_map(SampleOutcome::result)
            .map(|r| r.warnings.len())
            .sum(),
        wall_ms: started.elapsed().as_millis() as u64,
    };
    Ok(BatchReport { outcomes, summary })
}

#[cfg(feature = "parallel")]
fn run_parallel<F>(samples: &[Sample], workers: usize, run_one: F) -> Result<Vec<SampleOutcome>, String>
where
    F: Fn(&Sample) -> SampleOutcome + Send + Sync,
{
    use rayon::prelude::*;
    if workers == 1 {
        return Ok(samples.iter().map(run_one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| format!("cannot build worker pool: {e}"))?;
    // collect() keeps input order regardless of completion order.
    Ok(pool.install(|| samples.par_iter().map(run_one).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<F>(samples: &[Sample], _workers: usize, run_one: F) -> Result<Vec<SampleOutcome>, String>
where
    F: Fn(&Sample) -> SampleOutcome,
{
    Ok(samples.iter().map(run_one).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::BackendConfig;
    use crate::schema::canonical_key;
    use crate::chat::SystemClock;
    use crate::synth::{random_schema, sample_with_gold, SynthOptions, SynthRng};
    use crate::types::GoldAnnotation;
    use std::sync::Arc;

    fn oracle_backend() -> Backend {
        Backend::from_config(&BackendConfig::gold_oracle(), Arc::new(SystemClock::new())).unwrap()
    }

    fn expected_turns(schema: &TaskSchema, gold: &GoldAnnotation, skip_stage1: bool) -> u32 {
        match gold {
            GoldAnnotation::Triples(triples) => {
                let mut turns = 1;
                for relation in &schema.relations {
                    let present = triples
                        .iter()
                        .any(|t| canonical_key(&t.relation) == canonical_key(&relation.name));
                    if present {
                        turns += 1 + relation.object_chain.len() as u32;
                    }
                }
                turns
            }
            GoldAnnotation::Entities(entities) => {
                if skip_stage1 {
                    schema.entities.len() as u32
                } else {
                    let surviving = schema
                        .entities
                        .iter()
                        .filter(|ty| {
                            entities
                                .iter()
                                .any(|e| canonical_key(&e.entity_type) == canonical_key(ty))
                        })
                        .count();
                    1 + surviving as u32
                }
            }
            GoldAnnotation::Events(events) => 1 + events.len() as u32,
        }
    }

    #[test]
    fn oracle_closure_re_with_chains() {
        let mut rng = SynthRng::seed(11);
        let backend = oracle_backend();
        for i in 0..25 {
            let schema = random_schema(
                Task::Re,
                SynthOptions {
                    with_chains: true,
                    ..Default::default()
                },
                &mut rng,
            );
            let sample = sample_with_gold(&schema, format!("s{i}"), &mut rng);
            let result =
                extract_triples(&sample, &schema, &backend, &BatchOptions::default()).unwrap();
            let GoldAnnotation::Triples(gold) = sample.gold.as_ref().unwrap() else {
                panic!()
            };
            let Extraction::Triples(extracted) = &result.extraction else {
                panic!()
            };
            assert_eq!(extracted, gold, "closure failed for sample {i}");
            assert_eq!(
                result.turns_used,
                expected_turns(&schema, sample.gold.as_ref().unwrap(), false),
                "turn count mismatch for sample {i}"
            );
        }
    }

    #[test]
    fn oracle_closure_ner_both_modes() {
        let mut rng = SynthRng::seed(12);
        let backend = oracle_backend();
        for skip in [false, true] {
            for i in 0..15 {
                let schema = random_schema(
                    Task::Ner,
                    SynthOptions {
                        skip_stage1: skip,
                        ..Default::default()
                    },
                    &mut rng,
                );
                let sample = sample_with_gold(&schema, format!("s{i}"), &mut rng);
                let result =
                    extract_entities(&sample, &schema, &backend, &BatchOptions::default()).unwrap();
                let GoldAnnotation::Entities(gold) = sample.gold.as_ref().unwrap() else {
                    panic!()
                };
                let Extraction::Entities(extracted) = &result.extraction else {
                    panic!()
                };
                assert_eq!(extracted, gold);
                assert_eq!(
                    result.turns_used,
                    expected_turns(&schema, sample.gold.as_ref().unwrap(), skip)
                );
                if skip {
                    assert_eq!(result.turns_used, schema.entities.len() as u32);
                }
            }
        }
    }

    #[test]
    fn oracle_closure_ee() {
        let mut rng = SynthRng::seed(13);
        let backend = oracle_backend();
        for i in 0..25 {
            let schema = random_schema(Task::Ee, SynthOptions::default(), &mut rng);
            let sample = sample_with_gold(&schema, format!("s{i}"), &mut rng);
            let result =
                extract_events(&sample, &schema, &backend, &BatchOptions::default()).unwrap();
            let GoldAnnotation::Events(gold) = sample.gold.as_ref().unwrap() else {
                panic!()
            };
            let Extraction::Events(extracted) = &result.extraction else {
                panic!()
            };
            assert_eq!(extracted, gold);
            assert_eq!(
                result.turns_used,
                expected_turns(&schema, sample.gold.as_ref().unwrap(), false)
            );
        }
    }

    #[test]
    fn empty_gold_uses_one_turn() {
        let mut rng = SynthRng::seed(14);
        let schema = random_schema(Task::Re, SynthOptions::default(), &mut rng);
        let sample = Sample::new("s0", "nothing here").with_gold(GoldAnnotation::Triples(
            std::collections::BTreeSet::new(),
        ));
        let backend = oracle_backend();
        let result = extract_triples(&sample, &schema, &backend, &BatchOptions::default()).unwrap();
        assert_eq!(result.turns_used, 1);
        assert!(result.extraction.is_empty());
    }

    #[test]
    fn batch_preserves_order_and_records_failures() {
        let mut rng = SynthRng::seed(15);
        let schema = random_schema(Task::Ner, SynthOptions::default(), &mut rng);
        let mut samples: Vec<Sample> = (0..5)
            .map(|i| sample_with_gold(&schema, format!("s{i}"), &mut rng))
            .collect();
        samples[2].gold = None; // oracle cannot answer this one
        let backend = oracle_backend();
        let report = run_batch(&samples, &schema, &backend, &BatchOptions::default()).unwrap();
        assert_eq!(report.summary.samples, 5);
        assert_eq!(report.summary.failures, 1);
        let ids: Vec<&str> = report.outcomes.iter().map(SampleOutcome::sample_id).collect();
        assert_eq!(ids, vec!["s0", "s1", "s2", "s3", "s4"]);
        assert!(matches!(report.outcomes[2], SampleOutcome::Failed { .. }));
    }

    #[test]
    fn batch_report_jsonl_round_trip() {
        let mut rng = SynthRng::seed(16);
        let schema = random_schema(Task::Ee, SynthOptions::default(), &mut rng);
        let samples: Vec<Sample> = (0..3)
            .map(|i| sample_with_gold(&schema, format!("s{i}"), &mut rng))
            .collect();
        let backend = oracle_backend();
        let report = run_batch(&samples, &schema, &backend, &BatchOptions::default()).unwrap();
        let text = report.to_jsonl();
        let back = BatchReport::from_jsonl(&text).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn workers_do_not_change_output_order() {
        let mut rng = SynthRng::seed(17);
        let schema = random_schema(Task::Re, SynthOptions::default(), &mut rng);
        let samples: Vec<Sample> = (0..16)
            .map(|i| sample_with_gold(&schema, format!("s{i}"), &mut rng))
            .collect();
        let backend = oracle_backend();
        let sequential = run_batch(
            &samples,
            &schema,
            &backend,
            &BatchOptions {
                workers: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let parallel = run_batch(
            &samples,
            &schema,
            &backend,
            &BatchOptions {
                workers: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            sequential.normalized_for_comparison(),
            parallel.normalized_for_comparison()
        );
    }

    #[test]
    fn span_check_drops_foreign_strings() {
        let schema = TaskSchema::from_toml(
            r#"
                task = "ner"
                language = "en"
                entities = ["LOC"]
                skip_stage1 = true
            "#,
            TemplateRegistry::builtin(),
        )
        .unwrap();
        let mut gold = std::collections::BTreeSet::new();
        gold.insert(Entity::new("narnia", "LOC"));
        let sample = Sample::new("s0", "a sentence about nowhere")
            .with_gold(GoldAnnotation::Entities(gold));
        let backend = oracle_backend();
        let result = extract_entities(
            &sample,
            &schema,
            &backend,
            &BatchOptions {
                span_check: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(result.extraction.is_empty());
        assert!(result.warnings.iter().any(|w| w.contains("span check")));
    }

    #[test]
    fn empty_batch_is_config_error() {
        let mut rng = SynthRng::seed(18);
        let schema = random_schema(Task::Re, SynthOptions::default(), &mut rng);
        let backend = oracle_backend();
        assert!(matches!(
            run_batch(&[], &schema, &backend, &BatchOptions::default()),
            Err(PipelineError::Config(_))
        ));
    }
}
