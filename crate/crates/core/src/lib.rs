//! Two-stage, chat-driven information extraction.
//!
//! The library decomposes relation, entity, and event extraction into a
//! type-filtering question followed by per-type extraction questions, all
//! asked over one conversation per input sentence. Everything around that
//! loop is pluggable: schemas and prompt templates are data files, the chat
//! backend can be a live HTTP endpoint, a recorded-transcript replay, or a
//! gold-annotation oracle, and replies are parsed by closed, documented
//! grammars before being scored with micro-F1 metrics.
//!
//! Modules follow the processing order: [`schema`] and [`templates`] define
//! what to ask, [`chat`] asks it, [`parse`] reads the replies, [`pipeline`]
//! composes structured results, and [`datasets`] / [`eval`] supply gold data
//! and scores. [`synth`] generates random schema-valid fixtures for tests
//! and benchmarks.

pub mod chat;
pub mod datasets;
pub mod eval;
pub mod parse;
pub mod pipeline;
pub mod schema;
pub mod synth;
pub mod templates;
pub mod types;

pub use schema::{Language, SchemaError, Task, TaskSchema};
pub use templates::{AnswerForm, RenderedPrompt, Stage, TemplateRegistry};
pub use types::{Entity, EventRecord, Extraction, ExtractionResult, GoldAnnotation, Sample, Triple};
