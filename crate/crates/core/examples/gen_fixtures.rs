//! Regenerate `assets/fixtures/transcripts/paper_fixtures.jsonl`.
//!
//! Replies are scripted per sample and per question; running the real
//! pipeline in record mode guarantees the recorded prompts match what a
//! replay run will render. Run after any template or schema change:
//!
//! ```bash
//! cargo run -p iextract --example gen_fixtures
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use iextract::chat::Backend;
use iextract::datasets::{load_dataset, DatasetFormat};
use iextract::pipeline::{run_batch, BatchOptions};
use iextract::templates::{AnswerForm, RenderedPrompt};
use iextract::{Sample, TaskSchema};

fn assets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn script(sample: &Sample, prompt: &RenderedPrompt) -> Option<String> {
    let element = prompt.element_type.as_deref().unwrap_or("");
    let reply = match (sample.id.as_str(), prompt.answer_form, element) {
        ("nyt11-bono", AnswerForm::TypeTuple, _) => "(person-nationality)",
        ("nyt11-bono", AnswerForm::PairTable, "person-nationality") => "(Jacques Chirac, France)",

        ("nyt11-delhi", AnswerForm::TypeTuple, _) => {
            "(location-located_in, administrative_division-country)"
        }
        ("nyt11-delhi", AnswerForm::PairTable, "location-located_in") => "(Delhi, India)",
        ("nyt11-delhi", AnswerForm::PairTable, "administrative_division-country") => {
            "(Delhi, India)"
        }

        ("nyt11-google", AnswerForm::TypeTuple, _) => "(person-company)",
        ("nyt11-google", AnswerForm::PairTable, "person-company") => {
            "| person | organization |\n| --- | --- |\n| George Reyes | Google |\n| Shona Brown | Google |\n| David Drummond | Google |\n| Jonathan Rosenberg | Google |"
        }

        ("conllpp-0", AnswerForm::TypeList, _) => "LOC, MISC",
        ("conllpp-0", AnswerForm::EntityList, "LOC") => "[\"Japan\", \"LOC\"]",
        ("conllpp-0", AnswerForm::EntityList, "MISC") => "[\"Syrian\", \"LOC\"]",

        ("conllpp-1", AnswerForm::TypeList, _) => "ORG",
        ("conllpp-1", AnswerForm::EntityList, "ORG") => {
            "['Tasmania', 'ORG'], ['Victoria', 'ORG']"
        }

        ("ace05-saddam", AnswerForm::EventTypeLine, _) => "Life:Die",
        ("ace05-saddam", AnswerForm::RoleTable, "Life:Die") => {
            "\"arguments\": [\n{\n\"role\": \"Victim\",\n\"argument\": \"over a million of his own citizens\"\n},\n{\n\"role\": \"Agent\",\n\"argument\": \"Saddam Hussein\"\n}"
        }

        ("ace05-clinton", AnswerForm::EventTypeLine, _) => "Life:Die",
        ("ace05-clinton", AnswerForm::RoleTable, "Life:Die") => {
            "| event type | argument role | argument content |\n| --- | --- | --- |\n| Life:Die | Agent | Clinton |\n| Life:Die | Victim | 19 Rangers |\n| Life:Die | Instrument | None |\n| Life:Die | Time | 3rd of October |\n| Life:Die | Time | three days later |\n| Life:Die | Place | None |"
        }

        _ => return None,
    };
    Some(reply.to_string())
}

fn main() {
    let assets = assets_dir();
    let store = assets.join("fixtures/transcripts/paper_fixtures.jsonl");

    let backend = Backend::scripted(
        "fixture-chat",
        Arc::new(|sample: &Sample, _conv: &_, prompt: &RenderedPrompt| script(sample, prompt)),
    )
    .with_recorder(&store)
    .expect("create transcript store");

    let options = BatchOptions {
        workers: 1,
        skip_stage1: Some(false),
        ..Default::default()
    };

    let nyt11 = TaskSchema::load(assets.join("schemas/nyt11_hrl.toml")).unwrap();
    let samples = load_dataset(
        assets.join("fixtures/datasets/nyt11.jsonl"),
        DatasetFormat::Nyt11,
        &nyt11,
    )
    .unwrap();
    let report = run_batch(&samples, &nyt11, &backend, &options).unwrap();
    assert_eq!(report.summary.failures, 0, "re fixtures: {report:#?}");

    let conllpp = TaskSchema::load(assets.join("schemas/conllpp.toml")).unwrap();
    let samples = load_dataset(
        assets.join("fixtures/datasets/conllpp.conll"),
        DatasetFormat::Conllpp,
        &conllpp,
    )
    .unwrap();
    let report = run_batch(&samples, &conllpp, &backend, &options).unwrap();
    assert_eq!(report.summary.failures, 0, "ner fixtures: {report:#?}");

    let ace05 = TaskSchema::load(assets.join("schemas/ace05.toml")).unwrap();
    let samples = load_dataset(
        assets.join("fixtures/datasets/ace05.jsonl"),
        DatasetFormat::Ace05Lines,
        &ace05,
    )
    .unwrap();
    let paper_samples: Vec<Sample> = samples
        .into_iter()
        .filter(|s| s.id == "ace05-saddam" || s.id == "ace05-clinton")
        .collect();
    let report = run_batch(&paper_samples, &ace05, &backend, &options).unwrap();
    assert_eq!(report.summary.failures, 0, "ee fixtures: {report:#?}");

    println!("wrote {}", store.display());
}
