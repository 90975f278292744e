//! Conformance of the shipped assets: every schema loads and has the
//! documented inventory size, and the shipped templates reproduce the
//! checked-in prompt fixtures byte-exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use iextract::datasets::{load_dataset, DatasetFormat};
use iextract::schema::TaskSchema;
use iextract::templates::{
    render_stage1, render_stage2, tuple_header, Stage, TemplateRegistry,
};
use iextract::types::{Entity, GoldAnnotation, Triple};
use iextract::{Language, Task};

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn fixture(name: &str) -> String {
    let path = assets().join("fixtures/prompts").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    // Fixture files end with one editorial newline; prompts do not.
    text.strip_suffix('\n').map(str::to_string).unwrap_or(text)
}

fn schema(name: &str) -> TaskSchema {
    TaskSchema::load(assets().join("schemas").join(name)).expect("schema loads")
}

#[test]
fn all_shipped_schemas_load_with_documented_sizes() {
    let cases = [
        ("nyt11_hrl.toml", Task::Re, 12),
        ("duie2.toml", Task::Re, 48),
        ("conllpp.toml", Task::Ner, 4),
        ("msra.toml", Task::Ner, 3),
        ("ace05.toml", Task::Ee, 8),
        ("duee1.toml", Task::Ee, 65),
    ];
    for (file, task, size) in cases {
        let schema = schema(file);
        assert_eq!(schema.task, task, "{file}");
        assert_eq!(schema.type_inventory().len(), size, "{file}");
    }
}

#[test]
fn duie2_chains_are_non_empty_and_resolve() {
    let schema = schema("duie2.toml");
    let chained: Vec<_> = schema.relations.iter().filter(|r| r.has_chain()).collect();
    assert_eq!(chained.len(), 5);
    let registry = TemplateRegistry::builtin();
    for relation in chained {
        assert!(!relation.object_chain.is_empty());
        for spec in &relation.object_chain {
            assert!(
                registry.get(&spec.template).is_some(),
                "template '{}' of '{}' must resolve",
                spec.template,
                relation.name
            );
        }
    }
}

const BONO: &str = "Bono said that President Jacques Chirac of France had spoken eloquently of the need to support Africa , though he added that France had not yet come through with the resources .";
const JAPAN: &str = "Japan then laid siege to the Syrian penalty area and had a goal disallowed for offside in the 16th minute.";
const SADDAM: &str = "What I do know is Saddam Hussein has butchered over a million of his own citizens.";

#[test]
fn re_prompts_match_fixtures_byte_exactly() {
    let registry = TemplateRegistry::builtin();
    let schema = schema("nyt11_hrl.toml");

    let stage1 = registry.find(Task::Re, Stage::One, Language::En).unwrap();
    let prompt = render_stage1(stage1, &schema, BONO).unwrap();
    assert_eq!(prompt.text, fixture("table2_stage1.txt"));

    let stage2 = registry.find(Task::Re, Stage::Two, Language::En).unwrap();
    let relation = schema.lookup_relation("person-nationality").unwrap();
    let mut bindings = BTreeMap::new();
    bindings.insert("relation".to_string(), relation.name.clone());
    bindings.insert(
        "type_header".to_string(),
        tuple_header(&relation.subject_type, &relation.object_type),
    );
    let prompt = render_stage2(stage2, &relation.name, &bindings).unwrap();
    assert_eq!(prompt.text, fixture("table2_stage2.txt"));
}

#[test]
fn ner_prompts_match_fixtures_byte_exactly() {
    let registry = TemplateRegistry::builtin();
    let schema = schema("conllpp.toml");

    let stage1 = registry.find(Task::Ner, Stage::One, Language::En).unwrap();
    let prompt = render_stage1(stage1, &schema, JAPAN).unwrap();
    assert_eq!(prompt.text, fixture("table3_stage1.txt"));

    let stage2 = registry.find(Task::Ner, Stage::Two, Language::En).unwrap();
    let mut bindings = BTreeMap::new();
    bindings.insert("entity_type".to_string(), "LOC".to_string());
    let prompt = render_stage2(stage2, "LOC", &bindings).unwrap();
    assert_eq!(prompt.text, fixture("table3_stage2_loc.txt"));
}

#[test]
fn ee_prompts_match_fixtures_byte_exactly() {
    let registry = TemplateRegistry::builtin();
    let schema = schema("ace05.toml");

    let stage1 = registry.find(Task::Ee, Stage::One, Language::En).unwrap();
    let prompt = render_stage1(stage1, &schema, SADDAM).unwrap();
    assert_eq!(prompt.text, fixture("table4_stage1.txt"));

    let stage2 = registry.find(Task::Ee, Stage::Two, Language::En).unwrap();
    let event = schema.lookup_event("Life:Die").unwrap();
    let mut bindings = BTreeMap::new();
    bindings.insert("event_type".to_string(), event.name.clone());
    bindings.insert(
        "role_inventory".to_string(),
        iextract::templates::quoted_list(&event.roles),
    );
    let prompt = render_stage2(stage2, &event.name, &bindings).unwrap();
    assert_eq!(prompt.text, fixture("table4_stage2.txt"));
}

#[test]
fn single_turn_prompts_ship_as_comparison_fixtures_only() {
    // The single-question baseline is not a supported mode; its prompts are
    // kept solely to contrast with the two-stage chat prompts.
    for (vanilla, chat) in [
        ("vanilla_re.txt", "table2_stage1.txt"),
        ("vanilla_ner.txt", "table3_stage1.txt"),
        ("vanilla_ee.txt", "table4_stage1.txt"),
    ] {
        let vanilla = fixture(vanilla);
        let chat = fixture(chat);
        assert!(!vanilla.is_empty());
        assert_ne!(vanilla, chat);
    }
    assert!(fixture("vanilla_re.txt").contains("form a triplet in the form of (subject, relation, object)"));
}

#[test]
fn dataset_fixtures_carry_the_documented_gold() {
    let conllpp = schema("conllpp.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/conllpp.conll"),
        DatasetFormat::Conllpp,
        &conllpp,
    )
    .unwrap();
    assert_eq!(samples[0].sentence, JAPAN);
    let GoldAnnotation::Entities(gold) = samples[0].gold.as_ref().unwrap() else {
        panic!()
    };
    assert!(gold.contains(&Entity::new("Japan", "LOC")));
    assert!(gold.contains(&Entity::new("Syrian", "MISC")));

    let nyt11 = schema("nyt11_hrl.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/nyt11.jsonl"),
        DatasetFormat::Nyt11,
        &nyt11,
    )
    .unwrap();
    let delhi = samples.iter().find(|s| s.id == "nyt11-delhi").unwrap();
    let GoldAnnotation::Triples(gold) = delhi.gold.as_ref().unwrap() else {
        panic!()
    };
    assert!(gold.contains(&Triple::new("India", "location-contains", "Delhi")));
    assert!(gold.contains(&Triple::new("Delhi", "administrative_division-country", "India")));

    let ace05 = schema("ace05.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/ace05.jsonl"),
        DatasetFormat::Ace05Lines,
        &ace05,
    )
    .unwrap();
    assert_eq!(samples.len(), 5);
    let saddam = samples.iter().find(|s| s.id == "ace05-saddam").unwrap();
    let GoldAnnotation::Events(gold) = saddam.gold.as_ref().unwrap() else {
        panic!()
    };
    let event = gold.iter().next().unwrap();
    assert_eq!(event.event_type, "Life:Die");
    assert!(event
        .arguments
        .contains(&("Victim".to_string(), "over a million of his own citizens".to_string())));

    let duie2 = schema("duie2.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/duie2.jsonl"),
        DatasetFormat::Duie2,
        &duie2,
    )
    .unwrap();
    let GoldAnnotation::Triples(gold) = samples[0].gold.as_ref().unwrap() else {
        panic!()
    };
    assert!(gold
        .iter()
        .any(|t| t.relation == "票房" && t.attributes.get("inArea").map(String::as_str) == Some("内地")));

    let msra = schema("msra.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/msra.conll"),
        DatasetFormat::Msra,
        &msra,
    )
    .unwrap();
    let GoldAnnotation::Entities(gold) = samples[0].gold.as_ref().unwrap() else {
        panic!()
    };
    assert!(gold.contains(&Entity::new("北京", "LOC")));
    assert!(gold.contains(&Entity::new("微软", "ORG")));

    let duee1 = schema("duee1.toml");
    let samples = load_dataset(
        assets().join("fixtures/datasets/duee1.jsonl"),
        DatasetFormat::Duee1,
        &duee1,
    )
    .unwrap();
    let GoldAnnotation::Events(gold) = samples[0].gold.as_ref().unwrap() else {
        panic!()
    };
    assert_eq!(gold.iter().next().unwrap().event_type, "组织关系-裁员");
}
