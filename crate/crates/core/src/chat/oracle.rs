//! Gold-oracle backend: fabricate the reply a perfectly cooperative model
//! would give, in the exact answer form the prompt requests. Parsing an
//! oracle reply recovers exactly the gold projection for that question,
//! which makes the whole template → ask → parse → compose loop testable as
//! an identity on gold data.

use crate::parse::clean_for_match;
use crate::schema::{canonical_key, TaskSchema};
use crate::templates::{AnswerForm, RenderedPrompt};
use crate::types::{GoldAnnotation, Triple};

use super::ChatError;

/// Fabricate a reply for `prompt` from `gold`.
pub fn oracle_reply(
    schema: &TaskSchema,
    gold: &GoldAnnotation,
    prompt: &RenderedPrompt,
) -> Result<String, ChatError> {
    match prompt.answer_form {
        AnswerForm::TypeTuple => {
            let GoldAnnotation::Triples(triples) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let names = present_types(
                schema.type_inventory(),
                |name| triples.iter().any(|t| canonical_key(&t.relation) == canonical_key(name)),
            );
            if names.is_empty() {
                Ok("none".to_string())
            } else {
                Ok(format!("({})", names.join(", ")))
            }
        }
        AnswerForm::TypeList => {
            let GoldAnnotation::Entities(entities) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let names = present_types(
                schema.type_inventory(),
                |name| entities.iter().any(|e| canonical_key(&e.entity_type) == canonical_key(name)),
            );
            if names.is_empty() {
                Ok("none".to_string())
            } else {
                Ok(names.join(", "))
            }
        }
        AnswerForm::EventTypeLine => {
            let GoldAnnotation::Events(events) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let names = present_types(
                schema.type_inventory(),
                |name| events.iter().any(|e| canonical_key(&e.event_type) == canonical_key(name)),
            );
            if names.is_empty() {
                Ok("none".to_string())
            } else {
                Ok(names.join("\n"))
            }
        }
        AnswerForm::PairTable => {
            let GoldAnnotation::Triples(triples) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let relation = element_type(prompt)?;
            let mut of_relation: Vec<&Triple> = triples
                .iter()
                .filter(|t| canonical_key(&t.relation) == canonical_key(relation))
                .collect();
            of_relation.sort_by(|a, b| (&a.subject, &a.object).cmp(&(&b.subject, &b.object)));
            let rows: Vec<(String, String)> = match &prompt.attribute {
                None => of_relation
                    .iter()
                    .map(|t| (t.subject.clone(), t.object.clone()))
                    .collect(),
                Some(attribute) => of_relation
                    .iter()
                    .filter_map(|t| {
                        attr_value(t, attribute).map(|v| (t.object.clone(), v.to_string()))
                    })
                    .collect(),
            };
            if rows.is_empty() {
                return Ok("none".to_string());
            }
            for (a, b) in &rows {
                check_cell(a, &[',', '(', ')', '[', ']', '|', '\n'])?;
                check_cell(b, &[',', '(', ')', '[', ']', '|', '\n'])?;
            }
            Ok(rows
                .iter()
                .map(|(a, b)| format!("({a}, {b})"))
                .collect::<Vec<_>>()
                .join("\n"))
        }
        AnswerForm::EntityList => {
            let GoldAnnotation::Entities(entities) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let entity_type = element_type(prompt)?;
            let mut of_type: Vec<_> = entities
                .iter()
                .filter(|e| canonical_key(&e.entity_type) == canonical_key(entity_type))
                .collect();
            of_type.sort();
            if of_type.is_empty() {
                return Ok("none".to_string());
            }
            for entity in &of_type {
                check_cell(&entity.name, &[',', '[', ']', '(', ')', '|', '\n'])?;
            }
            Ok(of_type
                .iter()
                .map(|e| format!("['{}', '{}']", e.name, e.entity_type))
                .collect::<Vec<_>>()
                .join(", "))
        }
        AnswerForm::RoleTable => {
            let GoldAnnotation::Events(events) = gold else {
                return Err(mismatch(prompt, gold));
            };
            let event_type = element_type(prompt)?;
            let Some(event) = events
                .iter()
                .find(|e| canonical_key(&e.event_type) == canonical_key(event_type))
            else {
                return Ok("none".to_string());
            };
            let role_order: Vec<&str> = schema
                .lookup_event(event_type)
                .map(|spec| spec.roles.iter().map(String::as_str).collect())
                .unwrap_or_default();
            let mut arguments = event.arguments.clone();
            arguments.sort_by_key(|(role, content)| {
                let idx = role_order
                    .iter()
                    .position(|r| canonical_key(r) == canonical_key(role))
                    .unwrap_or(usize::MAX);
                (idx, content.clone())
            });
            if arguments.is_empty() {
                return Ok("none".to_string());
            }
            let mut lines = vec!["| event type | argument role | argument content |".to_string()];
            for (role, content) in &arguments {
                check_cell(content, &['|', '\n'])?;
                lines.push(format!("| {} | {role} | {content} |", event.event_type));
            }
            Ok(lines.join("\n"))
        }
    }
}

fn element_type(prompt: &RenderedPrompt) -> Result<&str, ChatError> {
    prompt.element_type.as_deref().ok_or_else(|| {
        ChatError::UnsupportedForm(format!(
            "prompt '{}' asks for {:?} but names no element type",
            prompt.template_id, prompt.answer_form
        ))
    })
}

fn mismatch(prompt: &RenderedPrompt, gold: &GoldAnnotation) -> ChatError {
    ChatError::UnsupportedForm(format!(
        "prompt '{}' requests {:?} but gold is for task {}",
        prompt.template_id,
        prompt.answer_form,
        gold.task()
    ))
}

fn attr_value<'a>(triple: &'a Triple, attribute: &str) -> Option<&'a str> {
    triple
        .attributes
        .iter()
        .find(|(name, _)| canonical_key(name) == canonical_key(attribute))
        .map(|(_, value)| value.as_str())
}

fn present_types<'a>(inventory: Vec<&'a str>, present: impl Fn(&str) -> bool) -> Vec<&'a str> {
    inventory.into_iter().filter(|name| present(name)).collect()
}

/// The closed reply grammars cannot round-trip cells containing their own
/// structural characters; surface that instead of producing garbage.
fn check_cell(cell: &str, forbidden: &[char]) -> Result<(), ChatError> {
    if cell.is_empty() || cell.chars().any(|c| forbidden.contains(&c)) {
        return Err(ChatError::UnsupportedForm(format!(
            "gold value {cell:?} cannot be formatted in the requested answer form"
        )));
    }
    // A value that cleanup would alter cannot survive the round trip either.
    if clean_for_match(cell) != cell {
        return Err(ChatError::UnsupportedForm(format!(
            "gold value {cell:?} is not cleanup-stable"
        )));
    }
    Ok(())
}
