//! Parsers for assistant replies, one per requested answer form.
//!
//! Real model output drifts from the requested shape, so each parser accepts
//! a small closed grammar (documented in `docs/answer-grammar.md`) instead of
//! a single format: parenthesized tuples, bracketed pairs, pipe-drawn tables
//! with optional alignment rows, comma/newline separation, and the
//! record-style `"role": .. "argument": ..` shape. Anything outside the
//! grammar fails loudly; an explicit none-signal is the only way to produce
//! [`ParsedAnswer::NoneAnswer`].
//!
//! Parsers are pure and never fabricate content: every returned cell is a
//! substring of the reply after the documented cleanup (full-width
//! punctuation mapped to ASCII, wrapping quotes and trailing punctuation
//! stripped, type names case-folded onto their inventory spelling).

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::schema::canonical_key;

/// Tagged result of parsing one model reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedAnswer {
    /// Canonicalized, deduplicated type names, order-preserving.
    TypeList(Vec<String>),
    PairTable {
        header: (String, String),
        rows: Vec<(String, String)>,
    },
    /// `(entity name, entity type)` pairs.
    EntityList(Vec<(String, String)>),
    RoleTable(Vec<RoleRow>),
    /// Produced only from an explicit none-signal, never from a parse failure.
    NoneAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleRow {
    pub event_type: String,
    pub role: String,
    pub content: String,
}

/// A parse outcome plus per-row warnings (dropped rows, unknown types).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub answer: ParsedAnswer,
    pub warnings: Vec<String>,
}

impl Parsed {
    fn new(answer: ParsedAnswer, warnings: Vec<String>) -> Self {
        Parsed { answer, warnings }
    }

    pub fn is_none_answer(&self) -> bool {
        matches!(self.answer, ParsedAnswer::NoneAnswer)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unparseable reply: no recognizable structure and no none-signal")]
    Unparseable,
    #[error("no well-formed row: {0}")]
    ArityMismatch(String),
}

/// Map full-width CJK punctuation onto its ASCII counterpart so one grammar
/// serves both languages. Sentence-final `。` is left alone (it may be part
/// of an extracted span); cleanup strips it only in trailing position.
pub fn normalize_reply(reply: &str) -> String {
    reply
        .chars()
        .map(|c| match c {
            '，' | '、' => ',',
            '（' => '(',
            '）' => ')',
            '［' | '【' => '[',
            '］' | '】' => ']',
            '｛' => '{',
            '｝' => '}',
            '：' => ':',
            '；' => ';',
            '！' => '!',
            '？' => '?',
            '｜' => '|',
            '\u{3000}' => ' ',
            '\u{201c}' | '\u{201d}' => '"',
            '\u{2018}' | '\u{2019}' => '\'',
            other => other,
        })
        .collect()
}

/// Cell cleanup: trim whitespace, strip matching wrapping quotes/backticks,
/// strip trailing punctuation. Interior text is preserved byte-exactly.
pub fn clean_cell(cell: &str) -> String {
    let mut s = cell.trim();
    loop {
        let before = s;
        s = s.trim();
        let mut chars = s.chars();
        if let (Some(first), Some(last)) = (chars.next(), chars.next_back()) {
            if first == last && matches!(first, '\'' | '"' | '`') && s.chars().count() >= 2 {
                s = &s[first.len_utf8()..s.len() - last.len_utf8()];
                continue;
            }
        }
        s = s.trim_end_matches(['.', ',', ';', ':', '!', '?', '。']);
        if s == before {
            break;
        }
    }
    s.to_string()
}

/// Cleanup applied to strings before comparison in scoring; identical to the
/// parser's cell cleanup.
pub fn clean_for_match(text: &str) -> String {
    clean_cell(&normalize_reply(text))
}

static NONE_SIGNAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^[\s\p{P}\p{S}]*(none|无|没有)[\s\p{P}\p{S}]*$").expect("valid regex")
});

/// True iff the reply is an explicit none-signal: the token `none` (or
/// Chinese `无`/`没有`) alone, modulo surrounding whitespace and punctuation.
pub fn is_none_signal(reply: &str) -> bool {
    NONE_SIGNAL.is_match(&normalize_reply(reply))
}

static PAREN_GROUP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\(([^()]*)\)").expect("valid regex"));
static BRACKET_GROUP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").expect("valid regex"));
static ROW_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*•]|\d{1,3}[.)])\s+").expect("valid regex"));
static ALIGNMENT_CELL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^:?-{2,}:?$").expect("valid regex"));
static RECORD_FIELD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""(event_type|event type|role|argument|argument content|content)"\s*:\s*"([^"]*)""#)
        .expect("valid regex")
});

/// Strip a leading list bullet or `1.` / `1)` numbering from a row.
fn strip_row_prefix(line: &str) -> &str {
    match ROW_PREFIX.find(line) {
        Some(m) => &line[m.end()..],
        None => line,
    }
}

fn match_inventory<'a, S: AsRef<str>>(name: &str, inventory: &'a [S]) -> Option<&'a str> {
    let key = canonical_key(name);
    inventory
        .iter()
        .map(AsRef::as_ref)
        .find(|candidate| canonical_key(candidate) == key)
}

/// Parse a Stage I type reply: tuple, comma/semicolon/newline separated, or
/// one name per line. Names outside `inventory` are dropped with a warning.
pub fn parse_type_list<S: AsRef<str>>(reply: &str, inventory: &[S]) -> Result<Parsed, ParseError> {
    debug_assert!(!inventory.is_empty());
    if is_none_signal(reply) {
        return Ok(Parsed::new(ParsedAnswer::NoneAnswer, Vec::new()));
    }
    let text = normalize_reply(reply);
    if text.trim().is_empty() {
        return Err(ParseError::Unparseable);
    }

    let mut chunks: Vec<&str> = PAREN_GROUP
        .captures_iter(&text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect();
    if chunks.is_empty() {
        chunks = BRACKET_GROUP
            .captures_iter(&text)
            .map(|c| c.get(1).expect("group").as_str())
            .collect();
    }
    let whole;
    if chunks.is_empty() {
        whole = text.clone();
        chunks = vec![whole.as_str()];
    }

    let mut names = Vec::new();
    let mut seen = Vec::new();
    let mut warnings = Vec::new();
    for chunk in chunks {
        for piece in chunk.split(['\n', ',', ';']) {
            let cleaned = clean_cell(strip_row_prefix(piece));
            if cleaned.is_empty() || cleaned.chars().all(|c| c == '.') {
                continue;
            }
            match match_inventory(&cleaned, inventory) {
                Some(canonical) => {
                    let key = canonical_key(canonical);
                    if !seen.contains(&key) {
                        seen.push(key);
                        names.push(canonical.to_string());
                    }
                }
                None => warnings.push(format!("type '{cleaned}' not in inventory; dropped")),
            }
        }
    }
    Ok(Parsed::new(ParsedAnswer::TypeList(names), warnings))
}

/// Parse a Stage I event-type reply; same grammar as [`parse_type_list`]
/// (one-type-per-line replies are already covered by newline splitting).
pub fn parse_event_types<S: AsRef<str>>(reply: &str, inventory: &[S]) -> Result<Parsed, ParseError> {
    parse_type_list(reply, inventory)
}

/// Raw rows harvested from a reply before arity checks.
struct RawRows {
    rows: Vec<Vec<String>>,
    /// True when some structure (a table shell, a group) was recognized even
    /// if it yielded zero data rows.
    structure_seen: bool,
}

fn harvest_rows(text: &str, header_names: &[&str]) -> RawRows {
    let lines: Vec<&str> = text
        .lines()
        .map(strip_row_prefix)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();

    let is_header_row = |cells: &[String]| -> bool {
        cells.len() == header_names.len()
            && cells
                .iter()
                .zip(header_names)
                .all(|(cell, name)| canonical_key(&clean_cell(cell)) == canonical_key(name))
    };

    if lines.iter().any(|l| l.contains('|')) {
        let mut rows = Vec::new();
        let mut structure_seen = false;
        for line in &lines {
            if !line.contains('|') {
                continue;
            }
            structure_seen = true;
            let mut cells: Vec<&str> = line.split('|').collect();
            while cells.first().is_some_and(|c| c.trim().is_empty()) {
                cells.remove(0);
            }
            while cells.last().is_some_and(|c| c.trim().is_empty()) {
                cells.pop();
            }
            if cells.is_empty() {
                continue;
            }
            if cells.iter().all(|c| ALIGNMENT_CELL.is_match(c.trim())) {
                continue;
            }
            let cells: Vec<String> = cells.iter().map(|c| c.trim().to_string()).collect();
            if is_header_row(&cells) {
                continue;
            }
            rows.push(cells);
        }
        return RawRows {
            rows,
            structure_seen,
        };
    }

    let paren: Vec<&str> = PAREN_GROUP
        .captures_iter(text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect();
    let bracket: Vec<&str> = BRACKET_GROUP
        .captures_iter(text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect();
    let groups = if !paren.is_empty() { paren } else { bracket };
    if !groups.is_empty() {
        let rows: Vec<Vec<String>> = groups
            .into_iter()
            .map(|g| g.split(',').map(|c| c.trim().to_string()).collect())
            .filter(|cells: &Vec<String>| !is_header_row(cells))
            .collect();
        return RawRows {
            rows,
            structure_seen: true,
        };
    }

    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .filter(|cells: &Vec<String>| !is_header_row(cells))
        .collect();
    RawRows {
        rows,
        structure_seen: false,
    }
}

fn finish_rows<T>(
    good: Vec<T>,
    malformed: usize,
    structure_seen: bool,
    what: &str,
) -> Result<Vec<T>, ParseError> {
    if good.is_empty() && malformed > 0 {
        return Err(ParseError::ArityMismatch(format!(
            "{malformed} {what} row(s) rejected, none parseable"
        )));
    }
    if good.is_empty() && !structure_seen && malformed == 0 {
        return Err(ParseError::Unparseable);
    }
    Ok(good)
}

/// Parse a two-column extraction reply. Accepts parenthesized rows,
/// delimiter-separated rows, and pipe-drawn tables; a row matching the
/// requested header is stripped.
pub fn parse_pair_table(reply: &str, header: (&str, &str)) -> Result<Parsed, ParseError> {
    if is_none_signal(reply) {
        return Ok(Parsed::new(ParsedAnswer::NoneAnswer, Vec::new()));
    }
    let text = normalize_reply(reply);
    if text.trim().is_empty() {
        return Err(ParseError::Unparseable);
    }
    let raw = harvest_rows(&text, &[header.0, header.1]);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut malformed = 0usize;
    for (i, cells) in raw.rows.iter().enumerate() {
        let cleaned: Vec<String> = cells.iter().map(|c| clean_cell(c)).collect();
        if cleaned.len() != 2 || cleaned.iter().any(String::is_empty) {
            malformed += 1;
            warnings.push(format!(
                "row {} has {} cell(s) after cleanup, expected 2; dropped",
                i + 1,
                cleaned.iter().filter(|c| !c.is_empty()).count()
            ));
            continue;
        }
        rows.push((cleaned[0].clone(), cleaned[1].clone()));
    }
    let rows = finish_rows(rows, malformed, raw.structure_seen, "pair")?;
    Ok(Parsed::new(
        ParsedAnswer::PairTable {
            header: (header.0.to_string(), header.1.to_string()),
            rows,
        },
        warnings,
    ))
}

/// Parse an entity reply: bracketed `['name', 'type']` pairs (the requested
/// form), or the pair-table shapes as fallbacks. Pairs whose type is not in
/// `inventory` are dropped with a warning.
pub fn parse_entity_list<S: AsRef<str>>(reply: &str, inventory: &[S]) -> Result<Parsed, ParseError> {
    debug_assert!(!inventory.is_empty());
    if is_none_signal(reply) {
        return Ok(Parsed::new(ParsedAnswer::NoneAnswer, Vec::new()));
    }
    let text = normalize_reply(reply);
    if text.trim().is_empty() {
        return Err(ParseError::Unparseable);
    }
    let raw = harvest_entity_rows(&text);
    let mut items = Vec::new();
    let mut warnings = Vec::new();
    let mut malformed = 0usize;
    for (i, cells) in raw.rows.iter().enumerate() {
        let cleaned: Vec<String> = cells.iter().map(|c| clean_cell(c)).collect();
        if cleaned.len() != 2 || cleaned.iter().any(String::is_empty) {
            malformed += 1;
            warnings.push(format!(
                "entity row {} has {} cell(s) after cleanup, expected 2; dropped",
                i + 1,
                cleaned.iter().filter(|c| !c.is_empty()).count()
            ));
            continue;
        }
        match match_inventory(&cleaned[1], inventory) {
            Some(ty) => items.push((cleaned[0].clone(), ty.to_string())),
            None => warnings.push(format!(
                "entity '{}' has unknown type '{}'; dropped",
                cleaned[0], cleaned[1]
            )),
        }
    }
    let items = finish_rows(items, malformed, raw.structure_seen, "entity")?;
    Ok(Parsed::new(ParsedAnswer::EntityList(items), warnings))
}

fn harvest_entity_rows(text: &str) -> RawRows {
    // The requested form is bracketed pairs, so brackets take precedence.
    let bracket: Vec<&str> = BRACKET_GROUP
        .captures_iter(text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect();
    if !bracket.is_empty() {
        let rows = bracket
            .into_iter()
            .map(|g| g.split(',').map(|c| c.trim().to_string()).collect())
            .collect();
        return RawRows {
            rows,
            structure_seen: true,
        };
    }
    harvest_rows(text, &["entity name", "entity type"])
}

/// Parse an argument-role reply into `(event type, role, content)` rows.
/// Accepts pipe tables (3-cell rows, or 2-cell rows that omit the event
/// type), tuple rows, and the record-style `"role": .. "argument": ..`
/// shape. Rows whose content is the literal `None` placeholder are dropped;
/// roles outside `roles` are dropped with a warning.
pub fn parse_role_table<S: AsRef<str>>(
    reply: &str,
    event_type: &str,
    roles: &[S],
) -> Result<Parsed, ParseError> {
    debug_assert!(!roles.is_empty());
    if is_none_signal(reply) {
        return Ok(Parsed::new(ParsedAnswer::NoneAnswer, Vec::new()));
    }
    let text = normalize_reply(reply);
    if text.trim().is_empty() {
        return Err(ParseError::Unparseable);
    }

    let record_fields: Vec<(String, String)> = RECORD_FIELD
        .captures_iter(&text)
        .map(|c| {
            (
                c.get(1).expect("key").as_str().to_string(),
                c.get(2).expect("value").as_str().to_string(),
            )
        })
        .collect();
    let (raw_rows, structure_seen) = if record_fields.iter().any(|(k, _)| k == "role") {
        let mut rows = Vec::new();
        let mut current_event = event_type.to_string();
        let mut pending_role: Option<String> = None;
        for (key, value) in record_fields {
            match key.as_str() {
                "event_type" | "event type" => current_event = value,
                "role" => pending_role = Some(value),
                "argument" | "argument content" | "content" => {
                    if let Some(role) = pending_role.take() {
                        rows.push(vec![current_event.clone(), role, value]);
                    }
                }
                _ => {}
            }
        }
        (rows, true)
    } else {
        let harvested = harvest_rows(
            &text,
            &["event type", "argument role", "argument content"],
        );
        // A Chinese table shell uses the translated header.
        let rows = harvested
            .rows
            .into_iter()
            .filter(|cells| {
                let keys: Vec<String> = cells.iter().map(|c| canonical_key(&clean_cell(c))).collect();
                keys != ["事件类型", "论元角色", "论元内容"]
            })
            .collect();
        (rows, harvested.structure_seen)
    };

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut malformed = 0usize;
    for (i, cells) in raw_rows.iter().enumerate() {
        let cleaned: Vec<String> = cells.iter().map(|c| clean_cell(c)).collect();
        let (ev, role, content) = match cleaned.len() {
            3 => (cleaned[0].clone(), cleaned[1].clone(), cleaned[2].clone()),
            2 => (event_type.to_string(), cleaned[0].clone(), cleaned[1].clone()),
            n => {
                malformed += 1;
                warnings.push(format!(
                    "argument row {} has {n} cell(s) after cleanup, expected 2 or 3; dropped",
                    i + 1
                ));
                continue;
            }
        };
        if canonical_key(&content) == "none" || content.is_empty() {
            continue;
        }
        let role = match match_inventory(&role, roles) {
            Some(role) => role.to_string(),
            None => {
                warnings.push(format!("argument role '{role}' not in role list; dropped"));
                continue;
            }
        };
        let ev = if canonical_key(&ev) == canonical_key(event_type) || ev.is_empty() {
            event_type.to_string()
        } else {
            ev
        };
        rows.push(RoleRow {
            event_type: ev,
            role,
            content,
        });
    }
    let rows = finish_rows(rows, malformed, structure_seen, "argument")?;
    Ok(Parsed::new(ParsedAnswer::RoleTable(rows), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NYT11: &[&str] = &[
        "location-located_in",
        "administrative_division-country",
        "person-place_lived",
        "person-company",
        "person-nationality",
        "company-founders",
        "country-administrative_divisions",
        "person-children",
        "country-capital",
        "deceased_person-place_of_death",
        "neighborhood-neighborhood_of",
        "person-place_of_birth",
    ];
    const CONLLPP: &[&str] = &["LOC", "MISC", "ORG", "PER"];
    const ACE_TYPES: &[&str] = &[
        "Life:Die",
        "Justice:Arrest-Jail",
        "Contact:Phone-Write",
        "Life:Marry",
        "Conflict:Attack",
        "Personnel:Nominate",
        "Business:Declare-Bankruptcy",
        "Justice:Sue",
    ];
    const DIE_ROLES: &[&str] = &["Agent", "Victim", "Instrument", "Time", "Place"];

    #[test]
    fn type_list_paper_tuple() {
        let parsed = parse_type_list("(person-nationality)", NYT11).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::TypeList(vec!["person-nationality".into()])
        );
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn type_list_comma_separated() {
        let parsed = parse_type_list("LOC, MISC", CONLLPP).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::TypeList(vec!["LOC".into(), "MISC".into()])
        );
    }

    #[test]
    fn type_list_none_signal() {
        for reply in ["none", "None.", "(none)", "  NONE  ", "无"] {
            let parsed = parse_type_list(reply, CONLLPP).unwrap();
            assert_eq!(parsed.answer, ParsedAnswer::NoneAnswer, "reply {reply:?}");
        }
    }

    #[test]
    fn type_list_unknown_dropped_with_warning() {
        let parsed = parse_type_list("(FOO, LOC)", CONLLPP).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::TypeList(vec!["LOC".into()]));
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("FOO"));
    }

    #[test]
    fn type_list_dedup_preserves_order_and_spelling() {
        let parsed = parse_type_list("misc, loc, MISC", CONLLPP).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::TypeList(vec!["MISC".into(), "LOC".into()])
        );
    }

    #[test]
    fn type_list_empty_reply_unparseable() {
        assert_eq!(parse_type_list("   ", CONLLPP), Err(ParseError::Unparseable));
    }

    #[test]
    fn event_types_single_and_multiline() {
        let parsed = parse_event_types("Life:Die", ACE_TYPES).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::TypeList(vec!["Life:Die".into()]));
        let parsed = parse_event_types("Life:Die\nConflict:Attack", ACE_TYPES).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::TypeList(vec!["Life:Die".into(), "Conflict:Attack".into()])
        );
    }

    #[test]
    fn event_types_unknown_filtered_to_empty() {
        let parsed = parse_event_types("Weather:Storm", ACE_TYPES).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::TypeList(vec![]));
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn pair_table_paper_tuple() {
        let parsed = parse_pair_table("(Jacques Chirac, France)", ("person", "country")).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::PairTable {
                header: ("person".into(), "country".into()),
                rows: vec![("Jacques Chirac".into(), "France".into())],
            }
        );
    }

    #[test]
    fn pair_table_pipe_drawn_with_header_and_alignment() {
        let reply = "\
| person | organization |
| --- | --- |
| George Reyes | Google |
| Shona Brown | Google |
| David Drummond | Google |
| Jonathan Rosenberg | Google |";
        let parsed = parse_pair_table(reply, ("person", "organization")).unwrap();
        match parsed.answer {
            ParsedAnswer::PairTable { rows, .. } => {
                assert_eq!(rows.len(), 4);
                assert_eq!(rows[0], ("George Reyes".into(), "Google".into()));
                assert_eq!(rows[3], ("Jonathan Rosenberg".into(), "Google".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pair_table_none_and_malformed_rows() {
        let parsed = parse_pair_table("none", ("person", "country")).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::NoneAnswer);

        let parsed =
            parse_pair_table("(Jacques Chirac, France)\n(lonely)", ("person", "country")).unwrap();
        match parsed.answer {
            ParsedAnswer::PairTable { rows, .. } => assert_eq!(rows.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parsed.warnings.len(), 1);

        assert!(matches!(
            parse_pair_table("(lonely)", ("person", "country")),
            Err(ParseError::ArityMismatch(_))
        ));
    }

    #[test]
    fn pair_table_header_echo_stripped() {
        let reply = "('person', 'country')\n(Jacques Chirac, France)";
        let parsed = parse_pair_table(reply, ("person", "country")).unwrap();
        match parsed.answer {
            ParsedAnswer::PairTable { rows, .. } => {
                assert_eq!(rows, vec![("Jacques Chirac".into(), "France".into())]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn entity_list_paper_outputs() {
        let parsed = parse_entity_list("[\"Japan\", \"LOC\"], [\"Syrian\", \"LOC\"]", CONLLPP).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::EntityList(vec![
                ("Japan".into(), "LOC".into()),
                ("Syrian".into(), "LOC".into()),
            ])
        );

        let parsed = parse_entity_list("['Tasmania','ORG'],['Victoria','ORG']", CONLLPP).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::EntityList(vec![
                ("Tasmania".into(), "ORG".into()),
                ("Victoria".into(), "ORG".into()),
            ])
        );
    }

    #[test]
    fn entity_list_unknown_type_dropped() {
        let parsed = parse_entity_list("['Tokyo', 'CITY'], ['Japan', 'LOC']", CONLLPP).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::EntityList(vec![("Japan".into(), "LOC".into())])
        );
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn entity_list_none() {
        let parsed = parse_entity_list("none", CONLLPP).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::NoneAnswer);
    }

    #[test]
    fn role_table_record_style_paper_output() {
        let reply = "\"arguments\": [\n{\n\"role\": \"Victim\",\n\"argument\": \"over a million of his own citizens\"\n},\n{\n\"role\": \"Agent\",\n\"argument\": \"Saddam Hussein\"\n}";
        let parsed = parse_role_table(reply, "Life:Die", DIE_ROLES).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::RoleTable(vec![
                RoleRow {
                    event_type: "Life:Die".into(),
                    role: "Victim".into(),
                    content: "over a million of his own citizens".into(),
                },
                RoleRow {
                    event_type: "Life:Die".into(),
                    role: "Agent".into(),
                    content: "Saddam Hussein".into(),
                },
            ])
        );
    }

    #[test]
    fn role_table_pipe_drops_none_content() {
        let reply = "\
| event type | argument role | argument content |
| --- | --- | --- |
| Life:Die | Victim | over a million of his own citizens |
| Life:Die | Instrument | None |
| Life:Die | Agent | Saddam Hussein |";
        let parsed = parse_role_table(reply, "Life:Die", DIE_ROLES).unwrap();
        match parsed.answer {
            ParsedAnswer::RoleTable(rows) => {
                assert_eq!(rows.len(), 2);
                assert!(rows.iter().all(|r| r.role != "Instrument"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn role_table_unknown_role_warned() {
        let reply = "| Life:Die | Bystander | someone |";
        let parsed = parse_role_table(reply, "Life:Die", DIE_ROLES).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::RoleTable(vec![]));
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("Bystander"));
    }

    #[test]
    fn role_table_none() {
        let parsed = parse_role_table("none", "Life:Die", DIE_ROLES).unwrap();
        assert_eq!(parsed.answer, ParsedAnswer::NoneAnswer);
    }

    #[test]
    fn full_width_punctuation_mapped() {
        let parsed = parse_pair_table("（周杰伦，范特西）", ("人物", "音乐专辑")).unwrap();
        assert_eq!(
            parsed.answer,
            ParsedAnswer::PairTable {
                header: ("人物".into(), "音乐专辑".into()),
                rows: vec![("周杰伦".into(), "范特西".into())],
            }
        );
    }

    #[test]
    fn clean_cell_rules() {
        assert_eq!(clean_cell("  'France'. "), "France");
        assert_eq!(clean_cell("\"Jacques Chirac\""), "Jacques Chirac");
        assert_eq!(clean_cell("`LOC`"), "LOC");
        assert_eq!(clean_cell("U.S."), "U.S");
        assert_eq!(clean_cell("a b"), "a b");
        assert_eq!(clean_cell("''"), "");
    }

    #[test]
    fn none_is_signal_only_when_alone() {
        assert!(is_none_signal("none"));
        assert!(is_none_signal("None."));
        assert!(is_none_signal("(无)"));
        assert!(!is_none_signal("none of the above types apply"));
        assert!(!is_none_signal("nonexistent"));
    }
}
