//! Micro-P/R/F1 scoring of extraction results against gold.
//!
//! Five regimes: relation triples matched on spans+relation (`border`) or
//! additionally on entity types (`strict`, with inverse-relation
//! equivalences applied before matching), complete-match NER, event
//! arguments matched as exact `(event type, role, content)` tuples, and the
//! fractional word-level regime where each matched role slot earns the
//! token-overlap F1 of its contents. String cleanup is identical to the
//! parse module's cell cleanup, so scoring never disagrees with parsing
//! about quoting or full-width punctuation.
//!
//! Word-level credit aggregation is defined by this kit (slot-wise
//! credit-maximizing assignment over token-F1 weights); reports label the
//! regime accordingly since official scorers may aggregate differently.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parse::clean_for_match;
use crate::schema::{canonical_key, Language, Task, TaskSchema};
use crate::types::{Entity, EventRecord, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ReBorder,
    ReStrict,
    NerExact,
    EeWordlevel,
    EeEntitylevel,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::ReBorder => "re-border",
            Regime::ReStrict => "re-strict",
            Regime::NerExact => "ner-exact",
            Regime::EeWordlevel => "ee-wordlevel",
            Regime::EeEntitylevel => "ee-entitylevel",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("regime unsupported: {0}")]
    RegimeUnsupported(String),
}

/// Per-type tallies; fractional tp only in the word-level regime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub tp: f64,
    pub n_pred: u64,
    pub n_gold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: Task,
    pub regime: Regime,
    pub tp: f64,
    pub n_pred: u64,
    pub n_gold: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_type: BTreeMap<String, TypeCounts>,
}

/// Pooled-count precision/recall/F1 with the zero conventions: divisions by
/// zero yield 0, as does a zero precision+recall sum.
pub fn micro_f1(tp: f64, n_pred: u64, n_gold: u64) -> (f64, f64, f64) {
    let precision = if n_pred == 0 { 0.0 } else { tp / n_pred as f64 };
    let recall = if n_gold == 0 { 0.0 } else { tp / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

impl MetricReport {
    fn from_counts(
        task: Task,
        regime: Regime,
        per_type: BTreeMap<String, TypeCounts>,
    ) -> MetricReport {
        let tp = per_type.values().map(|c| c.tp).sum();
        let n_pred = per_type.values().map(|c| c.n_pred).sum();
        let n_gold = per_type.values().map(|c| c.n_gold).sum();
        let (precision, recall, f1) = micro_f1(tp, n_pred, n_gold);
        MetricReport {
            task,
            regime,
            tp,
            n_pred,
            n_gold,
            precision,
            recall,
            f1,
            per_type,
        }
    }

    /// Pool counts from per-sample reports into one report.
    pub fn merge<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Option<MetricReport> {
        let mut iter = reports.into_iter();
        let first = iter.next()?;
        let mut per_type = first.per_type.clone();
        let (task, regime) = (first.task, first.regime);
        for report in iter {
            debug_assert_eq!(report.regime, regime);
            for (ty, counts) in &report.per_type {
                let entry = per_type.entry(ty.clone()).or_default();
                entry.tp += counts.tp;
                entry.n_pred += counts.n_pred;
                entry.n_gold += counts.n_gold;
            }
        }
        Some(MetricReport::from_counts(task, regime, per_type))
    }

    /// One row per report, percentages to one decimal.
    pub fn render_table(reports: &[MetricReport]) -> String {
        let mut out = format!("{:<16} {:>6} {:>6} {:>6}\n", "regime", "P", "R", "F1");
        for report in reports {
            out.push_str(&format!(
                "{:<16} {:>6.1} {:>6.1} {:>6.1}\n",
                report.regime.to_string(),
                report.precision * 100.0,
                report.recall * 100.0,
                report.f1 * 100.0,
            ));
        }
        out
    }
}

/// Inverse-relation declarations normalized for matching: each member maps
/// to the pair's first (canonical) member; triples carrying the second
/// member swap subject and object. A self-paired relation is symmetric and
/// its argument order is ignored.
#[derive(Debug, Clone, Default)]
pub struct Equivalences {
    canonical: HashMap<String, (String, bool)>,
    symmetric: HashSet<String>,
}

impl Equivalences {
    pub fn none() -> Self {
        Equivalences::default()
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Self {
        let mut eq = Equivalences::default();
        for (a, b) in pairs {
            let a_key = canonical_key(a.as_ref());
            let b_key = canonical_key(b.as_ref());
            if a_key == b_key {
                eq.symmetric.insert(a_key);
                continue;
            }
            eq.canonical.insert(a_key.clone(), (a_key.clone(), false));
            eq.canonical.insert(b_key, (a_key, true));
        }
        eq
    }

    pub fn from_schema(schema: &TaskSchema) -> Self {
        Self::from_pairs(&schema.inverse_relations)
    }

    /// Canonical relation key plus whether subject/object swap.
    fn orient(&self, relation_key: &str) -> (String, bool) {
        match self.canonical.get(relation_key) {
            Some((canon, swap)) => (canon.clone(), *swap),
            None => (relation_key.to_string(), false),
        }
    }

    fn is_symmetric(&self, relation_key: &str) -> bool {
        self.symmetric.contains(relation_key)
    }
}

type ReKey = (String, String, String, Option<(String, String)>);

fn re_key(triple: &Triple, regime: Regime, equiv: &Equivalences) -> Result<ReKey, EvalError> {
    let (canon_rel, swap) = equiv.orient(&canonical_key(&triple.relation));
    let (mut subject, mut object) = (
        clean_for_match(&triple.subject),
        clean_for_match(&triple.object),
    );
    let (mut subject_type, mut object_type) = (
        triple.subject_type.as_deref().map(canonical_key),
        triple.object_type.as_deref().map(canonical_key),
    );
    if swap {
        std::mem::swap(&mut subject, &mut object);
        std::mem::swap(&mut subject_type, &mut object_type);
    }
    if equiv.is_symmetric(&canon_rel) && subject > object {
        std::mem::swap(&mut subject, &mut object);
        std::mem::swap(&mut subject_type, &mut object_type);
    }
    let types = match regime {
        Regime::ReBorder => None,
        Regime::ReStrict => match (subject_type, object_type) {
            (Some(st), Some(ot)) => Some((st, ot)),
            _ => {
                return Err(EvalError::RegimeUnsupported(format!(
                    "strict evaluation needs entity types, but triple ({}, {}, {}) has none",
                    triple.subject, triple.relation, triple.object
                )))
            }
        },
        other => {
            return Err(EvalError::RegimeUnsupported(format!(
                "{other} is not a relation regime"
            )))
        }
    };
    Ok((subject, canon_rel, object, types))
}

fn tally<K: Ord + Clone, F: Fn(&K) -> String>(
    pred_keys: Vec<K>,
    gold_keys: Vec<K>,
    type_of: F,
) -> BTreeMap<String, TypeCounts> {
    let mut per_type: BTreeMap<String, TypeCounts> = BTreeMap::new();
    let mut pred_counts: BTreeMap<K, u64> = BTreeMap::new();
    let mut gold_counts: BTreeMap<K, u64> = BTreeMap::new();
    for key in &pred_keys {
        *pred_counts.entry(key.clone()).or_default() += 1;
        per_type.entry(type_of(key)).or_default().n_pred += 1;
    }
    for key in &gold_keys {
        *gold_counts.entry(key.clone()).or_default() += 1;
        per_type.entry(type_of(key)).or_default().n_gold += 1;
    }
    for (key, pred_n) in &pred_counts {
        if let Some(gold_n) = gold_counts.get(key) {
            per_type.entry(type_of(key)).or_default().tp += (*pred_n).min(*gold_n) as f64;
        }
    }
    per_type
}

/// Score relation triples: one-to-one matching after cleanup and
/// inverse-relation normalization; `strict` additionally requires both
/// entity types to match.
pub fn score_re(
    pred: &BTreeSet<Triple>,
    gold: &BTreeSet<Triple>,
    regime: Regime,
    equiv: &Equivalences,
) -> Result<MetricReport, EvalError> {
    if !matches!(regime, Regime::ReBorder | Regime::ReStrict) {
        return Err(EvalError::RegimeUnsupported(format!(
            "{regime} is not a relation regime"
        )));
    }
    let pred_keys = pred
        .iter()
        .map(|t| re_key(t, regime, equiv))
        .collect::<Result<Vec<_>, _>>()?;
    let gold_keys = gold
        .iter()
        .map(|t| re_key(t, regime, equiv))
        .collect::<Result<Vec<_>, _>>()?;
    let per_type = tally(pred_keys, gold_keys, |k| k.1.clone());
    Ok(MetricReport::from_counts(Task::Re, regime, per_type))
}

/// Complete-match NER scoring: tp counts exact `(name, type)` matches.
pub fn score_ner(pred: &BTreeSet<Entity>, gold: &BTreeSet<Entity>) -> MetricReport {
    let key = |e: &Entity| (clean_for_match(&e.name), canonical_key(&e.entity_type));
    let per_type = tally(
        pred.iter().map(key).collect(),
        gold.iter().map(key).collect(),
        |k| k.1.clone(),
    );
    MetricReport::from_counts(Task::Ner, Regime::NerExact, per_type)
}

fn argument_tuples(events: &BTreeSet<EventRecord>) -> Vec<(String, String, String)> {
    events
        .iter()
        .flat_map(|event| {
            let ev = canonical_key(&event.event_type);
            event.arguments.iter().map(move |(role, content)| {
                (ev.clone(), canonical_key(role), clean_for_match(content))
            })
        })
        .collect()
}

/// Entity-level event scoring: the unit is the `(event type, role, content)`
/// tuple, matched exactly after cleanup.
pub fn score_ee_entity(pred: &BTreeSet<EventRecord>, gold: &BTreeSet<EventRecord>) -> MetricReport {
    let per_type = tally(argument_tuples(pred), argument_tuples(gold), |k| k.0.clone());
    MetricReport::from_counts(Task::Ee, Regime::EeEntitylevel, per_type)
}

/// Word-level event scoring: within each `(event type, role)` slot, pair
/// predicted and gold contents by the credit-maximizing assignment of
/// token-overlap F1 (whitespace tokens for English, characters for Chinese)
/// and accumulate the credits as fractional tp.
pub fn score_ee_wordlevel(
    pred: &BTreeSet<EventRecord>,
    gold: &BTreeSet<EventRecord>,
    language: Language,
) -> MetricReport {
    let mut slots: BTreeMap<(String, String), (Vec<String>, Vec<String>)> = BTreeMap::new();
    for (ev, role, content) in argument_tuples(pred) {
        slots.entry((ev, role)).or_default().0.push(content);
    }
    for (ev, role, content) in argument_tuples(gold) {
        slots.entry((ev, role)).or_default().1.push(content);
    }
    let mut per_type: BTreeMap<String, TypeCounts> = BTreeMap::new();
    for ((ev, _role), (pred_contents, gold_contents)) in &slots {
        let entry = per_type.entry(ev.clone()).or_default();
        entry.n_pred += pred_contents.len() as u64;
        entry.n_gold += gold_contents.len() as u64;
        if pred_contents.is_empty() || gold_contents.is_empty() {
            continue;
        }
        let weights: Vec<Vec<f64>> = pred_contents
            .iter()
            .map(|p| gold_contents.iter().map(|g| token_f1(p, g, language)).collect())
            .collect();
        entry.tp += max_assignment(&weights);
    }
    MetricReport::from_counts(Task::Ee, Regime::EeWordlevel, per_type)
}

fn tokens(text: &str, language: Language) -> Vec<String> {
    match language {
        Language::En => text.split_whitespace().map(str::to_string).collect(),
        Language::Zh => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

/// Token-overlap F1 between two contents (multiset overlap).
pub fn token_f1(pred: &str, gold: &str, language: Language) -> f64 {
    let pred_tokens = tokens(pred, language);
    let gold_tokens = tokens(gold, language);
    if pred_tokens.is_empty() || gold_tokens.is_empty() {
        return 0.0;
    }
    let mut gold_counts: HashMap<&str, u64> = HashMap::new();
    for token in &gold_tokens {
        *gold_counts.entry(token).or_default() += 1;
    }
    let mut overlap = 0u64;
    for token in &pred_tokens {
        if let Some(count) = gold_counts.get_mut(token.as_str()) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    let (p, r, f1) = micro_f1(overlap as f64, pred_tokens.len() as u64, gold_tokens.len() as u64);
    let _ = (p, r);
    f1
}

/// Exact maximum-weight one-to-one assignment. Instances are per-slot
/// argument lists, so the smaller side is tiny; beyond 16 elements a greedy
/// pairing stands in (unreachable on real data).
fn max_assignment(weights: &[Vec<f64>]) -> f64 {
    if weights.is_empty() || weights[0].is_empty() {
        return 0.0;
    }
    let (rows, cols) = (weights.len(), weights[0].len());
    // DP over subsets of the smaller side.
    let transposed: Vec<Vec<f64>>;
    let w: &[Vec<f64>] = if cols <= rows {
        weights
    } else {
        transposed = (0..cols)
            .map(|j| (0..rows).map(|i| weights[i][j]).collect())
            .collect();
        &transposed
    };
    let m = w[0].len();
    if m > 16 {
        let mut flat: Vec<f64> = w.iter().flatten().copied().collect();
        flat.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        return flat.into_iter().take(w.len().min(m)).sum();
    }
    let mut dp = vec![0.0f64; 1 << m];
    for row in w {
        let prev = dp.clone();
        for mask in 0..(1usize << m) {
            for (j, &weight) in row.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let candidate = prev[mask] + weight;
                    let next = mask | (1 << j);
                    if candidate > dp[next] {
                        dp[next] = candidate;
                    }
                }
            }
        }
    }
    dp.iter().copied().fold(0.0, f64::max)
}

/// Score many samples and pool the counts. Runs sample-level work in
/// parallel when the `parallel` feature is enabled.
pub fn score_re_batch(
    pairs: &[(BTreeSet<Triple>, BTreeSet<Triple>)],
    regime: Regime,
    equiv: &Equivalences,
) -> Result<MetricReport, EvalError> {
    let reports = map_samples(pairs, |(pred, gold)| score_re(pred, gold, regime, equiv));
    let reports = reports.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(MetricReport::merge(reports.iter())
        .unwrap_or_else(|| MetricReport::from_counts(Task::Re, regime, BTreeMap::new())))
}

pub fn score_ner_batch(pairs: &[(BTreeSet<Entity>, BTreeSet<Entity>)]) -> MetricReport {
    let reports = map_samples(pairs, |(pred, gold)| score_ner(pred, gold));
    MetricReport::merge(reports.iter())
        .unwrap_or_else(|| MetricReport::from_counts(Task::Ner, Regime::NerExact, BTreeMap::new()))
}

pub fn score_ee_batch(
    pairs: &[(BTreeSet<EventRecord>, BTreeSet<EventRecord>)],
    regime: Regime,
    language: Language,
) -> Result<MetricReport, EvalError> {
    let reports: Vec<MetricReport> = match regime {
        Regime::EeEntitylevel => map_samples(pairs, |(pred, gold)| score_ee_entity(pred, gold)),
        Regime::EeWordlevel => {
            map_samples(pairs, |(pred, gold)| score_ee_wordlevel(pred, gold, language))
        }
        other => {
            return Err(EvalError::RegimeUnsupported(format!(
                "{other} is not an event regime"
            )))
        }
    };
    Ok(MetricReport::merge(reports.iter())
        .unwrap_or_else(|| MetricReport::from_counts(Task::Ee, regime, BTreeMap::new())))
}

#[cfg(feature = "parallel")]
fn map_samples<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_samples<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(items: &[(&str, &str, &str)]) -> BTreeSet<Triple> {
        items
            .iter()
            .map(|(s, r, o)| Triple::new(*s, *r, *o))
            .collect()
    }

    fn entities(items: &[(&str, &str)]) -> BTreeSet<Entity> {
        items.iter().map(|(n, t)| Entity::new(*n, *t)).collect()
    }

    #[test]
    fn micro_f1_arithmetic() {
        let (p, r, f1) = micro_f1(1.0, 2, 3);
        assert_eq!(p, 0.5);
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
        assert!((f1 - 0.4).abs() < 1e-12);
        assert_eq!(micro_f1(0.0, 0, 5), (0.0, 0.0, 0.0));
        for k in [1u64, 7, 100] {
            assert_eq!(micro_f1(k as f64, k, k), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn re_border_exact_match() {
        let t = triples(&[("Jacques Chirac", "person-nationality", "France")]);
        let report = score_re(&t, &t, Regime::ReBorder, &Equivalences::none()).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn re_inverse_equivalence_counts_as_match() {
        let pred = triples(&[("Delhi", "location-located_in", "India")]);
        let gold = triples(&[("India", "location-contains", "Delhi")]);
        let equiv = Equivalences::from_pairs(&[("location-contains", "location-located_in")]);
        let report = score_re(&pred, &gold, Regime::ReBorder, &equiv).unwrap();
        assert_eq!(report.tp, 1.0);
        let without = score_re(&pred, &gold, Regime::ReBorder, &Equivalences::none()).unwrap();
        assert_eq!(without.tp, 0.0);
    }

    #[test]
    fn re_micro_f1_pooling() {
        let pred = triples(&[("a", "r", "b"), ("c", "r", "d")]);
        let gold = triples(&[("a", "r", "b"), ("x", "r", "y"), ("p", "r", "q"), ("m", "r", "n")]);
        let report = score_re(&pred, &gold, Regime::ReBorder, &Equivalences::none()).unwrap();
        assert_eq!(report.precision, 0.5);
        assert_eq!(report.recall, 0.25);
        assert!((report.f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn re_strict_requires_types() {
        let pred = triples(&[("a", "r", "b")]);
        assert!(matches!(
            score_re(&pred, &pred, Regime::ReStrict, &Equivalences::none()),
            Err(EvalError::RegimeUnsupported(_))
        ));
        let typed: BTreeSet<Triple> = [Triple::new("a", "r", "b").with_types("人物", "作品")]
            .into_iter()
            .collect();
        let report = score_re(&typed, &typed, Regime::ReStrict, &Equivalences::none()).unwrap();
        assert_eq!(report.f1, 1.0);
    }

    #[test]
    fn re_strict_type_mismatch_not_matched() {
        let pred: BTreeSet<Triple> = [Triple::new("a", "r", "b").with_types("person", "country")]
            .into_iter()
            .collect();
        let gold: BTreeSet<Triple> = [Triple::new("a", "r", "b").with_types("person", "location")]
            .into_iter()
            .collect();
        let strict = score_re(&pred, &gold, Regime::ReStrict, &Equivalences::none()).unwrap();
        assert_eq!(strict.tp, 0.0);
        let border = score_re(&pred, &gold, Regime::ReBorder, &Equivalences::none()).unwrap();
        assert_eq!(border.tp, 1.0);
    }

    #[test]
    fn ner_paper_example_scores_fifty() {
        let pred = entities(&[("Japan", "LOC"), ("Syrian", "LOC")]);
        let gold = entities(&[("Japan", "LOC"), ("Syrian", "MISC")]);
        let report = score_ner(&pred, &gold);
        assert_eq!(report.tp, 1.0);
        assert_eq!((report.precision, report.recall, report.f1), (0.5, 0.5, 0.5));
        assert_eq!(report.per_type["loc"].n_pred, 2);
        assert_eq!(report.per_type["misc"].n_gold, 1);
    }

    #[test]
    fn ner_empty_pred_zeroes() {
        let report = score_ner(&BTreeSet::new(), &entities(&[("Japan", "LOC")]));
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ee_entity_level_tuples() {
        let saddam = |args: &[(&str, &str)]| -> BTreeSet<EventRecord> {
            [EventRecord::new(
                "Life:Die",
                args.iter().map(|(r, c)| (r.to_string(), c.to_string())).collect(),
            )]
            .into_iter()
            .collect()
        };
        let gold = saddam(&[
            ("Victim", "over a million of his own citizens"),
            ("Agent", "Saddam Hussein"),
        ]);
        let report = score_ee_entity(&gold, &gold);
        assert_eq!(report.f1, 1.0);

        let pred = saddam(&[("Agent", "Saddam Hussein")]);
        let report = score_ee_entity(&pred, &gold);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 0.5);
        assert!((report.f1 - 2.0 / 3.0).abs() < 1e-12);

        let wrong_type: BTreeSet<EventRecord> = [EventRecord::new(
            "Conflict:Attack",
            vec![
                ("Victim".into(), "over a million of his own citizens".into()),
                ("Agent".into(), "Saddam Hussein".into()),
            ],
        )]
        .into_iter()
        .collect();
        assert_eq!(score_ee_entity(&wrong_type, &gold).tp, 0.0);
    }

    // Independent brute-force token matcher used as the oracle for the
    // frozen word-level expectations.
    fn brute_force_token_f1(pred: &str, gold: &str) -> f64 {
        let p: Vec<&str> = pred.split_whitespace().collect();
        let g: Vec<&str> = gold.split_whitespace().collect();
        let mut used = vec![false; g.len()];
        let mut overlap = 0usize;
        for token in &p {
            if let Some(pos) = g
                .iter()
                .enumerate()
                .position(|(i, t)| !used[i] && t == token)
            {
                used[pos] = true;
                overlap += 1;
            }
        }
        if p.is_empty() || g.is_empty() {
            return 0.0;
        }
        let precision = overlap as f64 / p.len() as f64;
        let recall = overlap as f64 / g.len() as f64;
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    #[test]
    fn token_f1_matches_brute_force_and_frozen_value() {
        let pred = "19 Rangers";
        let gold = "19 Rangers that died";
        let expected = brute_force_token_f1(pred, gold);
        assert!((expected - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_f1(pred, gold, Language::En), expected);
        assert_eq!(token_f1("a b", "a b", Language::En), 1.0);
        assert_eq!(token_f1("x y", "a b", Language::En), 0.0);
    }

    #[test]
    fn wordlevel_slot_assignment() {
        let pred: BTreeSet<EventRecord> = [EventRecord::new(
            "Life:Die",
            vec![("Victim".into(), "19 Rangers".into())],
        )]
        .into_iter()
        .collect();
        let gold: BTreeSet<EventRecord> = [EventRecord::new(
            "Life:Die",
            vec![("Victim".into(), "19 Rangers that died".into())],
        )]
        .into_iter()
        .collect();
        let report = score_ee_wordlevel(&pred, &gold, Language::En);
        assert!((report.tp - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.n_pred, 1);
        assert_eq!(report.n_gold, 1);
    }

    #[test]
    fn chinese_tokenization_is_character_level() {
        assert_eq!(token_f1("周杰伦", "周杰伦", Language::Zh), 1.0);
        // 2 of 3 characters overlap with 2 of 2: P=2/3, R=1, F1=0.8.
        assert!((token_f1("周杰伦", "周杰", Language::Zh) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn max_assignment_picks_best_pairing() {
        // Greedy would pair row0-col0 (0.9) then row1-col1 (0.0) = 0.9;
        // the exact assignment takes 0.8 + 0.7 = 1.5.
        let weights = vec![vec![0.9, 0.8], vec![0.7, 0.0]];
        assert!((max_assignment(&weights) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn swap_symmetry_for_exact_regimes() {
        let pred = entities(&[("a", "LOC"), ("b", "LOC"), ("c", "ORG")]);
        let gold = entities(&[("a", "LOC"), ("d", "MISC")]);
        let forward = score_ner(&pred, &gold);
        let backward = score_ner(&gold, &pred);
        assert_eq!(forward.precision, backward.recall);
        assert_eq!(forward.recall, backward.precision);
        assert_eq!(forward.f1, backward.f1);
    }

    #[test]
    fn per_type_counts_sum_to_totals() {
        let pred = entities(&[("a", "LOC"), ("b", "ORG")]);
        let gold = entities(&[("a", "LOC"), ("c", "MISC")]);
        let report = score_ner(&pred, &gold);
        let tp: f64 = report.per_type.values().map(|c| c.tp).sum();
        let np: u64 = report.per_type.values().map(|c| c.n_pred).sum();
        let ng: u64 = report.per_type.values().map(|c| c.n_gold).sum();
        assert_eq!((tp, np, ng), (report.tp, report.n_pred, report.n_gold));
    }

    #[test]
    fn table_rendering_one_decimal_percent() {
        let pred = entities(&[("Japan", "LOC"), ("Syrian", "LOC")]);
        let gold = entities(&[("Japan", "LOC"), ("Syrian", "MISC")]);
        let table = MetricReport::render_table(&[score_ner(&pred, &gold)]);
        assert!(table.contains("50.0"));
        assert!(table.contains("ner-exact"));
    }
}
