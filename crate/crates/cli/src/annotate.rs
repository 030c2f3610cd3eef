//! Annotation stages: markup parsing, projection, scoring and agreement.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{anyhow, bail, Context};
use hallrate::corpus::{score_rows_csv, AnnotatedRecord, LabelsRecord, MarkupRecord, ScoreRow};
use hallrate::metrics::{self, corpus_kappa, score_corpus, span_stats};
use hallrate::{parse_markup, project_labels, tokenize, AnnotatedText, TokenLabels};
use serde::Serialize;

use crate::args::{AdjudicateArgs, Cli, IaaArgs, ParseArgs, ProjectArgs, ScoreArgs};
use crate::io;
use crate::CmdResult;

pub fn parse(cli: &Cli, a: &ParseArgs) -> CmdResult {
    let records: Vec<MarkupRecord> = io::load(&a.io.input)?;
    let mut out = Vec::new();
    let mut docs: Vec<(String, AnnotatedText)> = Vec::new();
    for r in records.iter().filter(|r| cli.wants_lang(&r.language)) {
        let doc = parse_markup(&r.answer_markup)
            .with_context(|| format!("{}: record `{}`", a.io.input.display(), r.id))?;
        out.push(AnnotatedRecord {
            id: r.id.clone(),
            language: r.language.clone(),
            answer_text: doc.text.clone(),
            spans: doc.spans.clone(),
            annotator: None,
        });
        docs.push((r.language.clone(), doc));
    }
    let n = io::emit_jsonl(cli, &a.io.output, &out)?;
    log::info!("parsed {n} answers");
    if let Some(path) = &a.stats {
        let table = span_stats(docs.iter().map(|(l, d)| (l.as_str(), d)));
        io::emit_text(cli, path, &table.to_csv())?;
    }
    Ok(())
}

pub fn project(cli: &Cli, a: &ProjectArgs) -> CmdResult {
    let records: Vec<AnnotatedRecord> = io::load(&a.io.input)?;
    let overrides: BTreeMap<&str, _> = a.lang_tokenizer.iter().map(|(l, m)| (l.as_str(), *m)).collect();
    let mut out = Vec::new();
    for r in records.iter().filter(|r| cli.wants_lang(&r.language)) {
        let mode = overrides.get(r.language.as_str()).copied().unwrap_or(a.tokenizer);
        let doc = r.document().map_err(|e| anyhow!("record `{}`: {e}", r.id))?;
        let tokens = tokenize(&doc.text, mode);
        let tl = project_labels(&doc, &tokens, a.task).map_err(|e| anyhow!("record `{}`: {e}", r.id))?;
        out.push(LabelsRecord::from_labels(&r.id, &r.language, r.annotator.as_deref(), &tl));
    }
    io::emit_jsonl(cli, &a.io.output, &out)?;
    Ok(())
}

pub fn score(cli: &Cli, a: &ScoreArgs) -> CmdResult {
    let gold: Vec<LabelsRecord> = io::load(&a.gold)?;
    let pred: Vec<LabelsRecord> = io::load(&a.pred)?;
    let by_id: BTreeMap<&str, &LabelsRecord> = pred.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut per_lang: BTreeMap<&str, Vec<(TokenLabels, TokenLabels)>> = BTreeMap::new();
    for g in gold.iter().filter(|g| cli.wants_lang(&g.language)) {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| anyhow!("{}: no prediction for `{}`", a.pred.display(), g.id))?;
        per_lang
            .entry(&g.language)
            .or_default()
            .push((g.token_labels(), p.token_labels()));
    }
    let mut rows = Vec::new();
    for (lang, pairs) in &per_lang {
        let report = score_corpus(pairs.iter().map(|(g, p)| (g, p)), a.task)
            .map_err(|e| anyhow!("language `{lang}`: {e}"))?;
        rows.push(ScoreRow::new(lang, a.source, &report));
    }
    io::emit_text(cli, &a.output, &score_rows_csv(&rows).map_err(anyhow::Error::from)?)?;
    if let Some(path) = &a.perf_output {
        let perfs: Vec<_> = rows.iter().map(ScoreRow::performance).collect();
        io::emit_jsonl(cli, path, &perfs)?;
    }
    Ok(())
}

type Annotations<'a> = BTreeMap<&'a str, BTreeMap<&'a str, BTreeMap<&'a str, &'a LabelsRecord>>>;

/// language -> annotator -> document id -> labels.
fn group_annotations<'a>(cli: &Cli, records: &'a [LabelsRecord]) -> anyhow::Result<Annotations<'a>> {
    let mut out: Annotations = BTreeMap::new();
    for r in records.iter().filter(|r| cli.wants_lang(&r.language)) {
        let annotator = r
            .annotator
            .as_deref()
            .ok_or_else(|| anyhow!("record `{}` has no annotator", r.id))?;
        if out
            .entry(&r.language)
            .or_default()
            .entry(annotator)
            .or_default()
            .insert(&r.id, r)
            .is_some()
        {
            bail!("annotator `{annotator}` labels `{}` twice", r.id);
        }
    }
    Ok(out)
}

fn common_ids<'a>(maps: impl Iterator<Item = &'a BTreeMap<&'a str, &'a LabelsRecord>>) -> BTreeSet<&'a str> {
    let mut common: Option<BTreeSet<&str>> = None;
    for m in maps {
        let ids: BTreeSet<&str> = m.keys().copied().collect();
        common = Some(match common {
            None => ids,
            Some(c) => c.intersection(&ids).copied().collect(),
        });
    }
    common.unwrap_or_default()
}

#[derive(Serialize)]
struct PairAgreement {
    a: String,
    b: String,
    kappa: f64,
    observed_agreement: f64,
}

#[derive(Serialize)]
struct LanguageAgreement {
    language: String,
    annotators: Vec<String>,
    documents: usize,
    mean_kappa: f64,
    pairs: Vec<PairAgreement>,
}

pub fn iaa(cli: &Cli, a: &IaaArgs) -> CmdResult {
    let records: Vec<LabelsRecord> = io::load(&a.io.input)?;
    let grouped = group_annotations(cli, &records)?;
    let mut report = Vec::new();
    for (lang, annotators) in &grouped {
        let ids = common_ids(annotators.values());
        let names: Vec<&str> = annotators.keys().copied().collect();
        let docs: Vec<Vec<TokenLabels>> = annotators
            .values()
            .map(|m| ids.iter().map(|id| m[id].token_labels()).collect())
            .collect();
        let mean_kappa =
            metrics::pairwise_iaa(&docs, a.task).map_err(|e| anyhow!("language `{lang}`: {e}"))?;
        let mut pairs = Vec::new();
        for i in 0..docs.len() {
            for j in i + 1..docs.len() {
                let k = corpus_kappa(&docs[i], &docs[j], a.task)?;
                pairs.push(PairAgreement {
                    a: names[i].to_string(),
                    b: names[j].to_string(),
                    kappa: k.kappa,
                    observed_agreement: k.observed_agreement,
                });
            }
        }
        report.push(LanguageAgreement {
            language: lang.to_string(),
            annotators: names.iter().map(|s| s.to_string()).collect(),
            documents: ids.len(),
            mean_kappa,
            pairs,
        });
    }
    io::emit_json(cli, &a.io.output, &report)?;
    Ok(())
}

#[derive(Serialize)]
struct LanguageAdjudication {
    language: String,
    documents: usize,
    #[serde(flatten)]
    result: metrics::Adjudication,
}

pub fn adjudicate(cli: &Cli, a: &AdjudicateArgs) -> CmdResult {
    let records: Vec<LabelsRecord> = io::load(&a.io.input)?;
    let silver: Vec<LabelsRecord> = io::load(&a.silver)?;
    let grouped = group_annotations(cli, &records)?;
    let silver_by: BTreeMap<(&str, &str), &LabelsRecord> = silver
        .iter()
        .map(|s| ((s.language.as_str(), s.id.as_str()), s))
        .collect();
    let mut report = Vec::new();
    let mut gold = Vec::new();
    for (lang, annotators) in &grouped {
        let ids: Vec<&str> = common_ids(annotators.values())
            .into_iter()
            .filter(|id| silver_by.contains_key(&(*lang, *id)))
            .collect();
        let silver_docs: Vec<TokenLabels> = ids.iter().map(|id| silver_by[&(*lang, *id)].token_labels()).collect();
        let per_annotator: BTreeMap<String, Vec<TokenLabels>> = annotators
            .iter()
            .map(|(name, m)| (name.to_string(), ids.iter().map(|id| m[id].token_labels()).collect()))
            .collect();
        let result = metrics::adjudicate(&per_annotator, &silver_docs, a.threshold, a.task)
            .map_err(|e| anyhow!("language `{lang}`: {e}"))?;
        gold.extend(annotators[result.chosen.as_str()].values().map(|r| (*r).clone()));
        report.push(LanguageAdjudication {
            language: lang.to_string(),
            documents: ids.len(),
            result,
        });
    }
    io::emit_json(cli, &a.io.output, &report)?;
    if let Some(path) = &a.gold_output {
        io::emit_jsonl(cli, path, &gold)?;
    }
    Ok(())
}
