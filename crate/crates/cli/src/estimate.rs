//! Counting, correction, aggregation and the article filter.

use std::collections::BTreeMap;

use anyhow::anyhow;
use hallrate::corpus::{filter_articles, ArticleRecord, LabelsRecord};
use hallrate::estimator::{aggregate_estimates, count_detections, estimate_runs, rate_matrix_csv, PerfTable};
use hallrate::{DetectionRun, DetectorPerformance, TokenLabels};
use serde::Serialize;

use crate::args::{Cli, CountArgs, EstimateArgs, FilterArgs};
use crate::{io, plot, CmdResult};

pub fn count(cli: &Cli, a: &CountArgs) -> CmdResult {
    if !cli.seeds.contains(&a.seed) {
        log::warn!("generation seed {} is not among --seeds {:?}", a.seed, cli.seeds);
    }
    let preds: Vec<LabelsRecord> = io::load(&a.io.input)?;
    let mut per_lang: BTreeMap<&str, Vec<TokenLabels>> = BTreeMap::new();
    for p in preds.iter().filter(|p| cli.wants_lang(&p.language)) {
        per_lang.entry(&p.language).or_default().push(p.token_labels());
    }
    let mut runs = Vec::new();
    for (lang, labels) in per_lang {
        let (h_det, n) = count_detections(&labels).map_err(|e| anyhow!("language `{lang}`: {e}"))?;
        runs.push(DetectionRun {
            language: lang.to_string(),
            model_id: a.model.clone(),
            seed: a.seed,
            detector_instance: a.detector_instance.clone(),
            h_det,
            n,
        });
    }
    if a.append {
        io::append_jsonl(cli, &a.io.output, &runs)?;
    } else {
        io::emit_jsonl(cli, &a.io.output, &runs)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    runs: Vec<hallrate::estimator::RunEstimate>,
    estimates: Vec<hallrate::RateEstimate>,
}

pub fn estimate(cli: &Cli, a: &EstimateArgs) -> CmdResult {
    let runs: Vec<DetectionRun> = io::load(&a.io.input)?;
    let perfs: Vec<DetectorPerformance> = io::load(&a.perf)?;
    let total = runs.len();
    let runs: Vec<DetectionRun> = runs
        .into_iter()
        .filter(|r| cli.wants_lang(&r.language) && cli.seeds.contains(&r.seed))
        .collect();
    if runs.len() < total {
        log::warn!("skipped {} runs outside the selected languages or seeds", total - runs.len());
    }
    let table = PerfTable::with_source(perfs, a.source)?;
    let per_run = estimate_runs(&runs, &table, a.task)?;
    let estimates = aggregate_estimates(&per_run)?;
    for e in &estimates {
        if !e.flags.is_empty() {
            log::warn!("{}/{}: {}", e.language, e.model_id, e.flags.join(", "));
        }
    }
    io::emit_text(cli, &a.io.output, &rate_matrix_csv(&estimates))?;
    if let Some(path) = &a.heatmap {
        plot::heatmap(path, &estimates)?;
        io::write_sidecar(cli, path)?;
    }
    if let Some(path) = &a.estimates_output {
        io::emit_json(
            cli,
            path,
            &EstimateReport {
                runs: per_run,
                estimates,
            },
        )?;
    }
    Ok(())
}

pub fn filter(cli: &Cli, a: &FilterArgs) -> CmdResult {
    let articles: Vec<ArticleRecord> = io::load(&a.io.input)?;
    let selected = articles.into_iter().filter(|r| cli.wants_lang(&r.language));
    let (kept, report) = filter_articles(selected, a.min_len, a.min_depth);
    io::emit_jsonl(cli, &a.io.output, &kept)?;
    io::flush_stdout(&format!("{}\n", serde_json::to_string(&report)?));
    Ok(())
}
