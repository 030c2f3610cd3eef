//! Synthetic stages: injection, detector simulation and the recovery check.

use std::fs::File;
use std::io::BufReader;

use anyhow::{anyhow, Context};
use hallrate::corpus::{AnnotatedRecord, LabelsRecord, Record};
use hallrate::synth::{self, resources, InjectionPlan, NoiseSpec, RecoveryReport, RecoverySpec};
use serde::{Deserialize, Serialize};

use crate::args::{Cli, InjectArgs, SimulateArgs, ValidateArgs};
use crate::io;
use crate::CmdResult;

/// A clean answer awaiting injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanRecord {
    pub id: String,
    pub language: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl Record for CleanRecord {
    const SCHEMA: &'static str = "clean";
}

fn load_pairs(path: &std::path::Path) -> anyhow::Result<Vec<(String, String)>> {
    let file = File::open(path).with_context(|| format!("{}", path.display()))?;
    resources::load_pairs_tsv(BufReader::new(file)).with_context(|| format!("{}", path.display()))
}

pub fn inject(cli: &Cli, a: &InjectArgs) -> CmdResult {
    let mut plan = InjectionPlan::builtin(a.seed);
    for &(t, v) in &a.intensity {
        plan = plan.with_intensity(t, v);
    }
    if let Some(p) = &a.gazetteer {
        plan.gazetteer = load_pairs(p)?;
    }
    if let Some(p) = &a.negations {
        plan.negations = load_pairs(p)?;
    }
    plan.validate().map_err(|e| crate::UsageError(e.to_string()))?;
    let records: Vec<CleanRecord> = io::load(&a.io.input)?;
    let mut out = Vec::with_capacity(records.len());
    let mut short = 0usize;
    for r in records.iter().filter(|r| cli.wants_lang(&r.language)) {
        let inj = synth::inject(&r.id, &r.text, r.reference.as_deref(), &plan)
            .with_context(|| format!("record `{}`", r.id))?;
        short += inj.shortfalls.len();
        out.push(AnnotatedRecord {
            id: r.id.clone(),
            language: r.language.clone(),
            answer_text: inj.doc.text,
            spans: inj.doc.spans,
            annotator: None,
        });
    }
    if short > 0 {
        log::warn!("{short} requested injections had no applicable site");
    }
    io::emit_jsonl(cli, &a.io.output, &out)?;
    Ok(())
}

pub fn simulate(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    let noise = NoiseSpec {
        fp_rate: a.fp_rate,
        fn_rate: a.fn_rate,
        seed: a.noise_seed,
    };
    noise.validate().map_err(|e| crate::UsageError(e.to_string()))?;
    let gold: Vec<LabelsRecord> = io::load(&a.io.input)?;
    let instance = format!("simulated-{}", a.noise_seed);
    let mut out = Vec::new();
    for g in gold.iter().filter(|g| cli.wants_lang(&g.language)) {
        let pred = synth::simulate_detector(&g.token_labels(), &noise, &g.id)
            .map_err(|e| anyhow!("record `{}`: {e}", g.id))?;
        out.push(LabelsRecord::from_labels(&g.id, &g.language, Some(&instance), &pred));
    }
    io::emit_jsonl(cli, &a.io.output, &out)?;
    Ok(())
}

#[derive(Serialize)]
struct ValidationSummary {
    target: f64,
    runs: Vec<RecoveryReport>,
    mean_hr_est: f64,
    mean_abs_error: f64,
    mean_naive_abs_error: f64,
}

pub fn validate(cli: &Cli, a: &ValidateArgs) -> CmdResult {
    let mut runs = Vec::new();
    for &seed in &cli.seeds {
        let spec = RecoverySpec {
            n_docs: a.docs,
            silver_docs: a.silver_docs,
            tokens_per_doc: a.tokens_per_doc,
            target_rate: a.q,
            fp_rate: a.fp_rate,
            fn_rate: a.fn_rate,
            seed,
        };
        runs.push(synth::recovery_experiment(&spec).map_err(|e| crate::UsageError(e.to_string()))?);
    }
    let k = runs.len() as f64;
    let mean = |f: fn(&RecoveryReport) -> f64| runs.iter().map(f).sum::<f64>() / k;
    let summary = ValidationSummary {
        target: 100.0 * a.q,
        mean_hr_est: mean(|r| r.hr_est),
        mean_abs_error: mean(|r| r.abs_error),
        mean_naive_abs_error: mean(|r| r.naive_abs_error),
        runs,
    };
    let mut text = String::new();
    for r in &summary.runs {
        text.push_str(&format!(
            "seed {}: P={:.4} R={:.4} HR_est={:.3}% naive={:.3}% true={:.3}% |error|={:.3} (naive {:.3}) vs {:.1}\n",
            r.spec.seed,
            r.precision,
            r.recall,
            r.hr_est,
            r.naive,
            r.true_rate,
            r.abs_error,
            r.naive_abs_error,
            summary.target
        ));
    }
    text.push_str(&format!(
        "mean: HR_est={:.3}% |error|={:.3} (naive {:.3})\n",
        summary.mean_hr_est, summary.mean_abs_error, summary.mean_naive_abs_error
    ));
    io::flush_stdout(&text);
    if let Some(path) = &a.output {
        io::emit_json(cli, path, &summary)?;
    }
    Ok(())
}
