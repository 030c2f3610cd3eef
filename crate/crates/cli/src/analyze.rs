//! `analyze corr|ttest|lmm`.

use anyhow::{bail, Context};
use hallrate::stats::{
    fit_lmm, lr_test, pearson, ttest_two_sample, AnalysisFrame, FixedSpec, ModelFit, TestResult, TtestVariant,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, AnalyzeKind, Cli, CorrArgs, LmmArgs, TtestArgs};
use crate::io::{self, Table};
use crate::{plot, CmdResult};

pub fn run(cli: &Cli, a: &AnalyzeArgs) -> CmdResult {
    match &a.kind {
        AnalyzeKind::Corr(c) => corr(cli, c),
        AnalyzeKind::Ttest(t) => ttest(cli, t),
        AnalyzeKind::Lmm(l) => lmm(cli, l),
    }
}

#[derive(Serialize)]
struct CorrReport<'a> {
    x: &'a str,
    y: &'a str,
    n: usize,
    r: f64,
    t: f64,
    p_value: f64,
}

fn corr(cli: &Cli, a: &CorrArgs) -> CmdResult {
    let table = Table::read(&a.io.input)?;
    let x = table.numbers(&a.x)?;
    let y = table.numbers(&a.y)?;
    let res = pearson(&x, &y).with_context(|| format!("{}", a.io.input.display()))?;
    io::emit_json(
        cli,
        &a.io.output,
        &CorrReport {
            x: &a.x,
            y: &a.y,
            n: res.n,
            r: res.r,
            t: res.t,
            p_value: res.p_value,
        },
    )?;
    if let Some(path) = &a.plot {
        plot::scatter(path, &x, &y, &a.x, &a.y, res.r)?;
        io::write_sidecar(cli, path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TtestReport {
    value: String,
    group: String,
    levels: [String; 2],
    means: [f64; 2],
    variant: TtestVariant,
    #[serde(flatten)]
    result: TestResult,
}

fn ttest(cli: &Cli, a: &TtestArgs) -> CmdResult {
    let table = Table::read(&a.io.input)?;
    let values = table.numbers(&a.value)?;
    let groups = table.strings(&a.group)?;
    let mut levels: Vec<&str> = groups.iter().map(String::as_str).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() != 2 {
        bail!(
            "{}: column `{}` must have exactly two levels, found {}",
            a.io.input.display(),
            a.group,
            levels.len()
        );
    }
    let pick = |level: &str| -> Vec<f64> {
        values
            .iter()
            .zip(&groups)
            .filter(|(_, g)| g.as_str() == level)
            .map(|(v, _)| *v)
            .collect()
    };
    let (first, second) = (pick(levels[0]), pick(levels[1]));
    let result = ttest_two_sample(&first, &second, a.variant)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    io::emit_json(
        cli,
        &a.io.output,
        &TtestReport {
            value: a.value.clone(),
            group: a.group.clone(),
            levels: [levels[0].to_string(), levels[1].to_string()],
            means: [mean(&first), mean(&second)],
            variant: a.variant,
            result,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct LmmReport {
    group_by: hallrate::stats::GroupBy,
    main_effects: ModelFit,
    interactions: ModelFit,
    lr_test: TestResult,
}

fn lmm(cli: &Cli, a: &LmmArgs) -> CmdResult {
    let frame = AnalysisFrame::from_csv_path(&a.io.input).with_context(|| format!("{}", a.io.input.display()))?;
    let frame = AnalysisFrame::new(
        frame
            .rows
            .into_iter()
            .filter(|r| cli.wants_lang(&r.language))
            .collect(),
    )?;
    let reduced = fit_lmm(&frame, &FixedSpec::main_effects(), a.group_by).context("main-effects model")?;
    let full = fit_lmm(&frame, &FixedSpec::with_interactions(), a.group_by).context("interaction model")?;
    let lr = lr_test(&full, &reduced)?;
    if let Some(path) = &a.plot {
        plot::interaction(path, &full)?;
        io::write_sidecar(cli, path)?;
    }
    io::emit_json(
        cli,
        &a.io.output,
        &LmmReport {
            group_by: a.group_by,
            main_effects: reduced,
            interactions: full,
            lr_test: lr,
        },
    )?;
    Ok(())
}
