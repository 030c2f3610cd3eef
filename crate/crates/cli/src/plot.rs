//! Static SVG figures.

use std::path::Path;

use anyhow::anyhow;
use hallrate::stats::ModelFit;
use hallrate::RateEstimate;
use plotters::prelude::*;

fn draw_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("drawing failed: {e:?}")
}

/// Language x model grid coloured by mean rate, labelled `mean±std`.
pub fn heatmap(path: &Path, estimates: &[RateEstimate]) -> anyhow::Result<()> {
    let mut langs: Vec<&str> = estimates.iter().map(|e| e.language.as_str()).collect();
    let mut models: Vec<&str> = estimates.iter().map(|e| e.model_id.as_str()).collect();
    langs.sort_unstable();
    langs.dedup();
    models.sort_unstable();
    models.dedup();
    let (lo, hi) = estimates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.mean), hi.max(e.mean)));
    let span = if hi > lo { hi - lo } else { 1.0 };

    let cell = (110u32, 34u32);
    let (margin_left, margin_top) = (90u32, 60u32);
    let size = (
        margin_left + cell.0 * models.len().max(1) as u32 + 20,
        margin_top + cell.1 * langs.len().max(1) as u32 + 20,
    );
    let root = SVGBackend::new(path, size).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    root.draw(&Text::new(
        "Corrected hallucination rate (%)",
        (margin_left as i32, 12),
        ("sans-serif", 16),
    ))
    .map_err(draw_err)?;
    for (j, m) in models.iter().enumerate() {
        let x = (margin_left + cell.0 * j as u32 + 6) as i32;
        root.draw(&Text::new(m.to_string(), (x, margin_top as i32 - 20), ("sans-serif", 12)))
            .map_err(draw_err)?;
    }
    for (i, l) in langs.iter().enumerate() {
        let y = (margin_top + cell.1 * i as u32) as i32;
        root.draw(&Text::new(l.to_string(), (10, y + 10), ("sans-serif", 12)))
            .map_err(draw_err)?;
        for (j, m) in models.iter().enumerate() {
            let Some(e) = estimates.iter().find(|e| e.language == *l && e.model_id == *m) else {
                continue;
            };
            let x = (margin_left + cell.0 * j as u32) as i32;
            let t = (e.mean - lo) / span;
            let color = RGBColor(255, (230.0 - 170.0 * t) as u8, (200.0 - 170.0 * t) as u8);
            root.draw(&Rectangle::new(
                [(x, y), (x + cell.0 as i32 - 2, y + cell.1 as i32 - 2)],
                color.filled(),
            ))
            .map_err(draw_err)?;
            root.draw(&Text::new(
                format!("{:.2}±{:.2}", e.mean, e.std),
                (x + 8, y + 10),
                ("sans-serif", 12),
            ))
            .map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)?;
    Ok(())
}

fn padded(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    (lo - pad, hi + pad)
}

pub fn scatter(path: &Path, x: &[f64], y: &[f64], x_name: &str, y_name: &str, r: f64) -> anyhow::Result<()> {
    let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let (x0, x1) = padded(x);
    let (y0, y1) = padded(y);
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{y_name} vs {x_name} (r = {r:.3})"), ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc(x_name)
        .y_desc(y_name)
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(x.iter().zip(y).map(|(&a, &b)| Circle::new((a, b), 4, BLUE.filled())))
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Predicted rate against standardized language support for small and
/// large models, other predictors at their means.
pub fn interaction(path: &Path, fit: &ModelFit) -> anyhow::Result<()> {
    let coef = |name: &str| fit.coef(name).unwrap_or(0.0);
    let b0 = coef("(Intercept)");
    let bs = coef("size_class");
    let bl = coef("n_supported_langs");
    let bsl = coef("size_class:n_supported_langs");
    let predict = |s: f64, z: f64| b0 + bs * s + bl * z + bsl * s * z;
    let zs: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
    let all: Vec<f64> = zs.iter().flat_map(|&z| [predict(0.0, z), predict(1.0, z)]).collect();
    let (y0, y1) = padded(&all);

    let root = SVGBackend::new(path, (640, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Size x language support", ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(-2.0..2.0, y0..y1)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("n_supported_langs (z)")
        .y_desc("predicted rate")
        .draw()
        .map_err(draw_err)?;
    for (s, label, color) in [(0.0, "small", BLUE), (1.0, "large", RED)] {
        chart
            .draw_series(LineSeries::new(zs.iter().map(|&z| (z, predict(s, z))), color.stroke_width(2)))
            .map_err(draw_err)?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}
