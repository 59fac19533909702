//! Trade-off table emission. All floats are written with exactly six
//! decimal places so that repeated runs and golden-file comparisons are
//! byte-stable across platforms; missing dimensions appear as `missing`
//! (raw inputs) or `undefined` (derived values) in the CSV and as `null`
//! in JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use privlens_core::report::{MethodReport, TradeoffTable};
use serde::Serialize;

/// SVG scatter geometry: practicality 0 → 4 px circles, practicality 1 →
/// 20 px.
const SVG_RADIUS_MIN: f64 = 4.0;
const SVG_RADIUS_SPAN: f64 = 16.0;

struct SixDecimalFormatter;

impl serde_json::ser::Formatter for SixDecimalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.6}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.6}")
    }
}

/// Serializes any value as JSON with fixed six-decimal floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buf, SixDecimalFormatter);
    value
        .serialize(&mut serializer)
        .context("serializing to JSON")?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json_string(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Reads a table back, re-checking every invariant the builders enforce.
/// Weights are renormalized by their sum to absorb the six-decimal
/// quantization (0.333333 × 3 would otherwise miss the sum-to-one gate).
pub fn load_table(path: &Path) -> Result<TradeoffTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut table: TradeoffTable =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let w = table.settings.weights;
    table.settings.weights =
        crate::config::normalized_weights(w.robustness, w.intelligibility, w.throughput)?;
    table.settings.validate()?;
    for row in &table.rows {
        row.validate()?;
    }
    Ok(table)
}

fn fmt_opt(value: Option<f64>, hole: &str) -> String {
    value.map_or_else(|| hole.to_string(), |v| format!("{v:.6}"))
}

/// One row per method under a fixed header; raw metrics that were never
/// supplied read `missing`, values that could not be derived from what was
/// supplied read `undefined`.
pub fn to_csv_string(table: &TradeoffTable) -> String {
    let mut out = String::from(
        "method,privacy_cmap,macro_precision,macro_recall,macro_f1,macro_pr_auc,\
         throughput_fps,robustness_count,intelligibility_mmd,robustness_component,\
         intelligibility_component,throughput_component,practicality\n",
    );
    for row in &table.rows {
        let utility = row.utility.as_ref();
        let components = row.practicality_components.as_ref();
        let cells = [
            row.method_name.clone(),
            fmt_opt(row.privacy.as_ref().map(|p| p.cmap), "missing"),
            fmt_opt(utility.map(|u| u.macro_scores.precision), "missing"),
            fmt_opt(utility.map(|u| u.macro_scores.recall), "missing"),
            fmt_opt(utility.map(|u| u.macro_scores.f1), "missing"),
            fmt_opt(utility.and_then(|u| u.macro_pr_auc), "undefined"),
            fmt_opt(row.throughput_fps, "missing"),
            row.robustness_count
                .map_or_else(|| "missing".to_string(), |c| c.to_string()),
            fmt_opt(row.intelligibility_mmd, "missing"),
            fmt_opt(components.map(|c| c.robustness), "undefined"),
            fmt_opt(components.map(|c| c.intelligibility), "undefined"),
            fmt_opt(components.map(|c| c.throughput), "undefined"),
            fmt_opt(row.practicality, "undefined"),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(table: &TradeoffTable, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(table)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn svg_complete_row(row: &MethodReport) -> Result<(f64, f64, f64)> {
    let missing = |what: &str| -> anyhow::Error {
        anyhow::anyhow!(
            "cannot render SVG: method `{}` has no {what}",
            row.method_name
        )
    };
    let cmap = row
        .privacy
        .as_ref()
        .map(|p| p.cmap)
        .ok_or_else(|| missing("privacy result"))?;
    let f1 = row
        .utility
        .as_ref()
        .map(|u| u.macro_scores.f1)
        .ok_or_else(|| missing("utility result"))?;
    let practicality = row
        .practicality
        .ok_or_else(|| missing("practicality score"))?;
    Ok((cmap, f1, practicality))
}

/// Scatter plot of the privacy/utility plane: x = attribute cMAP (lower is
/// more private), y = detection macro F1, circle radius linear in the
/// fused practicality score. Errors when any method misses a dimension.
pub fn to_svg_string(table: &TradeoffTable) -> Result<String> {
    if table.rows.is_empty() {
        bail!("cannot render SVG: table has no methods");
    }
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 480.0;
    const LEFT: f64 = 60.0;
    const TOP: f64 = 20.0;
    const PLOT_W: f64 = 550.0;
    const PLOT_H: f64 = 400.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         fill=\"none\" stroke=\"#666\"/>\n"
    ));
    for i in 0..=4 {
        let frac = f64::from(i) / 4.0;
        let x = LEFT + frac * PLOT_W;
        let y = TOP + PLOT_H - frac * PLOT_H;
        svg.push_str(&format!(
            "  <text x=\"{x:.6}\" y=\"{:.6}\" font-size=\"10\" text-anchor=\"middle\">{frac:.2}</text>\n",
            TOP + PLOT_H + 14.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.6}\" y=\"{y:.6}\" font-size=\"10\" text-anchor=\"end\">{frac:.2}</text>\n",
            LEFT - 6.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.6}\" y=\"{:.6}\" font-size=\"12\" text-anchor=\"middle\">attribute cMAP \
         (left = stronger privacy)</text>\n",
        LEFT + PLOT_W / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{:.6}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.6})\">detection macro F1</text>\n",
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    ));

    for row in &table.rows {
        let (cmap, f1, practicality) = svg_complete_row(row)?;
        let cx = LEFT + cmap * PLOT_W;
        let cy = TOP + (1.0 - f1) * PLOT_H;
        let r = SVG_RADIUS_MIN + SVG_RADIUS_SPAN * practicality;
        svg.push_str(&format!(
            "  <circle cx=\"{cx:.6}\" cy=\"{cy:.6}\" r=\"{r:.6}\" fill=\"#4477aa\" \
             fill-opacity=\"0.55\" stroke=\"#223a5e\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.6}\" y=\"{:.6}\" font-size=\"11\">{}</text>\n",
            cx + r + 3.0,
            cy + 4.0,
            row.method_name
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_svg(table: &TradeoffTable, path: &Path) -> Result<()> {
    fs::write(path, to_svg_string(table)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
