//! CSV artifacts and SVG line charts.

use std::fs;
use std::path::{Path, PathBuf};

use ordlab_core::explorer::{EpochDistribution, PermutationRun};
use ordlab_core::metrics::MetricsRecord;
use ordlab_core::nn::hex;
use ordlab_core::tta::{RobustnessTable, TtaReport};

use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 12] = [
    "run_id",
    "epoch",
    "step",
    "train_loss",
    "train_acc",
    "test_loss",
    "test_acc",
    "l2_norm",
    "k_current",
    "t",
    "wall_seconds",
    "event",
];

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("fields are UTF-8"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn metrics_csv(records: &[MetricsRecord]) -> Result<String> {
    csv_string(
        &METRICS_HEADER,
        records.iter().map(|r| {
            vec![
                r.run_id.clone(),
                r.epoch.to_string(),
                r.step.to_string(),
                r.train_loss.to_string(),
                r.train_acc.to_string(),
                r.test_loss.to_string(),
                r.test_acc.to_string(),
                r.l2_norm.to_string(),
                r.k_current.to_string(),
                r.t.to_string(),
                format!("{:.3}", r.wall_seconds),
                r.event.clone(),
            ]
        }),
    )
}

/// Event rows as a plain log, one line each.
pub fn event_log(records: &[MetricsRecord]) -> String {
    records
        .iter()
        .filter(|r| r.is_event())
        .map(|r| format!("epoch {} step {}: {}\n", r.epoch, r.step, r.event))
        .collect()
}

pub fn ledger_csv(runs: &[PermutationRun]) -> Result<String> {
    csv_string(
        &[
            "epoch",
            "parent_hash",
            "permutation",
            "test_loss",
            "test_acc",
            "checkpoint_hash",
        ],
        runs.iter().map(|r| {
            let perm: Vec<String> = r.permutation.iter().map(usize::to_string).collect();
            vec![
                r.epoch.to_string(),
                hex(&r.parent_hash),
                perm.join("-"),
                r.test_loss.to_string(),
                r.test_acc.to_string(),
                hex(&r.checkpoint_hash),
            ]
        }),
    )
}

pub fn distribution_csv(dists: &[EpochDistribution]) -> Result<String> {
    csv_string(
        &[
            "epoch",
            "min_accuracy",
            "mean_accuracy",
            "max_accuracy",
            "min_loss",
            "max_loss",
            "runs",
        ],
        dists.iter().map(|d| {
            vec![
                d.epoch.to_string(),
                d.min_accuracy.to_string(),
                d.mean_accuracy.to_string(),
                d.max_accuracy.to_string(),
                d.min_loss.to_string(),
                d.max_loss.to_string(),
                d.runs.to_string(),
            ]
        }),
    )
}

/// One row per model tag: the plain row, then `<tag>+tta` when present.
pub fn robustness_csv(tag: &str, table: &RobustnessTable) -> Result<String> {
    let mut header = vec!["model"];
    header.extend(table.columns.iter().map(String::as_str));
    let row = |name: String, values: &[f64]| {
        let mut r = vec![name];
        r.extend(values.iter().map(f64::to_string));
        r
    };
    let mut rows = vec![row(tag.to_string(), &table.plain)];
    if let Some(t) = &table.tta {
        rows.push(row(format!("{tag}+tta"), t));
    }
    csv_string(&header, rows)
}

pub fn tta_csv(plain_accuracy: f64, report: &TtaReport) -> Result<String> {
    let mut rows = vec![
        vec![
            "plain".into(),
            "all".into(),
            plain_accuracy.to_string(),
            String::new(),
            String::new(),
        ],
        vec![
            "tta".into(),
            "all".into(),
            report.accuracy.to_string(),
            report.correct.to_string(),
            report.count.to_string(),
        ],
    ];
    for (c, &(correct, total)) in report.per_class.iter().enumerate() {
        if total > 0 {
            rows.push(vec![
                "tta".into(),
                c.to_string(),
                (correct as f64 / total as f64).to_string(),
                correct.to_string(),
                total.to_string(),
            ]);
        }
    }
    csv_string(&["mode", "class", "accuracy", "correct", "count"], rows)
}

/// Parsed metrics table: header plus the numeric value of every cell that
/// parses as a number.
pub struct MetricsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_metrics_csv(text: &str, origin: &str) -> Result<MetricsTable> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::format(origin, format!("line 1: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(origin, format!("line {}: {e}", i + 2)))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(MetricsTable { header, rows })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Line chart of `ys` against `xs`. Output depends only on the inputs.
pub fn line_chart_svg(title: &str, x_label: &str, xs: &[f64], ys: &[f64]) -> String {
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = span(xs);
    let finite: Vec<f64> = ys.iter().copied().filter(|v| v.is_finite()).collect();
    let (y0, y1) = span(&finite);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let points: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    s.push_str(&format!(
        "<line x1=\"{MARGIN}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    for (v, anchor_y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN)] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN - 4.0,
            anchor_y + 4.0,
            tick(v)
        ));
    }
    for (v, anchor_x) in [(x0, MARGIN), (x1, WIDTH - MARGIN)] {
        s.push_str(&format!(
            "<text x=\"{anchor_x:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            HEIGHT - MARGIN + 16.0,
            tick(v)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n",
        points.join(" ")
    ));
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const NOT_PLOTTED: [&str; 5] = ["run_id", "event", "epoch", "step", "wall_seconds"];

/// One SVG per requested metric (all numeric columns when `metrics` is
/// empty) against epoch. Event rows are skipped so the x-axis is monotone.
pub fn emit_plots(csv_text: &str, origin: &str, metrics: &[String], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let table = read_metrics_csv(csv_text, origin)?;
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(origin, format!("no column `{name}`")))
    };
    let epoch = col("epoch")?;
    let event = table.header.iter().position(|h| h == "event");
    let names: Vec<String> = if metrics.is_empty() {
        table
            .header
            .iter()
            .filter(|h| !NOT_PLOTTED.contains(&h.as_str()))
            .cloned()
            .collect()
    } else {
        metrics.to_vec()
    };
    let rows: Vec<(usize, &Vec<String>)> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| event.is_none_or(|e| r.get(e).is_none_or(|v| v.is_empty())))
        .collect();
    let number = |line: usize, r: &Vec<String>, c: usize, name: &str| -> Result<f64> {
        r.get(c).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| {
            Error::format(
                origin,
                format!("line {}: column `{name}` is not numeric", line + 2),
            )
        })
    };
    let xs = rows
        .iter()
        .map(|(i, r)| number(*i, r, epoch, "epoch"))
        .collect::<Result<Vec<_>>>()?;
    let mut written = Vec::new();
    for name in &names {
        let c = col(name)?;
        let ys = rows
            .iter()
            .map(|(i, r)| number(*i, r, c, name))
            .collect::<Result<Vec<_>>>()?;
        let path = out_dir.join(format!("{name}.svg"));
        write_text(&path, &line_chart_svg(name, "epoch", &xs, &ys))?;
        written.push(path);
    }
    Ok(written)
}
