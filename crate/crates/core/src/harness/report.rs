use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::summary::{summarize, SummaryRow};
use super::ExperimentResult;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    /// `boxplot_<setting>.svg` per setting; a result without settings gets
    /// one empty `boxplot_<name>.svg`.
    BoxplotGrid,
    /// `mae_lines.svg`: MAE against the swept parameter, one line per method.
    MaeLines,
    /// `results.csv` and `summary.csv`.
    Csv,
    /// `results.json` and `summary.json`.
    Json,
}

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boxplot_grid" | "boxplot-grid" => Ok(ReportKind::BoxplotGrid),
            "mae_lines" | "mae-lines" => Ok(ReportKind::MaeLines),
            "csv" => Ok(ReportKind::Csv),
            "json" => Ok(ReportKind::Json),
            other => Err(Error::Unknown { kind: "report kind", name: other.to_string() }),
        }
    }
}

/// Writes the report files of `kind` into `dir` and returns their paths.
pub fn emit_report(result: &ExperimentResult, kind: ReportKind, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let summary = summarize(result);
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    match kind {
        ReportKind::Csv => {
            let mut buf = Vec::new();
            write_results_csv(result, &mut buf)?;
            put("results.csv".into(), buf)?;
            let mut buf = Vec::new();
            write_summary_csv(&summary, &mut buf)?;
            put("summary.csv".into(), buf)?;
        }
        ReportKind::Json => {
            put("results.json".into(), (serde_json::to_string_pretty(&result.rows)? + "\n").into_bytes())?;
            put("summary.json".into(), (serde_json::to_string_pretty(&summary)? + "\n").into_bytes())?;
        }
        ReportKind::BoxplotGrid => {
            if result.cells.is_empty() {
                let svg = boxplot_svg(result, &result.name, &[], &summary);
                put(format!("boxplot_{}.svg", file_stem(&result.name)), svg.into_bytes())?;
            }
            for cell in &result.cells {
                let svg = boxplot_svg(result, &cell.id, &cell.methods, &summary);
                put(format!("boxplot_{}.svg", file_stem(&cell.id)), svg.into_bytes())?;
            }
        }
        ReportKind::MaeLines => {
            put("mae_lines.svg".into(), mae_lines_svg(result, &summary).into_bytes())?;
        }
    }
    Ok(written)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    if v.is_finite() { v.to_string() } else { String::new() }
}

/// `setting,method,rep,beta_hat,error,wall_time_s`
pub fn write_results_csv<W: std::io::Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["setting", "method", "rep", "beta_hat", "error", "wall_time_s"])?;
    for r in &result.rows {
        w.write_record([
            r.setting.clone(),
            r.method.clone(),
            r.rep.to_string(),
            opt(r.beta_hat),
            r.error.clone().unwrap_or_default(),
            opt(r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: std::io::Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "setting", "method", "n_ok", "n_failed", "mean", "mean_bias", "mae", "median", "q1", "q3",
        "whisker_low", "whisker_high", "min", "max", "sweep_value",
    ])?;
    for s in summary {
        w.write_record([
            s.setting.clone(),
            s.method.clone(),
            s.n_ok.to_string(),
            s.n_failed.to_string(),
            num(s.mean),
            num(s.mean_bias),
            num(s.mae),
            num(s.median),
            num(s.q1),
            num(s.q3),
            num(s.whisker_low),
            num(s.whisker_high),
            num(s.min),
            num(s.max),
            opt(s.sweep_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn y(&self, v: f64) -> f64 {
        self.top + self.height * (self.hi - v) / (self.hi - self.lo)
    }

    fn axes(&self, svg: &mut String, y_label: &str) {
        let (l, t, b) = (self.left, self.top, self.top + self.height);
        let r = self.left + self.width;
        let _ = writeln!(svg, r#"<line class="axis" x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<line class="axis" x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}" stroke="black"/>"#);
        for i in 0..=5 {
            let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
            let y = self.y(v);
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#, l - 5.0);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{v:.2}</text>"#,
                l - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.2}" font-size="12" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
            t + self.height / 2.0,
            t + self.height / 2.0,
            escape(y_label)
        );
    }
}

fn padded_range(values: impl Iterator<Item = f64>, always: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.chain(always.iter().copied()).filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 2.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn svg_open(width: f64, height: f64, title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    svg
}

fn boxplot_svg(result: &ExperimentResult, setting: &str, methods: &[String], summary: &[SummaryRow]) -> String {
    let rows: Vec<&SummaryRow> = methods
        .iter()
        .filter_map(|m| summary.iter().find(|s| s.setting == setting && &s.method == m))
        .collect();
    let slot = 70.0;
    let width = 120.0 + slot * methods.len().max(1) as f64;
    let height = 440.0;
    let estimates = || {
        result
            .rows
            .iter()
            .filter(move |r| r.setting == setting)
            .filter_map(|r| r.beta_hat)
    };
    let (lo, hi) = padded_range(estimates(), &[1.0]);
    let frame = Frame { left: 70.0, top: 40.0, width: width - 100.0, height: height - 160.0, lo, hi };
    let mut svg = svg_open(width, height, &format!("Estimates: {setting}"));
    frame.axes(&mut svg, "estimated coefficient");

    for (i, s) in rows.iter().enumerate() {
        let cx = frame.left + slot * (i as f64 + 0.5) + 15.0;
        let half = 18.0;
        if s.n_ok > 0 {
            let (yq1, yq3, ymed) = (frame.y(s.q1), frame.y(s.q3), frame.y(s.median));
            let (ylo, yhi) = (frame.y(s.whisker_low), frame.y(s.whisker_high));
            let _ = writeln!(svg, r#"<line class="whisker" x1="{cx:.2}" y1="{yhi:.2}" x2="{cx:.2}" y2="{yq3:.2}" stroke="black"/>"#);
            let _ = writeln!(svg, r#"<line class="whisker" x1="{cx:.2}" y1="{yq1:.2}" x2="{cx:.2}" y2="{ylo:.2}" stroke="black"/>"#);
            for y in [ylo, yhi] {
                let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, cx - half / 2.0, cx + half / 2.0);
            }
            let _ = writeln!(
                svg,
                r#"<rect class="box" x="{:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="lightsteelblue" stroke="black"/>"#,
                cx - half,
                2.0 * half,
                (yq1 - yq3).max(0.5)
            );
            let _ = writeln!(svg, r#"<line class="median" x1="{:.2}" y1="{ymed:.2}" x2="{:.2}" y2="{ymed:.2}" stroke="black" stroke-width="2"/>"#, cx - half, cx + half);
            for v in result.rows_for(setting, &s.method).filter_map(|r| r.beta_hat) {
                if v < s.whisker_low || v > s.whisker_high {
                    let _ = writeln!(svg, r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#, frame.y(v));
                }
            }
        }
        let ly = frame.top + frame.height + 14.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{ly:.2}" font-size="11" text-anchor="end" transform="rotate(-45 {cx:.2} {ly:.2})">{}</text>"#,
            escape(&s.method)
        );
    }
    let yref = frame.y(1.0);
    let _ = writeln!(
        svg,
        r#"<line class="reference" x1="{:.2}" y1="{yref:.2}" x2="{:.2}" y2="{yref:.2}" stroke="red" stroke-dasharray="6 4"/>"#,
        frame.left,
        frame.left + frame.width
    );
    svg.push_str("</svg>\n");
    svg
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn mae_lines_svg(result: &ExperimentResult, summary: &[SummaryRow]) -> String {
    let swept = !result.cells.is_empty() && result.cells.iter().all(|c| c.sweep.is_some());
    let x_of: Vec<f64> = result
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| if swept { c.sweep.as_ref().map_or(0.0, |s| s.value) } else { (i + 1) as f64 })
        .collect();
    let x_label = if swept {
        result.cells[0].sweep.as_ref().map_or("setting".to_string(), |s| s.parameter.clone())
    } else {
        "setting".to_string()
    };
    let mut methods: Vec<&str> = Vec::new();
    for c in &result.cells {
        for m in &c.methods {
            if !methods.contains(&m.as_str()) {
                methods.push(m);
            }
        }
    }
    let width = 640.0;
    let height = 420.0;
    let (_, hi) = padded_range(summary.iter().map(|s| s.mae), &[0.0]);
    let frame = Frame { left: 70.0, top: 40.0, width: 380.0, height: height - 110.0, lo: 0.0, hi };
    let (xmin, xmax) = padded_range(x_of.iter().copied(), &[]);
    let px = |x: f64| frame.left + frame.width * (x - xmin) / (xmax - xmin);
    let mut svg = svg_open(width, height, &format!("Mean absolute error: {}", result.name));
    frame.axes(&mut svg, "MAE");
    let base = frame.top + frame.height;
    for (i, c) in result.cells.iter().enumerate() {
        let x = px(x_of[i]);
        let label = if swept { format!("{}", x_of[i]) } else { c.id.clone() };
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, base + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, base + 18.0, escape(&label));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        frame.left + frame.width / 2.0,
        base + 40.0,
        escape(&x_label)
    );
    for (k, m) in methods.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = result
            .cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                summary
                    .iter()
                    .find(|s| s.setting == c.id && s.method == *m)
                    .filter(|s| s.mae.is_finite())
                    .map(|s| (px(x_of[i]), frame.y(s.mae)))
            })
            .collect();
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(svg, r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        }
        for (x, y) in &pts {
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = frame.top + 10.0 + 18.0 * k as f64;
        let lx = frame.left + frame.width + 30.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, lx + 26.0, ly + 4.0, escape(m));
    }
    svg.push_str("</svg>\n");
    svg
}
