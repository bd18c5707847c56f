//! Tabular reports and their text / CSV / JSON / SVG renderings.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::{ExperimentConfig, Format};

/// One statistical or algebraic check of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Which columns to draw, and whether the axes are log2.
#[derive(Clone, Debug)]
pub struct Plot {
    pub x: &'static str,
    pub y: &'static str,
    /// Column whose distinct values split the rows into separate lines.
    pub series: Option<&'static str>,
    pub log2: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
    pub checks: Vec<Check>,
    pub plot: Option<Plot>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// `None` for studies without checks.
    pub fn passed(&self) -> Option<bool> {
        (!self.checks.is_empty()).then(|| self.checks.iter().all(|c| c.passed))
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, config: &ExperimentConfig, format: Format) -> String {
        match format {
            Format::Json => self.to_json(config),
            Format::Csv => self.to_csv(),
            Format::Text => self.to_text(config),
        }
    }

    pub fn to_json(&self, config: &ExperimentConfig) -> String {
        let doc = json!({
            "config": config,
            "columns": self.columns,
            "rows": self.rows,
            "summary": self.summary,
            "checks": self.checks,
            "passed": self.passed(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_text(&self, config: &ExperimentConfig) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([self.columns[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |items: Vec<&str>| {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = format!("# wlab {} (seed {})\n", config.command.name(), config.seed);
        if !self.columns.is_empty() {
            out += &line(self.columns.iter().map(String::as_str).collect());
            for r in &cells {
                out += &line(r.iter().map(String::as_str).collect());
            }
        }
        for (k, v) in &self.summary {
            out += &format!("{k}: {}\n", cell(v));
        }
        for c in &self.checks {
            out += &format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }

    /// Machine-readable failure report for stderr.
    pub fn diagnostics(&self, config: &ExperimentConfig) -> String {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        json!({ "passed": false, "failed": failed, "summary": self.summary, "config": config }).to_string()
    }

    pub fn to_svg(&self) -> Option<String> {
        let plot = self.plot.as_ref()?;
        let (xi, yi) = (self.column(plot.x)?, self.column(plot.y)?);
        let si = plot.series.and_then(|s| self.column(s));
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for row in &self.rows {
            let (Some(x), Some(y)) = (row[xi].as_f64(), row[yi].as_f64()) else {
                continue;
            };
            let (x, y) = if plot.log2 {
                if x <= 0.0 || y <= 0.0 {
                    continue;
                }
                (x.log2(), y.log2())
            } else {
                (x, y)
            };
            let name = si.map(|i| cell(&row[i])).unwrap_or_default();
            match series.iter_mut().find(|(n, _)| *n == name) {
                Some((_, pts)) => pts.push((x, y)),
                None => series.push((name, vec![(x, y)])),
            }
        }
        let label = |c: &str| if plot.log2 { format!("log2 {c}") } else { c.to_string() };
        Some(line_plot(&series, &label(plot.x), &label(plot.y)))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Self-contained SVG with one polyline per series.
fn line_plot(series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 60.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out += &format!(
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    out += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        h - 15.0,
        escape(xlabel)
    );
    out += &format!(
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        escape(ylabel)
    );
    for (v, x, y, anchor) in [
        (x0, sx(x0), h - pad + 15.0, "start"),
        (x1, sx(x1), h - pad + 15.0, "end"),
    ] {
        out += &format!("<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\">{v:.3}</text>\n");
    }
    for v in [y0, y1] {
        out += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>\n",
            pad - 5.0,
            sy(v) + 4.0
        );
    }
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        );
        for &(x, y) in pts {
            out += &format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            );
        }
        if !name.is_empty() {
            out += &format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
                w - pad + 5.0,
                pad + 15.0 * (k as f64 + 1.0),
                escape(name)
            );
        }
    }
    out += "</svg>\n";
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{Command, ContractionArgs, Counts, Profile};

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            command: Command::Contraction(ContractionArgs {
                kernel: wlab::KernelSpec::Delta,
                row_kernel: None,
                indices: vec![1, 2, 1, 2],
                d: Counts(vec![8]),
            }),
            seed: 3,
            profile: Profile::Quick,
            threshold: 4.0,
            format: Format::Csv,
            threads: None,
        }
    }

    #[test]
    fn csv_quotes_cells() {
        let mut r = Report::new(&["a", "b"]);
        r.push(vec![json!("x,y"), json!(1.5)]);
        r.push(vec![Value::Null, json!(2)]);
        assert_eq!(r.to_csv(), "a,b\n\"x,y\",1.5\n,2\n");
    }

    #[test]
    fn passed_needs_checks() {
        let mut r = Report::new(&[]);
        assert_eq!(r.passed(), None);
        r.check("one", true, "");
        r.check("two", false, "");
        assert_eq!(r.passed(), Some(false));
        assert!(r.diagnostics(&config()).contains("\"two\""));
    }

    #[test]
    fn svg_has_one_line_per_series() {
        let mut r = Report::new(&["d", "v", "case"]);
        for d in [8, 16, 32] {
            r.push(vec![json!(d), json!(1.0 / d as f64), json!("a")]);
            r.push(vec![json!(d), json!(2.0 / d as f64), json!("b")]);
        }
        r.plot = Some(Plot {
            x: "d",
            y: "v",
            series: Some("case"),
            log2: true,
        });
        let svg = r.to_svg().unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
