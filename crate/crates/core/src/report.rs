//! Report persistence: evaluation CSVs, comparison tables and bar charts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a report
//! read back compares equal to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ConfigDescriptor, EvalReport, FoldResult, Metrics};
use crate::pipeline::Comparison;

pub const POOLED_ROW: &str = "pooled";

const REPORT_HEADER: [&str; 10] = [
    "device", "sensors", "width_s", "model", "seed", "participant_id", "n_windows", "mae", "rmse", "r2",
];

const COMPARISON_HEADER: [&str; 12] = [
    "axis", "value", "device", "sensors", "width_s", "model", "seed", "n_windows", "n_folds", "mae", "rmse", "r2",
];

fn r2_cell(r2: Option<f64>) -> String {
    r2.map(|v| format!("{v}")).unwrap_or_default()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_bytes(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing into memory cannot fail except on programmer error.
    rows(&mut w).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

/// One row per fold then the pooled row; a leading comment carries the
/// dropped-row count and skipped participants.
pub fn report_to_csv(r: &EvalReport) -> String {
    let c = &r.config;
    let total: usize = r.folds.iter().map(|f| f.count).sum();
    let body = csv_bytes(|w| {
        w.write_record(REPORT_HEADER)?;
        let rows = r
            .folds
            .iter()
            .map(|f| (f.participant_id.as_str(), f.count, &f.metrics))
            .chain(std::iter::once((POOLED_ROW, total, &r.pooled)));
        for (pid, n, m) in rows {
            w.write_record([
                c.device.clone(),
                c.sensors.clone(),
                format!("{}", c.width_s),
                c.model.clone(),
                c.seed.to_string(),
                pid.to_string(),
                n.to_string(),
                format!("{}", m.mae),
                format!("{}", m.rmse),
                r2_cell(m.r2),
            ])?;
        }
        Ok(())
    });
    format!("# dropped_rows={} skipped={}\n{body}", r.dropped_rows, r.skipped.join(";"))
}

pub fn write_report_csv(path: &Path, r: &EvalReport) -> Result<()> {
    write_file(path, &report_to_csv(r))
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line: line as u64,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, field: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| malformed(path, line, format!("{field} {v:?} is not a number")))
}

pub fn read_report_csv(path: &Path) -> Result<EvalReport> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let mut dropped_rows = 0;
    let mut skipped = Vec::new();
    for tok in first
        .strip_prefix('#')
        .ok_or_else(|| malformed(path, 1, "missing '# dropped_rows=... skipped=...' preamble"))?
        .split_whitespace()
    {
        match tok.split_once('=') {
            Some(("dropped_rows", v)) => dropped_rows = parse_num(path, 1, "dropped_rows", v)?,
            Some(("skipped", v)) => skipped = v.split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
            _ => return Err(malformed(path, 1, format!("unexpected preamble token {tok:?}"))),
        }
    }
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let header = rdr.headers().map_err(|e| malformed(path, 2, e.to_string()))?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(malformed(path, 2, "unexpected report header"));
    }
    let mut config: Option<ConfigDescriptor> = None;
    let mut folds = Vec::new();
    let mut pooled = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 3;
        let rec = rec.map_err(|e| malformed(path, line, e.to_string()))?;
        let cfg = ConfigDescriptor {
            device: rec[0].to_string(),
            sensors: rec[1].to_string(),
            width_s: parse_num(path, line, "width_s", &rec[2])?,
            model: rec[3].to_string(),
            seed: parse_num(path, line, "seed", &rec[4])?,
        };
        match &config {
            None => config = Some(cfg),
            Some(c) if *c != cfg => return Err(malformed(path, line, "configuration differs between rows")),
            _ => {}
        }
        let metrics = Metrics {
            mae: parse_num(path, line, "mae", &rec[7])?,
            rmse: parse_num(path, line, "rmse", &rec[8])?,
            r2: match &rec[9] {
                "" => None,
                v => Some(parse_num(path, line, "r2", v)?),
            },
        };
        if &rec[5] == POOLED_ROW {
            pooled = Some(metrics);
        } else {
            folds.push(FoldResult {
                participant_id: rec[5].to_string(),
                count: parse_num(path, line, "n_windows", &rec[6])?,
                metrics,
            });
        }
    }
    let line = folds.len() + 3;
    Ok(EvalReport {
        config: config.ok_or_else(|| malformed(path, line, "report has no rows"))?,
        folds,
        pooled: pooled.ok_or_else(|| malformed(path, line, "report has no pooled row"))?,
        dropped_rows,
        skipped,
    })
}

/// Rows in the comparison's (MAE-sorted) order.
pub fn comparison_to_csv(c: &Comparison) -> String {
    csv_bytes(|w| {
        w.write_record(COMPARISON_HEADER)?;
        for row in &c.rows {
            let r = &row.report;
            let cfg = &r.config;
            w.write_record([
                c.axis.as_str().to_string(),
                row.value.clone(),
                cfg.device.clone(),
                cfg.sensors.clone(),
                format!("{}", cfg.width_s),
                cfg.model.clone(),
                cfg.seed.to_string(),
                r.folds.iter().map(|f| f.count).sum::<usize>().to_string(),
                r.folds.len().to_string(),
                format!("{}", r.pooled.mae),
                format!("{}", r.pooled.rmse),
                r2_cell(r.pooled.r2),
            ])?;
        }
        Ok(())
    })
}

pub fn write_comparison_csv(path: &Path, c: &Comparison) -> Result<()> {
    write_file(path, &comparison_to_csv(c))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart of pooled MAE per axis value, one bar per row in
/// table order. Output depends only on the comparison.
pub fn comparison_svg(c: &Comparison) -> String {
    const BAR_H: f64 = 28.0;
    const GAP: f64 = 10.0;
    const LEFT: f64 = 140.0;
    const PLOT_W: f64 = 420.0;
    const TOP: f64 = 40.0;
    let n = c.rows.len();
    let height = TOP + n as f64 * (BAR_H + GAP) + 30.0;
    let width = LEFT + PLOT_W + 90.0;
    let max = c.rows.iter().map(|r| r.report.pooled.mae).fold(0.0_f64, f64::max);
    let scale = if max > 0.0 { PLOT_W / max } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="24" font-size="15" font-weight="bold">Pooled MAE (MET) by {}</text>"#,
        c.axis
    );
    for (i, row) in c.rows.iter().enumerate() {
        let y = TOP + i as f64 * (BAR_H + GAP);
        let mae = row.report.pooled.mae;
        let w = mae * scale;
        let label = xml_escape(&row.value);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            LEFT - 8.0,
            y + BAR_H * 0.65
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{y:.1}" width="{w:.2}" height="{BAR_H}" fill="#4a78b0"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{mae:.3}</text>"#,
            LEFT + w + 6.0,
            y + BAR_H * 0.65
        );
    }
    let axis_y = TOP + n as f64 * (BAR_H + GAP);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{:.1}" x2="{LEFT}" y2="{axis_y:.1}" stroke="black"/>"#,
        TOP - 4.0
    );
    s.push_str("</svg>\n");
    s
}

pub fn write_comparison_svg(path: &Path, c: &Comparison) -> Result<()> {
    write_file(path, &comparison_svg(c))
}

fn fmt_r2(r2: Option<f64>) -> String {
    r2.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

/// Human-readable pooled line, e.g. for terminal output.
pub fn summary_line(r: &EvalReport) -> String {
    let c = &r.config;
    format!(
        "{} {} {}s {} seed={}: folds={} MAE={:.4} RMSE={:.4} R2={}",
        c.device,
        c.sensors,
        c.width_s,
        c.model,
        c.seed,
        r.folds.len(),
        r.pooled.mae,
        r.pooled.rmse,
        fmt_r2(r.pooled.r2)
    )
}

pub fn comparison_summary(c: &Comparison) -> String {
    let mut s = String::new();
    for (rank, row) in c.rows.iter().enumerate() {
        let m = &row.report.pooled;
        let _ = writeln!(
            s,
            "{:>2}. {}={:<14} MAE={:.4} RMSE={:.4} R2={}",
            rank + 1,
            c.axis,
            row.value,
            m.mae,
            m.rmse,
            fmt_r2(m.r2)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{CompareAxis, ComparisonRow};

    fn report() -> EvalReport {
        let m = |mae: f64, r2| Metrics {
            mae,
            rmse: mae * 1.3,
            r2,
        };
        EvalReport {
            config: ConfigDescriptor {
                device: "NBL".into(),
                sensors: "acc+gyro+ppg".into(),
                width_s: 6.0,
                model: "gbdt".into(),
                seed: 42,
            },
            folds: vec![
                FoldResult {
                    participant_id: "P01".into(),
                    count: 150,
                    metrics: m(0.1 + 0.2, Some(0.75)),
                },
                FoldResult {
                    participant_id: "P02".into(),
                    count: 149,
                    metrics: m(1.0 / 3.0, None),
                },
            ],
            pooled: m(0.317, Some(-0.5)),
            dropped_rows: 4,
            skipped: vec!["P03".into()],
        }
    }

    #[test]
    fn report_round_trips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/report.csv");
        let r = report();
        write_report_csv(&p, &r).unwrap();
        assert_eq!(read_report_csv(&p).unwrap(), r);
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1 + 1 + 2 + 1);
        assert!(text.lines().last().unwrap().contains(",pooled,299,"));
    }

    #[test]
    fn missing_r2_is_an_empty_cell() {
        let text = report_to_csv(&report());
        assert!(text.lines().nth(3).unwrap().ends_with(','));
    }

    #[test]
    fn reader_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "a,b\n1,2\n").unwrap();
        assert_eq!(read_report_csv(&p).unwrap_err().kind(), "malformed_row");
        assert_eq!(read_report_csv(&dir.path().join("none.csv")).unwrap_err().kind(), "missing_file");
    }

    fn comparison() -> Comparison {
        let mut a = report();
        a.pooled.mae = 0.4;
        let mut b = report();
        b.pooled.mae = 0.8;
        Comparison {
            axis: CompareAxis::Sensors,
            rows: vec![
                ComparisonRow {
                    value: "ppg".into(),
                    report: a,
                },
                ComparisonRow {
                    value: "a<c>".into(),
                    report: b,
                },
            ],
        }
    }

    #[test]
    fn comparison_table_and_chart() {
        let c = comparison();
        let csv = comparison_to_csv(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("sensors,ppg,NBL,acc+gyro+ppg,6,gbdt,42,299,2,0.4,"));
        let svg = comparison_svg(&c);
        assert_eq!(svg, comparison_svg(&c));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 3);
        assert!(svg.contains("a&lt;c&gt;"));
        // longest bar spans the plot width
        assert!(svg.contains(r#"width="420.00""#));
        assert!(comparison_summary(&c).starts_with(" 1. sensors=ppg"));
    }
}
