//! File formats: chain and matrix JSON, bare-matrix CSV, labelled matrix CSV,
//! embedding coordinate CSV and the SVG scatter.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::default_labels;
use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// `{"labels": [...], "P": [[...]]}`; labels are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
}

/// `{"labels": [...], "T": [[...]]}` for squared-distance tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

/// A parsed square table with labels (defaulted when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_error(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    parse_error(e.line(), e.to_string())
}

fn finish(labels: Option<Vec<String>>, rows: Vec<Vec<f64>>) -> Result<LabelledMatrix> {
    if rows.is_empty() {
        return Err(parse_error(1, "matrix has no rows"));
    }
    let labels = labels.unwrap_or_else(|| default_labels(rows.len()));
    if labels.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    Ok(LabelledMatrix { labels, rows })
}

pub fn parse_chain_json(text: &str) -> Result<LabelledMatrix> {
    if text.trim().is_empty() {
        return Err(parse_error(1, "input is empty"));
    }
    let file: ChainFile = serde_json::from_str(text).map_err(json_error)?;
    finish(file.labels, file.p)
}

pub fn parse_distance_json(text: &str) -> Result<LabelledMatrix> {
    if text.trim().is_empty() {
        return Err(parse_error(1, "input is empty"));
    }
    let file: DistanceFile = serde_json::from_str(text).map_err(json_error)?;
    finish(file.labels, file.t)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(1, |p| p.line() as usize);
    parse_error(line, e.to_string())
}

type CsvRow = (usize, String, Vec<f64>);

/// Rows of a CSV table as `(line, label column, numeric cells)`. With
/// `labelled`, the first row is a header and the first column holds labels.
fn read_csv(text: &str, labelled: bool) -> Result<(Vec<String>, Vec<CsvRow>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(labelled)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = if labelled {
        reader
            .headers()
            .map_err(csv_error)?
            .iter()
            .skip(1)
            .map(str::to_string)
            .collect()
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(1, |p| p.line() as usize);
        let skip = usize::from(labelled);
        let label = if labelled {
            record.get(0).unwrap_or_default().to_string()
        } else {
            String::new()
        };
        let cells = record
            .iter()
            .skip(skip)
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|e| parse_error(line, format!("{cell:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, label, cells));
    }
    Ok((header, rows))
}

/// Bare numeric CSV, one matrix row per line, no labels.
pub fn parse_matrix_csv(text: &str) -> Result<LabelledMatrix> {
    let (_, rows) = read_csv(text, false)?;
    if rows.is_empty() {
        return Err(parse_error(1, "input is empty"));
    }
    finish(None, rows.into_iter().map(|(_, _, cells)| cells).collect())
}

/// JSON when the first non-blank character is `{`, bare CSV otherwise.
pub fn parse_chain_auto(text: &str) -> Result<LabelledMatrix> {
    if text.trim_start().starts_with('{') || text.trim().is_empty() {
        parse_chain_json(text)
    } else {
        parse_matrix_csv(text)
    }
}

pub fn parse_distance_auto(text: &str) -> Result<LabelledMatrix> {
    if text.trim_start().starts_with('{') || text.trim().is_empty() {
        parse_distance_json(text)
    } else {
        parse_matrix_csv(text)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv<'a>(
    header: impl IntoIterator<Item = String>,
    rows: impl Iterator<Item = (&'a String, Vec<f64>)>,
) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = header.into_iter().collect();
    writer.write_record(&header).expect("in-memory write");
    for (label, cells) in rows {
        let record = std::iter::once(label.clone()).chain(cells.into_iter().map(fmt_f64));
        writer.write_record(record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Header row `state,<labels…>`, then one labelled row per state.
pub fn matrix_to_csv(labels: &[String], m: &DMatrix<f64>) -> String {
    let header = std::iter::once("state".to_string()).chain(labels.iter().cloned());
    write_csv(
        header,
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l, m.row(i).iter().copied().collect())),
    )
}

/// Reads back [`matrix_to_csv`] output.
pub fn matrix_from_csv(text: &str) -> Result<LabelledMatrix> {
    let (labels, rows) = read_csv(text, true)?;
    finish(
        Some(labels),
        rows.into_iter().map(|(_, _, cells)| cells).collect(),
    )
}

/// Header `label,dim0,dim1,…`, one row per state.
pub fn embedding_to_csv(labels: &[String], e: &Embedding) -> String {
    let header =
        std::iter::once("label".to_string()).chain((0..e.dims()).map(|d| format!("dim{d}")));
    write_csv(
        header,
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l, e.coords.row(i).iter().copied().collect())),
    )
}

/// Reads back [`embedding_to_csv`] output into labels and an `n × dims` matrix.
pub fn embedding_from_csv(text: &str) -> Result<(Vec<String>, DMatrix<f64>)> {
    let (header, rows) = read_csv(text, true)?;
    let dims = header.len();
    let mut labels = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * dims);
    for (line, label, cells) in rows {
        if cells.len() != dims {
            return Err(parse_error(line, format!("expected {dims} coordinates")));
        }
        labels.push(label);
        values.extend(cells);
    }
    let n = labels.len();
    Ok((labels, DMatrix::from_row_slice(n, dims, &values)))
}

/// Scatter plot of the first two embedding dimensions.
///
/// Each point carries its exact coordinates in `data-x`/`data-y`; the axes are
/// annotated with the corresponding Gram eigenvalues.
pub fn embedding_to_svg(labels: &[String], e: &Embedding) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 48.0;
    let coord = |i: usize, d: usize| if d < e.dims() { e.coords[(i, d)] } else { 0.0 };
    let n = e.n();
    let span = |d: usize| {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(coord(i, d)), hi.max(coord(i, d)))
        });
        let width = (hi - lo).max(1e-12);
        (lo, width)
    };
    let (x0, xw) = span(0);
    let (y0, yw) = span(1);
    let inner = SIZE - 2.0 * MARGIN;
    let eig = |d: usize| e.eigenvalues.get(d).copied().unwrap_or(0.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-size="12">dim0 (eigenvalue {})</text>"#,
        SIZE / 2.0,
        SIZE - 12.0,
        fmt_f64(eig(0))
    );
    let _ = writeln!(
        out,
        r#"  <text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">dim1 (eigenvalue {})</text>"#,
        SIZE / 2.0,
        SIZE / 2.0,
        fmt_f64(eig(1))
    );
    for (i, label) in labels.iter().enumerate() {
        let (x, y) = (coord(i, 0), coord(i, 1));
        let cx = MARGIN + (x - x0) / xw * inner;
        let cy = SIZE - MARGIN - (y - y0) / yw * inner;
        let _ = writeln!(
            out,
            r#"  <circle cx="{cx:.3}" cy="{cy:.3}" r="4" data-label="{}" data-x="{}" data-y="{}"/>"#,
            xml_escape(label),
            fmt_f64(x),
            fmt_f64(y)
        );
        let _ = writeln!(
            out,
            r#"  <text x="{:.3}" y="{:.3}" font-size="11">{}</text>"#,
            cx + 6.0,
            cy - 6.0,
            xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Row-major nested vectors, for JSON reports.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    crate::linalg::to_rows(m)
}

/// Resolves a state reference: an exact label match wins, then a zero-based index.
pub fn resolve_state(labels: &[String], reference: &str) -> Option<usize> {
    labels.iter().position(|l| l == reference).or_else(|| {
        reference
            .parse::<usize>()
            .ok()
            .filter(|&i| i < labels.len())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_json_with_and_without_labels() {
        let m = parse_chain_json(r#"{"labels":["a","b"],"P":[[0.5,0.5],[0.5,0.5]]}"#).unwrap();
        assert_eq!(m.labels, ["a", "b"]);
        let m = parse_chain_json(r#"{"P":[[0.5,0.5],[0.5,0.5]]}"#).unwrap();
        assert_eq!(m.labels, ["s0", "s1"]);
    }

    #[test]
    fn parse_errors_carry_lines() {
        assert!(matches!(
            parse_chain_json(""),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_chain_json("{\n\"P\": [[0.5,\n x]]}"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_matrix_csv("0.5,0.5\n0.5,zz\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_chain_json(r#"{"labels":["a"],"P":[[0.5,0.5],[0.5,0.5]]}"#),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn auto_detects_csv() {
        let m = parse_chain_auto("0.9,0.1\n0.2,0.8\n").unwrap();
        assert_eq!(m.rows, vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let labels = vec!["x".to_string(), "y".to_string()];
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / 3.0, std::f64::consts::PI, -2e-300]);
        let back = matrix_from_csv(&matrix_to_csv(&labels, &m)).unwrap();
        assert_eq!(back.labels, labels);
        assert_eq!(
            back.rows,
            vec![vec![0.0, 1.0 / 3.0], vec![std::f64::consts::PI, -2e-300]]
        );
    }

    #[test]
    fn state_resolution_prefers_labels() {
        let labels: Vec<String> = ["1", "a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(resolve_state(&labels, "1"), Some(0));
        assert_eq!(resolve_state(&labels, "2"), Some(2));
        assert_eq!(resolve_state(&labels, "b"), Some(2));
        assert_eq!(resolve_state(&labels, "7"), None);
        assert_eq!(resolve_state(&labels, "zz"), None);
    }

    #[test]
    fn svg_carries_exact_coordinates() {
        let e = Embedding {
            coords: DMatrix::from_row_slice(2, 1, &[0.0, 2.0]),
            eigenvalues: vec![4.0],
            ref_state: 0,
        };
        let svg = embedding_to_svg(&["a".into(), "b".into()], &e);
        assert!(svg.contains(&format!("data-x=\"{}\"", fmt_f64(2.0))));
        assert!(svg.contains("eigenvalue 4.0000000000000000e0"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn labels_with_commas_and_quotes() {
        let labels = vec!["a,b".to_string(), "say \"hi\"".to_string()];
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        let back = matrix_from_csv(&matrix_to_csv(&labels, &m)).unwrap();
        assert_eq!(back.labels, labels);
        assert_eq!(back.rows, vec![vec![0.0, 1.5], vec![1.5, 0.0]]);
    }
}
