//! Problem files and CSV emission.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every CSV
//! parses back to the identical `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectorySample;
use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::potential::{value_unchecked, CriticalPoint, LandscapeSummary, PotentialParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Edge {
    i: usize,
    j: usize,
    s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    Dense { n: usize, coupling: Vec<Vec<f64>> },
    Sparse { n: usize, edges: Vec<Edge> },
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Parses a dense `{"n", "coupling"}` or sparse `{"n", "edges"}` problem.
pub fn parse_problem(text: &str) -> Result<IsingProblem> {
    // Syntax errors are reported with their position before the shape is matched.
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    let file: ProblemFile = serde_json::from_value(value).map_err(|e| {
        Error::Parse(format!("expected {{\"n\", \"coupling\"}} or {{\"n\", \"edges\"}}: {e}"))
    })?;
    match file {
        ProblemFile::Dense { n, coupling } => {
            if coupling.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: coupling.len() });
            }
            IsingProblem::from_rows(&coupling)
        }
        ProblemFile::Sparse { n, edges } => {
            let edges: Vec<_> = edges.into_iter().map(|e| (e.i, e.j, e.s)).collect();
            IsingProblem::from_edges(n, &edges)
        }
    }
}

pub fn load_problem(path: &Path) -> Result<IsingProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

/// Dense JSON encoding.
pub fn problem_to_json(problem: &IsingProblem) -> String {
    let file = ProblemFile::Dense { n: problem.n(), coupling: problem.rows() };
    serde_json::to_string_pretty(&file).expect("finite matrix serializes")
}

pub fn save_problem(problem: &IsingProblem, path: &Path) -> Result<()> {
    std::fs::write(path, problem_to_json(problem) + "\n")?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Parse(format!("line {}: {e}", pos.line())),
        None => Error::Parse(e.to_string()),
    }
}

/// Builds a CSV document from a header and string rows.
fn write_csv<I, R>(header: &[String], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Header and records of a CSV document.
fn read_csv(text: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let records = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_error)?;
    Ok((header, records))
}

fn trace_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "alpha".into(), "H".into()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=n).map(|i| format!("y{i}")));
    cols.push("in_capture".into());
    cols
}

pub fn trace_header(n: usize) -> String {
    trace_columns(n).join(",")
}

/// Trace CSV. `in_capture` is `1`, `0` or empty when the sample was not checked.
/// Samples without momenta (gradient flows) get empty `y` columns.
pub fn trace_csv(n: usize, samples: &[TrajectorySample]) -> Result<String> {
    if let Some(s) = samples.iter().find(|s| s.x.len() != n || !(s.y.is_empty() || s.y.len() == n)) {
        return Err(Error::DimensionMismatch { expected: n, got: s.x.len() });
    }
    write_csv(
        &trace_columns(n),
        samples.iter().map(|s| {
            let mut row: Vec<String> = [s.t, s.alpha, s.h].into_iter().chain(s.x.iter().copied()).map(fmt_f64).collect();
            if s.y.is_empty() {
                row.extend(std::iter::repeat_n(String::new(), n));
            } else {
                row.extend(s.y.iter().copied().map(fmt_f64));
            }
            row.push(match s.in_capture {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            });
            row
        }),
    )
}

fn parse_f64(field: &str, line: u64) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("line {line}: '{field}' is not a number")))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads a trace CSV back; returns the dimension and the samples.
pub fn parse_trace_csv(text: &str) -> Result<(usize, Vec<TrajectorySample>)> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty trace file".into()));
    }
    let (header, records) = read_csv(text)?;
    let cols = header.len();
    let n = cols.saturating_sub(4) / 2;
    if cols < 4 || header != trace_columns(n) {
        return Err(Error::Parse(format!("line 1: unexpected trace header '{}'", header.join(","))));
    }
    let mut samples = Vec::with_capacity(records.len());
    for rec in &records {
        let line = line_of(rec);
        let fields: Vec<&str> = rec.iter().collect();
        let x = fields[3..3 + n].iter().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?;
        let y_fields = &fields[3 + n..3 + 2 * n];
        let y = if n > 0 && y_fields.iter().all(|f| f.is_empty()) {
            Vec::new()
        } else {
            y_fields.iter().map(|f| parse_f64(f, line)).collect::<Result<Vec<_>>>()?
        };
        let in_capture = match fields[cols - 1].trim() {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            other => return Err(Error::Parse(format!("line {line}: bad in_capture '{other}'"))),
        };
        samples.push(TrajectorySample {
            t: parse_f64(fields[0], line)?,
            alpha: parse_f64(fields[1], line)?,
            h: parse_f64(fields[2], line)?,
            x,
            y,
            in_capture,
        });
    }
    Ok((n, samples))
}

/// Axis-aligned square grid `[-half_width, half_width]^2` with `points` nodes per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub half_width: f64,
    pub points: usize,
}

impl Grid2 {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) || points < 2 {
            return Err(Error::InvalidParameter("grid needs half_width > 0 and at least 2 points".into()));
        }
        Ok(Self { half_width, points })
    }

    /// Grid covering every critical point with a 25% margin.
    pub fn around(summary: &LandscapeSummary, points: usize) -> Result<Self> {
        let reach = summary
            .critical_points
            .iter()
            .flat_map(|c| c.x.iter().map(|v| v.abs()))
            .fold(1.0_f64, f64::max);
        Self::new(1.25 * reach, points)
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_width + 2.0 * self.half_width * k as f64 / (self.points - 1) as f64
    }
}

fn require_two(params: &PotentialParams) -> Result<()> {
    if params.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: params.n() });
    }
    Ok(())
}

/// `x1,x2,U` rows, `x2` varying fastest.
pub fn grid_csv(params: &PotentialParams, grid: Grid2) -> Result<String> {
    require_two(params)?;
    let header = ["x1".to_string(), "x2".into(), "U".into()];
    write_csv(
        &header,
        (0..grid.points).flat_map(|a| {
            (0..grid.points).map(move |b| {
                let x = [grid.coord(a), grid.coord(b)];
                let u = value_unchecked(params.problem(), params.shift(), &x);
                vec![fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(u)]
            })
        }),
    )
}

/// Critical points as `x1..xn,U,index,class`.
pub fn overlay_csv(points: &[CriticalPoint]) -> Result<String> {
    let n = points.first().map_or(0, |c| c.x.len());
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend(["U".to_string(), "index".into(), "class".into()]);
    write_csv(
        &cols,
        points.iter().map(|c| {
            let mut row: Vec<String> = c.x.iter().copied().chain([c.value]).map(fmt_f64).collect();
            row.push(c.morse_index.to_string());
            row.push(c.class.label().to_string());
            row
        }),
    )
}

/// Membership of each grid node in the Hill region `{U < level}`.
pub fn hill_mask(params: &PotentialParams, level: f64, grid: Grid2) -> Result<Vec<Vec<bool>>> {
    require_two(params)?;
    Ok((0..grid.points)
        .map(|a| {
            (0..grid.points)
                .map(|b| value_unchecked(params.problem(), params.shift(), &[grid.coord(a), grid.coord(b)]) < level)
                .collect()
        })
        .collect())
}

/// `x1,x2,inside` rows with `inside` in `{0, 1}`.
pub fn hill_mask_csv(params: &PotentialParams, level: f64, grid: Grid2) -> Result<String> {
    let mask = hill_mask(params, level, grid)?;
    let header = ["x1".to_string(), "x2".into(), "inside".into()];
    write_csv(
        &header,
        mask.iter().enumerate().flat_map(|(a, row)| {
            row.iter().enumerate().map(move |(b, &inside)| {
                vec![fmt_f64(grid.coord(a)), fmt_f64(grid.coord(b)), if inside { "1" } else { "0" }.to_string()]
            })
        }),
    )
}

/// 4-connected components of a boolean mask.
pub fn mask_components(mask: &[Vec<bool>]) -> usize {
    let rows = mask.len();
    let mut seen: Vec<Vec<bool>> = mask.iter().map(|r| vec![false; r.len()]).collect();
    let mut count = 0;
    for a in 0..rows {
        for b in 0..mask[a].len() {
            if !mask[a][b] || seen[a][b] {
                continue;
            }
            count += 1;
            let mut stack = vec![(a, b)];
            seen[a][b] = true;
            while let Some((i, j)) = stack.pop() {
                let neighbours = [
                    (i.wrapping_sub(1), j),
                    (i + 1, j),
                    (i, j.wrapping_sub(1)),
                    (i, j + 1),
                ];
                for (p, q) in neighbours {
                    if p < rows && q < mask[p].len() && mask[p][q] && !seen[p][q] {
                        seen[p][q] = true;
                        stack.push((p, q));
                    }
                }
            }
        }
    }
    count
}

/// Parses a CSV whose cells are all numbers, skipping the header.
pub fn parse_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let (_, records) = read_csv(text)?;
    records.iter().map(|r| r.iter().map(|f| parse_f64(f, line_of(r))).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::find_critical_points;
    use proptest::prelude::*;

    #[test]
    fn dense_and_sparse_agree() {
        let dense = parse_problem(r#"{"n": 3, "coupling": [[0,1,-2],[1,0,0.5],[-2,0.5,0]]}"#).unwrap();
        let sparse = parse_problem(
            r#"{"n": 3, "edges": [{"i":0,"j":1,"s":1}, {"i":0,"j":2,"s":-2}, {"i":1,"j":2,"s":0.5}]}"#,
        )
        .unwrap();
        assert_eq!(dense, sparse);
    }

    #[test]
    fn malformed_inputs() {
        let err = parse_problem("{\"n\": 2,\n \"coupling\": [[0, 1], [1, 0]").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_problem(r#"{"n": 2, "coupling": [[0, 1], [2, 0]]}"#).is_err());
        assert!(parse_problem(r#"{"n": 2, "coupling": [[1, 1], [1, 0]]}"#).is_err());
        assert!(parse_problem(r#"{"n": 3, "coupling": [[0, 1], [1, 0]]}"#).is_err());
        assert!(parse_problem(r#"{"n": 2, "edges": [{"i":0,"j":1,"s":1}, {"i":1,"j":0,"s":1}]}"#).is_err());
        assert!(parse_problem(r#"{"n": 2, "spins": []}"#).is_err());
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        let csv = trace_csv(2, &[]).unwrap();
        assert_eq!(csv, "t,alpha,H,x1,x2,y1,y2,in_capture\n");
        assert!(parse_trace_csv(&csv).unwrap().1.is_empty());
    }

    #[test]
    fn overlay_labels() {
        let params = PotentialParams::new(IsingProblem::canonical_two_spin(), 5.0, 2.0).unwrap();
        let summary = find_critical_points(&params).unwrap();
        let csv = overlay_csv(&summary.critical_points).unwrap();
        assert_eq!(csv.lines().count(), 10);
        assert_eq!(csv.lines().filter(|l| l.ends_with(",min")).count(), 4);
        assert_eq!(csv.lines().filter(|l| l.ends_with(",saddle")).count(), 4);
        assert_eq!(csv.lines().filter(|l| l.ends_with(",max")).count(), 1);
    }

    #[test]
    fn hill_topology() {
        // alpha = 4, beta = 2: c1 = -48.5 is the saddle level.
        let params = PotentialParams::new(IsingProblem::canonical_two_spin(), 4.0, 2.0).unwrap();
        let grid = Grid2::new(6.0, 241).unwrap();
        assert_eq!(mask_components(&hill_mask(&params, -60.0, grid).unwrap()), 4);
        assert_eq!(mask_components(&hill_mask(&params, -40.0, grid).unwrap()), 1);
        let csv = hill_mask_csv(&params, -60.0, grid).unwrap();
        assert_eq!(parse_numeric_csv(&csv).unwrap().len(), 241 * 241);
    }

    #[test]
    fn grid_needs_two_dimensions() {
        let params = PotentialParams::new(IsingProblem::three_spin_example(), 5.0, 10.0).unwrap();
        assert!(grid_csv(&params, Grid2::new(1.0, 3).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn problem_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 10)) {
            let n = 5;
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j, vals[k]));
                    k += 1;
                }
            }
            let p = IsingProblem::from_edges(n, &edges).unwrap();
            let back = parse_problem(&problem_to_json(&p)).unwrap();
            prop_assert_eq!(p.coupling(), back.coupling());
        }

        #[test]
        fn trace_round_trip(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL, 7), flag in proptest::option::of(any::<bool>())) {
            let s = TrajectorySample {
                t: vals[0], alpha: vals[1], h: vals[2],
                x: vals[3..5].to_vec(), y: vals[5..7].to_vec(), in_capture: flag,
            };
            let csv = trace_csv(2, std::slice::from_ref(&s)).unwrap();
            let (n, back) = parse_trace_csv(&csv).unwrap();
            prop_assert_eq!(n, 2);
            prop_assert_eq!(&back[0], &s);
        }
    }
}
