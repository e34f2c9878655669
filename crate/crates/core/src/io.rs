//! File formats: dataset CSV, JSON-lines draws, run metadata and the CSV
//! tables written by the command-line tool.
//!
//! Variable and component positions in files are 1-based.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{CategoricalDataset, MISSING};
use crate::error::{Error, Result};
use crate::gibbs::{PosteriorSampleSet, RetainedDraw, RunMeta};
use crate::inference::{AggregateRow, Histogram};
use crate::model::{ParamsParts, SpParafacParams};
use crate::tensor::SimplexVector;

/// A dataset read from CSV together with its header and label dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub dataset: CategoricalDataset,
    pub header: Vec<String>,
    /// For label columns, `labels[j][c − 1]` is the label of code `c`;
    /// `None` for columns of integer codes.
    pub labels: Vec<Option<Vec<String>>>,
}

/// Label ↔ code mapping written next to a parsed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDictionary {
    pub columns: Vec<ColumnLabels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnLabels {
    pub name: String,
    pub position: usize,
    pub levels: usize,
    /// Labels in code order, or `None` for integer-coded columns.
    pub labels: Option<Vec<String>>,
}

impl ParsedDataset {
    pub fn dictionary(&self) -> LabelDictionary {
        LabelDictionary {
            columns: self
                .header
                .iter()
                .enumerate()
                .map(|(j, name)| ColumnLabels {
                    name: name.clone(),
                    position: j + 1,
                    levels: self.dataset.levels()[j],
                    labels: self.labels[j].clone(),
                })
                .collect(),
        }
    }
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_string(), source },
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            row: line,
            column: len.min(expected_len) as usize + 1,
            message: format!("{path}: expected {expected_len} fields, found {len}"),
        },
        other => Error::Format { path: path.to_string(), message: format!("{other:?}") },
    }
}

/// Reads a dataset CSV. Cells are positive integer codes or labels; an empty
/// cell is missing. A column whose non-empty cells are all integers is read
/// as codes, any other column as labels numbered by first appearance.
/// `declared` fixes the level counts; otherwise they are inferred.
/// Error rows are 1-based file lines (the header is line 1).
pub fn parse_dataset_csv(path: impl AsRef<Path>, declared: Option<&[usize]>) -> Result<ParsedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_reader(file, &path.display().to_string(), declared)
}

pub fn parse_dataset_reader<R: Read>(reader: R, source: &str, declared: Option<&[usize]>) -> Result<ParsedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(source, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let p = header.len();
    if p == 0 || (p == 1 && header[0].is_empty()) {
        return Err(Error::Parse { row: 1, column: 1, message: format!("{source}: no columns") });
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); p];
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        lines.push(rec.position().map_or(0, |pos| pos.line() as usize));
        for (j, cell) in rec.iter().enumerate() {
            cells[j].push(cell.trim().to_string());
        }
    }
    let n = lines.len();
    if n == 0 {
        return Err(Error::Data(format!("{source}: no data rows")));
    }
    if let Some(d) = declared {
        if d.len() != p {
            return Err(Error::Config(format!("{} declared level counts for {p} columns", d.len())));
        }
    }
    let mut values = vec![MISSING; n * p];
    let mut levels = Vec::with_capacity(p);
    let mut labels = Vec::with_capacity(p);
    for (j, column) in cells.iter().enumerate() {
        let integer = column.iter().all(|c| c.is_empty() || c.parse::<i64>().is_ok());
        let (codes, observed, dict) = if integer {
            let mut max = 0usize;
            let mut codes = Vec::with_capacity(n);
            for (i, c) in column.iter().enumerate() {
                if c.is_empty() {
                    codes.push(MISSING);
                    continue;
                }
                let v: i64 = c.parse().expect("checked above");
                if v <= 0 || v > u16::MAX as i64 {
                    return Err(Error::Parse {
                        row: lines[i],
                        column: j + 1,
                        message: format!("{source}: code {v} is not a positive integer below 65536"),
                    });
                }
                max = max.max(v as usize);
                codes.push(v as u16);
            }
            (codes, max, None)
        } else {
            let mut dict: Vec<String> = Vec::new();
            let mut codes = Vec::with_capacity(n);
            for c in column {
                if c.is_empty() {
                    codes.push(MISSING);
                    continue;
                }
                let code = match dict.iter().position(|l| l == c) {
                    Some(k) => k + 1,
                    None => {
                        dict.push(c.clone());
                        dict.len()
                    }
                };
                codes.push(code as u16);
            }
            (codes, dict.len(), Some(dict))
        };
        let d = match declared {
            Some(decl) => {
                if decl[j] < observed {
                    return Err(Error::Data(format!(
                        "column {} ({}) has {observed} levels but {} were declared",
                        j + 1,
                        header[j],
                        decl[j]
                    )));
                }
                decl[j]
            }
            None => observed,
        };
        if d < 2 {
            return Err(Error::Data(format!(
                "column {} ({}) has fewer than 2 observed levels; declare its level count",
                j + 1,
                header[j]
            )));
        }
        for (i, c) in codes.into_iter().enumerate() {
            values[i * p + j] = c;
        }
        levels.push(d);
        labels.push(dict);
    }
    Ok(ParsedDataset { dataset: CategoricalDataset::new(levels, values)?, header, labels })
}

/// Default column names `V1..Vp`.
pub fn default_header(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("V{j}")).collect()
}

/// Writes integer codes with a header row; missing cells are empty.
pub fn write_dataset_csv(path: impl AsRef<Path>, data: &CategoricalDataset, header: Option<&[String]>) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let header = header.map_or_else(|| default_header(data.p()), <[String]>::to_vec);
    if header.len() != data.p() {
        return Err(Error::invalid("one header name per column is required"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(&name, e))?;
    w.write_record(&header).map_err(|e| csv_error(&name, e))?;
    let mut row = Vec::with_capacity(data.p());
    for i in 0..data.n() {
        row.clear();
        row.extend(data.row(i).iter().map(|&c| if c == MISSING { String::new() } else { c.to_string() }));
        w.write_record(&row).map_err(|e| csv_error(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// One line of a draws file. Only active `λ` vectors are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawRecord {
    pub iteration: usize,
    pub occupied: usize,
    #[serde(rename = "V")]
    pub sticks: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: f64,
    /// One string of `0`/`1` per component, character `j` for variable `j + 1`.
    pub flags: Vec<String>,
    /// `(h, j, λ_h^(j))` with 1-based `h` and `j`.
    pub lambda: Vec<(usize, usize, Vec<f64>)>,
    /// 1-based allocations, when kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<u32>>,
}

impl DrawRecord {
    pub fn from_draw(draw: &RetainedDraw) -> Self {
        let m = &draw.params;
        let (k, p) = (m.num_components(), m.num_variables());
        let flags = (0..k)
            .map(|h| (0..p).map(|j| if m.is_active(h, j) { '1' } else { '0' }).collect())
            .collect();
        let mut lambda = Vec::new();
        for h in 0..k {
            for j in 0..p {
                if m.is_active(h, j) {
                    lambda.push((h + 1, j + 1, m.lambda(h, j).to_vec()));
                }
            }
        }
        Self {
            iteration: draw.iteration,
            occupied: draw.occupied,
            sticks: m.sticks().to_vec(),
            tau: m.tau().to_vec(),
            alpha: m.alpha(),
            flags,
            lambda,
            z: draw.z.as_ref().map(|z| z.iter().map(|&h| h + 1).collect()),
        }
    }

    /// Rebuilds the draw using the baseline vectors recorded in the run metadata.
    pub fn to_draw(&self, meta: &RunMeta) -> Result<RetainedDraw> {
        let p = meta.levels.len();
        let k = self.sticks.len();
        if self.flags.len() != k || self.tau.len() != k {
            return Err(Error::invalid("flags and tau need one entry per component"));
        }
        let mut components: Vec<Vec<Option<SimplexVector>>> = vec![vec![None; p]; k];
        for (h, row) in self.flags.iter().enumerate() {
            if row.len() != p || row.chars().any(|c| c != '0' && c != '1') {
                return Err(Error::invalid(format!("flag string for component {} is malformed", h + 1)));
            }
        }
        for (h, j, probs) in &self.lambda {
            if *h == 0 || *h > k || *j == 0 || *j > p {
                return Err(Error::invalid(format!("lambda entry ({h}, {j}) out of range")));
            }
            if self.flags[h - 1].as_bytes()[j - 1] != b'1' {
                return Err(Error::invalid(format!("lambda entry ({h}, {j}) is not flagged active")));
            }
            components[h - 1][j - 1] = Some(SimplexVector::new(probs.clone())?);
        }
        for (h, row) in self.flags.iter().enumerate() {
            for (j, c) in row.bytes().enumerate() {
                if c == b'1' && components[h][j].is_none() {
                    return Err(Error::invalid(format!("active pair ({}, {}) has no lambda", h + 1, j + 1)));
                }
            }
        }
        let baseline = meta
            .baseline
            .iter()
            .map(|b| SimplexVector::new(b.clone()))
            .collect::<Result<Vec<_>>>()?;
        let params = SpParafacParams::from_parts(ParamsParts {
            levels: meta.levels.clone(),
            baseline,
            sticks: self.sticks.clone(),
            alpha: self.alpha,
            tau: self.tau.clone(),
            components,
        })?;
        let z = match &self.z {
            Some(z) => Some(
                z.iter()
                    .map(|&h| {
                        if h == 0 || h as usize > k {
                            Err(Error::invalid(format!("allocation {h} out of range")))
                        } else {
                            Ok(h - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(RetainedDraw { iteration: self.iteration, params, occupied: self.occupied, z })
    }
}

/// One JSON object per line, one line per retained draw.
pub fn write_draws_jsonl(path: impl AsRef<Path>, samples: &PosteriorSampleSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for draw in &samples.draws {
        serde_json::to_writer(&mut w, &DrawRecord::from_draw(draw)).map_err(|e| Error::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a draws file; parse failures name the 1-based line.
pub fn read_draws_jsonl(path: impl AsRef<Path>, meta: &RunMeta) -> Result<Vec<RetainedDraw>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut draws = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let located = |message: String| Error::Format { path: name.clone(), message: format!("line {}: {message}", i + 1) };
        let rec: DrawRecord = serde_json::from_str(&line).map_err(|e| located(e.to_string()))?;
        draws.push(rec.to_draw(meta).map_err(|e| located(e.to_string()))?);
    }
    Ok(draws)
}

/// Reads a draws file and its run metadata.
pub fn read_sample_set(draws: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<PosteriorSampleSet> {
    let meta: RunMeta = read_json(meta)?;
    let draws = read_draws_jsonl(draws, &meta)?;
    Ok(PosteriorSampleSet { draws, meta })
}

/// Per-draw scalar diagnostics: `iteration,alpha,occupied,active_flags`.
pub fn write_trace_csv(path: impl AsRef<Path>, samples: &PosteriorSampleSet) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(&name, e))?;
    w.write_record(["iteration", "alpha", "occupied", "active_flags"]).map_err(|e| csv_error(&name, e))?;
    for d in &samples.draws {
        w.write_record([
            d.iteration.to_string(),
            d.params.alpha().to_string(),
            d.occupied.to_string(),
            d.params.active_count().to_string(),
        ])
        .map_err(|e| csv_error(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Square matrix with a header of column names and the row name in the
/// first field of each row.
pub fn write_matrix_csv(path: impl AsRef<Path>, names: &[String], values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let p = names.len();
    if values.len() != p * p {
        return Err(Error::invalid("matrix values do not match the names"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(&name, e))?;
    let mut head = vec![String::new()];
    head.extend(names.iter().cloned());
    w.write_record(&head).map_err(|e| csv_error(&name, e))?;
    for (a, row_name) in names.iter().enumerate() {
        let mut row = vec![row_name.clone()];
        row.extend(values[a * p..(a + 1) * p].iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| csv_error(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Returns `(names, row-major values)`.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<f64>)> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(&name, e))?;
    let names: Vec<String> = rdr.headers().map_err(|e| csv_error(&name, e))?.iter().skip(1).map(String::from).collect();
    let mut values = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&name, e))?;
        for (c, cell) in rec.iter().enumerate().skip(1) {
            values.push(cell.parse::<f64>().map_err(|e| Error::Parse {
                row: r + 2,
                column: c + 1,
                message: format!("{name}: {e}"),
            })?);
        }
    }
    if values.len() != names.len() * names.len() {
        return Err(Error::Format { path: name, message: "matrix is not square".into() });
    }
    Ok((names, values))
}

/// Columns `bin_left,bin_right,count`.
pub fn write_histogram_csv(path: impl AsRef<Path>, hist: &Histogram) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(&name, e))?;
    w.write_record(["bin_left", "bin_right", "count"]).map_err(|e| csv_error(&name, e))?;
    for (l, r, c) in hist.rows() {
        w.write_record([l.to_string(), r.to_string(), c.to_string()]).map_err(|e| csv_error(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct HistogramRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

pub fn read_histogram_csv(path: impl AsRef<Path>) -> Result<Histogram> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(&name, e))?;
    let mut edges = Vec::new();
    let mut counts = Vec::new();
    for row in rdr.deserialize::<HistogramRow>() {
        let row = row.map_err(|e| csv_error(&name, e))?;
        if edges.is_empty() {
            edges.push(row.bin_left);
        } else if *edges.last().unwrap() != row.bin_left {
            return Err(Error::Format { path: name, message: "histogram bins are not contiguous".into() });
        }
        edges.push(row.bin_right);
        counts.push(row.count);
    }
    if counts.is_empty() {
        return Err(Error::Format { path: name, message: "empty histogram".into() });
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Serialize, Deserialize)]
struct AggregateCsvRow {
    coefficient: String,
    truth: f64,
    measure: String,
    replicates: usize,
    rejection_rate: f64,
    coverage: f64,
}

/// Columns `coefficient,truth,measure,replicates,rejection_rate,coverage`,
/// where `measure` is `power` for nonzero truths and `type_i` otherwise.
pub fn write_aggregate_csv(path: impl AsRef<Path>, rows: &[AggregateRow]) -> Result<()> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(&name, e))?;
    for r in rows {
        w.serialize(AggregateCsvRow {
            coefficient: r.name.clone(),
            truth: r.truth,
            measure: if r.is_null() { "type_i" } else { "power" }.into(),
            replicates: r.replicates,
            rejection_rate: r.rejection_rate,
            coverage: r.coverage,
        })
        .map_err(|e| csv_error(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_aggregate_csv(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(&name, e))?;
    rdr.deserialize::<AggregateCsvRow>()
        .map(|r| {
            let r = r.map_err(|e| csv_error(&name, e))?;
            Ok(AggregateRow {
                name: r.coefficient,
                truth: r.truth,
                replicates: r.replicates,
                rejection_rate: r.rejection_rate,
                coverage: r.coverage,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{run_chain, GibbsConfig};
    use crate::prior::PriorConfig;

    fn parse(text: &str) -> Result<ParsedDataset> {
        parse_dataset_reader(text.as_bytes(), "test.csv", None)
    }

    #[test]
    fn integer_codes() {
        let d = parse("a,b\n1,2\n2,1\n").unwrap();
        assert_eq!((d.dataset.n(), d.dataset.p()), (2, 2));
        assert_eq!(d.dataset.levels(), &[2, 2]);
        assert_eq!(d.header, vec!["a", "b"]);
        assert!(d.labels.iter().all(Option::is_none));
    }

    #[test]
    fn labels_by_first_appearance() {
        let d = parse("pos1\nG\nA\nC\nT\nA\n").unwrap();
        assert_eq!(d.dataset.levels(), &[4]);
        assert_eq!(d.labels[0].as_deref().unwrap(), &["G", "A", "C", "T"]);
        assert_eq!(d.dataset.get(4, 0), Some(2));
        assert_eq!(d.dictionary().columns[0].position, 1);
    }

    #[test]
    fn empty_cell_is_missing() {
        let d = parse("a,b\n1,2\n,1\n2,2\n").unwrap();
        assert_eq!(d.dataset.get(1, 0), None);
        assert_eq!(d.dataset.column_counts(0), vec![1, 1]);
        assert_eq!(d.dataset.missing_count(), 1);
    }

    #[test]
    fn parse_errors_are_located() {
        match parse("a,b\n1,2\n0,1\n") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        match parse("a,b\n1,2\n2\n") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("a,b\n1,-2\n2,1\n"), Err(Error::Parse { column: 2, .. })));
        assert!(matches!(parse("a\n1\n1\n"), Err(Error::Data(_))));
        assert!(matches!(parse("a,b\n"), Err(Error::Data(_))));
        let ok = parse_dataset_reader("a\n1\n1\n".as_bytes(), "t", Some(&[3])).unwrap();
        assert_eq!(ok.dataset.levels(), &[3]);
        assert!(parse_dataset_reader("a\n1\n3\n".as_bytes(), "t", Some(&[2])).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = CategoricalDataset::from_rows(
            vec![3, 2],
            &[vec![Some(1), Some(2)], vec![None, Some(1)], vec![Some(3), None]],
        )
        .unwrap();
        write_dataset_csv(&path, &data, None).unwrap();
        let back = parse_dataset_csv(&path, Some(&[3, 2])).unwrap();
        assert_eq!(back.dataset, data);
        assert_eq!(back.header, vec!["V1", "V2"]);
    }

    #[test]
    fn draws_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = CategoricalDataset::from_rows(
            vec![2, 3, 2],
            &(0..12).map(|i| vec![Some(1 + i % 2), Some(1 + i % 3), if i == 4 { None } else { Some(1 + i / 6) }]).collect::<Vec<_>>(),
        )
        .unwrap();
        let config = GibbsConfig {
            iterations: 40,
            burn_in: 10,
            thin: 3,
            seed: 7,
            keep_z: true,
            prior: PriorConfig { truncation: 4, ..PriorConfig::for_variables(3) },
        };
        let set = run_chain(&data, &config).unwrap();
        let (draws, meta) = (dir.path().join("draws.jsonl"), dir.path().join("meta.json"));
        write_draws_jsonl(&draws, &set).unwrap();
        write_json(&meta, &set.meta).unwrap();
        let back = read_sample_set(&draws, &meta).unwrap();
        assert_eq!(back, set);
        write_trace_csv(dir.path().join("trace.csv"), &set).unwrap();
        let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), set.len() + 1);
    }

    #[test]
    fn malformed_draw_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "{\"iteration\":1}\n").unwrap();
        let meta = RunMeta {
            config: GibbsConfig::default(),
            seed: 0,
            n: 1,
            levels: vec![2],
            baseline: vec![vec![0.5, 0.5]],
            wall_time_secs: 0.0,
        };
        let err = read_draws_jsonl(&path, &meta).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let names = default_header(2);
        let m = dir.path().join("m.csv");
        write_matrix_csv(&m, &names, &[1.0, 0.25, 0.25, 1.0]).unwrap();
        assert_eq!(read_matrix_csv(&m).unwrap(), (names, vec![1.0, 0.25, 0.25, 1.0]));

        let h = dir.path().join("h.csv");
        let hist = Histogram::from_values(&[0.1, 0.2, 0.35, 0.9], 4).unwrap();
        write_histogram_csv(&h, &hist).unwrap();
        assert!(std::fs::read_to_string(&h).unwrap().starts_with("bin_left,bin_right,count\n"));
        assert_eq!(read_histogram_csv(&h).unwrap(), hist);

        let a = dir.path().join("a.csv");
        let rows = vec![
            AggregateRow { name: "b12".into(), truth: 2.0, replicates: 20, rejection_rate: 0.85, coverage: 0.8 },
            AggregateRow { name: "b20".into(), truth: 0.0, replicates: 20, rejection_rate: 0.0, coverage: 1.0 },
        ];
        write_aggregate_csv(&a, &rows).unwrap();
        assert!(std::fs::read_to_string(&a).unwrap().contains("type_i"));
        assert_eq!(read_aggregate_csv(&a).unwrap(), rows);
    }
}
