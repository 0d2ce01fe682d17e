//! CSV readers for the pipeline inputs and RFC-4180 writers for its
//! outputs.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use lossindex_core::ingest::{DeflatorTable, LevelSeries, LossPanel};

use crate::error::{CliError, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_year(path: &Path, line: u64, s: &str) -> Result<i32> {
    s.parse().map_err(|_| CliError::parse(path, format!("line {line}: year '{s}' is not an integer")))
}

fn parse_number(path: &Path, line: u64, column: &str, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::parse(path, format!("line {line}, column '{column}': '{s}' is not a number"))),
    }
}

fn records(path: &Path, text: &str, expect_first: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = reader(text);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::parse(path, format!("unreadable header: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    if header.first().map(String::as_str) != Some(expect_first) {
        return Err(CliError::parse(path, format!("first header field must be '{expect_first}'")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(CliError::parse(
                path,
                format!("line {}: expected {} fields, found {}", line_of(&rec), header.len(), rec.len()),
            ));
        }
        rows.push(rec);
    }
    Ok((header, rows))
}

fn check_duplicate(path: &Path, seen: &mut HashMap<i32, u64>, year: i32, line: u64) -> Result<()> {
    if let Some(first) = seen.insert(year, line) {
        return Err(CliError::parse(path, format!("line {line}: duplicate year {year} (first on line {first})")));
    }
    Ok(())
}

/// Loss panel: header `year,<category>...`, one row per year, empty cells
/// missing.
pub fn read_loss_panel(path: &Path) -> Result<LossPanel> {
    parse_loss_panel(path, &read_text(path)?)
}

pub fn parse_loss_panel(path: &Path, text: &str) -> Result<LossPanel> {
    let (header, rows) = records(path, text, "year")?;
    if header.len() < 2 {
        return Err(CliError::parse(path, "no category columns"));
    }
    let categories = header[1..].to_vec();
    let mut years = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len() * categories.len());
    let mut seen = HashMap::new();
    for rec in &rows {
        let line = line_of(rec);
        let year = parse_year(path, line, &rec[0])?;
        check_duplicate(path, &mut seen, year, line)?;
        years.push(year);
        for (j, s) in rec.iter().skip(1).enumerate() {
            cells.push(if s.is_empty() { None } else { Some(parse_number(path, line, &categories[j], s)?) });
        }
    }
    LossPanel::new(years, categories, cells).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Deflators: header `year,factor`.
pub fn read_deflators(path: &Path) -> Result<DeflatorTable> {
    let text = read_text(path)?;
    let (header, rows) = records(path, &text, "year")?;
    if header.len() != 2 {
        return Err(CliError::parse(path, "expected columns year,factor"));
    }
    let mut seen = HashMap::new();
    let mut entries = Vec::with_capacity(rows.len());
    for rec in &rows {
        let line = line_of(rec);
        let year = parse_year(path, line, &rec[0])?;
        check_duplicate(path, &mut seen, year, line)?;
        entries.push((year, parse_number(path, line, &header[1], &rec[1])?));
    }
    DeflatorTable::new(entries).map_err(|e| CliError::parse(path, e.to_string()))
}

/// Annual factor levels: header `year,<name>`, rows sorted by year.
pub fn read_factor(path: &Path, label: &str) -> Result<LevelSeries> {
    let text = read_text(path)?;
    let (header, rows) = records(path, &text, "year")?;
    if header.len() != 2 {
        return Err(CliError::parse(path, "expected two columns: year and the factor value"));
    }
    let mut seen = HashMap::new();
    let (mut periods, mut levels) = (Vec::new(), Vec::new());
    for rec in &rows {
        let line = line_of(rec);
        let year = parse_year(path, line, &rec[0])?;
        check_duplicate(path, &mut seen, year, line)?;
        if periods.last().is_some_and(|p| *p > year) {
            return Err(CliError::parse(path, format!("line {line}: years not increasing")));
        }
        periods.push(year);
        levels.push(parse_number(path, line, &header[1], &rec[1])?);
    }
    Ok(LevelSeries { label: label.to_string(), periods, levels })
}

/// Shortest round-trip decimal; non-finite values become an empty field.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// RFC-4180 CSV: CRLF line ends, quoting only where needed.
pub fn csv_bytes<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn panel_csv(panel: &LossPanel) -> Vec<u8> {
    let mut header = vec!["year"];
    header.extend(panel.categories().iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..panel.n_years())
        .map(|i| {
            let mut r = vec![panel.years()[i].to_string()];
            r.extend((0..panel.n_categories()).map(|j| panel.get(i, j).map_or(String::new(), num)));
            r
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn levels_csv(levels: &LevelSeries) -> Vec<u8> {
    let rows: Vec<Vec<String>> =
        levels.periods.iter().zip(&levels.levels).map(|(y, v)| vec![y.to_string(), num(*v)]).collect();
    csv_bytes(&["year", "level"], &rows)
}
