//! CSV ingestion for the three supported layouts.
//!
//! All layouts are UTF-8 with a required header row and '.' decimal
//! separator; lines starting with `#` (provenance headers) are skipped.
//!
//! - `single`: `time,value`
//! - `wide`:   `time,pixel_<id>,pixel_<id>,...`
//! - `long`:   `pixel_id,t_index,value` with `t_index` dense `0..N-1`
//!   per pixel

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{PixelStack, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFormat {
    Single,
    Wide,
    Long,
}

impl CsvFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            CsvFormat::Single => "single",
            CsvFormat::Wide => "wide",
            CsvFormat::Long => "long",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Multiply every value after parsing (e.g. 1e-4 to unscale MODIS
    /// integer reflectances).
    pub scale: Option<f64>,
    /// Fill missing values by linear interpolation over interior gaps and
    /// constant extension at the ends. Off by default: silent gap filling
    /// distorts recurrence structure, so it has to be asked for.
    pub fill_missing: bool,
}

/// What a file parsed into.
#[derive(Debug, Clone)]
pub enum Loaded {
    Single(TimeSeries),
    Stack(PixelStack),
}

/// Identify the layout from the header row.
pub fn detect_format(path: &Path) -> Result<CsvFormat> {
    let headers = read_headers(path)?;
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_lowercase()).collect();
    match names.as_slice() {
        [t, v] if t == "time" && v == "value" => Ok(CsvFormat::Single),
        [p, t, v] if p == "pixel_id" && t == "t_index" && v == "value" => Ok(CsvFormat::Long),
        [t, rest @ ..] if t == "time" && !rest.is_empty() => Ok(CsvFormat::Wide),
        _ => Err(Error::CsvFormat {
            path: path.to_path_buf(),
            row: 1,
            message: format!(
                "unrecognized header {:?}; expected `time,value`, `time,pixel_...` or `pixel_id,t_index,value`",
                headers.iter().collect::<Vec<_>>()
            ),
        }),
    }
}

/// Load one series or a pixel stack. Stacks come back with an empty group
/// label; callers attach one with [`PixelStack::with_group`].
pub fn load_series(path: &Path, format: CsvFormat, opts: &LoadOptions) -> Result<Loaded> {
    match format {
        CsvFormat::Single => load_single(path, opts).map(Loaded::Single),
        CsvFormat::Wide => load_wide(path, opts).map(Loaded::Stack),
        CsvFormat::Long => load_long(path, opts).map(Loaded::Stack),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io {
            path: path.to_path_buf(),
            source: io,
        },
        other => Error::CsvFormat {
            path: path.to_path_buf(),
            row: 0,
            message: format!("{other:?}"),
        },
    }
}

fn read_headers(path: &Path) -> Result<csv::StringRecord> {
    let mut rdr = reader(path)?;
    rdr.headers().cloned().map_err(|e| io_error(path, e))
}

/// `None` for an empty or NA-marked cell, `Some(v)` for a parsed number.
fn parse_cell(
    path: &Path,
    row: usize,
    column: usize,
    raw: &str,
    scale: f64,
) -> Result<Option<f64>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("na") || trimmed.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v * scale)),
        _ => Err(Error::CsvParse {
            path: path.to_path_buf(),
            row,
            column,
            value: trimmed.to_string(),
        }),
    }
}

/// Resolve missing entries: interior gaps by linear interpolation between
/// the surrounding present samples, leading/trailing gaps by copying the
/// nearest present sample.
fn fill_gaps(values: &mut [Option<f64>]) -> Result<()> {
    let first = values.iter().position(Option::is_some);
    let Some(first) = first else {
        return Err(Error::Degenerate("series is entirely missing".into()));
    };
    let last = values.iter().rposition(Option::is_some).expect("some");
    let head = values[first].expect("present");
    let tail = values[last].expect("present");
    for v in &mut values[..first] {
        *v = Some(head);
    }
    for v in &mut values[last + 1..] {
        *v = Some(tail);
    }
    let mut i = first;
    while i <= last {
        if values[i].is_some() {
            i += 1;
            continue;
        }
        let gap_start = i; // first missing
        let mut j = i;
        while values[j].is_none() {
            j += 1;
        }
        let left = values[gap_start - 1].expect("present");
        let right = values[j].expect("present");
        let span = (j - gap_start + 1) as f64;
        for (k, v) in values[gap_start..j].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / span;
            *v = Some(left + frac * (right - left));
        }
        i = j;
    }
    Ok(())
}

fn resolve(
    path: &Path,
    values: Vec<(usize, Option<f64>)>,
    column: usize,
    opts: &LoadOptions,
) -> Result<Vec<f64>> {
    if !opts.fill_missing {
        if let Some((row, _)) = values.iter().find(|(_, v)| v.is_none()) {
            return Err(Error::MissingValue {
                path: path.to_path_buf(),
                row: *row,
                column,
            });
        }
    }
    let mut cells: Vec<Option<f64>> = values.into_iter().map(|(_, v)| v).collect();
    fill_gaps(&mut cells).map_err(|_| Error::Degenerate(format!(
        "{}: column {column} has no values at all",
        path.display()
    )))?;
    Ok(cells.into_iter().map(|v| v.expect("filled")).collect())
}

/// Infer the sampling interval from a strictly increasing time column.
fn dt_from_times(path: &Path, times: &[(usize, f64)]) -> Result<f64> {
    for w in times.windows(2) {
        let (row, t0) = w[0];
        let (_, t1) = w[1];
        if t1 <= t0 {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row,
                message: format!("time column must be strictly increasing ({t0} then {t1})"),
            });
        }
    }
    Ok(if times.len() >= 2 {
        times[1].1 - times[0].1
    } else {
        1.0
    })
}

fn load_single(path: &Path, opts: &LoadOptions) -> Result<TimeSeries> {
    let scale = opts.scale.unwrap_or(1.0);
    let mut rdr = reader(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let row = idx + 2; // 1-based, after the header
        if rec.len() != 2 {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row,
                message: format!("expected 2 columns, got {}", rec.len()),
            });
        }
        let t = parse_cell(path, row, 1, &rec[0], 1.0)?.ok_or_else(|| Error::MissingValue {
            path: path.to_path_buf(),
            row,
            column: 1,
        })?;
        times.push((row, t));
        values.push((row, parse_cell(path, row, 2, &rec[1], scale)?));
    }
    let dt = dt_from_times(path, &times)?;
    TimeSeries::new(resolve(path, values, 2, opts)?, dt)
}

fn load_wide(path: &Path, opts: &LoadOptions) -> Result<PixelStack> {
    let scale = opts.scale.unwrap_or(1.0);
    let headers = read_headers(path)?;
    let pixel_ids: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|h| h.trim().strip_prefix("pixel_").unwrap_or(h.trim()).to_string())
        .collect();
    {
        let mut sorted = pixel_ids.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != pixel_ids.len() {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row: 1,
                message: "duplicate pixel column".into(),
            });
        }
    }
    let ncols = headers.len();
    let mut rdr = reader(path)?;
    let mut times = Vec::new();
    let mut columns: Vec<Vec<(usize, Option<f64>)>> = vec![Vec::new(); pixel_ids.len()];
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let row = idx + 2;
        if rec.len() != ncols {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row,
                message: format!("expected {ncols} columns, got {}", rec.len()),
            });
        }
        let t = parse_cell(path, row, 1, &rec[0], 1.0)?.ok_or_else(|| Error::MissingValue {
            path: path.to_path_buf(),
            row,
            column: 1,
        })?;
        times.push((row, t));
        for (c, col) in columns.iter_mut().enumerate() {
            col.push((row, parse_cell(path, row, c + 2, &rec[c + 1], scale)?));
        }
    }
    let dt = dt_from_times(path, &times)?;
    let mut map = BTreeMap::new();
    for (id, col) in pixel_ids.into_iter().zip(columns) {
        let column_no = map.len() + 2;
        let series = TimeSeries::new(resolve(path, col, column_no, opts)?, dt)
            .map_err(|e| e.for_pixel(&id))?;
        map.insert(id, series);
    }
    PixelStack::new(map, "")
}

fn load_long(path: &Path, opts: &LoadOptions) -> Result<PixelStack> {
    let scale = opts.scale.unwrap_or(1.0);
    let mut rdr = reader(path)?;
    // pixel -> (t_index -> (row, value)), insertion-order independent
    let mut pixels: BTreeMap<String, BTreeMap<usize, (usize, Option<f64>)>> = BTreeMap::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let row = idx + 2;
        if rec.len() != 3 {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row,
                message: format!("expected 3 columns, got {}", rec.len()),
            });
        }
        let pixel = rec[0].trim().to_string();
        if pixel.is_empty() {
            return Err(Error::MissingValue {
                path: path.to_path_buf(),
                row,
                column: 1,
            });
        }
        let t_index: usize = rec[1].trim().parse().map_err(|_| Error::CsvParse {
            path: path.to_path_buf(),
            row,
            column: 2,
            value: rec[1].trim().to_string(),
        })?;
        let value = parse_cell(path, row, 3, &rec[2], scale)?;
        if pixels
            .entry(pixel.clone())
            .or_default()
            .insert(t_index, (row, value))
            .is_some()
        {
            return Err(Error::CsvFormat {
                path: path.to_path_buf(),
                row,
                message: format!("duplicate t_index {t_index} for pixel {pixel}"),
            });
        }
    }
    let mut expected_len: Option<usize> = None;
    let mut map = BTreeMap::new();
    for (pixel, cells) in pixels {
        let len = cells.len();
        // dense 0..N-1 check: with unique keys it suffices that the max is len-1
        if let Some((&max_idx, _)) = cells.iter().next_back() {
            if max_idx != len - 1 {
                return Err(Error::CsvFormat {
                    path: path.to_path_buf(),
                    row: 0,
                    message: format!(
                        "pixel {pixel}: t_index not dense (max {max_idx} over {len} rows)"
                    ),
                });
            }
        }
        match expected_len {
            None => expected_len = Some(len),
            Some(e) if e != len => {
                return Err(Error::CsvFormat {
                    path: path.to_path_buf(),
                    row: 0,
                    message: format!("pixel {pixel} has {len} samples, expected {e}"),
                });
            }
            _ => {}
        }
        let ordered: Vec<(usize, Option<f64>)> = cells.into_values().collect();
        let series =
            TimeSeries::new(resolve(path, ordered, 3, opts)?, 1.0).map_err(|e| e.for_pixel(&pixel))?;
        map.insert(pixel, series);
    }
    PixelStack::new(map, "")
}
