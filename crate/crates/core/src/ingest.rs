//! Loading CAN-bus hex traces and headered numeric CSV tables.
//!
//! Both readers first produce a [`FeatureTable`] that keeps raw label strings;
//! the table is then encoded into a [`Dataset`] either by first appearance of
//! each label or against an existing class list.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LccdeError, Result};
use crate::types::{validate_dataset, Dataset};

pub const CAN_FEATURE_NAMES: [&str; 9] =
    ["can_id", "data0", "data1", "data2", "data3", "data4", "data5", "data6", "data7"];

/// One decoded CAN frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanRecord {
    pub can_id: u32,
    pub dlc: u8,
    /// Zero-padded past `dlc`.
    pub data: [u8; 8],
    pub label: String,
}

impl CanRecord {
    pub fn features(&self) -> Vec<f64> {
        std::iter::once(self.can_id as f64).chain(self.data.iter().map(|&b| b as f64)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped_nonfinite: usize,
    pub rows_dropped_malformed: usize,
    /// Kept rows per label, in first-appearance order.
    pub class_histogram: Vec<(String, usize)>,
}

impl IngestReport {
    fn count_label(&mut self, label: &str) {
        match self.class_histogram.iter_mut().find(|(l, _)| l == label) {
            Some((_, n)) => *n += 1,
            None => self.class_histogram.push((label.to_string(), 1)),
        }
    }
}

/// Sanitised rows with their raw label strings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Present when the input carries labels.
    pub labels: Option<Vec<String>>,
}

impl FeatureTable {
    /// Encodes labels densely in order of first appearance.
    pub fn into_dataset(self) -> Result<Dataset> {
        let raw = self.labels.ok_or_else(|| LccdeError::InvalidConfig("input has no label column".into()))?;
        let mut class_names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let labels = raw
            .into_iter()
            .map(|name| {
                *index.entry(name).or_insert_with_key(|k| {
                    class_names.push(k.clone());
                    class_names.len() - 1
                })
            })
            .collect();
        Dataset::new(self.rows, labels, self.feature_names, class_names)
    }

    /// Encodes labels against a known class list. Unlike [`Self::into_dataset`],
    /// the input may contain a single class, or no rows at all.
    pub fn into_dataset_with_classes(self, reference: &[String]) -> Result<Dataset> {
        let raw = self.labels.ok_or_else(|| LccdeError::InvalidConfig("input has no label column".into()))?;
        let index: HashMap<&str, usize> = reference.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let labels = raw
            .iter()
            .map(|name| index.get(name.as_str()).copied().ok_or_else(|| LccdeError::UnknownClass(name.clone())))
            .collect::<Result<Vec<_>>>()?;
        let d =
            Dataset { features: self.rows, labels, feature_names: self.feature_names, class_names: reference.to_vec() };
        let violations: Vec<_> =
            validate_dataset(&d).into_iter().filter(|v| !matches!(v, crate::types::Violation::NoRows)).collect();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(LccdeError::InvalidDataset(violations))
        }
    }
}

fn parse_hex<T: TryFrom<u32>>(s: &str) -> Option<T> {
    let s = s.trim();
    let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    if s.is_empty() || s.len() > 8 {
        return None;
    }
    u32::from_str_radix(s, 16).ok().and_then(|v| T::try_from(v).ok())
}

/// Parses one headerless CAN row: timestamp, CAN ID (hex), DLC, DLC data
/// bytes (hex), label. Returns `None` for a malformed row.
pub fn parse_can_fields<'a, I>(fields: I) -> Option<CanRecord>
where
    I: IntoIterator<Item = &'a str>,
{
    let fields: Vec<&str> = fields.into_iter().map(str::trim).collect();
    if fields.len() < 4 {
        return None;
    }
    fields[0].parse::<f64>().ok().filter(|t| t.is_finite())?;
    let can_id: u32 = parse_hex(fields[1])?;
    let dlc: u8 = fields[2].parse().ok().filter(|&d| d <= 8)?;
    if fields.len() != 4 + dlc as usize {
        return None;
    }
    let mut data = [0u8; 8];
    for (slot, field) in data.iter_mut().zip(&fields[3..3 + dlc as usize]) {
        *slot = parse_hex(field)?;
    }
    let label = fields[3 + dlc as usize];
    if label.is_empty() {
        return None;
    }
    Some(CanRecord { can_id, dlc, data, label: label.to_string() })
}

fn reader_builder(has_headers: bool) -> csv::ReaderBuilder {
    let mut b = csv::ReaderBuilder::new();
    b.has_headers(has_headers).flexible(true).trim(csv::Trim::All);
    b
}

/// Reads CAN frames into nine features: the decoded CAN ID followed by the
/// eight data bytes. Malformed rows are dropped and counted.
pub fn read_can_hex_csv<R: Read>(reader: R) -> Result<(FeatureTable, IngestReport)> {
    let mut report = IngestReport::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut raw = csv::ByteRecord::new();
    let mut rdr = reader_builder(false).from_reader(reader);
    loop {
        match rdr.read_byte_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                report.rows_read += 1;
                report.rows_dropped_malformed += 1;
                continue;
            }
        }
        if raw.len() == 1 && raw.get(0).is_some_and(<[u8]>::is_empty) {
            continue; // blank line
        }
        report.rows_read += 1;
        let record =
            raw.iter().map(|f| std::str::from_utf8(f).ok()).collect::<Option<Vec<_>>>().and_then(parse_can_fields);
        match record {
            Some(r) => {
                report.count_label(&r.label);
                rows.push(r.features());
                labels.push(r.label);
            }
            None => report.rows_dropped_malformed += 1,
        }
    }
    report.rows_kept = rows.len();
    let table = FeatureTable {
        feature_names: CAN_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        labels: Some(labels),
    };
    Ok((table, report))
}

/// Reads a headered numeric table. Every column other than `label_col` is a
/// feature; rows with NaN or infinite cells count as non-finite, rows with
/// unparsable cells or the wrong width as malformed.
pub fn read_numeric_csv<R: Read>(reader: R, label_col: Option<&str>) -> Result<(FeatureTable, IngestReport)> {
    let mut rdr = reader_builder(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = match label_col {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| LccdeError::MissingLabelColumn { name: name.to_string(), available: header.clone() })?,
        ),
        None => None,
    };
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|&(i, _)| Some(i) != label_idx).map(|(_, h)| h.clone()).collect();

    let mut report = IngestReport::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                report.rows_read += 1;
                report.rows_dropped_malformed += 1;
                continue;
            }
        };
        if rec.len() == 1 && rec.get(0) == Some("") && header.len() > 1 {
            continue;
        }
        report.rows_read += 1;
        if rec.len() != header.len() {
            report.rows_dropped_malformed += 1;
            continue;
        }
        let mut row = Vec::with_capacity(feature_names.len());
        let mut malformed = false;
        let mut nonfinite = false;
        for (i, cell) in rec.iter().enumerate() {
            if Some(i) == label_idx {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => nonfinite = true,
                Err(_) => malformed = true,
            }
        }
        let label = label_idx.map(|i| rec[i].to_string());
        if label.as_deref() == Some("") {
            malformed = true;
        }
        if malformed {
            report.rows_dropped_malformed += 1;
        } else if nonfinite {
            report.rows_dropped_nonfinite += 1;
        } else {
            if let Some(l) = label {
                report.count_label(&l);
                labels.push(l);
            }
            rows.push(row);
        }
    }
    report.rows_kept = rows.len();
    let table = FeatureTable { feature_names, rows, labels: label_idx.map(|_| labels) };
    Ok((table, report))
}

fn require_rows(table: &FeatureTable, report: &IngestReport) -> Result<()> {
    if table.rows.is_empty() {
        return Err(LccdeError::NoUsableRows { rows_read: report.rows_read });
    }
    Ok(())
}

/// Loads a CAN trace as a [`Dataset`] with labels in first-appearance order.
pub fn load_can_hex_csv<R: Read>(reader: R) -> Result<(Dataset, IngestReport)> {
    let (table, report) = read_can_hex_csv(reader)?;
    require_rows(&table, &report)?;
    Ok((table.into_dataset()?, report))
}

pub fn load_can_hex_path(path: impl AsRef<Path>) -> Result<(Dataset, IngestReport)> {
    load_can_hex_csv(File::open(path)?)
}

/// Loads a headered numeric table as a [`Dataset`].
pub fn load_numeric_csv<R: Read>(reader: R, label_col: &str) -> Result<(Dataset, IngestReport)> {
    let (table, report) = read_numeric_csv(reader, Some(label_col))?;
    require_rows(&table, &report)?;
    Ok((table.into_dataset()?, report))
}

pub fn load_numeric_path(path: impl AsRef<Path>, label_col: &str) -> Result<(Dataset, IngestReport)> {
    load_numeric_csv(File::open(path)?, label_col)
}

/// Re-indexes labels to follow `reference`, which becomes the class list.
pub fn relabel_to_reference(d: &Dataset, reference: &[String]) -> Result<Dataset> {
    let mapping = d
        .class_names
        .iter()
        .map(|name| reference.iter().position(|r| r == name).ok_or_else(|| LccdeError::UnknownClass(name.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        features: d.features.clone(),
        labels: d.labels.iter().map(|&l| mapping[l]).collect(),
        feature_names: d.feature_names.clone(),
        class_names: reference.to_vec(),
    })
}

/// Writes a dataset as a headered numeric CSV with the label in the last column.
pub fn write_numeric_csv<W: Write>(d: &Dataset, writer: W, label_col: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(d.feature_names.iter().map(String::as_str).chain(std::iter::once(label_col)))?;
    for (row, &label) in d.features.iter().zip(&d.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(d.class_names[label].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
