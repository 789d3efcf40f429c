// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

use csv::{ErrorKind, ReaderBuilder, StringRecord, Trim};
use serde::Serialize;

use super::mapping::MappingConfig;
use super::{normalize_category, Attribute, CourseResult, EnrollmentRow, StudentAttributes, NOT_INFORMED};
use crate::decimal::{DecimalParseError, FixedDecimal};
use crate::error::IngestError;

/// Canonical activity header, in file order.
pub const ACTIVITY_COLUMNS: [&str; 22] = [
    "student_id",
    "course_id",
    "discipline_id",
    "year",
    "term",
    "grade",
    "credits",
    "attendance_pct",
    "result",
    "entry_year",
    "situation",
    "income_band",
    "birth_city",
    "birth_state",
    "nationality",
    "quota_type",
    "high_school_type",
    "admission_form",
    "housing",
    "employment",
    "university_aid",
    "study_plan",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowRejection {
    /// 1-based line number in the source, header included.
    pub line: u64,
    pub reason: String,
}

/// Rows kept from an activity table, with the ingest accounting.
#[derive(Debug, Clone, Default)]
pub struct ActivityTable {
    pub rows: Vec<EnrollmentRow>,
    /// Source line of each kept row, aligned with `rows`.
    pub lines: Vec<u64>,
    pub rows_read: u64,
    pub rows_deduplicated: u64,
    pub rejections: Vec<RowRejection>,
}

impl ActivityTable {
    pub fn rows_rejected(&self) -> u64 {
        self.rejections.len() as u64
    }

    /// NOT_INFORMED occurrences per attribute over the kept rows.
    pub fn missing_field_counts(&self) -> BTreeMap<String, u64> {
        let mut counts: BTreeMap<String, u64> =
            Attribute::ALL.iter().map(|a| (a.column().to_owned(), 0)).collect();
        counts.insert("situation".to_owned(), 0);
        for row in &self.rows {
            for (attribute, value) in row.attributes.iter() {
                if value == NOT_INFORMED {
                    *counts.get_mut(attribute.column()).unwrap() += 1;
                }
            }
            if row.situation_raw == NOT_INFORMED {
                *counts.get_mut("situation").unwrap() += 1;
            }
        }
        counts
    }
}

struct ColumnIndex([usize; 22]);

impl ColumnIndex {
    fn resolve(headers: &StringRecord, mapping: &MappingConfig) -> Result<Self, IngestError> {
        let mut found: HashMap<&str, usize> = HashMap::new();
        for (position, raw) in headers.iter().enumerate() {
            let header = raw.trim_start_matches('\u{feff}').trim();
            found.entry(mapping.canonical(header)).or_insert(position);
        }
        let mut index = [0usize; 22];
        for (slot, column) in index.iter_mut().zip(ACTIVITY_COLUMNS) {
            *slot = *found.get(column).ok_or_else(|| IngestError::MissingColumn {
                table: "activity",
                column: column.to_owned(),
            })?;
        }
        Ok(Self(index))
    }

    fn field<'r>(&self, record: &'r StringRecord, column: usize) -> &'r str {
        record.get(self.0[column]).unwrap_or("")
    }
}

/// Parses a comma-delimited activity table.
///
/// Malformed lines are rejected with a reason, exact duplicates of an
/// earlier kept row are collapsed, and a row that repeats the identity of an
/// earlier row with different values is rejected as a conflict.
pub fn parse_activity_table<R: Read>(
    source: R,
    mapping: &MappingConfig,
) -> Result<ActivityTable, IngestError> {
    let mut reader = ReaderBuilder::new()
        .flexible(true)
        .trim(Trim::All)
        .from_reader(source);
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(IngestError::MissingHeader { table: "activity" }),
        Err(source) => return Err(stream_error(source)),
    };
    let columns = ColumnIndex::resolve(&headers, mapping)?;
    let width = headers.len();

    let mut table = ActivityTable::default();
    let mut seen: HashSet<EnrollmentRow> = HashSet::new();
    let mut keys: HashMap<(String, String, String, i32, u8), u64> = HashMap::new();
    let mut record = StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(err) => match err.kind() {
                ErrorKind::Utf8 { pos, .. } => {
                    table.rows_read += 1;
                    let line = pos.as_ref().map_or(line, |p| p.line());
                    table.rejections.push(RowRejection { line, reason: "invalid UTF-8".to_owned() });
                    continue;
                }
                _ => return Err(stream_error(err)),
            },
        }
        let line = record.position().map_or(line, |p| p.line());
        table.rows_read += 1;
        if record.len() != width {
            table.rejections.push(RowRejection {
                line,
                reason: format!("expected {width} fields, found {}", record.len()),
            });
            continue;
        }
        let row = match parse_row(&record, &columns) {
            Ok(row) => row,
            Err(reason) => {
                table.rejections.push(RowRejection { line, reason });
                continue;
            }
        };
        if seen.contains(&row) {
            table.rows_deduplicated += 1;
            continue;
        }
        let key = (
            row.student_id.clone(),
            row.course_id.clone(),
            row.discipline_id.clone(),
            row.year,
            row.term,
        );
        if let Some(first) = keys.get(&key) {
            table.rejections.push(RowRejection {
                line,
                reason: format!(
                    "conflicts with line {first}: same student, course, discipline, year and term"
                ),
            });
            continue;
        }
        keys.insert(key, line);
        seen.insert(row.clone());
        table.rows.push(row);
        table.lines.push(line);
    }
    Ok(table)
}

fn stream_error(source: csv::Error) -> IngestError {
    IngestError::Stream { table: "activity", source }
}

fn required_id(value: &str, name: &str) -> Result<String, String> {
    if value.is_empty() {
        Err(format!("{name} is empty"))
    } else {
        Ok(value.to_owned())
    }
}

fn parse_integer(value: &str, name: &str) -> Result<i64, String> {
    value.parse::<i64>().map_err(|_| format!("{name} is not an integer"))
}

fn parse_bounded(value: &str, name: &str, max: u64) -> Result<FixedDecimal, String> {
    let out_of_range = || format!("{name} out of range [0,{max}]");
    match FixedDecimal::parse(value) {
        Ok(d) if d <= FixedDecimal::from_int(max) => Ok(d),
        Ok(_) | Err(DecimalParseError::Negative) => Err(out_of_range()),
        Err(DecimalParseError::TooPrecise) => {
            // Still report range problems first: "11.00001" is out of range.
            match value.parse::<f64>() {
                Ok(v) if !(0.0..=max as f64).contains(&v) => Err(out_of_range()),
                _ => Err(format!(
                    "{name} has more than {} decimal places",
                    FixedDecimal::FRACTION_DIGITS
                )),
            }
        }
        Err(DecimalParseError::NotANumber) => Err(format!("{name} is not a number")),
    }
}

fn parse_row(record: &StringRecord, columns: &ColumnIndex) -> Result<EnrollmentRow, String> {
    let field = |c: usize| columns.field(record, c);
    let student_id = required_id(field(0), "student_id")?;
    let course_id = required_id(field(1), "course_id")?;
    let discipline_id = required_id(field(2), "discipline_id")?;
    let year = i32::try_from(parse_integer(field(3), "year")?).map_err(|_| "year out of range".to_owned())?;
    let term = match field(4) {
        "1" => 1,
        "2" => 2,
        _ => return Err("term must be 1 or 2".to_owned()),
    };
    let grade = parse_bounded(field(5), "grade", 10)?;
    let credits = match parse_integer(field(6), "credits") {
        Ok(c) if c >= 1 => u32::try_from(c).map_err(|_| "credits out of range".to_owned())?,
        Ok(_) => return Err("credits must be a positive integer".to_owned()),
        Err(e) => return Err(e),
    };
    let attendance_pct = parse_bounded(field(7), "attendance_pct", 100)?;
    let result: CourseResult = field(8)
        .parse()
        .map_err(|_| format!("unknown result `{}`", field(8)))?;
    let entry_year = i32::try_from(parse_integer(field(9), "entry_year")?)
        .map_err(|_| "entry_year out of range".to_owned())?;
    let situation_raw = normalize_category(field(10));
    let mut attributes = StudentAttributes::default();
    // Attribute columns follow `situation` in `Attribute::ALL` order.
    for (offset, attribute) in Attribute::ALL.into_iter().enumerate() {
        debug_assert_eq!(ACTIVITY_COLUMNS[11 + offset], attribute.column());
        attributes.set(attribute, normalize_category(field(11 + offset)));
    }
    Ok(EnrollmentRow {
        student_id,
        course_id,
        discipline_id,
        year,
        term,
        grade,
        credits,
        attendance_pct,
        result,
        entry_year,
        situation_raw,
        attributes,
    })
}
