// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Trim};
use serde::Serialize;

use super::mapping::MappingConfig;
use crate::error::IngestError;

/// Canonical cohort-flow header. `entrants` is repeated on every
/// `year_index` row of a cohort; `year_index` starts at 1.
pub const COHORT_COLUMNS: [&str; 8] = [
    "course_name",
    "scope",
    "entry_year",
    "year_index",
    "withdrawals",
    "transfers",
    "deaths",
    "entrants",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CohortScope {
    InstitutionCourse,
    NationalCourseAverage,
}

impl FromStr for CohortScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().replace(['_', '-', ' '], "").to_ascii_lowercase();
        match key.as_str() {
            "institution" | "institutioncourse" => Ok(CohortScope::InstitutionCourse),
            "national" | "nationalcourseaverage" => Ok(CohortScope::NationalCourseAverage),
            _ => Err(format!("unknown scope `{s}`")),
        }
    }
}

impl fmt::Display for CohortScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CohortScope::InstitutionCourse => "institution",
            CohortScope::NationalCourseAverage => "national",
        })
    }
}

/// Exits of one progression year.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CohortYear {
    pub withdrawals: u64,
    pub transfers: u64,
    pub deaths: u64,
}

impl CohortYear {
    pub fn exits(&self) -> u64 {
        self.withdrawals + self.transfers + self.deaths
    }
}

/// A class entering a course in one year, followed year by year.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CohortFlow {
    pub course_name: String,
    pub scope: CohortScope,
    pub entry_year: i32,
    pub entrants: u64,
    /// Progression years; index 0 is year 1.
    pub years: Vec<CohortYear>,
}

impl CohortFlow {
    /// Builds a flow, checking that cumulative exits never exceed entrants.
    pub fn new(
        course_name: impl Into<String>,
        scope: CohortScope,
        entry_year: i32,
        entrants: u64,
        years: Vec<CohortYear>,
    ) -> Result<Self, String> {
        let mut exits = 0u64;
        for (i, year) in years.iter().enumerate() {
            exits = exits.saturating_add(year.exits());
            if exits > entrants {
                return Err(format!("exits exceed entrants at year {}", i + 1));
            }
        }
        Ok(Self { course_name: course_name.into(), scope, entry_year, entrants, years })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohortRejection {
    /// `course_name/scope/entry_year`, or the raw line when it could not be grouped.
    pub record: String,
    pub lines: Vec<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct CohortTable {
    pub cohorts: Vec<CohortFlow>,
    pub rejections: Vec<CohortRejection>,
    pub rows_read: u64,
}

struct CohortLine {
    year_index: i64,
    withdrawals: i64,
    transfers: i64,
    deaths: i64,
    entrants: i64,
}

type CohortKey = (String, CohortScope, i32);
/// Source line number and the parsed record or its rejection reason.
type ParsedLine = (u64, Result<CohortLine, String>);

/// Parses the cohort-flow table into one [`CohortFlow`] per course, scope
/// and entry year. A record with any invalid line is rejected as a whole.
pub fn parse_cohort_table<R: Read>(
    source: R,
    mapping: &MappingConfig,
) -> Result<CohortTable, IngestError> {
    let mut reader = ReaderBuilder::new()
        .flexible(true)
        .trim(Trim::All)
        .from_reader(source);
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(IngestError::MissingHeader { table: "cohort" }),
        Err(source) => return Err(IngestError::Stream { table: "cohort", source }),
    };
    let mut found: HashMap<&str, usize> = HashMap::new();
    for (position, raw) in headers.iter().enumerate() {
        let header = raw.trim_start_matches('\u{feff}').trim();
        found.entry(mapping.canonical(header)).or_insert(position);
    }
    let mut index = [0usize; 8];
    for (slot, column) in index.iter_mut().zip(COHORT_COLUMNS) {
        *slot = *found.get(column).ok_or_else(|| IngestError::MissingColumn {
            table: "cohort",
            column: column.to_owned(),
        })?;
    }

    let mut table = CohortTable::default();
    let mut groups: BTreeMap<CohortKey, Vec<ParsedLine>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|source| IngestError::Stream { table: "cohort", source })?;
        table.rows_read += 1;
        let line = record.position().map_or(0, |p| p.line());
        let key = match group_key(&record, &index) {
            Ok(key) => key,
            Err(reason) => {
                table.rejections.push(CohortRejection {
                    record: record.iter().collect::<Vec<_>>().join(","),
                    lines: vec![line],
                    reason,
                });
                continue;
            }
        };
        let field = |c: usize| record.get(index[c]).unwrap_or("");
        let parsed = (|| {
            Ok(CohortLine {
                year_index: count(field(3), "year_index")?,
                withdrawals: count(field(4), "withdrawals")?,
                transfers: count(field(5), "transfers")?,
                deaths: count(field(6), "deaths")?,
                entrants: count(field(7), "entrants")?,
            })
        })();
        groups.entry(key).or_default().push((line, parsed));
    }

    for ((course_name, scope, entry_year), group) in groups {
        let lines: Vec<u64> = group.iter().map(|(line, _)| *line).collect();
        let parsed: Result<Vec<CohortLine>, String> = group
            .into_iter()
            .map(|(line, parsed)| parsed.map_err(|reason| format!("line {line}: {reason}")))
            .collect();
        let record = format!("{course_name}/{scope}/{entry_year}");
        match parsed.and_then(|rows| assemble(course_name, scope, entry_year, rows)) {
            Ok(flow) => table.cohorts.push(flow),
            Err(reason) => table.rejections.push(CohortRejection { record, lines, reason }),
        }
    }
    Ok(table)
}

fn group_key(record: &StringRecord, index: &[usize; 8]) -> Result<CohortKey, String> {
    if index.iter().any(|&i| i >= record.len()) {
        return Err(format!("expected at least {} fields, found {}", index.len(), record.len()));
    }
    let field = |c: usize| record.get(index[c]).unwrap_or("");
    let course = field(0);
    if course.is_empty() {
        return Err("course_name is empty".to_owned());
    }
    let scope = field(1).parse::<CohortScope>()?;
    let entry_year = field(2)
        .parse::<i32>()
        .map_err(|_| "entry_year is not an integer".to_owned())?;
    Ok((course.to_owned(), scope, entry_year))
}

fn count(value: &str, name: &str) -> Result<i64, String> {
    let parsed = value.parse::<i64>().map_err(|_| format!("{name} is not an integer"))?;
    if parsed < 0 {
        return Err(format!("negative count in {name}"));
    }
    Ok(parsed)
}

fn assemble(
    course_name: String,
    scope: CohortScope,
    entry_year: i32,
    mut rows: Vec<CohortLine>,
) -> Result<CohortFlow, String> {
    rows.sort_by_key(|r| r.year_index);
    let entrants = rows[0].entrants;
    if rows.iter().any(|r| r.entrants != entrants) {
        return Err("entrants differs between year rows".to_owned());
    }
    if rows.iter().zip(1..).any(|(r, expected)| r.year_index != expected) {
        return Err(format!("year_index must run 1..{} without gaps or repeats", rows.len()));
    }
    let years = rows
        .iter()
        .map(|r| CohortYear {
            withdrawals: r.withdrawals as u64,
            transfers: r.transfers as u64,
            deaths: r.deaths as u64,
        })
        .collect();
    CohortFlow::new(course_name, scope, entry_year, entrants as u64, years)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> CohortTable {
        let text = format!("{}\n{body}", COHORT_COLUMNS.join(","));
        parse_cohort_table(text.as_bytes(), &MappingConfig::default()).unwrap()
    }

    #[test]
    fn zero_flow_cohort_is_valid() {
        let body: String = (1..=6).map(|i| format!("Math,institution,2010,{i},0,0,0,100\n")).collect();
        let table = parse(&body);
        assert!(table.rejections.is_empty());
        assert_eq!(table.cohorts.len(), 1);
        assert_eq!(table.cohorts[0].years.len(), 6);
        assert_eq!(table.cohorts[0].entrants, 100);
        assert_eq!(table.rows_read, 6);
    }

    #[test]
    fn exits_beyond_entrants_reject_the_record() {
        let table = parse("Math,institution,2010,1,11,0,0,10\n");
        assert!(table.cohorts.is_empty());
        assert_eq!(table.rejections[0].reason, "exits exceed entrants at year 1");
        assert_eq!(table.rejections[0].record, "Math/institution/2010");
    }

    #[test]
    fn prefix_check_is_cumulative() {
        let table = parse("Math,national,2010,1,5,0,0,10\nMath,national,2010,2,3,2,1,10\n");
        assert_eq!(table.rejections[0].reason, "exits exceed entrants at year 2");
    }

    #[test]
    fn negative_counts_reject_the_whole_record() {
        let table = parse("Math,institution,2010,1,1,0,0,10\nMath,institution,2010,2,-1,0,0,10\nBio,institution,2010,1,0,0,0,5\n");
        assert_eq!(table.cohorts.len(), 1);
        assert_eq!(table.cohorts[0].course_name, "Bio");
        assert_eq!(table.rejections.len(), 1);
        assert_eq!(table.rejections[0].lines, vec![2, 3]);
        assert!(table.rejections[0].reason.contains("negative count in withdrawals"));
    }

    #[test]
    fn scopes_and_year_order() {
        let table = parse("Math,national,2010,2,1,0,0,10\nMath,national,2010,1,2,0,0,10\nMath,institution,2010,1,0,0,0,10\n");
        assert_eq!(table.cohorts.len(), 2);
        let national = table.cohorts.iter().find(|c| c.scope == CohortScope::NationalCourseAverage).unwrap();
        assert_eq!(national.years[0].withdrawals, 2);
        assert_eq!(national.years[1].withdrawals, 1);
    }

    #[test]
    fn gaps_and_inconsistent_entrants_are_rejected() {
        let gap = parse("Math,institution,2010,1,0,0,0,10\nMath,institution,2010,3,0,0,0,10\n");
        assert!(gap.rejections[0].reason.contains("without gaps"));
        let entrants = parse("Math,institution,2010,1,0,0,0,10\nMath,institution,2010,2,0,0,0,11\n");
        assert!(entrants.rejections[0].reason.contains("entrants differs"));
        let scope = parse("Math,regional,2010,1,0,0,0,10\n");
        assert_eq!(scope.rejections[0].reason, "unknown scope `regional`");
    }

    #[test]
    fn missing_column_is_fatal() {
        let err = parse_cohort_table(&b"course_name,scope\n"[..], &MappingConfig::default()).unwrap_err();
        assert!(err.to_string().contains("`entry_year`"));
    }
}
