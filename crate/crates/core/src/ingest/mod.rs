// SPDX-License-Identifier: Apache-2.0

//! Parsing, validation and normalization of the two input tables.

mod activity;
mod cohort;
mod mapping;
mod profile;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::decimal::FixedDecimal;
use crate::error::QueryError;

pub use activity::{parse_activity_table, ActivityTable, RowRejection, ACTIVITY_COLUMNS};
pub use cohort::{
    parse_cohort_table, CohortFlow, CohortRejection, CohortScope, CohortTable, CohortYear,
    COHORT_COLUMNS,
};
pub use mapping::{MappingConfig, ReferenceConfig, SituationMapping};
pub use profile::{build_profiles, ProfileIssue};
pub use snapshot::{build_snapshot, DataSources, IngestReport, Snapshot, SnapshotStore};

/// Category used for every empty or placeholder attribute value.
pub const NOT_INFORMED: &str = "NOT_INFORMED";

/// Maps empty values and the usual placeholders to [`NOT_INFORMED`].
pub fn normalize_category(raw: &str) -> String {
    let value = raw.trim();
    let missing = value.is_empty()
        || value == "-"
        || value.eq_ignore_ascii_case("na")
        || value.eq_ignore_ascii_case("null")
        || value.eq_ignore_ascii_case(NOT_INFORMED);
    if missing {
        NOT_INFORMED.to_owned()
    } else {
        value.to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CourseResult {
    Approved,
    FailedByGrade,
    FailedByFrequency,
    Other,
}

impl CourseResult {
    pub fn is_failure(self) -> bool {
        matches!(self, CourseResult::FailedByGrade | CourseResult::FailedByFrequency)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CourseResult::Approved => "approved",
            CourseResult::FailedByGrade => "failed_by_grade",
            CourseResult::FailedByFrequency => "failed_by_frequency",
            CourseResult::Other => "other",
        }
    }
}

impl FromStr for CourseResult {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "approved" => Ok(CourseResult::Approved),
            "failedbygrade" => Ok(CourseResult::FailedByGrade),
            "failedbyfrequency" => Ok(CourseResult::FailedByFrequency),
            "other" => Ok(CourseResult::Other),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Situation {
    Graduated,
    InProgress,
    Dropout,
    Deceased,
}

impl Situation {
    /// Situations shown on the situation charts; deceased students are
    /// reported as exclusions instead.
    pub const CHARTED: [Situation; 3] =
        [Situation::Graduated, Situation::InProgress, Situation::Dropout];

    pub fn label(self) -> &'static str {
        match self {
            Situation::Graduated => "Graduated",
            Situation::InProgress => "InProgress",
            Situation::Dropout => "Dropout",
            Situation::Deceased => "Deceased",
        }
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Situation {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().replace(['_', '-', ' '], "").to_ascii_lowercase();
        match key.as_str() {
            "graduated" => Ok(Situation::Graduated),
            "inprogress" | "nodropout" => Ok(Situation::InProgress),
            "dropout" => Ok(Situation::Dropout),
            "deceased" => Ok(Situation::Deceased),
            _ => Err(QueryError::invalid(
                "situation",
                format!("unknown situation `{s}` (expected graduated, in_progress or dropout)"),
            )),
        }
    }
}

/// Categorical student attributes carried on every activity row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    IncomeBand,
    BirthCity,
    BirthState,
    Nationality,
    QuotaType,
    HighSchoolType,
    AdmissionForm,
    Housing,
    Employment,
    UniversityAid,
    StudyPlan,
}

impl Attribute {
    pub const ALL: [Attribute; 11] = [
        Attribute::IncomeBand,
        Attribute::BirthCity,
        Attribute::BirthState,
        Attribute::Nationality,
        Attribute::QuotaType,
        Attribute::HighSchoolType,
        Attribute::AdmissionForm,
        Attribute::Housing,
        Attribute::Employment,
        Attribute::UniversityAid,
        Attribute::StudyPlan,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Attribute::IncomeBand => "income_band",
            Attribute::BirthCity => "birth_city",
            Attribute::BirthState => "birth_state",
            Attribute::Nationality => "nationality",
            Attribute::QuotaType => "quota_type",
            Attribute::HighSchoolType => "high_school_type",
            Attribute::AdmissionForm => "admission_form",
            Attribute::Housing => "housing",
            Attribute::Employment => "employment",
            Attribute::UniversityAid => "university_aid",
            Attribute::StudyPlan => "study_plan",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Attribute {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Attribute::ALL
            .into_iter()
            .find(|a| a.column() == key)
            .ok_or_else(|| QueryError::invalid("index", format!("unknown attribute `{s}`")))
    }
}

/// Values of every [`Attribute`], already normalized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StudentAttributes([String; 11]);

impl StudentAttributes {
    pub fn get(&self, attribute: Attribute) -> &str {
        &self.0[attribute.index()]
    }

    pub fn set(&mut self, attribute: Attribute, value: impl Into<String>) {
        self.0[attribute.index()] = value.into();
    }

    pub fn iter(&self) -> impl Iterator<Item = (Attribute, &str)> {
        Attribute::ALL.into_iter().map(move |a| (a, self.get(a)))
    }
}

impl Serialize for StudentAttributes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(Attribute::ALL.len()))?;
        for (attribute, value) in self.iter() {
            map.serialize_entry(attribute.column(), value)?;
        }
        map.end()
    }
}

/// One discipline taken by one student in one term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct EnrollmentRow {
    pub student_id: String,
    pub course_id: String,
    pub discipline_id: String,
    pub year: i32,
    pub term: u8,
    pub grade: FixedDecimal,
    pub credits: u32,
    pub attendance_pct: FixedDecimal,
    pub result: CourseResult,
    pub entry_year: i32,
    pub situation_raw: String,
    pub attributes: StudentAttributes,
}

impl EnrollmentRow {
    /// Identity of the row: one discipline per student, course and term.
    pub fn key(&self) -> (&str, &str, &str, i32, u8) {
        (&self.student_id, &self.course_id, &self.discipline_id, self.year, self.term)
    }
}

/// A student within one course, reconciled from all of their rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StudentProfile {
    pub student_id: String,
    pub course_id: String,
    pub entry_year: i32,
    pub situation: Situation,
    pub attributes: StudentAttributes,
}
