// SPDX-License-Identifier: Apache-2.0

//! Filtered aggregations over a [`Snapshot`], one per dashboard chart.
//!
//! Every operation is a pure read of an immutable snapshot. Orderings are
//! fully specified so that results are reproducible byte for byte.

mod disciplines;
mod dropouts;
mod meta;
mod situations;
mod tda;

use serde::Serialize;

use crate::error::QueryError;
use crate::ingest::{normalize_category, Attribute, Snapshot, StudentProfile};
use crate::percent::Percent;

pub use disciplines::{discipline_failure_ranking, discipline_stats, DisciplineOrder, DisciplineRanking, DisciplineStats, MIN_DISCIPLINE_ENROLLMENT, DISCIPLINE_LIMIT_RANGE};
pub use dropouts::{
    attendance_bands, category_breakdown, cr_bands, failure_histogram, CategoryGroup, CrMode,
    FailureBin, OTHERS_LABEL, TOP_CATEGORIES,
};
pub use meta::{dataset_meta, DatasetMeta};
pub use situations::{course_situation_ranking, situation_counts, CourseCount, RankOrder, DEFAULT_RANKING_LIMIT};
pub use tda::{tda_histogram, ReferenceLines, TdaCourseBar, TdaHistogram, TdaSeriesView};

pub use crate::metrics::FailureKind;

/// Conjunction of equality constraints on student attributes; `None` means
/// unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterSet {
    pub course_id: Option<String>,
    pub entry_year: Option<i32>,
    pub income_band: Option<String>,
    pub birth_city: Option<String>,
    pub quota_type: Option<String>,
    pub high_school_type: Option<String>,
}

impl FilterSet {
    /// Filter keys accepted by [`FilterSet::set`].
    pub const KEYS: [&'static str; 6] =
        ["course", "entry_year", "income_band", "birth_city", "quota_type", "high_school_type"];

    pub fn course(course_id: impl Into<String>) -> Self {
        Self { course_id: Some(course_id.into()), ..Self::default() }
    }

    /// Sets one constraint from its textual form. `course_id` is accepted
    /// as an alias of `course`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), QueryError> {
        let category = || Some(normalize_category(value));
        match key.trim().to_ascii_lowercase().as_str() {
            "course" | "course_id" => self.course_id = Some(value.trim().to_owned()),
            "entry_year" => {
                let year = value.trim().parse().map_err(|_| {
                    QueryError::invalid("entry_year", format!("`{value}` is not an integer"))
                })?;
                self.entry_year = Some(year);
            }
            "income_band" => self.income_band = category(),
            "birth_city" => self.birth_city = category(),
            "quota_type" => self.quota_type = category(),
            "high_school_type" => self.high_school_type = category(),
            _ => {
                return Err(QueryError::invalid(
                    "filter",
                    format!("unknown filter `{key}` (expected one of {})", Self::KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, QueryError> {
        let mut filter = Self::default();
        for (key, value) in pairs {
            filter.set(key, value)?;
        }
        Ok(filter)
    }

    fn attribute_constraints(&self) -> [(Attribute, Option<&str>); 4] {
        [
            (Attribute::IncomeBand, self.income_band.as_deref()),
            (Attribute::BirthCity, self.birth_city.as_deref()),
            (Attribute::QuotaType, self.quota_type.as_deref()),
            (Attribute::HighSchoolType, self.high_school_type.as_deref()),
        ]
    }

    pub fn matches(&self, student: &StudentProfile) -> bool {
        self.course_id.as_deref().is_none_or(|c| c == student.course_id)
            && self.entry_year.is_none_or(|y| y == student.entry_year)
            && self
                .attribute_constraints()
                .iter()
                .all(|(a, v)| v.is_none_or(|v| v == student.attributes.get(*a)))
    }

    /// True when some constraint names a value no student has.
    pub(crate) fn names_unknown_value(&self, students: &[StudentProfile]) -> bool {
        let known = |pred: &dyn Fn(&StudentProfile) -> bool| students.iter().any(pred);
        self.course_id.as_deref().is_some_and(|c| !known(&|s| s.course_id == c))
            || self.entry_year.is_some_and(|y| !known(&|s| s.entry_year == y))
            || self.attribute_constraints().iter().any(|(a, v)| {
                v.is_some_and(|v| !known(&|s| s.attributes.get(*a) == v))
            })
    }
}

/// Indices into [`Snapshot::students`] of the students matching `filter`.
pub fn apply_filter(snapshot: &Snapshot, filter: &FilterSet) -> Vec<usize> {
    snapshot
        .students()
        .iter()
        .enumerate()
        .filter(|(_, s)| filter.matches(s))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistributionEntry {
    pub label: String,
    pub count: u64,
    pub percent: Option<Percent>,
}

/// Labeled counts with percentages over the counted entries.
///
/// `total` is the size of the scope, including the `excluded_undefined`
/// members that fell into no entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Distribution {
    pub entries: Vec<DistributionEntry>,
    pub total: u64,
    pub excluded_undefined: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub const NO_MATCHING_CATEGORY: &str = "no matching category";

impl Distribution {
    /// Keeps the given entry order.
    pub fn from_counts(counts: Vec<(String, u64)>, excluded_undefined: u64) -> Self {
        let counted: u64 = counts.iter().map(|(_, c)| c).sum();
        let entries = counts
            .into_iter()
            .map(|(label, count)| DistributionEntry {
                percent: (counted > 0).then(|| Percent::of(count, counted)),
                label,
                count,
            })
            .collect();
        Self { entries, total: counted + excluded_undefined, excluded_undefined, note: None }
    }

    /// Orders entries by descending count, then label.
    pub fn ranked(mut counts: Vec<(String, u64)>, excluded_undefined: u64) -> Self {
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_counts(counts, excluded_undefined)
    }

    pub fn count(&self, label: &str) -> Option<u64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.count)
    }

    pub fn counted(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    fn without_percents(mut self) -> Self {
        for entry in &mut self.entries {
            entry.percent = None;
        }
        self
    }
}

pub(crate) fn parse_keyword<T: Copy>(
    name: &'static str,
    value: &str,
    options: &[(&str, T)],
) -> Result<T, QueryError> {
    let key = value.trim().replace(['-', ' '], "_").to_ascii_lowercase();
    options.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| {
        let expected: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
        QueryError::invalid(name, format!("unknown value `{value}` (expected {})", expected.join(", ")))
    })
}

macro_rules! keyword_enum {
    ($ty:ty, $name:literal, [$(($text:literal, $variant:expr)),+ $(,)?]) => {
        impl ::std::str::FromStr for $ty {
            type Err = $crate::error::QueryError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $crate::query::parse_keyword($name, s, &[$(($text, $variant)),+])
            }
        }
    };
}
pub(crate) use keyword_enum;
