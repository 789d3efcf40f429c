// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use num_rational::Ratio;
use serde::Serialize;

use super::{keyword_enum, Distribution};
use crate::error::QueryError;
use crate::ingest::{Attribute, Situation, Snapshot};
use crate::metrics::{FailureKind, StudentAcademics};

pub const TOP_CATEGORIES: usize = 5;
pub const OTHERS_LABEL: &str = "Others";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrMode {
    Absolute,
    Percent,
}

keyword_enum!(CrMode, "mode", [("absolute", CrMode::Absolute), ("percent", CrMode::Percent)]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CategoryGroup {
    Socioeconomic,
    Geographic,
    Academic,
}

keyword_enum!(
    CategoryGroup,
    "group",
    [
        ("socioeconomic", CategoryGroup::Socioeconomic),
        ("geographic", CategoryGroup::Geographic),
        ("academic", CategoryGroup::Academic),
    ]
);

impl CategoryGroup {
    pub fn attributes(self) -> &'static [Attribute] {
        match self {
            CategoryGroup::Socioeconomic => &[
                Attribute::IncomeBand,
                Attribute::UniversityAid,
                Attribute::Housing,
                Attribute::Employment,
            ],
            CategoryGroup::Geographic => {
                &[Attribute::BirthCity, Attribute::BirthState, Attribute::Nationality]
            }
            CategoryGroup::Academic => &[
                Attribute::QuotaType,
                Attribute::StudyPlan,
                Attribute::HighSchoolType,
                Attribute::AdmissionForm,
            ],
        }
    }

    /// Accepts an attribute column name or a zero-based position in
    /// [`CategoryGroup::attributes`].
    pub fn resolve(self, index: &str) -> Result<Attribute, QueryError> {
        let attributes = self.attributes();
        let found = match index.trim().parse::<usize>() {
            Ok(position) => attributes.get(position).copied(),
            Err(_) => index.parse::<Attribute>().ok().filter(|a| attributes.contains(a)),
        };
        found.ok_or_else(|| {
            let names: Vec<&str> = attributes.iter().map(|a| a.column()).collect();
            QueryError::invalid(
                "index",
                format!("`{index}` is not in this group (expected 0..{} or one of {})", attributes.len() - 1, names.join(", ")),
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FailureBin {
    pub failures: u64,
    pub students: u64,
}

/// Academics of dropout students, optionally restricted to one course.
fn dropouts<'s>(
    snapshot: &'s Snapshot,
    course: Option<&'s str>,
) -> impl Iterator<Item = (usize, &'s StudentAcademics)> + 's {
    snapshot
        .students()
        .iter()
        .zip(snapshot.academics())
        .enumerate()
        .filter(move |(_, (s, _))| {
            s.situation == Situation::Dropout && course.is_none_or(|c| c == s.course_id)
        })
        .map(|(i, (_, a))| (i, a))
}

/// Dropout students by mean attendance: above 90, 75 to 90 inclusive, below 75.
pub fn attendance_bands(snapshot: &Snapshot, course: Option<&str>) -> Distribution {
    let (ninety, seventy_five) = (Ratio::from_integer(90), Ratio::from_integer(75));
    let mut counts = [0u64; 3];
    let mut undefined = 0u64;
    for (_, academics) in dropouts(snapshot, course) {
        match academics.mean_attendance_pct {
            Some(mean) if mean > ninety => counts[0] += 1,
            Some(mean) if mean >= seventy_five => counts[1] += 1,
            Some(_) => counts[2] += 1,
            None => undefined += 1,
        }
    }
    Distribution::from_counts(
        vec![
            ("Above90".to_owned(), counts[0]),
            ("From75To90".to_owned(), counts[1]),
            ("Below75".to_owned(), counts[2]),
        ],
        undefined,
    )
}

/// Dropout students by CR: below 5, at least 5 and below 7, at least 7.
/// Percentages are only filled in `Percent` mode.
pub fn cr_bands(snapshot: &Snapshot, course: Option<&str>, mode: CrMode) -> Distribution {
    let (five, seven) = (Ratio::from_integer(5), Ratio::from_integer(7));
    let mut counts = [0u64; 3];
    let mut undefined = 0u64;
    for (_, academics) in dropouts(snapshot, course) {
        match academics.cr {
            Some(cr) if cr < five => counts[0] += 1,
            Some(cr) if cr < seven => counts[1] += 1,
            Some(_) => counts[2] += 1,
            None => undefined += 1,
        }
    }
    let distribution = Distribution::from_counts(
        vec![
            ("Below5".to_owned(), counts[0]),
            ("From5To7".to_owned(), counts[1]),
            ("AtLeast7".to_owned(), counts[2]),
        ],
        undefined,
    );
    match mode {
        CrMode::Percent => distribution,
        CrMode::Absolute => distribution.without_percents(),
    }
}

/// Dropout students per number of failures of `kind`, with contiguous bins
/// from zero to the largest observed count.
pub fn failure_histogram(snapshot: &Snapshot, course: Option<&str>, kind: FailureKind) -> Vec<FailureBin> {
    let mut bins: Vec<u64> = Vec::new();
    for (_, academics) in dropouts(snapshot, course) {
        let k = academics.failures(kind) as usize;
        if bins.len() <= k {
            bins.resize(k + 1, 0);
        }
        bins[k] += 1;
    }
    bins.into_iter()
        .enumerate()
        .map(|(failures, students)| FailureBin { failures: failures as u64, students })
        .collect()
}

/// Dropout students per value of one attribute: the five largest
/// categories, then everything else summed into `Others`. NOT_INFORMED is
/// an ordinary category.
pub fn category_breakdown(
    snapshot: &Snapshot,
    group: CategoryGroup,
    index: Attribute,
    course: Option<&str>,
) -> Result<Distribution, QueryError> {
    if !group.attributes().contains(&index) {
        let allowed: Vec<&str> = group.attributes().iter().map(|a| a.column()).collect();
        return Err(QueryError::invalid(
            "index",
            format!("`{index}` is not in the {group:?} group (expected {})", allowed.join(", ")),
        ));
    }
    let students = snapshot.students();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for (i, _) in dropouts(snapshot, course) {
        *counts.entry(students[i].attributes.get(index)).or_default() += 1;
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if ranked.len() > TOP_CATEGORIES {
        let others: u64 = ranked.drain(TOP_CATEGORIES..).map(|(_, c)| c).sum();
        ranked.push((OTHERS_LABEL.to_owned(), others));
    }
    Ok(Distribution::from_counts(ranked, 0))
}
