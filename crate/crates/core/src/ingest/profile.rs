// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::Serialize;

use super::mapping::SituationMapping;
use super::{Attribute, EnrollmentRow, StudentAttributes, StudentProfile};

/// Problems found while reconciling a student's rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileIssue {
    /// Rows disagreed on a per-student field; the most frequent value won
    /// (ties go to the lexicographically smallest).
    AttributeConflict {
        student_id: String,
        course_id: String,
        field: String,
        chosen: String,
        /// Every observed value with its row count, sorted by value.
        observed: Vec<(String, usize)>,
    },
    /// The reconciled situation value is not in any mapping class; the
    /// student is not built.
    UnmappedSituation {
        student_id: String,
        course_id: String,
        raw: String,
    },
}

impl ProfileIssue {
    pub fn is_rejection(&self) -> bool {
        matches!(self, ProfileIssue::UnmappedSituation { .. })
    }
}

/// Most frequent value, ties broken by the smallest value.
fn majority<T: Ord + Hash + Clone>(values: impl IntoIterator<Item = T>) -> (T, Vec<(T, usize)>) {
    let mut counts: HashMap<T, usize> = HashMap::new();
    for value in values {
        *counts.entry(value).or_default() += 1;
    }
    let mut observed: Vec<(T, usize)> = counts.into_iter().collect();
    observed.sort();
    let chosen = observed
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .map(|(v, _)| v.clone())
        .expect("at least one value");
    (chosen, observed)
}

/// One profile per (student_id, course_id), sorted by course then student.
pub fn build_profiles(
    rows: &[EnrollmentRow],
    situations: &SituationMapping,
) -> (Vec<StudentProfile>, Vec<ProfileIssue>) {
    let mut by_student: BTreeMap<(&str, &str), Vec<&EnrollmentRow>> = BTreeMap::new();
    for row in rows {
        by_student.entry((&row.course_id, &row.student_id)).or_default().push(row);
    }

    let mut profiles = Vec::with_capacity(by_student.len());
    let mut issues = Vec::new();
    for ((course_id, student_id), rows) in by_student {
        let mut conflict = |field: &str, chosen: String, observed: Vec<(String, usize)>| {
            if observed.len() > 1 {
                issues.push(ProfileIssue::AttributeConflict {
                    student_id: student_id.to_owned(),
                    course_id: course_id.to_owned(),
                    field: field.to_owned(),
                    chosen,
                    observed,
                });
            }
        };

        let (entry_year, observed) = majority(rows.iter().map(|r| r.entry_year));
        conflict(
            "entry_year",
            entry_year.to_string(),
            observed.into_iter().map(|(v, n)| (v.to_string(), n)).collect(),
        );
        let (situation_raw, observed) = majority(rows.iter().map(|r| r.situation_raw.as_str()));
        conflict("situation", situation_raw.to_owned(), owned(observed));

        let mut attributes = StudentAttributes::default();
        for attribute in Attribute::ALL {
            let (value, observed) = majority(rows.iter().map(|r| r.attributes.get(attribute)));
            attributes.set(attribute, value);
            conflict(attribute.column(), value.to_owned(), owned(observed));
        }

        match situations.classify(situation_raw) {
            Some(situation) => profiles.push(StudentProfile {
                student_id: student_id.to_owned(),
                course_id: course_id.to_owned(),
                entry_year,
                situation,
                attributes,
            }),
            None => issues.push(ProfileIssue::UnmappedSituation {
                student_id: student_id.to_owned(),
                course_id: course_id.to_owned(),
                raw: situation_raw.to_owned(),
            }),
        }
    }
    (profiles, issues)
}

fn owned(observed: Vec<(&str, usize)>) -> Vec<(String, usize)> {
    observed.into_iter().map(|(v, n)| (v.to_owned(), n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::FixedDecimal;
    use crate::ingest::{CourseResult, Situation};

    fn row(student: &str, discipline: &str, city: &str, situation: &str) -> EnrollmentRow {
        let mut attributes = StudentAttributes::default();
        for attribute in Attribute::ALL {
            attributes.set(attribute, "x");
        }
        attributes.set(Attribute::BirthCity, city);
        EnrollmentRow {
            student_id: student.into(),
            course_id: "C1".into(),
            discipline_id: discipline.into(),
            year: 2012,
            term: 1,
            grade: FixedDecimal::from_int(7),
            credits: 4,
            attendance_pct: FixedDecimal::from_int(80),
            result: CourseResult::Approved,
            entry_year: 2011,
            situation_raw: situation.into(),
            attributes,
        }
    }

    #[test]
    fn identical_rows_give_one_clean_profile() {
        let rows: Vec<_> = (1..=4).map(|d| row("s1", &format!("D{d}"), "A", "dropout")).collect();
        let (profiles, issues) = build_profiles(&rows, &SituationMapping::default());
        assert_eq!(profiles.len(), 1);
        assert!(issues.is_empty());
        assert_eq!(profiles[0].situation, Situation::Dropout);
        assert_eq!(profiles[0].entry_year, 2011);
    }

    #[test]
    fn majority_value_wins_and_conflict_is_logged() {
        let rows = vec![row("s1", "D1", "A", "active"), row("s1", "D2", "A", "active"), row("s1", "D3", "B", "active")];
        let (profiles, issues) = build_profiles(&rows, &SituationMapping::default());
        assert_eq!(profiles[0].attributes.get(Attribute::BirthCity), "A");
        assert_eq!(issues.len(), 1);
        match &issues[0] {
            ProfileIssue::AttributeConflict { field, chosen, observed, .. } => {
                assert_eq!(field, "birth_city");
                assert_eq!(chosen, "A");
                assert_eq!(observed, &vec![("A".to_owned(), 2), ("B".to_owned(), 1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ties_go_to_the_smallest_value() {
        let rows = vec![row("s1", "D1", "Serra", "active"), row("s1", "D2", "Cariacica", "active")];
        let (profiles, issues) = build_profiles(&rows, &SituationMapping::default());
        assert_eq!(profiles[0].attributes.get(Attribute::BirthCity), "Cariacica");
        assert_eq!(issues.len(), 1);
    }

    #[test]
    fn unmapped_situation_rejects_the_profile() {
        let rows = vec![row("s1", "D1", "A", "sabbatical"), row("s2", "D1", "A", "graduated")];
        let (profiles, issues) = build_profiles(&rows, &SituationMapping::default());
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].student_id, "s2");
        assert!(issues[0].is_rejection());
    }

    #[test]
    fn same_student_in_two_courses_is_two_profiles() {
        let mut other = row("s1", "D1", "A", "graduated");
        other.course_id = "C2".into();
        let rows = vec![row("s1", "D1", "A", "dropout"), other];
        let (profiles, _) = build_profiles(&rows, &SituationMapping::default());
        assert_eq!(profiles.len(), 2);
    }
}
