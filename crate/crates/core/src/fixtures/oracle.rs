// SPDX-License-Identifier: Apache-2.0

//! Brute-force recomputation of every aggregate from generator truth.
//!
//! Grades and attendance are integer tenths here, so band membership is
//! decided with integer cross-multiplication. Rankings use selection by
//! pairwise comparison rather than a library sort.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Fraction, TruthCohort, TruthStudent};
use crate::ingest::{CourseResult, Situation};
use crate::metrics::FailureKind;
use crate::query::FilterSet;

pub type Counts = Vec<(String, u64)>;

pub(super) fn summarize(mut student: TruthStudent) -> TruthStudent {
    let mut points = 0u64;
    let mut credits = 0u64;
    let mut attendance = 0u64;
    let mut by_grade = 0u64;
    let mut by_frequency = 0u64;
    for row in &student.rows {
        points += row.grade_tenths * row.credits;
        credits += row.credits;
        attendance += row.attendance_tenths;
        if row.result == CourseResult::FailedByGrade {
            by_grade += 1;
        }
        if row.result == CourseResult::FailedByFrequency {
            by_frequency += 1;
        }
    }
    let n = student.rows.len() as u64;
    student.cr = (credits > 0).then(|| Fraction { numerator: points, denominator: 10 * credits });
    student.attendance_mean = (n > 0).then(|| Fraction { numerator: attendance, denominator: 10 * n });
    student.failures_by_grade = by_grade;
    student.failures_by_frequency = by_frequency;
    student
}

pub(super) fn tda_truth(mut cohort: TruthCohort) -> TruthCohort {
    cohort.tda_numerators.clear();
    cohort.tda_denominators.clear();
    for t in 1..=cohort.years.len() {
        let mut numerator = 0;
        let mut deaths = 0;
        for &(withdrawals, transfers, died) in &cohort.years[..t] {
            numerator += withdrawals + transfers;
            deaths += died;
        }
        cohort.tda_numerators.push(numerator);
        cohort.tda_denominators.push(cohort.entrants - deaths);
    }
    cohort
}

fn in_course(student: &TruthStudent, course: Option<&str>) -> bool {
    match course {
        Some(c) => student.course_id == c,
        None => true,
    }
}

fn dropouts<'a>(students: &'a [TruthStudent], course: Option<&'a str>) -> impl Iterator<Item = &'a TruthStudent> {
    students.iter().filter(move |s| s.situation == Situation::Dropout && in_course(s, course))
}

fn filter_matches(filter: &FilterSet, s: &TruthStudent) -> bool {
    let attr = |name: &str| s.attributes.get(name).map(String::as_str).unwrap_or("");
    if let Some(c) = &filter.course_id {
        if &s.course_id != c {
            return false;
        }
    }
    if let Some(y) = filter.entry_year {
        if s.entry_year != y {
            return false;
        }
    }
    for (name, wanted) in [
        ("income_band", &filter.income_band),
        ("birth_city", &filter.birth_city),
        ("quota_type", &filter.quota_type),
        ("high_school_type", &filter.high_school_type),
    ] {
        if let Some(w) = wanted {
            if attr(name) != w {
                return false;
            }
        }
    }
    true
}

/// Graduated/InProgress/Dropout counts and the deceased count.
pub fn situation_counts(students: &[TruthStudent], filter: &FilterSet) -> (Counts, u64) {
    let (mut graduated, mut in_progress, mut dropout, mut deceased) = (0, 0, 0, 0);
    for s in students.iter().filter(|s| filter_matches(filter, s)) {
        match s.situation {
            Situation::Graduated => graduated += 1,
            Situation::InProgress => in_progress += 1,
            Situation::Dropout => dropout += 1,
            Situation::Deceased => deceased += 1,
        }
    }
    (
        vec![
            ("Graduated".to_owned(), graduated),
            ("InProgress".to_owned(), in_progress),
            ("Dropout".to_owned(), dropout),
        ],
        deceased,
    )
}

/// Repeatedly removes the element that `before` ranks ahead of all others.
fn select_order<T: Clone>(mut items: Vec<T>, before: impl Fn(&T, &T) -> bool, limit: usize) -> Vec<T> {
    let mut out = Vec::new();
    while !items.is_empty() && out.len() < limit {
        let mut best = 0;
        for i in 1..items.len() {
            if before(&items[i], &items[best]) {
                best = i;
            }
        }
        out.push(items.remove(best));
    }
    out
}

pub fn course_ranking(students: &[TruthStudent], situation: Situation, top: bool, limit: usize) -> Counts {
    let courses: BTreeSet<&str> = students.iter().map(|s| s.course_id.as_str()).collect();
    let counts: Counts = courses
        .into_iter()
        .map(|c| {
            let n = students.iter().filter(|s| s.course_id == c && s.situation == situation).count();
            (c.to_owned(), n as u64)
        })
        .collect();
    select_order(
        counts,
        |a, b| {
            if a.1 != b.1 {
                if top { a.1 > b.1 } else { a.1 < b.1 }
            } else {
                a.0 < b.0
            }
        },
        limit,
    )
}

/// Above90 / From75To90 / Below75 and the undefined count.
pub fn attendance_bands(students: &[TruthStudent], course: Option<&str>) -> (Counts, u64) {
    let (mut above, mut middle, mut below, mut undefined) = (0, 0, 0, 0);
    for s in dropouts(students, course) {
        match &s.attendance_mean {
            // mean = n / d
            Some(Fraction { numerator: n, denominator: d }) => {
                if *n > 90 * d {
                    above += 1;
                } else if *n >= 75 * d {
                    middle += 1;
                } else {
                    below += 1;
                }
            }
            None => undefined += 1,
        }
    }
    (
        vec![("Above90".to_owned(), above), ("From75To90".to_owned(), middle), ("Below75".to_owned(), below)],
        undefined,
    )
}

/// Below5 / From5To7 / AtLeast7 and the undefined count.
pub fn cr_bands(students: &[TruthStudent], course: Option<&str>) -> (Counts, u64) {
    let (mut low, mut middle, mut high, mut undefined) = (0, 0, 0, 0);
    for s in dropouts(students, course) {
        match &s.cr {
            Some(Fraction { numerator: n, denominator: d }) => {
                if *n < 5 * d {
                    low += 1;
                } else if *n < 7 * d {
                    middle += 1;
                } else {
                    high += 1;
                }
            }
            None => undefined += 1,
        }
    }
    (
        vec![("Below5".to_owned(), low), ("From5To7".to_owned(), middle), ("AtLeast7".to_owned(), high)],
        undefined,
    )
}

/// (failures, students) bins from 0 to the maximum observed.
pub fn failure_histogram(students: &[TruthStudent], course: Option<&str>, kind: FailureKind) -> Vec<(u64, u64)> {
    let failures = |s: &TruthStudent| match kind {
        FailureKind::All => s.failures_by_grade + s.failures_by_frequency,
        FailureKind::Grade => s.failures_by_grade,
        FailureKind::Frequency => s.failures_by_frequency,
    };
    let Some(max) = dropouts(students, course).map(failures).max() else {
        return Vec::new();
    };
    (0..=max)
        .map(|k| (k, dropouts(students, course).filter(|s| failures(s) == k).count() as u64))
        .collect()
}

/// Five largest categories plus "Others" when there are more than five.
pub fn category_breakdown(students: &[TruthStudent], column: &str, course: Option<&str>) -> Counts {
    let values: BTreeSet<&str> = dropouts(students, course).map(|s| s.attributes[column].as_str()).collect();
    let counts: Counts = values
        .into_iter()
        .map(|v| (v.to_owned(), dropouts(students, course).filter(|s| s.attributes[column] == v).count() as u64))
        .collect();
    let n = counts.len();
    let mut top = select_order(counts.clone(), |a, b| a.1 > b.1 || (a.1 == b.1 && a.0 < b.0), 5);
    if n > 5 {
        let shown: u64 = top.iter().map(|(_, c)| c).sum();
        let all: u64 = counts.iter().map(|(_, c)| c).sum();
        top.push(("Others".to_owned(), all - shown));
    }
    top
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthDiscipline {
    pub course_id: String,
    pub discipline_id: String,
    pub enrolled: u64,
    pub failures: u64,
}

impl TruthDiscipline {
    pub fn rate(&self) -> f64 {
        100.0 * self.failures as f64 / self.enrolled as f64
    }
}

fn all_disciplines(students: &[TruthStudent]) -> Vec<TruthDiscipline> {
    let mut tally: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for s in students {
        for row in &s.rows {
            let entry = tally.entry((s.course_id.clone(), row.discipline_id.clone())).or_insert((0, 0));
            entry.0 += 1;
            if row.result == CourseResult::FailedByGrade || row.result == CourseResult::FailedByFrequency {
                entry.1 += 1;
            }
        }
    }
    tally
        .into_iter()
        .map(|((course_id, discipline_id), (enrolled, failures))| TruthDiscipline {
            course_id,
            discipline_id,
            enrolled,
            failures,
        })
        .collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineTruth {
    pub disciplines: Vec<TruthDiscipline>,
    pub institution_avg_rate: Option<f64>,
    pub course_avg_rate: Option<f64>,
}

pub fn discipline_ranking(students: &[TruthStudent], course: Option<&str>, highest: bool, limit: usize) -> DisciplineTruth {
    let qualifying: Vec<TruthDiscipline> = all_disciplines(students).into_iter().filter(|d| d.enrolled >= 15).collect();
    let institution: Vec<f64> = qualifying.iter().map(TruthDiscipline::rate).collect();
    let scoped: Vec<TruthDiscipline> = qualifying
        .into_iter()
        .filter(|d| course.is_none() || Some(d.course_id.as_str()) == course)
        .collect();
    let course_avg_rate = course.and_then(|_| mean(&scoped.iter().map(TruthDiscipline::rate).collect::<Vec<_>>()));
    let ranked = select_order(
        scoped,
        |a, b| {
            // a.failures / a.enrolled versus b.failures / b.enrolled, exactly
            let (lhs, rhs) = (a.failures * b.enrolled, b.failures * a.enrolled);
            if lhs != rhs {
                return if highest { lhs > rhs } else { lhs < rhs };
            }
            if a.enrolled != b.enrolled {
                return a.enrolled > b.enrolled;
            }
            (&a.course_id, &a.discipline_id) < (&b.course_id, &b.discipline_id)
        },
        limit,
    );
    DisciplineTruth { disciplines: ranked, institution_avg_rate: mean(&institution), course_avg_rate }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdaBarTruth {
    pub course_name: String,
    pub institution: Option<f64>,
    pub national: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdaTruth {
    pub courses: Vec<TdaBarTruth>,
    pub institution_avg: Option<f64>,
    pub national_avg: Option<f64>,
    pub state_avg: Option<f64>,
}

pub fn tda_bars(cohorts: &[TruthCohort], state_avg: Option<f64>) -> TdaTruth {
    let names: BTreeSet<&str> = cohorts.iter().map(|c| c.course_name.as_str()).collect();
    let final_mean = |name: &str, scope: &str| {
        let finals: Vec<f64> = cohorts
            .iter()
            .filter(|c| c.course_name == name && c.scope == scope && !c.years.is_empty())
            .map(|c| {
                let last = c.years.len() - 1;
                100.0 * c.tda_numerators[last] as f64 / c.tda_denominators[last] as f64
            })
            .collect();
        mean(&finals)
    };
    let courses: Vec<TdaBarTruth> = names
        .into_iter()
        .map(|name| TdaBarTruth {
            course_name: name.to_owned(),
            institution: final_mean(name, "institution"),
            national: final_mean(name, "national"),
        })
        .collect();
    let institution: Vec<f64> = courses.iter().filter_map(|c| c.institution).collect();
    let national: Vec<f64> = courses.iter().filter_map(|c| c.national).collect();
    TdaTruth { institution_avg: mean(&institution), national_avg: mean(&national), state_avg, courses }
}

/// Expected results for one scope: the whole institution or one course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeExpectations {
    pub situation_counts: Counts,
    pub deceased: u64,
    pub attendance_bands: Counts,
    pub attendance_undefined: u64,
    pub cr_bands: Counts,
    pub cr_undefined: u64,
    pub failures_all: Vec<(u64, u64)>,
    pub failures_grade: Vec<(u64, u64)>,
    pub failures_frequency: Vec<(u64, u64)>,
    pub categories: BTreeMap<String, Counts>,
    pub disciplines_highest: DisciplineTruth,
    pub disciplines_lowest: DisciplineTruth,
}

impl ScopeExpectations {
    fn compute(students: &[TruthStudent], course: Option<&str>) -> Self {
        let filter = FilterSet { course_id: course.map(str::to_owned), ..FilterSet::default() };
        let (situation_counts, deceased) = situation_counts(students, &filter);
        let (attendance_bands, attendance_undefined) = attendance_bands(students, course);
        let (cr_bands, cr_undefined) = cr_bands(students, course);
        let columns: BTreeSet<&String> = students.iter().flat_map(|s| s.attributes.keys()).collect();
        ScopeExpectations {
            situation_counts,
            deceased,
            attendance_bands,
            attendance_undefined,
            cr_bands,
            cr_undefined,
            failures_all: failure_histogram(students, course, FailureKind::All),
            failures_grade: failure_histogram(students, course, FailureKind::Grade),
            failures_frequency: failure_histogram(students, course, FailureKind::Frequency),
            categories: columns
                .into_iter()
                .map(|c| (c.clone(), category_breakdown(students, c, course)))
                .collect(),
            disciplines_highest: discipline_ranking(students, course, true, 20),
            disciplines_lowest: discipline_ranking(students, course, false, 20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub institution: ScopeExpectations,
    pub courses: BTreeMap<String, ScopeExpectations>,
    /// Situation label to (top 15, bottom 15) course rankings.
    pub course_ranking: BTreeMap<String, (Counts, Counts)>,
    pub tda: TdaTruth,
}

impl Expectations {
    pub fn compute(students: &[TruthStudent], cohorts: &[TruthCohort], state_avg: f64) -> Self {
        let course_ids: BTreeSet<&str> = students.iter().map(|s| s.course_id.as_str()).collect();
        let course_ranking = [Situation::Graduated, Situation::InProgress, Situation::Dropout]
            .into_iter()
            .map(|s| {
                (
                    s.label().to_owned(),
                    (course_ranking(students, s, true, 15), course_ranking(students, s, false, 15)),
                )
            })
            .collect();
        Expectations {
            institution: ScopeExpectations::compute(students, None),
            courses: course_ids
                .into_iter()
                .map(|c| (c.to_owned(), ScopeExpectations::compute(students, Some(c))))
                .collect(),
            course_ranking,
            tda: tda_bars(cohorts, Some(state_avg)),
        }
    }
}
