// SPDX-License-Identifier: Apache-2.0

//! Metric kernels. Nothing here knows about filters or snapshots.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::decimal::FixedDecimal;
use crate::error::{MetricError, QueryError};
use crate::ingest::{CohortFlow, CohortScope, CourseResult, EnrollmentRow};
use crate::percent::Percent;

/// Accumulated withdrawal rate of one cohort, per progression year.
///
/// For year `T`, the numerator is every withdrawal and transfer up to and
/// including `T`, the denominator is entrants minus every death up to `T`,
/// and the rate is `100 * N_T / D_T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TdaSeries {
    pub course_name: String,
    pub scope: CohortScope,
    pub entry_year: i32,
    pub numerators: Vec<u64>,
    pub denominators: Vec<u64>,
}

impl TdaSeries {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Exact rate in percent for every year.
    pub fn rates(&self) -> Vec<Ratio<u64>> {
        self.numerators
            .iter()
            .zip(&self.denominators)
            .map(|(&n, &d)| Ratio::new(100 * n, d))
            .collect()
    }

    pub fn percents(&self) -> Vec<Percent> {
        self.numerators
            .iter()
            .zip(&self.denominators)
            .map(|(&n, &d)| Percent::of(n, d))
            .collect()
    }

    /// Rate at the last followed year.
    pub fn final_percent(&self) -> Option<Percent> {
        let n = *self.numerators.last()?;
        let d = *self.denominators.last()?;
        Some(Percent::of(n, d))
    }
}

pub fn compute_tda_series(cohort: &CohortFlow) -> Result<TdaSeries, MetricError> {
    let mut numerators = Vec::with_capacity(cohort.years.len());
    let mut denominators = Vec::with_capacity(cohort.years.len());
    let mut exits = 0u64;
    let mut deaths = 0u64;
    for (i, year) in cohort.years.iter().enumerate() {
        exits += year.withdrawals + year.transfers;
        deaths += year.deaths;
        let denominator = cohort.entrants.saturating_sub(deaths);
        if denominator == 0 {
            return Err(MetricError::ZeroDenominator { year: i + 1 });
        }
        numerators.push(exits);
        denominators.push(denominator);
    }
    Ok(TdaSeries {
        course_name: cohort.course_name.clone(),
        scope: cohort.scope,
        entry_year: cohort.entry_year,
        numerators,
        denominators,
    })
}

/// Credit-weighted mean grade, exact. `None` when there are no credits.
pub fn compute_cr<'a>(rows: impl IntoIterator<Item = &'a EnrollmentRow>) -> Option<Ratio<u64>> {
    let (points, credits) = rows.into_iter().fold((0u64, 0u64), |(p, c), row| {
        (p + row.grade.raw() * u64::from(row.credits), c + u64::from(row.credits))
    });
    (credits > 0).then(|| Ratio::new(points, credits * FixedDecimal::SCALE))
}

/// Unweighted mean attendance percentage over the rows. `None` for no rows.
pub fn compute_attendance_mean<'a>(
    rows: impl IntoIterator<Item = &'a EnrollmentRow>,
) -> Option<Ratio<u64>> {
    let (sum, n) = rows
        .into_iter()
        .fold((0u64, 0u64), |(s, n), row| (s + row.attendance_pct.raw(), n + 1));
    (n > 0).then(|| Ratio::new(sum, n * FixedDecimal::SCALE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FailureKind {
    All,
    Grade,
    Frequency,
}

impl FailureKind {
    pub fn matches(self, result: CourseResult) -> bool {
        match self {
            FailureKind::All => result.is_failure(),
            FailureKind::Grade => result == CourseResult::FailedByGrade,
            FailureKind::Frequency => result == CourseResult::FailedByFrequency,
        }
    }
}

impl FromStr for FailureKind {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(FailureKind::All),
            "grade" => Ok(FailureKind::Grade),
            "frequency" => Ok(FailureKind::Frequency),
            _ => Err(QueryError::invalid("kind", format!("unknown failure kind `{s}` (expected all, grade or frequency)"))),
        }
    }
}

pub fn count_failures<'a>(rows: impl IntoIterator<Item = &'a EnrollmentRow>, kind: FailureKind) -> u64 {
    rows.into_iter().filter(|row| kind.matches(row.result)).count() as u64
}

fn serialize_ratio<S: Serializer>(value: &Option<Ratio<u64>>, serializer: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(r) => serializer.serialize_some(&ratio_to_f64(r)),
        None => serializer.serialize_none(),
    }
}

pub fn ratio_to_f64(value: &Ratio<u64>) -> f64 {
    BigRational::new(BigInt::from(*value.numer()), BigInt::from(*value.denom()))
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Per-student academic summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StudentAcademics {
    #[serde(serialize_with = "serialize_ratio")]
    pub cr: Option<Ratio<u64>>,
    #[serde(serialize_with = "serialize_ratio")]
    pub mean_attendance_pct: Option<Ratio<u64>>,
    pub failures_by_grade: u64,
    pub failures_by_frequency: u64,
}

impl StudentAcademics {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a EnrollmentRow> + Clone) -> Self {
        Self {
            cr: compute_cr(rows.clone()),
            mean_attendance_pct: compute_attendance_mean(rows.clone()),
            failures_by_grade: count_failures(rows.clone(), FailureKind::Grade),
            failures_by_frequency: count_failures(rows, FailureKind::Frequency),
        }
    }

    pub fn failures(&self, kind: FailureKind) -> u64 {
        match kind {
            FailureKind::All => self.failures_by_grade + self.failures_by_frequency,
            FailureKind::Grade => self.failures_by_grade,
            FailureKind::Frequency => self.failures_by_frequency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CohortYear, StudentAttributes};

    fn cohort(entrants: u64, years: &[(u64, u64, u64)]) -> CohortFlow {
        let years = years
            .iter()
            .map(|&(withdrawals, transfers, deaths)| CohortYear { withdrawals, transfers, deaths })
            .collect();
        CohortFlow::new("Math", CohortScope::InstitutionCourse, 2010, entrants, years).unwrap()
    }

    fn row(grade: &str, credits: u32, attendance: &str, result: CourseResult) -> EnrollmentRow {
        EnrollmentRow {
            student_id: "s".into(),
            course_id: "c".into(),
            discipline_id: "d".into(),
            year: 2012,
            term: 1,
            grade: FixedDecimal::parse(grade).unwrap(),
            credits,
            attendance_pct: FixedDecimal::parse(attendance).unwrap(),
            result,
            entry_year: 2012,
            situation_raw: "dropout".into(),
            attributes: StudentAttributes::default(),
        }
    }

    #[test]
    fn zero_flows_give_zero_rates() {
        let series = compute_tda_series(&cohort(100, &[(0, 0, 0); 6])).unwrap();
        assert_eq!(series.rates(), vec![Ratio::from_integer(0); 6]);
    }

    #[test]
    fn two_year_hand_evaluation() {
        let series = compute_tda_series(&cohort(100, &[(10, 5, 1), (20, 14, 1)])).unwrap();
        assert_eq!(series.numerators, vec![15, 49]);
        assert_eq!(series.denominators, vec![99, 98]);
        assert_eq!(series.rates(), vec![Ratio::new(1500, 99), Ratio::from_integer(50)]);
        let rendered: Vec<String> = series.percents().iter().map(Percent::to_string).collect();
        assert_eq!(rendered, vec!["15.2", "50.0"]);
    }

    #[test]
    fn all_entrants_deceased_is_an_error() {
        let err = compute_tda_series(&cohort(3, &[(0, 0, 3)])).unwrap_err();
        assert_eq!(err.to_string(), "denominator zero at year 1");
    }

    #[test]
    fn cr_examples() {
        let single = [row("8.0", 4, "100", CourseResult::Approved)];
        assert_eq!(compute_cr(&single), Some(Ratio::from_integer(8)));
        let weighted = [row("8", 4, "100", CourseResult::Approved), row("6", 2, "100", CourseResult::Approved)];
        assert_eq!(compute_cr(&weighted), Some(Ratio::new(44, 6)));
        let symmetric = [row("0", 2, "100", CourseResult::Approved), row("10", 2, "100", CourseResult::Approved)];
        assert_eq!(compute_cr(&symmetric), Some(Ratio::from_integer(5)));
        assert_eq!(compute_cr(&[]), None);
    }

    #[test]
    fn attendance_mean_is_unweighted() {
        let rows = [row("5", 6, "80", CourseResult::Approved), row("5", 1, "70", CourseResult::Approved)];
        assert_eq!(compute_attendance_mean(&rows), Some(Ratio::from_integer(75)));
        let full: Vec<_> = (0..3).map(|_| row("5", 2, "100", CourseResult::Approved)).collect();
        assert_eq!(compute_attendance_mean(&full), Some(Ratio::from_integer(100)));
        assert_eq!(compute_attendance_mean(&[]), None);
    }

    #[test]
    fn failure_counts_by_kind() {
        let none = [row("9", 4, "100", CourseResult::Approved)];
        assert_eq!(count_failures(&none, FailureKind::All), 0);
        let rows = [
            row("2", 4, "100", CourseResult::FailedByGrade),
            row("3", 4, "100", CourseResult::FailedByGrade),
            row("0", 4, "40", CourseResult::FailedByFrequency),
            row("7", 4, "100", CourseResult::Other),
        ];
        assert_eq!(count_failures(&rows, FailureKind::All), 3);
        assert_eq!(count_failures(&rows, FailureKind::Grade), 2);
        assert_eq!(count_failures(&rows, FailureKind::Frequency), 1);
        let academics = StudentAcademics::from_rows(&rows);
        assert_eq!(academics.failures(FailureKind::All), 3);
    }
}
