// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::keyword_enum;
use crate::error::QueryError;
use crate::ingest::Snapshot;
use crate::percent::Percent;

/// Disciplines with fewer enrollments are never ranked.
pub const MIN_DISCIPLINE_ENROLLMENT: u64 = 15;
pub const DISCIPLINE_LIMIT_RANGE: std::ops::RangeInclusive<usize> = 5..=20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DisciplineOrder {
    Highest,
    Lowest,
}

keyword_enum!(
    DisciplineOrder,
    "order",
    [("highest", DisciplineOrder::Highest), ("lowest", DisciplineOrder::Lowest)]
);

/// Failure statistics of one discipline as offered by one course. Every
/// activity row is one enrollment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisciplineStats {
    pub course_id: String,
    pub discipline_id: String,
    pub enrolled_count: u64,
    pub failure_count: u64,
    pub failure_rate: Percent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisciplineRanking {
    pub disciplines: Vec<DisciplineStats>,
    pub institution_avg_rate: Option<Percent>,
    pub course_avg_rate: Option<Percent>,
}

pub fn discipline_stats(snapshot: &Snapshot) -> Vec<DisciplineStats> {
    let mut tally: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
    for row in snapshot.rows() {
        let entry = tally.entry((&row.course_id, &row.discipline_id)).or_default();
        entry.0 += 1;
        if row.result.is_failure() {
            entry.1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|((course_id, discipline_id), (enrolled, failures))| DisciplineStats {
            course_id: course_id.to_owned(),
            discipline_id: discipline_id.to_owned(),
            enrolled_count: enrolled,
            failure_count: failures,
            failure_rate: Percent::of(failures, enrolled),
        })
        .collect()
}

fn ranking_order(order: DisciplineOrder) -> impl Fn(&DisciplineStats, &DisciplineStats) -> Ordering {
    move |a, b| {
        let by_rate = match order {
            DisciplineOrder::Highest => b.failure_rate.cmp(&a.failure_rate),
            DisciplineOrder::Lowest => a.failure_rate.cmp(&b.failure_rate),
        };
        by_rate
            .then_with(|| b.enrolled_count.cmp(&a.enrolled_count))
            .then_with(|| (&a.course_id, &a.discipline_id).cmp(&(&b.course_id, &b.discipline_id)))
    }
}

/// Disciplines with the highest or lowest failure rates among those with at
/// least [`MIN_DISCIPLINE_ENROLLMENT`] enrollments. Ties go to the larger
/// enrollment, then to the smaller (course, discipline) id. The reference
/// rates are unweighted means over qualifying disciplines of the whole
/// institution and of `course`.
pub fn discipline_failure_ranking(
    snapshot: &Snapshot,
    course: Option<&str>,
    order: DisciplineOrder,
    limit: usize,
) -> Result<DisciplineRanking, QueryError> {
    if !DISCIPLINE_LIMIT_RANGE.contains(&limit) {
        return Err(QueryError::invalid("limit", format!("limit must be between 5 and 20, got {limit}")));
    }
    let qualifying: Vec<DisciplineStats> = discipline_stats(snapshot)
        .into_iter()
        .filter(|d| d.enrolled_count >= MIN_DISCIPLINE_ENROLLMENT)
        .collect();
    let institution_avg_rate = Percent::mean(qualifying.iter().map(|d| &d.failure_rate));
    let mut scoped: Vec<DisciplineStats> = qualifying
        .into_iter()
        .filter(|d| course.is_none_or(|c| c == d.course_id))
        .collect();
    let course_avg_rate = course.and_then(|_| Percent::mean(scoped.iter().map(|d| &d.failure_rate)));
    scoped.sort_by(ranking_order(order));
    scoped.truncate(limit);
    Ok(DisciplineRanking { disciplines: scoped, institution_avg_rate, course_avg_rate })
}
