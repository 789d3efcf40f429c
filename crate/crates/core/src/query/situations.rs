// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use super::{apply_filter, keyword_enum, Distribution, FilterSet, NO_MATCHING_CATEGORY};
use crate::error::QueryError;
use crate::ingest::{Situation, Snapshot};

pub const DEFAULT_RANKING_LIMIT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankOrder {
    Top,
    Bottom,
}

keyword_enum!(RankOrder, "order", [("top", RankOrder::Top), ("bottom", RankOrder::Bottom)]);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CourseCount {
    pub course_id: String,
    pub count: u64,
}

/// Students per situation among those matching `filter`. Entries are in
/// the fixed order Graduated, InProgress, Dropout; matching deceased
/// students are counted in `excluded_undefined`.
pub fn situation_counts(snapshot: &Snapshot, filter: &FilterSet) -> Distribution {
    let students = snapshot.students();
    let mut counts = [0u64; 3];
    let mut deceased = 0u64;
    for i in apply_filter(snapshot, filter) {
        match students[i].situation {
            Situation::Graduated => counts[0] += 1,
            Situation::InProgress => counts[1] += 1,
            Situation::Dropout => counts[2] += 1,
            Situation::Deceased => deceased += 1,
        }
    }
    let entries = Situation::CHARTED
        .iter()
        .zip(counts)
        .map(|(s, c)| (s.label().to_owned(), c))
        .collect();
    let mut distribution = Distribution::from_counts(entries, deceased);
    if filter.names_unknown_value(students) {
        distribution.note = Some(NO_MATCHING_CATEGORY.to_owned());
    }
    distribution
}

/// Courses with the most (`Top`) or fewest (`Bottom`) students in
/// `situation`, ties broken by course id. `limit` is clamped to the number of
/// courses.
pub fn course_situation_ranking(
    snapshot: &Snapshot,
    situation: Situation,
    order: RankOrder,
    limit: usize,
) -> Result<Vec<CourseCount>, QueryError> {
    if situation == Situation::Deceased {
        return Err(QueryError::invalid("situation", "deceased students are not ranked"));
    }
    if limit == 0 {
        return Err(QueryError::invalid("limit", "limit must be at least 1"));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for student in snapshot.students() {
        let count = counts.entry(&student.course_id).or_default();
        if student.situation == situation {
            *count += 1;
        }
    }
    let mut ranked: Vec<CourseCount> = counts
        .into_iter()
        .map(|(course_id, count)| CourseCount { course_id: course_id.to_owned(), count })
        .collect();
    // BTreeMap order is already by course id; a stable sort keeps it for ties.
    match order {
        RankOrder::Top => ranked.sort_by_key(|c| std::cmp::Reverse(c.count)),
        RankOrder::Bottom => ranked.sort_by_key(|c| c.count),
    }
    ranked.truncate(limit);
    Ok(ranked)
}
