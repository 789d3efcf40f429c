// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ingest::{Attribute, Situation, Snapshot};

/// Values present in a snapshot, for populating filter controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetMeta {
    pub version: u64,
    pub courses: Vec<String>,
    pub entry_years: Vec<i32>,
    pub situations: Vec<&'static str>,
    pub categories: BTreeMap<&'static str, Vec<String>>,
    pub cohort_courses: Vec<String>,
}

pub fn dataset_meta(snapshot: &Snapshot) -> DatasetMeta {
    let students = snapshot.students();
    let entry_years: BTreeSet<i32> = students.iter().map(|s| s.entry_year).collect();
    let categories = Attribute::ALL
        .into_iter()
        .map(|a| {
            let values: BTreeSet<&str> = students.iter().map(|s| s.attributes.get(a)).collect();
            (a.column(), values.into_iter().map(str::to_owned).collect())
        })
        .collect();
    let cohort_courses: BTreeSet<&str> = snapshot.cohorts().iter().map(|c| c.course_name.as_str()).collect();
    DatasetMeta {
        version: snapshot.version(),
        courses: snapshot.courses().into_iter().map(str::to_owned).collect(),
        entry_years: entry_years.into_iter().collect(),
        situations: Situation::CHARTED.iter().map(|s| s.label()).collect(),
        categories,
        cohort_courses: cohort_courses.into_iter().map(str::to_owned).collect(),
    }
}
