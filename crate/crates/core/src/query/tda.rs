// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ingest::{CohortScope, Snapshot};
use crate::metrics::compute_tda_series;
use crate::percent::Percent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TdaSeriesView {
    pub course_name: String,
    pub scope: String,
    pub entry_year: i32,
    pub tda: Vec<Percent>,
    pub numerators: Vec<u64>,
    pub denominators: Vec<u64>,
}

/// Final-year rate of one course, averaged over its cohorts per scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TdaCourseBar {
    pub course_name: String,
    pub institution_tda: Option<Percent>,
    pub national_tda: Option<Percent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceLines {
    pub national_avg: Option<Percent>,
    pub state_avg: Option<Percent>,
    pub institution_avg: Option<Percent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TdaHistogram {
    pub courses: Vec<TdaCourseBar>,
    pub reference_lines: ReferenceLines,
    pub series: Vec<TdaSeriesView>,
    pub warnings: Vec<String>,
}

/// Paired institution/national bars per course plus the three reference
/// lines. Reference averages are unweighted means of the course bars; the
/// snapshot's configured values are used only when no cohort of that scope
/// exists. The state line is always configured.
pub fn tda_histogram(snapshot: &Snapshot) -> TdaHistogram {
    let mut warnings = Vec::new();
    let mut series = Vec::new();
    let mut finals: BTreeMap<&str, (Vec<Percent>, Vec<Percent>)> = BTreeMap::new();
    for cohort in snapshot.cohorts() {
        match compute_tda_series(cohort) {
            Ok(tda) => {
                let slot = finals.entry(&cohort.course_name).or_default();
                if let Some(last) = tda.final_percent() {
                    match cohort.scope {
                        CohortScope::InstitutionCourse => slot.0.push(last),
                        CohortScope::NationalCourseAverage => slot.1.push(last),
                    }
                }
                series.push(TdaSeriesView {
                    course_name: tda.course_name.clone(),
                    scope: tda.scope.to_string(),
                    entry_year: tda.entry_year,
                    tda: tda.percents(),
                    numerators: tda.numerators,
                    denominators: tda.denominators,
                });
            }
            Err(err) => warnings.push(format!(
                "{} ({}, entry {}): {err}",
                cohort.course_name, cohort.scope, cohort.entry_year
            )),
        }
    }
    if snapshot.cohorts().is_empty() {
        warnings.push("no cohort data".to_owned());
    }

    let courses: Vec<TdaCourseBar> = finals
        .into_iter()
        .filter(|(_, (inst, nat))| !inst.is_empty() || !nat.is_empty())
        .map(|(course, (inst, nat))| TdaCourseBar {
            course_name: course.to_owned(),
            institution_tda: Percent::mean(&inst),
            national_tda: Percent::mean(&nat),
        })
        .collect();

    let reference = snapshot.reference();
    let configured = |value: Option<f64>| value.and_then(Percent::from_f64);
    let institution_avg = Percent::mean(courses.iter().filter_map(|c| c.institution_tda.as_ref()))
        .or_else(|| configured(reference.institution_avg));
    let national_avg = Percent::mean(courses.iter().filter_map(|c| c.national_tda.as_ref()))
        .or_else(|| configured(reference.national_avg));
    TdaHistogram {
        courses,
        reference_lines: ReferenceLines {
            national_avg,
            state_avg: configured(reference.state_avg),
            institution_avg,
        },
        series,
        warnings,
    }
}
