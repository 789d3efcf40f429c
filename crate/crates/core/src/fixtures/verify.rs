// SPDX-License-Identifier: Apache-2.0

//! Engine results compared against a fixture manifest.

use std::fmt::{Debug, Display};

use num_rational::Ratio;

use super::{oracle, Manifest};
use crate::ingest::{Attribute, Situation, Snapshot};
use crate::metrics::{compute_tda_series, FailureKind};
use crate::query::{self, CategoryGroup, CrMode, DisciplineOrder, Distribution, FilterSet, RankOrder};

const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Default)]
struct Mismatches(Vec<String>);

impl Mismatches {
    fn eq<T: PartialEq + Debug>(&mut self, what: impl Display, got: T, want: T) {
        if got != want {
            self.0.push(format!("{what}: engine {got:?}, oracle {want:?}"));
        }
    }

    fn close(&mut self, what: impl Display, got: Option<f64>, want: Option<f64>) {
        let ok = match (got, want) {
            (Some(a), Some(b)) => (a - b).abs() < RATE_TOLERANCE,
            (None, None) => true,
            _ => false,
        };
        if !ok {
            self.0.push(format!("{what}: engine {got:?}, oracle {want:?}"));
        }
    }
}

fn counts(d: &Distribution) -> Vec<(String, u64)> {
    d.entries.iter().map(|e| (e.label.clone(), e.count)).collect()
}

fn group_of(attribute: Attribute) -> CategoryGroup {
    [CategoryGroup::Socioeconomic, CategoryGroup::Geographic, CategoryGroup::Academic]
        .into_iter()
        .find(|g| g.attributes().contains(&attribute))
        .expect("every attribute belongs to a group")
}

/// Every disagreement between `snapshot` (ingested from the fixture) and
/// the manifest's brute-force expectations; empty when they agree.
pub fn compare(snapshot: &Snapshot, manifest: &Manifest) -> Vec<String> {
    let mut m = Mismatches::default();
    let report = snapshot.report();
    m.eq("rows_read", report.rows_read, manifest.rows_read);
    m.eq("rows_kept", report.rows_kept, manifest.rows_kept);
    m.eq("rows_deduplicated", report.rows_deduplicated, manifest.rows_deduplicated);
    m.eq("rows_rejected", report.rows_rejected, manifest.rows_rejected);
    let rejected: Vec<u64> = report.rejections.iter().map(|r| r.line).collect();
    let corrupted: Vec<u64> = manifest.corrupted_lines.iter().map(|c| c.line).collect();
    m.eq("rejected lines", rejected, corrupted);
    m.eq("profile issues", report.profile_issues.len(), 0);

    m.eq("students", snapshot.students().len(), manifest.students.len());
    for ((profile, academics), truth) in snapshot.students().iter().zip(snapshot.academics()).zip(&manifest.students) {
        let who = format!("student {}/{}", truth.course_id, truth.student_id);
        m.eq(format!("{who} id"), &profile.student_id, &truth.student_id);
        m.eq(format!("{who} situation"), profile.situation, truth.situation);
        let cr = truth.cr.as_ref().map(|f| Ratio::new(f.numerator, f.denominator));
        m.eq(format!("{who} cr"), academics.cr, cr);
        let attendance = truth.attendance_mean.as_ref().map(|f| Ratio::new(f.numerator, f.denominator));
        m.eq(format!("{who} attendance"), academics.mean_attendance_pct, attendance);
        m.eq(format!("{who} grade failures"), academics.failures_by_grade, truth.failures_by_grade);
        m.eq(format!("{who} frequency failures"), academics.failures_by_frequency, truth.failures_by_frequency);
        for (attribute, value) in profile.attributes.iter() {
            m.eq(format!("{who} {attribute}"), Some(value), truth.attributes.get(attribute.column()).map(String::as_str));
        }
    }

    m.eq("cohorts", snapshot.cohorts().len(), manifest.cohorts.len());
    for cohort in snapshot.cohorts() {
        let what = format!("tda {} {}", cohort.course_name, cohort.scope);
        let truth = manifest
            .cohorts
            .iter()
            .find(|c| c.course_name == cohort.course_name && c.scope == cohort.scope.to_string());
        match (compute_tda_series(cohort), truth) {
            (Ok(series), Some(truth)) => {
                m.eq(format!("{what} numerators"), &series.numerators, &truth.tda_numerators);
                m.eq(format!("{what} denominators"), &series.denominators, &truth.tda_denominators);
            }
            (Err(err), _) => m.0.push(format!("{what}: {err}")),
            (_, None) => m.0.push(format!("{what}: not in manifest")),
        }
    }

    check_scope(&mut m, snapshot, manifest, None);
    for course in snapshot.courses() {
        check_scope(&mut m, snapshot, manifest, Some(course));
    }

    for situation in Situation::CHARTED {
        let Some((top, bottom)) = manifest.expected.course_ranking.get(situation.label()) else {
            m.0.push(format!("course ranking {situation:?}: not in manifest"));
            continue;
        };
        for (order, want) in [(RankOrder::Top, top), (RankOrder::Bottom, bottom)] {
            let got: Vec<(String, u64)> =
                match query::course_situation_ranking(snapshot, situation, order, query::DEFAULT_RANKING_LIMIT) {
                    Ok(got) => got.into_iter().map(|c| (c.course_id, c.count)).collect(),
                    Err(err) => {
                        m.0.push(format!("course ranking {situation:?} {order:?}: {err}"));
                        continue;
                    }
                };
            m.eq(format!("course ranking {situation:?} {order:?}"), &got, want);
        }
    }

    let histogram = query::tda_histogram(snapshot);
    let truth = oracle::tda_bars(&manifest.cohorts, Some(manifest.state_avg));
    m.eq("tda bars", histogram.courses.len(), truth.courses.len());
    m.eq("tda warnings", histogram.warnings.len(), 0);
    for (bar, want) in histogram.courses.iter().zip(&truth.courses) {
        m.eq("tda bar course", &bar.course_name, &want.course_name);
        m.close(format!("tda bar {} institution", bar.course_name), bar.institution_tda.as_ref().map(|p| p.to_f64()), want.institution);
        m.close(format!("tda bar {} national", bar.course_name), bar.national_tda.as_ref().map(|p| p.to_f64()), want.national);
    }
    let lines = &histogram.reference_lines;
    m.close("institution reference", lines.institution_avg.as_ref().map(|p| p.to_f64()), truth.institution_avg);
    m.close("national reference", lines.national_avg.as_ref().map(|p| p.to_f64()), truth.national_avg);
    m.eq("state reference", lines.state_avg.as_ref().map(|p| p.rounded()), Some(manifest.state_avg));
    m.0
}

fn check_scope(m: &mut Mismatches, snapshot: &Snapshot, manifest: &Manifest, course: Option<&str>) {
    let scope = course.unwrap_or("institution");
    let expected = match course {
        Some(c) => match manifest.expected.courses.get(c) {
            Some(e) => e,
            None => {
                m.0.push(format!("course {c}: not in manifest"));
                return;
            }
        },
        None => &manifest.expected.institution,
    };
    let filter = FilterSet { course_id: course.map(str::to_owned), ..FilterSet::default() };
    let situations = query::situation_counts(snapshot, &filter);
    m.eq(format!("{scope} situations"), counts(&situations), expected.situation_counts.clone());
    m.eq(format!("{scope} deceased"), situations.excluded_undefined, expected.deceased);

    let attendance = query::attendance_bands(snapshot, course);
    m.eq(format!("{scope} attendance bands"), counts(&attendance), expected.attendance_bands.clone());
    m.eq(format!("{scope} attendance undefined"), attendance.excluded_undefined, expected.attendance_undefined);
    let cr = query::cr_bands(snapshot, course, CrMode::Percent);
    m.eq(format!("{scope} cr bands"), counts(&cr), expected.cr_bands.clone());
    m.eq(format!("{scope} cr undefined"), cr.excluded_undefined, expected.cr_undefined);

    for (kind, bins) in [
        (FailureKind::All, &expected.failures_all),
        (FailureKind::Grade, &expected.failures_grade),
        (FailureKind::Frequency, &expected.failures_frequency),
    ] {
        let got: Vec<(u64, u64)> =
            query::failure_histogram(snapshot, course, kind).iter().map(|b| (b.failures, b.students)).collect();
        m.eq(format!("{scope} failure histogram {kind:?}"), &got, bins);
    }

    for attribute in Attribute::ALL {
        let what = format!("{scope} categories {attribute}");
        match query::category_breakdown(snapshot, group_of(attribute), attribute, course) {
            Ok(got) => m.eq(what, Some(counts(&got)), expected.categories.get(attribute.column()).cloned()),
            Err(err) => m.0.push(format!("{what}: {err}")),
        }
    }

    let limit = *query::DISCIPLINE_LIMIT_RANGE.end();
    for (order, truth) in
        [(DisciplineOrder::Highest, &expected.disciplines_highest), (DisciplineOrder::Lowest, &expected.disciplines_lowest)]
    {
        let what = format!("{scope} discipline ranking {order:?}");
        let got = match query::discipline_failure_ranking(snapshot, course, order, limit) {
            Ok(got) => got,
            Err(err) => {
                m.0.push(format!("{what}: {err}"));
                continue;
            }
        };
        let ids: Vec<(&str, &str, u64, u64)> = got
            .disciplines
            .iter()
            .map(|d| (d.course_id.as_str(), d.discipline_id.as_str(), d.enrolled_count, d.failure_count))
            .collect();
        let want: Vec<(&str, &str, u64, u64)> = truth
            .disciplines
            .iter()
            .map(|d| (d.course_id.as_str(), d.discipline_id.as_str(), d.enrolled, d.failures))
            .collect();
        m.eq(&what, ids, want);
        m.close(format!("{what} institution average"), got.institution_avg_rate.map(|p| p.to_f64()), truth.institution_avg_rate);
        m.close(format!("{what} course average"), got.course_avg_rate.map(|p| p.to_f64()), truth.course_avg_rate);
    }
}
