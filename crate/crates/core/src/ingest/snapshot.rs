// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arc_swap::ArcSwap;
use serde::Serialize;

use super::activity::{parse_activity_table, ActivityTable, RowRejection, ACTIVITY_COLUMNS};
use super::cohort::{parse_cohort_table, CohortFlow, CohortRejection, CohortTable, COHORT_COLUMNS};
use super::mapping::{MappingConfig, ReferenceConfig, SituationMapping};
use super::profile::{build_profiles, ProfileIssue};
use super::{EnrollmentRow, StudentProfile};
use crate::error::IngestError;
use crate::metrics::StudentAcademics;

/// Input file locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSources {
    pub activity: PathBuf,
    pub cohort: PathBuf,
    pub mapping: Option<PathBuf>,
    /// Reference-value metadata; defaults to `<cohort>.meta` when that file exists.
    pub cohort_meta: Option<PathBuf>,
}

impl DataSources {
    pub fn new(activity: impl Into<PathBuf>, cohort: impl Into<PathBuf>) -> Self {
        Self { activity: activity.into(), cohort: cohort.into(), mapping: None, cohort_meta: None }
    }

    pub fn with_mapping(mut self, mapping: Option<PathBuf>) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn meta_path(&self) -> Option<PathBuf> {
        self.cohort_meta.clone().or_else(|| {
            let mut companion = self.cohort.clone().into_os_string();
            companion.push(".meta");
            let companion = PathBuf::from(companion);
            companion.is_file().then_some(companion)
        })
    }

    pub fn mapping_config(&self) -> Result<MappingConfig, IngestError> {
        let canonical: Vec<&str> = ACTIVITY_COLUMNS.iter().chain(COHORT_COLUMNS.iter()).copied().collect();
        match &self.mapping {
            Some(path) => MappingConfig::load(path, &canonical),
            None => Ok(MappingConfig::default()),
        }
    }
}

/// Accounting for one ingest.
///
/// `rows_read = rows_kept + rows_deduplicated + rows_rejected` always holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_kept: u64,
    pub rows_deduplicated: u64,
    pub rows_rejected: u64,
    pub rejections: Vec<RowRejection>,
    pub students_built: u64,
    pub profile_issues: Vec<ProfileIssue>,
    /// NOT_INFORMED counts per attribute over kept rows.
    pub missing_field_counts: BTreeMap<String, u64>,
    pub cohort_rows_read: u64,
    pub cohorts_built: u64,
    pub cohort_rejections: Vec<CohortRejection>,
}

impl IngestReport {
    pub fn conflicts(&self) -> impl Iterator<Item = &ProfileIssue> {
        self.profile_issues.iter().filter(|i| !i.is_rejection())
    }
}

/// Immutable, versioned view of all ingested data.
#[derive(Debug)]
pub struct Snapshot {
    version: u64,
    rows: Vec<EnrollmentRow>,
    students: Vec<StudentProfile>,
    academics: Vec<StudentAcademics>,
    student_rows: Vec<Vec<usize>>,
    cohorts: Vec<CohortFlow>,
    reference: ReferenceConfig,
    report: IngestReport,
}

impl Snapshot {
    pub fn from_tables(
        mut activity: ActivityTable,
        cohorts: CohortTable,
        situations: &SituationMapping,
        reference: ReferenceConfig,
        version: u64,
    ) -> Self {
        let (students, issues) = build_profiles(&activity.rows, situations);

        // Rows of students that could not be built leave the snapshot as rejects.
        let unbuilt: HashMap<(&str, &str), &str> = issues
            .iter()
            .filter_map(|issue| match issue {
                ProfileIssue::UnmappedSituation { student_id, course_id, raw } => {
                    Some(((course_id.as_str(), student_id.as_str()), raw.as_str()))
                }
                ProfileIssue::AttributeConflict { .. } => None,
            })
            .collect();
        if !unbuilt.is_empty() {
            let mut rows = Vec::with_capacity(activity.rows.len());
            let mut lines = Vec::with_capacity(activity.rows.len());
            for (row, line) in activity.rows.drain(..).zip(activity.lines.drain(..)) {
                match unbuilt.get(&(row.course_id.as_str(), row.student_id.as_str())) {
                    Some(raw) => activity.rejections.push(RowRejection {
                        line,
                        reason: format!(
                            "student {} in course {}: unmapped situation `{raw}`",
                            row.student_id, row.course_id
                        ),
                    }),
                    None => {
                        rows.push(row);
                        lines.push(line);
                    }
                }
            }
            activity.rows = rows;
            activity.lines = lines;
        }
        activity.rejections.sort_by_key(|r| r.line);

        let index: HashMap<(&str, &str), usize> = students
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.course_id.as_str(), s.student_id.as_str()), i))
            .collect();
        let mut student_rows = vec![Vec::new(); students.len()];
        for (i, row) in activity.rows.iter().enumerate() {
            let student = index[&(row.course_id.as_str(), row.student_id.as_str())];
            student_rows[student].push(i);
        }
        let academics = student_rows
            .iter()
            .map(|rows| StudentAcademics::from_rows(rows.iter().map(|&i| &activity.rows[i])))
            .collect();

        let report = IngestReport {
            rows_read: activity.rows_read,
            rows_kept: activity.rows.len() as u64,
            rows_deduplicated: activity.rows_deduplicated,
            rows_rejected: activity.rows_rejected(),
            missing_field_counts: activity.missing_field_counts(),
            rejections: activity.rejections,
            students_built: students.len() as u64,
            profile_issues: issues,
            cohort_rows_read: cohorts.rows_read,
            cohorts_built: cohorts.cohorts.len() as u64,
            cohort_rejections: cohorts.rejections,
        };
        debug_assert_eq!(
            report.rows_read,
            report.rows_kept + report.rows_deduplicated + report.rows_rejected
        );
        Snapshot {
            version,
            rows: activity.rows,
            students,
            academics,
            student_rows,
            cohorts: cohorts.cohorts,
            reference,
            report,
        }
    }

    pub fn from_readers(
        activity: impl Read,
        cohort: impl Read,
        mapping: &MappingConfig,
        reference: ReferenceConfig,
        version: u64,
    ) -> Result<Self, IngestError> {
        let activity = parse_activity_table(activity, mapping)?;
        let cohorts = parse_cohort_table(cohort, mapping)?;
        Ok(Self::from_tables(activity, cohorts, &mapping.situations, reference, version))
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rows(&self) -> &[EnrollmentRow] {
        &self.rows
    }

    /// Students sorted by course and student id.
    pub fn students(&self) -> &[StudentProfile] {
        &self.students
    }

    /// Per-student metrics, aligned with [`Snapshot::students`].
    pub fn academics(&self) -> &[StudentAcademics] {
        &self.academics
    }

    pub fn student_rows(&self, student: usize) -> impl Iterator<Item = &EnrollmentRow> + '_ {
        self.student_rows[student].iter().map(move |&i| &self.rows[i])
    }

    pub fn cohorts(&self) -> &[CohortFlow] {
        &self.cohorts
    }

    pub fn reference(&self) -> &ReferenceConfig {
        &self.reference
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    /// Distinct course ids, sorted.
    pub fn courses(&self) -> Vec<&str> {
        let unique: BTreeSet<&str> = self.students.iter().map(|s| s.course_id.as_str()).collect();
        unique.into_iter().collect()
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io { path: path.to_owned(), source })
}

/// Reads both tables and builds a snapshot with the given version. Either
/// the whole snapshot is produced or an error is returned.
pub fn build_snapshot(sources: &DataSources, version: u64) -> Result<Snapshot, IngestError> {
    let mapping = sources.mapping_config()?;
    let reference = match sources.meta_path() {
        Some(path) => ReferenceConfig::load(&path)?,
        None => ReferenceConfig::default(),
    };
    Snapshot::from_readers(open(&sources.activity)?, open(&sources.cohort)?, &mapping, reference, version)
}

/// Holder of the current snapshot. Readers take a cheap reference that stays
/// valid across reloads; a reload publishes a complete new snapshot in one
/// atomic swap, or leaves the current one in place on failure.
#[derive(Debug)]
pub struct SnapshotStore {
    current: ArcSwap<Snapshot>,
    reloading: Mutex<()>,
}

impl SnapshotStore {
    pub fn new(initial: Snapshot) -> Self {
        Self { current: ArcSwap::from_pointee(initial), reloading: Mutex::new(()) }
    }

    /// Builds the first snapshot (version 1).
    pub fn open(sources: &DataSources) -> Result<Self, IngestError> {
        build_snapshot(sources, 1).map(Self::new)
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.current.load_full()
    }

    pub fn version(&self) -> u64 {
        self.current.load().version()
    }

    /// Builds the next version with `build` and publishes it on success.
    pub fn reload_with<E>(
        &self,
        build: impl FnOnce(u64) -> Result<Snapshot, E>,
    ) -> Result<Arc<Snapshot>, E> {
        let _guard = self.reloading.lock().unwrap_or_else(|e| e.into_inner());
        let next = Arc::new(build(self.version() + 1)?);
        self.current.store(Arc::clone(&next));
        Ok(next)
    }

    pub fn reload(&self, sources: &DataSources) -> Result<Arc<Snapshot>, IngestError> {
        self.reload_with(|version| build_snapshot(sources, version))
    }
}
