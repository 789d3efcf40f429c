// SPDX-License-Identifier: Apache-2.0

//! Student retention analytics.
//!
//! The crate turns two tabular inputs into an immutable [`Snapshot`]:
//!
//! * an activity table where every line is one discipline taken by one
//!   student in one term, and
//! * a cohort-flow table tracking, year by year, how many entrants of a class
//!   withdrew, transferred or died.
//!
//! On top of a snapshot, [`metrics`] provides the per-cohort accumulated
//! withdrawal rate and the per-student performance coefficient, and
//! [`query`] produces the filtered aggregates behind each dashboard chart.
//! [`fixtures`] generates deterministic synthetic inputs together with a
//! brute-force ground truth used by the test suites.

pub mod decimal;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod percent;
pub mod query;

pub use decimal::FixedDecimal;
pub use error::{IngestError, MetricError, QueryError};
pub use ingest::{
    build_profiles, build_snapshot, parse_activity_table, parse_cohort_table, Attribute,
    CohortFlow, CohortScope, MappingConfig, CourseResult, DataSources, EnrollmentRow,
    IngestReport, ReferenceConfig, Situation, SituationMapping, Snapshot, SnapshotStore,
    StudentProfile, NOT_INFORMED,
};
pub use metrics::{StudentAcademics, TdaSeries};
pub use percent::Percent;
pub use query::{Distribution, DistributionEntry, FilterSet};
