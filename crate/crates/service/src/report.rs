// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use retention_core::query::{
    self, CategoryGroup, CourseCount, CrMode, DatasetMeta, DisciplineOrder, DisciplineRanking, Distribution,
    FailureBin, FailureKind, RankOrder, TdaHistogram, DEFAULT_RANKING_LIMIT,
};
use retention_core::{Attribute, FilterSet, QueryError, Situation, Snapshot};
use serde::Serialize;

pub const DEFAULT_DISCIPLINE_LIMIT: usize = 10;

/// Report paths relative to the API prefix, in router order.
pub const REPORT_PATHS: [&str; 9] = [
    "meta",
    "overview/situations",
    "overview/course-ranking",
    "tda/histogram",
    "dropouts/attendance-bands",
    "dropouts/cr-bands",
    "dropouts/failure-histogram",
    "dropouts/categories",
    "disciplines/ranking",
];

/// One validated query, shared by the HTTP endpoints and the CLI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Report {
    Meta,
    Situations(FilterSet),
    CourseRanking { situation: Situation, order: RankOrder, limit: usize },
    TdaHistogram,
    AttendanceBands { course: Option<String> },
    CrBands { course: Option<String>, mode: CrMode },
    FailureHistogram { course: Option<String>, kind: FailureKind },
    Categories { group: CategoryGroup, attribute: Attribute, course: Option<String> },
    DisciplineRanking { course: Option<String>, order: DisciplineOrder, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ReportOutput {
    Meta(DatasetMeta),
    Distribution(Distribution),
    CourseRanking(Vec<CourseCount>),
    Tda(TdaHistogram),
    Failures(Vec<FailureBin>),
    Disciplines(DisciplineRanking),
}

struct Params<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn new(pairs: &'a [(String, String)]) -> Result<Self, QueryError> {
        let mut seen = BTreeSet::new();
        for (key, _) in pairs {
            if !seen.insert(key.as_str()) {
                return Err(invalid(key, "given more than once"));
            }
        }
        Ok(Self { pairs: pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect() })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        let i = self.pairs.iter().position(|(k, _)| *k == key)?;
        Some(self.pairs.remove(i).1)
    }

    fn parse<T: std::str::FromStr<Err = QueryError>>(&mut self, key: &str, default: T) -> Result<T, QueryError> {
        self.take(key).map_or(Ok(default), str::parse)
    }

    fn required(&mut self, key: &'static str) -> Result<&'a str, QueryError> {
        self.take(key).ok_or_else(|| invalid(key, "is required"))
    }

    fn limit(&mut self, default: usize) -> Result<usize, QueryError> {
        match self.take("limit") {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|_| invalid("limit", &format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn course(&mut self) -> Option<String> {
        self.take("course").or_else(|| self.take("course_id")).map(|c| c.trim().to_owned()).filter(|c| !c.is_empty())
    }

    fn finish(self) -> Result<(), QueryError> {
        match self.pairs.first() {
            None => Ok(()),
            Some((key, _)) => Err(invalid(key, "is not a parameter of this report")),
        }
    }
}

fn invalid(name: &str, message: &str) -> QueryError {
    QueryError::InvalidArgument { name: name.to_owned(), message: message.to_owned() }
}

impl Report {
    /// Validates `params` for the report at `path` (one of [`REPORT_PATHS`]).
    /// Keyword values are case-insensitive; unknown parameters are errors.
    pub fn parse(path: &str, params: &[(String, String)]) -> Result<Self, QueryError> {
        let mut p = Params::new(params)?;
        let report = match path {
            "meta" => Report::Meta,
            "overview/situations" => {
                let filter = FilterSet::from_pairs(p.pairs.drain(..).filter(|(_, v)| !v.trim().is_empty()))?;
                Report::Situations(filter)
            }
            "overview/course-ranking" => Report::CourseRanking {
                situation: p.parse("situation", Situation::Dropout)?,
                order: p.parse("order", RankOrder::Top)?,
                limit: p.limit(DEFAULT_RANKING_LIMIT)?,
            },
            "tda/histogram" => Report::TdaHistogram,
            "dropouts/attendance-bands" => Report::AttendanceBands { course: p.course() },
            "dropouts/cr-bands" => Report::CrBands { course: p.course(), mode: p.parse("mode", CrMode::Percent)? },
            "dropouts/failure-histogram" => {
                Report::FailureHistogram { course: p.course(), kind: p.parse("kind", FailureKind::All)? }
            }
            "dropouts/categories" => {
                let group: CategoryGroup = p.required("group")?.parse()?;
                let attribute = group.resolve(p.required("index")?)?;
                Report::Categories { group, attribute, course: p.course() }
            }
            "disciplines/ranking" => Report::DisciplineRanking {
                course: p.course(),
                order: p.parse("order", DisciplineOrder::Highest)?,
                limit: p.limit(DEFAULT_DISCIPLINE_LIMIT)?,
            },
            other => return Err(invalid("report", &format!("unknown report `{other}`"))),
        };
        p.finish()?;
        // Data-independent range check.
        if let Report::DisciplineRanking { limit, .. } = report {
            check_discipline_limit(limit)?;
        }
        Ok(report)
    }

    pub fn run(&self, snapshot: &Snapshot) -> Result<ReportOutput, QueryError> {
        Ok(match self {
            Report::Meta => ReportOutput::Meta(query::dataset_meta(snapshot)),
            Report::Situations(filter) => ReportOutput::Distribution(query::situation_counts(snapshot, filter)),
            Report::CourseRanking { situation, order, limit } => {
                ReportOutput::CourseRanking(query::course_situation_ranking(snapshot, *situation, *order, *limit)?)
            }
            Report::TdaHistogram => ReportOutput::Tda(query::tda_histogram(snapshot)),
            Report::AttendanceBands { course } => {
                ReportOutput::Distribution(query::attendance_bands(snapshot, course.as_deref()))
            }
            Report::CrBands { course, mode } => {
                ReportOutput::Distribution(query::cr_bands(snapshot, course.as_deref(), *mode))
            }
            Report::FailureHistogram { course, kind } => {
                ReportOutput::Failures(query::failure_histogram(snapshot, course.as_deref(), *kind))
            }
            Report::Categories { group, attribute, course } => {
                ReportOutput::Distribution(query::category_breakdown(snapshot, *group, *attribute, course.as_deref())?)
            }
            Report::DisciplineRanking { course, order, limit } => {
                ReportOutput::Disciplines(query::discipline_failure_ranking(snapshot, course.as_deref(), *order, *limit)?)
            }
        })
    }
}

fn check_discipline_limit(limit: usize) -> Result<(), QueryError> {
    if query::DISCIPLINE_LIMIT_RANGE.contains(&limit) {
        Ok(())
    } else {
        let (lo, hi) = (query::DISCIPLINE_LIMIT_RANGE.start(), query::DISCIPLINE_LIMIT_RANGE.end());
        Err(invalid("limit", &format!("limit must be between {lo} and {hi}, got {limit}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        assert_eq!(
            Report::parse("overview/course-ranking", &[]).unwrap(),
            Report::CourseRanking { situation: Situation::Dropout, order: RankOrder::Top, limit: 15 }
        );
        assert_eq!(
            Report::parse("disciplines/ranking", &[]).unwrap(),
            Report::DisciplineRanking { course: None, order: DisciplineOrder::Highest, limit: 10 }
        );
        assert_eq!(Report::parse("overview/situations", &[]).unwrap(), Report::Situations(FilterSet::default()));
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let report = Report::parse("dropouts/failure-histogram", &params(&[("kind", "Grade"), ("course", "C1")])).unwrap();
        assert_eq!(report, Report::FailureHistogram { course: Some("C1".into()), kind: FailureKind::Grade });
        let report = Report::parse("overview/course-ranking", &params(&[("situation", "IN_PROGRESS"), ("order", "Bottom")])).unwrap();
        assert!(matches!(report, Report::CourseRanking { situation: Situation::InProgress, order: RankOrder::Bottom, .. }));
    }

    #[test]
    fn rejects_bad_input() {
        for (path, pairs) in [
            ("disciplines/ranking", vec![("limit", "4")]),
            ("disciplines/ranking", vec![("limit", "21")]),
            ("disciplines/ranking", vec![("limit", "ten")]),
            ("dropouts/cr-bands", vec![("mode", "relative")]),
            ("dropouts/categories", vec![("group", "academic")]),
            ("dropouts/categories", vec![("group", "academic"), ("index", "birth_city")]),
            ("overview/situations", vec![("colour", "red")]),
            ("overview/situations", vec![("entry_year", "soon")]),
            ("tda/histogram", vec![("course", "C1")]),
            ("overview/course-ranking", vec![("order", "top"), ("order", "bottom")]),
            ("nowhere", vec![]),
        ] {
            assert!(Report::parse(path, &params(&pairs)).is_err(), "{path} {pairs:?}");
        }
        let err = Report::parse("disciplines/ranking", &params(&[("limit", "4")])).unwrap_err();
        assert!(err.to_string().contains("limit must be between 5 and 20, got 4"), "{err}");
    }

    #[test]
    fn empty_filter_values_are_unconstrained() {
        let report = Report::parse("overview/situations", &params(&[("course", ""), ("quota_type", "none")])).unwrap();
        let Report::Situations(filter) = report else { panic!() };
        assert_eq!(filter.course_id, None);
        assert_eq!(filter.quota_type.as_deref(), Some("none"));
    }
}
