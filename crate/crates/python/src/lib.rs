// SPDX-License-Identifier: Apache-2.0

//! Python module `retention`: metric kernels, snapshot queries and the
//! fixture generator.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use retention_core::fixtures::{generate, FixtureSpec};
use retention_core::ingest::CohortYear;
use retention_core::metrics::{compute_cr, compute_tda_series};
use retention_core::{
    build_snapshot, CohortFlow, CohortScope, CourseResult, DataSources, EnrollmentRow, FixedDecimal, MappingConfig,
    ReferenceConfig, Snapshot,
};
use retention_service::Report;

create_exception!(retention, IngestError, PyValueError);
create_exception!(retention, QueryError, PyValueError);
create_exception!(retention, MetricError, PyValueError);

fn json(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn flow(entrants: u64, years: Vec<(u64, u64, u64)>) -> PyResult<CohortFlow> {
    let years = years.into_iter().map(|(withdrawals, transfers, deaths)| CohortYear { withdrawals, transfers, deaths }).collect();
    CohortFlow::new("python", CohortScope::InstitutionCourse, 0, entrants, years).map_err(PyValueError::new_err)
}

/// TDA per year in percent, rounded to one decimal.
/// `years` holds `(withdrawals, transfers, deaths)` per year.
#[pyfunction]
fn tda(entrants: u64, years: Vec<(u64, u64, u64)>) -> PyResult<Vec<f64>> {
    let series = compute_tda_series(&flow(entrants, years)?).map_err(|e| MetricError::new_err(e.to_string()))?;
    Ok(series.percents().iter().map(|p| p.rounded()).collect())
}

/// TDA per year as exact `(numerator, denominator)` percent fractions.
#[pyfunction]
fn tda_exact(entrants: u64, years: Vec<(u64, u64, u64)>) -> PyResult<Vec<(u64, u64)>> {
    let series = compute_tda_series(&flow(entrants, years)?).map_err(|e| MetricError::new_err(e.to_string()))?;
    Ok(series.rates().iter().map(|r| (*r.numer(), *r.denom())).collect())
}

fn grade_rows(rows: Vec<(Bound<'_, PyAny>, u32)>) -> PyResult<Vec<EnrollmentRow>> {
    rows.into_iter()
        .map(|(grade, credits)| {
            let text = grade.str()?.to_string();
            let grade = FixedDecimal::parse(&text).map_err(|e| PyValueError::new_err(format!("grade `{text}`: {e}")))?;
            Ok(EnrollmentRow {
                student_id: String::new(),
                course_id: String::new(),
                discipline_id: String::new(),
                year: 0,
                term: 1,
                grade,
                credits,
                attendance_pct: FixedDecimal::from_int(0),
                result: CourseResult::Approved,
                entry_year: 0,
                situation_raw: String::new(),
                attributes: Default::default(),
            })
        })
        .collect()
}

/// Credit-weighted mean grade of `(grade, credits)` pairs as an exact
/// `(numerator, denominator)`; `None` without credits.
#[pyfunction]
fn cr_exact(rows: Vec<(Bound<'_, PyAny>, u32)>) -> PyResult<Option<(u64, u64)>> {
    Ok(compute_cr(&grade_rows(rows)?).map(|r| (*r.numer(), *r.denom())))
}

#[pyfunction]
fn cr(rows: Vec<(Bound<'_, PyAny>, u32)>) -> PyResult<Option<f64>> {
    Ok(cr_exact(rows)?.map(|(n, d)| n as f64 / d as f64))
}

/// Writes a synthetic dataset and returns the written paths.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=1, students=None, courses=None, corruption_rate=None))]
fn generate_fixtures(
    py: Python<'_>,
    out_dir: PathBuf,
    seed: u64,
    students: Option<usize>,
    courses: Option<usize>,
    corruption_rate: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let mut spec = FixtureSpec::with_seed(seed);
    spec.students = students.unwrap_or(spec.students);
    spec.courses = courses.unwrap_or(spec.courses);
    spec.corruption_rate = corruption_rate.unwrap_or(spec.corruption_rate);
    let paths = generate(&spec).write(&out_dir).map_err(|e| PyOSError::new_err(e.to_string()))?;
    let dict = PyDict::new(py);
    dict.set_item("activity", paths.activity)?;
    dict.set_item("cohort", paths.cohort)?;
    dict.set_item("cohort_meta", paths.cohort_meta)?;
    dict.set_item("manifest", paths.manifest)?;
    Ok(dict.into_any().unbind())
}

/// Immutable ingested dataset. Query results are plain dicts and lists
/// with the same shape as the HTTP API payloads.
#[pyclass(name = "Snapshot", module = "retention", frozen)]
struct PySnapshot {
    inner: Arc<Snapshot>,
}

fn params(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<(String, String)>> {
    let Some(kwargs) = kwargs else { return Ok(Vec::new()) };
    kwargs
        .iter()
        .filter(|(_, v)| !v.is_none())
        .map(|(k, v)| Ok((k.str()?.to_string(), v.str()?.to_string())))
        .collect()
}

impl PySnapshot {
    fn run(&self, py: Python<'_>, path: &str, params: Vec<(String, String)>) -> PyResult<Py<PyAny>> {
        let report = Report::parse(path, &params).map_err(|e| QueryError::new_err(e.to_string()))?;
        let output = report.run(&self.inner).map_err(|e| QueryError::new_err(e.to_string()))?;
        json(py, &output)
    }
}

fn pairs<const N: usize>(items: [(&str, Option<String>); N]) -> Vec<(String, String)> {
    items.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_owned(), v))).collect()
}

#[pymethods]
impl PySnapshot {
    #[staticmethod]
    #[pyo3(signature = (activity, cohort, mapping=None, cohort_meta=None))]
    fn load(activity: PathBuf, cohort: PathBuf, mapping: Option<PathBuf>, cohort_meta: Option<PathBuf>) -> PyResult<Self> {
        let mut sources = DataSources::new(activity, cohort).with_mapping(mapping);
        sources.cohort_meta = cohort_meta;
        let snapshot = build_snapshot(&sources, 1).map_err(|e| IngestError::new_err(e.to_string()))?;
        Ok(Self { inner: Arc::new(snapshot) })
    }

    /// Ingests CSV text directly, with default mapping and no reference values.
    #[staticmethod]
    fn from_csv(activity: &str, cohort: &str) -> PyResult<Self> {
        let snapshot = Snapshot::from_readers(
            activity.as_bytes(),
            cohort.as_bytes(),
            &MappingConfig::default(),
            ReferenceConfig::default(),
            1,
        )
        .map_err(|e| IngestError::new_err(e.to_string()))?;
        Ok(Self { inner: Arc::new(snapshot) })
    }

    #[getter]
    fn version(&self) -> u64 {
        self.inner.version()
    }

    fn __len__(&self) -> usize {
        self.inner.students().len()
    }

    fn __repr__(&self) -> String {
        let r = self.inner.report();
        format!("Snapshot(version={}, students={}, rows_kept={}, cohorts={})", self.inner.version(), r.students_built, r.rows_kept, r.cohorts_built)
    }

    fn ingest_report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json(py, self.inner.report())
    }

    /// Any report by its API path, e.g. `query("dropouts/cr-bands", mode="absolute")`.
    #[pyo3(signature = (path, **params))]
    fn query(&self, py: Python<'_>, path: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
        self.run(py, path, self::params(params)?)
    }

    fn meta(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        self.run(py, "meta", Vec::new())
    }

    #[pyo3(signature = (**filters))]
    fn situations(&self, py: Python<'_>, filters: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
        self.run(py, "overview/situations", params(filters)?)
    }

    #[pyo3(signature = (situation=None, order=None, limit=None))]
    fn course_ranking(&self, py: Python<'_>, situation: Option<String>, order: Option<String>, limit: Option<usize>) -> PyResult<Py<PyAny>> {
        let p = pairs([("situation", situation), ("order", order), ("limit", limit.map(|l| l.to_string()))]);
        self.run(py, "overview/course-ranking", p)
    }

    fn tda_histogram(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        self.run(py, "tda/histogram", Vec::new())
    }

    #[pyo3(signature = (course=None))]
    fn attendance_bands(&self, py: Python<'_>, course: Option<String>) -> PyResult<Py<PyAny>> {
        self.run(py, "dropouts/attendance-bands", pairs([("course", course)]))
    }

    #[pyo3(signature = (course=None, mode=None))]
    fn cr_bands(&self, py: Python<'_>, course: Option<String>, mode: Option<String>) -> PyResult<Py<PyAny>> {
        self.run(py, "dropouts/cr-bands", pairs([("course", course), ("mode", mode)]))
    }

    #[pyo3(signature = (course=None, kind=None))]
    fn failure_histogram(&self, py: Python<'_>, course: Option<String>, kind: Option<String>) -> PyResult<Py<PyAny>> {
        self.run(py, "dropouts/failure-histogram", pairs([("course", course), ("kind", kind)]))
    }

    #[pyo3(signature = (group, index, course=None))]
    fn categories(&self, py: Python<'_>, group: String, index: Bound<'_, PyAny>, course: Option<String>) -> PyResult<Py<PyAny>> {
        let index = index.str()?.to_string();
        self.run(py, "dropouts/categories", pairs([("group", Some(group)), ("index", Some(index)), ("course", course)]))
    }

    #[pyo3(signature = (course=None, order=None, limit=None))]
    fn disciplines(&self, py: Python<'_>, course: Option<String>, order: Option<String>, limit: Option<usize>) -> PyResult<Py<PyAny>> {
        let p = pairs([("course", course), ("order", order), ("limit", limit.map(|l| l.to_string()))]);
        self.run(py, "disciplines/ranking", p)
    }
}

#[pymodule]
fn retention(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tda, m)?)?;
    m.add_function(wrap_pyfunction!(tda_exact, m)?)?;
    m.add_function(wrap_pyfunction!(cr, m)?)?;
    m.add_function(wrap_pyfunction!(cr_exact, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixtures, m)?)?;
    m.add_class::<PySnapshot>()?;
    let py = m.py();
    m.add("IngestError", py.get_type::<IngestError>())?;
    m.add("QueryError", py.get_type::<QueryError>())?;
    m.add("MetricError", py.get_type::<MetricError>())?;
    Ok(())
}
