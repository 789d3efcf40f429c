// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic inputs with a ground-truth manifest.
//!
//! The generator decides every student, row and cohort flow in integer
//! units (grades and attendance in tenths), renders them as activity and
//! cohort tables, and records the truth alongside. Duplicated and corrupted
//! lines are injected on purpose and listed in the manifest. [`oracle`]
//! recomputes every aggregate from the truth with plain loops, without going
//! through the ingest, metrics or query code.

pub mod oracle;
pub mod verify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::ingest::{Attribute, CourseResult, MappingConfig, ReferenceConfig, Situation, Snapshot, ACTIVITY_COLUMNS, COHORT_COLUMNS, NOT_INFORMED};

/// Settings of one synthetic data set. Equal specs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub seed: u64,
    pub students: usize,
    pub courses: usize,
    pub disciplines_per_course: usize,
    pub max_rows_per_student: usize,
    /// Probability that a clean row gets a corrupted sibling line.
    pub corruption_rate: f64,
    /// Probability that a clean row is written twice.
    pub duplicate_rate: f64,
    /// Weights for Graduated, InProgress, Dropout, Deceased.
    pub situation_mix: [f64; 4],
    pub income_missing_rate: f64,
    pub missing_rate: f64,
    /// Number of progression years per cohort.
    pub cohort_years: usize,
    /// Category values per attribute column.
    pub vocabularies: BTreeMap<String, Vec<String>>,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 1,
            students: 120,
            courses: 5,
            disciplines_per_course: 8,
            max_rows_per_student: 9,
            corruption_rate: 0.04,
            duplicate_rate: 0.03,
            situation_mix: [0.3, 0.25, 0.4, 0.05],
            income_missing_rate: 0.8,
            missing_rate: 0.08,
            cohort_years: 7,
            vocabularies: default_vocabularies(),
        }
    }
}

impl FixtureSpec {
    pub fn with_seed(seed: u64) -> Self {
        FixtureSpec { seed, ..FixtureSpec::default() }
    }
}

fn default_vocabularies() -> BTreeMap<String, Vec<String>> {
    let table: [(Attribute, &[&str]); 11] = [
        (Attribute::IncomeBand, &["up to 0.5 MW", "0.5 to 1 MW", "1 to 1.5 MW", "1.5 to 3 MW", "above 3 MW"]),
        (
            Attribute::BirthCity,
            &[
                "Vitoria", "Vila Velha", "Serra", "Cariacica", "Guarapari", "Linhares", "Colatina",
                "Cachoeiro de Itapemirim", "Sao Mateus", "Aracruz", "Rio de Janeiro", "Belo Horizonte",
            ],
        ),
        (Attribute::BirthState, &["ES", "MG", "RJ", "BA", "SP", "RS", "PR"]),
        (Attribute::Nationality, &["Brazilian", "Angolan", "Colombian"]),
        (
            Attribute::QuotaType,
            &["none", "public_school", "public_school_low_income", "ppi", "ppi_low_income", "disability"],
        ),
        (Attribute::HighSchoolType, &["public", "private", "federal", "mixed"]),
        (
            Attribute::AdmissionForm,
            &["sisu", "vestibular", "transfer", "graduate_entry", "court_order", "international_agreement"],
        ),
        (Attribute::Housing, &["family", "rented", "student_housing", "own", "shared"]),
        (Attribute::Employment, &["none", "part_time", "full_time", "intern"]),
        (Attribute::UniversityAid, &["none", "food", "transport", "housing_aid", "full"]),
        (Attribute::StudyPlan, &["none", "active", "completed"]),
    ];
    table
        .iter()
        .map(|(a, values)| (a.column().to_owned(), values.iter().map(|v| v.to_string()).collect()))
        .collect()
}

/// Raw spellings written for each situation; all are in the default mapping.
fn situation_spellings(situation: Situation) -> &'static [&'static str] {
    match situation {
        Situation::Graduated => &["graduated", "Formado", "CONCLUIDO"],
        Situation::InProgress => &["active", "Matriculado", "enrolled"],
        Situation::Dropout => &["dropout", "Desistente", "transferred", "CANCELADO", "abandoned"],
        Situation::Deceased => &["deceased", "Falecido"],
    }
}

const MISSING_SPELLINGS: [&str; 5] = ["", "NA", "-", "null", NOT_INFORMED];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corruption {
    GradeOutOfRange,
    NegativeGrade,
    AttendanceOutOfRange,
    ZeroCredits,
    BadTerm,
    BadYear,
    MissingField,
    UnknownResult,
    EmptyStudentId,
}

impl Corruption {
    const ALL: [Corruption; 9] = [
        Corruption::GradeOutOfRange,
        Corruption::NegativeGrade,
        Corruption::AttendanceOutOfRange,
        Corruption::ZeroCredits,
        Corruption::BadTerm,
        Corruption::BadYear,
        Corruption::MissingField,
        Corruption::UnknownResult,
        Corruption::EmptyStudentId,
    ];

    fn apply(self, fields: &mut Vec<String>) {
        match self {
            Corruption::GradeOutOfRange => fields[5] = "11.0".into(),
            Corruption::NegativeGrade => fields[5] = "-0.5".into(),
            Corruption::AttendanceOutOfRange => fields[7] = "150".into(),
            Corruption::ZeroCredits => fields[6] = "0".into(),
            Corruption::BadTerm => fields[4] = "3".into(),
            Corruption::BadYear => fields[3] = "20x1".into(),
            Corruption::MissingField => {
                fields.pop();
            }
            Corruption::UnknownResult => fields[8] = "passed".into(),
            Corruption::EmptyStudentId => fields[0] = String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub discipline_id: String,
    pub year: i32,
    pub term: u8,
    pub grade_tenths: u64,
    pub credits: u64,
    pub attendance_tenths: u64,
    pub result: CourseResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthStudent {
    pub student_id: String,
    pub course_id: String,
    pub entry_year: i32,
    pub situation: Situation,
    /// Normalized attribute values by column name.
    pub attributes: BTreeMap<String, String>,
    pub rows: Vec<TruthRow>,
    /// Credit-weighted mean grade, unreduced.
    pub cr: Option<Fraction>,
    /// Mean attendance percentage, unreduced.
    pub attendance_mean: Option<Fraction>,
    pub failures_by_grade: u64,
    pub failures_by_frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthCohort {
    pub course_name: String,
    pub scope: String,
    pub entry_year: i32,
    pub entrants: u64,
    /// (withdrawals, transfers, deaths) per progression year.
    pub years: Vec<(u64, u64, u64)>,
    pub tda_numerators: Vec<u64>,
    pub tda_denominators: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptedLine {
    pub line: u64,
    pub kind: Corruption,
}

/// Ground truth written next to the generated tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: FixtureSpec,
    pub rows_read: u64,
    pub rows_kept: u64,
    pub rows_deduplicated: u64,
    pub rows_rejected: u64,
    pub corrupted_lines: Vec<CorruptedLine>,
    pub students: Vec<TruthStudent>,
    pub cohorts: Vec<TruthCohort>,
    pub state_avg: f64,
    pub expected: oracle::Expectations,
}

/// Generated tables and their manifest.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub activity_csv: String,
    pub cohort_csv: String,
    pub cohort_meta: String,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePaths {
    pub activity: PathBuf,
    pub cohort: PathBuf,
    pub cohort_meta: PathBuf,
    pub manifest: PathBuf,
}

impl Fixture {
    pub fn write(&self, dir: &Path) -> io::Result<FixturePaths> {
        std::fs::create_dir_all(dir)?;
        let paths = FixturePaths {
            activity: dir.join("activity.csv"),
            cohort: dir.join("cohort.csv"),
            cohort_meta: dir.join("cohort.csv.meta"),
            manifest: dir.join("manifest.json"),
        };
        std::fs::write(&paths.activity, &self.activity_csv)?;
        std::fs::write(&paths.cohort, &self.cohort_csv)?;
        std::fs::write(&paths.cohort_meta, &self.cohort_meta)?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest).map_err(io::Error::other)?;
        manifest.push('\n');
        std::fs::write(&paths.manifest, manifest)?;
        Ok(paths)
    }

    /// Ingests the generated tables in memory.
    pub fn snapshot(&self, version: u64) -> Result<Snapshot, IngestError> {
        let reference = ReferenceConfig::parse(&self.cohort_meta)?;
        Snapshot::from_readers(
            self.activity_csv.as_bytes(),
            self.cohort_csv.as_bytes(),
            &MappingConfig::default(),
            reference,
            version,
        )
    }
}

fn pick_category(rng: &mut ChaCha8Rng, values: &[String], missing_rate: f64) -> Option<String> {
    if values.is_empty() || rng.random_bool(missing_rate) {
        return None;
    }
    // Front-loaded weights so that some categories dominate.
    let weights: Vec<f64> = (0..values.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let index = WeightedIndex::new(&weights).expect("positive weights").sample(rng);
    Some(values[index].clone())
}

fn render_tenths(rng: &mut ChaCha8Rng, tenths: u64) -> String {
    if tenths.is_multiple_of(10) && rng.random_bool(0.5) {
        (tenths / 10).to_string()
    } else if rng.random_bool(0.1) {
        format!("{}.{}0", tenths / 10, tenths % 10)
    } else {
        format!("{}.{}", tenths / 10, tenths % 10)
    }
}

fn result_spelling(rng: &mut ChaCha8Rng, result: CourseResult) -> &'static str {
    let options: &[&str] = match result {
        CourseResult::Approved => &["approved", "Approved"],
        CourseResult::FailedByGrade => &["failed_by_grade", "FailedByGrade"],
        CourseResult::FailedByFrequency => &["failed_by_frequency", "FAILED_BY_FREQUENCY"],
        CourseResult::Other => &["other"],
    };
    options.choose(rng).copied().unwrap_or("other")
}

struct StudentPlan {
    truth: TruthStudent,
    situation_raw: String,
    /// Attribute value per column, `None` when not informed.
    attributes: Vec<Option<String>>,
}

fn plan_student(rng: &mut ChaCha8Rng, spec: &FixtureSpec, index: usize, course: usize) -> StudentPlan {
    let course_id = format!("C{:02}", course + 1);
    let mix = WeightedIndex::new(spec.situation_mix).expect("situation weights");
    let situation = [Situation::Graduated, Situation::InProgress, Situation::Dropout, Situation::Deceased]
        [mix.sample(rng)];
    let situation_raw = situation_spellings(situation).choose(rng).copied().unwrap_or("dropout").to_owned();
    let entry_year = rng.random_range(2010..=2016);

    let attributes: Vec<Option<String>> = Attribute::ALL
        .iter()
        .map(|a| {
            let values = spec.vocabularies.get(a.column()).map(Vec::as_slice).unwrap_or(&[]);
            let rate = if *a == Attribute::IncomeBand { spec.income_missing_rate } else { spec.missing_rate };
            pick_category(rng, values, rate)
        })
        .collect();

    // A tenth of the students sit exactly on band boundaries.
    let pinned = rng.random_bool(0.1).then(|| {
        let grade = *[50u64, 70].choose(rng).unwrap();
        let attendance = *[750u64, 900].choose(rng).unwrap();
        (grade, attendance)
    });

    let n_rows = rng.random_range(1..=spec.max_rows_per_student.max(1));
    let mut rows = Vec::with_capacity(n_rows);
    let mut slot = 0usize;
    while rows.len() < n_rows {
        let year = entry_year + (slot / 2) as i32;
        let term = (slot % 2 + 1) as u8;
        slot += 1;
        let mut pool: Vec<usize> = (0..spec.disciplines_per_course.max(1)).collect();
        pool.shuffle(rng);
        let take = rng.random_range(1..=4).min(n_rows - rows.len()).min(pool.len());
        for &d in &pool[..take] {
            let (grade_tenths, attendance_tenths) = match pinned {
                Some(p) => p,
                None => {
                    let struggling = situation == Situation::Dropout && rng.random_bool(0.5);
                    let grade = if struggling { rng.random_range(0..=60) } else { rng.random_range(30..=100) };
                    let attendance = if rng.random_bool(0.08) {
                        *[750u64, 900].choose(rng).unwrap()
                    } else if struggling {
                        rng.random_range(300..=1000)
                    } else {
                        rng.random_range(650..=1000)
                    };
                    (grade, attendance)
                }
            };
            let result = if rng.random_bool(0.03) {
                CourseResult::Other
            } else if attendance_tenths < 750 {
                CourseResult::FailedByFrequency
            } else if grade_tenths < 50 {
                CourseResult::FailedByGrade
            } else {
                CourseResult::Approved
            };
            rows.push(TruthRow {
                discipline_id: format!("{course_id}-D{:02}", d + 1),
                year,
                term,
                grade_tenths,
                credits: rng.random_range(1..=6),
                attendance_tenths,
                result,
            });
        }
    }

    let mut truth_attributes = BTreeMap::new();
    for (a, value) in Attribute::ALL.iter().zip(&attributes) {
        truth_attributes.insert(a.column().to_owned(), value.clone().unwrap_or_else(|| NOT_INFORMED.to_owned()));
    }
    let truth = oracle::summarize(TruthStudent {
        student_id: format!("S{:05}", index + 1),
        course_id,
        entry_year,
        situation,
        attributes: truth_attributes,
        rows,
        cr: None,
        attendance_mean: None,
        failures_by_grade: 0,
        failures_by_frequency: 0,
    });
    StudentPlan { truth, situation_raw, attributes }
}

fn render_row(rng: &mut ChaCha8Rng, plan: &StudentPlan, row: &TruthRow) -> Vec<String> {
    let t = &plan.truth;
    let mut fields = vec![
        t.student_id.clone(),
        t.course_id.clone(),
        row.discipline_id.clone(),
        row.year.to_string(),
        row.term.to_string(),
        render_tenths(rng, row.grade_tenths),
        row.credits.to_string(),
        render_tenths(rng, row.attendance_tenths),
        result_spelling(rng, row.result).to_owned(),
        t.entry_year.to_string(),
        plan.situation_raw.clone(),
    ];
    for value in &plan.attributes {
        fields.push(match value {
            Some(v) => v.clone(),
            None => MISSING_SPELLINGS.choose(rng).copied().unwrap_or("").to_owned(),
        });
    }
    fields
}

fn generate_cohorts(rng: &mut ChaCha8Rng, spec: &FixtureSpec) -> Vec<TruthCohort> {
    let mut cohorts = Vec::new();
    for course in 0..spec.courses {
        for (scope, entrants) in [
            ("institution", rng.random_range(40..=120u64)),
            ("national", rng.random_range(2_000..=50_000u64)),
        ] {
            let mut remaining = entrants;
            let mut years = Vec::with_capacity(spec.cohort_years);
            for _ in 0..spec.cohort_years {
                let withdrawals = rng.random_range(0..=remaining / 7);
                remaining -= withdrawals;
                let transfers = rng.random_range(0..=remaining / 12);
                remaining -= transfers;
                let deaths = if rng.random_bool(0.2) { rng.random_range(0..=remaining.min(2)) } else { 0 };
                remaining -= deaths;
                years.push((withdrawals, transfers, deaths));
            }
            cohorts.push(oracle::tda_truth(TruthCohort {
                course_name: format!("C{:02}", course + 1),
                scope: scope.to_owned(),
                entry_year: 2010,
                entrants,
                years,
                tda_numerators: Vec::new(),
                tda_denominators: Vec::new(),
            }));
        }
    }
    cohorts
}

pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let courses = spec.courses.max(1);
    let plans: Vec<StudentPlan> = (0..spec.students)
        .map(|i| {
            let course = rng.random_range(0..courses);
            plan_student(&mut rng, spec, i, course)
        })
        .collect();

    enum Kind {
        Clean,
        Duplicate,
        Corrupt(Corruption),
    }
    let mut lines: Vec<(Kind, String)> = Vec::new();
    for plan in &plans {
        for row in &plan.truth.rows {
            let fields = render_row(&mut rng, plan, row);
            if rng.random_bool(spec.duplicate_rate) {
                lines.push((Kind::Duplicate, fields.join(",")));
            }
            if rng.random_bool(spec.corruption_rate) {
                let kind = *Corruption::ALL.choose(&mut rng).unwrap();
                let mut broken = fields.clone();
                kind.apply(&mut broken);
                lines.push((Kind::Corrupt(kind), broken.join(",")));
            }
            lines.push((Kind::Clean, fields.join(",")));
        }
    }
    lines.shuffle(&mut rng);

    let mut activity_csv = ACTIVITY_COLUMNS.join(",");
    activity_csv.push('\n');
    let mut corrupted_lines = Vec::new();
    let (mut kept, mut duplicated) = (0u64, 0u64);
    for (i, (kind, line)) in lines.iter().enumerate() {
        match kind {
            Kind::Clean => kept += 1,
            Kind::Duplicate => duplicated += 1,
            Kind::Corrupt(kind) => corrupted_lines.push(CorruptedLine { line: i as u64 + 2, kind: *kind }),
        }
        activity_csv.push_str(line);
        activity_csv.push('\n');
    }

    let cohorts = generate_cohorts(&mut rng, spec);
    let mut cohort_csv = COHORT_COLUMNS.join(",");
    cohort_csv.push('\n');
    for cohort in &cohorts {
        for (i, (w, t, d)) in cohort.years.iter().enumerate() {
            let _ = writeln!(
                cohort_csv,
                "{},{},{},{},{w},{t},{d},{}",
                cohort.course_name,
                cohort.scope,
                cohort.entry_year,
                i + 1,
                cohort.entrants
            );
        }
    }
    let state_avg = f64::from(rng.random_range(300..=700u32)) / 10.0;
    let cohort_meta = format!("# reference lines not derivable from the cohort table\nstate_avg={state_avg:.1}\n");

    let students: Vec<TruthStudent> = {
        let mut s: Vec<TruthStudent> = plans.into_iter().map(|p| p.truth).collect();
        s.sort_by(|a, b| (&a.course_id, &a.student_id).cmp(&(&b.course_id, &b.student_id)));
        s
    };
    let expected = oracle::Expectations::compute(&students, &cohorts, state_avg);
    let manifest = Manifest {
        spec: spec.clone(),
        rows_read: lines.len() as u64,
        rows_kept: kept,
        rows_deduplicated: duplicated,
        rows_rejected: corrupted_lines.len() as u64,
        corrupted_lines,
        students,
        cohorts,
        state_avg,
        expected,
    };
    Fixture { activity_csv, cohort_csv, cohort_meta, manifest }
}
