// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use retention_core::ingest::{ACTIVITY_COLUMNS, COHORT_COLUMNS};
use retention_core::{MappingConfig, ReferenceConfig, Snapshot};

/// One activity line with sensible defaults; callers override fields.
#[derive(Clone)]
pub struct Line {
    pub student: String,
    pub course: String,
    pub discipline: String,
    pub year: i32,
    pub term: u8,
    pub grade: String,
    pub credits: u32,
    pub attendance: String,
    pub result: String,
    pub situation: String,
    pub income: String,
    pub city: String,
}

impl Line {
    pub fn new(student: &str, course: &str, discipline: &str) -> Self {
        Line {
            student: student.into(),
            course: course.into(),
            discipline: discipline.into(),
            year: 2012,
            term: 1,
            grade: "7.0".into(),
            credits: 4,
            attendance: "85".into(),
            result: "approved".into(),
            situation: "dropout".into(),
            income: "NA".into(),
            city: "Vitoria".into(),
        }
    }

    pub fn situation(mut self, s: &str) -> Self {
        self.situation = s.into();
        self
    }
    pub fn grade(mut self, g: &str) -> Self {
        self.grade = g.into();
        self
    }
    pub fn credits(mut self, c: u32) -> Self {
        self.credits = c;
        self
    }
    pub fn attendance(mut self, a: &str) -> Self {
        self.attendance = a.into();
        self
    }
    pub fn result(mut self, r: &str) -> Self {
        self.result = r.into();
        self
    }
    pub fn city(mut self, c: &str) -> Self {
        self.city = c.into();
        self
    }
    pub fn income(mut self, i: &str) -> Self {
        self.income = i.into();
        self
    }
    pub fn term(mut self, year: i32, term: u8) -> Self {
        self.year = year;
        self.term = term;
        self
    }

    pub fn render(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},2011,{},{},{},ES,BR,none,public,sisu,family,none,none,none",
            self.student,
            self.course,
            self.discipline,
            self.year,
            self.term,
            self.grade,
            self.credits,
            self.attendance,
            self.result,
            self.situation,
            self.income,
            self.city
        )
    }
}

pub fn activity(lines: &[Line]) -> String {
    let mut text = ACTIVITY_COLUMNS.join(",");
    for line in lines {
        text.push('\n');
        text.push_str(&line.render());
    }
    text.push('\n');
    text
}

pub fn cohort_header() -> String {
    COHORT_COLUMNS.join(",")
}

pub fn snapshot(lines: &[Line]) -> Snapshot {
    snapshot_with_cohorts(lines, &cohort_header())
}

pub fn snapshot_with_cohorts(lines: &[Line], cohort_csv: &str) -> Snapshot {
    Snapshot::from_readers(
        activity(lines).as_bytes(),
        cohort_csv.as_bytes(),
        &MappingConfig::default(),
        ReferenceConfig::default(),
        1,
    )
    .unwrap()
}

/// `n` single-row students with the given situation in `course`.
pub fn students(prefix: &str, course: &str, n: usize, situation: &str) -> Vec<Line> {
    (0..n)
        .map(|i| Line::new(&format!("{prefix}{i:03}"), course, "D1").situation(situation))
        .collect()
}
