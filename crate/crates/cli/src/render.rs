// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use retention_core::ingest::{IngestReport, ProfileIssue};
use retention_core::{Distribution, Percent};
use retention_service::ReportOutput;
use serde_json::Value;

/// Separates the table from the JSON payload in report output.
pub const PAYLOAD_MARKER: &str = "--- payload ---";

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

fn pct(p: Option<&Percent>) -> String {
    p.map_or_else(|| "-".to_owned(), Percent::to_string)
}

fn distribution(d: &Distribution) -> String {
    let rows: Vec<Vec<String>> = d
        .entries
        .iter()
        .map(|e| vec![e.label.clone(), e.count.to_string(), pct(e.percent.as_ref())])
        .collect();
    let mut out = table(&["label", "count", "percent"], &rows);
    let _ = writeln!(out, "total {}, excluded_undefined {}", d.total, d.excluded_undefined);
    if let Some(note) = &d.note {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

fn body(output: &ReportOutput) -> String {
    match output {
        ReportOutput::Distribution(d) => distribution(d),
        ReportOutput::CourseRanking(courses) => {
            let rows: Vec<Vec<String>> = courses
                .iter()
                .enumerate()
                .map(|(i, c)| vec![(i + 1).to_string(), c.course_id.clone(), c.count.to_string()])
                .collect();
            table(&["rank", "course", "count"], &rows)
        }
        ReportOutput::Failures(bins) => {
            let rows: Vec<Vec<String>> =
                bins.iter().map(|b| vec![b.failures.to_string(), b.students.to_string()]).collect();
            table(&["failures", "students"], &rows)
        }
        ReportOutput::Disciplines(ranking) => {
            let rows: Vec<Vec<String>> = ranking
                .disciplines
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    vec![
                        (i + 1).to_string(),
                        d.course_id.clone(),
                        d.discipline_id.clone(),
                        d.enrolled_count.to_string(),
                        d.failure_count.to_string(),
                        d.failure_rate.to_string(),
                    ]
                })
                .collect();
            let mut out = table(&["rank", "course", "discipline", "enrolled", "failures", "rate"], &rows);
            let _ = writeln!(out, "institution average {}", pct(ranking.institution_avg_rate.as_ref()));
            let _ = writeln!(out, "course average {}", pct(ranking.course_avg_rate.as_ref()));
            out
        }
        ReportOutput::Tda(h) => {
            let rows: Vec<Vec<String>> = h
                .courses
                .iter()
                .map(|c| vec![c.course_name.clone(), pct(c.institution_tda.as_ref()), pct(c.national_tda.as_ref())])
                .collect();
            let mut out = table(&["course", "institution", "national"], &rows);
            let r = &h.reference_lines;
            let _ = writeln!(
                out,
                "reference lines: national {}, state {}, institution {}\n",
                pct(r.national_avg.as_ref()),
                pct(r.state_avg.as_ref()),
                pct(r.institution_avg.as_ref()),
            );
            let years = h.series.iter().map(|s| s.tda.len()).max().unwrap_or(0);
            let mut headers = vec!["course".to_owned(), "scope".to_owned(), "entry_year".to_owned()];
            headers.extend((1..=years).map(|t| format!("T{t}")));
            let rows: Vec<Vec<String>> = h
                .series
                .iter()
                .map(|s| {
                    let mut row = vec![s.course_name.clone(), s.scope.clone(), s.entry_year.to_string()];
                    row.extend(s.tda.iter().map(Percent::to_string));
                    row
                })
                .collect();
            out += &table(&headers.iter().map(String::as_str).collect::<Vec<_>>(), &rows);
            for warning in &h.warnings {
                let _ = writeln!(out, "warning: {warning}");
            }
            out
        }
        ReportOutput::Meta(meta) => {
            let mut out = String::new();
            let _ = writeln!(out, "courses: {}", meta.courses.join(", "));
            let years: Vec<String> = meta.entry_years.iter().map(i32::to_string).collect();
            let _ = writeln!(out, "entry years: {}", years.join(", "));
            let _ = writeln!(out, "cohort courses: {}", meta.cohort_courses.join(", "));
            for (column, values) in &meta.categories {
                let _ = writeln!(out, "{column}: {}", values.join(", "));
            }
            out
        }
    }
}

/// Table followed by the marker and the pretty-printed JSON payload.
pub fn render_report(path: &str, output: &ReportOutput, version: u64) -> String {
    let json = serde_json::to_string_pretty(output).expect("report serializes");
    format!("# {path} (snapshot {version})\n\n{}\n{PAYLOAD_MARKER}\n{json}\n", body(output))
}

/// The JSON payload section of [`render_report`] output.
pub fn payload(text: &str) -> Option<Value> {
    let (_, json) = text.split_once(&format!("\n{PAYLOAD_MARKER}\n"))?;
    serde_json::from_str(json).ok()
}

pub fn render_validation(report: &IngestReport) -> String {
    let counts = [
        ("rows read", report.rows_read),
        ("rows kept", report.rows_kept),
        ("rows deduplicated", report.rows_deduplicated),
        ("rows rejected", report.rows_rejected),
        ("students built", report.students_built),
        ("cohort rows read", report.cohort_rows_read),
        ("cohorts built", report.cohorts_built),
    ];
    let rows: Vec<Vec<String>> = counts.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    let mut out = table(&["ingest", "count"], &rows);

    out += "\nrejected rows:\n";
    if report.rejections.is_empty() {
        out += "  none\n";
    }
    for r in &report.rejections {
        let _ = writeln!(out, "  line {}: {}", r.line, r.reason);
    }

    out += "\nmissing values per field:\n";
    for (field, count) in &report.missing_field_counts {
        let _ = writeln!(out, "  {field:<18} {count}");
    }

    let conflicts: Vec<&ProfileIssue> = report.conflicts().collect();
    if !conflicts.is_empty() {
        out += "\nattribute conflicts (majority value kept):\n";
        for issue in conflicts {
            if let ProfileIssue::AttributeConflict { student_id, course_id, field, chosen, observed } = issue {
                let seen: Vec<String> = observed.iter().map(|(v, n)| format!("{v}x{n}")).collect();
                let _ = writeln!(out, "  {course_id}/{student_id} {field}: kept `{chosen}` from {}", seen.join(" "));
            }
        }
    }

    if !report.cohort_rejections.is_empty() {
        out += "\nrejected cohort records:\n";
        for r in &report.cohort_rejections {
            let lines: Vec<String> = r.lines.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "  {} (lines {}): {}", r.record, lines.join(", "), r.reason);
        }
    }
    out
}
