// SPDX-License-Identifier: Apache-2.0

use retention_core::fixtures::{self, verify, FixtureSpec};

#[test]
fn default_fixture_matches_manifest() {
    for seed in [1, 2, 3] {
        let fixture = fixtures::generate(&FixtureSpec::with_seed(seed));
        let snapshot = fixture.snapshot(1).unwrap();
        let mismatches = verify::compare(&snapshot, &fixture.manifest);
        assert!(mismatches.is_empty(), "seed {seed}: {mismatches:#?}");
    }
}

#[test]
fn clean_fixture_has_no_rejections() {
    let spec = FixtureSpec { corruption_rate: 0.0, ..FixtureSpec::with_seed(8) };
    let fixture = fixtures::generate(&spec);
    let snapshot = fixture.snapshot(1).unwrap();
    assert_eq!(snapshot.report().rows_rejected, 0);
    assert!(verify::compare(&snapshot, &fixture.manifest).is_empty());
}

#[test]
fn comparison_detects_a_wrong_manifest() {
    let fixture = fixtures::generate(&FixtureSpec::with_seed(2));
    let snapshot = fixture.snapshot(1).unwrap();
    let mut manifest = fixture.manifest.clone();
    manifest.rows_kept += 1;
    manifest.students[0].failures_by_grade += 1;
    let found = verify::compare(&snapshot, &manifest);
    assert!(found.iter().any(|m| m.starts_with("rows_kept")), "{found:?}");
    assert!(found.iter().any(|m| m.contains("grade failures")), "{found:?}");
}
