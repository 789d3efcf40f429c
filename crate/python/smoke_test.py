#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the `retention` extension module.

Build it first with `cargo build -p retention-py` (or `--release`). The
script copies target/<profile>/libretention.so to a temporary directory as
retention.so and imports it from there. Pass a path to use another build.
"""

import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def find_library(argv):
    if len(argv) > 1:
        return pathlib.Path(argv[1])
    for profile in ("release", "debug"):
        candidate = ROOT / "target" / profile / "libretention.so"
        if candidate.exists():
            return candidate
    sys.exit("libretention.so not found; run `cargo build -p retention-py` first")


def main(argv):
    workdir = pathlib.Path(tempfile.mkdtemp(prefix="retention-smoke-"))
    try:
        shutil.copy(find_library(argv), workdir / "retention.so")
        sys.path.insert(0, str(workdir))
        import retention

        assert retention.tda(100, [(10, 5, 1), (20, 14, 1)]) == [15.2, 50.0]
        assert retention.tda_exact(100, [(10, 5, 1), (20, 14, 1)]) == [(500, 33), (50, 1)]
        assert retention.cr_exact([("8", 4), ("6", 2)]) == (22, 3)
        assert abs(retention.cr([(8.0, 4), (6.0, 2)]) - 44 / 6) < 1e-12
        assert retention.cr([]) is None
        try:
            retention.tda(1, [(0, 0, 1)])
            raise AssertionError("zero denominator accepted")
        except retention.MetricError as err:
            assert "denominator zero at year 1" in str(err)

        paths = retention.generate_fixtures(str(workdir / "data"), seed=3)
        snap = retention.Snapshot.load(paths["activity"], paths["cohort"])
        report = snap.ingest_report()
        assert report["rows_read"] == (
            report["rows_kept"] + report["rows_deduplicated"] + report["rows_rejected"]
        )

        situations = snap.situations()
        assert situations["total"] == len(snap)
        counted = sum(e["count"] for e in situations["entries"])
        assert counted + situations["excluded_undefined"] == situations["total"]
        assert snap.query("overview/situations") == situations

        course = snap.meta()["courses"][0]
        assert snap.situations(course=course)["total"] <= situations["total"]
        assert snap.situations(course="NOPE")["note"] == "no matching category"

        ranking = snap.disciplines(limit=20)
        assert all(d["enrolled_count"] >= 15 for d in ranking["disciplines"])
        try:
            snap.disciplines(limit=4)
            raise AssertionError("limit 4 accepted")
        except retention.QueryError as err:
            assert "between 5 and 20" in str(err)

        cats = snap.categories("geographic", 0)
        assert len(cats["entries"]) <= 6
        assert snap.cr_bands(mode="absolute")["entries"][0]["percent"] is None
        assert snap.failure_histogram(kind="grade")[0]["failures"] == 0
        assert len(snap.tda_histogram()["courses"]) == 5
        assert snap.attendance_bands(course=course)["total"] >= 0
        assert len(snap.course_ranking(limit=2)) == 2

        try:
            retention.Snapshot.from_csv("student_id\n1\n", "")
            raise AssertionError("bad header accepted")
        except retention.IngestError as err:
            assert "missing required column" in str(err)

        print(f"ok: {snap!r}")
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


if __name__ == "__main__":
    main(sys.argv)
