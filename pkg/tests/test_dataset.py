from datetime import date

import pytest

from secscore import dataset
from secscore.dataset import (
    GENERAL,
    CategoryKey,
    CveColumns,
    ExploitDbColumns,
    ExploitRef,
    categorize,
    histogram,
    join,
    normalize_platform,
    normalize_type,
    parse_date,
    read_dataset,
    write_dataset,
)
from secscore.errors import SchemaError

from conftest import SOURCES


@pytest.mark.parametrize("text,expected", [
    ("2020-06-25", date(2020, 6, 25)),
    ("Assigned (20200625)", date(2020, 6, 25)),
    ("20200625", date(2020, 6, 25)),
    ("2020-06-25T13:00:00Z", date(2020, 6, 25)),
    ("", None),
    (None, None),
    ("2020-13-40", None),
    ("n/a", None),
])
def test_parse_date(text, expected):
    assert parse_date(text) == expected


@pytest.mark.parametrize("raw,expected", [
    ("webapps", "Webapps"), ("DOS", "DoS"), ("remote", "Remote"), ("local", "Local"),
    ("shellcode", "Other"), ("", "Other"), (None, "Other"),
])
def test_normalize_type(raw, expected):
    assert normalize_type(raw) == expected


@pytest.mark.parametrize("raw,expected", [
    ("linux_x86-64", "Linux"), ("aspx", "asp"), ("freebsd_x86", "bsd"), ("solaris_sparc", "Solaris"),
    ("windows_x86", "Windows"), ("PHP", "PHP"), ("php", "PHP"), ("ios", "iOS"), ("hp-ux", "HP-UX"),
    ("multiple", "multiple"), ("  Hardware ", "hardware"),
])
def test_normalize_platform(raw, expected):
    assert normalize_platform(raw) == expected


def test_normalize_platform_custom_merge():
    assert normalize_platform("linux_mips", {"linux_mips": "embedded"}) == "embedded"


def _load():
    cves = dataset.ingest_cve(SOURCES / "cves.csv")
    exploits = dataset.ingest_exploitdb(SOURCES / "exploits.csv")
    scores = dataset.ingest_cvedetails(SOURCES / "scores.csv")
    return cves, exploits, scores


def test_ingest_counts():
    cves, exploits, scores = _load()
    assert cves.scanned == 8 and cves.dropped == 2
    assert exploits.scanned == 11 and exploits.dropped == 2
    # exploit 3 names two CVEs, so it fans out
    assert len(exploits.rows) == 10
    assert scores.dropped == 1 and len(scores.errors) == 1
    assert "CVE-2019-0007" not in scores.rows


def test_join_matches_hand_computed(tmp_path):
    cves, exploits, scores = _load()
    records = join(cves.rows, exploits.rows, scores.rows)
    out = tmp_path / "dataset.csv"
    write_dataset(records, out)
    assert out.read_text() == (SOURCES / "expected_join.csv").read_text()
    assert read_dataset(out) == records


def test_join_latest_rule_and_order_independence():
    cves, exploits, scores = _load()
    latest = {r.cve_id: r for r in join(cves.rows, exploits.rows, scores.rows, rule="latest")}
    assert latest["CVE-2019-0001"].exploit_date == date(2019, 1, 21)
    shuffled = list(reversed(exploits.rows))
    assert join(cves.rows, shuffled, scores.rows) == join(cves.rows, exploits.rows, scores.rows)
    with pytest.raises(ValueError):
        join(cves.rows, exploits.rows, scores.rows, rule="median")


def test_join_empty():
    assert join({}, [], {}) == []
    refs = [ExploitRef("CVE-2020-0001", date(2020, 1, 1), "DoS", "linux")]
    assert join({"CVE-2020-0002": date(2020, 1, 1)}, refs, {"CVE-2020-0001": 5.0}) == []


def test_missing_columns_raise(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,when\nCVE-2020-0001,2020-01-01\n")
    with pytest.raises(SchemaError):
        dataset.ingest_cve(bad)
    with pytest.raises(SchemaError):
        dataset.ingest_exploitdb(bad)
    with pytest.raises(SchemaError):
        dataset.ingest_cvedetails(bad)
    with pytest.raises(SchemaError):
        read_dataset(bad)


def test_column_mapping_and_skipped_preamble(tmp_path):
    src = tmp_path / "allitems.csv"
    src.write_text("CVE list export\nsecond line\nName,Phase\nCVE-2021-0001,Assigned (20210105)\n", encoding="latin-1")
    got = dataset.ingest_cve(src, CveColumns(id="Name", date="Phase", skip_rows=2, encoding="latin-1"))
    assert got.rows == {"CVE-2021-0001": date(2021, 1, 5)}


def test_verified_filter():
    cols = ExploitDbColumns(require_verified=True)
    got = dataset.ingest_exploitdb(SOURCES / "exploits.csv", cols)
    assert all(ref.cve_id not in ("CVE-2019-0002", "CVE-2019-0003") for ref in got.rows)


def test_categorize_thresholds_and_other_type():
    cves, exploits, scores = _load()
    records = join(cves.rows, exploits.rows, scores.rows)
    groups = categorize(records, min_platform_size=1)
    assert groups[GENERAL].n == 5
    assert groups[CategoryKey("Type", "DoS")].n == 2
    assert CategoryKey("Type", "Other") not in groups
    assert groups[CategoryKey("Platform", "Linux")].n == 2
    assert [k.kind for k in groups][:1] == ["General"]
    assert not any(k.kind == "Platform" for k in categorize(records))


def test_category_parse():
    assert CategoryKey.parse("general") == GENERAL
    assert CategoryKey.parse("type:webapps") == CategoryKey("Type", "Webapps")
    assert CategoryKey.parse("Platform:linux_x86") == CategoryKey("Platform", "Linux")
    with pytest.raises(ValueError):
        CategoryKey.parse("vendor:acme")
    with pytest.raises(ValueError):
        CategoryKey("Vendor", "x")


def test_histogram_contiguous_bins():
    h = histogram([-1.5, -0.2, 0.0, 0.4, 3.0], bin_width=1.0)
    assert h == [(-2.0, 1), (-1.0, 1), (0.0, 2), (1.0, 0), (2.0, 0), (3.0, 1)]
    assert sum(c for _, c in h) == 5
    assert histogram([], 1.0) == []
    with pytest.raises(ValueError):
        histogram([1.0], 0.0)


def test_delay_weeks():
    assert dataset.delay_weeks(date(2020, 1, 1), date(2020, 1, 15)) == 2.0
    assert dataset.delay_weeks(date(2020, 1, 15), date(2020, 1, 1)) == -2.0
