"""Exit criteria, one test each, with a PASS/FAIL/SKIP line per criterion.

Criteria 3 and 4 need the processed reference dataset: set
``SECSCORE_DATASET`` to its CSV (the format written by ``secscore ingest``).
Criterion 2 runs against the raw snapshot when ``SECSCORE_SNAPSHOT_CONFIG``
names a run config whose ``sources`` point at it; otherwise it checks the
synthetic three-source fixtures against a hand-computed join.
"""

import csv
import io
import math
import os
import time
from datetime import date, timedelta

import numpy as np
import pytest

from secscore import cvss, dataset
from secscore.cli import parse_params
from secscore.config import load_config
from secscore.dataset import GENERAL, CategoryKey
from secscore.exploit_model import AlParams, al_cdf, al_pdf, al_sample, exploit_maturity, laplace_cdf
from secscore.exploit_model import LaplaceParams
from secscore.fitting import fit_al, fit_all
from secscore.prioritizer import InventoryItem, date_grid, precedence_eval
from secscore.registry import registry_from_params

from conftest import DATA, SOURCES, published_params_arg, published_rows

pytestmark = pytest.mark.acceptance


def _verdict(record, number, ok, detail):
    record(number, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def test_criterion_01_cvss_parity(acceptance_line):
    with open(DATA / "cvss_golden.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    start = time.perf_counter()
    mismatches = 0
    for r in rows:
        s = cvss.score(r["vector"])
        got = (f"{s.base:.1f}", f"{s.temporal:.1f}", f"{s.environmental:.1f}")
        mismatches += got != (r["base"], r["temporal"], r["environmental"])
    elapsed = time.perf_counter() - start
    curated = [cvss.parse_vector(r["vector"]) for r in rows[2592:]]
    spans = ({v.s for v in curated} == {"U", "C"} and {v.e for v in curated} == set("XUPFH")
             and {v.rl for v in curated} == set("XOTWU") and {v.rc for v in curated} == set("XURC"))
    ok = mismatches == 0 and len(curated) >= 200 and spans and elapsed < 1.0
    _verdict(acceptance_line, 1, ok,
             f"{len(rows)} vectors ({len(curated)} with temporal/environmental metrics), "
             f"{mismatches} mismatches, {elapsed:.2f}s")


def test_criterion_02_dataset_join(acceptance_line, tmp_path):
    config_path = os.environ.get("SECSCORE_SNAPSHOT_CONFIG")
    start = time.perf_counter()
    if config_path:
        cfg = load_config(config_path)
        cves = dataset.ingest_cve(cfg.cve_path, cfg.cve_columns)
        exploits = dataset.ingest_exploitdb(cfg.exploitdb_path, cfg.exploitdb_columns)
        scores = dataset.ingest_cvedetails(cfg.cvedetails_path, cfg.cvedetails_columns)
        records = dataset.join(cves.rows, exploits.rows, scores.rows, cfg.multi_exploit_rule, cfg.platform_merge)
        groups = dataset.categorize(records, cfg.min_category_size)
        elapsed = time.perf_counter() - start
        expected = {CategoryKey(r["kind"], r["label"]): int(r["n"]) for r in published_rows()}
        got = {k: v.n for k, v in groups.items()}
        wrong = sorted(str(k) for k in expected if got.get(k) != expected[k])
        ok = len(records) == 27432 and not wrong and elapsed < 30
        _verdict(acceptance_line, 2, ok,
                 f"snapshot join {len(records)} records (want 27432), {len(wrong)} category sizes off, "
                 f"{elapsed:.1f}s")
        return
    cves = dataset.ingest_cve(SOURCES / "cves.csv")
    exploits = dataset.ingest_exploitdb(SOURCES / "exploits.csv")
    scores = dataset.ingest_cvedetails(SOURCES / "scores.csv")
    records = dataset.join(cves.rows, exploits.rows, scores.rows)
    out = tmp_path / "dataset.csv"
    dataset.write_dataset(records, out)
    elapsed = time.perf_counter() - start
    ok = out.read_text() == (SOURCES / "expected_join.csv").read_text() and elapsed < 30
    _verdict(acceptance_line, 2, ok,
             f"snapshot unavailable; synthetic three-source join of {len(records)} records "
             f"{'matches' if ok else 'differs from'} the hand-computed join")


@pytest.fixture(scope="module")
def reference_fits():
    path = os.environ.get("SECSCORE_DATASET")
    if not path:
        return None
    records = dataset.read_dataset(path)
    groups = dataset.categorize(records)
    start = time.perf_counter()
    reg = fit_all(groups)
    return reg, time.perf_counter() - start


def test_criterion_03_general_parameters(acceptance_line, reference_fits):
    if reference_fits is None:
        acceptance_line(3, "SKIP", "reference dataset not available (set SECSCORE_DATASET)")
        pytest.skip("reference dataset not available")
    reg, elapsed = reference_fits
    entry = reg.entries[GENERAL]
    al, lap, sn = (entry.fits[f] for f in ("AL", "Laplace", "SkewNormal"))
    p = al.params
    checks = {
        "mu": abs(p.mu - -2.857e-01) <= 0.15,
        "lambda": abs(p.scale / 2.179e01 - 1) <= 0.15,
        "kappa": abs(p.kappa / 9.075e-01 - 1) <= 0.05,
        "mse": 5.459e-05 / 2 <= al.mse <= 5.459e-05 * 2,
        "order": al.mse <= lap.mse < sn.mse,
        "time": elapsed < 120,
    }
    ok = all(checks.values())
    _verdict(acceptance_line, 3, ok,
             f"mu={p.mu:.4g} lambda={p.scale:.4g} kappa={p.kappa:.4g} mse AL/L/SN="
             f"{al.mse:.3e}/{lap.mse:.3e}/{sn.mse:.3e}, {elapsed:.0f}s; failed: "
             f"{[k for k, v in checks.items() if not v] or 'none'}")


def test_criterion_04_best_family(acceptance_line, reference_fits):
    if reference_fits is None:
        acceptance_line(4, "SKIP", "reference dataset not available (set SECSCORE_DATASET)")
        pytest.skip("reference dataset not available")
    reg, _ = reference_fits
    wins = sum(reg.entries[k].best_family == "AL" for k in reg.categories())
    ok = wins >= 24 and len(reg.categories()) == 29
    _verdict(acceptance_line, 4, ok, f"AL lowest MSE in {wins} of {len(reg.categories())} categories")


def test_criterion_05_synthetic_recovery(acceptance_line):
    # location tolerance is absolute, so scales stay within a range where
    # the estimator's own spread at n = 1e5 is well below 0.05 weeks
    rng = np.random.default_rng(20240505)
    start = time.perf_counter()
    worst = [0.0, 0.0, 0.0]
    failures = 0
    for _ in range(20):
        p = AlParams(rng.uniform(-2, 2), math.exp(rng.uniform(math.log(0.1), math.log(20))), rng.uniform(0.5, 2))
        fit = fit_al(al_sample(p, 100_000, rng)).params
        err = (abs(fit.mu - p.mu), abs(fit.lam / p.lam - 1), abs(fit.kappa / p.kappa - 1))
        worst = [max(a, b) for a, b in zip(worst, err)]
        failures += not (err[0] <= 0.05 and err[1] <= 0.05 and err[2] <= 0.05)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 60
    _verdict(acceptance_line, 5, ok,
             f"20 generators, worst |dmu|={worst[0]:.4f} wk, dlam={worst[1]:.2%}, dkappa={worst[2]:.2%}, "
             f"{elapsed:.1f}s")


def test_criterion_06_model_laws(acceptance_line):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    n = 10_000
    mus = rng.uniform(-20, 20, n)
    lams = np.exp(rng.uniform(math.log(1e-3), math.log(50), n))
    kappas = np.exp(rng.uniform(math.log(0.05), math.log(20), n))
    gap = sym = fd = 0.0
    monotone = bounded = True
    for mu, lam, kappa in zip(mus, lams, kappas):
        p = AlParams(mu, lam, kappa)
        gap = max(gap, abs(al_cdf(np.nextafter(mu, np.inf), p) - al_cdf(mu, p)))
        t = np.sort(mu + rng.normal(0, 5 / lam, 64))
        f = al_cdf(t, p)
        monotone &= bool(np.all(np.diff(f) >= 0))
        bounded &= bool(np.all((f >= 0) & (f <= 1)))
        sym = max(sym, float(np.max(np.abs(al_cdf(t, AlParams(mu, lam, 1.0)) - laplace_cdf(t, LaplaceParams(mu, 1 / lam))))))
        # finite differences between the 0.1% and 99.9% quantiles, off the kink
        u = rng.uniform(1e-3, 1 - 1e-3)
        k2 = kappa * kappa
        split = k2 / (1 + k2)
        q = mu + kappa / lam * math.log(u / split) if u <= split else mu - math.log((1 - u) * (1 + k2)) / (lam * kappa)
        h = 1e-4 * min(kappa / lam, 1 / (lam * kappa))
        if abs(q - mu) > 2 * h:
            num = (al_cdf(q + h, p) - al_cdf(q - h, p)) / (2 * h)
            fd = max(fd, abs(num / al_pdf(q, p) - 1))
    elapsed = time.perf_counter() - start
    ok = gap <= 1e-12 and monotone and bounded and sym <= 1e-12 and fd <= 1e-6 and elapsed < 10
    _verdict(acceptance_line, 6, ok,
             f"{n} draws: continuity gap {gap:.1e}, Laplace diff {sym:.1e}, FD rel err {fd:.1e}, "
             f"monotone={monotone}, bounded={bounded}, {elapsed:.1f}s")


def test_criterion_07_maturity_sweep(acceptance_line, run_cli):
    start = time.perf_counter()
    bad = []
    for row in published_rows():
        p = parse_params(published_params_arg(row))
        k2 = p.kappa * p.kappa
        split = k2 / (1 + k2)

        def quantile(u):
            if u <= split:
                return p.mu + p.kappa / p.lam * math.log(u / split)
            return p.mu - math.log((1 - u) * (1 + k2)) / (p.lam * p.kappa)

        # the sweep spans the profile's own 1e-6..1-1e-6 quantile range,
        # where E_S moves by more than float64 resolution between points
        t = np.linspace(quantile(1e-6), quantile(1 - 1e-6), 1000)
        e = exploit_maturity(t, p)
        wide = exploit_maturity(np.linspace(-520, 520, 1000), p)
        ok = (np.all(np.diff(e) > 0) and np.all((e >= 0.91) & (e <= 1.0))
              and np.all(np.diff(wide) >= 0) and np.all((wide >= 0.91) & (wide <= 1.0)))
        code, out, _ = run_cli("score", "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N",
                               "--cve-date", "2021-01-01", "--params", published_params_arg(row))
        cli_e = float(dict(csv.reader(io.StringIO(out)))["e_s"])
        ok = ok and code == 0 and abs(cli_e - exploit_maturity(0.0, p)) < 1e-12
        if not ok:
            bad.append(f"{row['kind']}:{row['label']}")
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 5
    _verdict(acceptance_line, 7, ok, f"{len(published_rows())} profiles swept, failing: {bad or 'none'}, {elapsed:.2f}s")


REMARK_VECTORS = {
    "CVE-2020-13927": ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", "2020-06-08", "multiple"),
    "CVE-2020-15160": ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", "2020-06-25", "PHP"),
    "CVE-2021-24762": ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", "2021-01-14", "PHP"),
    "CVE-2021-24946": ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", "2021-01-14", "PHP"),
    "CVE-2021-26599": ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", "2021-02-02", "PHP"),
    "CVE-2021-46417": ("CVSS:3.1/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", "2022-04-24", "Linux"),
}


def test_criterion_08_ranking_remarks(acceptance_line, run_cli):
    rows = {r["label"]: r for r in published_rows() if r["kind"] == "Platform"}
    start = time.perf_counter()

    def secscore(cve_id, query):
        vector, c_date, platform = REMARK_VECTORS[cve_id]
        code, out, err = run_cli("score", vector, "--cve-date", c_date, "--query-date", query.isoformat(),
                                 "--params", published_params_arg(rows[platform]))
        assert code == 0, err
        f = dict(csv.reader(io.StringIO(out)))
        return float(f["base"]), float(f["secscore"])

    window = date_grid(date(2020, 1, 1), date(2022, 12, 31), 7)
    r1 = all(secscore("CVE-2020-15160", q)[1] > secscore("CVE-2020-13927", q)[1] for q in window)

    week60 = date(2020, 1, 1) + timedelta(weeks=60)
    s = [secscore(c, week60)[1] for c in ("CVE-2020-15160", "CVE-2021-24762", "CVE-2021-24946", "CVE-2021-26599")]
    r2 = s[0] > s[1] == s[2] > s[3]

    c_date = date.fromisoformat(REMARK_VECTORS["CVE-2021-46417"][1])
    base_l, linux = secscore("CVE-2021-46417", c_date)
    php = [secscore(c, c_date) for c in ("CVE-2021-24762", "CVE-2021-24946", "CVE-2021-26599")]
    r3 = base_l == 7.8 and all(b == 7.5 and v > linux for b, v in php)
    elapsed = time.perf_counter() - start
    ok = r1 and r2 and r3 and elapsed < 5
    _verdict(acceptance_line, 8, ok, f"R1={r1} over {len(window)} weeks, R2={r2}, R3={r3}, {elapsed:.2f}s")


def test_criterion_09_precedence_calibration(acceptance_line):
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    profiles = {f"p{i}": AlParams(rng.uniform(-2, 4), 1 / rng.uniform(8, 40), rng.uniform(0.5, 1.5)) for i in range(6)}
    from secscore.fitting import CategoryFits, FitResult, ModelRegistry

    entries = {}
    for label, p in list(profiles.items()) + [("all", AlParams(0.0, 0.05, 1.0))]:
        e = CategoryFits(1)
        e.fits["AL"] = FitResult("AL", p, 0.0, 0.0, 1, True)
        entries[GENERAL if label == "all" else CategoryKey("Platform", label)] = e
    reg = ModelRegistry(entries)
    vectors = [cvss.parse_vector(f"CVSS:3.1/AV:{av}/AC:L/PR:{pr}/UI:N/S:U/C:H/I:{i}/A:N")
               for av in "NL" for pr in "NLH" for i in "HLN"]
    labels = sorted(profiles)
    items = []
    for k in range(1000):
        c = date(2020, 1, 1) + timedelta(days=int(rng.integers(0, 330)))
        e = date(2021, 1, 1) + timedelta(days=int(rng.integers(0, 700)))  # independent of everything above
        items.append(InventoryItem(f"CVE-2020-{k:05d}", c, vectors[rng.integers(len(vectors))],
                                   platform=labels[rng.integers(len(labels))], exploit_date=e))
    null = precedence_eval(items, date_grid(date(2020, 12, 1), date(2020, 12, 29), 7), reg).concordance

    same = registry_from_params(AlParams.from_scale(-0.2857, 21.79, 0.9075))
    v = vectors[0]
    ordered = [InventoryItem(f"CVE-2020-{k:05d}", date(2020, 1, 1) + timedelta(days=k), v,
                             exploit_date=date(2020, 1, 1) + timedelta(days=k + 500)) for k in range(1000)]
    perfect = precedence_eval(ordered, [date(2021, 1, 1), date(2021, 3, 1)], same).concordance
    elapsed = time.perf_counter() - start
    ok = abs(null - 0.5) <= 0.05 and perfect == 1.0 and elapsed < 30
    _verdict(acceptance_line, 9, ok, f"null concordance {null:.4f}, matched-order concordance {perfect:.4f}, "
                                     f"{elapsed:.1f}s")


def test_criterion_10_determinism(acceptance_line, run_cli, tmp_path, monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    rng = np.random.default_rng(10)
    records = []
    for k, d in enumerate(np.round(al_sample(AlParams(-0.3, 0.046, 0.9), 3000, rng) * 7)):
        c = date(2018, 1, 1) + timedelta(days=int(rng.integers(0, 1500)))
        e = c + timedelta(days=int(d))
        raw = ("php", "linux_x86", "windows", "hardware")[k % 4]
        records.append(dataset.VulnRecord(f"CVE-2018-{k:05d}", c, e, ("DoS", "Local", "Remote", "Webapps")[k % 4],
                                          raw, dataset.normalize_platform(raw), 7.5, (e - c).days / 7))
    ds = tmp_path / "dataset.csv"
    dataset.write_dataset(records, ds)
    outputs = []
    for run in ("first", "second"):
        out_dir = tmp_path / run
        code_fit, _, _ = run_cli("--out", out_dir, "fit", ds)
        code_rank, _, _ = run_cli("--out", out_dir, "--registry", out_dir / "registry.json", "rank",
                                  DATA / "ranking_remarks_inventory.csv", "--query-date", "2021-06-01")
        assert code_fit == 0 and code_rank == 0
        outputs.append([(out_dir / name).read_bytes() for name in ("registry.json", "fit_report.csv", "ranking.csv")])
    same = [a == b for a, b in zip(*outputs)]
    _verdict(acceptance_line, 10, all(same),
             f"registry/fit report/ranking byte-identical across runs: {same}")
