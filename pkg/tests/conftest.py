import csv
import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from secscore import cli, fitting  # noqa: E402
from secscore.dataset import CategoryKey  # noqa: E402
from secscore.registry import save_registry  # noqa: E402

DATA = Path(__file__).parent / "data"
SOURCES = DATA / "sources"


def published_rows():
    with open(DATA / "published_profiles.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def published_params_arg(row):
    """The ``--params`` string for one published row (lambda column is a scale)."""
    return f"{row['mu']},{row['scale']},{row['kappa']}"


def published_registry():
    entries = {}
    for r in published_rows():
        entry = fitting.CategoryFits(int(r["n"]))
        params = cli.parse_params(published_params_arg(r))
        entry.fits["AL"] = fitting.FitResult("AL", params, math.nan, float(r["mse_al"]), int(r["n"]), True)
        entries[CategoryKey(r["kind"], r["label"])] = entry
    return fitting.ModelRegistry(entries, snapshot_id="published", created="2023-01-01")


@pytest.fixture
def run_cli(capsys):
    """Run the console entry point in-process; returns (exit_code, stdout, stderr)."""

    def run(*argv):
        code = cli.main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return run


@pytest.fixture(scope="session")
def published_registry_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("registry") / "published.json"
    save_registry(published_registry(), path)
    return path


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record the one-line verdict of an acceptance criterion."""

    def record(number, status, detail):
        line = f"criterion {number:>2}: {status:<4} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
