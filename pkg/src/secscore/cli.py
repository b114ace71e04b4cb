"""``secscore`` command line: ingest, fit, score, rank, replay, stats.

Exit codes: 0 success, 2 input error, 3 no usable results.
"""

import csv
import hashlib
import io
import json
import logging
import os
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import click

from . import cvss, dataset, fitting, prioritizer, registry as reg_io
from .config import FORMATS, load_config
from .dataset import GENERAL, CategoryKey
from .errors import SecScoreError, UnknownCategory
from .exploit_model import AlParams, al_cdf, exploit_maturity, laplace_cdf, skewnormal_cdf

logger = logging.getLogger("secscore")

EXIT_INPUT = 2
EXIT_EMPTY = 3

_DATE = click.DateTime(formats=["%Y-%m-%d"])


class NoResults(SecScoreError):
    pass


def _day(value):
    return value.date() if isinstance(value, datetime) else value


def parse_params(text):
    """``mu,lambda,kappa`` with lambda read as the tabulated scale in weeks."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise click.BadParameter("expected three comma-separated numbers mu,lambda,kappa")
    try:
        mu, scale, kappa = (float(p) for p in parts)
        return AlParams.from_scale(mu, scale, kappa)
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(str(exc)) from None


def _params_option(fn):
    return click.option(
        "--params",
        "params",
        default=None,
        metavar="MU,LAMBDA,KAPPA",
        help="Use one AL profile for every item instead of a registry (LAMBDA is the scale in weeks).",
    )(fn)


class Context:
    def __init__(self, config, registry_path, fmt, out):
        self.config = config
        self.registry_path = registry_path
        self.format = fmt or config.format
        self.out = out or config.output_dir

    def registry(self, params):
        if params:
            return reg_io.registry_from_params(parse_params(params))
        if not self.registry_path:
            raise click.UsageError("need --registry or --params")
        return reg_io.load_registry(self.registry_path)

    def out_dir(self):
        path = Path(self.out or ".")
        path.mkdir(parents=True, exist_ok=True)
        return path

    def emit(self, name, header, rows):
        """Write a table to ``<out>/<name>.csv|.jsonl``, or to stdout without ``--out``."""
        text = render(header, rows, self.format)
        if self.out:
            suffix = ".csv" if self.format == "csv" else ".jsonl"
            path = self.out_dir() / (name + suffix)
            path.write_text(text, encoding="utf-8")
            click.echo(f"wrote {path}", err=True)
        else:
            click.echo(text, nl=False)


def render(header, rows, fmt):
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        for row in rows:
            buf.write(json.dumps(dict(zip(header, row)), ensure_ascii=False) + "\n")
    return buf.getvalue()


def _sig4(x):
    return f"{x:.3e}"


def _mse(x):
    return f"{x:.2e}"


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML run configuration.")
@click.option("--registry", "registry_path", type=click.Path(dir_okay=False), help="Model registry JSON.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Table output format.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("-v", "--verbose", count=True, help="More logging on stderr.")
@click.pass_context
def cli(ctx, config_path, registry_path, fmt, out, verbose):
    """Time-aware CVSS scoring from exploit-delay profiles."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    ctx.obj = Context(load_config(config_path), registry_path, fmt, out)


@cli.command()
@click.option("--cve", type=click.Path(exists=True, dir_okay=False), help="CVE list CSV.")
@click.option("--exploitdb", type=click.Path(exists=True, dir_okay=False), help="ExploitDB index CSV.")
@click.option("--cvedetails", type=click.Path(exists=True, dir_okay=False), help="CVE base-score CSV.")
@click.pass_obj
def ingest(obj, cve, exploitdb, cvedetails):
    """Join the three sources into dataset.csv and print category counts."""
    cfg = obj.config
    paths = {"cve": cve or cfg.cve_path, "exploitdb": exploitdb or cfg.exploitdb_path,
             "cvedetails": cvedetails or cfg.cvedetails_path}
    for name, p in paths.items():
        if not p:
            raise click.UsageError(f"no {name} source given (--{name} or config sources.{name}.path)")
        if not Path(p).is_file():
            raise click.BadParameter(f"{p} does not exist", param_hint=f"--{name}")
    cves = dataset.ingest_cve(paths["cve"], cfg.cve_columns)
    exploits = dataset.ingest_exploitdb(paths["exploitdb"], cfg.exploitdb_columns)
    scores = dataset.ingest_cvedetails(paths["cvedetails"], cfg.cvedetails_columns)
    for err in scores.errors:
        logger.warning("%s", err)
    records = dataset.join(cves.rows, exploits.rows, scores.rows, cfg.multi_exploit_rule, cfg.platform_merge)
    path = obj.out_dir() / "dataset.csv"
    dataset.write_dataset(records, path)
    if not records:
        click.echo("warning: the join produced no records", err=True)
    groups = dataset.categorize(records, cfg.min_category_size)
    rows = [("joined", "all", len(records))]
    rows += [(k.kind, k.label, v.n) for k, v in groups.items()]
    click.echo(f"wrote {path}", err=True)
    click.echo(render(("kind", "label", "n"), rows, obj.format), nl=False)


def _dataset_stamp(path, records, cfg):
    snapshot = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]
    if cfg.created:
        created = cfg.created
    elif os.environ.get("SOURCE_DATE_EPOCH"):
        stamp = datetime.fromtimestamp(int(os.environ["SOURCE_DATE_EPOCH"]), tz=timezone.utc)
        created = stamp.strftime("%Y-%m-%dT%H:%M:%SZ")
    elif records:
        created = max(max(r.cve_date, r.exploit_date) for r in records).isoformat()
    else:
        created = ""
    return snapshot, created


FIT_HEADER = ("kind", "category", "n", "mse_skewnormal", "mse_laplace", "mse_al",
              "mu", "lambda", "kappa", "best")


def fit_report_rows(registry):
    """Rows shaped like the published fit table; ``lambda`` is the scale in weeks."""
    rows = []
    for key in registry.categories():
        entry = registry.entries[key]
        mse = [_mse(entry.fits[f].mse) if f in entry.fits else "" for f in ("SkewNormal", "Laplace", "AL")]
        al = entry.fits.get("AL")
        params = [_sig4(al.params.mu), _sig4(al.params.scale), _sig4(al.params.kappa)] if al else ["", "", ""]
        rows.append((key.kind, key.label, entry.n, *mse, *params, entry.best_family or ""))
    return rows


@cli.command()
@click.argument("dataset_path", metavar="DATASET", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def fit(obj, dataset_path):
    """Fit AL, Laplace and skew-normal profiles per category."""
    cfg = obj.config
    records = dataset.read_dataset(dataset_path)
    groups = dataset.categorize(records, cfg.min_category_size)
    if not records:
        raise NoResults("dataset has no records")
    snapshot, created = _dataset_stamp(dataset_path, records, cfg)
    registry = fitting.fit_all(groups, cfg.optimizer, snapshot, created, cfg.workers)
    for key in registry.categories():
        for family, msg in registry.entries[key].errors.items():
            click.echo(f"{key} {family}: {msg}", err=True)
    if not any(e.fits for e in registry.entries.values()):
        raise NoResults("no category could be fitted")
    reg_path = Path(obj.registry_path) if obj.registry_path else obj.out_dir() / "registry.json"
    reg_path.parent.mkdir(parents=True, exist_ok=True)
    reg_io.save_registry(registry, reg_path)
    click.echo(f"wrote {reg_path}", err=True)
    obj.emit("fit_report", FIT_HEADER, fit_report_rows(registry))


@cli.command()
@click.argument("vector")
@click.option("--cve-date", type=_DATE, required=True, help="CVE publication date (YYYY-MM-DD).")
@click.option("--query-date", type=_DATE, default=None, help="Scoring date; defaults to the CVE date.")
@click.option("--category", default="general", show_default=True, help="general, type:NAME or platform:NAME.")
@click.option("--exploit-known", is_flag=True, help="Treat an exploit as already published.")
@_params_option
@click.pass_obj
def score(obj, vector, cve_date, query_date, category, exploit_known, params):
    """Print the CVSS and SecScore breakdown of one vector."""
    cve_date = _day(cve_date)
    query_date = _day(query_date) or cve_date
    try:
        key = CategoryKey.parse(category)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--category") from None
    v = cvss.parse_vector(vector)
    registry = obj.registry(params)
    chain = [key] if key == GENERAL else [key, GENERAL]
    used, p = registry.resolve(chain)
    t = prioritizer.weeks_between(cve_date, query_date)
    breakdown = cvss.score(v)
    item = prioritizer.InventoryItem("CVE-0000-0000", cve_date, vector=v, exploit_known=exploit_known)
    _, rl, rc = cvss.temporal_weights(v)
    base = cvss.roundup(breakdown.base * rc * rl)
    known = prioritizer._exploit_known(item, query_date, False)
    e_s = obj.config.bounds.e_max if known else exploit_maturity(t, p, obj.config.bounds)
    secscore = base * e_s
    rows = [
        ("vector", v.to_string()),
        ("base", f"{breakdown.base:.1f}"),
        ("temporal", f"{breakdown.temporal:.1f}"),
        ("environmental", f"{breakdown.environmental:.1f}"),
        ("severity", breakdown.severity),
        ("category", str(used)),
        ("t_weeks", f"{t:.6f}"),
        ("e_s", f"{e_s:.12f}"),
        ("exploit_pinned", str(known).lower()),
        ("secscore", f"{secscore:.12f}"),
        ("secscore_display", f"{secscore:.2f}"),
    ]
    if obj.format == "csv":
        obj.emit("score", ("field", "value"), rows)
    else:
        obj.emit("score", [r[0] for r in rows], [[r[1] for r in rows]])


RANK_HEADER = ("rank", "cve_id", "secscore", "display", "base", "e_s", "t_weeks", "category", "exploit_pinned")


@cli.command()
@click.argument("inventory", type=click.Path(exists=True, dir_okay=False))
@click.option("--query-date", type=_DATE, required=True, help="Ranking date (YYYY-MM-DD).")
@click.option("--ignore-exploit-dates", is_flag=True, help="Do not pin items whose exploit date has passed.")
@_params_option
@click.pass_obj
def rank(obj, inventory, query_date, ignore_exploit_dates, params):
    """Rank an inventory by SecScore on one date."""
    items = prioritizer.read_inventory(inventory)
    registry = obj.registry(params)
    result = prioritizer.rank(items, _day(query_date), registry, obj.config.bounds,
                              use_exploit_dates=not ignore_exploit_dates)
    for cve_id, msg in result.failed:
        click.echo(f"{cve_id}: {msg}", err=True)
    if not result.items:
        raise NoResults("no inventory item could be scored")
    rows = [
        (i, s.cve_id, f"{s.score:.6f}", f"{s.display_score:.2f}", f"{s.base:.1f}", f"{s.e_s:.6f}",
         f"{s.t_weeks:.4f}", str(s.category), str(s.exploit_pinned).lower())
        for i, s in enumerate(result.items, start=1)
    ]
    obj.emit("ranking", RANK_HEADER, rows)


TRAJ_HEADER = ("date", "cve_id", "secscore", "e_s", "projected", "marker", "category")


@cli.command()
@click.argument("inventory", type=click.Path(exists=True, dir_okay=False))
@click.option("--start", type=_DATE, required=True)
@click.option("--end", type=_DATE, required=True)
@click.option("--step", type=click.IntRange(min=1), default=7, show_default=True, help="Grid step in days.")
@click.option("--pin-exploits", is_flag=True, help="Pin E_S to its maximum once an item's exploit is out.")
@_params_option
@click.pass_obj
def replay(obj, inventory, start, end, step, pin_exploits, params):
    """Score trajectories over a date grid plus a precedence summary."""
    items = prioritizer.read_inventory(inventory)
    if not items:
        raise NoResults("empty inventory")
    registry = obj.registry(params)
    start, end = _day(start), _day(end)
    grid = prioritizer.date_grid(start, end, step)
    rows = []
    for item in items:
        tr = prioritizer.trajectory(item, start, end, step, registry, obj.config.bounds, pin_exploits)
        for pt in tr.points:
            marks = []
            if pt.date <= item.cve_date < pt.date + timedelta(days=step):
                marks.append("C")
            if item.exploit_date and pt.date <= item.exploit_date < pt.date + timedelta(days=step):
                marks.append("E")
            rows.append((pt.date.isoformat(), item.cve_id, f"{pt.score:.6f}", f"{pt.e_s:.6f}",
                         str(pt.projected).lower(), "".join(marks), str(tr.category)))
    rows.sort(key=lambda r: (r[0], r[1]))
    obj.emit("trajectory", TRAJ_HEADER, rows)
    try:
        report = prioritizer.precedence_eval(items, grid, registry, obj.config.bounds)
    except SecScoreError as exc:
        click.echo(f"precedence: skipped ({exc})", err=True)
        return
    click.echo(
        f"precedence: pairs={report.n_pairs} concordant={report.n_concordant} "
        f"ties={report.n_tied} concordance={report.concordance:.4f}",
        err=True,
    )
    if obj.out:
        prec_rows = [(q.isoformat(), p, c) for q, p, c in report.per_date]
        obj.emit("precedence", ("date", "pairs", "concordant"), prec_rows)


@cli.command()
@click.argument("dataset_path", metavar="DATASET", type=click.Path(exists=True, dir_okay=False))
@click.option("--category", default="general", show_default=True, help="general, type:NAME or platform:NAME.")
@click.option("--kind", type=click.Choice(["ecdf", "hist"]), default="ecdf", show_default=True)
@click.option("--bin-width", type=float, default=1.0, show_default=True, help="Histogram bin width in weeks.")
@click.pass_obj
def stats(obj, dataset_path, category, kind, bin_width):
    """Plot-ready ECDF with fitted CDFs, or a delay histogram."""
    try:
        key = CategoryKey.parse(category)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--category") from None
    records = dataset.read_dataset(dataset_path)
    groups = dataset.categorize(records, obj.config.min_category_size)
    if key not in groups:
        raise NoResults(f"category {key} has no samples")
    samples = groups[key].samples
    if kind == "hist":
        if bin_width <= 0:
            raise click.BadParameter("must be positive", param_hint="--bin-width")
        n = len(samples)
        rows = [(f"{left:.6g}", f"{left + bin_width:.6g}", c, f"{c / (n * bin_width):.6e}")
                for left, c in dataset.histogram(samples, bin_width)]
        obj.emit(f"hist_{key.kind}_{key.label}", ("left", "right", "count", "density"), rows)
        return
    fits = _category_fits(obj, key, samples)
    ecdf = fitting.empirical_cdf(samples)
    cols = {"AL": al_cdf, "Laplace": laplace_cdf, "SkewNormal": skewnormal_cdf}
    curves = {f: cols[f](ecdf.t, fits.fits[f].params) if f in fits.fits else None for f in fitting.FAMILIES}
    header = ("t_weeks", "ecdf", "cdf_al", "cdf_laplace", "cdf_skewnormal")
    rows = []
    for i, (t, F) in enumerate(zip(ecdf.t, ecdf.F)):
        vals = [f"{curves[f][i]:.8f}" if curves[f] is not None else "" for f in fitting.FAMILIES]
        rows.append((f"{t:.6f}", f"{F:.8f}", *vals))
    obj.emit(f"ecdf_{key.kind}_{key.label}", header, rows)


def _category_fits(obj, key, samples):
    if obj.registry_path:
        registry = reg_io.load_registry(obj.registry_path)
        if key in registry.entries:
            return registry.entries[key]
        logger.warning("%s not in registry; fitting it now", key)
    return fitting.fit_category(samples, obj.config.optimizer)


def main(argv=None):
    """Console entry point; maps library errors onto exit codes."""
    try:
        cli.main(args=argv, prog_name="secscore", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except NoResults as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_EMPTY
    except UnknownCategory as exc:
        click.echo(f"error: unknown category {exc}", err=True)
        return EXIT_INPUT
    except (SecScoreError, OSError, ValueError, csv.Error, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
