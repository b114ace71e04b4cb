"""Ingest CVE, ExploitDB and CVEdetails CSV snapshots and join them.

Column names of each source are configurable (see :class:`CveColumns` and
friends) so that snapshot layout drift does not need code changes.
"""

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import SchemaError

logger = logging.getLogger(__name__)

CVE_RE = re.compile(r"CVE-\d{4}-\d{4,}")
_ISO_DATE_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_COMPACT_DATE_RE = re.compile(r"(?<!\d)(\d{4})(\d{2})(\d{2})(?!\d)")

EXPLOIT_TYPES = ("DoS", "Local", "Remote", "Webapps")
_TYPE_ALIASES = {t.lower(): t for t in EXPLOIT_TYPES}

# raw ExploitDB platform -> merged bucket
PLATFORM_MERGE = {
    "ashx": "asp", "asp": "asp", "aspx": "asp",
    "bsd": "bsd", "bsd_x86": "bsd", "freebsd": "bsd", "freebsd_x86": "bsd",
    "freebsd_x86-64": "bsd", "netbsd_x86": "bsd", "openbsd": "bsd",
    "linux": "linux", "linux_mips": "linux", "linux_x86": "linux", "linux_x86-64": "linux",
    "solaris": "solaris", "solaris_sparc": "solaris", "solaris_x86": "solaris",
    "windows": "windows", "windows_x86": "windows", "windows_x86-64": "windows",
}

# merged bucket -> display label
PLATFORM_LABELS = {
    "android": "Android", "hp-ux": "HP-UX", "ios": "iOS", "linux": "Linux",
    "macos": "macOS", "novell": "Novell", "php": "PHP", "solaris": "Solaris",
    "unix": "Unix", "windows": "Windows",
}

DATASET_HEADER = (
    "cve_id", "cve_date", "exploit_date", "type", "platform_raw", "platform",
    "base_score", "delay_weeks",
)


@dataclass(frozen=True)
class CveColumns:
    id: str = "cve_id"
    date: str = "published_date"
    skip_rows: int = 0
    encoding: str = "utf-8"


@dataclass(frozen=True)
class ExploitDbColumns:
    codes: str = "codes"
    date: str = "date_published"
    type: str = "type"
    platform: str = "platform"
    verified: str = "verified"
    require_verified: bool = False
    encoding: str = "utf-8"


@dataclass(frozen=True)
class CveDetailsColumns:
    id: str = "cve_id"
    score: str = "score"
    encoding: str = "utf-8"


@dataclass
class Ingested:
    """Rows parsed from one source plus the rows that were dropped."""

    rows: object
    scanned: int = 0
    dropped: int = 0
    errors: list = field(default_factory=list)


@dataclass(frozen=True)
class ExploitRef:
    cve_id: str
    exploit_date: date
    exploit_type: str
    platform_raw: str


@dataclass(frozen=True)
class VulnRecord:
    cve_id: str
    cve_date: date
    exploit_date: date
    exploit_type: str
    platform_raw: str
    platform: str
    base_score: float
    delay_weeks: float


@dataclass(frozen=True, order=True)
class CategoryKey:
    kind: str
    label: str

    def __post_init__(self):
        if self.kind not in ("General", "Type", "Platform"):
            raise ValueError(f"unknown category kind {self.kind!r}")

    def __str__(self):
        return f"{self.kind}:{self.label}"

    @classmethod
    def parse(cls, text):
        """Parse ``general``, ``type:Webapps`` or ``platform:PHP`` (case-insensitive kind)."""
        kind, _, label = text.partition(":")
        kind = kind.strip().lower()
        if kind in ("general", "all"):
            return GENERAL
        if kind == "type":
            return cls("Type", normalize_type(label))
        if kind == "platform":
            return cls("Platform", normalize_platform(label))
        raise ValueError(f"cannot parse category {text!r}")


GENERAL = CategoryKey("General", "all")


@dataclass
class DelaySampleSet:
    category: CategoryKey
    samples: list

    @property
    def n(self):
        return len(self.samples)


def parse_date(text):
    """Parse ISO ``YYYY-MM-DD`` or compact ``YYYYMMDD`` embedded in free text."""
    if text is None:
        return None
    text = str(text).strip()
    if not text:
        return None
    m = _ISO_DATE_RE.search(text) or _COMPACT_DATE_RE.search(text)
    if not m:
        return None
    try:
        return date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    except ValueError:
        return None


def normalize_type(raw):
    raw = (raw or "").strip()
    return _TYPE_ALIASES.get(raw.lower(), "Other")


def normalize_platform(raw, merge=None):
    key = (raw or "").strip().lower()
    merge = PLATFORM_MERGE if merge is None else merge
    key = merge.get(key, key)
    return PLATFORM_LABELS.get(key, key)


def _open_reader(path, encoding, skip_rows=0):
    fh = open(path, newline="", encoding=encoding, errors="replace")
    for _ in range(skip_rows):
        fh.readline()
    return fh, csv.DictReader(fh)


def _require(reader, path, *columns):
    present = reader.fieldnames or []
    missing = [c for c in columns if c not in present]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}; found {present}")


def ingest_cve(path, columns=CveColumns()):
    """Map CVE id -> CVE date. Rows with unparseable ids or dates are dropped."""
    fh, reader = _open_reader(path, columns.encoding, columns.skip_rows)
    with fh:
        _require(reader, path, columns.id, columns.date)
        out = {}
        scanned = dropped = 0
        for row in reader:
            scanned += 1
            cve_id = (row.get(columns.id) or "").strip()
            when = parse_date(row.get(columns.date))
            if not CVE_RE.fullmatch(cve_id) or when is None:
                dropped += 1
                continue
            out[cve_id] = when
    logger.info("CVE source %s: %d rows, %d dropped", path, scanned, dropped)
    return Ingested(out, scanned, dropped)


def ingest_exploitdb(path, columns=ExploitDbColumns()):
    """One :class:`ExploitRef` per (exploit, referenced CVE) association."""
    fh, reader = _open_reader(path, columns.encoding)
    with fh:
        _require(reader, path, columns.codes, columns.date, columns.type, columns.platform)
        if columns.require_verified:
            _require(reader, path, columns.verified)
        out = []
        scanned = dropped = 0
        for row in reader:
            scanned += 1
            if columns.require_verified and (row.get(columns.verified) or "").strip() not in ("1", "true", "True"):
                dropped += 1
                continue
            ids = sorted(set(CVE_RE.findall(row.get(columns.codes) or "")))
            when = parse_date(row.get(columns.date))
            if not ids or when is None:
                dropped += 1
                continue
            kind = normalize_type(row.get(columns.type))
            platform_raw = (row.get(columns.platform) or "").strip()
            out.extend(ExploitRef(cve_id, when, kind, platform_raw) for cve_id in ids)
    logger.info("ExploitDB source %s: %d rows, %d without CVE/date", path, scanned, dropped)
    return Ingested(out, scanned, dropped)


def ingest_cvedetails(path, columns=CveDetailsColumns()):
    """Map CVE id -> CVSS base score; out-of-range scores are rejected per row."""
    fh, reader = _open_reader(path, columns.encoding)
    with fh:
        _require(reader, path, columns.id, columns.score)
        out = {}
        scanned = dropped = 0
        errors = []
        for row in reader:
            scanned += 1
            cve_id = (row.get(columns.id) or "").strip()
            try:
                score = float((row.get(columns.score) or "").strip())
            except ValueError:
                dropped += 1
                continue
            if not CVE_RE.fullmatch(cve_id):
                dropped += 1
                continue
            if not (0.0 <= score <= 10.0) or math.isnan(score):
                dropped += 1
                errors.append(SchemaError(f"{cve_id}: base score {score} outside [0, 10]"))
                continue
            out[cve_id] = score
    return Ingested(out, scanned, dropped, errors)


def delay_weeks(cve_date, exploit_date):
    return (exploit_date - cve_date).days / 7.0


def join(cves, exploits, scores, rule="earliest", merge=None):
    """Inner join of the three sources on CVE id.

    ``cves`` and ``scores`` are mappings, ``exploits`` an iterable of
    :class:`ExploitRef`. When a CVE has several exploits the earliest one
    is kept (``rule="latest"`` keeps the last); remaining ties are broken
    on (type, platform) so the result does not depend on row order.
    """
    if rule not in ("earliest", "latest"):
        raise ValueError(f"unknown multi-exploit rule {rule!r}")
    chosen = {}
    for ref in exploits:
        if ref.cve_id not in cves or ref.cve_id not in scores:
            continue
        cur = chosen.get(ref.cve_id)
        key = (ref.exploit_date, ref.exploit_type, ref.platform_raw)
        if cur is None:
            chosen[ref.cve_id] = ref
            continue
        cur_key = (cur.exploit_date, cur.exploit_type, cur.platform_raw)
        if (key < cur_key) if rule == "earliest" else (key > cur_key):
            chosen[ref.cve_id] = ref
    records = []
    for cve_id in sorted(chosen):
        ref = chosen[cve_id]
        c_date = cves[cve_id]
        records.append(
            VulnRecord(
                cve_id=cve_id,
                cve_date=c_date,
                exploit_date=ref.exploit_date,
                exploit_type=ref.exploit_type,
                platform_raw=ref.platform_raw,
                platform=normalize_platform(ref.platform_raw, merge),
                base_score=float(scores[cve_id]),
                delay_weeks=delay_weeks(c_date, ref.exploit_date),
            )
        )
    return records


def categorize(records, min_platform_size=10):
    """Group delays into General, Type and Platform sample sets.

    Platform buckets with fewer than ``min_platform_size`` samples are dropped.
    Records of type ``Other`` appear only in General.
    """
    groups = {GENERAL: []}
    for r in records:
        groups[GENERAL].append(r.delay_weeks)
        if r.exploit_type in EXPLOIT_TYPES:
            groups.setdefault(CategoryKey("Type", r.exploit_type), []).append(r.delay_weeks)
        if r.platform:
            groups.setdefault(CategoryKey("Platform", r.platform), []).append(r.delay_weeks)
    out = {}
    for key in sorted(groups, key=category_sort_key):
        samples = groups[key]
        if key.kind == "Platform" and len(samples) < min_platform_size:
            continue
        if not samples:
            continue
        out[key] = DelaySampleSet(key, samples)
    return out


def category_sort_key(key):
    rank = {"General": 0, "Type": 1, "Platform": 2}[key.kind]
    return rank, key.label.lower(), key.label


def histogram(samples, bin_width=1.0):
    """Counts in left-closed bins aligned on multiples of ``bin_width``.

    Bins run contiguously from the one holding the minimum to the one
    holding the maximum, empty bins included.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if len(samples) == 0:
        return []
    idx = [math.floor(x / bin_width) for x in samples]
    lo, hi = min(idx), max(idx)
    counts = [0] * (hi - lo + 1)
    for i in idx:
        counts[i - lo] += 1
    return [((lo + k) * bin_width, c) for k, c in enumerate(counts)]


def write_dataset(records, path):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for r in records:
            w.writerow([
                r.cve_id,
                r.cve_date.isoformat(),
                r.exploit_date.isoformat(),
                r.exploit_type,
                r.platform_raw,
                r.platform,
                f"{r.base_score:g}",
                f"{r.delay_weeks:.6f}",
            ])


def read_dataset(path):
    """Read a processed dataset CSV (the format written by :func:`write_dataset`)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require(reader, path, *DATASET_HEADER)
        records = []
        for lineno, row in enumerate(reader, start=2):
            try:
                c_date = date.fromisoformat(row["cve_date"].strip())
                e_date = date.fromisoformat(row["exploit_date"].strip())
                score = float(row["base_score"])
                delay = float(row["delay_weeks"])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            records.append(
                VulnRecord(
                    cve_id=row["cve_id"].strip(),
                    cve_date=c_date,
                    exploit_date=e_date,
                    exploit_type=normalize_type(row["type"]),
                    platform_raw=row["platform_raw"].strip(),
                    platform=row["platform"].strip(),
                    base_score=score,
                    delay_weeks=delay,
                )
            )
    return records
