"""Score, rank and replay vulnerability inventories over time."""

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from . import cvss, kernels
from .dataset import EXPLOIT_TYPES, GENERAL, CategoryKey, normalize_platform, normalize_type
from .errors import InsufficientData, SecScoreError
from .exploit_model import V31_BOUNDS, exploit_maturity, v4_bounds

# exploit-maturity levels that mean exploit code exists
_KNOWN_E = frozenset("PFH")


@dataclass(frozen=True)
class InventoryItem:
    cve_id: str
    cve_date: date
    vector: object = None  # CvssV31Vector
    v4: object = None  # V4ScorePair
    exploit_type: str = ""
    platform: str = ""
    exploit_date: date = None
    exploit_known: bool = False

    def category_chain(self):
        """Platform, then Type, then General."""
        chain = []
        if self.platform:
            chain.append(CategoryKey("Platform", normalize_platform(self.platform)))
        kind = normalize_type(self.exploit_type)
        if kind in EXPLOIT_TYPES:
            chain.append(CategoryKey("Type", kind))
        chain.append(GENERAL)
        return chain


@dataclass(frozen=True)
class ScoredItem:
    cve_id: str
    score: float
    base: float
    e_s: float
    t_weeks: float
    category: CategoryKey
    cve_date: date
    exploit_pinned: bool = False

    @property
    def projected(self):
        return self.t_weeks < 0

    @property
    def display_score(self):
        return round(self.score, 2)


def weeks_between(start, end):
    return (end - start).days / 7.0


def _exploit_known(item, query_date, use_exploit_dates):
    if item.exploit_known:
        return True
    if item.vector is not None and item.vector.e in _KNOWN_E:
        return True
    return bool(use_exploit_dates and item.exploit_date is not None and item.exploit_date <= query_date)


def score_at(item, query_date, registry, bounds=V31_BOUNDS, use_exploit_dates=True, counterfactual=False):
    """SecScore of ``item`` on ``query_date``.

    An exploit that is flagged, implied by the vector's E metric, or (with
    ``use_exploit_dates``) already published pins the maturity weight to
    its maximum. ``counterfactual=True`` ignores all of these.
    """
    t = weeks_between(item.cve_date, query_date)
    category, params = registry.resolve(item.category_chain())
    known = not counterfactual and _exploit_known(item, query_date, use_exploit_dates)
    if item.v4 is not None:
        b = v4_bounds(item.v4)
        base = item.v4.score_eq5_attacked
    elif item.vector is not None:
        b = bounds
        br = cvss.base_score(item.vector)
        _, rl, rc = cvss.temporal_weights(item.vector)
        base = cvss.roundup(br.base * rc * rl)
    else:
        raise SecScoreError(f"{item.cve_id}: no CVSS vector or v4 score pair")
    e_s = b.e_max if known else exploit_maturity(t, params, b)
    return ScoredItem(item.cve_id, base * e_s, base, e_s, t, category, item.cve_date, known)


def rank_key(s):
    return (-s.score, s.cve_date, s.cve_id)


@dataclass
class Ranking:
    items: list
    failed: list = field(default_factory=list)  # (cve_id, message)


def rank(items, query_date, registry, bounds=V31_BOUNDS, use_exploit_dates=True):
    """Order by descending unrounded score, then earlier CVE date, then id."""
    if not items:
        raise InsufficientData("empty inventory")
    scored, failed = [], []
    for item in items:
        try:
            scored.append(score_at(item, query_date, registry, bounds, use_exploit_dates))
        except (SecScoreError, ValueError) as exc:
            failed.append((item.cve_id, f"{type(exc).__name__}: {exc}"))
    scored.sort(key=rank_key)
    return Ranking(scored, failed)


@dataclass(frozen=True)
class TrajectoryPoint:
    date: date
    score: float
    e_s: float
    projected: bool


@dataclass
class ScoreTrajectory:
    cve_id: str
    points: list
    cve_date: date
    exploit_date: date = None
    category: CategoryKey = None


def date_grid(start, end, step_days):
    if end < start:
        raise ValueError("end date precedes start date")
    if step_days < 1:
        raise ValueError("step must be at least one day")
    n = (end - start).days // step_days
    return [start + timedelta(days=k * step_days) for k in range(n + 1)]


def trajectory(item, start, end, step_days, registry, bounds=V31_BOUNDS, pin_after_exploit=False):
    """Scores on the inclusive grid ``start, start+step, ... <= end``.

    Points before the CVE date are flagged ``projected``.
    """
    points = []
    category = None
    for d in date_grid(start, end, step_days):
        s = score_at(item, d, registry, bounds, use_exploit_dates=pin_after_exploit)
        category = s.category
        points.append(TrajectoryPoint(d, s.score, s.e_s, d < item.cve_date))
    return ScoreTrajectory(item.cve_id, points, item.cve_date, item.exploit_date, category)


@dataclass
class PrecedenceReport:
    n_pairs: int
    n_concordant: int
    n_tied: int
    per_date: list  # (query_date, n_pairs, n_concordant)
    pairs: list = field(default_factory=list)  # (query_date, higher_id, lower_id, concordant)

    @property
    def concordance(self):
        return self.n_concordant / self.n_pairs if self.n_pairs else float("nan")


def precedence_eval(items, query_dates, registry, bounds=V31_BOUNDS, detail=False):
    """Check whether score order anticipates exploit publication order.

    At each query date, every pair of items that are both published and
    both still unexploited is compared; the pair is concordant when the
    higher-scored item's exploit appeared first. Scores are computed as if
    no exploit were known. Pairs with equal exploit dates are skipped and
    pairs with equal scores are counted as ties, outside ``n_pairs``.
    """
    items = [it for it in items if it.exploit_date is not None]
    if len(items) < 2:
        raise InsufficientData("need at least two items with exploit dates")
    cve_days = np.array([it.cve_date.toordinal() for it in items], dtype=np.int64)
    exploit_days = np.array([it.exploit_date.toordinal() for it in items], dtype=np.int64)
    n_pairs = n_conc = n_tied = 0
    per_date, pairs = [], []
    for q in query_dates:
        qd = q.toordinal()
        active = (cve_days <= qd) & (exploit_days > qd)
        scores = np.zeros(len(items))
        for i in np.flatnonzero(active):
            scores[i] = score_at(items[i], q, registry, bounds, counterfactual=True).score
        p, c, t = kernels.concordance_counts(scores, exploit_days, active)
        n_pairs += p
        n_conc += c
        n_tied += t
        per_date.append((q, p, c))
        if detail:
            idx = np.flatnonzero(active)
            for a_pos, i in enumerate(idx):
                for j in idx[a_pos + 1:]:
                    if exploit_days[i] == exploit_days[j] or scores[i] == scores[j]:
                        continue
                    hi, lo = (i, j) if scores[i] > scores[j] else (j, i)
                    pairs.append((q, items[hi].cve_id, items[lo].cve_id, bool(exploit_days[hi] < exploit_days[lo])))
    return PrecedenceReport(n_pairs, n_conc, n_tied, per_date, pairs)


INVENTORY_HEADER = ("cve_id", "vector", "cve_date", "type", "platform", "exploit_date")


def read_inventory(path):
    """Read ``cve_id,vector,cve_date,type,platform,exploit_date`` rows.

    An empty ``exploit_date`` means no exploit is known.
    """
    import csv

    from .dataset import CVE_RE
    from .errors import SchemaError

    items = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in INVENTORY_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            cve_id = (row["cve_id"] or "").strip()
            if not CVE_RE.fullmatch(cve_id):
                raise SchemaError(f"{path}:{lineno}: bad CVE id {cve_id!r}")
            if cve_id in seen:
                raise SchemaError(f"{path}:{lineno}: duplicate CVE id {cve_id}")
            seen.add(cve_id)
            try:
                vector = cvss.parse_vector(row["vector"] or "")
                c_date = date.fromisoformat((row["cve_date"] or "").strip())
                e_text = (row["exploit_date"] or "").strip()
                e_date = date.fromisoformat(e_text) if e_text else None
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            items.append(
                InventoryItem(
                    cve_id=cve_id,
                    cve_date=c_date,
                    vector=vector,
                    exploit_type=(row["type"] or "").strip(),
                    platform=(row["platform"] or "").strip(),
                    exploit_date=e_date,
                )
            )
    return items
