"""Percentile standardization, neighborhood index, and gentrification score.

A neighborhood's socioeconomic measures are standardized to within-city
percentile ranks, averaged into a neighborhood index per temporal window, and
the gentrification score is the index change between the early and late
windows. Disadvantaged neighborhoods are those in the bottom half of the
early-window index distribution.

Percentile convention: Hazen, ``100 * (avg_rank - 0.5) / n`` with average
ranks for ties. It is symmetric, never produces 0 or 100, and is stable under
ties; outputs are invariant under strictly increasing transforms of the raw
measures.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from gentnow.errors import ComputationError

CORE_MEASURES = ("age", "education", "housing", "income")
ALL_MEASURES = CORE_MEASURES + ("race",)

WINDOW_PREV = "tw_minus_1"
WINDOW_TW = "tw"


class ScoringError(ComputationError):
    pass


class UnsupportedMeasureError(ScoringError):
    """A target spec requests a measure the panel does not carry."""


@dataclass(frozen=True)
class TargetSpec:
    """Which measures enter the index and with what weights.

    The default is the equal-weight mean of the four core measures. Weights
    must sum to 1. Single-measure specs turn the score into that measure's
    percentile change.
    """

    measures: tuple = CORE_MEASURES
    weights: tuple = None
    label: str = "gentrification_score"

    def __post_init__(self):
        if not self.measures:
            raise ScoringError("target spec needs at least one measure")
        for m in self.measures:
            if m not in ALL_MEASURES:
                raise ScoringError(f"unknown measure {m!r}")
        if self.weights is None:
            object.__setattr__(
                self, "weights", tuple(1.0 / len(self.measures) for _ in self.measures)
            )
        if len(self.weights) != len(self.measures):
            raise ScoringError("weights and measures must have equal length")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ScoringError("weights must sum to 1")

    @classmethod
    def single(cls, measure):
        return cls(measures=(measure,), label=f"{measure}_score")

    @classmethod
    def with_race(cls):
        n = len(ALL_MEASURES)
        return cls(measures=ALL_MEASURES, weights=(1.0 / n,) * n, label="gentrification_score_race")


@dataclass(frozen=True)
class NeighborhoodIndex:
    value: float
    window: str


def percentile_rank(values):
    """Hazen percentile ranks, in (0, 100), with average ranks for ties."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ScoringError("percentile_rank needs a non-empty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ScoringError("percentile_rank needs finite values")
    ranks = rankdata(arr, method="average")
    return 100.0 * (ranks - 0.5) / arr.size


def neighborhood_index(percentiles, spec=None, window=WINDOW_TW):
    """Weighted mean of a neighborhood's measure percentiles.

    ``percentiles`` maps measure name to a percentile in [0, 100]; every
    measure of the target spec must be present (None counts as missing).
    """
    spec = spec or TargetSpec()
    total = 0.0
    for m, w in zip(spec.measures, spec.weights):
        p = percentiles.get(m)
        if p is None:
            raise UnsupportedMeasureError(f"measure {m!r} missing from percentile vector")
        total += w * float(p)
    return NeighborhoodIndex(value=total, window=window)


def gentrification_score(idx_tw, idx_prev):
    """Index change between the two windows (late minus early)."""
    if idx_tw.window == idx_prev.window:
        raise ScoringError("gentrification score needs two distinct windows")
    return idx_tw.value - idx_prev.value


def select_disadvantaged(indices_prev):
    """Neighborhoods whose early-window index sits in the bottom half.

    Selection is by Hazen percentile rank of the index within the city;
    everything at rank <= 50 is included, so full ties select everyone.
    """
    ids = sorted(indices_prev)
    if not ids:
        return set()
    vals = np.array([indices_prev[i] for i in ids], dtype=float)
    pcts = percentile_rank(vals)
    return {i for i, p in zip(ids, pcts) if p <= 50.0}


@dataclass
class ScoreTable:
    """Per-neighborhood indices and scores for one city and target spec."""

    spec: TargetSpec
    neighborhood_ids: list
    index_prev: np.ndarray
    index_tw: np.ndarray
    score: np.ndarray
    disadvantaged: np.ndarray  # bool mask aligned with neighborhood_ids
    percentiles: dict = field(default_factory=dict)  # (measure, window) -> array
    unusable: list = field(default_factory=list)  # ids missing a window

    def as_mapping(self, which="score"):
        arr = getattr(self, which)
        return dict(zip(self.neighborhood_ids, arr.tolist()))


def build_target(panel_rows, spec=None):
    """Score every neighborhood with both windows present.

    ``panel_rows`` is any iterable of objects with ``neighborhood_id``,
    ``window`` and one attribute per measure (``age`` .. ``income``, optional
    ``race``). Percentiles are computed within the usable set (both windows
    present), per measure, per window; indices and the score follow.
    """
    spec = spec or TargetSpec()
    by_nb = {}
    for row in panel_rows:
        by_nb.setdefault(row.neighborhood_id, {})[row.window] = row

    usable, unusable = [], []
    for nb in sorted(by_nb):
        if WINDOW_PREV in by_nb[nb] and WINDOW_TW in by_nb[nb]:
            usable.append(nb)
        else:
            unusable.append(nb)
    if not usable:
        raise ScoringError("no neighborhood has both temporal windows")

    percentiles = {}
    for window in (WINDOW_PREV, WINDOW_TW):
        for m in spec.measures:
            raw = []
            for nb in usable:
                v = getattr(by_nb[nb][window], m, None)
                if v is None:
                    raise UnsupportedMeasureError(
                        f"measure {m!r} unavailable for neighborhood {nb!r} ({window})"
                    )
                raw.append(float(v))
            percentiles[(m, window)] = percentile_rank(raw)

    weights = np.array(spec.weights)
    idx_prev = sum(
        w * percentiles[(m, WINDOW_PREV)] for m, w in zip(spec.measures, weights)
    )
    idx_tw = sum(w * percentiles[(m, WINDOW_TW)] for m, w in zip(spec.measures, weights))
    score = idx_tw - idx_prev

    flagged = select_disadvantaged(dict(zip(usable, idx_prev)))
    disadvantaged = np.array([nb in flagged for nb in usable], dtype=bool)

    return ScoreTable(
        spec=spec,
        neighborhood_ids=usable,
        index_prev=np.asarray(idx_prev, dtype=float),
        index_tw=np.asarray(idx_tw, dtype=float),
        score=np.asarray(score, dtype=float),
        disadvantaged=disadvantaged,
        percentiles=percentiles,
        unusable=unusable,
    )
