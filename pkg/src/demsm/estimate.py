"""Plug-in estimation of the bounds from unit-level data, with a percentile bootstrap.

Strata are categorical labels; continuous covariates must be binned by the
caller. The bootstrap resamples whole rows and is a generic stand-in for
dedicated inference on the bounds.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import INTERVAL_KEYS, BoundsReport, ObservedLaw, SensitivitySpec, Stratum, aggregate_bounds
from .dist import WeightedDistribution
from .errors import (
    DataError,
    DegenerateResample,
    EmptyArmInStratum,
    EmptySample,
    MissingStratumDistribution,
    ValidationError,
)


class EmptyArmWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Sample:
    y: np.ndarray
    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64).ravel()
        t = np.asarray(self.t).ravel()
        x = np.asarray(self.x, dtype=str).ravel() if len(self.x) else np.array([], dtype=str)
        if y.size == 0:
            raise EmptySample("the sample has no rows")
        if not (y.size == t.size == x.size):
            raise DataError("y, t and x must have the same length")
        if not np.all(np.isfinite(y)):
            raise DataError("outcomes must be finite")
        if not np.all((t == 0) | (t == 1)):
            raise DataError("treatment must be coded 0/1")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t.astype(np.int8))
        object.__setattr__(self, "x", x)

    def __len__(self) -> int:
        return self.y.size

    @classmethod
    def from_rows(cls, rows) -> Sample:
        rows = list(rows)
        if not rows:
            raise EmptySample("the sample has no rows")
        y, t, x = zip(*rows)
        return cls(np.array(y, dtype=float), np.array(t), np.array([str(v) for v in x]))

    def canonical(self) -> Sample:
        """Rows sorted by (x, t, y), so results do not depend on input order."""
        order = np.lexsort((self.y, self.t, self.x))
        return Sample(self.y[order], self.t[order], self.x[order])


def read_sample_csv(path) -> Sample:
    """Read a ``y,t,x`` CSV; ``x`` is an opaque stratum label."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"y", "t", "x"}:
            raise DataError(f"expected header y,t,x, got {reader.fieldnames}")
        ys, ts, xs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                ys.append(float(row["y"]))
            except (TypeError, ValueError):
                raise DataError(f"line {lineno}: y is not a number: {row['y']!r}") from None
            if row["t"] not in ("0", "1"):
                raise DataError(f"line {lineno}: t must be 0 or 1, got {row['t']!r}")
            ts.append(int(row["t"]))
            xs.append(row["x"])
    if not ys:
        raise EmptySample(f"{path}: no data rows")
    return Sample(np.array(ys), np.array(ts), np.array(xs, dtype=str))


class _Encoding:
    """Integer codes for (stratum, arm, outcome value) cells of a fixed sample.

    A resample only ever contains values of the original sample, so a
    bincount over these codes rebuilds its empirical law without sorting.
    """

    def __init__(self, s: Sample):
        self.labels = np.unique(s.x)
        stratum = np.searchsorted(self.labels, s.x)
        group = 2 * stratum + (1 - s.t)          # group 2k is treated, 2k+1 control
        self.supports = []
        self.offsets = [0]
        codes = np.empty(len(s), dtype=np.int64)
        for g in range(2 * self.labels.size):
            mask = group == g
            support, inv = np.unique(s.y[mask], return_inverse=True)
            codes[mask] = self.offsets[-1] + inv
            self.supports.append(support)
            self.offsets.append(self.offsets[-1] + support.size)
        self.codes = codes
        self.size = self.offsets[-1]

    def law(self, counts: np.ndarray) -> ObservedLaw:
        n = counts.sum()
        strata = []
        for k, label in enumerate(self.labels):
            dists = []
            totals = []
            for g in (2 * k, 2 * k + 1):
                c = counts[self.offsets[g]:self.offsets[g + 1]]
                tot = c.sum()
                totals.append(tot)
                if tot == 0:
                    dists.append(None)
                    continue
                nz = c > 0
                dists.append(WeightedDistribution(self.supports[g][nz], c[nz] / tot))
            size = totals[0] + totals[1]
            if size == 0:
                continue
            strata.append(Stratum(str(label), float(size / n), float(totals[0] / size),
                                  dists[0], dists[1]))
        # renormalize away float drift in the weight sum
        total = math.fsum(st.weight for st in strata)
        if total != 1.0:
            strata = [Stratum(st.id, st.weight / total, st.propensity, st.dist1, st.dist0)
                      for st in strata]
        return ObservedLaw(tuple(strata))


def empirical_observed_law(s: Sample, strict: bool = False) -> ObservedLaw:
    """Empirical stratum weights, propensities and arm-conditional outcome laws.

    A stratum missing one arm is kept with that arm set to ``None``; this is
    reported through :class:`EmptyArmWarning`, or raised as
    :class:`EmptyArmInStratum` when ``strict``.
    """
    enc = _Encoding(s)
    law = enc.law(np.bincount(enc.codes, minlength=enc.size))
    for sid, arm in law.missing_arms():
        if strict:
            raise EmptyArmInStratum(sid, arm)
        warnings.warn(str(EmptyArmInStratum(sid, arm)), EmptyArmWarning, stacklevel=2)
    return law


def plugin_bounds(s: Sample, spec: SensitivitySpec, model="demsm") -> BoundsReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyArmWarning)
        law = empirical_observed_law(s)
    return aggregate_bounds(law, spec, model)


@dataclass
class BootstrapResult:
    point: BoundsReport
    intervals: dict
    replicates: np.ndarray
    B: int
    level: float
    seed: int
    redraws: int

    def envelope(self, name: str = "ate") -> tuple[float, float]:
        """Lower end of the lower-endpoint interval, upper end of the upper-endpoint one."""
        return self.intervals[f"{name}_lo"][0], self.intervals[f"{name}_hi"][1]

    def to_dict(self) -> dict:
        return {"B": self.B, "level": self.level, "seed": self.seed, "redraws": self.redraws,
                "intervals": {k: list(v) for k, v in self.intervals.items()},
                "envelope": {n: list(self.envelope(n)) for n in ("mu1", "mu0", "ate")}}


def bootstrap_ci(s: Sample, spec: SensitivitySpec, model="demsm", B: int = 1000,
                 level: float = 0.95, seed: int = 0,
                 point: Optional[BoundsReport] = None) -> BootstrapResult:
    """Percentile intervals for every bound endpoint from B row resamples.

    Replicate ``b`` draws from ``default_rng([seed, b])``. A resample that
    loses an arm some bound needs is redrawn from the same stream; more than
    ``10 * B`` draws in total raises :class:`DegenerateResample`.
    """
    if B < 100:
        raise ValidationError(f"B must be at least 100, got {B}")
    if not 0.0 < level < 1.0:
        raise ValidationError(f"level must lie in (0, 1), got {level}")
    s = s.canonical()
    enc = _Encoding(s)
    n = len(s)
    if point is None:
        point = plugin_bounds(s, spec, model)
    reps = np.empty((B, len(INTERVAL_KEYS)))
    draws = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        while True:
            draws += 1
            if draws > 10 * B:
                raise DegenerateResample(f"more than {10 * B} resamples needed to obtain {B} usable ones")
            counts = np.bincount(enc.codes[rng.integers(0, n, size=n)], minlength=enc.size)
            try:
                rep = aggregate_bounds(enc.law(counts), spec, model)
            except MissingStratumDistribution:
                continue
            break
        reps[b] = [getattr(rep, k) for k in INTERVAL_KEYS]
    alpha = 1.0 - level
    qs = np.quantile(reps, [alpha / 2.0, 1.0 - alpha / 2.0], axis=0)
    intervals = {k: (float(qs[0, i]), float(qs[1, i])) for i, k in enumerate(INTERVAL_KEYS)}
    return BootstrapResult(point, intervals, reps, B, level, seed, draws - B)
