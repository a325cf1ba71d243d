"""Resonant frequencies, per-step residue statistics and the drop rule.

A frequency ``t = 2 pi l / m`` with ``m <= 2K`` is resonant: only there can
``|E exp(i t S_N)|`` stay away from zero.  Whether it actually does is
governed by ``M_N(m) = sum_n q_n(m)``, the total second-largest residue
mass of the summands.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from math import gcd, lcm, log, pi
from typing import Optional

import numpy as np

from .chain import ChainSpec, conditional_marginals
from .errors import DeltaTooLarge, DegenerateVariance

TIE_TOL = 1e-12
STATISTICS = ("second", "nonmodal")


@dataclass(frozen=True, order=True)
class ResonantPoint:
    """The frequency ``2 pi l / m`` with ``gcd(l, m) = 1``."""

    l: int
    m: int

    def __post_init__(self):
        if self.m < 1 or not 0 <= self.l < self.m:
            raise ValueError(f"need 0 <= l < m, got l={self.l}, m={self.m}")
        if gcd(self.l, self.m) != 1:
            raise ValueError(f"{self.l}/{self.m} is not reduced")

    @property
    def t(self) -> float:
        return 2 * pi * self.l / self.m

    def slot(self, J: int) -> int:
        """Index ``a`` with ``exp(-i t k) = exp(2 pi i a k / J)`` for all integers k."""
        if J % self.m:
            raise ValueError(f"J={J} is not a multiple of m={self.m}")
        return (-self.l * (J // self.m)) % J

    def conjugate(self) -> "ResonantPoint":
        return ResonantPoint((-self.l) % self.m, self.m)


def period(K: int) -> int:
    """``lcm(1, ..., 2K)``, the period of the trigonometric basis."""
    return lcm(*range(1, 2 * K + 1)) if K >= 1 else 1


def resonant_points(K: int) -> list:
    """Reduced fractions ``l/m`` with ``m <= 2K``, including 0, sorted by ``t``."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    if K == 0:
        warnings.warn("K = 0: the sum is constant, only t = 0 is resonant", stacklevel=2)
    pts = {ResonantPoint(0, 1)}
    for m in range(2, 2 * K + 1):
        for l in range(1, m):
            if gcd(l, m) == 1:
                pts.add(ResonantPoint(l, m))
    return sorted(pts, key=lambda p: (p.t, p.m))


@dataclass(frozen=True)
class ResidueProfile:
    """Per-step laws of ``Y_n mod m`` and their summary statistics."""

    m: int
    dists: np.ndarray
    modes: np.ndarray
    q: np.ndarray

    @property
    def M(self) -> float:
        return float(self.q.sum())

    @property
    def nonmodal(self) -> np.ndarray:
        return 1.0 - self.dists[np.arange(len(self.modes)), self.modes]

    def statistic(self, kind: str = "second") -> float:
        if kind == "second":
            return self.M
        if kind == "nonmodal":
            return float(self.nonmodal.sum())
        raise ValueError(f"unknown statistic {kind!r}; use one of {STATISTICS}")

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.q)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "m_n", "q_n"])
        for n, (mode, q) in enumerate(zip(self.modes, self.q), start=1):
            w.writerow([n, self.m, int(mode), repr(float(q))])
        return buf.getvalue()


def residue_distribution(law, values, m):
    return np.bincount(np.asarray(values) % m, weights=law, minlength=m)


def mode_and_second(dist):
    """Most likely residue (ties to the smallest) and the second-largest mass."""
    top = dist.max()
    mode = int(np.flatnonzero(dist >= top - TIE_TOL)[0])
    rest = np.delete(dist, mode)
    return mode, float(rest.max()) if rest.size else 0.0


def residue_profile(spec: ChainSpec, m: int, pins=None) -> ResidueProfile:
    if m < 2:
        raise ValueError("modulus must be at least 2")
    laws = conditional_marginals(spec, pins)
    dists = np.array([residue_distribution(mu, f, m) for mu, f in zip(laws, spec.values)])
    modes, qs = zip(*(mode_and_second(d) for d in dists))
    return ResidueProfile(m, dists, np.array(modes), np.array(qs))


def qv_bracket(dist, K: int):
    """``(q/4, Var, 8 K^3 q)`` for the residue variable with law ``dist``."""
    z = np.arange(dist.size)
    mean = z @ dist
    var = float(((z - mean) ** 2) @ dist)
    _, q = mode_and_second(dist)
    return q / 4, var, 8 * K**3 * q


@dataclass(frozen=True)
class ProkhorovReport:
    variance: float
    R: float
    threshold: float
    statistic: str
    rows: tuple
    M_N: float

    def dropped(self) -> set:
        return {row["m"] for row in self.rows if row["verdict"] == "drop"}

    def to_json(self) -> str:
        return json.dumps({
            "V_N": self.variance,
            "R": self.R,
            "threshold": self.threshold,
            "statistic": self.statistic,
            "M_N": self.M_N,
            "moduli": [{"m": r["m"], "M_N_m": r[self.statistic], "verdict": r["verdict"]}
                       for r in self.rows],
        })


def prokhorov_classify(spec: ChainSpec, R: float = 10.0, statistic: str = "second",
                       variance: Optional[float] = None) -> ProkhorovReport:
    """Keep/drop verdicts for the resonant terms of every modulus ``2..2K``."""
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if variance is None:
        from .cumulants import unconditional_moments

        variance = unconditional_moments(spec)[1] ** 2
    if not variance > 1:
        raise DegenerateVariance(f"V_N = {variance:.4g} must exceed 1 for the log threshold")
    threshold = R * log(variance)
    rows = []
    for m in range(2, 2 * spec.K + 1):
        prof = residue_profile(spec, m)
        row = {"m": m, "second": prof.M, "nonmodal": prof.statistic("nonmodal")}
        row["verdict"] = "drop" if row[statistic] >= threshold else "keep"
        rows.append(row)
    M_N = min((r[statistic] for r in rows), default=float("inf"))
    return ProkhorovReport(float(variance), R, threshold, statistic, tuple(rows), M_N)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    point: Optional[ResonantPoint]

    @property
    def resonant(self) -> bool:
        return self.point is not None


def minimal_gap(K: int) -> float:
    ts = [p.t for p in resonant_points(K)] + [2 * pi]
    return float(np.min(np.diff(ts))) if len(ts) > 1 else 2 * pi


def interval_partition(K: int, delta: Optional[float] = None) -> list:
    """Partition of ``[-delta, 2 pi - delta)`` isolating every resonant point.

    Each resonant point ``t`` gets ``[t - delta, t + delta)``; the gaps
    between them are non-resonant intervals.  The window starts at
    ``-delta`` so that the interval around 0 is not split; by
    ``2 pi``-periodicity this is a partition of the circle.
    """
    gap = minimal_gap(K) if K >= 1 else 2 * pi
    if delta is None:
        delta = gap / 3
    if delta <= 0 or delta >= gap / 2:
        raise DeltaTooLarge(f"delta={delta} must lie in (0, {gap / 2})")
    pts = resonant_points(K) if K >= 1 else [ResonantPoint(0, 1)]
    out = []
    for i, p in enumerate(pts):
        out.append(Interval(p.t - delta, p.t + delta, p))
        nxt = pts[i + 1].t - delta if i + 1 < len(pts) else 2 * pi - delta
        if nxt > p.t + delta:
            out.append(Interval(p.t + delta, nxt, None))
    return out
