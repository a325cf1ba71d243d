"""Edgeworth polynomials and the trigonometric expansion of the local law.

Conventions.  A term ``c h^n`` in the integrand
``exp(-h^2/2) * (polynomial in h)`` of the rescaled Fourier integral maps
to ``c (-i)^n He_n(x) g(x) / sigma`` in the point probability, because

    int exp(-i x h) exp(-h^2/2) (i h)^n dh = 2 pi He_n(x) g(x)

with ``g`` the standard normal density.  Every polynomial below is a
:class:`numpy.polynomial.Polynomial` with complex coefficients.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from math import factorial, pi
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .chain import ChainSpec
from .cumulants import CumulantData, ResonantJetData, cumulants_at_zero, resonant_jet
from .errors import OrderMismatch, ResonantDegenerate, TailBudgetExceeded
from .oracle import interval_quadrature
from .resonance import ResonantPoint, minimal_gap, period, prokhorov_classify, resonant_points

TAIL_FACTOR = 10.0
DEFAULT_R = 10.0


def gauss(x):
    return np.exp(-0.5 * np.asarray(x, float) ** 2) / np.sqrt(2 * pi)


def hermite(k: int) -> Polynomial:
    """Probabilists' Hermite polynomial ``He_k``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    prev, cur = Polynomial([1.0]), Polynomial([0.0, 1.0])
    if k == 0:
        return prev
    for j in range(1, k):
        prev, cur = cur, Polynomial([0.0, 1.0]) * cur - j * prev
    return cur


def _trim(p: Polynomial) -> Polynomial:
    c = np.trim_zeros(np.asarray(p.coef, complex), "b")
    return Polynomial(c if c.size else [0j])


def fourier_to_hermite(coeffs) -> Polynomial:
    """Map ``sum_n c_n h^n`` to ``sum_n c_n (-i)^n He_n(x)``."""
    out = Polynomial([0j])
    for n, c in enumerate(np.asarray(coeffs, complex)):
        if c != 0:
            out = out + complex(c * (-1j) ** n) * hermite(n)
    return _trim(out)


def partition_tuples(r: int) -> dict:
    """``{q: [(k_1..k_r), ...]}`` with ``sum_j j k_j = q``, q = 1..r."""
    if r < 1:
        raise ValueError("order must be at least 1")
    out = {q: [] for q in range(1, r + 1)}
    for ks in itertools.product(*[range(r // j + 1) for j in range(1, r + 1)]):
        q = sum(j * k for j, k in enumerate(ks, start=1))
        if 1 <= q <= r:
            out[q].append(tuple(ks))
    return out


def _partition_series(c, r):
    """Grades of ``exp(sum_{j>=3} c_j h^j)`` as coefficient arrays in ``h``.

    ``c[j]`` is the coefficient of ``h^j``.  Returns ``{q: coeffs}`` where
    grade ``q`` collects tuples with ``sum_j j k_j = q``.
    """
    if len(c) < r + 3:
        raise OrderMismatch(f"need coefficients up to h^{r + 2}, have {len(c) - 1}")
    grades = {}
    for q, tuples in partition_tuples(r).items():
        acc = np.zeros(3 * q + 1, complex)
        for ks in tuples:
            w = 1.0 + 0j
            deg = 0
            for j, k in enumerate(ks, start=1):
                if k:
                    w *= c[j + 2] ** k / factorial(k)
                    deg += (j + 2) * k
            acc[deg] += w
        grades[q] = acc
    return grades


def q_series(cums: CumulantData, r: int) -> dict:
    """Grade-``q`` parts of ``Q_{r,N}``: ``{q: coefficients in t}``, unscaled."""
    if cums.lambda_derivs.size < r:
        raise OrderMismatch(f"cumulant data of order {cums.r} cannot give order {r}")
    c = np.zeros(r + 3, complex)
    for j in range(3, r + 3):
        c[j] = cums.lambda_deriv(j) / factorial(j)
    return _partition_series(c, r)


def q_polynomial(cums: CumulantData, r: int) -> list:
    """``[P_1, ..., P_r]`` with ``Q_{r,N}(t) = sum_q sigma^{-q} P_q(t)``."""
    grades = q_series(cums, r)
    return [_trim(Polynomial(grades[q] * cums.sigma ** q)) for q in range(1, r + 1)]


def q_value(cums: CumulantData, r: int, t):
    """``Q_{r,N}(t)``."""
    return sum(np.polynomial.polynomial.polyval(t, g) for g in q_series(cums, r).values())


def classical_table(cums: CumulantData, r: int) -> dict:
    """``{b: P_{0,b}}`` for b = 1..r of the classical expansion."""
    table = {1: Polynomial([1.0 + 0j])}
    for b, P in enumerate(q_polynomial(cums, r - 1) if r > 1 else [], start=2):
        table[b] = fourier_to_hermite(P.coef)
    return table


def resonant_H(jdata: ResonantJetData, r: int) -> Polynomial:
    """``1 + sum`` of the partition terms built from the tilde part of the log-jet."""
    if jdata.order < r + 2:
        raise OrderMismatch(f"jet of order {jdata.order} cannot give order {r}")
    grades = _partition_series(jdata.log_jet.coeffs, r)
    out = Polynomial([1.0 + 0j])
    for g in grades.values():
        out = out + Polynomial(g)
    return _trim(out)


def _exp_poly(x, degree):
    return Polynomial([x ** j / factorial(j) for j in range(degree + 1)])


@dataclass(frozen=True)
class ResonantContribution:
    """Expansion of the Fourier integral near one resonant point."""

    point: Optional[ResonantPoint]
    t: float
    base: complex
    A: np.ndarray
    mean: float
    sigma: float
    tail: float = 0.0
    budget: float = float("inf")

    @property
    def w(self) -> int:
        return self.A.size

    def as_polynomial(self) -> Polynomial:
        """``base * (1 + sum_s A_s (-i)^s He_s)``, the coefficient of ``g / sigma``."""
        return _trim(self.base * fourier_to_hermite(np.concatenate([[1.0], self.A])))

    def __call__(self, k):
        k = np.asarray(k, float)
        x = (k - self.mean) / self.sigma
        return (np.exp(-1j * self.t * k) * self.as_polynomial()(x) * gauss(x) / self.sigma)


def a_coefficients(jdata: ResonantJetData, H: Polynomial, r: int,
                   budget: Optional[float] = None, strict: bool = True) -> ResonantContribution:
    """Coefficients ``A_1..A_{5r-2}`` of the corrected Gaussian factor.

    The product of the truncated ``exp(d h)``, truncated ``exp(u h^2 / 2)``
    and ``H`` is cut at degree ``5r - 2``; the largest discarded
    coefficient is reported as ``tail`` and checked against ``budget``
    (default ``10 sigma^{-r-1}``).
    """
    w = 5 * r - 2
    prod = _exp_poly(jdata.d, 3 * r - 2) * Polynomial(
        [(jdata.u / 2) ** (j // 2) / factorial(j // 2) if j % 2 == 0 else 0
         for j in range(2 * r + 1)]) * H
    coef = np.zeros(max(prod.coef.size, w + 1), complex)
    coef[: prod.coef.size] = prod.coef
    A = coef[1: w + 1].copy()
    tail = float(np.abs(coef[w + 1:]).max()) if coef.size > w + 1 else 0.0
    if budget is None:
        budget = TAIL_FACTOR * jdata.sigma ** (-r - 1)
    if strict and tail > budget:
        raise TailBudgetExceeded(
            f"discarded coefficient {tail:.3e} exceeds budget {budget:.3e}",
            tail_max=tail, budget=budget)
    return ResonantContribution(None, jdata.t, jdata.base, A, jdata.mean, jdata.sigma,
                                tail, budget)


def resonant_contribution(spec: ChainSpec, point, r: int, pins=None, moments=None,
                          strict: bool = False) -> ResonantContribution:
    """Expansion of ``(1/2pi) int exp(-itk) E[exp(itS_N)|pins] dt`` near ``point``."""
    t = point.t if isinstance(point, ResonantPoint) else float(point)
    jdata = resonant_jet(spec, t, r, pins, moments)
    # H is graded like the a = 0 term (corrections up to sigma^{-(r-1)}), so that
    # a resonant point whose jet equals the t = 0 jet reproduces it exactly
    H = resonant_H(jdata, r - 1) if r > 1 else Polynomial([1.0 + 0j])
    rc = a_coefficients(jdata, H, r, strict=strict)
    return replace(rc, point=point if isinstance(point, ResonantPoint) else None)


# --------------------------------------------------------------------------
# assembled expansions
# --------------------------------------------------------------------------

FLAG_KEPT = "kept"
FLAG_DROPPED = "dropped"
FLAG_FALLBACK = "fallback"


@dataclass(frozen=True)
class GeneralizedExpansion:
    """``sum_{a,b} P_{a,b}(x) sigma^{-b} g(x) exp(2 pi i a k / J)`` with ``x = (k - a_N)/sigma``.

    Resonant points that fell back to quadrature are added through
    ``fallbacks`` (slot -> stored Gauss-Legendre rule).
    """

    r: int
    K: int
    J: int
    mean: float
    sigma: float
    table: dict
    flags: dict = field(default_factory=dict)
    fallbacks: dict = field(default_factory=dict, repr=False)
    tails: dict = field(default_factory=dict)

    def slots(self) -> list:
        return sorted({a for a, _ in self.table})

    def evaluate_complex(self, k):
        k = np.asarray(k, float)
        x = (k - self.mean) / self.sigma
        g = gauss(x)
        out = np.zeros(k.shape, complex)
        for (a, b), P in sorted(self.table.items()):
            out = out + P(x) * self.sigma ** (-b) * g * np.exp(2j * pi * a * k / self.J)
        for a in sorted(self.fallbacks):
            out = out + self.fallbacks[a].integral(k) / (2 * pi)
        return out

    def evaluate(self, k):
        return self.evaluate_complex(k).real

    def to_dict(self) -> dict:
        terms = []
        for (a, b), P in sorted(self.table.items()):
            terms.append({"a": int(a), "b": int(b),
                          "coeffs": [[float(c.real), float(c.imag)] for c in np.asarray(P.coef, complex)],
                          "flag": self.flags.get(a, FLAG_KEPT)})
        for a in sorted(self.flags):
            if a not in {a2 for a2, _ in self.table}:
                terms.append({"a": int(a), "b": 1, "coeffs": [], "flag": self.flags[a]})
        return {"r": self.r, "K": self.K, "J": self.J, "a_N": self.mean,
                "sigma_N": self.sigma, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def classical_expansion(spec: ChainSpec, r: int, pins=None,
                        cums: Optional[CumulantData] = None) -> GeneralizedExpansion:
    """Order-``r`` Edgeworth expansion (slot ``a = 0`` only)."""
    cums = cums or cumulants_at_zero(spec, r, pins)
    table = {(0, b): P for b, P in classical_table(cums, r).items()}
    return GeneralizedExpansion(r, spec.K, 1, cums.mean, cums.sigma, table, {0: FLAG_KEPT})


def full_expansion(spec: ChainSpec, r: int, R: float = DEFAULT_R, drop: bool = True,
                   statistic: str = "second", fallback: str = "quadrature",
                   delta: Optional[float] = None) -> GeneralizedExpansion:
    """Classical part plus one oscillating term per resonant point.

    With ``drop`` on and ``V_N > 1``, every modulus ``m`` whose statistic
    reaches ``R ln V_N`` has its points zeroed and flagged.  A point whose
    base value is degenerate is integrated by quadrature over its
    isolating interval (``fallback="quadrature"``) or skipped
    (``fallback="skip"``), and flagged either way.
    """
    cums = cumulants_at_zero(spec, r)
    J = period(spec.K)
    table = {(0, b): P for b, P in classical_table(cums, r).items()}
    flags, fallbacks, tails = {0: FLAG_KEPT}, {}, {}
    dropped = set()
    if drop and cums.sigma ** 2 > 1:
        dropped = prokhorov_classify(spec, R, statistic, cums.sigma ** 2).dropped()
    width = delta if delta is not None else minimal_gap(spec.K) / 3
    for p in resonant_points(spec.K) if spec.K >= 1 else []:
        if p.m == 1:
            continue
        a = p.slot(J)
        if p.m in dropped:
            flags[a] = FLAG_DROPPED
            continue
        try:
            rc = resonant_contribution(spec, p, r, moments=(cums.mean, cums.sigma))
        except ResonantDegenerate:
            flags[a] = FLAG_FALLBACK
            if fallback == "quadrature":
                fallbacks[a] = interval_quadrature(spec, (p.t - width, p.t + width),
                                                   k=_k_range(spec))
            continue
        table[(a, 1)] = rc.as_polynomial()
        flags[a] = FLAG_KEPT
        tails[a] = (rc.tail, rc.budget)
    return GeneralizedExpansion(r, spec.K, J, cums.mean, cums.sigma, table, flags,
                                fallbacks, tails)


def _k_range(spec):
    lo = sum(int(v.min()) for v in spec.values)
    hi = sum(int(v.max()) for v in spec.values)
    return np.array([lo, hi])


def sup_error(pmf, expansion, k=None) -> float:
    """``sup_k |P(S_N = k) - expansion(k)|`` over the support (or given ``k``)."""
    k = pmf.support if k is None else np.asarray(k)
    return float(np.max(np.abs(pmf.pmf(k) - expansion.evaluate(k))))


def cumulants_from_pmf(pmf, r: int) -> CumulantData:
    """Cumulant data read off an exact lattice law (moment recursion).

    Used for conditional laws, where the pinned law is already at hand.
    """
    from math import comb

    mean, sigma = pmf.mean, pmf.sigma
    if not sigma > 1e-9:
        from .errors import DegenerateVariance

        raise DegenerateVariance(f"sigma {sigma:.3e} is degenerate")
    x = (pmf.support - mean) / sigma
    p = r + 2
    m = [float((x ** j) @ pmf.probs) for j in range(p + 1)]
    kap = [0.0] * (p + 1)
    for n in range(1, p + 1):
        kap[n] = m[n] - sum(comb(n - 1, k - 1) * kap[k] * m[n - k] for k in range(1, n))
    j = np.arange(3, p + 1)
    lam = (1j ** j) * np.array(kap[3:])
    kappas = np.array(kap[1:]) * sigma ** np.arange(1, p + 1)
    kappas[0] = mean
    return CumulantData(r, mean, sigma, lam, kappas)
