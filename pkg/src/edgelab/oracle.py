"""Exact laws of the additive functional ``S_N = sum_n f_n(X_n)``.

Everything here is non-asymptotic: dynamic programming over
(step, state, partial sum), exact characteristic functions, discrete
Fourier inversion, and residue laws.  These are the references every
expansion is compared against.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chain import ChainSpec, PinSet, pin_masks
from .errors import ImpossiblePin, NodeBudgetExceeded, SupportOverflow

SUPPORT_CAP = 10**7
FLUSH = 1e-300
GL_POINTS = 16
NODE_CAP = 2_000_000

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_POINTS)


@dataclass(frozen=True)
class SumPmf:
    """Lattice law: ``P(S = offset + i) = probs[i]``."""

    offset: int
    probs: np.ndarray = field(repr=False)
    trimmed: bool = False

    @property
    def support(self) -> np.ndarray:
        return self.offset + np.arange(self.probs.size)

    @property
    def mean(self) -> float:
        return float(self.support @ self.probs)

    @property
    def var(self) -> float:
        c = self.support - self.mean
        return float((c * c) @ self.probs)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.var))

    def pmf(self, k):
        """``P(S = k)`` for scalar or array ``k``; zero off the support."""
        k = np.asarray(k)
        idx = np.rint(k).astype(np.int64) - self.offset
        inside = (idx >= 0) & (idx < self.probs.size)
        out = np.zeros(k.shape)
        out[inside] = self.probs[idx[inside]]
        return out if out.ndim else float(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "probability"])
        for k, p in zip(self.support, self.probs):
            w.writerow([int(k), repr(float(p))])
        return buf.getvalue()


def _finish(total, offset, mass):
    total = total / mass
    trimmed = bool(np.any((total > 0) & (total < FLUSH)))
    total[total < FLUSH] = 0.0
    nz = np.flatnonzero(total)
    if nz.size == 0:
        return SumPmf(0, np.array([1.0]), trimmed)
    lo, hi = nz[0], nz[-1]
    out = total[lo:hi + 1].copy()
    out.setflags(write=False)
    return SumPmf(int(offset + lo), out, trimmed)


def _check_cap(spec, cap):
    width = 2 * spec.K * spec.N + 1
    if width > cap:
        raise SupportOverflow(f"support width {width} exceeds cap {cap}")


def _advance(F, lo, P, f):
    """One DP step: propagate through P and shift row y by f[y]."""
    G = P.T @ F
    fmin, fmax = int(f.min()), int(f.max())
    L = F.shape[1] + fmax - fmin
    out = np.zeros((f.size, L))
    for y in range(f.size):
        s = int(f[y]) - fmin
        out[y, s:s + F.shape[1]] = G[y]
    return out, lo + fmin


def _start(spec):
    f = spec.value(1)
    fmin, fmax = int(f.min()), int(f.max())
    F = np.zeros((f.size, fmax - fmin + 1))
    F[np.arange(f.size), f - fmin] = spec.initial
    return F, fmin


def forward_tables(spec: ChainSpec, pins=None, record=()):
    """Run the joint (state, partial sum) DP.

    Returns the final table and offset plus a dict ``{n: (F_n, lo_n)}`` of
    the tables after step ``n`` for each requested ``n``.
    """
    masks = pin_masks(spec, pins)
    record = set(record)
    saved = {}
    F, lo = _start(spec)
    for n in range(1, spec.N + 1):
        if n > 1:
            F, lo = _advance(F, lo, spec.kernel(n - 1), spec.value(n))
        if masks[n - 1] is not None:
            F = F * masks[n - 1][:, None]
        if n in record:
            saved[n] = (F, lo)
    return F, lo, saved


def sum_pmf(spec: ChainSpec, pins=None, cap: int = SUPPORT_CAP) -> SumPmf:
    """Exact law of ``S_N``, conditional on ``pins`` when given."""
    _check_cap(spec, cap)
    F, lo, _ = forward_tables(spec, pins)
    total = F.sum(axis=0)
    mass = total.sum()
    if mass <= 0:
        raise ImpossiblePin("pinned configuration has probability 0")
    return _finish(total, lo, mass)


def backward_tables(spec: ChainSpec, record=()):
    """Tables ``B_n[x, s] = P(sum_{j>n} f_j = lo_n + s | X_n = x)``."""
    record = set(record)
    saved = {}
    B, lo = np.ones((spec.states[-1], 1)), 0
    if spec.N in record:
        saved[spec.N] = (B, lo)
    for n in range(spec.N - 1, 0, -1):
        f = spec.value(n + 1)
        fmin, fmax = int(f.min()), int(f.max())
        shifted = np.zeros((f.size, B.shape[1] + fmax - fmin))
        for y in range(f.size):
            s = int(f[y]) - fmin
            shifted[y, s:s + B.shape[1]] = B[y]
        B, lo = spec.kernel(n) @ shifted, lo + fmin
        if n in record:
            saved[n] = (B, lo)
    return saved


def _conv(a, b):
    from scipy.signal import fftconvolve

    if min(a.size, b.size) <= 64:
        return np.convolve(a, b)
    out = fftconvolve(a, b)
    out[np.abs(out) < 1e-18 * out.max()] = 0.0
    return np.maximum(out, 0.0)


def pinned_sum_pmfs(spec: ChainSpec, placements, cap: int = SUPPORT_CAP):
    """Conditional laws of ``S_N`` for every joint value of pins at given steps.

    ``placements`` is a sequence of step tuples (one or two steps each).
    Returns ``{steps: [(states, probability, SumPmf), ...]}`` enumerating all
    pinned state combinations with positive probability.  One forward and
    one backward sweep are shared by all placements.
    """
    _check_cap(spec, cap)
    placements = [tuple(sorted(p)) for p in placements]
    steps = sorted({n for p in placements for n in p})
    for p in placements:
        if not 1 <= len(p) <= 2:
            raise ValueError("placements must pin one or two steps")
    _, _, fwd = forward_tables(spec, None, record=steps)
    bwd = backward_tables(spec, record=steps)
    out = {}
    for p in placements:
        rows = []
        if len(p) == 1:
            (n,) = p
            F, flo = fwd[n]
            B, blo = bwd[n]
            for x in range(spec.states[n - 1]):
                joint = _conv(F[x], B[x])
                prob = joint.sum()
                if prob > 0:
                    rows.append(((x,), float(prob), _finish(joint, flo + blo, prob)))
        else:
            n1, n2 = p
            F, flo = fwd[n1]
            B, blo = bwd[n2]
            for x1 in range(spec.states[n1 - 1]):
                # middle DP from X_{n1}=x1 to step n2
                M = np.zeros((spec.states[n1 - 1], 1))
                M[x1, 0] = 1.0
                mlo = 0
                for n in range(n1 + 1, n2 + 1):
                    M, mlo = _advance(M, mlo, spec.kernel(n - 1), spec.value(n))
                left = F[x1]
                for x2 in range(spec.states[n2 - 1]):
                    joint = _conv(_conv(left, M[x2]), B[x2])
                    prob = joint.sum()
                    if prob > 0:
                        rows.append(((x1, x2), float(prob),
                                     _finish(joint, flo + mlo + blo, prob)))
        out[p] = rows
    return out


# --------------------------------------------------------------------------
# characteristic function and inversion
# --------------------------------------------------------------------------

_CHUNK = 8192


def _char_chunk(spec, t, masks):
    K = spec.K
    # exp(i t j) for j = -K..K, looked up instead of recomputed per step
    phases = np.exp(1j * np.outer(np.arange(-K, K + 1), t))
    v = (spec.initial[:, None] * phases[spec.value(1) + K])
    if masks[0] is not None:
        v *= masks[0][:, None]
    for n in range(2, spec.N + 1):
        v = spec.kernel(n - 1).T @ v
        v *= phases[spec.value(n) + K]
        if masks[n - 1] is not None:
            v *= masks[n - 1][:, None]
    return v.sum(axis=0)


def char_fn(spec: ChainSpec, t, pins=None):
    """``E[exp(i t S_N) | pins]`` for scalar or array ``t``."""
    t = np.asarray(t, float)
    scalar = t.ndim == 0
    tt = np.atleast_1d(t).ravel()
    masks = pin_masks(spec, pins)
    out = np.concatenate([_char_chunk(spec, tt[i:i + _CHUNK], masks)
                          for i in range(0, tt.size, _CHUNK)]) if tt.size else np.zeros(0, complex)
    if len(PinSet.of(pins)):
        from .chain import pin_probability

        prob = pin_probability(spec, pins)
        if prob <= 0:
            raise ImpossiblePin("pinned configuration has probability 0")
        out = out / prob
    return complex(out[0]) if scalar else out.reshape(t.shape)


def _sum_range(spec):
    lo = sum(int(v.min()) for v in spec.values)
    hi = sum(int(v.max()) for v in spec.values)
    return lo, hi


def invert_dft(spec: ChainSpec, pins=None, cap: int = SUPPORT_CAP) -> SumPmf:
    """Law of ``S_N`` from ``char_fn`` sampled on a full DFT grid."""
    _check_cap(spec, cap)
    lo, hi = _sum_range(spec)
    M = hi - lo + 1
    t = 2 * np.pi * np.arange(M) / M
    phi = char_fn(spec, t, pins) if M > 1 else np.array([1.0 + 0j])
    p = np.fft.fft(phi * np.exp(-1j * t * lo)).real / M
    p = np.maximum(p, 0.0)
    return _finish(p, lo, p.sum())


# --------------------------------------------------------------------------
# interval integrals
# --------------------------------------------------------------------------

def _gl_nodes(a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class IntervalQuadrature:
    """Gauss-Legendre nodes with the shifted characteristic function stored.

    ``wphi`` holds ``w(t) E[exp(i t (S_N - center))]`` so that only the
    slow part of the integrand is tabulated.
    """

    lo: float
    hi: float
    center: int
    nodes: np.ndarray = field(repr=False)
    wphi: np.ndarray = field(repr=False)

    def integral(self, k):
        """``int_lo^hi exp(-i t k) E[exp(i t S_N)] dt`` for scalar or array ``k``."""
        k = np.asarray(k, float)
        out = np.exp(-1j * np.multiply.outer(k - self.center, self.nodes)) @ self.wphi
        return complex(out) if out.ndim == 0 else out


# tails of S_N beyond this many standard deviations are below double precision
_BAND_SIGMAS = 14.0


def _band(spec, pins):
    """Centre and effective half-bandwidth of ``S_N`` for the quadrature."""
    from .cumulants import unconditional_moments
    from .errors import DegenerateVariance

    lo_s, hi_s = _sum_range(spec)
    try:
        mean, sigma = unconditional_moments(spec)
    except DegenerateVariance:
        mean, sigma = 0.5 * (lo_s + hi_s), 0.0
    c = int(round(mean))
    full = max(abs(lo_s - c), abs(hi_s - c), 1)
    band = _BAND_SIGMAS * sigma + 10 + 4 * spec.K * len(PinSet.of(pins))
    return c, int(min(full, np.ceil(band)))


def _min_panels(a, b, k, c, band):
    freq = np.max(np.abs(np.asarray(k, float) - c)) + band
    return int(np.ceil((b - a) * freq / np.pi)) + 1


def _tabulate(spec, a, b, panels, c, pins):
    nodes, weights = _gl_nodes(a, b, panels)
    wphi = weights * char_fn(spec, nodes, pins) * np.exp(-1j * nodes * c)
    return IntervalQuadrature(a, b, c, nodes, wphi)


def interval_quadrature(spec: ChainSpec, interval, k=0, pins=None,
                        tol: float = 1e-10, max_nodes: int = NODE_CAP) -> IntervalQuadrature:
    """Adaptive composite Gauss-Legendre rule resolving the integrand on ``interval``.

    The integrand is written as ``exp(-i t (k - c)) E[exp(i t (S_N - c))]``
    with ``c`` the rounded mean.  Panels start at one per half oscillation
    of the fastest relevant component and double until the integrals for
    all ``k`` change by less than ``tol * (hi - lo)``.
    """
    a, b = map(float, interval)
    if not a < b:
        raise ValueError("interval must satisfy lo < hi")
    k = np.atleast_1d(np.asarray(k, float))
    c, band = _band(spec, pins)
    panels = _min_panels(a, b, k, c, band)
    prev = None
    while True:
        if panels * GL_POINTS > max_nodes:
            raise NodeBudgetExceeded(
                f"{panels * GL_POINTS} nodes needed on [{a}, {b}] (cap {max_nodes})")
        q = _tabulate(spec, a, b, panels, c, pins)
        vals = q.integral(k)
        if prev is not None and np.max(np.abs(vals - prev)) < tol * (b - a):
            return q
        prev = vals
        panels *= 2


def interval_contribution(spec: ChainSpec, interval, k, nodes: Optional[int] = None,
                          pins=None, tol: float = 1e-10, max_nodes: int = NODE_CAP):
    """``int e^{-itk} E[e^{itS_N}] dt`` over ``interval`` by composite Gauss-Legendre.

    With ``nodes`` given, a fixed rule of that many points (rounded up to
    whole panels) is used; it must not be below the oscillation-resolving
    minimum.  Otherwise panels double until converged.
    """
    if nodes is None:
        return interval_quadrature(spec, interval, k, pins, tol, max_nodes).integral(k)
    a, b = map(float, interval)
    c, band = _band(spec, pins)
    minimum = _min_panels(a, b, k, c, band) * GL_POINTS
    if nodes < minimum:
        raise NodeBudgetExceeded(f"{nodes} nodes below the resolving minimum {minimum}")
    if nodes > max_nodes:
        raise NodeBudgetExceeded(f"{nodes} nodes exceed cap {max_nodes}")
    return _tabulate(spec, a, b, -(-nodes // GL_POINTS), c, pins).integral(k)


# --------------------------------------------------------------------------
# residues
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueLaw:
    m: int
    masses: np.ndarray
    tv: float
    fourier: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "m": self.m,
            "masses": self.masses.tolist(),
            "tv": self.tv,
            "fourier_re": self.fourier.real.tolist(),
            "fourier_im": self.fourier.imag.tolist(),
        })


def residue_law_from_masses(masses) -> ResidueLaw:
    masses = np.asarray(masses, float)
    m = masses.size
    tv = 0.5 * float(np.abs(masses - 1.0 / m).sum())
    a = np.arange(m)
    fourier = np.exp(2j * np.pi * np.outer(a, a) / m) @ masses
    return ResidueLaw(m, masses, tv, fourier)


def residue_law(spec: ChainSpec, m: int, pins=None) -> ResidueLaw:
    """Exact law of ``S_N mod m`` with its distance to uniform and its DFT."""
    if m < 2:
        raise ValueError("modulus must be at least 2")
    masks = pin_masks(spec, pins)

    def shift(F, f):
        out = np.empty_like(F)
        for y in range(f.size):
            out[y] = np.roll(F[y], int(f[y]) % m)
        return out

    F = np.zeros((spec.states[0], m))
    F[np.arange(spec.states[0]), spec.value(1) % m] = spec.initial
    if masks[0] is not None:
        F *= masks[0][:, None]
    for n in range(2, spec.N + 1):
        F = shift(spec.kernel(n - 1).T @ F, spec.value(n))
        if masks[n - 1] is not None:
            F *= masks[n - 1][:, None]
    masses = F.sum(axis=0)
    total = masses.sum()
    if total <= 0:
        raise ImpossiblePin("pinned configuration has probability 0")
    return residue_law_from_masses(masses / total)


def residues_of_pmf(pmf: SumPmf, m: int) -> ResidueLaw:
    masses = np.bincount(pmf.support % m, weights=pmf.probs, minlength=m)
    return residue_law_from_masses(masses / masses.sum())
