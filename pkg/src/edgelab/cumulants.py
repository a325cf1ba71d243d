"""Derivatives of log-characteristic functions by jet propagation.

The central routine propagates, state by state, the jet in ``z`` of
``E[exp((i t0 + z) S_n) 1{X_n = x}]`` through the chain.  Values are
centred by the per-step means so the jets stay of moderate size, and the
state jets are renormalized every step by their total, whose logarithm is
accumulated.  This keeps high cumulants accurate to near machine
precision even when ``E[exp(z S_N)]`` spans many orders of magnitude.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import factorial

import numpy as np

from .chain import ChainSpec, PinSet, pin_masks, pin_probability
from .errors import DegenerateVariance, ImpossiblePin, ResonantDegenerate
from .jets import LOG_MIN, Jet, jet_div_rows, jet_log

SIGMA_MIN = 1e-9
BASE_MIN = 1e-9
# below this ratio between the total and the largest state jet the total is
# a poor divisor, so the step is rescaled by a plain number instead
_WELL_CONDITIONED = 1e-3


def _exp_table(f, p):
    """Rows ``f(y)^k / k!`` for k = 0..p."""
    k = np.arange(p + 1)
    fact = np.array([factorial(j) for j in k], float)
    return (np.asarray(f, float)[:, None] ** k[None, :]) / fact


def _toeplitz_rows(E):
    """Lower-triangular Toeplitz matrices for per-state multiplication."""
    S, q = E.shape
    T = np.zeros((S, q, q), complex)
    for j in range(q):
        T[:, j:, j] = E[:, : q - j]
    return T


def log_mgf_jet(spec: ChainSpec, p: int, t0: float = 0.0, pins=None):
    """Jet in ``z`` of ``log E[exp((i t0 + z)(S_N - A_N)) | pins]``.

    ``A_N`` is the sum of unconditional per-step means.  Returns the jet
    (constant term on an arbitrary branch) together with ``A_N`` and the
    exact conditional base value ``E[exp(i t0 S_N) | pins]``.
    """
    masks = pin_masks(spec, pins)
    means = spec.step_means
    log_acc = np.zeros(p + 1, complex)
    W = None
    for n in range(1, spec.N + 1):
        c = spec.value(n) - means[n - 1]
        E = _exp_table(c, p) * np.exp(1j * t0 * c)[:, None]
        if n == 1:
            G = spec.initial[:, None] * np.eye(1, p + 1)
        else:
            G = spec.kernel(n - 1).T @ W
        W = np.einsum("ykj,yj->yk", _toeplitz_rows(E), G)
        if masks[n - 1] is not None:
            W = W * masks[n - 1][:, None]
        total = W.sum(axis=0)
        scale = np.abs(W[:, 0]).max()
        if scale == 0:
            raise ImpossiblePin("pinned configuration has probability 0")
        if abs(total[0]) >= _WELL_CONDITIONED * scale:
            log_acc += jet_log(Jet(total)).coeffs
            W = jet_div_rows(W, total)
        else:
            log_acc[0] += np.log(scale)
            W = W / scale
    final = W.sum(axis=0)
    if abs(final[0]) <= LOG_MIN * np.abs(W[:, 0]).max():
        # the state jets cancel: E exp(i t0 S_N) is zero to working precision
        raise ResonantDegenerate(f"characteristic function vanishes at t = {t0:.6f}")
    log_acc += jet_log(Jet(final)).coeffs
    if len(PinSet.of(pins)):
        log_acc[0] -= np.log(pin_probability(spec, pins))
    A = float(means.sum())
    base = np.exp(log_acc[0] + 1j * t0 * A)
    return Jet(log_acc), A, complex(base)


def _jsonable(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        arr = np.asarray(x, complex)
        if arr.ndim == 0:
            return [float(arr.real), float(arr.imag)]
        return [[float(v.real), float(v.imag)] for v in arr]
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


@dataclass(frozen=True)
class CumulantData:
    """Moments and normalized log-characteristic derivatives of ``S_N``.

    ``lambda_derivs[j - 3]`` is the ``j``-th derivative at 0 of
    ``h -> log E[exp(i h (S_N - a_N) / sigma_N)] + h^2 / 2``, and
    ``kappas[j - 1]`` is the ``j``-th cumulant of ``S_N``.
    """

    r: int
    mean: float
    sigma: float
    lambda_derivs: np.ndarray
    kappas: np.ndarray

    def to_json(self) -> str:
        return json.dumps({
            "r": self.r,
            "mean": self.mean,
            "sigma": self.sigma,
            "lambda_derivs": _jsonable(self.lambda_derivs),
            "kappas": _jsonable(self.kappas),
        })

    def lambda_deriv(self, j: int) -> complex:
        if j < 3:
            return 0j
        return complex(self.lambda_derivs[j - 3])


def cumulants_at_zero(spec: ChainSpec, r: int, pins=None) -> CumulantData:
    """Cumulants of ``S_N`` (given the pins) up to order ``r + 2``."""
    p = r + 2
    L, A, _ = log_mgf_jet(spec, p, 0.0, pins)
    kappas = (L.derivatives()).real.copy()
    kappas[0] = 0.0
    mean = A + kappas[1]
    var = kappas[2]
    if not var > SIGMA_MIN**2:
        raise DegenerateVariance(f"variance {var:.3e} is degenerate")
    sigma = float(np.sqrt(var))
    j = np.arange(3, p + 1)
    lam = (1j ** j) * kappas[3:] / sigma ** j
    out = kappas[1:].copy()
    out[0] = mean
    return CumulantData(r, float(mean), sigma, lam, out)


@dataclass(frozen=True)
class ResonantJetData:
    """Log-jet of ``h -> E[exp(i (t + h / sigma) S_N) | pins]`` at ``h = 0``.

    ``d`` is the linear coefficient with the mean drift removed and ``u``
    the quadratic correction, so that the log-jet reads
    ``c0 + i a h / sigma + d h + (u - 1) h^2 / 2 + (higher terms)``.
    """

    t: float
    base: complex
    log_jet: Jet
    d: complex
    u: complex
    sigma: float
    mean: float

    @property
    def order(self) -> int:
        return self.log_jet.order

    def tilde(self) -> np.ndarray:
        """Coefficients of ``h^k`` for k >= 3 (zeros below)."""
        c = self.log_jet.coeffs.copy()
        c[:3] = 0
        return c

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "base": _jsonable(self.base),
            "log_jet": _jsonable(self.log_jet.coeffs),
            "d": _jsonable(self.d),
            "u": _jsonable(self.u),
            "sigma": self.sigma,
            "mean": self.mean,
        })


def unconditional_moments(spec: ChainSpec):
    L, A, _ = log_mgf_jet(spec, 2, 0.0)
    var = float(2 * L.coeffs[2].real)
    if not var > SIGMA_MIN**2:
        raise DegenerateVariance(f"variance {var:.3e} is degenerate")
    return float(A + L.coeffs[1].real), float(np.sqrt(var))


def resonant_jet(spec: ChainSpec, t: float, r: int, pins=None, moments=None) -> ResonantJetData:
    """Shifted log-jet at the resonant frequency ``t``.

    The rescaling uses the unconditional mean and standard deviation of
    ``S_N`` (pass ``moments=(a_N, sigma_N)`` to reuse them).
    """
    t = float(getattr(t, "t", t))
    a, sigma = moments if moments is not None else unconditional_moments(spec)
    p = r + 2
    L, A, base = log_mgf_jet(spec, p, t, pins)
    if abs(base) <= BASE_MIN:
        raise ResonantDegenerate(f"|E exp(itS_N)| = {abs(base):.3e} at t = {t:.6f}")
    c = L.coeffs.copy()
    # undo centring: add (i t + z) A, then rescale z = i h / sigma
    c[1] += A
    c = c * (1j / sigma) ** np.arange(p + 1)
    c[0] = np.log(base)
    d = c[1] - 1j * a / sigma
    u = 2 * c[2] + 1
    return ResonantJetData(t, base, Jet(c), complex(d), complex(u), sigma, a)
