"""Truncated complex Taylor series.

A :class:`Jet` of order ``p`` stores ``c_0..c_p`` with ``c_k = f^(k)(0)/k!``.
Products and compositions are truncated at the common order.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import LogOfVanishingJet, OrderMismatch

LOG_MIN = 1e-13


@dataclass(frozen=True, eq=False)
class Jet:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("a jet needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def constant(cls, c, order: int) -> "Jet":
        out = np.zeros(order + 1, complex)
        out[0] = c
        return cls(out)

    @classmethod
    def variable(cls, order: int, scale=1.0) -> "Jet":
        out = np.zeros(order + 1, complex)
        if order >= 1:
            out[1] = scale
        return cls(out)

    def derivative(self, k: int) -> complex:
        """``f^(k)(0)``."""
        return complex(self.coeffs[k] * factorial(k))

    def derivatives(self) -> np.ndarray:
        return self.coeffs * np.array([factorial(k) for k in range(self.order + 1)], float)

    def __call__(self, h):
        return np.polynomial.polynomial.polyval(h, self.coeffs)

    def __add__(self, other):
        if isinstance(other, Jet):
            _same(self, other)
            return Jet(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] += other
        return Jet(c)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet(self.coeffs * other)

    __rmul__ = __mul__


def _same(a: Jet, b: Jet):
    if a.order != b.order:
        raise OrderMismatch(f"jet orders differ: {a.order} vs {b.order}")


def jet_mul(a: Jet, b: Jet) -> Jet:
    _same(a, b)
    return Jet(np.convolve(a.coeffs, b.coeffs)[: a.order + 1])


def jet_exp(a: Jet) -> Jet:
    """``exp`` of a jet via ``b' = a' b``."""
    p = a.order
    c = a.coeffs
    b = np.zeros(p + 1, complex)
    b[0] = np.exp(c[0])
    for k in range(1, p + 1):
        j = np.arange(1, k + 1)
        b[k] = (j * c[j]) @ b[k - j] / k
    return Jet(b)


def jet_log(a: Jet, branch=None) -> Jet:
    """``log`` of a jet via ``a b' = a'``; constant term on the principal branch.

    ``branch`` overrides the constant term, which must be a logarithm of
    ``a.coeffs[0]``.
    """
    p = a.order
    c = a.coeffs
    if abs(c[0]) <= LOG_MIN:
        raise LogOfVanishingJet(f"|c_0| = {abs(c[0]):.3e} too small for a logarithm")
    b = np.zeros(p + 1, complex)
    b[0] = np.log(c[0]) if branch is None else branch
    for k in range(1, p + 1):
        j = np.arange(1, k)
        b[k] = (c[k] - (j * b[j]) @ c[k - j] / k) / c[0]
    return Jet(b)


def jet_div(a: Jet, b: Jet) -> Jet:
    _same(a, b)
    return Jet(jet_div_rows(a.coeffs[None, :], b.coeffs)[0])


def jet_div_rows(rows: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Divide every row of a ``(n, p+1)`` coefficient array by the jet ``b``."""
    if abs(b[0]) == 0:
        raise LogOfVanishingJet("division by a jet with zero constant term")
    q = np.zeros(rows.shape, complex)
    for k in range(rows.shape[1]):
        acc = rows[:, k].astype(complex)
        if k:
            acc = acc - q[:, :k] @ b[k:0:-1]
        q[:, k] = acc / b[0]
    return q


def jet_compose_linear(a: Jet, scale) -> Jet:
    """``h -> f(scale * h)``."""
    return Jet(a.coeffs * scale ** np.arange(a.order + 1))
