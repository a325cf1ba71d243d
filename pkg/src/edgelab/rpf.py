"""Sequential Perron-Frobenius triplets of perturbed transfer operators.

For a finite chain the operators

    (R_j g)(x) = sum_y P_j(x, y) exp(i u_{j+1}(y) + z f_{j+1}(y)) g(y)

are small matrices, and the triplets are built by normalized products:
the functionals ``nu_j`` forward from the initial law, the vectors
``h_j`` backward from the constant function, and ``lambda_j`` from the
forward normalization.  The eigen-equations

    R_j h_{j+1} = lambda_j h_j,     R_j^* nu_j = lambda_j nu_{j+1}

then hold by construction, with ``nu_j(1) = nu_j(h_j) = 1``.  What is not
automatic is independence from the seeds at the ends of the horizon; a
second seeding is run and compared on the middle third.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chain import ChainSpec
from .errors import NoContraction, StepOutOfRange

SEED_TOL = 1e-8
DECAY_FLOOR = 1e-13
DECAY_MAX_LAG = 48


def _phase(spec, u, n):
    return np.zeros(spec.states[n - 1]) if u is None else np.asarray(u[n - 1], float)


def _weights(spec, z, u, n):
    """``exp(i u_n + z f_n)`` on step-``n`` states."""
    return np.exp(1j * _phase(spec, u, n) + z * spec.value(n))


def transfer_apply(spec: ChainSpec, j: int, z: complex, u, g) -> np.ndarray:
    """``R_j g`` for a function ``g`` on step ``j + 1`` states."""
    if not 1 <= j < spec.N:
        raise StepOutOfRange(f"transfer operator index {j} outside 1..{spec.N - 1}")
    return spec.kernel(j) @ (_weights(spec, z, u, j + 1) * np.asarray(g))


def transfer_dual(spec: ChainSpec, j: int, z: complex, u, nu) -> np.ndarray:
    """``R_j^* nu`` for a measure ``nu`` on step ``j`` states (as weights)."""
    if not 1 <= j < spec.N:
        raise StepOutOfRange(f"transfer operator index {j} outside 1..{spec.N - 1}")
    return (np.asarray(nu) @ spec.kernel(j)) * _weights(spec, z, u, j + 1)


@dataclass(frozen=True)
class RpfTriplet:
    """``(lambda_j, h_j, nu_j)``; ``nu`` is a density against ``mu_j``."""

    j: int
    lam: complex
    h: np.ndarray
    nu: np.ndarray

    def to_dict(self) -> dict:
        return {"j": self.j,
                "lambda": [float(np.real(self.lam)), float(np.imag(self.lam))],
                "h_re": self.h.real.tolist(), "h_im": self.h.imag.tolist(),
                "nu_re": self.nu.real.tolist(), "nu_im": self.nu.imag.tolist()}


@dataclass(frozen=True)
class RpfSequence:
    """All triplets of a horizon plus the seed-dependence of the interior."""

    z: complex
    lams: np.ndarray
    hs: tuple = field(repr=False)
    nus: tuple = field(repr=False)
    seed_discrepancy: float = 0.0
    u: Optional[tuple] = field(default=None, repr=False)

    def __len__(self):
        return len(self.lams)

    def __getitem__(self, j: int) -> RpfTriplet:
        return RpfTriplet(j, complex(self.lams[j - 1]), self.hs[j - 1], self.nus[j - 1])

    def __iter__(self):
        return (self[j] for j in range(1, len(self.lams) + 1))

    def nu_measure(self, spec: ChainSpec, j: int) -> np.ndarray:
        return self.nus[j - 1] * spec.marginals[j - 1]

    def to_json(self) -> str:
        return json.dumps({"z": [self.z.real, self.z.imag],
                           "seed_discrepancy": self.seed_discrepancy,
                           "triplets": [t.to_dict() for t in self]})


def _run(spec, z, u, nu1, hN):
    N = spec.N
    nus = [np.asarray(nu1, complex)]
    lams = np.zeros(N - 1, complex)
    for j in range(1, N):
        nxt = transfer_dual(spec, j, z, u, nus[-1])
        lams[j - 1] = nxt.sum()
        nus.append(nxt / lams[j - 1])
    hs = [None] * N
    hs[N - 1] = np.asarray(hN, complex)
    for j in range(N - 1, 0, -1):
        hs[j - 1] = transfer_apply(spec, j, z, u, hs[j]) / lams[j - 1]
    return lams, hs, nus


def rpf_triplets(spec: ChainSpec, z: complex = 0.0, u=None, check: bool = True) -> RpfSequence:
    """Triplets for steps ``1..N-1`` (``lambda_j`` pairs step ``j`` with ``j + 1``).

    The second seeding starts the functionals from the uniform law and the
    vectors from a non-constant positive function; the largest relative
    difference of the normalized outputs over the middle third is reported
    as ``seed_discrepancy``.  With ``check``, a discrepancy above
    ``1e-8`` raises :class:`NoContraction`.
    """
    if spec.N < 2:
        raise StepOutOfRange("need at least two steps for a transfer operator")
    z = complex(z)
    lams, hs, nus = _run(spec, z, u, spec.initial, np.ones(spec.states[-1]))
    S1, SN = spec.states[0], spec.states[-1]
    lams2, hs2, nus2 = _run(spec, z, u, np.full(S1, 1.0 / S1), 1.0 + np.arange(SN) / SN)
    N = spec.N
    lo, hi = N // 3 + 1, max(2 * N // 3, N // 3 + 1)
    disc = 0.0
    for j in range(lo, hi + 1):
        # the second h is normalized against the first nu so both satisfy nu(h) = 1
        h2 = hs2[j - 1] / (nus[j - 1] @ hs2[j - 1])
        disc = max(disc,
                   abs(lams2[j - 1] - lams[j - 1]) / abs(lams[j - 1]),
                   np.abs(h2 - hs[j - 1]).max() / np.abs(hs[j - 1]).max(),
                   np.abs(nus2[j - 1] - nus[j - 1]).sum())
    if check and not disc < SEED_TOL:
        raise NoContraction(f"normalized products depend on the seed (discrepancy {disc:.3e})",
                            residual=disc)
    mus = spec.marginals
    nu_density = tuple(nu / mu for nu, mu in zip(nus, mus))
    return RpfSequence(z, lams, tuple(hs), nu_density, float(disc),
                       None if u is None else tuple(map(np.asarray, u)))


@dataclass(frozen=True)
class RpfResidualReport:
    primal: np.ndarray
    dual: np.ndarray
    normalization: np.ndarray
    decay: np.ndarray
    decay_ratio: Optional[float]
    window: tuple

    @property
    def max_primal(self) -> float:
        return float(self.primal[self.window[0] - 1: self.window[1]].max())

    @property
    def max_dual(self) -> float:
        return float(self.dual[self.window[0] - 1: self.window[1]].max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "primal_residual", "dual_residual"])
        for j, (p, d) in enumerate(zip(self.primal, self.dual), start=1):
            w.writerow([j, repr(float(p)), repr(float(d))])
        return buf.getvalue()


def product_deviation(spec: ChainSpec, seq: RpfSequence, j: int, q, n_max: int) -> np.ndarray:
    """``|R^{j,n} q_n / lambda_{j,n} - nu_{j+n}(q_n) h_j|_inf`` for n = 1..n_max.

    ``q`` is a callable giving the test function on step ``j + n``.
    """
    out = np.zeros(n_max)
    for n in range(1, n_max + 1):
        qn = np.asarray(q(j + n), complex)
        v = qn
        for i in range(j + n - 1, j - 1, -1):
            v = transfer_apply(spec, i, seq.z, seq.u, v) / seq.lams[i - 1]
        target = (seq.nu_measure(spec, j + n) @ qn) * seq.hs[j - 1]
        out[n - 1] = np.abs(v - target).max()
    return out


def _decay_fit(dev):
    above = np.cumprod(dev > DECAY_FLOOR).astype(bool)
    n = np.arange(1, dev.size + 1)[above]
    if n.size < 2:
        # already at roundoff after one step
        return 0.0 if n.size < dev.size else None
    slope = np.polyfit(n, np.log(dev[above]), 1)[0]
    return float(np.exp(slope))


def verify_rpf(spec: ChainSpec, seq: RpfSequence, n_tests: int = 4, seed: int = 0) -> RpfResidualReport:
    """Eigen-equation residuals and the geometric decay of normalized products."""
    N = spec.N
    primal = np.zeros(N - 1)
    dual = np.zeros(N - 1)
    norm = np.zeros(N)
    for j in range(1, N):
        lhs = transfer_apply(spec, j, seq.z, seq.u, seq.hs[j])
        primal[j - 1] = np.abs(lhs - seq.lams[j - 1] * seq.hs[j - 1]).max()
        dlhs = transfer_dual(spec, j, seq.z, seq.u, seq.nu_measure(spec, j))
        dual[j - 1] = np.abs(dlhs - seq.lams[j - 1] * seq.nu_measure(spec, j + 1)).sum()
    for j in range(1, N + 1):
        nu = seq.nu_measure(spec, j)
        norm[j - 1] = max(abs(nu.sum() - 1), abs(nu @ seq.hs[j - 1] - 1))
    lo, hi = N // 3 + 1, max(2 * N // 3, N // 3 + 1)
    n_max = min(DECAY_MAX_LAG, N - lo)
    rng = np.random.default_rng(seed)
    tables = [[rng.standard_normal(s) for s in spec.states] for _ in range(n_tests)]
    decay = np.zeros(n_max)
    for tab in tables:
        decay = np.maximum(decay, product_deviation(spec, seq, lo, lambda n: tab[n - 1], n_max))
    return RpfResidualReport(primal, dual, norm, decay, _decay_fit(decay), (lo, hi))
