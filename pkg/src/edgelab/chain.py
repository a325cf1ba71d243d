"""Finite-state inhomogeneous Markov chains.

A chain of horizon ``N`` is described by an initial law over the step-1
states, ``N - 1`` row-stochastic kernels and ``N`` integer value vectors.
Steps are numbered ``1..N`` in every public function; the kernel between
step ``n`` and ``n + 1`` is ``spec.kernels[n - 1]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    ChainStructureError,
    DegenerateMarginal,
    EllipticityViolation,
    ImpossiblePin,
    LagOutOfRange,
)

S_MAX = 16
ROW_TOL = 1e-12
MIXING_MAX_LAG = 64
MIXING_MIN_CORR = 0.99
_DECAY_FLOOR = 1e-12


def _readonly(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Finite-horizon inhomogeneous chain with integer value maps.

    Parameters
    ----------
    initial : array_like
        Law of ``X_1``.
    kernels : sequence of 2-d arrays
        ``kernels[n-1][x, y] = P(X_{n+1} = y | X_n = x)``.
    values : sequence of 1-d integer arrays
        ``values[n-1][x] = f_n(x)``.
    K : int, optional
        Bound on ``|f_n|``; defaults to the observed maximum.
    """

    initial: np.ndarray
    kernels: tuple
    values: tuple
    K: Optional[int] = None
    s_max: int = S_MAX

    def __post_init__(self):
        init = _readonly(self.initial, float)
        kernels = tuple(_readonly(k, float) for k in self.kernels)
        values = []
        for n, v in enumerate(self.values, start=1):
            arr = np.asarray(v)
            if arr.ndim != 1 or arr.size == 0:
                raise ChainStructureError("value vector must be 1-d and non-empty", step=n)
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ChainStructureError("values must be integers", step=n)
            values.append(_readonly(arr, np.int64))
        values = tuple(values)
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "values", values)

        N = len(values)
        if N < 1:
            raise ChainStructureError("horizon must be at least 1")
        if len(kernels) != N - 1:
            raise ChainStructureError(f"expected {N - 1} kernels, got {len(kernels)}")
        states = [v.size for v in values]
        for n, s in enumerate(states, start=1):
            if s > self.s_max:
                raise ChainStructureError(f"{s} states exceed S_max={self.s_max}", step=n)
        if init.shape != (states[0],):
            raise ChainStructureError("initial law has wrong length", step=1)
        if np.any(init < 0) or abs(init.sum() - 1.0) > ROW_TOL:
            raise ChainStructureError("initial law is not a probability vector", step=1)
        for n, P in enumerate(kernels, start=1):
            if P.shape != (states[n - 1], states[n]):
                raise ChainStructureError(
                    f"kernel shape {P.shape} != {(states[n - 1], states[n])}", step=n)
            for x in range(P.shape[0]):
                row = P[x]
                if np.any(row < 0) or abs(row.sum() - 1.0) > ROW_TOL:
                    raise ChainStructureError("kernel row is not stochastic", step=n, row=x)
        vmax = max(int(np.abs(v).max()) for v in values)
        if self.K is None:
            object.__setattr__(self, "K", vmax)
        elif vmax > self.K:
            raise ChainStructureError(f"|f_n| reaches {vmax} > K={self.K}")

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def states(self) -> list:
        return [v.size for v in self.values]

    @cached_property
    def marginals(self) -> tuple:
        mus = [self.initial]
        for P in self.kernels:
            mu = _readonly(mus[-1] @ P, float)
            mus.append(mu)
        return tuple(mus)

    @cached_property
    def step_means(self) -> np.ndarray:
        return _readonly([mu @ f for mu, f in zip(self.marginals, self.values)], float)

    def kernel(self, n: int) -> np.ndarray:
        """Kernel from step ``n`` to ``n + 1`` (1-based)."""
        return self.kernels[n - 1]

    def value(self, n: int) -> np.ndarray:
        return self.values[n - 1]

    # -- constructors -----------------------------------------------------
    @classmethod
    def homogeneous(cls, initial, kernel, values, N, K=None):
        return cls(initial, [kernel] * (N - 1), [values] * N, K)

    @classmethod
    def iid(cls, law, values, N, K=None):
        law = np.asarray(law, float)
        return cls.homogeneous(law, np.tile(law, (law.size, 1)), values, N, K)

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "states": self.states,
            "initial": self.initial.tolist(),
            "kernels": [P.tolist() for P in self.kernels],
            "values": [v.tolist() for v in self.values],
            "K": int(self.K),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ChainSpec":
        spec = cls(d["initial"], d["kernels"], d["values"], d.get("K"))
        if "N" in d and d["N"] != spec.N:
            raise ChainStructureError(f"declared N={d['N']} but {spec.N} value vectors given")
        if "states" in d:
            for n, (want, got) in enumerate(zip(d["states"], spec.states), start=1):
                if want != got:
                    raise ChainStructureError(f"declared {want} states, found {got}", step=n)
        return spec


def load_chain(path) -> ChainSpec:
    with open(path) as fh:
        return ChainSpec.from_dict(json.load(fh))


def dump_chain(spec: ChainSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=1)


def marginals(spec: ChainSpec) -> tuple:
    """Laws ``mu_1 .. mu_N`` of the chain."""
    return spec.marginals


# --------------------------------------------------------------------------
# ellipticity and mixing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticityReport:
    C: float
    density_range: tuple
    mixing_fit: Optional[tuple]
    decay: np.ndarray = field(repr=False)
    decay_lags: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "density_range": [list(r) for r in self.density_range],
            "mixing_fit": None if self.mixing_fit is None else list(self.mixing_fit),
            "decay": dict(zip(map(int, self.decay_lags), map(float, self.decay))),
        }


def _check_marginals(spec):
    for n, mu in enumerate(spec.marginals, start=1):
        zero = np.flatnonzero(mu <= 0)
        if zero.size:
            raise DegenerateMarginal(f"mu_{n}({zero[0]}) = 0 at step {n}")


def one_step_densities(spec: ChainSpec) -> list:
    """``P(y|x) / mu_{n+1}(y)`` for each kernel; requires positive marginals."""
    _check_marginals(spec)
    return [P / mu for P, mu in zip(spec.kernels, spec.marginals[1:])]


def _mixing_decay(spec, max_lag):
    """sup over sampled starts n and states of |p_n^(k) - 1| for k = 2..max_lag."""
    N = spec.N
    lags = np.arange(2, max_lag + 1)
    decay = np.zeros(lags.size)
    if lags.size == 0:
        return lags, decay
    starts = np.arange(1, N - 1)
    if starts.size > 64:
        starts = np.unique(np.linspace(1, N - 2, 64).astype(int))
    mus = spec.marginals
    for n in starts:
        prod = spec.kernel(n)
        for k in range(2, max_lag + 1):
            if n + k > N:
                break
            prod = prod @ spec.kernel(n + k - 1)
            dev = np.abs(prod / mus[n + k - 1] - 1.0).max()
            decay[k - 2] = max(decay[k - 2], dev)
    return lags, decay


def usable_lags(lags, decay):
    """Mask of the leading run of lags whose decay sits above roundoff."""
    above = decay > _DECAY_FLOOR
    run = np.cumprod(above).astype(bool)
    return run


def _fit_geometric(lags, decay):
    usable = usable_lags(lags, decay)
    if usable.sum() < 3:
        return None
    x, y = lags[usable], np.log(decay[usable])
    corr = np.corrcoef(x, y)[0, 1]
    slope = np.polyfit(x, y, 1)[0]
    if not np.isfinite(corr) or -corr < MIXING_MIN_CORR or slope >= 0:
        return None
    delta = float(np.exp(slope))
    # smallest constant making C1 * delta^k dominate every computed lag
    C1 = float(np.max(decay[usable] / delta ** x))
    return C1, delta


def validate_chain(spec: ChainSpec) -> EllipticityReport:
    """Ellipticity constant relative to the marginals plus a geometric mixing fit."""
    _check_marginals(spec)
    C = 1.0
    ranges = []
    for n, (P, mu) in enumerate(zip(spec.kernels, spec.marginals[1:]), start=1):
        zero = np.argwhere(P <= 0)
        if zero.size:
            x, y = zero[0]
            raise EllipticityViolation(
                f"zero transition density at step {n}, row {x}, column {y}")
        d = P / mu
        lo, hi = float(d.min()), float(d.max())
        ranges.append((lo, hi))
        C = max(C, hi, 1.0 / lo)
    lags, decay = _mixing_decay(spec, min(spec.N - 1, MIXING_MAX_LAG))
    return EllipticityReport(C, tuple(ranges), _fit_geometric(lags, decay), decay, lags)


def k_step_density(spec: ChainSpec, n: int, k: int) -> np.ndarray:
    """Matrix of ``p_n^(k)(x, y) = P(X_{n+k} = y | X_n = x) / mu_{n+k}(y)``."""
    if k < 1 or n < 1 or n + k > spec.N:
        raise LagOutOfRange(f"need 1 <= n < n+k <= N, got n={n}, k={k}, N={spec.N}")
    prod = spec.kernel(n)
    for j in range(n + 1, n + k):
        prod = prod @ spec.kernel(j)
    mu = spec.marginals[n + k - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return prod / mu


def covariance(spec: ChainSpec, g_n, n: int, g_m, m: int) -> float:
    """Exact ``Cov(g_n(X_n), g_m(X_m))`` for ``n <= m``."""
    if n > m:
        return covariance(spec, g_m, m, g_n, n)
    g_n, g_m = np.asarray(g_n, float), np.asarray(g_m, float)
    mu_n, mu_m = spec.marginals[n - 1], spec.marginals[m - 1]
    prod = np.eye(mu_n.size)
    for j in range(n, m):
        prod = prod @ spec.kernel(j)
    joint = (mu_n * g_n) @ prod @ g_m
    return float(joint - (mu_n @ g_n) * (mu_m @ g_m))


# --------------------------------------------------------------------------
# pins and bridges
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PinSet:
    """Sorted map step -> pinned state index."""

    pins: tuple = ()

    def __post_init__(self):
        items = self.pins.items() if isinstance(self.pins, Mapping) else self.pins
        items = tuple(sorted((int(n), int(s)) for n, s in items))
        steps = [n for n, _ in items]
        if len(set(steps)) != len(steps):
            raise ImpossiblePin(f"duplicate pinned steps {steps}")
        object.__setattr__(self, "pins", items)

    @classmethod
    def of(cls, pins) -> "PinSet":
        if pins is None:
            return cls(())
        if isinstance(pins, PinSet):
            return pins
        return cls(pins)

    def __len__(self):
        return len(self.pins)

    def __iter__(self):
        return iter(self.pins)

    def as_dict(self) -> dict:
        return dict(self.pins)

    @property
    def steps(self) -> tuple:
        return tuple(n for n, _ in self.pins)

    def validate(self, spec: ChainSpec) -> None:
        for n, s in self.pins:
            if not 1 <= n <= spec.N:
                raise ImpossiblePin(f"pinned step {n} outside 1..{spec.N}")
            if not 0 <= s < spec.states[n - 1]:
                raise ImpossiblePin(f"pinned state {s} out of range at step {n}")
            if spec.marginals[n - 1][s] <= 0:
                raise ImpossiblePin(f"state {s} has zero mass at step {n}")


def pin_masks(spec: ChainSpec, pins) -> list:
    """Per-step 0/1 masks, or ``None`` where the step is free."""
    pins = PinSet.of(pins)
    pins.validate(spec)
    masks = [None] * spec.N
    for n, s in pins:
        m = np.zeros(spec.states[n - 1])
        m[s] = 1.0
        masks[n - 1] = m
    return masks


def pin_probability(spec: ChainSpec, pins) -> float:
    """Joint probability of the pinned configuration."""
    masks = pin_masks(spec, pins)
    v = spec.initial.copy()
    for n in range(1, spec.N + 1):
        if masks[n - 1] is not None:
            v = v * masks[n - 1]
        if n < spec.N:
            v = v @ spec.kernel(n)
    return float(v.sum())


@dataclass(frozen=True)
class Block:
    """Unpinned run of steps ``start .. start + spec.N - 1`` under conditioning."""

    start: int
    spec: ChainSpec

    @property
    def stop(self) -> int:
        return self.start + self.spec.N - 1


@dataclass(frozen=True)
class ConditionedChain:
    blocks: tuple
    pinned_sum: int
    pins: PinSet
    probability: float

    def marginals(self, N: int) -> list:
        """Conditional laws of ``X_1..X_N`` (point masses at pinned steps)."""
        out = [None] * N
        for b in self.blocks:
            for i, mu in enumerate(b.spec.marginals):
                out[b.start - 1 + i] = np.asarray(mu)
        return out


def _bridge_block(spec, lo, hi, left, right):
    """Exact bridge law of steps lo..hi given X_{lo-1}=left, X_{hi+1}=right."""
    # G[i](y) = P(X_{hi+1} = right | X_{lo+i} = y)
    length = hi - lo + 1
    G = [None] * length
    if right is None:
        for i in range(length):
            G[i] = np.ones(spec.states[lo + i - 1])
    else:
        g = spec.kernel(hi)[:, right]
        G[length - 1] = g
        for i in range(length - 2, -1, -1):
            g = spec.kernel(lo + i) @ g
            G[i] = g
    if left is None:
        init = spec.initial * G[0]
    else:
        init = spec.kernel(lo - 1)[left] * G[0]
    init = init / init.sum()
    kernels = []
    for i in range(length - 1):
        P = spec.kernel(lo + i)
        num = P * G[i + 1][None, :]
        den = G[i][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            Q = np.where(den > 0, num / np.where(den > 0, den, 1.0), P)
        # unreachable rows keep the original kernel; renormalize roundoff
        Q = Q / Q.sum(axis=1, keepdims=True)
        kernels.append(Q)
    values = [spec.value(n) for n in range(lo, hi + 1)]
    return ChainSpec(init, kernels, values, spec.K, spec.s_max)


def condition_chain(spec: ChainSpec, pins) -> ConditionedChain:
    """Split the chain at pinned coordinates into independent bridge blocks."""
    pins = PinSet.of(pins)
    prob = pin_probability(spec, pins)
    if prob <= 0:
        raise ImpossiblePin(f"pinned configuration {pins.as_dict()} has probability 0")
    blocks = []
    prev_step, prev_state = 0, None
    anchors = list(pins) + [(spec.N + 1, None)]
    for step, state in anchors:
        lo, hi = prev_step + 1, step - 1
        if lo <= hi:
            blocks.append(Block(lo, _bridge_block(spec, lo, hi, prev_state, state)))
        prev_step, prev_state = step, state
    pinned_sum = int(sum(spec.value(n)[s] for n, s in pins))
    return ConditionedChain(tuple(blocks), pinned_sum, pins, prob)


def conditional_marginals(spec: ChainSpec, pins) -> list:
    """Laws of ``X_n`` given the pins, for every step."""
    pins = PinSet.of(pins)
    if not len(pins):
        return [np.asarray(mu) for mu in spec.marginals]
    cc = condition_chain(spec, pins)
    out = cc.marginals(spec.N)
    for n, s in pins:
        e = np.zeros(spec.states[n - 1])
        e[s] = 1.0
        out[n - 1] = e
    return out
