"""Path enumeration for small chains.

Independent of the dynamic programs in :mod:`edgelab.oracle`; used as the
reference in tests and in the acceptance suite.
"""
from __future__ import annotations

import itertools

import numpy as np

from .chain import ChainSpec, PinSet

MAX_PATHS = 2_000_000


def all_paths(spec: ChainSpec):
    """Every path as an ``(n_paths, N)`` index array with its probability."""
    count = int(np.prod(spec.states, dtype=float))
    if count > MAX_PATHS:
        raise ValueError(f"{count} paths exceed the enumeration cap")
    paths = np.array(list(itertools.product(*[range(s) for s in spec.states])),
                     dtype=np.int64).reshape(-1, spec.N)
    prob = spec.initial[paths[:, 0]].copy()
    for n in range(1, spec.N):
        prob *= spec.kernels[n - 1][paths[:, n - 1], paths[:, n]]
    return paths, prob


def path_sums(spec: ChainSpec, paths) -> np.ndarray:
    return sum(spec.values[n][paths[:, n]] for n in range(spec.N))


def _select(spec, paths, prob, pins):
    keep = np.ones(len(paths), bool)
    for n, s in PinSet.of(pins):
        keep &= paths[:, n - 1] == s
    return paths[keep], prob[keep]


def brute_pmf(spec: ChainSpec, pins=None) -> dict:
    """``{k: P(S_N = k | pins)}`` by enumeration."""
    paths, prob = _select(spec, *all_paths(spec), pins)
    sums = path_sums(spec, paths)
    total = prob.sum()
    out = {}
    for k, p in zip(sums, prob):
        out[int(k)] = out.get(int(k), 0.0) + p / total
    return out


def brute_char_fn(spec: ChainSpec, t: float, pins=None) -> complex:
    paths, prob = _select(spec, *all_paths(spec), pins)
    return complex(np.exp(1j * t * path_sums(spec, paths)) @ prob / prob.sum())


def brute_marginals(spec: ChainSpec) -> list:
    paths, prob = all_paths(spec)
    return [np.bincount(paths[:, n], weights=prob, minlength=spec.states[n])
            for n in range(spec.N)]


def brute_conditional_joint(spec: ChainSpec, pins, steps) -> dict:
    """Joint law of ``(X_n)_{n in steps}`` given the pins, as ``{states: prob}``."""
    paths, prob = _select(spec, *all_paths(spec), pins)
    idx = np.asarray(steps, int) - 1
    out = {}
    for row, p in zip(map(tuple, paths[:, idx]), prob / prob.sum()):
        out[row] = out.get(row, 0.0) + p
    return out


def brute_pin_probability(spec: ChainSpec, pins) -> float:
    return float(_select(spec, *all_paths(spec), pins)[1].sum())
