"""Families of chains used by the experiments.

Every generator draws step ``n`` from its own random stream (seeded by
``(seed, n)``), so the chain of horizon ``N`` is a prefix of the chain of
horizon ``N' > N``.  This keeps ladder sweeps comparable across ``N``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..chain import ChainSpec
from ..errors import ParameterOutOfRange

DEFAULT_LADDER = (64, 256, 1024, 4096)
REGIMES = ("aperiodic", "periodic", "sparse-odd", "conditioned")


@dataclass(frozen=True)
class Scenario:
    """A chain family plus the horizons it is evaluated at.

    ``params`` depend on the generator:

    random-elliptic: ``states``, ``eps0``, ``K``
    even-lattice: ``states``, ``eps0``
    sparse-odd: ``c``, ``eps``
    balanced: ``lo``, ``hi`` (range of the flip probability)
    """

    name: str
    generator: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    ladder: tuple = DEFAULT_LADDER
    regime: str = "aperiodic"

    def __post_init__(self):
        ladder = tuple(int(n) for n in self.ladder)
        if not ladder or any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] < 2:
            raise ParameterOutOfRange(f"ladder {ladder} must be strictly increasing and >= 2")
        if self.generator not in GENERATORS:
            raise ParameterOutOfRange(f"unknown generator {self.generator!r}")
        if self.regime not in REGIMES:
            raise ParameterOutOfRange(f"unknown regime {self.regime!r}")
        object.__setattr__(self, "ladder", ladder)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"name": self.name, "generator": self.generator, "seed": self.seed,
                "params": dict(self.params), "ladder": list(self.ladder), "regime": self.regime}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(d["name"], d["generator"], int(d.get("seed", 0)), dict(d.get("params", {})),
                   tuple(d.get("ladder", DEFAULT_LADDER)), d.get("regime", "aperiodic"))


def _stream(seed, n):
    return np.random.default_rng([seed, n])


def _elliptic_row(rng, S, eps0):
    row = rng.uniform(eps0, 1.0, S)
    return row / row.sum()


def _random_elliptic(N, seed, states=3, eps0=0.5, K=2):
    if not 0 < eps0 <= 1:
        raise ParameterOutOfRange("eps0 must lie in (0, 1]")
    if not 1 <= states <= 16:
        raise ParameterOutOfRange("states must lie in 1..16")
    if K < 1:
        raise ParameterOutOfRange("K must be at least 1")
    init = _elliptic_row(_stream(seed, 0), states, eps0)
    kernels, values = [], []
    for n in range(1, N + 1):
        rng = _stream(seed, n)
        values.append(rng.integers(-K, K + 1, states))
        if n < N:
            kernels.append(np.array([_elliptic_row(rng, states, eps0) for _ in range(states)]))
    return ChainSpec(init, kernels, values, K)


def _even_lattice(N, seed, states=3, eps0=0.5):
    base = _random_elliptic(N, seed, states, eps0, 1)
    f = 2 * (np.arange(states) % 2)
    return ChainSpec(base.initial, base.kernels, [f] * N, 2)


def _coupling(rng, mu_from, mu_to, eps):
    """Kernel with marginals ``mu_from -> mu_to`` and density ``1 + eps * g``.

    ``g = a b^T`` with ``a`` centred under ``mu_from`` and ``b`` under
    ``mu_to``, scaled so that ``|eps g| <= 1/2``.
    """
    a = rng.standard_normal(mu_from.size)
    b = rng.standard_normal(mu_to.size)
    a -= a @ mu_from
    b -= b @ mu_to
    g = np.outer(a, b)
    peak = np.abs(g).max()
    if peak > 0:
        g *= min(eps, 0.5) / peak
    P = mu_to[None, :] * (1.0 + g)
    return P / P.sum(axis=1, keepdims=True)


def sparse_odd_marginal(n, c):
    p = min(c / n, 1.0 / 3.0)
    return np.array([(1 - p) / 2, p, (1 - p) / 2])


def _sparse_odd(N, seed, c=0.5, eps=0.5):
    if c <= 0:
        raise ParameterOutOfRange("c must be positive")
    if not 0 <= eps <= 0.5:
        raise ParameterOutOfRange("eps must lie in [0, 1/2]")
    mus = [sparse_odd_marginal(n, c) for n in range(1, N + 1)]
    kernels = [_coupling(_stream(seed, n), mus[n - 1], mus[n], eps) for n in range(1, N)]
    return ChainSpec(mus[0], kernels, [np.array([0, 1, 2])] * N, 2)


def _balanced(N, seed, lo=0.35, hi=0.65):
    if not 0 < lo <= hi < 1:
        raise ParameterOutOfRange("need 0 < lo <= hi < 1")
    kernels = []
    for n in range(1, N):
        a = _stream(seed, n).uniform(lo, hi)
        kernels.append(np.array([[1 - a, a], [a, 1 - a]]))
    return ChainSpec([0.5, 0.5], kernels, [np.array([0, 1])] * N, 1)


GENERATORS = {
    "random-elliptic": _random_elliptic,
    "even-lattice": _even_lattice,
    "sparse-odd": _sparse_odd,
    "balanced": _balanced,
}


def generate_scenario(scenario: Scenario, N: Optional[int] = None) -> ChainSpec:
    """The scenario's chain at horizon ``N`` (default: the top of the ladder)."""
    N = scenario.ladder[-1] if N is None else int(N)
    if N < 1:
        raise ParameterOutOfRange("N must be positive")
    try:
        return GENERATORS[scenario.generator](N, scenario.seed, **scenario.params)
    except TypeError as exc:
        raise ParameterOutOfRange(f"bad parameters for {scenario.generator}: {exc}") from None


PRESETS = {
    "random-elliptic": Scenario("random-elliptic", "random-elliptic", 7,
                                {"states": 3, "eps0": 0.5, "K": 2}),
    "random-elliptic-k1": Scenario("random-elliptic-k1", "random-elliptic", 11,
                                   {"states": 4, "eps0": 0.3, "K": 1}),
    "even-lattice": Scenario("even-lattice", "even-lattice", 3, {"states": 3, "eps0": 0.5},
                             regime="periodic"),
    "sparse-odd-0.05": Scenario("sparse-odd-0.05", "sparse-odd", 5, {"c": 0.05},
                                regime="sparse-odd"),
    "sparse-odd-0.5": Scenario("sparse-odd-0.5", "sparse-odd", 5, {"c": 0.5},
                               regime="sparse-odd"),
    "balanced": Scenario("balanced", "balanced", 13, {}),
}


def preset(name: str, **changes) -> Scenario:
    if name not in PRESETS:
        raise ParameterOutOfRange(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name].with_(**changes) if changes else PRESETS[name]
