import numpy as np
import pytest
from hypothesis import strategies as st

from edgelab import ChainSpec


def random_spec(rng, N, states=3, K=2, eps0=0.2, vary_states=False):
    """Elliptic chain with random kernels and values in [-K, K]."""
    sizes = [int(rng.integers(1, states + 1)) if vary_states else states for _ in range(N)]
    init = rng.uniform(eps0, 1, sizes[0])
    kernels = []
    for a, b in zip(sizes, sizes[1:]):
        P = rng.uniform(eps0, 1, (a, b))
        kernels.append(P / P.sum(axis=1, keepdims=True))
    values = [rng.integers(-K, K + 1, s) for s in sizes]
    return ChainSpec(init / init.sum(), kernels, values, K)


def coin(N, p=0.5, values=(0, 1)):
    return ChainSpec.iid([1 - p, p], values, N)


@st.composite
def specs(draw, max_N=6, max_states=3, max_K=2):
    seed = draw(st.integers(0, 2**32 - 1))
    N = draw(st.integers(1, max_N))
    S = draw(st.integers(1, max_states))
    K = draw(st.integers(1, max_K))
    return random_spec(np.random.default_rng(seed), N, S, K, vary_states=draw(st.booleans()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
