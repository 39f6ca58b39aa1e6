import numpy as np
import pytest

from abcopt import ParamSpec, SearchSpace


def random_space(rng: np.random.Generator, max_dims: int = 5) -> SearchSpace:
    """A random mixed-kind space for fuzz tests."""
    n = int(rng.integers(1, max_dims + 1))
    params = []
    for i in range(n):
        kind = ("continuous", "integer", "categorical")[int(rng.integers(3))]
        if kind == "continuous":
            lower = float(rng.uniform(-100, 99))
            params.append(ParamSpec(f"p{i}", kind, lower=lower, upper=lower + float(rng.uniform(0.5, 50))))
        elif kind == "integer":
            lower = int(rng.integers(-50, 50))
            params.append(ParamSpec(f"p{i}", kind, lower=lower, upper=lower + int(rng.integers(1, 40))))
        else:
            count = int(rng.integers(1, 6))
            params.append(ParamSpec(f"p{i}", kind, categories=tuple(f"c{j}" for j in range(count))))
    return SearchSpace(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
