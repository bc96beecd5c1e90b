import numpy as np
import pytest

import scaledls as s


def central_diff(f, z, h=1e-5):
    return (f(z + h) - f(z - h)) / (2.0 * h)


def bisect_root(f, lo, hi, iters=200):
    """Plain bisection; independent of the package's Newton machinery."""
    flo = f(lo)
    fhi = f(hi)
    assert flo * fhi < 0, "oracle bracket must straddle the root"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def logistic_dataset(n, p, seed=0, beta_scale=1.0, test_mask=False):
    rng = np.random.Generator(np.random.Philox(seed))
    X = rng.standard_normal((n, p))
    beta = rng.uniform(-beta_scale, beta_scale, p) / np.sqrt(p)
    prob = 1.0 / (1.0 + np.exp(-(X @ beta)))
    y = (rng.random(n) < prob).astype(np.float64)
    mask = None
    if test_mask:
        mask = np.zeros(n, dtype=bool)
        mask[rng.permutation(n)[: round(0.1 * n)]] = True
    return s.Dataset(X, y, mask), beta


def poisson_dataset(n, p, seed=0):
    rng = np.random.Generator(np.random.Philox(seed))
    X = rng.standard_normal((n, p)) * 0.3
    beta = rng.uniform(-0.5, 0.5, p)
    y = rng.poisson(np.exp(X @ beta)).astype(np.float64)
    return s.Dataset(X, y), beta


def linear_dataset(n, p, seed=0, noise=1.0, condition=None):
    rng = np.random.Generator(np.random.Philox(seed))
    X = rng.standard_normal((n, p))
    if condition is not None:
        X = X @ s.random_spd_root(p, condition, seed=seed + 1)
    beta = rng.uniform(-1, 1, p)
    y = X @ beta + noise * rng.standard_normal(n)
    return s.Dataset(X, y), beta


@pytest.fixture
def closed_form_families():
    return [
        s.LinearFamily(),
        s.LogisticFamily(),
        s.PoissonFamily(),
        s.SquareLinkFamily(),
        s.BoostingLinkFamily(),
    ]
