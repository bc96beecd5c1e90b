"""Seeded synthetic designs and CSV ingestion.

Designs are X = W S where W has iid standardized entries (standard normal,
Rademacher, or centered unit exponential) and S is a symmetric positive
definite covariance square root. All randomness flows through a Philox
counter-based generator keyed by the spec seed, so identical specs give
bit-identical data on any platform. Draw order within a spec is fixed:
design entries, then coefficient signs, then the response, then the
test split.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CsvParseError, InsufficientDataError
from .regression import Dataset

BASE_DISTS = ("gaussian", "rademacher", "expminusone")
RESPONSES = ("logistic", "poisson", "none")

# Poisson rates above e^10 make count sampling useless and eventually
# overflow; the clip is recorded in Dataset.meta.
POISSON_PREDICTOR_CLIP = 10.0


@dataclass(frozen=True)
class RandomSpd:
    """A seeded random covariance with the given condition number."""

    condition: float
    seed: int = 0

    def __post_init__(self):
        if not self.condition >= 1.0:
            raise ValueError(f"condition must be >= 1, got {self.condition}")


@dataclass(frozen=True)
class WellSpread:
    """Coefficients with entries +-tau/sqrt(p) and seeded signs."""

    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True, eq=False)
class DesignSpec:
    """Recipe for one synthetic dataset."""

    n: int
    p: int
    base_dist: str = "gaussian"
    covariance: RandomSpd | None = None
    beta_pop: object = WellSpread(1.0)
    response: str = "logistic"
    seed: int = 0

    def __post_init__(self):
        if not self.n > self.p >= 1:
            raise ValueError(f"need n > p >= 1, got n={self.n}, p={self.p}")
        if self.base_dist not in BASE_DISTS:
            raise ValueError(f"base_dist must be one of {BASE_DISTS}")
        if self.response not in RESPONSES:
            raise ValueError(f"response must be one of {RESPONSES}")


def random_spd_root(p, condition, seed=0):
    """Symmetric positive definite square root Q D^(1/2) Q'.

    Q is Haar-distributed (QR of a seeded Gaussian matrix with the R sign
    fix) and the eigenvalues of D are log-uniformly spaced on
    [1, condition]. Deterministic per seed.
    """
    if not condition >= 1.0:
        raise ValueError(f"condition must be >= 1, got {condition}")
    rng = np.random.Generator(np.random.Philox(seed))
    a = rng.standard_normal((p, p))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    d = np.geomspace(1.0, condition, num=p)
    return (q * np.sqrt(d)) @ q.T


def _draw_whitened(rng, n, p, base_dist):
    if base_dist == "gaussian":
        return rng.standard_normal((n, p))
    if base_dist == "rademacher":
        return rng.integers(0, 2, size=(n, p)).astype(np.float64) * 2.0 - 1.0
    # exponential(1) - 1 already has mean 0 and variance 1
    return rng.exponential(1.0, size=(n, p)) - 1.0


def _resolve_beta(rng, spec):
    if isinstance(spec.beta_pop, WellSpread):
        signs = rng.integers(0, 2, size=spec.p).astype(np.float64) * 2.0 - 1.0
        return signs * (spec.beta_pop.tau / np.sqrt(spec.p))
    beta = np.asarray(spec.beta_pop, dtype=np.float64)
    if beta.shape != (spec.p,):
        raise ValueError(f"explicit beta must have length {spec.p}")
    return beta


def sample_dataset(spec):
    """Draw (Dataset, beta_pop) according to the spec, with a 10% test split."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    w = _draw_whitened(rng, spec.n, spec.p, spec.base_dist)
    if spec.covariance is None:
        X = w
    else:
        root = random_spd_root(spec.p, spec.covariance.condition, spec.covariance.seed)
        X = w @ root
    beta = _resolve_beta(rng, spec)
    z = X @ beta

    meta = {"base_dist": spec.base_dist, "response": spec.response}
    if spec.response == "logistic":
        y = (rng.random(spec.n) < expit(z)).astype(np.float64)
    elif spec.response == "poisson":
        clipped = z > POISSON_PREDICTOR_CLIP
        if clipped.any():
            meta["poisson_clip_count"] = int(clipped.sum())
            meta["poisson_clip_threshold"] = POISSON_PREDICTOR_CLIP
            z_rate = np.minimum(z, POISSON_PREDICTOR_CLIP)
        else:
            z_rate = z
        y = rng.poisson(np.exp(z_rate)).astype(np.float64)
    else:  # "none": noiseless linear response, useful for design-only runs
        y = z.copy()

    n_test = round(0.1 * spec.n)
    if n_test == 0:
        mask = None  # too few rows for a meaningful split
    else:
        mask = np.zeros(spec.n, dtype=bool)
        mask[rng.permutation(spec.n)[:n_test]] = True
    return Dataset(X=X, y=y, test_mask=mask, meta=meta), beta


def _parse_cell(text, row_no, col_no):
    try:
        return float(text)
    except ValueError:
        raise CsvParseError(
            f"could not parse {text!r} as a number at row {row_no}, "
            f"column {col_no}",
            row=row_no,
            col=col_no,
        ) from None


def load_csv(path, response_column, delimiter=",", has_header=True,
             test_fraction=0.1, seed=0):
    """Load a dense numeric CSV into a Dataset.

    ``response_column`` is a header name (requires ``has_header``) or a
    0-based column index. The remaining columns become X in file order.
    ``test_fraction`` = 0 skips the split; otherwise a seeded mask of that
    fraction is drawn. Row/column positions in parse errors are 1-based
    file coordinates.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    if not rows:
        raise InsufficientDataError(f"{path} is empty")

    header = None
    first_data_row = 1
    if has_header:
        header = [name.strip() for name in rows[0]]
        rows = rows[1:]
        first_data_row = 2
    if not rows:
        raise InsufficientDataError(f"{path} has a header but no data rows")

    width = len(rows[0])
    if isinstance(response_column, str):
        if header is None:
            raise ValueError("a named response column requires has_header=True")
        try:
            y_col = header.index(response_column)
        except ValueError:
            raise ValueError(
                f"response column {response_column!r} not found in header {header}"
            ) from None
    else:
        y_col = int(response_column)
        if not 0 <= y_col < width:
            raise ValueError(
                f"response column index {y_col} out of range for {width} columns"
            )

    values = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise CsvParseError(
                f"row {first_data_row + i} has {len(row)} fields, expected {width}",
                row=first_data_row + i,
            )
        for j, cell in enumerate(row):
            values[i, j] = _parse_cell(cell.strip(), first_data_row + i, j + 1)

    n = len(rows)
    p = width - 1
    if p < 1:
        raise InsufficientDataError("need at least one predictor column")
    if n < p + 2:
        raise InsufficientDataError(
            f"{n} data rows is too few for {p} predictors (need at least {p + 2})"
        )

    y = values[:, y_col].copy()
    X = np.delete(values, y_col, axis=1)

    mask = None
    if test_fraction > 0:
        n_test = round(test_fraction * n)
        if n_test > 0:
            rng = np.random.Generator(np.random.Philox(seed))
            mask = np.zeros(n, dtype=bool)
            mask[rng.permutation(n)[:n_test]] = True
    return Dataset(X=X, y=y, test_mask=mask, meta={"source": str(path)})


def write_csv(data, path, delimiter=",", response_name="y"):
    """Write a Dataset as CSV: response first, predictors x1..xp after.

    Values use repr-faithful formatting so a round trip through load_csv
    reproduces the arrays exactly.
    """
    header = [response_name] + [f"x{j + 1}" for j in range(data.p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(header)
        for i in range(data.n):
            writer.writerow(
                [repr(float(data.y[i]))] + [repr(float(v)) for v in data.X[i]]
            )
