"""Compiled kernels and the numpy fallback must agree bit-for-purpose."""

import os
import subprocess
import sys

import numpy as np
import pytest

import scaledls
from scaledls._backend import numpy_impl

try:
    from scaledls._backend import _kernels
except ImportError:
    _kernels = None

IMPLS = [numpy_impl] + ([_kernels] if _kernels is not None else [])
CODES = (
    numpy_impl.LINEAR,
    numpy_impl.LOGISTIC,
    numpy_impl.POISSON,
    numpy_impl.SQUARE_LINK,
    numpy_impl.BOOSTING_LINK,
)


def _grid():
    rng = np.random.Generator(np.random.Philox(42))
    return np.concatenate([np.linspace(-8, 8, 101), rng.standard_normal(400)])


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("code", CODES)
@pytest.mark.parametrize("order", range(5))
def test_ladder_agreement(code, order):
    z = _grid()
    a, bad_a = numpy_impl.ladder(code, order, z)
    b, bad_b = _kernels.ladder(code, order, z)
    assert bad_a == bad_b == -1
    np.testing.assert_allclose(a, b, rtol=5e-13, atol=5e-300)


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("code", CODES)
@pytest.mark.parametrize("c", [0.0, 0.37, 1.0, 4.0, -2.0])
def test_scale_terms_agreement(code, c):
    yhat = _grid()
    s2a, sda, bad_a = numpy_impl.scale_terms(code, c, yhat)
    s2b, sdb, bad_b = _kernels.scale_terms(code, c, yhat)
    assert bad_a == bad_b == -1
    assert s2a == pytest.approx(s2b, rel=1e-12)
    assert sda == pytest.approx(sdb, rel=1e-12, abs=1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("code", CODES)
def test_risk_terms_agreement(code):
    z = _grid()
    rng = np.random.Generator(np.random.Philox(7))
    y = rng.random(z.size)
    ta, bad_a = numpy_impl.risk_terms(code, z, y)
    tb, bad_b = _kernels.risk_terms(code, z, y)
    assert bad_a == bad_b == -1
    assert ta == pytest.approx(tb, rel=1e-12)


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_poisson_overflow_index(impl):
    z = np.array([0.0, 10.0, 701.0, 3.0])
    _, bad = impl.ladder(impl.POISSON, 2, z)
    assert bad == 2
    _, _, bad = impl.scale_terms(impl.POISSON, 2.0, np.array([1.0, 360.0]))
    assert bad == 1
    _, bad = impl.risk_terms(impl.POISSON, z, np.zeros(4))
    assert bad == 2


def test_backend_reports_name():
    assert scaledls.backend_name() in ("compiled", "numpy")
    forced = os.environ.get("SCALEDLS_BACKEND", "").strip().lower()
    if forced:
        assert scaledls.backend_name() == forced
    elif scaledls.compiled_available():
        assert scaledls.backend_name() == "compiled"


def test_numpy_backend_forced_by_env():
    code = (
        "import scaledls; print(scaledls.backend_name())"
    )
    env = dict(os.environ, SCALEDLS_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"


def test_overflow_error_names_index():
    with pytest.raises(scaledls.CurvatureOverflowError) as err:
        scaledls.scale_residual(2.0, np.array([0.1, 360.0, 0.2]), scaledls.PoissonFamily())
    assert err.value.index == 1
