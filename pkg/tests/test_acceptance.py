"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 2 and 8 encode targets the estimator cannot meet on statistical
grounds and are expected to fail; their assertion messages explain the
mechanism. Everything else must pass at the tolerances written into the
tests.
"""

import json
import time

import numpy as np
import pytest

import scaledls as s

SEEDS = (0, 1, 2, 3, 4)


def _report(num, label, ok, detail):
    print(f"ACCEPTANCE {num:2d} [{label}]: {'PASS' if ok else 'FAIL'} ({detail})")


# ------------------------------------------------------------ shared runs


@pytest.fixture(scope="module")
def gaussian_fits():
    """Five seeded (beta_pop, sls, mle) triples on the n=1e5, p=20 instance."""
    out = []
    start = time.perf_counter()
    fam = s.LogisticFamily()
    for seed in SEEDS:
        spec = s.DesignSpec(n=100_000, p=20, base_dist="gaussian",
                            beta_pop=s.WellSpread(1.0), response="logistic",
                            seed=seed)
        data, beta_pop = s.sample_dataset(spec)
        sls = s.fit_sls(data, fam)
        mle = s.minimize(
            data, fam,
            s.OptimizerConfig(method="nr", grad_tol=1e-10, seed=seed),
        )
        out.append((beta_pop, sls, mle.iterates[-1]))
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def speed_bench():
    """Single bench run on the n=6e4, p=100 logistic instance, OLS init."""
    spec = s.DesignSpec(n=60_000, p=100, base_dist="gaussian",
                        beta_pop=s.WellSpread(1.0), response="logistic", seed=11)
    cfg = s.BenchConfig(
        dataset=spec,
        family=s.LogisticFamily(),
        methods=("sls", "nr", "bfgs", "lbfgs", "gd", "agd"),
        init_mode="ols",
        seeds=(11,),
    )
    start = time.perf_counter()
    report = s.run_bench(cfg)
    return report, time.perf_counter() - start


# ------------------------------------------------------------ criteria


def test_c01_gaussian_proportionality(gaussian_fits):
    fits, elapsed = gaussian_fits
    cosines = [
        float(r.beta_ols @ bp / (np.linalg.norm(r.beta_ols) * np.linalg.norm(bp)))
        for bp, r, _ in fits
    ]
    med = float(np.median(cosines))
    ok = med >= 0.99 and elapsed <= 30.0
    _report(1, "gaussian proportionality", ok,
            f"median cosine {med:.5f} >= 0.99, runtime {elapsed:.1f}s <= 30s")
    assert med >= 0.99
    assert elapsed <= 30.0


def test_c02_sls_matches_mle_accuracy(gaussian_fits):
    fits, _ = gaussian_fits
    ratios = [
        float(np.linalg.norm(r.beta_sls - bp) / np.linalg.norm(mle - bp))
        for bp, r, mle in fits
    ]
    med = float(np.median(ratios))
    ok = med <= 1.2
    _report(2, "sls error within 1.2x of mle", ok, f"median ratio {med:.3f}")
    assert med <= 1.2, (
        f"median error ratio {med:.3f} exceeds 1.2: with mean-zero predictors, "
        "no intercept, and binary responses, the least-squares cross moment "
        "carries noise proportional to E[y^2] = 1/2 rather than Var(y) = 1/4, "
        "so the rescaled-OLS error concentrates near sqrt(2) x the maximum-"
        "likelihood error at every sample size; the 1.2 bound is below the "
        "statistical floor of the estimator itself"
    )


def test_c03_test_error_parity(speed_bench):
    report, _ = speed_bench
    sls_err = report.per_method["sls"]["final_test_err"]
    mle_err = report.per_method["nr"]["final_test_err"]
    rel = abs(sls_err - mle_err) / mle_err
    ok = rel <= 0.05
    _report(3, "test-error parity", ok,
            f"|sls-mle|/mle = {rel:.4f} <= 0.05")
    assert rel <= 0.05


def test_c04_sls_fastest_to_threshold(speed_bench):
    report, elapsed = speed_bench
    times = {m: e["time_to_min_err_s"] for m, e in report.per_method.items()}
    others = {m: t for m, t in times.items() if m != "sls"}
    ok = all(times["sls"] < t for t in others.values()) and elapsed <= 600.0
    detail = ", ".join(f"{m} {t:.3f}s" for m, t in sorted(times.items()))
    _report(4, "sls fastest to min achievable error", ok,
            f"{detail}; runtime {elapsed:.0f}s <= 600s")
    assert all(times["sls"] < t for t in others.values()), times
    assert elapsed <= 600.0


def test_c05_exact_scale_roots():
    c_lin, _ = s.solve_scale(
        np.array([0.7, -1.3, 2.2]), s.LinearFamily(), s.ScaleSolveConfig(init=3.0)
    )
    c_log, _ = s.solve_scale(
        np.zeros(9), s.LogisticFamily(), s.ScaleSolveConfig(init=1.0)
    )
    c_sq, _ = s.solve_scale(
        np.random.default_rng(0).standard_normal(30),
        s.SquareLoss(),
        s.ScaleSolveConfig(init=7.0),
    )
    ok = (
        abs(c_lin - 1.0) <= 1e-12
        and abs(c_log - 4.0) <= 1e-10
        and abs(c_sq - 2.0) <= 1e-12
    )
    _report(5, "exact scale roots", ok,
            f"linear {c_lin!r}, logistic-zeros {c_log!r}, square-rule {c_sq!r}")
    assert abs(c_lin - 1.0) <= 1e-12
    assert abs(c_log - 4.0) <= 1e-10
    assert abs(c_sq - 2.0) <= 1e-12


def test_c06_root_finder_convergence():
    fam = s.LogisticFamily()
    worst = 0
    for k in range(100):
        rng = np.random.Generator(np.random.Philox(k))
        n = int(rng.integers(200, 2000))
        spread = rng.uniform(0.05, 0.35)
        yhat = np.clip(rng.standard_normal(n) * spread, -3.0, 3.0)
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-4.0 * yhat))).astype(float)
        c, trace = s.solve_scale(
            yhat, fam, s.ScaleSolveConfig(tol=1e-10), y_for_init=y
        )
        value, _ = s.scale_residual(c, yhat, fam)
        assert abs(value) <= 1e-10
        worst = max(worst, trace.iterations)
    ok = worst <= 20
    _report(6, "newton root convergence", ok,
            f"worst iteration count {worst} <= 20 over 100 fixtures")
    assert worst <= 20


def test_c07_conversion_round_trip():
    fam_l, fam_p = s.LogisticFamily(), s.PoissonFamily()
    worst_rho, worst_beta = 0.0, 0.0
    for k in range(50):
        rng = np.random.Generator(np.random.Philox(k))
        n = int(rng.integers(50, 300))
        p = int(rng.integers(2, 8))
        X = rng.standard_normal((n, p))
        beta = rng.uniform(-0.4, 0.4, p)
        fwd = s.convert_glm(X, beta, fam_l, fam_p)
        back = s.convert_glm(X, fwd.beta_target, fam_p, fam_l)
        worst_rho = max(worst_rho, abs(fwd.rho * back.rho - 1.0))
        rel = np.max(np.abs(back.beta_target - beta)) / np.max(np.abs(beta))
        worst_beta = max(worst_beta, rel)
    ok = worst_rho <= 1e-8 and worst_beta <= 1e-8
    _report(7, "conversion round trip", ok,
            f"worst |rho*rho'-1| {worst_rho:.2e}, worst rel beta {worst_beta:.2e}")
    assert worst_rho <= 1e-8
    assert worst_beta <= 1e-8


def test_c08_gap_trend_in_dimension():
    start = time.perf_counter()
    fam = s.PoissonFamily()
    medians = {}
    for p in (25, 50, 100):
        gaps = []
        for seed in SEEDS:
            spec = s.DesignSpec(n=200_000, p=p, base_dist="rademacher",
                                beta_pop=s.WellSpread(1.0), response="poisson",
                                seed=seed)
            data, beta_pop = s.sample_dataset(spec)
            fit = s.fit_sls(data, fam)
            gaps.append(float(np.max(np.abs(fit.c * fit.beta_ols - beta_pop))))
        medians[p] = float(np.median(gaps))
    elapsed = time.perf_counter() - start
    ok = medians[25] >= medians[50] >= medians[100] and elapsed <= 300.0
    _report(8, "gap trend across p", ok,
            f"median sup gaps {medians[25]:.4f} / {medians[50]:.4f} / "
            f"{medians[100]:.4f}; runtime {elapsed:.0f}s")
    assert elapsed <= 300.0
    assert medians[25] >= medians[50] >= medians[100], (
        f"median sup-norm gaps {medians} are not non-increasing in p: at this "
        "sample size the gap is dominated by per-coordinate estimation noise "
        "(~0.005), whose maximum over p coordinates grows with p, while the "
        "structural dimension-decaying component is roughly 100x smaller; "
        "resolving the trend would need a sample orders of magnitude larger"
    )


def test_c09_subsample_rate_trend():
    spec = s.DesignSpec(n=20_000, p=20, base_dist="gaussian",
                        beta_pop=s.WellSpread(1.0), response="none", seed=7)
    base, _ = s.sample_dataset(spec)
    rng = np.random.Generator(np.random.Philox(123))
    data = s.Dataset(base.X, base.y + rng.standard_normal(base.n), base.test_mask)
    full = s.fit_ols(data).beta
    medians = []
    for size in (200, 800, 3200):
        errs = [
            np.linalg.norm(s.fit_ols(data, subsample=size, seed=k).beta - full)
            for k in range(20)
        ]
        medians.append(float(np.median(errs)))
    ratios = [medians[i + 1] / medians[i] for i in range(2)]
    ok = medians[0] > medians[1] > medians[2] and all(
        0.3 <= r <= 0.7 for r in ratios
    )
    _report(9, "subsample error rate", ok,
            f"medians {[round(m, 4) for m in medians]}, "
            f"ratios {[round(r, 3) for r in ratios]} in [0.3, 0.7]")
    assert medians[0] > medians[1] > medians[2]
    for r in ratios:
        assert 0.3 <= r <= 0.7


def test_c10_calculus_oracles():
    # gradient and Hessian against central differences
    makers = {
        s.LinearFamily(): lambda rng, X: X @ rng.uniform(-1, 1, X.shape[1])
        + rng.standard_normal(X.shape[0]),
        s.LogisticFamily(): lambda rng, X: (rng.random(X.shape[0]) < 0.5).astype(float),
        s.PoissonFamily(): lambda rng, X: rng.poisson(1.0, X.shape[0]).astype(float),
    }
    worst_grad, worst_hess = 0.0, 0.0
    for fam, make_y in makers.items():
        for trial in range(20):
            rng = np.random.Generator(np.random.Philox(trial))
            X = rng.standard_normal((40, 3)) * 0.5
            data = s.Dataset(X, make_y(rng, X))
            beta = rng.uniform(-0.5, 0.5, 3)
            g = s.risk_gradient(data, fam, beta)
            H = s.risk_hessian(data, fam, beta)
            h = 1e-6
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                fd_g = (
                    s.empirical_risk(data, fam, beta + e)
                    - s.empirical_risk(data, fam, beta - e)
                ) / (2 * h)
                worst_grad = max(
                    worst_grad, abs(fd_g - g[j]) / (1.0 + abs(g[j]))
                )
                fd_h = (
                    s.risk_gradient(data, fam, beta + e)
                    - s.risk_gradient(data, fam, beta - e)
                ) / (2 * h)
                worst_hess = max(
                    worst_hess,
                    float(np.max(np.abs(fd_h - H[:, j]) / (1.0 + np.abs(H[:, j])))),
                )

    # derivative ladders for every family
    sig = lambda z: 1.0 / (1.0 + np.exp(-z))
    families = [
        s.LinearFamily(), s.LogisticFamily(), s.PoissonFamily(),
        s.SquareLinkFamily(), s.BoostingLinkFamily(),
        s.canonicalize_square_loss(sig, lambda z: sig(z) * (1 - sig(z))),
    ]
    grid = np.arange(-5.0, 5.0 + 1e-9, 0.1)
    worst_ladder = 0.0
    for fam in families:
        for order in range(4):
            h = 1e-5
            fd = (fam.derivative(grid + h, order) - fam.derivative(grid - h, order)) / (2 * h)
            exact = fam.derivative(grid, order + 1)
            worst_ladder = max(
                worst_ladder,
                float(np.max(np.abs(fd - exact) / (1.0 + np.abs(exact)))),
            )

    # canonical-link constancy on [-3, 3] (square loss: where the weight exists)
    worst_link = 0.0
    for rule in (s.LogLoss(), s.BoostingLoss(), s.SquareLoss()):
        zs = np.arange(-3.0, 3.0 + 1e-9, 0.05)
        if isinstance(rule, s.SquareLoss):
            zs = zs[np.abs(zs) < 1.0]
        prods = np.array([float(rule.weight(rule.link(z)[0])) * rule.link(z)[1]
                          for z in zs])
        worst_link = max(
            worst_link, float(np.max(np.abs(prods - rule.link_weight_product)))
            / rule.link_weight_product,
        )

    ok = (worst_grad <= 1e-5 and worst_hess <= 1e-4
          and worst_ladder <= 1e-5 and worst_link <= 1e-8)
    _report(10, "calculus oracles", ok,
            f"grad {worst_grad:.2e} <= 1e-5, hess {worst_hess:.2e} <= 1e-4, "
            f"ladders {worst_ladder:.2e} <= 1e-5, link {worst_link:.2e} <= 1e-8")
    assert worst_grad <= 1e-5
    assert worst_hess <= 1e-4
    assert worst_ladder <= 1e-5
    assert worst_link <= 1e-8


def test_c11_optimizer_agreement():
    spec = s.DesignSpec(n=5000, p=10, base_dist="gaussian",
                        beta_pop=s.WellSpread(1.0), response="logistic", seed=5)
    data, _ = s.sample_dataset(spec)
    fam = s.LogisticFamily()
    sols = {}
    for method in ("nr", "ns", "bfgs", "lbfgs", "gd", "agd"):
        trace = s.minimize(
            data, fam,
            s.OptimizerConfig(method=method, grad_tol=1e-8, max_iters=3000, seed=5),
        )
        assert trace.converged, f"{method} did not reach grad norm 1e-8"
        assert trace.grad_norm[-1] <= 1e-8
        sols[method] = trace.iterates[-1]
    worst = max(
        float(np.linalg.norm(sols[a] - sols[b])) for a in sols for b in sols
    )
    ok = worst <= 1e-6
    _report(11, "optimizer agreement", ok, f"worst pairwise distance {worst:.2e}")
    assert worst <= 1e-6


def _strip_times(obj):
    if isinstance(obj, dict):
        return {
            k: _strip_times(v)
            for k, v in obj.items()
            if "time" not in k.lower() and k != "platform"
        }
    if isinstance(obj, list):
        return [_strip_times(v) for v in obj]
    return obj


def test_c12_bench_determinism():
    spec = s.DesignSpec(n=4000, p=5, base_dist="gaussian",
                        beta_pop=s.WellSpread(1.0), response="logistic", seed=0)
    cfg = s.BenchConfig(
        dataset=spec,
        family=s.LogisticFamily(),
        methods=("sls", "nr", "gd"),
        init_mode="ols",
        seeds=(1, 2),
    )
    a = json.dumps(_strip_times(s.run_bench(cfg).as_dict()), sort_keys=True)
    b = json.dumps(_strip_times(s.run_bench(cfg).as_dict()), sort_keys=True)
    ok = a == b
    _report(12, "bench determinism", ok,
            "non-time report fields identical across repeated runs")
    assert a == b
