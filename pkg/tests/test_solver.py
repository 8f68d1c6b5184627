import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.special import expit

from dynetlogit import (
    FitResult,
    PriorSpec,
    build_design,
    fit_mle,
    fit_posterior_mode,
    information_criteria,
    predict_probabilities,
    split_design,
)
from dynetlogit.design import DesignMatrix, TagTable

from conftest import random_panel


def make_dm(X, y, names=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    names = tuple(names or (f"x{k}" for k in range(p)))
    return DesignMatrix(
        responses=np.asarray(y, dtype=np.int8),
        features=sp.csr_matrix(X),
        tags=TagTable(np.zeros(n, dtype=np.uint8), np.zeros(n), np.arange(n),
                      np.full(n, -1)),
        column_names=names,
        n_vertex_terms=p,
        n_vertex_rows=n,
    )


def test_intercept_only_closed_form():
    dm = make_dm(np.ones((4, 1)), [1, 0, 0, 0])
    fit = fit_mle(dm)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(math.log(0.25 / 0.75), abs=1e-8)
    assert fit.log_likelihood == pytest.approx(
        math.log(0.25) + 3 * math.log(0.75), abs=1e-8)


def test_all_zero_responses_flags_separation():
    dm = make_dm(np.ones((6, 1)), np.zeros(6))
    fit = fit_mle(dm)
    assert fit.separation
    assert not fit.converged
    assert fit.coefficients[0] < -15


def test_separated_feature_flags_separation():
    x = np.array([[1, 0], [1, 0], [1, 1], [1, 1]], dtype=float)
    y = np.array([0, 0, 1, 1])
    fit = fit_mle(make_dm(x, y))
    assert fit.separation


def test_monte_carlo_recovery():
    rng = np.random.default_rng(123)
    n = 50_000
    x = rng.normal(size=n)
    theta_true = np.array([-2.0, 1.0])
    eta = theta_true[0] + theta_true[1] * x
    y = rng.random(n) < expit(eta)
    dm = make_dm(np.column_stack([np.ones(n), x]), y.astype(int))
    fit = fit_mle(dm)
    assert fit.converged
    assert np.all(np.abs(fit.coefficients - theta_true) < 0.1)
    # true values inside the 95 percent Wald intervals for this seed
    lo = fit.coefficients - 1.96 * fit.std_errors
    hi = fit.coefficients + 1.96 * fit.std_errors
    assert np.all((theta_true > lo) & (theta_true < hi))


def test_posterior_mode_matches_root_find_oracle():
    # all successes, intercept only: the mode solves
    # n * (1 - sigmoid(t)) = 2 t / (t^2 + df*scale^2) for Cauchy(0, 2.5)
    dm = make_dm(np.ones((5, 1)), np.ones(5))
    fit = fit_posterior_mode(dm, PriorSpec.cauchy(scale=2.5))
    root = brentq(lambda t: 5 * (1 - expit(t)) - 2 * t / (t**2 + 6.25), 0.01, 50)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(root, abs=1e-6)
    assert 0 < fit.coefficients[0] < 15


def test_vague_prior_limit_approaches_mle():
    rng = np.random.default_rng(7)
    x = rng.normal(size=400)
    y = (rng.random(400) < expit(0.5 - 0.8 * x)).astype(int)
    dm = make_dm(np.column_stack([np.ones(400), x]), y)
    mle = fit_mle(dm)
    post = fit_posterior_mode(dm, PriorSpec(kind="student_t", scale=1e6, df=1.0))
    assert np.all(np.abs(post.coefficients - mle.coefficients) < 1e-4)


def test_posterior_finite_on_separated_toys():
    rng = np.random.default_rng(21)
    for _ in range(10):
        n = int(rng.integers(4, 12))
        x = np.sort(rng.normal(size=n))
        y = (np.arange(n) >= n // 2).astype(int)  # perfectly separated on x order
        dm = make_dm(np.column_stack([np.ones(n), x]), y)
        post = fit_posterior_mode(dm, PriorSpec.cauchy(2.5))
        assert post.converged
        assert np.all(np.isfinite(post.coefficients))
        assert np.all(np.abs(post.coefficients) < 15)
        assert np.all(np.isfinite(post.std_errors))


def test_information_criteria_formula():
    fit = FitResult(
        coefficients=np.zeros(3), std_errors=np.zeros(3), log_likelihood=-50.0,
        deviance=100.0, bic=0.0, aic=0.0, n_obs=1000, converged=True, iterations=1,
        prior=PriorSpec.none(), column_names=("a", "b", "c"), gradient_norm=0.0)
    bic, aic = information_criteria(fit)
    assert bic == pytest.approx(100.0 + 3 * math.log(1000), abs=1e-9)
    assert bic == pytest.approx(120.7233, abs=1e-3)
    assert aic == pytest.approx(106.0)


def test_information_criteria_no_parameters():
    fit = FitResult(
        coefficients=np.zeros(0), std_errors=np.zeros(0), log_likelihood=-50.0,
        deviance=100.0, bic=0.0, aic=0.0, n_obs=10, converged=True, iterations=0,
        prior=PriorSpec.none(), column_names=(), gradient_norm=0.0)
    bic, aic = information_criteria(fit)
    assert bic == 100.0
    assert aic == 100.0


def test_deviance_is_minus_twice_loglik():
    dm = make_dm(np.ones((4, 1)), [1, 0, 1, 0])
    fit = fit_mle(dm)
    assert fit.deviance == pytest.approx(-2 * fit.log_likelihood)
    assert fit.bic == pytest.approx(fit.deviance + 1 * math.log(4))
    assert fit.aic == pytest.approx(fit.deviance + 2)


def test_predict_probabilities():
    x = np.column_stack([np.ones(5), np.arange(5.0)])
    dm = make_dm(x, [0, 1, 0, 1, 1])
    fit = fit_mle(dm)
    zero = FitResult(
        coefficients=np.zeros(2), std_errors=np.zeros(2), log_likelihood=0.0,
        deviance=0.0, bic=0.0, aic=0.0, n_obs=5, converged=True, iterations=0,
        prior=PriorSpec.none(), column_names=("a", "b"), gradient_norm=0.0)
    assert np.allclose(predict_probabilities(zero, dm), 0.5)

    p25 = FitResult(
        coefficients=np.array([math.log(1 / 3), 0.0]), std_errors=np.zeros(2),
        log_likelihood=0.0, deviance=0.0, bic=0.0, aic=0.0, n_obs=5, converged=True,
        iterations=0, prior=PriorSpec.none(), column_names=("a", "b"),
        gradient_norm=0.0)
    assert np.allclose(predict_probabilities(p25, dm), 0.25)

    probs = predict_probabilities(fit, dm)
    assert np.all((probs > 0) & (probs < 1))
    with pytest.raises(ValueError):
        predict_probabilities(fit, make_dm(np.ones((3, 1)), [0, 1, 0]))


def test_monotone_in_positive_coefficient_feature():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(200, 1))
    y = (rng.random(200) < expit(1.5 * x[:, 0])).astype(int)
    dm = make_dm(np.column_stack([np.ones(200), x]), y)
    fit = fit_mle(dm)
    assert fit.coefficients[1] > 0
    bumped = make_dm(np.column_stack([np.ones(200), x + 0.5]), y)
    assert np.all(predict_probabilities(fit, bumped) >=
                  predict_probabilities(fit, dm))


def test_separability_joint_equals_parts():
    rng = np.random.default_rng(11)
    panel = random_panel(rng, n=8, T=8, presence=0.6, density=0.4)
    from dynetlogit import ModelSpec, TermSpec
    spec = ModelSpec(
        [TermSpec("vertex", "intercept"), TermSpec("vertex", "lag_indicator", lag=1)],
        [TermSpec("edge", "intercept"), TermSpec("edge", "lag_indicator", lag=1)],
    )
    dm = build_design(panel, spec)
    joint = fit_mle(dm)
    dv, de = split_design(dm)
    fv, fe = fit_mle(dv), fit_mle(de)
    stacked = np.concatenate([fv.coefficients, fe.coefficients])
    assert np.all(np.abs(joint.coefficients - stacked) < 1e-8)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    X = np.column_stack([np.ones(60), rng.normal(size=(60, 2))])
    y = (rng.random(60) < expit(X @ np.array([0.3, -0.6, 1.0]))).astype(float)

    def loglik(theta):
        eta = X @ theta
        return float(y @ eta - np.logaddexp(0, eta).sum())

    def score(theta):
        return X.T @ (y - expit(X @ theta))

    dm = make_dm(X, y.astype(int))
    that = fit_mle(dm).coefficients
    h = 1e-6
    for theta in (that, np.zeros(3), rng.normal(size=3)):
        g = score(theta)
        fd = np.array([
            (loglik(theta + h * e) - loglik(theta - h * e)) / (2 * h)
            for e in np.eye(3)
        ])
        assert np.all(np.abs(g - fd) <= 1e-6 * max(1.0, np.abs(g).max()) + 1e-4 * h)


def test_row_permutation_invariance():
    rng = np.random.default_rng(13)
    X = np.column_stack([np.ones(100), rng.normal(size=100)])
    y = (rng.random(100) < expit(X @ np.array([-0.5, 0.8]))).astype(int)
    perm = rng.permutation(100)
    a = fit_mle(make_dm(X, y))
    b = fit_mle(make_dm(X[perm], y[perm]))
    assert np.allclose(a.coefficients, b.coefficients, atol=1e-10)
    assert np.allclose(a.std_errors, b.std_errors, atol=1e-10)
    assert a.log_likelihood == pytest.approx(b.log_likelihood)
    assert a.bic == pytest.approx(b.bic)


def test_column_scaling_invariance():
    rng = np.random.default_rng(17)
    x = rng.normal(size=150)
    y = (rng.random(150) < expit(0.2 + 0.9 * x)).astype(int)
    base = fit_mle(make_dm(np.column_stack([np.ones(150), x]), y))
    scaled = fit_mle(make_dm(np.column_stack([np.ones(150), 10 * x]), y))
    assert scaled.coefficients[1] == pytest.approx(base.coefficients[1] / 10, rel=1e-6)
    pa = predict_probabilities(base, make_dm(np.column_stack([np.ones(150), x]), y))
    pb = predict_probabilities(scaled,
                               make_dm(np.column_stack([np.ones(150), 10 * x]), y))
    assert np.allclose(pa, pb, atol=1e-8)


def test_all_zero_column_flagged_and_pinned():
    X = np.column_stack([np.ones(10), np.zeros(10)])
    y = np.array([1, 0] * 5)
    fit = fit_mle(make_dm(X, y))
    assert fit.coefficients[1] == 0.0
    assert np.isnan(fit.std_errors[1])
    assert any("all-zero" in n for n in fit.notes)


def test_matches_reference_glm():
    """Independent route: coefficients and standard errors agree with a
    standard GLM implementation on the same design."""
    sm = pytest.importorskip("statsmodels.api")
    rng = np.random.default_rng(31)
    X = np.column_stack([np.ones(500), rng.normal(size=(500, 2)),
                         (rng.random(500) < 0.3).astype(float)])
    y = (rng.random(500) < expit(X @ np.array([-0.4, 0.7, -1.1, 0.5]))).astype(int)
    mine = fit_mle(make_dm(X, y))
    ref = sm.GLM(y, X, family=sm.families.Binomial()).fit()
    assert np.allclose(mine.coefficients, ref.params, atol=1e-7)
    assert np.allclose(mine.std_errors, ref.bse, rtol=1e-5)
    assert mine.log_likelihood == pytest.approx(ref.llf, abs=1e-6)
    assert mine.aic == pytest.approx(ref.aic, abs=1e-5)


def test_lbfgs_warm_start_matches_newton(monkeypatch):
    """Wide-design fallback: warm start + Newton still meets the gradient
    contract and lands on the same optimum."""
    import dynetlogit.solver as solver_mod

    rng = np.random.default_rng(29)
    X = np.column_stack([np.ones(300), rng.normal(size=(300, 3))])
    y = (rng.random(300) < expit(X @ np.array([0.2, -0.5, 0.9, 0.0]))).astype(int)
    direct = fit_mle(make_dm(X, y))
    monkeypatch.setattr(solver_mod, "LBFGS_WIDTH", 2)
    warm = fit_mle(make_dm(X, y))
    assert warm.converged
    assert warm.gradient_norm <= 1e-8
    assert np.allclose(warm.coefficients, direct.coefficients, atol=1e-7)

    post_direct = fit_posterior_mode(make_dm(X, y))
    monkeypatch.setattr(solver_mod, "LBFGS_WIDTH", 2)
    post_warm = fit_posterior_mode(make_dm(X, y))
    assert post_warm.converged
    assert np.allclose(post_warm.coefficients, post_direct.coefficients, atol=1e-7)


def test_prior_override_by_column():
    dm = make_dm(np.ones((5, 1)), np.ones(5), names=("intercept",))
    tight = fit_posterior_mode(
        dm, PriorSpec(kind="student_t", scale=2.5, df=1,
                      overrides={"intercept": {"scale": 0.1}}))
    loose = fit_posterior_mode(dm, PriorSpec.cauchy(2.5))
    assert abs(tight.coefficients[0]) < abs(loose.coefficients[0])


def test_fit_report_dict_round_trips_json():
    import json

    dm = make_dm(np.ones((4, 1)), [1, 0, 0, 1])
    fit = fit_posterior_mode(dm)
    blob = json.dumps(fit.to_dict(), sort_keys=True)
    back = json.loads(blob)
    assert back["columns"] == ["x0"]
    assert back["convergence"]["converged"] is True
    assert back["prior"]["df"] == 1.0
