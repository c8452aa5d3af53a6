import numpy as np
import pytest

from fcr.baselines import fpcr_fit, fpls_fit
from fcr.continuum import fit, refit_residuals
from fcr.errors import NoSignalError
from fcr.fgrid import center
from fcr.oracle import random_instance
from fcr.simulate import kl_sample, surrogate_model

from helpers import abs_cos, eigen_score_dataset, qnorm, three_pair_dataset, v_gram


def _r2(ds, model):
    res = refit_residuals(ds, model)
    y = ds.responses - ds.responses.mean()
    return 1 - np.sum(res**2) / np.sum(y**2)


def test_fpcr_misses_second_eigen_score():
    ds, eig = eigen_score_dataset(0, j=1)
    m1 = fpcr_fit(ds, 1)
    assert abs(np.sum(ds.grid.weights * m1.beta_hat * eig.eigenfunctions[1])) <= 1e-10
    assert _r2(ds, m1) == pytest.approx(0, abs=1e-10)
    m2 = fpcr_fit(ds, 2)
    np.testing.assert_allclose(refit_residuals(ds, m2), 0, atol=1e-8)


def test_fpcr_p_exceeds_rank():
    with pytest.raises(ValueError):
        fpcr_fit(random_instance(0, rank=3), 4)
    with pytest.raises(ValueError):
        fpcr_fit(random_instance(0), 0)


def test_fpcr_weights_are_eigenfunctions():
    ds = random_instance(1)
    m = fpcr_fit(ds, 3)
    G = v_gram(m, ds)
    np.testing.assert_allclose(G, np.diag(np.diag(G)), atol=1e-10)


def test_fpls_first_weight_is_cross_covariance():
    ds = random_instance(2)
    c, _, _ = center(ds)
    h = c.curves.T @ c.responses / ds.n
    m = fpls_fit(ds, 1)
    assert abs_cos(m.weights[0], h, ds.grid) == pytest.approx(1.0, abs=1e-12)
    assert qnorm(m.weights[0], ds.grid) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_fpls_weights_v_orthogonal(seed):
    ds = three_pair_dataset(seed)
    m = fpls_fit(ds, 3)
    G = v_gram(m, ds)
    assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-10 * np.max(np.diag(G))


@pytest.mark.parametrize("seed", range(3))
def test_fpls_agrees_with_fcr_half(seed):
    ds = three_pair_dataset(seed)
    a, b = fit(ds, 0.5, 3), fpls_fit(ds, 3)
    for wa, wb in zip(a.weights, b.weights):
        assert abs_cos(wa, wb, ds.grid) >= 1 - 1e-6


def test_fpls_no_signal():
    ds = random_instance(0).with_responses(np.ones(15))
    with pytest.raises(NoSignalError):
        fpls_fit(ds, 1)


def test_fpls_null_coefficient_shrinks_with_n():
    gm = surrogate_model(m=60)
    med = {}
    for n in (50, 800):
        coefs = []
        for r in range(50):
            ss = np.random.SeedSequence([n, r])
            xs, ys = ss.spawn(2)
            ds = kl_sample(gm, n, xs)
            ds = ds.with_responses(np.random.default_rng(ys).standard_normal(n))
            coefs.append(abs(fpls_fit(ds, 1).coefs[0]))
        med[n] = np.median(coefs)
    assert med[800] < med[50]


def test_baseline_predict_method():
    ds = random_instance(3)
    m = fpls_fit(ds, 2)
    np.testing.assert_allclose(m.predict(ds.curves), ds.responses - refit_residuals(ds, m), rtol=1e-12)
