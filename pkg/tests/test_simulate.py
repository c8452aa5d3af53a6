from dataclasses import replace

import numpy as np
import pytest

from fcr.continuum import fit, refit_residuals
from fcr.errors import InvalidSNRError
from fcr.fgrid import center, eigen_from_data, inner_product
from fcr.io import load_gm
from fcr.simulate import (
    estimate_generative_model,
    fit_method,
    kl_sample,
    make_response,
    remspe,
    replicate_seed,
    rmse_curve,
    run_estimation_study,
    run_prediction_study,
    snr_to_sigma,
    surrogate_model,
)
from fcr.tuning import TuningGrid

from helpers import abs_cos


@pytest.fixture(scope="module")
def gm():
    return surrogate_model(m=80)


def test_surrogate_is_valid(gm):
    gram = (gm.eigenfunctions * gm.grid.weights) @ gm.eigenfunctions.T
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
    assert all(inner_product(gm.mean, phi, gm.grid) > 0 for phi in gm.eigenfunctions)
    np.testing.assert_array_equal(gm.with_scenario("ii").beta_true, gm.eigenfunctions[2])


def test_generative_model_validation(gm):
    with pytest.raises(ValueError):
        replace(gm, eigenvalues=np.array([0.1, 0.3, 1.0]))
    with pytest.raises(ValueError):
        replace(gm, eigenfunctions=2 * gm.eigenfunctions)


def test_bundled_model_is_the_surrogate():
    a, b = load_gm(), surrogate_model()
    np.testing.assert_array_equal(a.eigenfunctions, b.eigenfunctions)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


def test_vanishing_eigenvalues_give_the_mean(gm):
    tiny = replace(gm, eigenvalues=np.full(3, 1e-20))
    ds = kl_sample(tiny, 10, 0)
    np.testing.assert_allclose(ds.curves, np.tile(gm.mean, (10, 1)), atol=1e-8)


def test_large_sample_recovers_eigenpairs(gm):
    ds = kl_sample(gm, 20000, 1)
    c, _, _ = center(ds)
    eig = eigen_from_data(c.curves, gm.grid)
    np.testing.assert_allclose(eig.eigenvalues[:3], gm.eigenvalues, rtol=0.05)
    for k in range(3):
        assert abs_cos(eig.eigenfunctions[k], gm.eigenfunctions[k], gm.grid) >= 0.99


def test_same_seed_bit_identical(gm):
    a = make_response(kl_sample(gm, 7, 5), gm, 6, sigma=0.3)
    b = make_response(kl_sample(gm, 7, 5), gm, 6, sigma=0.3)
    np.testing.assert_array_equal(a.curves, b.curves)
    np.testing.assert_array_equal(a.responses, b.responses)


def test_noise_free_zero_beta(gm):
    z = replace(gm, beta_true=np.zeros(gm.grid.m))
    ds = make_response(kl_sample(z, 5, 0), z, 0, sigma=0.0)
    np.testing.assert_array_equal(ds.responses, 0)


def test_noise_free_fit_recovers(gm):
    ds = make_response(kl_sample(gm, 30, 2), gm, 3, sigma=0.0)
    model = fit(ds, 0.5, 3)
    np.testing.assert_allclose(refit_residuals(ds, model), 0, atol=1e-8)


def test_noise_variance(gm):
    ds = make_response(kl_sample(gm, 20000, 4), gm, 5, sigma=0.7)
    eps = ds.responses - ds.curves @ (gm.grid.weights * gm.beta_true)
    assert np.var(eps) == pytest.approx(0.49, rel=0.1)


def test_snr_to_sigma(gm):
    mb = inner_product(gm.mean, gm.beta_true, gm.grid)
    scaled = replace(gm, beta_true=gm.beta_true * 10 / mb)
    assert snr_to_sigma(scaled, 2) == pytest.approx(5.0, rel=1e-12)
    assert snr_to_sigma(scaled, 20) == pytest.approx(snr_to_sigma(scaled, 10) / 2, rel=1e-12)
    with pytest.raises(InvalidSNRError):
        snr_to_sigma(replace(gm, beta_true=-gm.beta_true), 2)
    with pytest.raises(InvalidSNRError):
        snr_to_sigma(gm, 0)


def test_noise_sd_resolution(gm):
    assert replace(gm, sigma=0.4, snr=2).noise_sd() == 0.4
    assert replace(gm, snr=2).noise_sd() == snr_to_sigma(gm, 2)
    assert gm.noise_sd() == 0.0


def test_rmse_curve_examples():
    beta = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(rmse_curve(np.tile(beta, (4, 1)), beta), 0)
    np.testing.assert_allclose(rmse_curve(beta[None, :] + [0.5, -1, 2], beta), [0.5, 1, 2])
    c = np.array([0.3, 0.3, 0.3])
    np.testing.assert_allclose(rmse_curve(np.vstack([beta + c, beta - c]), beta), c, rtol=1e-15)


def test_remspe_examples():
    y = np.array([1.0, 3.0, 2.0, 6.0])
    assert remspe(y, np.full(4, 2.5), 2.5) == 1.0
    assert remspe(y, y, 2.5) == 0.0
    pred = np.array([1.5, 2.0, 2.5, 4.0])
    assert remspe(y, pred, 2.0) == pytest.approx(np.mean((y - pred) ** 2) / np.mean((y - 2.0) ** 2), rel=1e-14)
    with pytest.raises(ZeroDivisionError):
        remspe(np.full(3, 2.0), np.zeros(3), 2.0)


def test_estimate_generative_model(gm):
    ds = kl_sample(gm, 400, 8)
    est = estimate_generative_model(ds, k=3, scenario="ii")
    assert est.eigenvalues.size == 3
    np.testing.assert_array_equal(est.beta_true, est.eigenfunctions[2])
    with pytest.raises(ValueError):
        estimate_generative_model(ds.subset(range(3)), k=3)


def test_replicate_seeds_are_order_independent():
    a = np.random.default_rng(replicate_seed(5, 3)).random()
    b = np.random.default_rng(replicate_seed(5, 3)).random()
    c = np.random.default_rng(replicate_seed(5, 4)).random()
    assert a == b != c


def test_fit_method_names(gm):
    ds = make_response(kl_sample(gm, 30, 1), gm, 2, sigma=0.1)
    tg = TuningGrid(alphas=(0.5,), pmax=2)
    assert fit_method("mean", ds).beta_hat.tolist() == [0.0] * gm.grid.m
    assert fit_method("fcr:0.5:2", ds).p == 2
    assert fit_method("fpcr:2", ds).kind == "FPCR"
    assert fit_method("FPLS", ds, tg).kind == "FPLS"
    assert fit_method("fcr", ds, tg).kind == "FCR"
    with pytest.raises(ValueError):
        fit_method("ridge", ds)


def test_noiseless_estimation_study(gm):
    rep = run_estimation_study(gm, methods=("fcr",), n=20, replicates=1, sigma=0.0, seed=3)
    assert np.all(rep.rmse["fcr"] <= 1e-6)
    assert rep.failures["fcr"] == 0


def test_estimation_study_deterministic(gm):
    kw = dict(methods=("fcr", "fpcr:2"), n=20, replicates=3, snr=10, seed=1, tuning=TuningGrid(alphas=(0.2, 0.7), pmax=2))
    a = run_estimation_study(gm.with_scenario("ii"), **kw)
    b = run_estimation_study(gm.with_scenario("ii"), **kw)
    c = run_estimation_study(gm.with_scenario("ii"), jobs=2, **kw)
    assert a.to_csv() == b.to_csv() == c.to_csv()
    assert a.beta_hats["fcr"].shape == (3, gm.grid.m)
    assert np.all(a.rmse["fpcr:2"] >= 0)


def test_scenario_two_directional(gm):
    rep = run_estimation_study(gm.with_scenario("ii"), methods=("fcr", "fpcr:2"), n=35, replicates=20, snr=20, seed=11)
    assert np.mean(rep.ise["fcr"] < rep.ise["fpcr:2"]) >= 0.9


def test_prediction_study_mean_only(gm):
    ds = make_response(kl_sample(gm, 40, 3), gm, 4, sigma=0.2)
    rep = run_prediction_study(ds, methods=("mean",), splits=10, seed=0)
    np.testing.assert_array_equal(rep.remspe["mean"], 1.0)


def test_prediction_study_noiseless(gm):
    ds = make_response(kl_sample(gm, 60, 3), gm, 4, sigma=0.0)
    rep = run_prediction_study(ds, methods=("fcr",), splits=10, seed=0, tuning=TuningGrid(alphas=(0.3, 0.6), pmax=3))
    assert np.median(rep.remspe["fcr"]) < 0.05


def test_prediction_study_deterministic(gm):
    ds = make_response(kl_sample(gm, 40, 3), gm, 4, sigma=0.2)
    kw = dict(methods=("fcr", "fpls", "mean"), splits=4, seed=9, tuning=TuningGrid(alphas=(0.5,), pmax=2))
    a, b = run_prediction_study(ds, **kw), run_prediction_study(ds, **kw)
    assert a.to_csv() == b.to_csv()
    for ta, tb in zip(a.metadata["test_indices"], b.metadata["test_indices"]):
        np.testing.assert_array_equal(ta, tb)
    with pytest.raises(ValueError):
        run_prediction_study(ds, test_fraction=0.6)


def test_estimated_eigenfunctions_oriented_towards_mean(gm):
    ds = kl_sample(gm, 50, 12)
    for scenario in ("i", "ii"):
        est = estimate_generative_model(ds, k=3, scenario=scenario)
        assert snr_to_sigma(est, 10) > 0
