import numpy as np
import pytest

from fcr.continuum import fit, predict
from fcr.errors import SaturatedModelError
from fcr.tuning import DEFAULT_ALPHAS, TuningGrid, default_pmax, gcv, tune

from helpers import eigen_score_dataset, three_pair_dataset


def test_gcv_spot_values():
    assert gcv(0.0, 10, 3) == 0.0
    assert gcv(4.0, 5, 1) == 4 / 9
    assert gcv(10.0, 20, 2) == 10 / 289


def test_gcv_saturated():
    with pytest.raises(SaturatedModelError):
        gcv(1.0, 5, 4)


@pytest.mark.parametrize(
    "lam, threshold, expected",
    [
        ([1.0], 0.99, 1),
        ([0.97, 0.02, 0.01], 0.97, 1),
        ([0.80, 0.17, 0.02, 0.01], 0.97, 2),
        ([0.5, 0.3, 0.15, 0.05], 0.99, 4),
    ],
)
def test_default_pmax(lam, threshold, expected):
    assert default_pmax(np.array(lam), threshold) == expected


def test_default_pmax_capped_by_n():
    assert default_pmax(np.ones(10), 0.99, n=6) == 3


def test_tuning_grid_validation():
    assert TuningGrid().alphas == DEFAULT_ALPHAS
    with pytest.raises(ValueError):
        TuningGrid(alphas=(0.5, 1.0))
    with pytest.raises(ValueError):
        TuningGrid(alphas=())
    with pytest.raises(ValueError):
        TuningGrid(pmax=0)


def test_noise_free_first_score_selects_one_component():
    ds, _ = eigen_score_dataset(0, j=0)
    rep = tune(ds, TuningGrid(pmax=3))
    assert rep.best_p == 1


def test_table_minimum_is_selected_model():
    ds = three_pair_dataset(1, n=40, m=50)
    rep = tune(ds, TuningGrid(pmax=3))
    i, j = np.unravel_index(np.argmin(rep.gcv_table), rep.gcv_table.shape)
    assert (rep.best_p, rep.best_alpha) == (i + 1, rep.alphas[j])
    assert rep.model.p == rep.best_p and rep.model.alpha == rep.best_alpha
    rss = np.sum((ds.responses - predict(rep.model, ds.curves)) ** 2)
    assert rep.gcv_table[i, j] == pytest.approx(gcv(rss, ds.n, rep.best_p), rel=1e-12)
    # the selected model is the plain fit at the selected cell
    np.testing.assert_array_equal(rep.model.beta_hat, fit(ds, rep.best_alpha, rep.best_p).beta_hat)


def test_alpha_zero_column_undefined_beyond_one():
    ds = three_pair_dataset(2, n=30, m=40)
    rep = tune(ds, TuningGrid(alphas=(0.0, 0.5), pmax=3))
    assert np.isfinite(rep.gcv_table[0, 0])
    assert np.all(np.isinf(rep.gcv_table[1:, 0]))


def test_table_csv_shape():
    ds = three_pair_dataset(3, n=30, m=40)
    rep = tune(ds, TuningGrid(alphas=(0.2, 0.6), pmax=2))
    lines = rep.table_csv().splitlines()
    assert lines[0] == "p,0.2,0.6"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "2"]


def test_auto_pmax_uses_variance_threshold():
    ds = three_pair_dataset(4, n=40, m=50)
    assert tune(ds, TuningGrid(alphas=(0.5,))).pmax == 3
    assert tune(ds, TuningGrid(alphas=(0.5,), var_threshold=0.5)).pmax == 1


def test_parallel_matches_serial():
    ds = three_pair_dataset(5, n=30, m=40)
    grid = TuningGrid(alphas=(0.1, 0.5, 0.9), pmax=3)
    a, b = tune(ds, grid), tune(ds, grid, jobs=2)
    np.testing.assert_array_equal(a.gcv_table, b.gcv_table)
    np.testing.assert_array_equal(a.model.beta_hat, b.model.beta_hat)


def test_tune_needs_responses():
    ds = three_pair_dataset(6)
    with pytest.raises(ValueError):
        tune(type(ds)(ds.grid, ds.curves))


def test_every_cell_matches_from_scratch_fit():
    ds = three_pair_dataset(7, n=30, m=40)
    rep = tune(ds, TuningGrid(alphas=(0.0, 0.3, 0.7, 0.999), pmax=3))
    for i in range(rep.pmax):
        for j, alpha in enumerate(rep.alphas):
            model = fit(ds, alpha, i + 1)
            if model.p < i + 1:
                assert np.isinf(rep.gcv_table[i, j])
                continue
            rss = np.sum((ds.responses - predict(model, ds.curves)) ** 2)
            assert rep.gcv_table[i, j] == pytest.approx(gcv(rss, ds.n, i + 1), rel=1e-10)


@pytest.mark.parametrize("k", [0.01, 3.0, 1e4])
def test_response_scaling_invariance(k):
    ds = three_pair_dataset(8, n=30, m=40)
    grid = TuningGrid(alphas=(0.1, 0.4, 0.6, 0.9), pmax=3)
    a = tune(ds, grid)
    b = tune(ds.with_responses(k * ds.responses), grid)
    finite = np.isfinite(a.gcv_table)
    np.testing.assert_array_equal(finite, np.isfinite(b.gcv_table))
    np.testing.assert_allclose(b.gcv_table[finite], k**2 * a.gcv_table[finite], rtol=1e-8)
    assert (a.best_p, a.best_alpha) == (b.best_p, b.best_alpha)
