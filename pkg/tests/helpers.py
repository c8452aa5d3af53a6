"""Shared synthetic data for the test suite."""

from dataclasses import replace

import numpy as np

from fcr.fgrid import FunctionalDataset, Grid, center, eigen_from_data
from fcr.simulate import kl_sample, make_response, snr_to_sigma, surrogate_model


def three_pair_dataset(seed, n=50, m=100, snr=10.0, beta=(1.0, 0.5, 0.5)):
    """KL sample from the three-eigenpair surrogate; ``beta`` in eigen-coordinates.

    ``snr=None`` gives noise-free responses.
    """
    gm = surrogate_model(m=m)
    gm = replace(gm, beta_true=np.asarray(beta) @ gm.eigenfunctions)
    ss = np.random.SeedSequence(seed)
    xs, ys = ss.spawn(2)
    sigma = 0.0 if snr is None else snr_to_sigma(gm, snr)
    return make_response(kl_sample(gm, n, xs), gm, ys, sigma=sigma)


def random_curves(seed, n=12, m=30, rank=5, grid=None):
    """Curves of rank ``rank`` on a (possibly nonuniform) grid, no responses."""
    rng = np.random.default_rng(seed)
    if grid is None:
        grid = Grid(np.cumsum(rng.uniform(0.5, 1.5, m)))
    basis = rng.standard_normal((rank, grid.m))
    X = rng.standard_normal((n, rank)) * np.linspace(2.0, 0.5, rank) @ basis
    return FunctionalDataset(grid, X)


def eigen_score_dataset(seed, j=0, n=20, m=30, rank=4):
    """Dataset whose response is exactly the j-th empirical eigen-score."""
    ds = random_curves(seed, n=n, m=m, rank=rank)
    centered, _, _ = center(ds)
    eig = eigen_from_data(centered.curves, ds.grid)
    y = centered.curves @ (ds.grid.weights * eig.eigenfunctions[j])
    return ds.with_responses(y), eig


def rank_one_dataset(xi, y, m=25):
    """Curves ``xi_i * phi`` with a unit-norm ``phi``: a rank-one covariance."""
    grid = Grid.uniform(0.0, 1.0, m)
    phi = 1.0 + grid.points
    phi = phi / np.sqrt(np.sum(grid.weights * phi * phi))
    return FunctionalDataset(grid, np.outer(xi, phi), y), phi


def v_gram(model, ds):
    """Matrix of ``int w_j V(w_k)`` under the original centered covariance."""
    centered, _, _ = center(ds)
    q = ds.grid.weights
    S = centered.curves @ (q[:, None] * model.weights.T)
    return S.T @ S / ds.n


def qnorm(f, grid):
    return float(np.sqrt(np.sum(grid.weights * f * f)))


def abs_cos(f, g, grid):
    return abs(float(np.sum(grid.weights * f * g))) / (qnorm(f, grid) * qnorm(g, grid))
