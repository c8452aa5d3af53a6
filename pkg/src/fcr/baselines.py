"""Functional principal component regression and functional PLS (NIPALS).

Both estimators share the prediction contract of
:class:`fcr.continuum.FCRModel`. They are written without any of the
continuum machinery so they can serve as independent references for the
``alpha -> 1`` and ``alpha = 1/2`` special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoSignalError
from .fgrid import DEFAULT_RANK_TOL, FunctionalDataset, Grid, center, eigen_from_data


@dataclass(frozen=True)
class BaselineModel:
    kind: str  # "FPCR" or "FPLS"
    p: int
    beta_hat: np.ndarray
    x_mean: np.ndarray
    y_mean: float
    grid: Grid
    weights: Optional[np.ndarray] = None
    coefs: Optional[np.ndarray] = None
    truncated: bool = False

    def predict(self, x):
        from .continuum import predict

        return predict(self, x)


def fpcr_fit(ds: FunctionalDataset, p: int, rank_tol: float = DEFAULT_RANK_TOL) -> BaselineModel:
    """Regress the centered response on the first ``p`` functional principal component scores."""
    if ds.responses is None:
        raise ValueError("dataset has no responses")
    if p < 1:
        raise ValueError("p must be at least 1")
    centered, x_mean, y_mean = center(ds)
    eig = eigen_from_data(centered.curves, ds.grid, rank_tol)
    if p > eig.rank:
        raise ValueError(f"p = {p} exceeds the covariance rank {eig.rank}")
    phi = eig.eigenfunctions[:p]
    lam = eig.eigenvalues[:p]
    S = centered.curves @ (ds.grid.weights[:, None] * phi.T)
    a = S.T @ centered.responses / ds.n
    coefs = a / lam
    return BaselineModel(
        kind="FPCR",
        p=p,
        beta_hat=coefs @ phi,
        x_mean=x_mean,
        y_mean=y_mean,
        grid=ds.grid,
        weights=phi.copy(),
        coefs=coefs,
    )


def fpls_fit(ds: FunctionalDataset, p: int, rank_tol: float = DEFAULT_RANK_TOL) -> BaselineModel:
    """Functional PLS by the NIPALS recursion.

    Each step takes the cross-covariance curve of the deflated curves with the
    residual response, normalizes it, and deflates curves and response by
    regression on its scores. The deflated-data weights ``W`` are then mapped
    to weights acting on the original curves, ``R = W (P'QW)^{-1}``, which are
    V-orthogonal and give the reported unit-norm weights.
    """
    if ds.responses is None:
        raise ValueError("dataset has no responses")
    if p < 1:
        raise ValueError("p must be at least 1")
    centered, x_mean, y_mean = center(ds)
    q = ds.grid.weights
    X = np.array(centered.curves)
    y = np.array(centered.responses)
    n = ds.n
    rank = eigen_from_data(X, ds.grid, rank_tol).rank
    if p > rank:
        raise ValueError(f"p = {p} exceeds the covariance rank {rank}")
    y_sd = math.sqrt(float(np.mean(y**2)))
    x_scale = math.sqrt(float(np.max(np.mean(X**2, axis=0))) * float(np.sum(q)))

    W, P = [], []
    for _ in range(p):
        h = X.T @ y / n
        h_norm = math.sqrt(float(np.sum(q * h * h)))
        if h_norm <= 1e-10 * y_sd * x_scale:
            break
        w = h / h_norm
        t = X @ (q * w)
        tt = float(t @ t)
        if tt <= 0:
            break
        loading = X.T @ t / tt
        X = X - np.outer(t, loading)
        y = y - t * (float(t @ y) / tt)
        W.append(w)
        P.append(loading)
    if not W:
        raise NoSignalError("response is uncorrelated with the curves")

    W = np.array(W)
    P = np.array(P)
    G = (P * q) @ W.T  # G[i, j] = <p_i, w_j>
    R = np.linalg.solve(G.T, W)  # rows of R = columns of W G^{-1}
    R = R / np.sqrt((R * R) @ q)[:, None]

    S = centered.curves @ (q[:, None] * R.T)
    cov = S.T @ centered.responses / n
    var = np.sum(S * S, axis=0) / n
    signs = np.where(cov < 0, -1.0, 1.0)
    R = R * signs[:, None]
    coefs = cov * signs / var
    return BaselineModel(
        kind="FPLS",
        p=R.shape[0],
        beta_hat=coefs @ R,
        x_mean=x_mean,
        y_mean=y_mean,
        grid=ds.grid,
        weights=R,
        coefs=coefs,
        truncated=R.shape[0] < p,
    )
