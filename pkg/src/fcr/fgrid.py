"""Grid-sampled functional data: quadrature, centering, covariance kernels, eigenfunctions.

Curves are plain 1-d float arrays aligned with a :class:`Grid`; all L2 integrals
are evaluated with trapezoid quadrature weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import (
    DegenerateCovarianceError,
    DimensionError,
    EmptyDatasetError,
    InvalidGridError,
)

DEFAULT_RANK_TOL = 1e-10


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def trapezoid_weights(points) -> np.ndarray:
    """Trapezoid quadrature weights for a strictly increasing grid.

    >>> trapezoid_weights([0.0, 0.5, 2.0])
    array([0.25, 1.  , 0.75])
    """
    t = np.asarray(points, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidGridError("a grid needs at least two points")
    if not np.all(np.isfinite(t)):
        raise InvalidGridError("grid points must be finite")
    h = np.diff(t)
    if np.any(h <= 0):
        raise InvalidGridError("grid points must be strictly increasing")
    w = np.empty_like(t)
    w[0] = h[0] / 2
    w[-1] = h[-1] / 2
    w[1:-1] = (h[:-1] + h[1:]) / 2
    return w


@dataclass(frozen=True)
class Grid:
    """Sampling points of the curves together with their quadrature weights."""

    points: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = _frozen(self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", _frozen(trapezoid_weights(pts)))

    @classmethod
    def uniform(cls, start: float, stop: float, m: int) -> "Grid":
        return cls(np.linspace(start, stop, m))

    @property
    def m(self) -> int:
        return self.points.size

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def check_curve(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.m:
            raise DimensionError(
                f"curve has {f.shape[-1]} samples, grid has {self.m} points"
            )
        return f


def inner_product(f, g, grid: Grid) -> float:
    """Quadrature approximation of the L2 inner product of two curves."""
    f = grid.check_curve(f)
    g = grid.check_curve(g)
    if f.ndim != 1 or g.ndim != 1:
        raise DimensionError("inner_product expects single curves")
    return float(np.sum(grid.weights * f * g))


def norm(f, grid: Grid) -> float:
    return float(np.sqrt(inner_product(f, f, grid)))


def normalize(f, grid: Grid) -> np.ndarray:
    nrm = norm(f, grid)
    if nrm == 0:
        raise ValueError("cannot normalize the zero curve")
    return np.asarray(f, dtype=float) / nrm


@dataclass(frozen=True)
class FunctionalDataset:
    """``n`` curves sampled on a common grid, with optional scalar responses."""

    grid: Grid
    curves: np.ndarray
    responses: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.curves, dtype=float))
        if X.shape[1] != self.grid.m:
            raise DimensionError(
                f"curves have {X.shape[1]} columns but grid has {self.grid.m} points"
            )
        if not np.all(np.isfinite(X)):
            raise DimensionError("curves contain non-finite values")
        object.__setattr__(self, "curves", _frozen(X))
        if self.responses is not None:
            y = np.asarray(self.responses, dtype=float).reshape(-1)
            if y.size != X.shape[0]:
                raise DimensionError(
                    f"{y.size} responses for {X.shape[0]} curves"
                )
            if not np.all(np.isfinite(y)):
                raise DimensionError("responses contain non-finite values")
            object.__setattr__(self, "responses", _frozen(y))

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    def with_responses(self, y) -> "FunctionalDataset":
        return FunctionalDataset(self.grid, self.curves, y)

    def subset(self, idx) -> "FunctionalDataset":
        idx = np.asarray(idx)
        y = None if self.responses is None else self.responses[idx]
        return FunctionalDataset(self.grid, self.curves[idx], y)


def center(ds: FunctionalDataset) -> Tuple[FunctionalDataset, np.ndarray, Optional[float]]:
    """Subtract the mean curve (and mean response, if present).

    Returns the centered dataset, the mean curve and the mean response
    (``None`` when the dataset carries no responses).
    """
    if ds.n < 1:
        raise EmptyDatasetError("cannot center an empty dataset")
    x_mean = ds.curves.mean(axis=0)
    y_mean = None
    y = None
    if ds.responses is not None:
        y_mean = float(ds.responses.mean())
        y = ds.responses - y_mean
    return FunctionalDataset(ds.grid, ds.curves - x_mean, y), x_mean, y_mean


@dataclass(frozen=True)
class CovKernel:
    """Covariance kernel sampled on ``grid x grid``."""

    grid: Grid
    kernel: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.kernel, dtype=float)
        if K.shape != (self.grid.m, self.grid.m):
            raise DimensionError("kernel must be m x m")
        object.__setattr__(self, "kernel", _frozen(K))

    def apply(self, f) -> np.ndarray:
        """The integral operator ``f -> int f(s) k(s, .) ds``."""
        f = self.grid.check_curve(f)
        return self.kernel @ (self.grid.weights * f)


def empirical_cov(centered: FunctionalDataset) -> CovKernel:
    """Empirical covariance kernel of already-centered curves (divisor ``n``)."""
    if centered.n == 0:
        raise EmptyDatasetError("empty dataset has no covariance")
    X = centered.curves
    return CovKernel(centered.grid, X.T @ X / centered.n)


def cov_apply(centered_curves: np.ndarray, grid: Grid, f) -> np.ndarray:
    """Apply the empirical covariance operator without forming the kernel."""
    X = np.asarray(centered_curves)
    s = X @ (grid.weights * grid.check_curve(f))
    return X.T @ s / X.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Leading eigenpairs of a covariance operator in the quadrature metric.

    ``eigenfunctions`` is an ``r x m`` array whose rows are orthonormal in the
    quadrature inner product; eigenvalues are positive and descending.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(
            self, "eigenfunctions", _frozen(np.atleast_2d(self.eigenfunctions))
        )

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def __getitem__(self, sl) -> "EigenSystem":
        if isinstance(sl, int):
            sl = slice(sl, sl + 1)
        return EigenSystem(self.grid, self.eigenvalues[sl], self.eigenfunctions[sl])

    def reconstruct(self) -> np.ndarray:
        """Kernel ``sum_j lam_j phi_j(s) phi_j(t)``."""
        phi = self.eigenfunctions
        return (phi.T * self.eigenvalues) @ phi


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every row made positive
    idx = np.argmax(np.abs(vecs), axis=1)
    signs = np.sign(vecs[np.arange(vecs.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vecs * signs[:, None]


def _truncate(lam: np.ndarray, rank_tol: float) -> int:
    if not 0 < rank_tol < 1:
        raise ValueError("rank_tol must lie in (0, 1)")
    if lam.size == 0 or not lam[0] > 0:
        raise DegenerateCovarianceError("covariance has no positive eigenvalue")
    return int(np.count_nonzero(lam > rank_tol * lam[0]))


def eigen(kernel: CovKernel, rank_tol: float = DEFAULT_RANK_TOL) -> EigenSystem:
    """Eigen-decompose the covariance operator of ``kernel``.

    The operator is symmetrized with ``D = diag(sqrt(q))``; eigenvectors ``u``
    of ``D K D`` map back to eigenfunctions ``u / sqrt(q)``.
    """
    grid = kernel.grid
    d = np.sqrt(grid.weights)
    M = d[:, None] * kernel.kernel * d[None, :]
    M = (M + M.T) / 2
    lam, U = np.linalg.eigh(M)
    lam = lam[::-1]
    U = U[:, ::-1]
    r = _truncate(lam, rank_tol)
    phi = _fix_signs(U[:, :r].T / d[None, :])
    return EigenSystem(grid, lam[:r], phi)


def eigen_from_data(
    centered_curves: np.ndarray, grid: Grid, rank_tol: float = DEFAULT_RANK_TOL
) -> EigenSystem:
    """Same eigensystem as ``eigen(empirical_cov(...))`` via a thin SVD of the data.

    Cheaper when ``n < m`` and more accurate for the small eigenvalues.
    """
    X = np.asarray(centered_curves, dtype=float)
    n = X.shape[0]
    if n == 0:
        raise EmptyDatasetError("empty dataset has no covariance")
    d = np.sqrt(grid.weights)
    Z = X * d[None, :] / np.sqrt(n)
    _, s, Vt = np.linalg.svd(Z, full_matrices=False)
    lam = s**2
    r = _truncate(lam, rank_tol)
    phi = _fix_signs(Vt[:r] / d[None, :])
    return EigenSystem(grid, lam[:r], phi)


def score(centered: FunctionalDataset, w) -> np.ndarray:
    """Component scores ``int X_i w`` for every row of ``centered``."""
    w = centered.grid.check_curve(w)
    return centered.curves @ (centered.grid.weights * w)
