"""Joint selection of the continuum parameter and the number of components by GCV."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .continuum import FCRModel, SearchOptions, iter_components, predict
from .errors import NoSignalError, SaturatedModelError, TuningFailedError
from .fgrid import DEFAULT_RANK_TOL, EigenSystem, FunctionalDataset, center, eigen_from_data

DEFAULT_ALPHAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.999)


def gcv(residual_ss: float, n: int, p: int) -> float:
    """``RSS / (n - p - 1)^2``."""
    dof = n - p - 1
    if dof < 1:
        raise SaturatedModelError(f"n - p - 1 = {dof} < 1")
    return residual_ss / dof**2


def default_pmax(eig: EigenSystem, var_threshold: float = 0.99, n: Optional[int] = None) -> int:
    """Fewest leading eigenfunctions explaining ``var_threshold`` of the variance.

    Capped at the rank and, when ``n`` is given, at ``n - 3``.
    """
    lam = np.asarray(eig.eigenvalues if isinstance(eig, EigenSystem) else eig, dtype=float)
    frac = np.cumsum(lam) / lam.sum()
    p = int(np.searchsorted(frac, var_threshold - 1e-12) + 1)
    cap = lam.size if n is None else min(lam.size, n - 3)
    return max(1, min(p, cap))


@dataclass(frozen=True)
class TuningGrid:
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    pmax: Union[int, str] = "auto"
    var_threshold: float = 0.99

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas or any(not 0 <= a < 1 for a in alphas):
            raise ValueError("alphas must lie in [0, 1)")
        object.__setattr__(self, "alphas", alphas)
        if self.pmax != "auto" and (not isinstance(self.pmax, int) or self.pmax < 1):
            raise ValueError("pmax must be a positive integer or 'auto'")


@dataclass(frozen=True)
class TuningReport:
    gcv_table: np.ndarray  # pmax x len(alphas), +inf where undefined
    alphas: Tuple[float, ...]
    best_p: int
    best_alpha: float
    model: FCRModel

    @property
    def pmax(self) -> int:
        return self.gcv_table.shape[0]

    def table_csv(self) -> str:
        """GCV table with one row per ``p`` and one column per ``alpha``."""
        lines = ["p," + ",".join(repr(a) for a in self.alphas)]
        for p, row in enumerate(self.gcv_table, start=1):
            lines.append(f"{p}," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _alpha_column(args) -> Tuple[List[float], List[FCRModel]]:
    ds, alpha, pmax, opts, rank_tol = args
    scores = [math.inf] * pmax
    models: List[Optional[FCRModel]] = [None] * pmax
    try:
        for model in iter_components(ds, alpha, pmax, opts, rank_tol):
            k = model.p
            rss = float(np.sum((ds.responses - predict(model, ds.curves)) ** 2))
            try:
                scores[k - 1] = gcv(rss, ds.n, k)
            except SaturatedModelError:
                break
            models[k - 1] = model
    except NoSignalError:
        pass
    return scores, models


def tune(
    ds: FunctionalDataset,
    grid: TuningGrid = TuningGrid(),
    opts: SearchOptions = SearchOptions(),
    rank_tol: float = DEFAULT_RANK_TOL,
    jobs: int = 1,
) -> TuningReport:
    """Fit every ``(p, alpha)`` cell, reusing deflation along ``p``, and keep the GCV minimizer.

    Ties go to the smaller ``p`` and then the smaller ``alpha``.
    """
    if ds.responses is None:
        raise ValueError("dataset has no responses")
    if ds.n < 5:
        raise ValueError("tuning needs at least five curves")
    if grid.pmax == "auto":
        centered, _, _ = center(ds)
        pmax = default_pmax(eigen_from_data(centered.curves, ds.grid, rank_tol), grid.var_threshold, ds.n)
    else:
        pmax = grid.pmax
    tasks = [(ds, a, pmax, opts, rank_tol) for a in grid.alphas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_alpha_column, tasks))
    else:
        columns = [_alpha_column(t) for t in tasks]

    table = np.array([col[0] for col in columns]).T
    best = None
    for p in range(pmax):
        for j in range(len(grid.alphas)):
            if np.isfinite(table[p, j]) and (best is None or table[p, j] < table[best]):
                best = (p, j)
    if best is None:
        raise TuningFailedError("no (p, alpha) cell could be fitted")
    p, j = best
    return TuningReport(table, grid.alphas, p + 1, grid.alphas[j], columns[j][1][p])
