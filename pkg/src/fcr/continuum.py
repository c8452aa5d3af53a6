"""Functional continuum regression.

Each component maximizes

    T(w) = cov(Y, int X w)^2 * (int w V(w)) ** (alpha / (1 - alpha) - 1)

over unit-norm ``w`` that are V-orthogonal to the earlier components. The
maximizer has the ridge form ``w ~ sum_j a_j / (lam_j + lam_1 / delta) phi_j``
in the eigenbasis of the deflated covariance, so the search reduces to the
scalar ``delta`` in ``(-1, 0) U (0, inf)``. Its three boundary values give the
principal component (``delta -> -1``), PLS (``delta -> 0``) and least squares
(``delta -> inf``) directions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateComponentError,
    DegenerateCovarianceError,
    DimensionError,
    NoSignalError,
    OrthogonalityAssumptionError,
    PoleError,
)
from .fgrid import (
    DEFAULT_RANK_TOL,
    EigenSystem,
    FunctionalDataset,
    Grid,
    center,
    cov_apply,
    eigen_from_data,
)
from .oracle import log_t_star

logger = logging.getLogger(__name__)

TO_MINUS_ONE = "to_minus_one"
TO_ZERO = "to_zero"
TO_INFINITY = "to_infinity"
LIMIT_TAGS = (TO_MINUS_ONE, TO_ZERO, TO_INFINITY)

Delta = Union[float, str]

# |a_j| below this fraction of the signal scale counts as zero
SIGNAL_TOL = 1e-10


def _exponent(alpha: float) -> float:
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    return alpha / (1 - alpha)


@dataclass(frozen=True)
class ComponentState:
    """Deflated curves and residual responses before extracting one component.

    ``deflated.curves`` holds the deflated curves and ``deflated.responses`` the
    residual responses. ``constraint_basis`` is a quadrature-orthonormal basis of
    ``span{V(w_1), ..., V(w_{p-1})}``, the directions already projected out.
    """

    deflated: FunctionalDataset
    eig: EigenSystem
    cross_cov: np.ndarray
    score_var: np.ndarray
    original: FunctionalDataset
    constraint_basis: np.ndarray
    ref_eigenvalue: float
    ref_response_sd: float
    rank_tol: float = DEFAULT_RANK_TOL

    @property
    def grid(self) -> Grid:
        return self.deflated.grid

    @property
    def residuals(self) -> np.ndarray:
        return self.deflated.responses

    @property
    def step(self) -> int:
        """1-based index of the component this state will produce."""
        return self.constraint_basis.shape[0] + 1

    @property
    def signal_scale(self) -> float:
        return math.sqrt(self.ref_eigenvalue) * self.ref_response_sd

    def has_signal(self) -> bool:
        return bool(np.max(np.abs(self.cross_cov)) > SIGNAL_TOL * self.signal_scale)


def _build_state(
    Xd: np.ndarray,
    yd: np.ndarray,
    original: FunctionalDataset,
    basis: np.ndarray,
    ref_eigenvalue: float,
    ref_response_sd: float,
    rank_tol: float,
) -> ComponentState:
    grid = original.grid
    eig = eigen_from_data(Xd, grid, rank_tol)
    if eig.eigenvalues[0] <= rank_tol * ref_eigenvalue:
        raise DegenerateCovarianceError("deflated curves carry no variation")
    n = Xd.shape[0]
    S = Xd @ (grid.weights[:, None] * eig.eigenfunctions.T)
    S = S - S.mean(axis=0)
    yc = yd - yd.mean()
    a = S.T @ yc / n
    b = np.sum(S**2, axis=0) / n
    return ComponentState(
        deflated=FunctionalDataset(grid, Xd, yd),
        eig=eig,
        cross_cov=a,
        score_var=b,
        original=original,
        constraint_basis=basis,
        ref_eigenvalue=ref_eigenvalue,
        ref_response_sd=ref_response_sd,
        rank_tol=rank_tol,
    )


def init_state(ds: FunctionalDataset, rank_tol: float = DEFAULT_RANK_TOL) -> ComponentState:
    """State for the first component: centered curves and centered responses."""
    if ds.responses is None:
        raise ValueError("dataset has no responses")
    if ds.n < 3:
        raise ValueError("at least three curves are needed")
    centered, _, _ = center(ds)
    X = centered.curves
    # centering rounding leaves ~eps * |X| behind for identical curves
    scale = float(np.mean(ds.curves**2 @ ds.grid.weights))
    total = float(np.mean(X**2 @ ds.grid.weights))
    if total <= 1e-24 * max(scale, np.finfo(float).tiny):
        raise DegenerateCovarianceError("all curves are identical")
    eig = eigen_from_data(X, ds.grid, rank_tol)
    y_sd = float(np.sqrt(np.mean(centered.responses**2)))
    return _build_state(
        X,
        centered.responses,
        centered,
        np.zeros((0, ds.grid.m)),
        float(eig.eigenvalues[0]),
        y_sd,
        rank_tol,
    )


# ---------------------------------------------------------------------------
# Q function and ridge-form weights


def _d_from_delta(lam: np.ndarray, delta: float) -> np.ndarray:
    if delta == 0:
        raise ValueError("delta = 0 is a limit; use the 'to_zero' tag")
    return lam + lam[0] / delta


def _d_left(lam: np.ndarray, u: float) -> np.ndarray:
    # delta = -1 / (1 + e^u); written to keep d_1 = -lam_1 e^u exact near delta = -1
    return (lam - lam[0]) - lam[0] * math.exp(u)


def _d_right(lam: np.ndarray, v: float) -> np.ndarray:
    # delta = e^v
    return lam + lam[0] * math.exp(-v)


def _log_q_from_coef(a: np.ndarray, b: np.ndarray, e: np.ndarray, gamma: float) -> float:
    """ln T* of the weight with eigen-coordinates proportional to ``e``."""
    scale = np.max(np.abs(e))
    if not scale > 0 or not np.isfinite(scale):
        raise PoleError("degenerate ridge coefficients")
    e = e / scale
    s1 = float(a @ e)
    s2 = float(e @ e)
    s3 = float(b @ (e * e))
    if s1 == 0:
        return -math.inf
    return 2 * math.log(abs(s1)) - math.log(s2) + (gamma - 1) * (math.log(s3) - math.log(s2))


def _log_q_from_d(a, b, d, gamma) -> float:
    if np.any(d == 0):
        raise PoleError("lam_j + lam_1 / delta vanishes")
    return _log_q_from_coef(a, b, a / d, gamma)


def _limit_coef(a: np.ndarray, lam: np.ndarray, tag: str) -> np.ndarray:
    if tag == TO_ZERO:
        return a.copy()
    if tag == TO_INFINITY:
        return a / lam
    if tag == TO_MINUS_ONE:
        if abs(a[0]) <= SIGNAL_TOL * np.max(np.abs(a)):
            raise OrthogonalityAssumptionError(
                "residual cross-covariance is orthogonal to the leading eigenfunction"
            )
        e = np.zeros_like(a)
        e[0] = 1.0
        return e
    raise ValueError(f"unknown limit tag {tag!r}")


def _coef(a: np.ndarray, lam: np.ndarray, delta: Delta) -> np.ndarray:
    if isinstance(delta, str):
        return _limit_coef(a, lam, delta)
    d = _d_from_delta(lam, float(delta))
    if np.any(d == 0):
        raise PoleError("lam_j + lam_1 / delta vanishes")
    return a / d


def log_q(state: ComponentState, alpha: float, delta: float) -> float:
    """ln Q(delta): the objective of the ridge-form weight, from eigen-coordinates.

    With ``d_j = lam_j + lam_1 / delta``, ``S1 = sum a_j^2 / d_j``,
    ``S2 = sum a_j^2 / d_j^2`` and ``S3 = sum a_j^2 b_j / d_j^2``::

        ln Q = 2 ln|S1| - g ln S2 + (g - 1) ln S3,   g = alpha / (1 - alpha)
    """
    gamma = _exponent(alpha)
    a, b, lam = state.cross_cov, state.score_var, state.eig.eigenvalues
    if not np.any(a != 0):
        raise NoSignalError("all cross-covariances are zero")
    return _log_q_from_d(a, b, _d_from_delta(lam, float(delta)), gamma)


def _orient(e: np.ndarray, a: np.ndarray) -> np.ndarray:
    return -e if a @ e < 0 else e


def _weight_from_coef(phi: np.ndarray, e: np.ndarray, a: np.ndarray) -> np.ndarray:
    e = _orient(e / np.linalg.norm(e), a)
    return e @ phi


def weight_from_delta(state: ComponentState, delta: Delta) -> np.ndarray:
    """Unit-norm ridge-form weight for a ridge value or a limit tag.

    The sign is chosen so the weight has nonnegative covariance with the
    residual response.
    """
    a, lam = state.cross_cov, state.eig.eigenvalues
    if not np.any(a != 0):
        raise NoSignalError("all cross-covariances are zero")
    return _weight_from_coef(state.eig.eigenfunctions, _coef(a, lam, delta), a)


# ---------------------------------------------------------------------------
# delta search


@dataclass(frozen=True)
class SearchOptions:
    eps_boundary: float = 1e-6
    delta_max: float = 1e8
    scan_points: int = 64
    xatol: float = 1e-10


@dataclass(frozen=True)
class DeltaChoice:
    delta: Delta
    log_objective: float
    reduced: bool = False  # leading eigenspace projected out


def _maximize_piece(f, lo: float, hi: float, opts: SearchOptions) -> Tuple[float, float]:
    grid = np.linspace(lo, hi, opts.scan_points)
    vals = np.array([_safe(f, x) for x in grid])
    k = int(np.argmax(vals))
    best_x, best_f = grid[k], vals[k]
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, grid.size - 1)]
    if right > left and np.isfinite(best_f):
        res = minimize_scalar(
            lambda x: -_safe(f, x),
            bounds=(left, right),
            method="bounded",
            options={"xatol": opts.xatol},
        )
        if -res.fun > best_f:
            best_x, best_f = float(res.x), float(-res.fun)
    return float(best_x), float(best_f)


def _safe(f, x) -> float:
    try:
        val = f(x)
    except PoleError:
        return -math.inf
    return val if np.isfinite(val) else -math.inf


def _effective_system(state: ComponentState):
    """(lam, phi, a, b, reduced) after the top-eigenspace fallback, if needed."""
    if not state.has_signal():
        raise NoSignalError("residual response is uncorrelated with the deflated curves")
    a, b = state.cross_cov, state.score_var
    lam, phi = state.eig.eigenvalues, state.eig.eigenfunctions
    if abs(a[0]) > SIGNAL_TOL * np.max(np.abs(a)):
        return lam, phi, a, b, False
    # project out the leading eigenfunction and retry once
    if a.size < 2 or abs(a[1]) <= SIGNAL_TOL * np.max(np.abs(a)):
        raise NoSignalError("cross-covariance orthogonal to the leading eigenspaces")
    logger.debug("a_1 = 0: projecting out the leading eigenfunction")
    return lam[1:], phi[1:], a[1:], b[1:], True


def maximize_delta(
    state: ComponentState, alpha: float, opts: SearchOptions = SearchOptions()
) -> DeltaChoice:
    """Pick the ridge value (or limit) whose weight maximizes the objective.

    Both pieces of ``(-1, 0) U (0, inf)`` are scanned and refined with bounded
    Brent. The left piece is searched in ``u = ln(-1/delta - 1)`` and the right
    in ``ln delta``. The three limits compete as explicit candidates, evaluated
    directly on the deflated data.
    """
    gamma = _exponent(alpha)
    lam, phi, a, b, reduced = _effective_system(state)
    eps = opts.eps_boundary

    candidates: List[Tuple[float, Delta]] = []
    for tag in LIMIT_TAGS:
        try:
            w = _weight_from_coef(phi, _limit_coef(a, lam, tag), a)
        except OrthogonalityAssumptionError:
            continue
        candidates.append((log_t_star(state, alpha, w), tag))

    u_lo, u_hi = math.log(eps / (1 - eps)), math.log((1 - eps) / eps)
    u, fu = _maximize_piece(lambda x: _log_q_from_d(a, b, _d_left(lam, x), gamma), u_lo, u_hi, opts)
    candidates.append((fu, -1.0 / (1.0 + math.exp(u))))
    v, fv = _maximize_piece(
        lambda x: _log_q_from_d(a, b, _d_right(lam, x), gamma),
        math.log(eps),
        math.log(opts.delta_max),
        opts,
    )
    candidates.append((fv, math.exp(v)))

    best_f, best_delta = candidates[0]
    for f, d in candidates[1:]:
        # limits come first and win exact ties
        if f > best_f + 1e-13 * max(1.0, abs(best_f)):
            best_f, best_delta = f, d
    logger.debug("alpha=%g step=%d delta=%s lnT=%.12g", alpha, state.step, best_delta, best_f)
    return DeltaChoice(best_delta, float(best_f), reduced)


# ---------------------------------------------------------------------------
# components, deflation and model assembly


@dataclass(frozen=True)
class ComponentFit:
    weight: np.ndarray
    delta: Delta
    coef: float
    score_sd: float
    log_objective: float

    @property
    def objective(self) -> float:
        try:
            return math.exp(self.log_objective)
        except OverflowError:
            return math.inf


def _scores(centered: FunctionalDataset, w: np.ndarray) -> np.ndarray:
    return centered.curves @ (centered.grid.weights * w)


def fit_component(
    state: ComponentState, alpha: float, opts: SearchOptions = SearchOptions()
) -> ComponentFit:
    """Extract the next continuum component from ``state``.

    ``coef`` is the least-squares coefficient of the original centered response
    on the original scores ``int (X_i - Xbar) w``, so ``beta_hat`` accumulates
    ``coef * weight``.
    """
    choice = maximize_delta(state, alpha, opts)
    lam, phi, a, _, _ = _effective_system(state)
    w = _weight_from_coef(phi, _coef(a, lam, choice.delta), a)
    s = _scores(state.original, w)
    s = s - s.mean()
    var = float(np.mean(s**2))
    if var <= 1e-20 * state.ref_eigenvalue:
        raise DegenerateComponentError("component scores have zero variance")
    y = state.original.responses
    c = float(np.mean((y - y.mean()) * s)) / var
    return ComponentFit(w, choice.delta, c, math.sqrt(var), choice.log_objective)


def _gram_schmidt(v: np.ndarray, basis: np.ndarray, weights: np.ndarray) -> np.ndarray:
    for _ in range(2):
        if basis.shape[0]:
            v = v - (basis @ (weights * v)) @ basis
    return v


def deflate(
    state: ComponentState,
    fit: ComponentFit,
    original: Optional[FunctionalDataset] = None,
) -> ComponentState:
    """Remove a fitted component from the curves and the residual response.

    The curves are projected onto the orthogonal complement of ``V(w)``, which
    keeps every later weight V-orthogonal to ``w``. The residual is regressed
    on the component scores.
    """
    original = state.original if original is None else original
    if not fit.score_sd > 0:
        raise DegenerateComponentError("component scores have zero variance")
    grid = state.grid
    q = grid.weights
    w = grid.check_curve(fit.weight)

    basis = state.constraint_basis
    Xd = np.array(state.deflated.curves)
    v = cov_apply(original.curves, grid, w)
    u = _gram_schmidt(v, basis, q)
    u_norm = math.sqrt(float(np.sum(q * u * u)))
    v_norm = math.sqrt(float(np.sum(q * v * v)))
    if u_norm > 1e-10 * v_norm:
        u = u / u_norm
        Xd = Xd - np.outer(Xd @ (q * u), u)
        basis = np.vstack([basis, u])

    s = _scores(original, w)
    s = s - s.mean()
    yd = state.residuals
    yd = yd - (float(np.mean((yd - yd.mean()) * s)) / float(np.mean(s**2))) * s
    return _build_state(
        Xd, yd, original, basis, state.ref_eigenvalue, state.ref_response_sd, state.rank_tol
    )


@dataclass(frozen=True)
class FCRModel:
    alpha: float
    components: Tuple[ComponentFit, ...]
    beta_hat: np.ndarray
    x_mean: np.ndarray
    y_mean: float
    grid: Grid
    truncated: bool = False
    fitted_values: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    kind = "FCR"

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def predict(self, x):
        return predict(self, x)


def predict(model, x):
    """``ybar + int beta_hat (x - xbar)`` for one curve, a curve matrix or a dataset."""
    if isinstance(x, FunctionalDataset):
        if x.grid != model.grid:
            raise DimensionError("dataset grid differs from the model grid")
        x = x.curves
    x = model.grid.check_curve(x)
    return model.y_mean + (x - model.x_mean) @ (model.grid.weights * model.beta_hat)


def iter_components(
    ds: FunctionalDataset,
    alpha: float,
    pmax: int,
    opts: SearchOptions = SearchOptions(),
    rank_tol: float = DEFAULT_RANK_TOL,
) -> Iterator[FCRModel]:
    """Yield the fitted models with 1, 2, ..., up to ``pmax`` components.

    Stops early when no further component exists (no residual signal, exhausted
    rank, or ``alpha = 0`` after its single least-squares component); the last
    model yielded then has ``truncated`` set only if fewer than ``pmax``
    components were produced, which callers detect by the count.
    """
    _exponent(alpha)
    state = init_state(ds, rank_tol)
    centered = state.original
    x_mean = ds.curves.mean(axis=0)
    y_mean = float(ds.responses.mean())
    beta = np.zeros(ds.grid.m)
    eta = np.full(ds.n, y_mean)
    comps: List[ComponentFit] = []
    for k in range(1, pmax + 1):
        if k > 1:
            if alpha == 0:
                return
            try:
                state = deflate(state, comps[-1])
            except (DegenerateCovarianceError, DegenerateComponentError):
                return
        try:
            comp = fit_component(state, alpha, opts)
        except (NoSignalError, DegenerateComponentError):
            if k == 1:
                raise
            return
        comps.append(comp)
        beta = beta + comp.coef * comp.weight
        eta = eta + comp.coef * _scores(centered, comp.weight)
        yield FCRModel(
            alpha=alpha,
            components=tuple(comps),
            beta_hat=beta,
            x_mean=x_mean,
            y_mean=y_mean,
            grid=ds.grid,
            fitted_values=eta,
        )


def fit(
    ds: FunctionalDataset,
    alpha: float,
    p: int,
    opts: SearchOptions = SearchOptions(),
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FCRModel:
    """Fit a ``p``-component functional continuum regression model.

    If the component sequence ends before ``p`` (see :func:`iter_components`),
    the shorter model is returned with ``truncated=True``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    model = None
    for model in iter_components(ds, alpha, p, opts, rank_tol):
        pass
    assert model is not None
    if model.p < p:
        model = replace(model, truncated=True)
    return model


def refit_residuals(ds: FunctionalDataset, model) -> np.ndarray:
    """In-sample residuals ``Y_i - eta_hat(X_i)`` computed from scratch."""
    return ds.responses - predict(model, ds.curves)
