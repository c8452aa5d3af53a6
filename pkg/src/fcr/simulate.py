"""Karhunen-Loeve data generation and Monte Carlo study harnesses.

Curves are drawn as ``X_i = mu + sum_j xi_ij w_j`` with independent
``xi_ij ~ N(0, lam_j)``; responses as ``Y_i = int beta X_i + eps_i``. The
noise scale can be set directly or through ``SNR = int mu beta / sigma``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baselines import fpcr_fit, fpls_fit
from .continuum import fit as fcr_fit
from .continuum import predict
from .errors import DimensionError, FCRError, InvalidSNRError
from .fgrid import FunctionalDataset, Grid, center, eigen_from_data, inner_product
from .tuning import TuningGrid, gcv, tune

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerativeModel:
    grid: Grid
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # k x m, orthonormal in quadrature
    beta_true: np.ndarray
    sigma: Optional[float] = None
    snr: Optional[float] = None

    def __post_init__(self):
        m = self.grid.m
        phi = np.atleast_2d(np.asarray(self.eigenfunctions, dtype=float))
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        if phi.shape != (lam.size, m):
            raise DimensionError("eigenfunctions must be k x m with k eigenvalues")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be positive and descending")
        gram = (phi * self.grid.weights) @ phi.T
        if not np.allclose(gram, np.eye(lam.size), atol=1e-8):
            raise ValueError("eigenfunctions are not orthonormal")
        object.__setattr__(self, "eigenfunctions", phi)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "mean", self.grid.check_curve(self.mean))
        object.__setattr__(self, "beta_true", self.grid.check_curve(self.beta_true))

    def noise_sd(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        if self.snr is not None:
            return snr_to_sigma(self, self.snr)
        return 0.0

    def with_scenario(self, scenario: str) -> "GenerativeModel":
        """Scenario ``'i'`` sets beta to the first eigenfunction, ``'ii'`` to the third."""
        idx = {"i": 0, "ii": 2}[scenario]
        if idx >= self.eigenvalues.size:
            raise ValueError(f"scenario {scenario} needs {idx + 1} eigenpairs")
        return replace(self, beta_true=self.eigenfunctions[idx].copy())


def _orthonormalize(F: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = []
    for f in F:
        for _ in range(2):
            for g in out:
                f = f - np.sum(q * f * g) * g
        out.append(f / math.sqrt(np.sum(q * f * f)))
    return np.array(out)


def surrogate_model(m: int = 365, scenario: str = "i") -> GenerativeModel:
    """Smooth three-eigenpair model on ``[1, 365]`` with eigenvalues ``1 : 0.3 : 0.1``."""
    grid = Grid.uniform(1.0, 365.0, m)
    s = (grid.points - 1.0) / 364.0
    raw = np.array(
        [
            1.0 + 0.6 * np.cos(2 * np.pi * s),
            np.sin(2 * np.pi * s) + 0.3 * np.cos(np.pi * s),
            np.cos(4 * np.pi * s) + 0.4 * np.sin(3 * np.pi * s),
        ]
    )
    phi = _orthonormalize(raw, grid.weights)
    # smooth mean with positive projections on all three eigenfunctions
    mean = 3.0 * phi[0] + 0.5 * phi[1] + 0.6 * phi[2] + 0.05 * np.sin(np.pi * s)
    gm = GenerativeModel(grid, mean, np.array([1.0, 0.3, 0.1]), phi, phi[0].copy())
    return gm.with_scenario(scenario)


def estimate_generative_model(ds: FunctionalDataset, k: int = 3, scenario: str = "i") -> GenerativeModel:
    """Mean and top ``k`` eigenpairs of a real dataset, packaged as a generator.

    Each eigenfunction is signed to have a nonnegative projection on the mean.
    """
    centered, x_mean, _ = center(ds)
    eig = eigen_from_data(centered.curves, ds.grid)
    if eig.rank < k:
        raise ValueError(f"dataset has rank {eig.rank} < {k}")
    phi = eig.eigenfunctions[:k]
    # eigenfunction signs are arbitrary; orient them so SNR = int mu beta / sigma is defined
    signs = np.where((phi * ds.grid.weights) @ x_mean < 0, -1.0, 1.0)
    phi = phi * signs[:, None]
    gm = GenerativeModel(ds.grid, x_mean, eig.eigenvalues[:k], phi, phi[0].copy())
    return gm.with_scenario(scenario)


def kl_sample(gm: GenerativeModel, n: int, seed) -> FunctionalDataset:
    """Draw ``n`` curves; ``seed`` is anything accepted by ``numpy.random.default_rng``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((n, gm.eigenvalues.size)) * np.sqrt(gm.eigenvalues)
    return FunctionalDataset(gm.grid, gm.mean + xi @ gm.eigenfunctions)


def make_response(ds: FunctionalDataset, gm: GenerativeModel, seed, sigma: Optional[float] = None) -> FunctionalDataset:
    """Attach ``Y_i = int beta X_i + eps_i`` with ``eps_i ~ N(0, sigma^2)``."""
    if ds.grid != gm.grid:
        raise DimensionError("dataset grid differs from the generative model grid")
    sigma = gm.noise_sd() if sigma is None else float(sigma)
    rng = np.random.default_rng(seed)
    y = ds.curves @ (gm.grid.weights * gm.beta_true) + sigma * rng.standard_normal(ds.n)
    return ds.with_responses(y)


def snr_to_sigma(gm: GenerativeModel, snr: float) -> float:
    if not snr > 0:
        raise InvalidSNRError("snr must be positive")
    signal = inner_product(gm.mean, gm.beta_true, gm.grid)
    if not signal > 0:
        raise InvalidSNRError("int mu beta must be positive for an SNR to be defined")
    return signal / snr


def rmse_curve(beta_hats, beta_true) -> np.ndarray:
    B = np.atleast_2d(np.asarray(beta_hats, dtype=float))
    if B.shape[0] == 0 or B.size == 0:
        raise ValueError("no estimates given")
    return np.sqrt(np.mean((B - np.asarray(beta_true, dtype=float)) ** 2, axis=0))


def remspe(y_test, y_pred, y_train_mean: float) -> float:
    """Held-out squared error relative to predicting the training mean."""
    y_test = np.asarray(y_test, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_test.shape != y_pred.shape or y_test.size == 0:
        raise DimensionError("y_test and y_pred must have the same nonzero length")
    den = float(np.sum((y_test - y_train_mean) ** 2))
    if den == 0:
        raise ZeroDivisionError("test responses all equal the training mean")
    return float(np.sum((y_test - y_pred) ** 2)) / den


# ---------------------------------------------------------------------------
# methods


class _MeanOnly:
    kind = "MEAN"

    def __init__(self, ds: FunctionalDataset):
        self.grid = ds.grid
        self.x_mean = ds.curves.mean(axis=0)
        self.y_mean = float(ds.responses.mean())
        self.beta_hat = np.zeros(ds.grid.m)

    def predict(self, x):
        return predict(self, x)


def _gcv_baseline(fitter, ds: FunctionalDataset, pmax: int):
    best, best_score = None, math.inf
    for p in range(1, min(pmax, ds.n - 2) + 1):
        try:
            model = fitter(ds, p)
        except (ValueError, FCRError):
            break
        rss = float(np.sum((ds.responses - predict(model, ds.curves)) ** 2))
        score = gcv(rss, ds.n, p)
        if score < best_score:
            best, best_score = model, score
    if best is None:
        raise FCRError("no baseline model could be fitted")
    return best


def fit_method(name: str, ds: FunctionalDataset, tuning: TuningGrid = TuningGrid()):
    """Fit one study method by name.

    ``fcr`` is tuned by GCV over ``tuning``. ``fcr:<alpha>:<p>`` is a fixed fit.
    ``fpcr:<p>`` and ``fpls:<p>`` are fixed-size baselines; without ``:<p>`` the size is
    chosen by GCV up to ``tuning.pmax``. ``mean`` predicts the training mean.
    """
    kind, _, arg = name.lower().partition(":")
    if kind == "mean":
        return _MeanOnly(ds)
    if kind == "fcr":
        if arg:
            alpha, p = arg.split(":")
            return fcr_fit(ds, float(alpha), int(p))
        return tune(ds, tuning).model
    fitter = {"fpcr": fpcr_fit, "fpls": fpls_fit}.get(kind)
    if fitter is None:
        raise ValueError(f"unknown method {name!r}")
    if arg:
        return fitter(ds, int(arg))
    pmax = tuning.pmax if isinstance(tuning.pmax, int) else 5
    return _gcv_baseline(fitter, ds, pmax)


# ---------------------------------------------------------------------------
# studies


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for one replicate, independent of evaluation order."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


@dataclass
class StudyReport:
    kind: str  # "estimation" or "prediction"
    methods: List[str]
    grid: Optional[Grid] = None
    beta_hats: Dict[str, np.ndarray] = field(default_factory=dict)  # replicates x m, NaN rows failed
    ise: Dict[str, np.ndarray] = field(default_factory=dict)
    rmse: Dict[str, np.ndarray] = field(default_factory=dict)
    remspe: Dict[str, np.ndarray] = field(default_factory=dict)
    failures: Dict[str, int] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_csv(self) -> str:
        """Long-format table: ``method,replicate,metric,t,value``."""
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["method", "replicate", "metric", "t", "value"])
        for meth in self.methods:
            if self.kind == "estimation":
                for t, v in zip(self.grid.points, self.rmse[meth]):
                    out.writerow([meth, "", "rmse", repr(float(t)), repr(float(v))])
                for r, v in enumerate(self.ise[meth]):
                    out.writerow([meth, r, "ise", "", repr(float(v))])
            else:
                for r, v in enumerate(self.remspe[meth]):
                    out.writerow([meth, r, "remspe", "", repr(float(v))])
            out.writerow([meth, "", "failures", "", self.failures.get(meth, 0)])
        return buf.getvalue()


def _estimation_replicate(args):
    gm, methods, n, sigma, master_seed, r, tuning = args
    seq = replicate_seed(master_seed, r)
    x_seed, y_seed = seq.spawn(2)
    ds = make_response(kl_sample(gm, n, x_seed), gm, y_seed, sigma=sigma)
    out = {}
    for meth in methods:
        try:
            out[meth] = np.asarray(fit_method(meth, ds, tuning).beta_hat, dtype=float)
        except (FCRError, ValueError, np.linalg.LinAlgError) as exc:
            logger.info("replicate %d, %s failed: %s", r, meth, exc)
            out[meth] = None
    return out


def _map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def run_estimation_study(
    gm: GenerativeModel,
    methods: Sequence[str] = ("fcr", "fpcr:2", "fpls:2"),
    n: int = 35,
    replicates: int = 200,
    snr: Optional[float] = None,
    seed: int = 0,
    tuning: TuningGrid = TuningGrid(pmax=2),
    sigma: Optional[float] = None,
    jobs: int = 1,
) -> StudyReport:
    """Monte Carlo RMSE curves of the coefficient-function estimates.

    ``sigma`` overrides ``snr``; with neither, the model's own noise setting is used.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if sigma is None:
        sigma = snr_to_sigma(gm, snr) if snr is not None else gm.noise_sd()
    methods = list(methods)
    tasks = [(gm, methods, n, sigma, seed, r, tuning) for r in range(replicates)]
    results = _map(_estimation_replicate, tasks, jobs)

    report = StudyReport(
        "estimation",
        methods,
        grid=gm.grid,
        metadata={"n": n, "replicates": replicates, "snr": snr, "sigma": sigma, "seed": seed},
    )
    q = gm.grid.weights
    for meth in methods:
        B = np.full((replicates, gm.grid.m), np.nan)
        for r, res in enumerate(results):
            if res[meth] is not None:
                B[r] = res[meth]
        ok = ~np.isnan(B[:, 0])
        report.beta_hats[meth] = B
        report.ise[meth] = ((B - gm.beta_true) ** 2) @ q
        report.failures[meth] = int(np.sum(~ok))
        report.rmse[meth] = (
            rmse_curve(B[ok], gm.beta_true) if ok.any() else np.full(gm.grid.m, np.nan)
        )
    return report


def _prediction_split(args):
    ds, methods, test_fraction, master_seed, k, tuning = args
    rng = np.random.default_rng(replicate_seed(master_seed, k))
    n_test = max(1, int(round(test_fraction * ds.n)))
    perm = rng.permutation(ds.n)
    test, train = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    tr, te = ds.subset(train), ds.subset(test)
    y_bar = float(tr.responses.mean())
    out = {}
    for meth in methods:
        try:
            model = fit_method(meth, tr, tuning)
            out[meth] = remspe(te.responses, predict(model, te.curves), y_bar)
        except (FCRError, ValueError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
            logger.info("split %d, %s failed: %s", k, meth, exc)
            out[meth] = math.nan
    return out, test


def run_prediction_study(
    ds: FunctionalDataset,
    methods: Sequence[str] = ("fcr", "fpcr", "fpls", "mean"),
    test_fraction: float = 0.1,
    splits: int = 200,
    seed: int = 0,
    tuning: TuningGrid = TuningGrid(pmax=5),
    jobs: int = 1,
) -> StudyReport:
    """Repeated random train/test splits; one ReMSPE per split and method."""
    if ds.responses is None:
        raise ValueError("dataset has no responses")
    if not 0 < test_fraction < 0.5:
        raise ValueError("test_fraction must lie in (0, 0.5)")
    methods = list(methods)
    tasks = [(ds, methods, test_fraction, seed, k, tuning) for k in range(splits)]
    results = _map(_prediction_split, tasks, jobs)
    report = StudyReport(
        "prediction",
        methods,
        grid=ds.grid,
        metadata={"splits": splits, "test_fraction": test_fraction, "seed": seed},
    )
    report.metadata["test_indices"] = [t for _, t in results]
    for meth in methods:
        vals = np.array([res[meth] for res, _ in results])
        report.remspe[meth] = vals
        report.failures[meth] = int(np.sum(np.isnan(vals)))
    return report
