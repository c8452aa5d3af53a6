"""CSV and JSON persistence for datasets, models and generative models."""

from __future__ import annotations

import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .baselines import BaselineModel
from .continuum import LIMIT_TAGS, ComponentFit, FCRModel
from .errors import DataFormatError, DimensionError
from .fgrid import FunctionalDataset, Grid
from .simulate import GenerativeModel

PathLike = Union[str, os.PathLike]


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_text(path: PathLike, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_matrix(path: PathLike) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise DataFormatError(f"{path}: non-finite entries")
    return data


def read_curves_csv(path: PathLike) -> Tuple[Grid, np.ndarray]:
    """First row is the grid, each following row one curve."""
    data = _load_matrix(path)
    if data.shape[0] < 2:
        raise DataFormatError(f"{path}: expected a grid row and at least one curve")
    try:
        grid = Grid(data[0])
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    return grid, data[1:]


def read_responses_csv(path: PathLike) -> np.ndarray:
    data = _load_matrix(path)
    if data.shape[1] != 1:
        raise DataFormatError(f"{path}: responses must be a single column")
    return data[:, 0]


def read_dataset(x_path: PathLike, y_path: Optional[PathLike] = None) -> FunctionalDataset:
    grid, curves = read_curves_csv(x_path)
    y = None if y_path is None else read_responses_csv(y_path)
    try:
        return FunctionalDataset(grid, curves, y)
    except DimensionError as exc:
        raise DataFormatError(str(exc)) from exc


def curves_to_csv(grid: Grid, curves) -> str:
    rows = [grid.points, *np.atleast_2d(curves)]
    return "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)


def vector_to_csv(values) -> str:
    return "".join(_fmt(v) + "\n" for v in np.ravel(values))


# ---------------------------------------------------------------------------
# models


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def model_to_dict(model) -> dict:
    base = {
        "kind": model.kind,
        "p": int(model.p),
        "grid_points": model.grid.points.tolist(),
        "x_mean": np.asarray(model.x_mean).tolist(),
        "y_mean": float(model.y_mean),
        "beta_hat": np.asarray(model.beta_hat).tolist(),
        "truncated": bool(model.truncated),
    }
    if isinstance(model, FCRModel):
        base["alpha"] = float(model.alpha)
        base["components"] = [
            {
                "weight": c.weight.tolist(),
                "delta": c.delta if isinstance(c.delta, str) else float(c.delta),
                "coef": float(c.coef),
                "score_sd": float(c.score_sd),
                "objective": _finite_or_none(c.objective),
                "log_objective": float(c.log_objective),
            }
            for c in model.components
        ]
    else:
        base["components"] = [
            {"weight": w.tolist(), "coef": float(c)} for w, c in zip(model.weights, model.coefs)
        ]
    return base


def model_from_dict(d: dict):
    try:
        grid = Grid(d["grid_points"])
        kind = d["kind"]
        common = dict(
            beta_hat=np.asarray(d["beta_hat"], dtype=float),
            x_mean=np.asarray(d["x_mean"], dtype=float),
            y_mean=float(d["y_mean"]),
            grid=grid,
            truncated=bool(d.get("truncated", False)),
        )
        if kind == "FCR":
            comps = []
            for c in d["components"]:
                delta = c["delta"]
                if isinstance(delta, str) and delta not in LIMIT_TAGS:
                    raise DataFormatError(f"unknown delta tag {delta!r}")
                log_obj = c.get("log_objective")
                if log_obj is None:
                    log_obj = math.log(c["objective"]) if c.get("objective") else -math.inf
                comps.append(
                    ComponentFit(
                        np.asarray(c["weight"], dtype=float),
                        delta if isinstance(delta, str) else float(delta),
                        float(c["coef"]),
                        float(c["score_sd"]),
                        float(log_obj),
                    )
                )
            return FCRModel(alpha=float(d["alpha"]), components=tuple(comps), **common)
        if kind in ("FPCR", "FPLS"):
            comps = d.get("components", [])
            weights = np.array([c["weight"] for c in comps], dtype=float).reshape(len(comps), grid.m)
            coefs = np.array([c["coef"] for c in comps], dtype=float)
            return BaselineModel(kind=kind, p=int(d["p"]), weights=weights, coefs=coefs, **common)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed model JSON: {exc}") from exc
    raise DataFormatError(f"unknown model kind {d.get('kind')!r}")


def model_to_json(model) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def save_model(path: PathLike, model) -> None:
    atomic_write_text(path, model_to_json(model))


def load_model(path: PathLike):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    return model_from_dict(d)


# ---------------------------------------------------------------------------
# generative models


def gm_to_dict(gm: GenerativeModel) -> dict:
    d = {
        "grid_points": gm.grid.points.tolist(),
        "mean": gm.mean.tolist(),
        "eigen": [
            {"lambda": float(lam), "curve": phi.tolist()}
            for lam, phi in zip(gm.eigenvalues, gm.eigenfunctions)
        ],
        "beta_true": gm.beta_true.tolist(),
    }
    if gm.sigma is not None:
        d["sigma"] = float(gm.sigma)
    if gm.snr is not None:
        d["snr"] = float(gm.snr)
    return d


def gm_from_dict(d: dict) -> GenerativeModel:
    try:
        return GenerativeModel(
            grid=Grid(d["grid_points"]),
            mean=np.asarray(d["mean"], dtype=float),
            eigenvalues=np.array([e["lambda"] for e in d["eigen"]], dtype=float),
            eigenfunctions=np.array([e["curve"] for e in d["eigen"]], dtype=float),
            beta_true=np.asarray(d["beta_true"], dtype=float),
            sigma=d.get("sigma"),
            snr=d.get("snr"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed generative model JSON: {exc}") from exc


def save_gm(path: PathLike, gm: GenerativeModel) -> None:
    atomic_write_text(path, json.dumps(gm_to_dict(gm), indent=1) + "\n")


def load_gm(path: Optional[PathLike] = None) -> GenerativeModel:
    """Load a generative model; without a path, the bundled surrogate model."""
    if path is None:
        text = resources.files("fcr").joinpath("data/default_gm.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return gm_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
