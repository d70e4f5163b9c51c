"""Prediction and delta-method inference for fitted hurdle models.

Per observation the fitted model yields the hurdle-crossing probability,
the mixture weights, the truncated-NB location and dispersion, and the
expected positive count

    mean_positive = sum_j p_j * v_j + p_M * tnb_mean(mu, theta).

Standard errors of smooth functions of the parameters come from the delta
method: sqrt(g' Sigma g) with g obtained by central differences over the
flat parameter vector (step 1e-6 * (1 + |param|)).

Predictive margins fix one or more covariates at each grid value for every
row (counterfactual averaging), average the predictions, and attach
delta-method standard errors; subgroup averaging over only the matching
rows is available as an alternative.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .distributions import InflatedValues, mixture_weights, tnb_mean
from .estimation import FitResult, _ETA_BOUND, _LOG_THETA_FLOOR
from .model_spec import DataError, Dataset, DesignMatrices

__all__ = [
    "PredictionTable",
    "MarginCell",
    "MarginTable",
    "predict",
    "delta_se",
    "predictive_margins",
]

_DELTA_STEP = 1e-6


@dataclass
class PredictionTable:
    """Per-row predictions; ``mixing`` columns are spikes first, TNB last."""

    p_positive: np.ndarray
    mixing: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    mean_positive: np.ndarray
    se_mean_positive: np.ndarray | None
    inflated: InflatedValues

    @property
    def n(self) -> int:
        return self.p_positive.shape[0]

    @property
    def mean_response(self) -> np.ndarray:
        """Unconditional expectation including the zeros."""
        return self.p_positive * self.mean_positive

    def header(self) -> list[str]:
        cols = ["p_positive", "mu", "theta"]
        cols += [f"p_spike_{v}" for v in self.inflated]
        cols += ["p_tnb", "mean_positive", "se_mean_positive"]
        return cols

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for i in range(self.n):
            row = [repr(float(self.p_positive[i])), repr(float(self.mu[i])), repr(float(self.theta[i]))]
            row += [repr(float(w)) for w in self.mixing[i]]
            row.append(repr(float(self.mean_positive[i])))
            row.append("" if self.se_mean_positive is None else repr(float(self.se_mean_positive[i])))
            writer.writerow(row)
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())


def _component_arrays(fit: FitResult, params: np.ndarray, design: DesignMatrices):
    """(p_positive, weights, mu, theta) at an arbitrary parameter vector."""
    b0, b1, b2, gamma = fit.layout.unpack(params)
    p_pos = expit(design.hurdle @ b0)
    mu = np.exp(np.clip(design.location @ b1, -_ETA_BOUND, _ETA_BOUND))
    theta = np.exp(np.clip(design.dispersion @ b2, _LOG_THETA_FLOOR, _ETA_BOUND))
    if fit.layout.n_spikes:
        weights = mixture_weights(design.mixing @ gamma.T)
    else:
        weights = np.ones((design.hurdle.shape[0], 1))
    return p_pos, weights, mu, theta


def _mean_positive(fit: FitResult, weights, mu, theta) -> np.ndarray:
    values = np.asarray(fit.spec.inflated.values, dtype=float)
    spike_part = weights[:, :-1] @ values if values.size else 0.0
    return spike_part + weights[:, -1] * tnb_mean(mu, theta)


def _fd_jacobian(target, params, step=_DELTA_STEP):
    """Central-difference Jacobian of a vector-valued function of params."""
    cols = []
    for j in range(params.size):
        h = step * (1.0 + abs(params[j]))
        up = params.copy()
        up[j] += h
        down = params.copy()
        down[j] -= h
        cols.append((np.atleast_1d(target(up)) - np.atleast_1d(target(down))) / (2.0 * h))
    return np.column_stack(cols)


def _require_covariance(fit: FitResult) -> np.ndarray:
    if fit.covariance is None:
        raise DataError(
            "parameter covariance unavailable"
            + (f": {fit.covariance_message}" if fit.covariance_message else "")
        )
    return fit.covariance


def delta_se(fit: FitResult, target) -> float:
    """Delta-method standard error of a scalar function of the parameters.

    ``target(params)`` must accept the flat parameter vector and return a
    scalar that is smooth at the estimates.
    """
    cov = _require_covariance(fit)
    g = _fd_jacobian(lambda p: float(target(p)), fit.params).ravel()
    return math.sqrt(max(float(g @ cov @ g), 0.0))


def _delta_se_rows(fit: FitResult, target_vec) -> np.ndarray:
    """Row-wise delta SEs for a vector-valued target of the parameters."""
    cov = _require_covariance(fit)
    G = _fd_jacobian(target_vec, fit.params)
    quad = np.einsum("ij,jk,ik->i", G, cov, G)
    return np.sqrt(np.maximum(quad, 0.0))


def predict(fit: FitResult, data: Dataset, *, compute_se: bool = True) -> PredictionTable:
    """Per-row predictions on new data with the fit-time encodings replayed.

    Unseen categorical levels raise :class:`DataError` naming the row and
    level. ``compute_se=False`` skips the delta-method standard errors of
    the positive mean.
    """
    design = fit.design_for(data)
    p_pos, weights, mu, theta = _component_arrays(fit, fit.params, design)
    mean_pos = _mean_positive(fit, weights, mu, theta)
    se = None
    if compute_se:

        def target(params):
            _, w, m, t = _component_arrays(fit, params, design)
            return _mean_positive(fit, w, m, t)

        se = _delta_se_rows(fit, target)
    return PredictionTable(
        p_positive=p_pos,
        mixing=weights,
        mu=mu,
        theta=theta,
        mean_positive=mean_pos,
        se_mean_positive=se,
        inflated=fit.spec.inflated,
    )


# ---------------------------------------------------------------------------
# predictive margins


@dataclass
class MarginCell:
    values: dict
    n_rows: int
    p_positive: float
    se_p_positive: float | None
    mean_positive: float
    se_mean_positive: float | None


@dataclass
class MarginTable:
    over: list[str]
    cells: list[MarginCell]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            self.over
            + ["n_rows", "margin_p_positive", "se_p_positive", "margin_mean_positive", "se_mean_positive"]
        )
        for cell in self.cells:
            row = []
            for name in self.over:
                v = cell.values[name]
                row.append(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v))
            row.append(str(cell.n_rows))
            row.append(repr(cell.p_positive))
            row.append("" if cell.se_p_positive is None else repr(cell.se_p_positive))
            row.append(repr(cell.mean_positive))
            row.append("" if cell.se_mean_positive is None else repr(cell.se_mean_positive))
            writer.writerow(row)
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())


def _grid_levels(fit: FitResult, data: Dataset, name: str):
    if name in fit.categorical_meta:
        return list(fit.categorical_meta[name].levels)
    if data.is_categorical(name):
        return list(data.categorical_meta(name).levels)
    return [float(v) for v in np.unique(data.numeric(name))]


def predictive_margins(
    fit: FitResult,
    data: Dataset,
    over,
    *,
    counterfactual: bool = True,
    compute_se: bool = True,
) -> MarginTable:
    """Average predictions over the sample at each grid value of ``over``.

    With ``counterfactual=True`` (the default) the ``over`` columns are set
    to the cell value for all rows before averaging; with False only the
    rows observed at the cell value are averaged.
    """
    over = [over] if isinstance(over, str) else list(over)
    for name in over:
        if name not in data:
            raise DataError(f"margin column {name!r} not in dataset")
    grids = [_grid_levels(fit, data, name) for name in over]
    cells = []
    for combo in itertools.product(*grids):
        assignments = dict(zip(over, combo))
        if counterfactual:
            cell_data = data.with_columns(
                **{name: np.full(data.n, value) for name, value in assignments.items()}
            )
            n_rows = data.n
        else:
            keep = np.ones(data.n, dtype=bool)
            for name, value in assignments.items():
                col = data.column(name)
                keep &= col.astype(str) == str(value) if data.is_categorical(name) else col == value
            n_rows = int(keep.sum())
            if n_rows == 0:
                cells.append(
                    MarginCell(assignments, 0, math.nan, None, math.nan, None)
                )
                continue
            cols = {name: data.column(name)[keep] for name in data.names}
            cell_data = Dataset(
                cols,
                categorical={
                    n: data.categorical_meta(n) for n in data.names if data.is_categorical(n)
                },
                response=data.response,
            )
        design = fit.design_for(cell_data)

        def averages(params):
            p_pos, w, m, t = _component_arrays(fit, params, design)
            return np.array([p_pos.mean(), _mean_positive(fit, w, m, t).mean()])

        avg = averages(fit.params)
        se_p = se_m = None
        if compute_se:
            cov = _require_covariance(fit)
            G = _fd_jacobian(averages, fit.params)
            quad = np.einsum("ij,jk,ik->i", G, cov, G)
            se_p, se_m = np.sqrt(np.maximum(quad, 0.0))
        cells.append(
            MarginCell(
                values=assignments,
                n_rows=n_rows,
                p_positive=float(avg[0]),
                se_p_positive=None if se_p is None else float(se_p),
                mean_positive=float(avg[1]),
                se_mean_positive=None if se_m is None else float(se_m),
            )
        )
    return MarginTable(over=over, cells=cells)
