"""scikit-learn style estimator wrapping the hurdle model machinery.

The estimator carries the model declaration (term lists, inflated values)
and the fit options as constructor parameters, so it clones and grid-
searches like any other scikit-learn estimator; ``fit`` accepts a pandas
DataFrame (or a mapping of named columns, or a :class:`Dataset`) plus a
count vector, and fitted state lives in ``result_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .estimation import FitOptions, FitResult, fit_model
from .inference import PredictionTable, predict
from .model_spec import CategoricalMeta, DataError, Dataset, ModelSpec
from .simulation import REGIME_COLUMN

__all__ = ["InflatedHurdleRegressor"]

_RESPONSE = "y"


def _dataset_from_columns(columns, y=None) -> Dataset:
    """Build a Dataset from named columns, plus a count response if given."""
    cols = {}
    categorical = {}
    for name, values in columns.items():
        name = str(name)
        arr = np.asarray(values)
        if np.issubdtype(arr.dtype, np.number) or arr.dtype == bool:
            cols[name] = arr.astype(float)
        else:
            labels = arr.astype(str)
            levels = tuple(sorted(set(labels)))
            categorical[name] = CategoricalMeta(levels, levels[0])
            cols[name] = labels
    if y is None:
        return Dataset(cols, categorical=categorical, response=None)
    if _RESPONSE in cols:
        raise DataError(
            f"covariate column {_RESPONSE!r} collides with the response name; rename it"
        )
    cols[_RESPONSE] = np.asarray(y)
    return Dataset(cols, categorical=categorical, response=_RESPONSE)


class InflatedHurdleRegressor(BaseEstimator):
    """Hurdle regression for counts with extra mass at chosen values.

    A logit model drives the zero/positive outcome; positive counts follow
    a mixture of point masses at ``inflated`` values and a zero-truncated
    NB2, with the location, dispersion, and mixture weights all driven by
    covariates through log and multinomial-logit links.

    Parameters
    ----------
    hurdle, location : sequence of str, optional
        Term lists for the participation and location models (grammar:
        ``name``, ``name^k``, ``scale(name)``, ``name(ref="level")``).
        Default: every covariate column as a main effect.
    dispersion, mixing : sequence of str, optional
        Term lists for the dispersion and mixture-weight models.
        Default: intercept only.
    inflated : sequence of int
        The inflated values; empty for a plain truncated-NB hurdle.
    max_iter, tol_grad, tol_loglik, hessian_step, compute_covariance,
    min_spike_count, gamma_bound :
        Fitting controls; see :class:`FitOptions`.

    Attributes
    ----------
    result_ : FitResult
        Estimates, covariance, fit statistics, convergence report.
    """

    def __init__(
        self,
        hurdle=None,
        location=None,
        dispersion=None,
        mixing=None,
        inflated=(),
        max_iter=500,
        tol_grad=1e-6,
        tol_loglik=1e-9,
        hessian_step=1e-5,
        compute_covariance=True,
        min_spike_count=10,
        gamma_bound=20.0,
    ):
        self.hurdle = hurdle
        self.location = location
        self.dispersion = dispersion
        self.mixing = mixing
        self.inflated = inflated
        self.max_iter = max_iter
        self.tol_grad = tol_grad
        self.tol_loglik = tol_loglik
        self.hessian_step = hessian_step
        self.compute_covariance = compute_covariance
        self.min_spike_count = min_spike_count
        self.gamma_bound = gamma_bound

    # -- plumbing ----------------------------------------------------------

    def _options(self) -> FitOptions:
        return FitOptions(
            max_iter=self.max_iter,
            tol_grad=self.tol_grad,
            tol_loglik=self.tol_loglik,
            hessian_step=self.hessian_step,
            compute_covariance=self.compute_covariance,
            min_spike_count=self.min_spike_count,
            gamma_bound=self.gamma_bound,
        )

    def _as_dataset(self, X, y=None, *, require_response=True) -> Dataset:
        if isinstance(X, Dataset):
            return X
        if hasattr(X, "columns") and hasattr(X, "__getitem__"):
            columns = {str(c): np.asarray(X[c]) for c in X.columns}
        elif isinstance(X, dict):
            columns = {str(c): np.asarray(v) for c, v in X.items()}
        else:
            raise DataError(
                "X must be a Dataset, a pandas DataFrame, or a mapping of named columns"
            )
        if y is None and require_response:
            raise DataError("y is required unless X is a Dataset with a response")
        return _dataset_from_columns(columns, y)

    def _spec_for(self, data: Dataset) -> ModelSpec:
        default_main = [
            c for c in data.names if c not in (data.response, REGIME_COLUMN)
        ]
        return ModelSpec(
            response=data.response,
            hurdle=tuple(self.hurdle) if self.hurdle is not None else tuple(default_main),
            location=tuple(self.location) if self.location is not None else tuple(default_main),
            dispersion=tuple(self.dispersion) if self.dispersion is not None else (),
            mixing=tuple(self.mixing) if self.mixing is not None else (),
            inflated=tuple(self.inflated),
        )

    def _fitted(self) -> FitResult:
        if not hasattr(self, "result_"):
            raise NotFittedError(
                "this InflatedHurdleRegressor is not fitted yet; call fit first"
            )
        return self.result_

    # -- estimator API -----------------------------------------------------

    def fit(self, X, y=None):
        """Fit both model components by maximum likelihood."""
        data = self._as_dataset(X, y)
        spec = self._spec_for(data)
        self.result_ = fit_model(spec, data, self._options())
        self.n_features_in_ = len(spec.used_columns())
        return self

    def predict(self, X) -> np.ndarray:
        """Expected count including the zeros: p_positive * mean_positive."""
        table = self.predict_table(X, compute_se=False)
        return table.mean_response

    def predict_participation(self, X) -> np.ndarray:
        """Probability of crossing the hurdle (a positive count)."""
        return self.predict_table(X, compute_se=False).p_positive

    def predict_positive_mean(self, X) -> np.ndarray:
        """Expected count conditional on being positive."""
        return self.predict_table(X, compute_se=False).mean_positive

    def predict_table(self, X, compute_se: bool = False) -> PredictionTable:
        """Full per-row prediction table; see :func:`inflated_hurdle.predict`."""
        fit = self._fitted()
        data = self._as_dataset(X, require_response=False)
        return predict(fit, data, compute_se=compute_se)

    # -- fitted conveniences -------------------------------------------------

    @property
    def loglik_(self) -> float:
        return self._fitted().loglik_total

    @property
    def aic_(self) -> float:
        return self._fitted().aic

    @property
    def bic_(self) -> float:
        return self._fitted().bic

    @property
    def converged_(self) -> bool:
        return self._fitted().converged

    def coefficients(self) -> list[dict]:
        """Name/estimate/standard-error rows for every parameter."""
        return self._fitted().coefficients()
