"""Maximum-likelihood estimation of the inflated hurdle model.

The likelihood separates into two independent pieces that are maximized
one after the other:

- a Bernoulli/logit component for the indicator ``y > 0`` over all rows;
- the positive-count component over rows with ``y > 0``, combining the
  spike mixture and the zero-truncated NB2 with log links for the location
  and dispersion parameters and a multinomial logit for the mixture
  weights.

Both components have analytic gradients. Maximization uses BFGS with an
Armijo backtracking line search; the parameter covariance is the inverse
observed information, obtained by central-differencing the analytic
gradient at the optimum, one block per likelihood component.

Linear predictors are clipped (log-location to +-30, log-dispersion to
[log(1e-8), 30]) so the objective stays finite for every finite parameter
vector; clipped dispersion evaluations are counted in the fit diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, expit, gammaln

from .distributions import THETA_FLOOR, InflatedValues
from .model_spec import (
    CategoricalMeta,
    COMPONENTS,
    DataError,
    Dataset,
    DesignMatrices,
    ModelSpec,
    build_design,
    model_config_from_dict,
    validate_inflated,
)

__all__ = [
    "FIT_SCHEMA_VERSION",
    "FitOptions",
    "FitResult",
    "OptimResult",
    "ConvergenceReport",
    "ParameterLayout",
    "information_criteria",
    "loglik_binary",
    "gradient_binary",
    "loglik_positive",
    "gradient_positive",
    "starting_values",
    "fit_model",
]

FIT_SCHEMA_VERSION = 1

_ETA_BOUND = 30.0
_LOG_THETA_FLOOR = math.log(THETA_FLOOR)


def information_criteria(loglik: float, n_params: int, n_total: int) -> tuple[float, float]:
    """AIC and BIC from a maximized log-likelihood: (-2L + 2k, -2L + k ln n)."""
    if n_total < 1:
        raise ValueError("n_total must be >= 1")
    aic = -2.0 * loglik + 2.0 * n_params
    bic = -2.0 * loglik + n_params * math.log(n_total)
    return aic, bic


# ---------------------------------------------------------------------------
# parameter packing


@dataclass(frozen=True)
class ParameterLayout:
    """Offsets of the coefficient blocks inside the flat parameter vector.

    Order: hurdle (k0), location (k1), dispersion (k2), then one mixing
    block of k3 entries per spike, in spike order.
    """

    n_hurdle: int
    n_location: int
    n_dispersion: int
    n_mixing_terms: int
    n_spikes: int

    @property
    def size(self) -> int:
        return (
            self.n_hurdle
            + self.n_location
            + self.n_dispersion
            + self.n_spikes * self.n_mixing_terms
        )

    @property
    def hurdle_slice(self) -> slice:
        return slice(0, self.n_hurdle)

    @property
    def location_slice(self) -> slice:
        return slice(self.n_hurdle, self.n_hurdle + self.n_location)

    @property
    def dispersion_slice(self) -> slice:
        start = self.n_hurdle + self.n_location
        return slice(start, start + self.n_dispersion)

    @property
    def mixing_slice(self) -> slice:
        start = self.n_hurdle + self.n_location + self.n_dispersion
        return slice(start, self.size)

    def pack(self, beta_hurdle, beta_location, beta_dispersion, gamma) -> np.ndarray:
        gamma = np.asarray(gamma, dtype=float).reshape(self.n_spikes, self.n_mixing_terms)
        out = np.concatenate(
            [
                np.asarray(beta_hurdle, dtype=float),
                np.asarray(beta_location, dtype=float),
                np.asarray(beta_dispersion, dtype=float),
                gamma.ravel(),
            ]
        )
        if out.shape[0] != self.size:
            raise ValueError(f"packed vector has length {out.shape[0]}, expected {self.size}")
        return out

    def unpack(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape[0] != self.size:
            raise ValueError(f"flat vector has length {flat.shape[0]}, expected {self.size}")
        gamma = flat[self.mixing_slice].reshape(self.n_spikes, self.n_mixing_terms)
        return (
            flat[self.hurdle_slice],
            flat[self.location_slice],
            flat[self.dispersion_slice],
            gamma,
        )

    def names(self, design: DesignMatrices, inflated: InflatedValues) -> list[str]:
        out = [f"hurdle:{c}" for c in design.hurdle_names]
        out += [f"location:{c}" for c in design.location_names]
        out += [f"dispersion:{c}" for c in design.dispersion_names]
        for v in inflated:
            out += [f"spike[{v}]:{c}" for c in design.mixing_names]
        return out


def layout_for(design: DesignMatrices, inflated: InflatedValues) -> ParameterLayout:
    n_spikes = len(inflated)
    return ParameterLayout(
        n_hurdle=design.hurdle.shape[1],
        n_location=design.location.shape[1],
        n_dispersion=design.dispersion.shape[1],
        n_mixing_terms=design.mixing.shape[1] if n_spikes else 0,
        n_spikes=n_spikes,
    )


# ---------------------------------------------------------------------------
# binary component


def loglik_binary(beta, X, positive) -> float:
    """Bernoulli log-likelihood of the indicator y > 0 under a logit link."""
    eta = X @ np.asarray(beta, dtype=float)
    d = np.asarray(positive, dtype=float)
    return float(np.sum(d * eta - np.logaddexp(0.0, eta)))


def gradient_binary(beta, X, positive) -> np.ndarray:
    """Score of the binary component: X'(d - sigmoid(X beta))."""
    eta = X @ np.asarray(beta, dtype=float)
    d = np.asarray(positive, dtype=float)
    return X.T @ (d - expit(eta))


def _binary_value_and_grad(X, positive):
    d = np.asarray(positive, dtype=float)

    def value_and_grad(beta):
        eta = X @ beta
        ll = float(np.sum(d * eta - np.logaddexp(0.0, eta)))
        return ll, X.T @ (d - expit(eta))

    return value_and_grad


# ---------------------------------------------------------------------------
# positive component


class _PositiveComponent:
    """Log-likelihood and gradient of the positive-count component.

    Operates on the rows with y > 0 only. Instances track how many
    dispersion evaluations hit the floor clamp.
    """

    def __init__(self, y_pos, Z1, Z2, Z3, inflated: InflatedValues):
        self.y = np.asarray(y_pos, dtype=float)
        if self.y.size and self.y.min() < 1:
            raise ValueError("positive component requires y >= 1 rows only")
        self.Z1, self.Z2, self.Z3 = Z1, Z2, Z3
        self.inflated = inflated
        self.n_spikes = len(inflated)
        self.k1 = Z1.shape[1]
        self.k2 = Z2.shape[1]
        self.k3 = Z3.shape[1] if self.n_spikes else 0
        self.size = self.k1 + self.k2 + self.n_spikes * self.k3
        self.spike_idx = inflated.spike_index(self.y.astype(int))
        self.spike_rows = [np.nonzero(self.spike_idx == j)[0] for j in range(self.n_spikes)]
        self.n_theta_clamped = 0

    def split(self, params):
        b1 = params[: self.k1]
        b2 = params[self.k1 : self.k1 + self.k2]
        gamma = params[self.k1 + self.k2 :].reshape(self.n_spikes, self.k3)
        return b1, b2, gamma

    def value_and_grad(self, params):
        b1, b2, gamma = self.split(params)
        eta1_raw = self.Z1 @ b1
        eta2_raw = self.Z2 @ b2
        eta1 = np.clip(eta1_raw, -_ETA_BOUND, _ETA_BOUND)
        eta2 = np.clip(eta2_raw, _LOG_THETA_FLOOR, _ETA_BOUND)
        self.n_theta_clamped += int(np.sum(eta2_raw < _LOG_THETA_FLOOR))
        active1 = (eta1_raw > -_ETA_BOUND) & (eta1_raw < _ETA_BOUND)
        active2 = (eta2_raw > _LOG_THETA_FLOOR) & (eta2_raw < _ETA_BOUND)
        mu = np.exp(eta1)
        theta = np.exp(eta2)
        y = self.y

        log_total = np.log(theta + mu)
        a = theta * np.log1p(mu / theta)
        with np.errstate(divide="ignore"):
            log1m = np.where(
                a < math.log(2.0), np.log(-np.expm1(-a)), np.log1p(-np.exp(-a))
            )
        logf = (
            gammaln(theta + y)
            - gammaln(theta)
            - gammaln(y + 1.0)
            + theta * (eta2 - log_total)
            + y * (eta1 - log_total)
        )
        logT = logf - log1m

        if self.n_spikes:
            scores = self.Z3 @ gamma.T  # (n, M-1)
            lse = np.logaddexp.reduce(
                np.concatenate([scores, np.zeros((scores.shape[0], 1))], axis=1), axis=1
            )
            log_p = scores - lse[:, None]
            log_pM = -lse
            ll_rows = log_pM + logT
            for j, rows in enumerate(self.spike_rows):
                if rows.size:
                    ll_rows[rows] = np.logaddexp(log_p[rows, j], ll_rows[rows])
            ll = float(np.sum(ll_rows))
            # posterior probability of the truncated-NB regime per row
            w = np.exp(log_pM + logT - ll_rows)
        else:
            ll_rows = logT
            ll = float(np.sum(logT))
            w = np.ones_like(logT)

        with np.errstate(over="ignore"):
            inv_expm1_a = 1.0 / np.expm1(a)
        dlogT_dmu = y / mu - (theta + y) / (theta + mu) - theta / (theta + mu) * inv_expm1_a
        dlogf0_dtheta = (eta2 - log_total) + mu / (theta + mu)
        dlogT_dtheta = (
            digamma(theta + y)
            - digamma(theta)
            + (eta2 - log_total)
            + 1.0
            - (theta + y) / (theta + mu)
            + dlogf0_dtheta * inv_expm1_a
        )
        g1 = self.Z1.T @ (w * dlogT_dmu * mu * active1)
        g2 = self.Z2.T @ (w * dlogT_dtheta * theta * active2)
        if self.n_spikes:
            resid = -np.exp(log_p)  # d ll_i / d score_j = u_ij - p_ij
            for j, rows in enumerate(self.spike_rows):
                if rows.size:
                    resid[rows, j] += np.exp(log_p[rows, j] - ll_rows[rows])
            ggamma = (self.Z3.T @ resid).T.ravel()
        else:
            ggamma = np.zeros(0)
        return ll, np.concatenate([g1, g2, ggamma])


def loglik_positive(beta_location, beta_dispersion, gamma, Z1, Z2, Z3, y_pos, inflated):
    """Positive-component log-likelihood at the given coefficient blocks."""
    inflated = inflated if isinstance(inflated, InflatedValues) else InflatedValues(tuple(inflated))
    comp = _PositiveComponent(y_pos, Z1, Z2, Z3, inflated)
    gamma = np.zeros((0, 0)) if gamma is None else np.asarray(gamma, dtype=float)
    params = np.concatenate(
        [np.asarray(beta_location, float), np.asarray(beta_dispersion, float), gamma.ravel()]
    )
    ll, _ = comp.value_and_grad(params)
    return ll


def gradient_positive(beta_location, beta_dispersion, gamma, Z1, Z2, Z3, y_pos, inflated):
    """Gradient of :func:`loglik_positive` in (location, dispersion, mixing) order."""
    inflated = inflated if isinstance(inflated, InflatedValues) else InflatedValues(tuple(inflated))
    comp = _PositiveComponent(y_pos, Z1, Z2, Z3, inflated)
    gamma = np.zeros((0, 0)) if gamma is None else np.asarray(gamma, dtype=float)
    params = np.concatenate(
        [np.asarray(beta_location, float), np.asarray(beta_dispersion, float), gamma.ravel()]
    )
    _, g = comp.value_and_grad(params)
    return g


# ---------------------------------------------------------------------------
# BFGS with Armijo backtracking


@dataclass
class OptimResult:
    params: np.ndarray
    loglik: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str
    loglik_trace: list[float]

    @property
    def grad_max_norm(self) -> float:
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def maximize_bfgs(
    value_and_grad,
    x0,
    *,
    max_iter: int = 500,
    tol_grad: float = 1e-6,
    tol_loglik: float = 1e-9,
    frozen: np.ndarray | None = None,
) -> OptimResult:
    """Maximize a smooth objective with BFGS and Armijo backtracking.

    ``value_and_grad(x)`` returns the objective and its gradient. Stops when
    the gradient max-norm over free coordinates drops below ``tol_grad`` or
    an accepted step changes the objective by less than ``tol_loglik``
    relative. ``frozen`` marks coordinates held fixed at their start value.
    """
    x = np.array(x0, dtype=float)
    free = np.ones(x.size, dtype=bool) if frozen is None else ~np.asarray(frozen, bool)
    n_free = int(free.sum())
    f, g = value_and_grad(x)
    trace = [f]
    if n_free == 0:
        return OptimResult(x, f, np.zeros_like(x), True, 0, "no free parameters", trace)
    B = np.eye(n_free)  # inverse-Hessian approximation of the negated objective
    converged = False
    message = "maximum iterations reached"
    iterations = 0
    for it in range(1, max_iter + 1):
        gf = g[free]
        if np.max(np.abs(gf)) <= tol_grad:
            converged = True
            message = "gradient max-norm below tolerance"
            break
        iterations = it
        d = B @ gf  # ascent direction
        if d @ gf <= 0.0:
            B = np.eye(n_free)
            d = gf.copy()
        slope = d @ gf
        alpha = 1.0
        accepted = False
        while alpha >= 1e-15:
            x_new = x.copy()
            x_new[free] += alpha * d
            f_new, g_new = value_and_grad(x_new)
            if np.isfinite(f_new) and f_new >= f + 1e-4 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = "line search failed to find an uphill step"
            converged = np.max(np.abs(gf)) <= tol_grad
            break
        s = alpha * d
        yk = g[free] - g_new[free]  # curvature pair of the negated objective
        small_change = abs(f_new - f) <= tol_loglik * (1.0 + abs(f))
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        sy = s @ yk
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yk):
            if it == 1:
                B = np.eye(n_free) * (sy / (yk @ yk))
            By = B @ yk
            B = (
                B
                + ((sy + yk @ By) / sy**2) * np.outer(s, s)
                - (np.outer(By, s) + np.outer(s, By)) / sy
            )
        if small_change:
            converged = True
            message = "log-likelihood change below tolerance"
            break
    else:
        iterations = max_iter
    grad_full = np.where(free, g, 0.0)
    return OptimResult(x, f, grad_full, converged, iterations, message, trace)


# ---------------------------------------------------------------------------
# covariance


def observed_information(grad_fn, params, step: float) -> np.ndarray:
    """Negative Hessian at ``params`` via central differences of the gradient."""
    k = params.size
    H = np.empty((k, k))
    for j in range(k):
        h = step * (1.0 + abs(params[j]))
        up = params.copy()
        up[j] += h
        down = params.copy()
        down[j] -= h
        H[:, j] = (grad_fn(up) - grad_fn(down)) / (2.0 * h)
    H = 0.5 * (H + H.T)
    return -H


def _invert_information(info):
    if not np.all(np.isfinite(info)):
        return None, "observed information contains non-finite entries"
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        return None, "observed information is singular"
    eigmin = float(np.linalg.eigvalsh(0.5 * (cov + cov.T)).min())
    if eigmin < -1e-8 * max(1.0, float(np.abs(cov).max())):
        return None, "inverse information is not positive semi-definite"
    return 0.5 * (cov + cov.T), None


# ---------------------------------------------------------------------------
# options, result containers


@dataclass
class FitOptions:
    max_iter: int = 500
    tol_grad: float = 1e-6
    tol_loglik: float = 1e-9
    hessian_step: float = 1e-5
    compute_covariance: bool = True
    min_spike_count: int = 10
    gamma_bound: float = 20.0


@dataclass
class OptimSummary:
    converged: bool
    iterations: int
    grad_max_norm: float
    message: str
    loglik_trace: list[float]

    @classmethod
    def from_result(cls, res: OptimResult) -> "OptimSummary":
        return cls(res.converged, res.iterations, res.grad_max_norm, res.message, list(res.loglik_trace))

    def to_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_max_norm": self.grad_max_norm,
            "message": self.message,
            "loglik_trace": self.loglik_trace,
        }


@dataclass
class ConvergenceReport:
    converged: bool
    binary: OptimSummary
    positive: OptimSummary
    n_theta_clamped: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "converged": self.converged,
            "binary": self.binary.to_dict(),
            "positive": self.positive.to_dict(),
            "n_theta_clamped": self.n_theta_clamped,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            converged=d["converged"],
            binary=OptimSummary(**d["binary"]),
            positive=OptimSummary(**d["positive"]),
            n_theta_clamped=d.get("n_theta_clamped", 0),
            warnings=list(d.get("warnings", ())),
        )


@dataclass
class FitResult:
    """Everything produced by a fit: estimates, covariance, fit statistics,
    convergence diagnostics, and the frozen encodings needed to predict."""

    spec: ModelSpec
    layout: ParameterLayout
    params: np.ndarray
    param_names: list[str]
    covariance: np.ndarray | None
    covariance_message: str | None
    loglik_binary: float
    loglik_positive: float
    n_total: int
    n_positive: int
    convergence: ConvergenceReport
    transforms: dict[str, tuple[float, float]]
    categorical_meta: dict[str, CategoricalMeta]
    design_columns: dict[str, list[str]]

    @property
    def loglik_total(self) -> float:
        return self.loglik_binary + self.loglik_positive

    @property
    def n_params(self) -> int:
        return self.layout.size

    @property
    def aic(self) -> float:
        return information_criteria(self.loglik_total, self.n_params, self.n_total)[0]

    @property
    def bic(self) -> float:
        return information_criteria(self.loglik_total, self.n_params, self.n_total)[1]

    @property
    def converged(self) -> bool:
        return self.convergence.converged

    def block(self, component: str) -> np.ndarray:
        sl = getattr(self.layout, f"{component}_slice")
        return self.params[sl]

    def gamma_matrix(self) -> np.ndarray:
        return self.params[self.layout.mixing_slice].reshape(
            self.layout.n_spikes, self.layout.n_mixing_terms
        )

    def standard_errors(self) -> np.ndarray | None:
        if self.covariance is None:
            return None
        return np.sqrt(np.maximum(np.diag(self.covariance), 0.0))

    def coefficients(self) -> list[dict]:
        se = self.standard_errors()
        return [
            {
                "name": name,
                "estimate": float(est),
                "se": None if se is None else float(se[i]),
            }
            for i, (name, est) in enumerate(zip(self.param_names, self.params))
        ]

    def design_for(self, data: Dataset, *, check_rank: bool = False) -> DesignMatrices:
        """Rebuild design matrices for new data with the frozen encodings."""
        return build_design(
            self.spec,
            data,
            transforms=self.transforms,
            categorical_meta=self.categorical_meta,
            check_rank=check_rank,
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": FIT_SCHEMA_VERSION,
            "spec": self.spec.to_config_dict(),
            "layout": {
                "n_hurdle": self.layout.n_hurdle,
                "n_location": self.layout.n_location,
                "n_dispersion": self.layout.n_dispersion,
                "n_mixing_terms": self.layout.n_mixing_terms,
                "n_spikes": self.layout.n_spikes,
            },
            "coefficients": self.coefficients(),
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "covariance_message": self.covariance_message,
            "loglik": {
                "binary": self.loglik_binary,
                "positive": self.loglik_positive,
                "total": self.loglik_total,
            },
            "n_total": self.n_total,
            "n_positive": self.n_positive,
            "n_params": self.n_params,
            "aic": self.aic,
            "bic": self.bic,
            "convergence": self.convergence.to_dict(),
            "transforms": {k: {"mean": m, "sd": s} for k, (m, s) in self.transforms.items()},
            "categorical": {
                k: {"levels": list(m.levels), "reference": m.reference}
                for k, m in self.categorical_meta.items()
            },
            "design_columns": {k: list(v) for k, v in self.design_columns.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        if d.get("schema_version") != FIT_SCHEMA_VERSION:
            raise DataError(
                f"unsupported fit schema version {d.get('schema_version')!r}"
            )
        spec = model_config_from_dict(d["spec"])
        layout = ParameterLayout(**d["layout"])
        params = np.array([c["estimate"] for c in d["coefficients"]], dtype=float)
        cov = d.get("covariance")
        return cls(
            spec=spec,
            layout=layout,
            params=params,
            param_names=[c["name"] for c in d["coefficients"]],
            covariance=None if cov is None else np.asarray(cov, dtype=float),
            covariance_message=d.get("covariance_message"),
            loglik_binary=d["loglik"]["binary"],
            loglik_positive=d["loglik"]["positive"],
            n_total=d["n_total"],
            n_positive=d["n_positive"],
            convergence=ConvergenceReport.from_dict(d["convergence"]),
            transforms={k: (v["mean"], v["sd"]) for k, v in d.get("transforms", {}).items()},
            categorical_meta={
                k: CategoricalMeta(tuple(v["levels"]), v["reference"])
                for k, v in d.get("categorical", {}).items()
            },
            design_columns={k: list(v) for k, v in d.get("design_columns", {}).items()},
        )

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# starting values and fitting


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def starting_values(spec: ModelSpec, data: Dataset, design: DesignMatrices) -> np.ndarray:
    """Moment-based starting point.

    Hurdle intercept at the sample log-odds of a positive response; location
    intercept at the log mean of the positives; dispersion zero (theta = 1);
    each spike intercept at the log relative frequency of its value against
    the non-inflated positives, with frequencies floored at 1/(2 n_positive).
    All slopes start at zero.
    """
    layout = layout_for(design, spec.inflated)
    y = data.response_values()
    n = y.size
    n_pos = int(np.sum(y > 0))
    params = np.zeros(layout.size)

    if "intercept" in design.hurdle_names:
        share = n_pos / n if n else 0.5
        share = min(max(share, 1.0 / (2 * max(n, 1))), 1.0 - 1.0 / (2 * max(n, 1)))
        params[design.hurdle_names.index("intercept")] = _logit(share)
    if n_pos and "intercept" in design.location_names:
        idx = layout.n_hurdle + design.location_names.index("intercept")
        params[idx] = math.log(float(np.mean(y[y > 0])))
    if layout.n_spikes and "intercept" in design.mixing_names:
        pos = y[y > 0]
        floor = 1.0 / (2.0 * max(n_pos, 1))
        spike_freqs = np.array(
            [max(np.sum(pos == v) / n_pos, floor) for v in spec.inflated]
        )
        rest = max(1.0 - spike_freqs.sum(), floor)
        icol = design.mixing_names.index("intercept")
        base = layout.n_hurdle + layout.n_location + layout.n_dispersion
        for j in range(layout.n_spikes):
            params[base + j * layout.n_mixing_terms + icol] = math.log(spike_freqs[j] / rest)
    return params


def _gamma_intercept_indices(layout: ParameterLayout, mixing_names) -> list[int]:
    if layout.n_spikes == 0 or "intercept" not in mixing_names:
        return []
    icol = mixing_names.index("intercept")
    offset = layout.n_hurdle + layout.n_location + layout.n_dispersion
    return [offset + j * layout.n_mixing_terms + icol for j in range(layout.n_spikes)]


def fit_binary(X, positive, start, options: FitOptions) -> OptimResult:
    """Maximize the binary component alone."""
    return maximize_bfgs(
        _binary_value_and_grad(X, positive),
        start,
        max_iter=options.max_iter,
        tol_grad=options.tol_grad,
        tol_loglik=options.tol_loglik,
    )


def fit_model(
    spec: ModelSpec,
    data: Dataset,
    options: FitOptions | None = None,
    *,
    binary_result: OptimResult | None = None,
) -> FitResult:
    """Fit the full hurdle model by maximizing its two components in turn.

    Always returns a FitResult; non-convergence is reported on the
    convergence field rather than raised. The parameter covariance is
    block-diagonal across the two components (their likelihoods share no
    parameters). ``binary_result`` lets callers that fit many positive-part
    variants against an identical hurdle matrix reuse one binary fit.
    """
    options = options or FitOptions()
    y = data.response_values()
    n_pos = int(np.sum(y > 0))
    if n_pos == 0:
        raise DataError("no positive responses; the positive component cannot be fitted")
    design = build_design(spec, data)
    layout = layout_for(design, spec.inflated)
    mask = design.positive_mask
    warnings = []
    if len(spec.inflated):
        report = validate_inflated(spec.inflated, data, min_count=options.min_spike_count)
        warnings.extend(report.warnings)

    start = starting_values(spec, data, design)
    positive_ind = (y > 0).astype(float)

    if binary_result is None:
        binary_res = fit_binary(design.hurdle, positive_ind, start[layout.hurdle_slice], options)
    else:
        if binary_result.params.shape[0] != layout.n_hurdle:
            raise ValueError("supplied binary result does not match the hurdle design")
        binary_res = binary_result

    comp = _PositiveComponent(
        y[mask], design.location[mask], design.dispersion[mask], design.mixing[mask], spec.inflated
    )
    pos_start = start[layout.n_hurdle :]
    pos_res = maximize_bfgs(
        comp.value_and_grad,
        pos_start,
        max_iter=options.max_iter,
        tol_grad=options.tol_grad,
        tol_loglik=options.tol_loglik,
    )

    # weakly identified spikes: freeze runaway mixing intercepts at the bound
    gamma_idx = [i - layout.n_hurdle for i in _gamma_intercept_indices(layout, design.mixing_names)]
    runaway = [i for i in gamma_idx if abs(pos_res.params[i]) > options.gamma_bound]
    if runaway:
        clamped = pos_res.params.copy()
        frozen = np.zeros(clamped.size, dtype=bool)
        for i in runaway:
            clamped[i] = math.copysign(options.gamma_bound, clamped[i])
            frozen[i] = True
        warnings.append(
            f"{len(runaway)} mixing intercept(s) exceeded +-{options.gamma_bound}; "
            f"frozen at the bound and the rest refitted"
        )
        pos_res = maximize_bfgs(
            comp.value_and_grad,
            clamped,
            max_iter=options.max_iter,
            tol_grad=options.tol_grad,
            tol_loglik=options.tol_loglik,
            frozen=frozen,
        )

    params = np.concatenate([binary_res.params, pos_res.params])

    covariance = None
    cov_message = None
    if options.compute_covariance:
        info_b = observed_information(
            lambda b: gradient_binary(b, design.hurdle, positive_ind),
            binary_res.params,
            options.hessian_step,
        )
        info_p = observed_information(
            lambda p: comp.value_and_grad(p)[1], pos_res.params, options.hessian_step
        )
        cov_b, msg_b = _invert_information(info_b)
        cov_p, msg_p = _invert_information(info_p)
        if cov_b is None or cov_p is None:
            cov_message = "; ".join(m for m in (msg_b, msg_p) if m)
        else:
            covariance = np.zeros((layout.size, layout.size))
            covariance[: layout.n_hurdle, : layout.n_hurdle] = cov_b
            covariance[layout.n_hurdle :, layout.n_hurdle :] = cov_p

    report = ConvergenceReport(
        converged=bool(binary_res.converged and pos_res.converged),
        binary=OptimSummary.from_result(binary_res),
        positive=OptimSummary.from_result(pos_res),
        n_theta_clamped=comp.n_theta_clamped,
        warnings=warnings,
    )
    return FitResult(
        spec=spec,
        layout=layout,
        params=params,
        param_names=layout.names(design, spec.inflated),
        covariance=covariance,
        covariance_message=cov_message,
        loglik_binary=binary_res.loglik,
        loglik_positive=pos_res.loglik,
        n_total=int(y.size),
        n_positive=n_pos,
        convergence=report,
        transforms=design.transforms,
        categorical_meta=design.categorical_meta,
        design_columns={c: design.names(c) for c in COMPONENTS},
    )
