"""Probability mass functions for the inflated hurdle count model.

Building blocks, from the bottom up:

- NB2 negative binomial with mean ``mu`` and scale ``theta`` (inverse
  dispersion), variance ``mu * (1 + mu / theta)``.
- Its zero-truncated version (``tnb_*``), the distribution of positive
  counts.
- A finite mixture of point masses at a set of inflated values plus the
  zero-truncated NB2 (``inflated_tnb_*``), with multinomial-logit mixture
  weights whose reference category is the truncated-NB regime.
- The hurdle composition that glues a zero probability to any positive-count
  pmf.

All pmf arithmetic runs in log space through ``gammaln`` so that counts and
means in the hundreds cannot overflow; values are exponentiated only at the
public API boundary. Everything here is a pure function of its inputs and is
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "THETA_FLOOR",
    "InflatedValues",
    "nb2_logpmf",
    "nb2_pmf",
    "tnb_logpmf",
    "tnb_pmf",
    "tnb_mean",
    "mixture_weights",
    "inflated_tnb_logpmf",
    "inflated_tnb_pmf",
    "hurdle_pmf",
]

# Dispersion clamp: optimizer excursions toward theta -> 0 must degrade
# gracefully instead of producing NaN.
THETA_FLOOR = 1e-8

# nb2_pmf(0) above this is treated as a degenerate truncation (mu ~ 0).
_MAX_ZERO_MASS = 1.0 - 1e-15


@dataclass(frozen=True)
class InflatedValues:
    """Set of positive counts that carry extra point mass.

    Parameters
    ----------
    values : tuple of int
        Strictly increasing counts >= 1. May be empty (no inflation) and
        need not be consecutive.
    """

    values: tuple[int, ...] = ()

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v < 1 for v in vals):
            raise ValueError(f"inflated values must be >= 1, got {vals}")
        if len(set(vals)) != len(vals):
            raise ValueError(f"inflated values must be distinct, got {vals}")
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ValueError(f"inflated values must be sorted ascending, got {vals}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def n_components(self) -> int:
        """Number of mixture components: one per value plus the TNB regime."""
        return len(self.values) + 1

    def spike_index(self, counts) -> np.ndarray:
        """Map each count to its spike position, or -1 if not inflated."""
        counts = np.asarray(counts)
        idx = np.full(counts.shape, -1, dtype=int)
        for j, v in enumerate(self.values):
            idx[counts == v] = j
        return idx


def _validate_params(mu, theta):
    mu = np.asarray(mu, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(theta))):
        raise ValueError("mu and theta must be finite")
    if np.any(mu <= 0.0) or np.any(theta <= 0.0):
        raise ValueError("mu and theta must be positive")
    return mu, np.maximum(theta, THETA_FLOOR)


def _log1mexp(a):
    """log(1 - exp(-a)) for a > 0, stable for both tiny and large a."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        small = np.log(-np.expm1(-a))
        large = np.log1p(-np.exp(-a))
    return np.where(a < np.log(2.0), small, large)


def _log_zero_surplus(mu, theta):
    """a = -log nb2_pmf(0) = theta * log1p(mu / theta), always > 0."""
    return theta * np.log1p(mu / theta)


def nb2_logpmf(k, mu, theta):
    """Log pmf of the NB2 negative binomial.

    Parameters
    ----------
    k : int or array of int
        Counts, >= 0.
    mu : float or array
        Mean, > 0.
    theta : float or array
        Scale (inverse dispersion), > 0. Smaller theta means more
        overdispersion; the variance is ``mu * (1 + mu / theta)`` and the
        zero probability is ``(1 + mu / theta) ** -theta``.

    Returns
    -------
    float or ndarray
        log Pr(Y = k), broadcast over the inputs.
    """
    mu, theta = _validate_params(mu, theta)
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise ValueError("counts must be nonnegative integers")
    k = k.astype(float)
    log_denom = np.log(theta + mu)
    out = (
        gammaln(theta + k)
        - gammaln(theta)
        - gammaln(k + 1.0)
        + theta * (np.log(theta) - log_denom)
        + k * (np.log(mu) - log_denom)
    )
    return out if out.ndim else float(out)


def nb2_pmf(k, mu, theta):
    """Pmf of the NB2 negative binomial; see :func:`nb2_logpmf`."""
    out = np.exp(nb2_logpmf(k, mu, theta))
    return out if np.ndim(out) else float(out)


def _check_truncatable(mu, theta):
    a = _log_zero_surplus(mu, theta)
    if np.any(np.exp(-a) >= _MAX_ZERO_MASS):
        raise ValueError(
            "zero-truncated pmf is degenerate: Pr(Y=0) >= 1 - 1e-15 (mu is numerically zero)"
        )
    return a


def tnb_logpmf(k, mu, theta):
    """Log pmf of the zero-truncated NB2 on k >= 1.

    Equals ``nb2_logpmf(k) - log(1 - nb2_pmf(0))``; raises if the zero mass
    is numerically 1.
    """
    k = np.asarray(k)
    if np.any(k < 1):
        raise ValueError("zero-truncated counts must be >= 1")
    mu_a, theta_a = _validate_params(mu, theta)
    a = _check_truncatable(mu_a, theta_a)
    out = nb2_logpmf(k, mu, theta) - _log1mexp(a)
    return out if np.ndim(out) else float(out)


def tnb_pmf(k, mu, theta):
    """Pmf of the zero-truncated NB2; see :func:`tnb_logpmf`."""
    out = np.exp(tnb_logpmf(k, mu, theta))
    return out if np.ndim(out) else float(out)


def tnb_mean(mu, theta):
    """Mean of the zero-truncated NB2: ``mu / (1 - (1 + mu/theta)**-theta)``.

    Always >= max(1, mu): the truncation redistributes the zero mass upward.
    """
    mu_a, theta_a = _validate_params(mu, theta)
    a = _check_truncatable(mu_a, theta_a)
    out = mu_a / -np.expm1(-a)
    return out if np.ndim(out) else float(out)


def mixture_weights(scores):
    """Mixture weights from multinomial-logit scores.

    Parameters
    ----------
    scores : array, shape (M-1,) or (n, M-1)
        Linear predictors of the spike components relative to the
        truncated-NB reference regime.

    Returns
    -------
    ndarray, shape (M,) or (n, M)
        Strictly positive weights summing to 1; the last entry is the
        truncated-NB regime weight.
    """
    scores = np.asarray(scores, dtype=float)
    one_row = scores.ndim == 1
    scores2 = np.atleast_2d(scores)
    logits = np.concatenate([scores2, np.zeros((scores2.shape[0], 1))], axis=1)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    return w[0] if one_row else w


def inflated_tnb_logpmf(k, weights, mu, theta, inflated: InflatedValues):
    """Log pmf of the spike-inflated zero-truncated NB2 mixture.

    ``Pr(Y=k) = p_j + p_M * tnb_pmf(k)`` when ``k`` is the j-th inflated
    value and ``p_M * tnb_pmf(k)`` otherwise, with ``p_M`` the last entry
    of ``weights``.

    Parameters
    ----------
    k : int or array of int
        Positive counts.
    weights : array, shape (M,) or (n, M)
        Mixture weights aligned with ``inflated`` (spikes first, TNB last).
    mu, theta : float or array
        Truncated-NB parameters per observation.
    inflated : InflatedValues
        The spike locations.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    if weights.shape[-1] != inflated.n_components:
        raise ValueError(
            f"weights have {weights.shape[-1]} components, "
            f"expected {inflated.n_components} for {len(inflated)} inflated values"
        )
    scalar = (
        np.ndim(k) == 0
        and np.ndim(mu) == 0
        and np.ndim(theta) == 0
        and weights.shape[0] == 1
    )
    k_arr = np.atleast_1d(np.asarray(k))
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    n = max(k_arr.size, mu_arr.size, theta_arr.size, weights.shape[0])
    k_arr = np.broadcast_to(k_arr, (n,))
    weights = np.broadcast_to(weights, (n, weights.shape[-1]))
    base = np.log(weights[:, -1]) + tnb_logpmf(
        k_arr, np.broadcast_to(mu_arr, (n,)), np.broadcast_to(theta_arr, (n,))
    )
    out = np.array(base, dtype=float)
    idx = inflated.spike_index(k_arr)
    for j in range(len(inflated)):
        hit = idx == j
        if np.any(hit):
            out[hit] = np.logaddexp(np.log(weights[hit, j]), base[hit])
    return float(out[0]) if scalar else out


def inflated_tnb_pmf(k, weights, mu, theta, inflated: InflatedValues):
    """Pmf of the spike-inflated zero-truncated NB2 mixture."""
    out = np.exp(inflated_tnb_logpmf(k, weights, mu, theta, inflated))
    return out if np.ndim(out) else float(out)


def hurdle_pmf(k, p_zero, positive_pmf):
    """Hurdle composition of a zero probability and a positive-count pmf.

    Pr(0) = ``p_zero``; Pr(k) = ``(1 - p_zero) * positive_pmf(k)`` for
    k >= 1, where ``positive_pmf`` is any pmf on the positive integers.
    """
    if not np.all((0.0 <= np.asarray(p_zero)) & (np.asarray(p_zero) <= 1.0)):
        raise ValueError("p_zero must lie in [0, 1]")
    k_arr = np.atleast_1d(np.asarray(k))
    if np.any(k_arr < 0):
        raise ValueError("counts must be nonnegative")
    out = np.zeros(k_arr.shape, dtype=float)
    zero = k_arr == 0
    out[zero] = np.broadcast_to(p_zero, k_arr.shape)[zero] if np.ndim(p_zero) else p_zero
    if np.any(~zero):
        pos = positive_pmf(k_arr[~zero])
        p_pos = 1.0 - (np.broadcast_to(p_zero, k_arr.shape)[~zero] if np.ndim(p_zero) else p_zero)
        out[~zero] = p_pos * np.asarray(pos)
    return float(out[0]) if np.ndim(k) == 0 else out
