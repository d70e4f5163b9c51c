"""Shared test fixtures: an independent reference data generator.

The generator below deliberately bypasses the package's own simulation and
distribution code: it composes the model from scratch with numpy draws
(gamma-Poisson for the negative binomial, rejection on zeros for the
truncation) so that parameter-recovery and likelihood tests check the
package against an implementation it does not share code with.
"""

import numpy as np
import pytest

from inflated_hurdle.model_spec import Dataset, ModelSpec

REFERENCE_TRUTH = {
    "hurdle:intercept": 0.2,
    "hurdle:x1": 0.8,
    "hurdle:x2": -0.5,
    "hurdle:x3": 0.4,
    "hurdle:q3": 0.6,
    "location:intercept": 1.6,
    "location:x1": 0.3,
    "location:x2": -0.2,
    "location:x3": 0.25,
    "location:q3": 0.5,
    "dispersion:intercept": 0.3,
    "dispersion:q3": 0.4,
    "spike[2]:intercept": -1.6,
    "spike[2]:q3": 0.3,
    "spike[7]:intercept": -1.9,
    "spike[7]:q3": 0.5,
    "spike[14]:intercept": -2.4,
    "spike[14]:q3": 0.8,
}

REFERENCE_SPIKES = (2, 7, 14)

# Reference multinomial-logit coefficients from a published 16-spike count
# model with a peak-season shift, plus the mixture probabilities they imply
# at baseline (off-peak) and with the shift applied. Used as numeric anchors.
PUBLISHED_GAMMA_INTERCEPTS = {
    2: -2.360, 3: -2.744, 4: -3.011, 6: -2.814, 7: -3.030, 10: -5.083,
    14: -4.120, 15: -5.535, 20: -5.472, 28: -6.744, 29: -6.894, 30: -5.736,
    40: -6.723, 45: -7.442, 50: -7.886, 60: -6.781,
}
PUBLISHED_GAMMA_Q3 = {
    2: -1.634, 3: -1.765, 4: -1.994, 6: 0.372, 7: 0.625, 10: 1.447,
    14: 1.754, 15: 2.139, 20: 1.767, 28: 0.978, 29: 1.695, 30: 2.192,
    40: 1.101, 45: 1.680, 50: 2.106, 60: 2.110,
}
PUBLISHED_MIX_OFFPEAK = {
    2: 0.0697, 3: 0.0475, 4: 0.0363, 6: 0.0442, 7: 0.0357, 10: 0.0046,
    14: 0.0120, 15: 0.0029, 20: 0.0031, 28: 0.0009, 29: 0.0007, 30: 0.0024,
    40: 0.0009, 45: 0.0004, 50: 0.0003, 60: 0.0008,
}
PUBLISHED_MIX_OFFPEAK_TNB = 0.7376
PUBLISHED_MIX_Q3 = {
    2: 0.0127, 3: 0.0076, 4: 0.0046, 6: 0.0600, 7: 0.0623, 10: 0.0182,
    14: 0.0648, 15: 0.0231, 20: 0.0170, 28: 0.0022, 29: 0.0038, 30: 0.0199,
    40: 0.0025, 45: 0.0022, 50: 0.0021, 60: 0.0065,
}
PUBLISHED_MIX_Q3_TNB = 0.6903


def reference_spec(inflated=REFERENCE_SPIKES):
    return ModelSpec(
        response="y",
        hurdle=["x1", "x2", "x3", "q3"],
        location=["x1", "x2", "x3", "q3"],
        dispersion=["q3"],
        mixing=["q3"],
        inflated=inflated,
    )


def simulate_reference(n, seed, truth=None, inflated=REFERENCE_SPIKES):
    """Draw a dataset from the model with an implementation independent of
    the package. Returns (Dataset, regimes) where regimes holds -1 for
    zeros, the spike value for spike rows, and 0 for truncated-NB rows.
    """
    truth = dict(REFERENCE_TRUTH if truth is None else truth)
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.uniform(-1.0, 1.0, size=n)
    x3 = (rng.uniform(size=n) < 0.4).astype(float)
    q3 = (rng.uniform(size=n) < 0.3).astype(float)
    cols = {"x1": x1, "x2": x2, "x3": x3, "q3": q3}

    def lin(prefix, names):
        eta = np.full(n, truth.get(f"{prefix}:intercept", 0.0))
        for c in names:
            eta += truth.get(f"{prefix}:{c}", 0.0) * cols[c]
        return eta

    covs = ["x1", "x2", "x3", "q3"]
    p_pos = 1.0 / (1.0 + np.exp(-lin("hurdle", covs)))
    mu = np.exp(lin("location", covs))
    theta = np.exp(lin("dispersion", covs))
    if inflated:
        scores = np.column_stack([lin(f"spike[{v}]", covs) for v in inflated])
        expw = np.exp(scores)
        denom = 1.0 + expw.sum(axis=1)
        weights = np.column_stack([expw / denom[:, None], 1.0 / denom])
    else:
        weights = np.ones((n, 1))

    y = np.zeros(n, dtype=np.int64)
    regimes = np.full(n, -1, dtype=np.int64)
    positive = rng.uniform(size=n) < p_pos
    u = rng.uniform(size=n)
    cum = np.cumsum(weights, axis=1)
    regime_idx = (u[:, None] > cum).sum(axis=1)
    for j, v in enumerate(inflated):
        rows = positive & (regime_idx == j)
        y[rows] = v
        regimes[rows] = v
    tnb_rows = np.nonzero(positive & (regime_idx == len(inflated)))[0]
    regimes[tnb_rows] = 0
    pending = tnb_rows
    while pending.size:
        lam = rng.gamma(shape=theta[pending], scale=mu[pending] / theta[pending])
        draws = rng.poisson(lam)
        done = draws > 0
        y[pending[done]] = draws[done]
        pending = pending[~done]

    data = Dataset({**cols, "y": y}, response="y")
    return data, regimes


@pytest.fixture(scope="session")
def reference_data():
    data, _ = simulate_reference(2000, seed=1234)
    return data


@pytest.fixture(scope="session")
def reference_fit(reference_data):
    from inflated_hurdle.estimation import fit_model

    return fit_model(reference_spec(), reference_data)
