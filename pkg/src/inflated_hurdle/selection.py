"""Model selection across inflated-value sets and fit diagnostics.

- AIC/BIC comparison tables over candidate specs (the binary component is
  fitted once and reused when all candidates share the hurdle design).
- A frequency-based screen for spike candidates, replacing eyeballing the
  histogram: each positive count is scored by its excess over the geometric
  mean of its neighbours' frequencies.
- Hanging rootograms: observed vs. expected frequencies on a square-root
  scale, as a data table and as a standalone SVG rendering.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .distributions import inflated_tnb_pmf
from .estimation import (
    FitOptions,
    FitResult,
    fit_binary,
    fit_model,
    information_criteria,
    starting_values,
)
from .inference import _component_arrays
from .model_spec import Dataset, build_design

__all__ = [
    "information_criteria",
    "ComparisonRow",
    "ComparisonTable",
    "compare",
    "detect_spike_candidates",
    "spike_candidate_scores",
    "RootogramTable",
    "rootogram",
    "rootogram_svg",
]


# ---------------------------------------------------------------------------
# comparison of candidate specs


@dataclass
class ComparisonRow:
    label: str
    inflated: tuple[int, ...]
    n_params: int
    loglik: float
    aic: float
    bic: float
    converged: bool


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "inflated", "n_params", "loglik", "aic", "bic", "converged"])
        for r in self.rows:
            writer.writerow(
                [
                    r.label,
                    " ".join(str(v) for v in r.inflated),
                    r.n_params,
                    repr(r.loglik),
                    repr(r.aic),
                    repr(r.bic),
                    r.converged,
                ]
            )
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())


def compare(
    specs,
    data: Dataset,
    options: FitOptions | None = None,
    labels=None,
) -> ComparisonTable:
    """Fit each candidate spec and tabulate fit statistics, sorted by AIC.

    Candidates sharing an identical hurdle term list reuse a single binary
    fit. A fit that fails to converge still contributes a row with its
    converged flag down.
    """
    specs = list(specs)
    if labels is None:
        labels = [f"model_{i}" for i in range(len(specs))]
    if len(labels) != len(specs):
        raise ValueError("labels and specs must have equal length")
    options = options or FitOptions()
    binary_cache = {}
    rows = []
    for label, spec in zip(labels, specs):
        key = (spec.response, spec.hurdle, spec.hurdle_intercept)
        binary_res = binary_cache.get(key)
        if binary_res is None:
            design = build_design(spec, data)
            start = starting_values(spec, data, design)
            d = (data.response_values() > 0).astype(float)
            binary_res = fit_binary(
                design.hurdle, d, start[: design.hurdle.shape[1]], options
            )
            binary_cache[key] = binary_res
        fit = fit_model(spec, data, options, binary_result=binary_res)
        rows.append(
            ComparisonRow(
                label=label,
                inflated=tuple(spec.inflated.values),
                n_params=fit.n_params,
                loglik=fit.loglik_total,
                aic=fit.aic,
                bic=fit.bic,
                converged=fit.converged,
            )
        )
    rows.sort(key=lambda r: r.aic)
    return ComparisonTable(rows=rows)


# ---------------------------------------------------------------------------
# spike-candidate detection


def _positive_counts(data) -> np.ndarray:
    if isinstance(data, Dataset):
        y = data.response_values()
    else:
        y = np.asarray(data)
    pos = y[y > 0].astype(np.int64)
    if pos.size == 0:
        raise ValueError("no positive counts to scan for spikes")
    return pos


def spike_candidate_scores(data) -> list[dict]:
    """Score positive counts by their excess over smoothed neighbours.

    smoothed(j) is the geometric mean of the neighbour frequencies (each
    floored at 0.5); the score is (freq(j) - smoothed(j)) / sqrt(smoothed(j)).
    Count 1 is never scored: its left neighbour (zero) cannot occur among
    positives, so symmetric smoothing is undefined there and any decaying
    pmf would look inflated at 1. Entries come back sorted by score,
    largest first.
    """
    pos = _positive_counts(data)
    freq = np.bincount(pos, minlength=pos.max() + 2).astype(float)
    out = []
    for j in range(2, pos.max() + 1):
        left = max(freq[j - 1], 0.5)
        right = max(freq[j + 1], 0.5)
        smoothed = float(np.sqrt(left * right))
        excess = freq[j] - smoothed
        out.append(
            {
                "value": j,
                "count": int(freq[j]),
                "smoothed": smoothed,
                "score": excess / np.sqrt(smoothed),
            }
        )
    out.sort(key=lambda r: -r["score"])
    return out


def detect_spike_candidates(data, sensitivity: float = 4.0, min_count: int = 10) -> list[int]:
    """Counts whose excess score exceeds ``sensitivity``, best first.

    Candidates rarer than ``min_count`` are dropped regardless of score:
    they would be weakly identified as spikes anyway (same floor as
    ``validate_inflated``), and isolated small tail frequencies otherwise
    read as inflation against near-empty neighbours.
    """
    return [
        r["value"]
        for r in spike_candidate_scores(data)
        if r["score"] > sensitivity and r["count"] >= min_count
    ]


# ---------------------------------------------------------------------------
# rootogram


@dataclass
class RootogramTable:
    """Observed vs. expected frequencies per count on the sqrt scale.

    ``hanging`` is sqrt(expected) - sqrt(observed): the bottom of a bar that
    hangs from the expected curve. A bar ending above zero means the model
    over-predicts that count; one crossing below zero means it
    under-predicts it.
    """

    counts: np.ndarray
    observed: np.ndarray
    expected: np.ndarray

    @property
    def sqrt_observed(self) -> np.ndarray:
        return np.sqrt(self.observed)

    @property
    def sqrt_expected(self) -> np.ndarray:
        return np.sqrt(self.expected)

    @property
    def hanging(self) -> np.ndarray:
        return self.sqrt_expected - self.sqrt_observed

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["count", "observed", "expected", "sqrt_observed", "sqrt_expected", "hanging"]
        )
        for i, c in enumerate(self.counts):
            writer.writerow(
                [
                    int(c),
                    int(self.observed[i]),
                    repr(float(self.expected[i])),
                    repr(float(self.sqrt_observed[i])),
                    repr(float(self.sqrt_expected[i])),
                    repr(float(self.hanging[i])),
                ]
            )
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())


def rootogram(fit: FitResult, data: Dataset, max_count: int | None = None) -> RootogramTable:
    """Expected vs. observed frequency of each count under the fitted model.

    expected(j) sums each row's probability of the count j. By default the
    table runs to the maximum observed count (so observed frequencies sum
    to the sample size); ``max_count`` overrides the upper bound.
    """
    y = data.response_values()
    top = int(y.max()) if max_count is None else int(max_count)
    observed = np.bincount(y, minlength=top + 1)[: top + 1].astype(float)
    design = fit.design_for(data)
    p_pos, weights, mu, theta = _component_arrays(fit, fit.params, design)
    expected = np.empty(top + 1)
    expected[0] = float(np.sum(1.0 - p_pos))
    for j in range(1, top + 1):
        expected[j] = float(
            np.sum(p_pos * inflated_tnb_pmf(j, weights, mu, theta, fit.spec.inflated))
        )
    return RootogramTable(
        counts=np.arange(top + 1), observed=observed, expected=expected
    )


def _display_bound(table: RootogramTable) -> int:
    """Smallest count holding 99.9% of the observations."""
    total = table.observed.sum()
    if total == 0:
        return int(table.counts[-1])
    cum = np.cumsum(table.observed)
    return int(table.counts[np.searchsorted(cum, 0.999 * total)])


def rootogram_svg(
    table: RootogramTable,
    display_max: int | None = None,
    width: int = 720,
    height: int = 420,
) -> str:
    """Render a hanging rootogram as standalone SVG text.

    Bars hang from the expected curve down by sqrt(observed); the display
    is cut at the 99.9th percentile of observed counts unless
    ``display_max`` says otherwise.
    """
    top = _display_bound(table) if display_max is None else int(display_max)
    keep = table.counts <= top
    counts = table.counts[keep]
    sqrt_exp = table.sqrt_expected[keep]
    hanging = table.hanging[keep]

    left, right, top_pad, bottom = 56.0, 16.0, 18.0, 42.0
    plot_w = width - left - right
    plot_h = height - top_pad - bottom
    y_hi = float(max(sqrt_exp.max(), (sqrt_exp - hanging).max())) * 1.06 + 1e-9
    y_lo = min(float(hanging.min()), 0.0) * 1.15 - 1e-9
    dx = plot_w / max(len(counts), 1)

    def sx(c):
        return left + (c - counts[0] + 0.5) * dx

    def sy(v):
        return top_pad + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    bar_w = 0.8 * dx
    for i, c in enumerate(counts):
        y_top = sy(sqrt_exp[i])
        y_bot = sy(hanging[i])
        parts.append(
            f'<rect x="{sx(c) - bar_w / 2:.2f}" y="{min(y_top, y_bot):.2f}" '
            f'width="{bar_w:.2f}" height="{abs(y_bot - y_top):.2f}" '
            f'fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>'
        )
    curve = " ".join(f"{sx(c):.2f},{sy(sqrt_exp[i]):.2f}" for i, c in enumerate(counts))
    parts.append(f'<polyline points="{curve}" fill="none" stroke="#de2d26" stroke-width="1.5"/>')
    zero_y = sy(0.0)
    parts.append(
        f'<line x1="{left:.2f}" y1="{zero_y:.2f}" x2="{width - right:.2f}" y2="{zero_y:.2f}" '
        f'stroke="black" stroke-width="1"/>'
    )
    x_step = max(1, len(counts) // 12)
    for i in range(0, len(counts), x_step):
        c = counts[i]
        parts.append(
            f'<text x="{sx(c):.2f}" y="{height - bottom + 16:.2f}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{int(c)}</text>'
        )
    n_yticks = 6
    for t in np.linspace(np.ceil(y_lo), np.floor(y_hi), n_yticks):
        parts.append(
            f'<text x="{left - 8:.2f}" y="{sy(t) + 4:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{t:.0f}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 8:.2f}" font-size="12" '
        f'text-anchor="middle" font-family="sans-serif">count</text>'
    )
    parts.append(
        f'<text x="14" y="{top_pad + plot_h / 2:.2f}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 14 {top_pad + plot_h / 2:.2f})">'
        f"sqrt frequency</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)
