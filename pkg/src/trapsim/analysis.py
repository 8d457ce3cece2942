"""Inverse pipeline: histograms, mixture fits, step labels, lifetimes.

The photon-count histogram of a telegraph trace is modeled as a mixture
whose component i corresponds to i trapped atoms:

    P(k) = sum_i C_i exp(-lambda_i) lambda_i^k / k!

fitted by expectation-maximization, optionally with Gaussian components
instead of Poisson ones when a better R-squared is wanted on broadened data.
Component weights C_i estimate the probability of holding i atoms, and the
spacing between adjacent means is the fluorescence of one atom per bin.

Occupancy labels come from maximum-responsibility assignment plus a 3-bin
median filter to suppress single-bin flickers; runs of constant label become
dwell records, censored where they touch a cycle boundary. The single-atom
lifetime is the censored exponential MLE: total observed time in the state
divided by the number of dwells whose termination was actually seen (dwells
cut off by the end of a cycle contribute exposure but no event; dwells that
merely started before the window do contribute their observed termination,
which the memoryless property makes a fair event).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .dynamics import TraceRecord

GAUSSIAN_VARIANCE_FLOOR = 0.25  # counts^2; prevents component collapse
EM_TOL = 1e-8
EM_MAX_ITER = 500


class InsufficientDataError(ValueError):
    """Histogram too small for the requested number of components."""


class LifetimeIndeterminateError(ArithmeticError):
    """No dwell with an observed termination in the requested state."""


@dataclass(frozen=True, eq=False)
class CountHistogram:
    """Tally of photon counts per bin value."""

    values: np.ndarray  # sorted unique count values
    freqs: np.ndarray  # occurrences, same length

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        freqs = np.asarray(self.freqs, dtype=np.int64)
        if len(values) != len(freqs):
            raise ValueError("values and freqs must have equal length")
        if np.any(freqs < 0):
            raise ValueError("frequencies must be >= 0")
        if len(values) > 1 and np.any(np.diff(values) <= 0):
            raise ValueError("values must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "freqs", freqs)

    @classmethod
    def from_counts(cls, counts) -> "CountHistogram":
        values, freqs = np.unique(np.asarray(counts, dtype=np.int64), return_counts=True)
        return cls(values=values, freqs=freqs)

    @property
    def total(self) -> int:
        return int(self.freqs.sum())

    def merge(self, other: "CountHistogram") -> "CountHistogram":
        values = np.union1d(self.values, other.values)
        freqs = np.zeros(len(values), dtype=np.int64)
        freqs[np.searchsorted(values, self.values)] += self.freqs
        freqs[np.searchsorted(values, other.values)] += other.freqs
        return CountHistogram(values=values, freqs=freqs)

    def as_dict(self) -> dict:
        return {int(v): int(f) for v, f in zip(self.values, self.freqs)}


@dataclass(frozen=True, eq=False)
class MixtureFitResult:
    """Converged mixture parameters, components sorted by mean."""

    kind: str  # "poisson" or "gaussian"
    n_components: int
    weights: np.ndarray
    means: np.ndarray
    log_likelihood: float
    variances: np.ndarray | None = None  # gaussian only
    converged: bool = True
    n_iter: int = 0
    variance_floor_applied: bool = False
    loglik_trace: np.ndarray | None = None  # per-iteration log-likelihood


def build_histogram(trace: TraceRecord) -> CountHistogram:
    """Exact integer tally over the trace's probe bins.

    Forced first-of-cycle zero bins are excluded when the trace carries
    phase structure; a bare all-probe trace is tallied in full.
    """
    if trace.n_bins == 0:
        raise ValueError("empty trace")
    mask = trace.analysis_mask()
    if not np.any(mask):
        raise ValueError("trace has no probe bins to histogram")
    return CountHistogram.from_counts(trace.counts[mask])


def _poisson_logpmf(k: np.ndarray, lam: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = k * np.log(lam) - lam - gammaln(k + 1.0)
    if np.any(lam == 0):
        zero = lam == 0
        lp = np.where(zero & (k == 0), 0.0, lp)
        lp = np.where(zero & (k > 0), -np.inf, lp)
    return lp


def _gaussian_logpdf(k: np.ndarray, mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * var) + (k - mu) ** 2 / var)


def _weighted_quantile(values: np.ndarray, freqs: np.ndarray, q: float) -> float:
    cum = np.cumsum(freqs)
    idx = int(np.searchsorted(cum, q * cum[-1], side="left"))
    return float(values[min(idx, len(values) - 1)])


def _init_means(hist: CountHistogram, n: int) -> np.ndarray:
    means = np.array(
        [_weighted_quantile(hist.values, hist.freqs, (i + 1) / (n + 1)) for i in range(n)]
    )
    # quantile ties would freeze EM on identical components; split by half a count
    for i in range(1, n):
        if means[i] <= means[i - 1]:
            means[i] = means[i - 1] + 0.5
    return means


def _single_component(hist: CountHistogram, kind: str) -> MixtureFitResult:
    value = float(hist.values[0])
    k = hist.values.astype(float)
    if kind == "poisson":
        ll = float(hist.freqs @ _poisson_logpmf(k, np.array(value)))
        return MixtureFitResult(
            kind=kind,
            n_components=1,
            weights=np.array([1.0]),
            means=np.array([value]),
            log_likelihood=ll,
            loglik_trace=np.array([ll]),
        )
    var = np.array([GAUSSIAN_VARIANCE_FLOOR])
    ll = float(hist.freqs @ _gaussian_logpdf(k, np.array(value), var))
    return MixtureFitResult(
        kind=kind,
        n_components=1,
        weights=np.array([1.0]),
        means=np.array([value]),
        log_likelihood=ll,
        variances=var,
        variance_floor_applied=True,
        loglik_trace=np.array([ll]),
    )


def _em_fit(hist: CountHistogram, n: int, kind: str) -> MixtureFitResult:
    values = hist.values.astype(float)
    freqs = hist.freqs.astype(float)
    total = freqs.sum()
    means = _init_means(hist, n)
    weights = np.full(n, 1.0 / n)
    sample_mean = float(freqs @ values) / total
    sample_var = float(freqs @ (values - sample_mean) ** 2) / total
    variances = np.full(n, max(sample_var, GAUSSIAN_VARIANCE_FLOOR))
    floor_hit = False

    loglik_trace = []
    converged = False
    for _ in range(EM_MAX_ITER):
        if kind == "poisson":
            logp = _poisson_logpmf(values[None, :], means[:, None])
        else:
            logp = _gaussian_logpdf(values[None, :], means[:, None], variances[:, None])
        with np.errstate(divide="ignore"):
            lj = np.log(weights)[:, None] + logp
        norm = logsumexp(lj, axis=0)
        loglik = float(freqs @ norm)
        if loglik_trace and loglik - loglik_trace[-1] < EM_TOL:
            loglik_trace.append(loglik)
            converged = True
            break
        loglik_trace.append(loglik)

        resp = np.exp(lj - norm[None, :]) * freqs[None, :]
        nk = resp.sum(axis=1)
        weights = nk / total
        active = nk > 0
        means[active] = (resp @ values)[active] / nk[active]
        if kind == "gaussian":
            sq = resp @ values**2
            raw = np.where(active, sq / np.where(active, nk, 1.0) - means**2, variances)
            if np.any(raw[active] < GAUSSIAN_VARIANCE_FLOOR):
                floor_hit = True
            variances = np.maximum(raw, GAUSSIAN_VARIANCE_FLOOR)

    order = np.argsort(means, kind="stable")
    means = means[order]
    weights = weights[order]
    variances = variances[order] if kind == "gaussian" else None

    # merge components whose means coincide, keeping the ordering strict
    keep_means, keep_weights, keep_vars = [], [], []
    for i in range(len(means)):
        if keep_means and means[i] - keep_means[-1] < 1e-9:
            w = keep_weights[-1] + weights[i]
            if kind == "gaussian" and w > 0:
                keep_vars[-1] = (
                    keep_vars[-1] * keep_weights[-1] + variances[i] * weights[i]
                ) / w
            keep_weights[-1] = w
        else:
            keep_means.append(means[i])
            keep_weights.append(weights[i])
            if kind == "gaussian":
                keep_vars.append(variances[i])

    return MixtureFitResult(
        kind=kind,
        n_components=len(keep_means),
        weights=np.asarray(keep_weights),
        means=np.asarray(keep_means),
        log_likelihood=loglik_trace[-1],
        variances=np.asarray(keep_vars) if kind == "gaussian" else None,
        converged=converged,
        n_iter=len(loglik_trace),
        variance_floor_applied=floor_hit,
        loglik_trace=np.asarray(loglik_trace),
    )


def _fit_mixture(hist: CountHistogram, n_components, kind: str) -> MixtureFitResult:
    if len(hist.values) == 0:
        raise InsufficientDataError("empty histogram")
    if len(hist.values) == 1:
        return _single_component(hist, kind)
    total = hist.total
    if n_components == "auto" or n_components is None:
        n_max = min(5, max(1, total // 10))
        candidates = []
        for n in range(1, n_max + 1):
            fit = _em_fit(hist, n, kind)
            n_params = 2 * fit.n_components - 1 + (
                fit.n_components if kind == "gaussian" else 0
            )
            bic = -2.0 * fit.log_likelihood + n_params * np.log(total)
            candidates.append((bic, fit))
        return min(candidates, key=lambda c: c[0])[1]
    n = int(n_components)
    if n < 1:
        raise ValueError("n_components must be >= 1")
    if total < 10 * n:
        raise InsufficientDataError(
            f"{total} samples is too few for {n} components (need >= {10 * n})"
        )
    return _em_fit(hist, n, kind)


def fit_poisson_mixture(hist: CountHistogram, n_components="auto") -> MixtureFitResult:
    """EM fit of a Poisson mixture; "auto" scans 1..5 components by BIC."""
    return _fit_mixture(hist, n_components, "poisson")


def fit_gaussian_mixture(hist: CountHistogram, n_components) -> MixtureFitResult:
    """EM fit of a Gaussian mixture over integer count support.

    Component variances are floored at 0.25 counts^2; the result flags when
    the floor was active. "auto" selects the component count by BIC, as for
    the Poisson kind.
    """
    return _fit_mixture(hist, n_components, "gaussian")


def _median3(states: np.ndarray) -> np.ndarray:
    if len(states) < 3:
        return states.copy()
    padded = np.concatenate(([states[0]], states, [states[-1]]))
    stacked = np.stack([padded[:-2], padded[1:-1], padded[2:]])
    return np.median(stacked, axis=0).astype(states.dtype)


def label_occupancy(trace: TraceRecord, fit: MixtureFitResult) -> np.ndarray:
    """Per-bin occupancy labels for the trace's analysis bins.

    Maximum-responsibility assignment under the fitted mixture, then a 3-bin
    median filter applied within each cycle so single-bin flickers are
    suppressed without smearing across cycle boundaries.
    """
    mask = trace.analysis_mask()
    k = trace.counts[mask].astype(float)
    if fit.kind == "poisson":
        logp = _poisson_logpmf(k[None, :], fit.means[:, None])
    else:
        logp = _gaussian_logpdf(k[None, :], fit.means[:, None], fit.variances[:, None])
    with np.errstate(divide="ignore"):
        lj = np.log(fit.weights)[:, None] + logp
    states = np.argmax(lj, axis=0).astype(np.int64)
    cycles = trace.cycle_index[mask]
    out = np.empty_like(states)
    for c in np.unique(cycles):
        seg = cycles == c
        out[seg] = _median3(states[seg])
    return out


@dataclass(frozen=True)
class DwellRecord:
    """A maximal run of constant occupancy label."""

    state: int
    duration_ms: float
    left_censored: bool
    right_censored: bool

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ValueError("dwell duration must be > 0")


def extract_dwells(states, bin_width_ms: float, cycle_index=None) -> list[DwellRecord]:
    """Split label sequences into dwells; runs touching a cycle boundary are
    flagged censored on that side."""
    states = np.asarray(states)
    if len(states) == 0:
        return []
    cycles = (
        np.zeros(len(states), dtype=np.int64)
        if cycle_index is None
        else np.asarray(cycle_index)
    )
    if len(cycles) != len(states):
        raise ValueError("cycle_index length must match states")
    dwells = []
    boundaries = np.nonzero(np.diff(cycles) != 0)[0] + 1
    for seg in np.split(np.arange(len(states)), boundaries):
        seg_states = states[seg]
        change = np.nonzero(np.diff(seg_states) != 0)[0] + 1
        run_starts = np.concatenate(([0], change))
        run_ends = np.concatenate((change, [len(seg_states)]))
        for j, (a, b) in enumerate(zip(run_starts, run_ends)):
            dwells.append(
                DwellRecord(
                    state=int(seg_states[a]),
                    duration_ms=float((b - a) * bin_width_ms),
                    left_censored=(j == 0),
                    right_censored=(j == len(run_starts) - 1),
                )
            )
    return dwells


def estimate_lifetime(dwells, state: int) -> float:
    """Censored exponential MLE of the mean dwell time in ``state`` (ms).

    Total observed duration in the state divided by the number of dwells
    whose termination was observed (i.e. not right-censored).
    """
    selected = [d for d in dwells if d.state == state]
    n_terminated = sum(1 for d in selected if not d.right_censored)
    if n_terminated == 0:
        raise LifetimeIndeterminateError(
            f"lifetime indeterminate: no observed termination in state {state}"
        )
    return sum(d.duration_ms for d in selected) / n_terminated


def occupancy_probabilities(fit: MixtureFitResult) -> dict[int, float]:
    """Map atom count i -> probability, reading component i as i atoms."""
    return {i: float(w) for i, w in enumerate(fit.weights)}


def analyze_trace(
    trace: TraceRecord, model: str = "poisson", n_components="auto"
) -> dict:
    """Full pipeline: histogram, mixture fit, labels, dwells, lifetime.

    Returns the fit-report mapping written by the command-line tool. The
    single-atom lifetime is null when no state-1 termination was observed.
    """
    if model not in ("poisson", "gaussian"):
        raise ValueError(f"unknown model {model!r}")
    hist = build_histogram(trace)
    if model == "poisson":
        fit = fit_poisson_mixture(hist, n_components)
    else:
        fit = fit_gaussian_mixture(hist, n_components)
    states = label_occupancy(trace, fit)
    mask = trace.analysis_mask()
    cycles = trace.cycle_index[mask]
    dwells = extract_dwells(states, trace.bin_width_ms, cycles)
    try:
        lifetime_ms = estimate_lifetime(dwells, state=1)
    except LifetimeIndeterminateError:
        lifetime_ms = None
    probs = occupancy_probabilities(fit)
    n_cycles = max(1, len(np.unique(cycles)))
    stderr = {i: float(np.sqrt(p * (1.0 - p) / n_cycles)) for i, p in probs.items()}
    report = {
        "model": fit.kind,
        "n_components": fit.n_components,
        "weights": [float(w) for w in fit.weights],
        "means": [float(m) for m in fit.means],
        "log_likelihood": fit.log_likelihood,
        "lifetime_ms": lifetime_ms,
        "occupancy_probabilities": {str(i): p for i, p in probs.items()},
        "occupancy_stderr": {str(i): s for i, s in stderr.items()},
        "n_bins_analyzed": int(mask.sum()),
        "n_cycles": n_cycles,
    }
    if fit.kind == "gaussian":
        report["variances"] = [float(v) for v in fit.variances]
        report["variance_floor_applied"] = bool(fit.variance_floor_applied)
    return report
