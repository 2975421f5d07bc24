"""Exact distribution evolution for the error-accumulation chain.

Builds the full (n+1) x (n+1) transition kernel of the error-count
chain and pushes state distributions through it, with no sampling
involved. This is the brute-force reference that the Monte Carlo
engine, the mean-field iteration and the closed-form bounds are
checked against. Dense only, so memory is quadratic in n; the default
size cap keeps it near 200 MB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .chain import ModelParams

__all__ = [
    "EXACT_N_CAP",
    "TransitionKernel",
    "StateDistribution",
    "build_kernel",
    "evolve",
    "tail_prob",
    "MonotonicityReport",
    "check_h_monotone",
    "HittingTimeDistribution",
    "hitting_time_distribution",
    "mean_curve",
    "dump_kernel_csv",
    "dump_distribution_csv",
]

# Default ceiling on n for materializing the dense kernel: (n+1)^2 float64
# entries at n = 5000 are ~200 MB. Raise explicitly via n_cap if you have
# the memory for it.
EXACT_N_CAP = 5000

# Probabilities below this are flushed to exact zero when exponentiating
# log pmf values; they are beyond double-precision resolution anyway.
_PMF_FLOOR = 1e-300

# Raw log-gamma row sums drift from 1 by a few 1e-12 at the size cap, so
# each row is renormalized after this sanity bound is checked.
_RAW_ROW_TOL = 1e-9

_ROW_SUM_TOL = 1e-12
_MASS_TOL = 1e-12


def _log_factorials(n: int) -> np.ndarray:
    """Table lf[i] = ln(i!) for i = 0..n."""
    return gammaln(np.arange(1, n + 2, dtype=np.float64))


def _binom_pmf(m: int, prob: float, lf: np.ndarray) -> np.ndarray:
    """Binomial(m, prob) pmf over y = 0..m, computed in log space."""
    if m == 0:
        return np.ones(1)
    if prob == 0.0:
        out = np.zeros(m + 1)
        out[0] = 1.0
        return out
    if prob == 1.0:
        out = np.zeros(m + 1)
        out[m] = 1.0
        return out
    y = np.arange(m + 1)
    logpmf = (
        lf[m]
        - lf[y]
        - lf[m - y]
        + y * math.log(prob)
        + (m - y) * math.log1p(-prob)
    )
    pmf = np.exp(logpmf)
    pmf[pmf < _PMF_FLOOR] = 0.0
    raw = pmf.sum()
    if abs(raw - 1.0) > _RAW_ROW_TOL:
        raise ValueError(f"binomial pmf row sums to {raw}, construction is off")
    return pmf / raw


def _scatter_epoch_row(out: np.ndarray, x: int, pmf: np.ndarray, budget: int) -> None:
    """Add the one-epoch transition row from state x into `out`.

    With y fresh errors the epoch lands on max(x + y - budget, 0); the
    destinations are a collapsed head plus one contiguous slice.
    """
    m = pmf.size - 1
    if x >= budget:
        out[x - budget : x - budget + m + 1] += pmf
        return
    head = budget - x
    if head >= m:
        out[0] += pmf.sum()
        return
    out[0] += pmf[: head + 1].sum()
    out[1 : m - head + 1] += pmf[head + 1 :]


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Dense one-epoch kernel, plus the static-phase kernel when q > 0.

    probs[x, x'] is the probability that one correction epoch maps x
    uncorrected errors to x'. static_probs, present only for q > 0, is
    the same for one static phase; evolve interleaves it every q_period
    correction epochs.
    """

    n: int
    k_batch: int
    probs: np.ndarray
    static_probs: np.ndarray | None = None
    q_period: int = 1

    def __post_init__(self) -> None:
        expected = (self.n + 1, self.n + 1)
        if self.probs.shape != expected:
            raise ValueError(f"probs must have shape {expected}, got {self.probs.shape}")
        self._check_stochastic(self.probs, "probs")
        if self.static_probs is not None:
            if self.static_probs.shape != expected:
                raise ValueError(
                    f"static_probs must have shape {expected}, got {self.static_probs.shape}"
                )
            self._check_stochastic(self.static_probs, "static_probs")
        if self.q_period < 1:
            raise ValueError(f"q_period must be >= 1, got {self.q_period}")

    @staticmethod
    def _check_stochastic(matrix: np.ndarray, name: str) -> None:
        if np.any(matrix < 0.0):
            raise ValueError(f"{name} has negative entries")
        drift = np.abs(matrix.sum(axis=1) - 1.0).max()
        if drift > _ROW_SUM_TOL:
            raise ValueError(f"{name} rows sum to 1 +/- {drift}, beyond tolerance")


def build_kernel(params: ModelParams, n_cap: int = EXACT_N_CAP) -> TransitionKernel:
    """Materialize the exact one-epoch kernel for these parameters.

    Row x aggregates Binomial(n - x, p) over the fresh-error count y into
    the landing state max(x + y - k_batch, 0). Entries come from log-gamma
    pmf evaluations; each row is renormalized to cancel the accumulated
    rounding. Refuses n beyond n_cap, since the dense matrix grows as
    (n+1)^2.
    """
    if params.n > n_cap:
        raise ValueError(
            f"n={params.n} exceeds the exact-mode cap of {n_cap}; "
            "pass a larger n_cap explicitly if the memory budget allows it"
        )
    n, k = params.n, params.k_batch
    lf = _log_factorials(n)
    probs = np.zeros((n + 1, n + 1))
    for x in range(n + 1):
        _scatter_epoch_row(probs[x], x, _binom_pmf(n - x, params.p, lf), k)
    static = None
    if params.q > 0.0:
        static = np.zeros((n + 1, n + 1))
        for x in range(n + 1):
            pmf = _binom_pmf(n - x, params.q, lf)
            static[x, x : n + 1] += pmf
    return TransitionKernel(
        n=n, k_batch=k, probs=probs, static_probs=static, q_period=params.q_period
    )


@dataclass(frozen=True, eq=False)
class StateDistribution:
    """Distribution over error counts after t correction epochs."""

    t: int
    mass: np.ndarray

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if self.mass.ndim != 1 or self.mass.size < 1:
            raise ValueError("mass must be a nonempty 1-d array")
        if np.any(self.mass < 0.0):
            raise ValueError("mass has negative entries")
        total = float(self.mass.sum())
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"mass sums to {total}, not 1")

    @property
    def n(self) -> int:
        return self.mass.size - 1

    @classmethod
    def point_mass(cls, n: int, x: int = 0, t: int = 0) -> "StateDistribution":
        if not 0 <= x <= n:
            raise ValueError(f"x={x} outside [0, {n}]")
        mass = np.zeros(n + 1)
        mass[x] = 1.0
        return cls(t=t, mass=mass)

    def mean(self) -> float:
        return float(self.mass @ np.arange(self.mass.size))


def evolve(kernel: TransitionKernel, dist0: StateDistribution, steps: int) -> StateDistribution:
    """Push a distribution through `steps` correction epochs.

    When the kernel carries a static phase, it is applied before every
    correction epoch whose absolute index (counted from dist0.t) is a
    multiple of q_period, mirroring the simulator's schedule.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if dist0.n != kernel.n:
        raise ValueError(f"distribution is over {dist0.n + 1} states, kernel over {kernel.n + 1}")
    mass = dist0.mass.copy()
    for j in range(steps):
        epoch = dist0.t + j
        if kernel.static_probs is not None and epoch % kernel.q_period == 0:
            mass = mass @ kernel.static_probs
        mass = mass @ kernel.probs
    return StateDistribution(t=dist0.t + steps, mass=mass)


def tail_prob(dist: StateDistribution, threshold: float) -> float:
    """P[X > threshold] under this distribution (strictly above)."""
    first = int(math.floor(threshold)) + 1
    if first <= 0:
        return 1.0
    if first > dist.n:
        return 0.0
    return float(dist.mass[first:].sum())


@dataclass(frozen=True)
class MonotonicityReport:
    """Outcome of the m-step reach-probability monotonicity check."""

    m: int
    tol: float
    violations: tuple[tuple[int, int], ...]
    max_decrease: float

    @property
    def ok(self) -> bool:
        return not self.violations


def check_h_monotone(kernel: TransitionKernel, m: int, tol: float = 1e-10) -> MonotonicityReport:
    """Check that P[X_{t+m} >= k | X_t = x] is nondecreasing in x.

    Holds for every threshold k and step count m on this chain; a
    violation (reported as the pair (k, x) where the probability drops
    when moving from x to x+1 by more than tol) indicates a kernel bug.
    Uses the correction-epoch kernel alone, ignoring static phases.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    power = np.linalg.matrix_power(kernel.probs, m)
    # tails[x, k] = P[X_{t+m} >= k | X_t = x]
    tails = np.cumsum(power[:, ::-1], axis=1)[:, ::-1]
    drops = tails[:-1, :] - tails[1:, :]
    bad = np.argwhere(drops > tol)
    violations = tuple((int(k), int(x)) for x, k in bad)
    max_decrease = float(drops.max(initial=0.0))
    return MonotonicityReport(m=m, tol=tol, violations=violations, max_decrease=max_decrease)


@dataclass(frozen=True, eq=False)
class HittingTimeDistribution:
    """Law of the first epoch at which the error count exceeds a threshold.

    pmf[t] = P[tau = t] for t = 0..t_max, survival = P[tau > t_max];
    together they account for all probability mass.
    """

    threshold: float
    pmf: np.ndarray
    survival: float

    def median(self) -> float:
        """Smallest t with P[tau <= t] >= 1/2, or inf if beyond t_max."""
        cum = np.cumsum(self.pmf)
        idx = np.nonzero(cum >= 0.5)[0]
        return float(idx[0]) if idx.size else math.inf


def hitting_time_distribution(
    kernel: TransitionKernel, threshold: float, t_max: int
) -> HittingTimeDistribution:
    """Exact first-passage law via taboo evolution.

    The chain starts at zero errors and is observed at epoch boundaries,
    after correction; mass sitting above the threshold at the end of
    epoch t is credited to P[tau = t]. A static excursion that the same
    epoch's correction repairs therefore does not count as a hit, which
    matches what a sampled trajectory of post-correction counts sees.
    The remainder after t_max epochs is the survival probability.
    """
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    n = kernel.n
    keep = np.arange(n + 1) <= threshold
    pmf = np.zeros(t_max + 1)
    if not keep[0]:
        # threshold below zero: the fresh memory already exceeds it
        pmf[0] = 1.0
        return HittingTimeDistribution(threshold=threshold, pmf=pmf, survival=0.0)
    inner = kernel.probs[np.ix_(keep, keep)]
    inner_with_static = (
        (kernel.static_probs @ kernel.probs)[np.ix_(keep, keep)]
        if kernel.static_probs is not None
        else None
    )
    alive = np.zeros(int(keep.sum()))
    alive[0] = 1.0
    for t in range(1, t_max + 1):
        before = alive.sum()
        if inner_with_static is not None and (t - 1) % kernel.q_period == 0:
            alive = alive @ inner_with_static
        else:
            alive = alive @ inner
        pmf[t] = before - alive.sum()
    return HittingTimeDistribution(
        threshold=threshold, pmf=pmf, survival=float(alive.sum())
    )


def mean_curve(params: ModelParams, t_max: int) -> np.ndarray:
    """Exact E[X_t] for t = 0..t_max without materializing the kernel.

    Streams the push-forward row by row, so memory stays linear in n and
    sizes beyond the dense cap are reachable. Time is O(t_max * n^2).
    """
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    n, k = params.n, params.k_batch
    lf = _log_factorials(n)
    states = np.arange(n + 1)
    mass = np.zeros(n + 1)
    mass[0] = 1.0
    means = np.empty(t_max + 1)
    means[0] = 0.0
    for t in range(1, t_max + 1):
        if params.q > 0.0 and (t - 1) % params.q_period == 0:
            mass = _stream_phase(mass, n, params.q, None, lf)
        mass = _stream_phase(mass, n, params.p, k, lf)
        means[t] = float(mass @ states)
    return means


def _stream_phase(
    mass: np.ndarray, n: int, prob: float, budget: int | None, lf: np.ndarray
) -> np.ndarray:
    """One phase of the streaming push-forward (budget None = no correction)."""
    out = np.zeros(n + 1)
    for x in np.flatnonzero(mass > 0.0):
        pmf = _binom_pmf(n - x, prob, lf)
        if budget is None:
            out[x : n + 1] += mass[x] * pmf
        else:
            _scatter_epoch_row(out, int(x), mass[x] * pmf, budget)
    return out


def dump_kernel_csv(kernel: TransitionKernel, path: str) -> None:
    """Write the nonzero kernel entries as from_state,to_state,probability rows."""
    with open(path, "w") as fh:
        fh.write("# schema=qecbatch.kernel.v1\n")
        fh.write(f"# n={kernel.n} k_batch={kernel.k_batch} q_period={kernel.q_period}\n")
        fh.write("from_state,to_state,probability\n")
        rows, cols = np.nonzero(kernel.probs)
        for x, x1 in zip(rows, cols):
            fh.write(f"{x},{x1},{float(kernel.probs[x, x1])!r}\n")


def dump_distribution_csv(dist: StateDistribution, path: str) -> None:
    """Write a distribution as state,probability rows."""
    with open(path, "w") as fh:
        fh.write("# schema=qecbatch.distribution.v1\n")
        fh.write(f"# t={dist.t}\n")
        fh.write("state,probability\n")
        for x in range(dist.n + 1):
            fh.write(f"{x},{float(dist.mass[x])!r}\n")
