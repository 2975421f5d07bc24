"""Deterministic mean-field iteration for the error-accumulation chain.

Replacing the binomial draw by a pessimistic mean (decoherence rate
p - delta) and the correction batch by its full budget n * alpha gives
the recursion

    g(x) = x + (n - x) * (p - delta) - n * alpha,

whose iterates from 0 admit a closed form and converge geometrically to
a fixed point below n * (p - alpha) / p. These iterates lower-bound
where the stochastic chain concentrates and yield an explicit epoch
count by which the error fraction first exceeds a target beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "InfeasibleThresholdError",
    "MeanFieldSequence",
    "mf_iterate",
    "iterate_recursion",
    "epochs_to_cross",
    "CrossingTime",
    "sketch_phase_bound",
]


class InfeasibleThresholdError(ValueError):
    """The target fraction is not reachable by the mean-field construction."""


def _validate_rates(p: float, alpha: float) -> None:
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not 0.0 <= alpha < p:
        raise ValueError(f"alpha must lie in [0, p), got alpha={alpha}, p={p}")


def mf_iterate(n: float, p: float, alpha: float, delta: float, k: int) -> float:
    """Closed form for the k-th mean-field iterate started at zero.

    Equals k applications of g(x) = x + (n - x)(p - delta) - n * alpha:

        x_k = n * (p - delta - alpha) / (p - delta) * (1 - (1 - p + delta)**k)

    Requires 0 <= delta < p - alpha so the sequence is increasing.
    """
    _validate_rates(p, alpha)
    if not 0.0 <= delta < p - alpha:
        raise ValueError(
            f"delta must lie in [0, p - alpha), got delta={delta}, p - alpha={p - alpha}"
        )
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    rate = p - delta
    return n * (rate - alpha) / rate * (1.0 - (1.0 - rate) ** k)


def iterate_recursion(n: float, p: float, alpha: float, delta: float, k: int) -> float:
    """k explicit applications of g, the cross-check route for mf_iterate."""
    _validate_rates(p, alpha)
    x = 0.0
    for _ in range(k):
        x = x + (n - x) * (p - delta) - n * alpha
    return x


@dataclass(frozen=True)
class MeanFieldSequence:
    """Mean-field iterates aimed at a target error fraction beta.

    delta must leave room below the fixed point, 0 < delta < p - alpha/(1-beta),
    which guarantees the iterates cross n * beta after finitely many epochs.
    """

    p: float
    alpha: float
    beta: float
    delta: float
    n: float = 1.0

    def __post_init__(self) -> None:
        _validate_rates(self.p, self.alpha)
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        limit = (self.p - self.alpha) / self.p
        if not 0.0 < self.beta < limit:
            raise InfeasibleThresholdError(
                f"beta must lie in (0, {limit}) for p={self.p}, alpha={self.alpha}; "
                f"got beta={self.beta}"
            )
        room = self.p - self.alpha / (1.0 - self.beta)
        if room <= 0.0:
            # identical to beta >= limit in exact arithmetic; rounding can
            # let a boundary beta through the check above
            raise InfeasibleThresholdError(
                f"no positive slack exists below the fixed point for beta={self.beta}"
            )
        if not 0.0 < self.delta < room:
            raise ValueError(
                f"delta must lie in (0, {room}) for these rates, got {self.delta}"
            )

    @property
    def fixed_point(self) -> float:
        """Limit of the iterates, n * (p - delta - alpha) / (p - delta)."""
        rate = self.p - self.delta
        return self.n * (rate - self.alpha) / rate

    def x(self, k: int) -> float:
        """The k-th iterate (closed form)."""
        return mf_iterate(self.n, self.p, self.alpha, self.delta, k)

    @property
    def crossing_epoch(self) -> int:
        """Smallest k with x(k) > n * beta."""
        return _crossing_epoch(self)


@dataclass(frozen=True)
class CrossingTime:
    """Epoch count returned by epochs_to_cross, with the slack delta used."""

    T: int
    delta: float


def _crossing_epoch(seq: MeanFieldSequence) -> int:
    """Smallest k with x_k > n * beta, from the logarithm of the closed form.

    The log expression can straddle an integer by a rounding error, so the
    candidate is nudged against closed-form evaluations of x_k. The result
    is exact for the strict crossing x_k > n * beta.
    """
    p, alpha, beta, delta = seq.p, seq.alpha, seq.beta, seq.delta
    numerator = math.log(p - alpha - p * beta - delta * (1.0 - beta)) - math.log(
        p - alpha - delta
    )
    k = max(1, math.ceil(numerator / math.log(1.0 - p + delta)))
    target = seq.n * beta
    while k > 1 and seq.x(k - 1) > target:
        k -= 1
    while seq.x(k) <= target:
        k += 1
    return k


def epochs_to_cross(
    p: float, alpha: float, beta: float, delta: float | None = None
) -> CrossingTime:
    """Epochs for the mean-field iterates to exceed the fraction beta.

    delta defaults to half the available room, (p - alpha/(1-beta)) / 2.
    The count depends only on the rates, not on the memory size. Raises
    InfeasibleThresholdError when beta >= (p - alpha) / p, where the
    fixed point itself sits at or below the target.
    """
    if delta is None:
        _validate_rates(p, alpha)
        limit = (p - alpha) / p
        if not 0.0 < beta < limit:
            raise InfeasibleThresholdError(
                f"beta must lie in (0, {limit}) for p={p}, alpha={alpha}; got {beta}"
            )
        delta = 0.5 * (p - alpha / (1.0 - beta))
    seq = MeanFieldSequence(p=p, alpha=alpha, beta=beta, delta=delta)
    return CrossingTime(T=seq.crossing_epoch, delta=delta)


def sketch_phase_bound(p: float, alpha: float, epsilon: float) -> float:
    """Coarse epoch bound (p - alpha) / (epsilon * p^2).

    Crude count of growth phases needed to climb within epsilon of the
    steady fraction (p - alpha) / p: while the fraction is more than
    epsilon below it, each epoch gains at least epsilon * p per qubit.
    Requires 0 < epsilon < (p - alpha) / p.
    """
    _validate_rates(p, alpha)
    if not 0.0 < epsilon < (p - alpha) / p:
        raise ValueError(
            f"epsilon must lie in (0, {(p - alpha) / p}), got {epsilon}"
        )
    return (p - alpha) / (epsilon * p * p)
