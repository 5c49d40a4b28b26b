"""Dual-threshold fusion with PU-activity prediction and noise-uncertainty tracking.

The fusion center keeps a rolling window of the last ``L`` combined energies
and mean reported noise variances.  Averaging the energy window (current
event included) predicts whether the PU is on the air; the ratio of the
window's maximum mean variance to its average estimates the noise
uncertainty factor ``rho >= 1``.  The decision threshold is then toggled to
``lambda/rho`` when activity is predicted and ``rho*lambda`` otherwise,
before the usual energy comparison.

During the first ``L - 1`` events the window is still filling and callers
fall back to the fixed-threshold rule while continuing to push history.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .channel import Hypothesis
from .fusion import CombinerKind, FusionConfig, combine, decide_conventional
from .sensing import SensingReport


class WarmupIncompleteError(RuntimeError):
    """Raised when a prediction is requested before the history holds L events."""


@dataclass(frozen=True)
class AdaptiveDecision:
    """Full record of one dual-threshold decision."""

    decision: Hypothesis
    predicted: Hypothesis
    e_avg: float
    rho: float
    lambda_base: float
    lambda_new: float


class FusionState:
    """Rolling window of combined energies and mean noise variances.

    Sums are maintained incrementally and the window maximum with a
    monotonic queue, so a push costs amortised constant time regardless of
    the window length.
    """

    def __init__(self, capacity: int):
        if capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.capacity = capacity
        self._energy: deque[float] = deque()
        self._variance: deque[float] = deque()
        self._energy_sum = 0.0
        self._variance_sum = 0.0
        # (push index, value) pairs, values strictly decreasing front to back
        self._max_queue: deque[tuple[int, float]] = deque()
        self._pushed = 0

    def __len__(self) -> int:
        return len(self._energy)

    @property
    def energy_history(self) -> tuple[float, ...]:
        return tuple(self._energy)

    @property
    def variance_history(self) -> tuple[float, ...]:
        return tuple(self._variance)

    @property
    def running_energy_sum(self) -> float:
        return self._energy_sum

    @property
    def running_variance_sum(self) -> float:
        return self._variance_sum

    @property
    def running_variance_max(self) -> float:
        if not self._max_queue:
            raise ValueError("no variance entries yet")
        return self._max_queue[0][1]


def push_event(state: FusionState, e_comb: float, sigma_mean_sq: float) -> FusionState:
    """Append one event, evicting the oldest once the window is full.

    Mutates ``state`` in place and returns it for chaining.
    """
    if len(state._energy) == state.capacity:
        old_e = state._energy.popleft()
        old_v = state._variance.popleft()
        state._energy_sum -= old_e
        state._variance_sum -= old_v
        evicted_index = state._pushed - state.capacity
        if state._max_queue and state._max_queue[0][0] == evicted_index:
            state._max_queue.popleft()
    state._energy.append(e_comb)
    state._variance.append(sigma_mean_sq)
    state._energy_sum += e_comb
    state._variance_sum += sigma_mean_sq
    while state._max_queue and state._max_queue[-1][1] <= sigma_mean_sq:
        state._max_queue.pop()
    state._max_queue.append((state._pushed, sigma_mean_sq))
    state._pushed += 1
    return state


def mean_variance(reports: Sequence[SensingReport]) -> float:
    """Average of the sensors' reported noise variances for one event."""
    if len(reports) < 1:
        raise ValueError("need at least one report")
    return sum(r.est_noise_variance for r in reports) / len(reports)


def predict_activity(state: FusionState, lambda_base: float) -> tuple[float, Hypothesis]:
    """Window-average energy and the activity prediction it implies.

    The window must be full (the current event is its newest entry).
    Prediction is H1 when the average reaches the base threshold.
    """
    if len(state) < state.capacity:
        raise WarmupIncompleteError(
            f"history holds {len(state)} of {state.capacity} events"
        )
    e_avg = state.running_energy_sum / state.capacity
    predicted = Hypothesis.H1 if e_avg >= lambda_base else Hypothesis.H0
    return e_avg, predicted


def estimate_rho(state: FusionState) -> float:
    """Noise-uncertainty factor: window maximum over window mean variance.

    Mathematically at least 1; clamped there to absorb rounding when all
    entries are identical.
    """
    n = len(state)
    if n < 1:
        raise ValueError("variance history is empty")
    mean = state.running_variance_sum / n
    return max(1.0, state.running_variance_max / mean)


def dynamic_threshold(lambda_base: float, rho: float, predicted: Hypothesis) -> float:
    """Toggled threshold: favour detection under predicted activity, else guard
    against false alarms."""
    if lambda_base <= 0.0:
        raise ValueError("lambda_base must be positive")
    if rho < 1.0:
        raise ValueError("rho must be at least 1")
    return lambda_base / rho if predicted is Hypothesis.H1 else rho * lambda_base


def advance(
    state: FusionState,
    e_comb: float,
    sigma_mean_sq: float,
    lambda_base: float,
    rho_override: float | None = None,
) -> AdaptiveDecision:
    """Push one combined event and run the full dual-threshold decision.

    ``rho_override`` pins the uncertainty factor (used when validating the
    analysis layer); by default it is estimated from the window.
    """
    if len(state) < state.capacity - 1:
        raise WarmupIncompleteError(
            f"history holds {len(state)} events; {state.capacity - 1} required "
            "before the first adaptive decision"
        )
    push_event(state, e_comb, sigma_mean_sq)
    e_avg, predicted = predict_activity(state, lambda_base)
    rho = estimate_rho(state) if rho_override is None else rho_override
    lambda_new = dynamic_threshold(lambda_base, rho, predicted)
    decision = decide_conventional(e_comb, lambda_new)
    return AdaptiveDecision(
        decision=decision,
        predicted=predicted,
        e_avg=e_avg,
        rho=rho,
        lambda_base=lambda_base,
        lambda_new=lambda_new,
    )


def decide_proposed(
    state: FusionState,
    reports: Sequence[SensingReport],
    kind: CombinerKind,
    cfg: FusionConfig,
    lambda_base: float,
) -> AdaptiveDecision:
    """Combine one event's reports and apply the dual-threshold rule.

    Requires a warmed-up history (L - 1 prior events); raises
    WarmupIncompleteError without touching the state otherwise.
    """
    if cfg.kind is not kind:
        raise ValueError("cfg.kind disagrees with the requested combiner")
    e_comb = combine(kind, reports)
    sigma_mean_sq = mean_variance(reports)
    return advance(state, e_comb, sigma_mean_sq, lambda_base)
