"""Fusion-center combining, CFAR threshold selection and the fixed-threshold rule.

Three soft-combining statistics are supported:

* SLC (square-law combining): the sum of all sensor energies.
* MRC (maximal-ratio combining): SNR-proportional weighting.  ``combine``
  implements the energy-domain weighted sum; the Monte Carlo harness
  realises MRC at the signal level (sample streams combined before the
  energy detector), which is the statistic the closed-form analysis in
  :mod:`css_lab.theory` describes.
* SLS (square-law selection): the largest sensor energy.

Thresholds come from a constant-false-alarm-rate inversion of the Gaussian
approximation of each statistic's null distribution.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import Hypothesis
from .sensing import SensingReport

TBW_WARN_FLOOR = 50  # Gaussian CFAR inversion degrades for small time-bandwidth products


class DegenerateWeightsError(ValueError):
    """Raised when ratio-combining weights cannot be formed (all SNRs zero)."""


class CombinerKind(enum.Enum):
    SLC = "slc"
    MRC = "mrc"
    SLS = "sls"


@dataclass(frozen=True)
class FusionConfig:
    """Static parameters shared by threshold selection and the analysis layer."""

    kind: CombinerKind
    num_crs: int
    n_samples: int
    nominal_variance: float = 1.0

    def __post_init__(self) -> None:
        if self.num_crs < 1:
            raise ValueError("num_crs must be at least 1")
        if self.n_samples < 2 or self.n_samples % 2 != 0:
            raise ValueError("n_samples must be an even integer >= 2")
        if self.nominal_variance <= 0.0:
            raise ValueError("nominal_variance must be positive")

    @property
    def tbw_product(self) -> int:
        """Time-bandwidth product; two real samples per degree of freedom pair."""
        return self.n_samples // 2


def mrc_weights(snrs: Sequence[float]) -> np.ndarray:
    """Normalised SNR-proportional weights; they sum to one.

    Raises DegenerateWeightsError when every SNR is zero, since the
    normalisation would divide by zero.
    """
    snrs = np.asarray(snrs, dtype=float)
    if snrs.size < 1:
        raise ValueError("need at least one SNR")
    if np.any(snrs < 0.0):
        raise ValueError("SNRs must be nonnegative")
    total = snrs.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("all SNRs are zero; MRC weights undefined")
    return snrs / total


def combine(kind: CombinerKind, reports: Sequence[SensingReport]) -> float:
    """Fuse one event's reports into the combined energy statistic."""
    if len(reports) < 1:
        raise ValueError("need at least one report")
    energies = np.array([r.energy for r in reports], dtype=float)
    if kind is CombinerKind.SLC:
        return float(energies.sum())
    if kind is CombinerKind.SLS:
        return float(energies.max())
    weights = mrc_weights([r.instantaneous_snr for r in reports])
    return float(np.dot(weights, energies))


def combine_signal_mrc(
    blocks: Sequence,
    gains: Sequence[complex] | None = None,
) -> np.ndarray:
    """Maximal-ratio combine raw sample streams into one detector input.

    The streams are weighted by channel-gain magnitude and normalised so the
    combined stream keeps unit noise scale:
    ``z = sum_j |h_j| y_j / sqrt(sum_j |h_j|**2)``.  This is the statistic
    whose false-alarm probability is independent of the number of sensors.
    """
    if len(blocks) < 1:
        raise ValueError("need at least one block")
    if gains is None:
        gains = [b.channel.gain for b in blocks]
    mags = np.array([abs(g) for g in gains], dtype=float)
    norm = np.sqrt(np.sum(mags**2))
    if norm <= 0.0:
        raise DegenerateWeightsError("all channel gains are zero; MRC undefined")
    stacked = np.stack([np.asarray(b.samples) for b in blocks])
    return (mags[:, None] * stacked).sum(axis=0) / norm


def cfar_threshold(
    cfg: FusionConfig,
    target_pfa: float,
    sls_literal_exponent: bool = False,
) -> float:
    """Decision threshold achieving ``target_pfa`` under the Gaussian null model.

    For SLS the default inverts the K-branch complement exactly, using the
    per-branch rate ``1 - (1 - p)**(1/K)``.  ``sls_literal_exponent=True``
    selects the variant that exponentiates by ``K`` instead of ``1/K``; it
    does not round-trip through the K-branch false-alarm expression and is
    kept only for comparison.
    """
    if not 0.0 < target_pfa < 1.0:
        raise ValueError("target_pfa must lie strictly between 0 and 1")
    # Local import; theory depends on this module for CombinerKind.
    from .theory import inv_erfc

    u = cfg.tbw_product
    if u < TBW_WARN_FLOOR:
        warnings.warn(
            f"time-bandwidth product {u} is small; the Gaussian CFAR inversion "
            "may be inaccurate",
            stacklevel=2,
        )
    sigma_sq = cfg.nominal_variance
    if cfg.kind is CombinerKind.SLC:
        ku = cfg.num_crs * u
        return sigma_sq * (inv_erfc(2.0 * target_pfa) * 2.0 * np.sqrt(2.0 * ku) + 2.0 * ku)
    if cfg.kind is CombinerKind.MRC:
        return sigma_sq * (inv_erfc(2.0 * target_pfa) * 2.0 * np.sqrt(2.0 * u) + 2.0 * u)
    if sls_literal_exponent:
        branch_pfa = 1.0 - (1.0 - target_pfa) ** cfg.num_crs
    else:
        branch_pfa = -np.expm1(np.log1p(-target_pfa) / cfg.num_crs)
    if not 0.0 < branch_pfa < 1.0:
        raise ValueError("SLS branch false-alarm rate left (0, 1); adjust target_pfa")
    return sigma_sq * (inv_erfc(2.0 * branch_pfa) * 2.0 * np.sqrt(2.0 * u) + 2.0 * u)


def decide_conventional(combined_energy: float, threshold: float) -> Hypothesis:
    """Fixed-threshold rule: declare the PU present when energy reaches it."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    return Hypothesis.H1 if combined_energy >= threshold else Hypothesis.H0
