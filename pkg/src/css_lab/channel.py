"""Primary-user signal, Rayleigh fading and noise synthesis for one sensing event.

Conventions used throughout the simulator:

* The PU waveform is unit-power BPSK on the real axis.
* The noise variance ``sigma_sq`` is the per-sample variance of the real
  Gaussian noise process, so a pure-noise block of ``n`` samples has energy
  distributed as ``sigma_sq * chi2(n)`` with mean ``n * sigma_sq`` and
  variance ``2 * n * sigma_sq**2``.  Sample containers are complex for
  generality, but synthesis places noise on the real axis (post
  carrier-recovery baseband), which is what keeps the energy statistic an
  exact (non)central chi-square with one degree of freedom per sample.
* Channel gains are drawn relative to the nominal noise power, so the
  recorded instantaneous SNR is ``|gain|**2`` times signal power over
  nominal noise power and is exponentially distributed under Rayleigh
  fading.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Hypothesis(enum.Enum):
    """Channel occupancy truth: primary user absent (H0) or present (H1)."""

    H0 = 0
    H1 = 1


@dataclass(frozen=True)
class ChannelDraw:
    """One realisation of the flat-fading channel between PU and a sensor.

    ``instantaneous_snr`` is the linear per-sample SNR seen through this
    gain at nominal noise power; it is exponential over repeated draws.
    """

    gain: complex
    instantaneous_snr: float

    def __post_init__(self) -> None:
        if self.instantaneous_snr < 0.0:
            raise ValueError("instantaneous_snr must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    """Nominal noise variance plus a symmetric uncertainty interval in dB.

    Per-event variances are drawn uniformly in dB inside
    ``[-uncertainty_halfwidth_db, +uncertainty_halfwidth_db]`` around the
    nominal value; a halfwidth of zero pins every draw to the nominal.
    """

    nominal_variance: float
    uncertainty_halfwidth_db: float = 0.0

    def __post_init__(self) -> None:
        if self.nominal_variance <= 0.0:
            raise ValueError("nominal_variance must be positive")
        if self.uncertainty_halfwidth_db < 0.0:
            raise ValueError("uncertainty_halfwidth_db must be nonnegative")

    @property
    def lower_bound(self) -> float:
        return self.nominal_variance * 10.0 ** (-self.uncertainty_halfwidth_db / 10.0)

    @property
    def upper_bound(self) -> float:
        return self.nominal_variance * 10.0 ** (self.uncertainty_halfwidth_db / 10.0)


@dataclass(frozen=True)
class SampleBlock:
    """The received samples of one sensing event at one sensor."""

    samples: np.ndarray
    true_hypothesis: Hypothesis
    true_noise_variance: float
    channel: ChannelDraw

    def __post_init__(self) -> None:
        if len(self.samples) < 1:
            raise ValueError("a sample block needs at least one sample")
        if self.true_noise_variance <= 0.0:
            raise ValueError("true_noise_variance must be positive")

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def gen_pu_samples(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` unit-power BPSK symbols (+1/-1 on the real axis).

    Every symbol has unit modulus, so the empirical mean power is exactly 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    bits = rng.integers(0, 2, size=n)
    return (2.0 * bits - 1.0).astype(np.complex128)


def draw_channel(avg_snr: float, rng: np.random.Generator) -> ChannelDraw:
    """Draw one Rayleigh flat-fading gain with the given average linear SNR.

    The gain is circularly symmetric complex Gaussian with
    ``E[|gain|**2] = avg_snr`` (unit signal power, unit nominal noise
    power), which makes the instantaneous SNR exponential with mean
    ``avg_snr``.
    """
    if avg_snr <= 0.0:
        raise ValueError("avg_snr must be positive")
    scale = np.sqrt(avg_snr / 2.0)
    gain = complex(rng.standard_normal() * scale, rng.standard_normal() * scale)
    return ChannelDraw(gain=gain, instantaneous_snr=abs(gain) ** 2)


def draw_noise_variance(model: NoiseModel, rng: np.random.Generator) -> float:
    """Draw one per-event noise variance, uniform in dB around the nominal."""
    delta = model.uncertainty_halfwidth_db
    offset_db = rng.uniform(-delta, delta)
    return model.nominal_variance * 10.0 ** (offset_db / 10.0)


def synthesize_received(
    hyp: Hypothesis,
    channel: ChannelDraw,
    pu: np.ndarray,
    noise_variance: float,
    rng: np.random.Generator,
) -> SampleBlock:
    """Build the received block for one sensing event.

    Under H0 the block is pure Gaussian noise with the given per-sample
    variance.  Under H1 the PU symbols ride on top of the noise through the
    fading gain; the gain is applied coherently (by magnitude, i.e. after
    carrier phase recovery), so the per-sample signal power is
    ``|gain|**2``.  Noise is drawn before the signal is added, so the same
    seed reproduces the identical noise sequence under either hypothesis.
    """
    pu = np.asarray(pu)
    if pu.size < 1:
        raise ValueError("pu sequence must not be empty")
    if noise_variance <= 0.0:
        raise ValueError("noise_variance must be positive")
    noise = rng.standard_normal(pu.size) * np.sqrt(noise_variance)
    samples = noise.astype(np.complex128)
    if hyp is Hypothesis.H1:
        samples = samples + abs(channel.gain) * pu
    return SampleBlock(
        samples=samples,
        true_hypothesis=hyp,
        true_noise_variance=noise_variance,
        channel=channel,
    )
