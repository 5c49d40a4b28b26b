"""Closed-form false-alarm and detection analysis of the fusion statistics.

Statistic model
---------------
With ``N`` real noise degrees of freedom per sensing event and per-sample
noise variance ``sigma_sq``, one sensor's energy is
``sigma_sq * chi2(N)`` under H0 and noncentral with noncentrality
``N * snr`` under H1, where ``snr`` is that sensor's per-sample linear SNR.
From this follow, per combiner (``u = N/2``, ``K`` sensors):

* SLC: exact null ``sigma_sq * chi2(N K)``; detection via the generalized
  Marcum Q of order ``K u``.
* MRC: signal-level ratio combining is equivalent to a single detector
  whose SNR is the sum of branch SNRs, so the null is ``sigma_sq * chi2(N)``
  independent of ``K``.
* SLS: the maximum of ``K`` independent branch statistics; probabilities
  are one minus the K-th power of the branch complement.

Gaussian approximations replace each (non)central chi-square with a normal
matched to mean ``m (1 + snr)`` and variance ``2 m (1 + snr)^2 sigma_sq**2``
style moments, which is where the closed-form CFAR inversion comes from.

SNR argument convention: every function below takes the *per-sensor*
average linear SNR, assumed equal across sensors; combiner-level scaling
(``K`` sums for SLC totals and MRC coherent gain) happens internally.
Rayleigh-fading averages integrate over the combiner's aggregate SNR
density (gamma with shape ``K`` for SLC/MRC, exponential per branch for
SLS).

The dual-threshold scheme's probabilities are convex combinations of the
conventional ones at ``lambda/rho`` and ``rho*lambda`` weighted by the
probability that the window-average predictor fires, itself Gaussian with
moments determined by how many of the ``L`` window events carry signal
(``M``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .fusion import CombinerKind

GAUSSIAN_WARN_FLOOR = 100  # CLT-based formulas degrade below this many samples
_QUAD_TOL = 1e-9
_TAIL_SIGMAS = 40.0  # truncation point of the fading integrals, in gamma-std units


class NumericError(RuntimeError):
    """Raised when a quadrature fails to converge to its requested tolerance."""


@dataclass(frozen=True)
class TheoryParams:
    """Parameter bundle for the analysis layer.

    ``M`` is the number of signal-bearing events assumed in the predictor
    window; ``None`` defers to the operation's natural regime (0 for
    false-alarm quantities, ``L`` for detection quantities).
    """

    kind: CombinerKind
    K: int
    N: int
    sigma_sq: float = 1.0
    gamma_bar: float = 1.0
    rho: float = 1.0
    L: int = 15
    M: int | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.N < 2 or self.N % 2 != 0:
            raise ValueError("N must be an even integer >= 2")
        if self.sigma_sq <= 0.0:
            raise ValueError("sigma_sq must be positive")
        if self.gamma_bar <= 0.0:
            raise ValueError("gamma_bar must be positive")
        if self.rho < 1.0:
            raise ValueError("rho must be at least 1")
        if self.L < 2:
            raise ValueError("L must be at least 2")
        if self.M is not None and not 0 <= self.M <= self.L:
            raise ValueError("M must lie in [0, L]")

    @property
    def u(self) -> int:
        return self.N // 2


def q_func(x: float) -> float:
    """Standard normal upper-tail probability Q(x)."""
    return float(0.5 * special.erfc(x / np.sqrt(2.0)))


def inv_erfc(y: float) -> float:
    """Inverse of the complementary error function on (0, 2)."""
    if not 0.0 < y < 2.0:
        raise ValueError("inv_erfc argument must lie strictly inside (0, 2)")
    return float(special.erfcinv(y))


def upper_reg_gamma(s: float, x: float) -> float:
    """Regularized upper incomplete gamma function Gamma(s, x) / Gamma(s)."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    return float(special.gammaincc(s, x))


def marcum_q(order: float, a: float, b: float) -> float:
    """Generalized Marcum Q function of the given order.

    Evaluated through the noncentral chi-square survival function:
    ``Q_m(a, b) = P(chi2'(2m, a^2) >= b^2)``.
    """
    if order < 1.0:
        raise ValueError("order must be at least 1")
    if a < 0.0 or b < 0.0:
        raise ValueError("a and b must be nonnegative")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return upper_reg_gamma(order, b * b / 2.0)
    # the noncentral CDF is bounded above by the central one; when even that
    # underflows to zero the survival value is exactly 1 in double precision
    # (and the boost evaluator would overflow internally)
    if special.chdtr(2.0 * order, b * b) == 0.0:
        return 1.0
    return float(stats.ncx2.sf(b * b, 2.0 * order, a * a))


def _sls_complement_power(branch_prob: float, k: int) -> float:
    """1 - (1 - p)**k computed stably for small p."""
    branch_prob = min(max(branch_prob, 0.0), 1.0)
    if branch_prob >= 1.0:
        return 1.0
    return float(-np.expm1(k * np.log1p(-branch_prob)))


def qfa_exact(p: TheoryParams, lam: float) -> float:
    """Exact chi-square false-alarm probability of the combined statistic."""
    if lam <= 0.0:
        return 1.0
    x = lam / (2.0 * p.sigma_sq)
    if p.kind is CombinerKind.SLC:
        return upper_reg_gamma(p.K * p.u, x)
    branch = upper_reg_gamma(p.u, x)
    if p.kind is CombinerKind.MRC:
        return branch
    return _sls_complement_power(branch, p.K)


def qd_awgn_exact(p: TheoryParams, lam: float, snr: float) -> float:
    """Exact fixed-SNR detection probability via the Marcum Q function.

    ``snr`` is the common per-sensor per-sample SNR; zero reduces to the
    false-alarm probability.
    """
    if snr < 0.0:
        raise ValueError("snr must be nonnegative")
    if lam <= 0.0:
        return 1.0
    b = np.sqrt(lam / p.sigma_sq)
    if p.kind is CombinerKind.SLC:
        return marcum_q(p.K * p.u, np.sqrt(p.N * p.K * snr), b)
    if p.kind is CombinerKind.MRC:
        return marcum_q(p.u, np.sqrt(p.N * p.K * snr), b)
    branch = marcum_q(p.u, np.sqrt(p.N * snr), b)
    return _sls_complement_power(branch, p.K)


def _warn_small_n(p: TheoryParams) -> None:
    if p.N < GAUSSIAN_WARN_FLOOR:
        warnings.warn(
            f"N={p.N} is small; Gaussian approximations may be inaccurate",
            stacklevel=3,
        )


def _gaussian_tail(lam: float, mean: float, var: float) -> float:
    return q_func((lam - mean) / np.sqrt(var))


def _h1_moments(p: TheoryParams, snr: float) -> tuple[float, float]:
    """Mean and variance of the combined statistic with every sensor at ``snr``."""
    s2 = p.sigma_sq
    if p.kind is CombinerKind.SLC:
        scale = p.N * p.K
        boost = 1.0 + snr
    elif p.kind is CombinerKind.MRC:
        scale = p.N
        boost = 1.0 + p.K * snr
    else:  # SLS moments are per branch; the K-fold max is applied separately
        scale = p.N
        boost = 1.0 + snr
    return scale * s2 * boost, 2.0 * scale * s2 * s2 * boost * boost


def qfa_approx(p: TheoryParams, lam: float) -> float:
    """Gaussian (CLT) false-alarm probability of the combined statistic."""
    _warn_small_n(p)
    mean, var = _h1_moments(p, 0.0)
    tail = _gaussian_tail(lam, mean, var)
    if p.kind is CombinerKind.SLS:
        return _sls_complement_power(tail, p.K)
    return tail


def qd_awgn_approx(p: TheoryParams, lam: float, snr: float) -> float:
    """Gaussian fixed-SNR detection probability of the combined statistic."""
    if snr < 0.0:
        raise ValueError("snr must be nonnegative")
    _warn_small_n(p)
    mean, var = _h1_moments(p, snr)
    tail = _gaussian_tail(lam, mean, var)
    if p.kind is CombinerKind.SLS:
        return _sls_complement_power(tail, p.K)
    return tail


def _fading_upper_limit(p: TheoryParams) -> float:
    """Truncation point covering all but ~1e-12 of the aggregate SNR mass."""
    if p.kind is CombinerKind.SLS:
        return p.gamma_bar * (1.0 + _TAIL_SIGMAS)
    return p.gamma_bar * (p.K + _TAIL_SIGMAS * np.sqrt(p.K))


def _quad(fn, lo: float, hi: float, what: str) -> float:
    value, abserr = integrate.quad(fn, lo, hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    if not np.isfinite(value) or abserr > 1e-6:
        raise NumericError(
            f"quadrature for {what} did not converge: value={value!r}, "
            f"abserr={abserr!r}, interval=({lo!r}, {hi!r})"
        )
    return float(value)


def _aggregate_snr_pdf(p: TheoryParams):
    """Density of the combiner's aggregate SNR under Rayleigh branch fading."""
    if p.kind is CombinerKind.SLS:
        return stats.expon(scale=p.gamma_bar).pdf
    return stats.gamma(a=p.K, scale=p.gamma_bar).pdf


def qd_rayleigh(p: TheoryParams, lam: float) -> float:
    """Detection probability averaged over Rayleigh fading.

    SLC and MRC integrate the exact Marcum tail against the gamma density
    of the summed branch SNRs; SLS averages one branch against the
    exponential density and applies the K-fold complement (independent,
    identically faded branches).
    """
    if lam <= 0.0:
        return 1.0
    pdf = _aggregate_snr_pdf(p)
    hi = _fading_upper_limit(p)
    b = np.sqrt(lam / p.sigma_sq)
    if p.kind is CombinerKind.SLS:
        branch = _quad(
            lambda g: marcum_q(p.u, np.sqrt(p.N * g), b) * pdf(g),
            0.0,
            hi,
            "SLS branch fading average",
        )
        return _sls_complement_power(branch, p.K)
    order = p.K * p.u if p.kind is CombinerKind.SLC else p.u
    return _quad(
        lambda g: marcum_q(order, np.sqrt(p.N * g), b) * pdf(g),
        0.0,
        hi,
        f"{p.kind.name} fading average",
    )


def avg_stats(p: TheoryParams, snr: float) -> tuple[float, float]:
    """Mean and variance of the L-event window average of combined energies.

    ``p.M`` of the window events carry signal at the given per-sensor SNR,
    the rest are noise-only.  ``p.M`` must be set.
    """
    if p.M is None:
        raise ValueError("avg_stats requires an explicit window composition M")
    if snr < 0.0:
        raise ValueError("snr must be nonnegative")
    m = p.M
    mean1, var1 = _h1_moments(p, snr)
    mean0, var0 = _h1_moments(p, 0.0)
    mu_avg = (m * mean1 + (p.L - m) * mean0) / p.L
    sigma_avg_sq = (m * var1 + (p.L - m) * var0) / (p.L * p.L)
    return float(mu_avg), float(sigma_avg_sq)


def predictor_prob(p: TheoryParams, lam: float, snr: float) -> float:
    """Probability that the window-average predictor declares activity."""
    mu_avg, sigma_avg_sq = avg_stats(p, snr)
    return _gaussian_tail(lam, mu_avg, sigma_avg_sq)


def _predictor_weight(p: TheoryParams, lam: float, snr: float, default_m: int) -> float:
    stats_params = p if p.M is not None else _with_m(p, default_m)
    return predictor_prob(stats_params, lam, snr)


def _with_m(p: TheoryParams, m: int) -> TheoryParams:
    return TheoryParams(
        kind=p.kind, K=p.K, N=p.N, sigma_sq=p.sigma_sq, gamma_bar=p.gamma_bar,
        rho=p.rho, L=p.L, M=m,
    )


def qfa_proposed(p: TheoryParams, lam: float, snr: float = 0.0) -> float:
    """Dual-threshold false-alarm probability.

    Convex combination of the Gaussian false-alarm rates at the favourable
    and guarded thresholds, weighted by the predictor; the window is
    noise-only (``M = 0``) unless ``p.M`` overrides it.
    """
    if p.rho == 1.0:  # both thresholds coincide; skip the mixture entirely
        return qfa_approx(p, lam)
    w = _predictor_weight(p, lam, snr, default_m=0)
    return w * qfa_approx(p, lam / p.rho) + (1.0 - w) * qfa_approx(p, p.rho * lam)


def qd_proposed_awgn(p: TheoryParams, lam: float, snr: float) -> float:
    """Dual-threshold fixed-SNR detection probability.

    Predictor weight defaults to a fully active window (``M = L``).
    """
    if p.rho == 1.0:
        return qd_awgn_approx(p, lam, snr)
    w = _predictor_weight(p, lam, snr, default_m=p.L)
    return (
        w * qd_awgn_approx(p, lam / p.rho, snr)
        + (1.0 - w) * qd_awgn_approx(p, p.rho * lam, snr)
    )


def qd_proposed_rayleigh(p: TheoryParams, lam: float) -> float:
    """Dual-threshold detection probability averaged over Rayleigh fading.

    The per-SNR mixture uses the exact Marcum tails at the two toggled
    thresholds (so the ``rho = 1`` case collapses to ``qd_rayleigh``
    identically), with the Gaussian predictor weight evaluated for a window
    whose events all see the integration-variable SNR.
    """
    if lam <= 0.0:
        return 1.0
    if p.rho == 1.0:
        return qd_rayleigh(p, lam)
    pdf = _aggregate_snr_pdf(p)
    hi = _fading_upper_limit(p)
    default_m = p.L if p.M is None else p.M
    weight_params = _with_m(p, default_m)
    lam_lo = lam / p.rho
    lam_hi = p.rho * lam

    def mixture(branch_snr: float) -> float:
        w = predictor_prob(weight_params, lam, branch_snr)
        return (
            w * qd_awgn_exact(p, lam_lo, branch_snr)
            + (1.0 - w) * qd_awgn_exact(p, lam_hi, branch_snr)
        )

    if p.kind is CombinerKind.SLS:
        return _quad(
            lambda g: mixture(g) * pdf(g), 0.0, hi, "SLS dual-threshold fading average"
        )
    return _quad(
        lambda g: mixture(g / p.K) * pdf(g),
        0.0,
        hi,
        f"{p.kind.name} dual-threshold fading average",
    )
