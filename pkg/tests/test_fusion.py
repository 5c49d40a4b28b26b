"""Combining rules, CFAR threshold inversion and the fixed-threshold decision."""

import numpy as np
import pytest
from conftest import make_block

from css_lab.channel import Hypothesis
from css_lab.fusion import (
    CombinerKind,
    DegenerateWeightsError,
    FusionConfig,
    cfar_threshold,
    combine,
    combine_signal_mrc,
    decide_conventional,
    mrc_weights,
)
from css_lab.sensing import SensingReport, measure_energy
from css_lab.theory import TheoryParams, qfa_approx


def report(energy, snr=1.0, variance=1.0, idx=1):
    return SensingReport(
        energy=energy, est_noise_variance=variance, instantaneous_snr=snr, cr_index=idx
    )


class TestMrcWeights:
    def test_symmetric(self):
        assert np.allclose(mrc_weights([3.0, 3.0, 3.0]), [1 / 3] * 3)

    def test_direct_ratio(self):
        assert np.allclose(mrc_weights([1.0, 3.0]), [0.25, 0.75])

    def test_single_branch(self):
        assert mrc_weights([0.7]).tolist() == [1.0]

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            mrc_weights([0.0, 0.0])

    def test_simplex_property(self, rng):
        for _ in range(2_000):
            w = mrc_weights(rng.exponential(1.0, size=rng.integers(1, 9)))
            assert abs(w.sum() - 1.0) <= 1e-12
            assert np.all((w >= 0.0) & (w <= 1.0))


class TestCombine:
    def test_slc_sum(self):
        assert combine(CombinerKind.SLC, [report(1), report(2), report(3)]) == 6.0

    def test_sls_max(self):
        assert combine(CombinerKind.SLS, [report(1), report(2), report(3)]) == 3.0

    def test_mrc_weighted(self):
        reports = [report(10.0, snr=1.0), report(20.0, snr=3.0)]
        assert combine(CombinerKind.MRC, reports) == pytest.approx(17.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            combine(CombinerKind.SLC, [])

    def test_mrc_degenerate(self):
        with pytest.raises(DegenerateWeightsError):
            combine(CombinerKind.MRC, [report(1.0, snr=0.0), report(2.0, snr=0.0)])

    def test_ordering_invariant(self, rng):
        for _ in range(200):
            energies = rng.exponential(5.0, size=rng.integers(1, 8))
            reports = [report(e, snr=1.0) for e in energies]
            sls = combine(CombinerKind.SLS, reports)
            slc = combine(CombinerKind.SLC, reports)
            assert sls >= energies.max() - 1e-12
            assert slc >= sls - 1e-12

    def test_k1_collapse(self):
        single = [report(4.2, snr=0.3)]
        values = {kind: combine(kind, single) for kind in CombinerKind}
        assert len(set(values.values())) == 1


class TestCombineSignalMrc:
    def test_single_block_identity(self):
        block = make_block([1.0, -2.0, 0.5], snr=1.0)
        combined = combine_signal_mrc([block])
        assert np.allclose(combined, block.samples)

    def test_noise_scale_preserved(self, rng):
        # weighted combining keeps unit-variance noise at unit variance
        blocks = [make_block(rng.standard_normal(4000), snr=s) for s in (0.5, 1.0, 2.0)]
        combined = combine_signal_mrc(blocks)
        assert measure_energy(combined) / 4000 == pytest.approx(1.0, abs=0.15)

    def test_all_zero_gains_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            combine_signal_mrc([make_block([1.0, 2.0], snr=0.0)])


class TestCfarThreshold:
    def test_slc_median(self):
        cfg = FusionConfig(CombinerKind.SLC, 7, 1000)
        assert cfar_threshold(cfg, 0.5) == pytest.approx(7000.0)

    def test_mrc_median(self):
        cfg = FusionConfig(CombinerKind.MRC, 7, 1000)
        assert cfar_threshold(cfg, 0.5) == pytest.approx(1000.0)

    def test_round_trip_through_gaussian_tail(self):
        # inverting and re-evaluating the same approximation is exact
        for kind in CombinerKind:
            cfg = FusionConfig(kind, 7, 1000)
            params = TheoryParams(kind, 7, 1000)
            for target in (0.01, 0.05, 0.1, 0.3, 0.5):
                lam = cfar_threshold(cfg, target)
                assert abs(qfa_approx(params, lam) - target) <= 1e-10

    def test_strictly_decreasing_in_target(self):
        for kind in CombinerKind:
            cfg = FusionConfig(kind, 7, 1000)
            lams = [cfar_threshold(cfg, t) for t in np.linspace(0.01, 0.9, 15)]
            assert all(b < a for a, b in zip(lams, lams[1:]))

    def test_k1_thresholds_coincide(self):
        lams = {
            kind: cfar_threshold(FusionConfig(kind, 1, 1000), 0.1) for kind in CombinerKind
        }
        assert lams[CombinerKind.SLC] == pytest.approx(lams[CombinerKind.MRC])
        assert lams[CombinerKind.SLS] == pytest.approx(lams[CombinerKind.MRC])

    def test_sls_literal_exponent_variant(self):
        cfg = FusionConfig(CombinerKind.SLS, 7, 1000)
        default = cfar_threshold(cfg, 0.05)
        literal = cfar_threshold(cfg, 0.05, sls_literal_exponent=True)
        assert literal != default
        # only the default inversion round-trips
        params = TheoryParams(CombinerKind.SLS, 7, 1000)
        assert abs(qfa_approx(params, default) - 0.05) <= 1e-10
        assert abs(qfa_approx(params, literal) - 0.05) > 1e-3

    def test_rejects_bad_target(self):
        cfg = FusionConfig(CombinerKind.SLC, 7, 1000)
        for bad in (0.0, 1.0, -0.1, 1.7):
            with pytest.raises(ValueError):
                cfar_threshold(cfg, bad)

    def test_small_tbw_warns(self):
        cfg = FusionConfig(CombinerKind.SLC, 2, 64)
        with pytest.warns(UserWarning):
            cfar_threshold(cfg, 0.1)


class TestDecideConventional:
    def test_below_threshold(self):
        assert decide_conventional(6999.9, 7000.0) is Hypothesis.H0

    def test_boundary_inclusive(self):
        assert decide_conventional(7000.0, 7000.0) is Hypothesis.H1

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            decide_conventional(1.0, 0.0)

    def test_empirical_false_alarm_rate(self):
        # seeded Monte Carlo: SLC at the 0.1-target threshold
        from css_lab.harness import Scenario, conventional_rate, derive_rng

        scenario = Scenario(uncertainty_db=0.0, trials=100_000, seed=314)
        lam = cfar_threshold(scenario.fusion_config(), 0.1)
        rate = conventional_rate(scenario, False, lam, derive_rng(314, 90))
        assert abs(rate - 0.1) <= 3 * np.sqrt(0.1 * 0.9 / scenario.trials)


class TestFusionConfig:
    def test_tbw_product(self):
        assert FusionConfig(CombinerKind.SLC, 3, 1000).tbw_product == 500

    def test_validation(self):
        with pytest.raises(ValueError):
            FusionConfig(CombinerKind.SLC, 0, 1000)
        with pytest.raises(ValueError):
            FusionConfig(CombinerKind.SLC, 3, 999)
        with pytest.raises(ValueError):
            FusionConfig(CombinerKind.SLC, 3, 1000, nominal_variance=0.0)
