import numpy as np
import pytest

from src.core import TrafficTensor, make_windows, split_dataset
from src.datagen import generate
from src.diffusion import PriorConfig, PriorKind
from src.dynamics import (
    ComponentRule,
    DynamicsConfig,
    LocalProfile,
    PredictionMode,
    Spectrum,
    analyze,
    create_profile,
    reconstruct,
    select_components,
    similarity_report,
)
from src.errors import ConfigError, DataError
from src.experiments import prepare
from src.experiments.tasks import extract_dynamics
from src.rng import SeededRng


def _spectrum(amps) -> Spectrum:
    amps = np.asarray(amps, dtype=np.float64)[:, None, None]
    return Spectrum(amplitudes=amps, phases=np.zeros_like(amps), length=2 * (len(amps) - 1))


class TestSpectrum:
    def test_matches_direct_dft(self, periodic_tensor):
        spec = analyze(periodic_tensor)
        x = periodic_tensor.values[:, 1, 0]
        L = len(x)
        t = np.arange(L)
        for kappa in range(spec.n_bins):
            direct = np.sum(x * np.exp(-2j * np.pi * kappa * t / L))
            assert spec.amplitudes[kappa, 1, 0] == pytest.approx(abs(direct), abs=1e-9)

    @pytest.mark.parametrize("L", [2, 17, 64, 257, 512])
    def test_random_series_match_direct_dft(self, L):
        values = SeededRng(L, "dft").normal((L, 2, 1))
        spec = analyze(TrafficTensor(values))
        kappa = np.arange(spec.n_bins)[:, None]
        basis = np.exp(-2j * np.pi * kappa * np.arange(L) / L)
        direct = np.einsum("ft,tkc->fkc", basis, values)
        np.testing.assert_allclose(spec.amplitudes, np.abs(direct), rtol=1e-9, atol=1e-8)
        np.testing.assert_allclose(spec.coefficients(), direct, rtol=1e-9, atol=1e-8)

    @pytest.mark.parametrize("c", [-3.0, 0.5, 10.0])
    def test_constant_shift_moves_only_dc(self, periodic_tensor, c):
        base = analyze(periodic_tensor).coefficients()
        shifted = analyze(periodic_tensor.with_values(periodic_tensor.values + c)).coefficients()
        np.testing.assert_allclose(shifted[0], base[0] + c * periodic_tensor.T, atol=1e-9)
        np.testing.assert_allclose(shifted[1:], base[1:], atol=1e-9)

    def test_bins_and_frequencies(self, periodic_tensor):
        spec = analyze(periodic_tensor)
        assert spec.n_bins == 25
        assert spec.frequencies[8] == pytest.approx(8 / 48)

    def test_full_reconstruction(self):
        values = np.random.default_rng(0).normal(size=(17, 2, 1))
        data = TrafficTensor(values)
        spec = analyze(data)
        sel = select_components(spec, DynamicsConfig(rule=ComponentRule.ALL))
        np.testing.assert_allclose(reconstruct(spec, sel, np.arange(17)), values, atol=1e-9)

    def test_scalar_index(self, periodic_tensor):
        spec = analyze(periodic_tensor)
        sel = select_components(spec, DynamicsConfig(rule=ComponentRule.ALL))
        np.testing.assert_allclose(
            reconstruct(spec, sel, 5), periodic_tensor.values[5], atol=1e-9
        )


class TestSelection:
    def test_top_k_picks_dominant_bins(self, periodic_tensor):
        sel = select_components(analyze(periodic_tensor), DynamicsConfig(n_components=2))
        assert sel.indices[0][0] == (0, 8)
        assert sel.indices[1][0] == (0, 16)

    def test_ties_prefer_lower_bin(self):
        sel = select_components(_spectrum([1.0, 3.0, 3.0, 2.0]), DynamicsConfig(n_components=1))
        assert sel.indices[0][0] == (1,)

    def test_top_k_truncates_to_bin_count(self):
        sel = select_components(_spectrum([1.0, 2.0, 3.0]), DynamicsConfig(n_components=10))
        assert sel.counts()[0, 0] == 3

    def test_above_mean_is_strict(self):
        sel = select_components(_spectrum([3.0, 1.0, 1.0, 1.0]), DynamicsConfig(rule=ComponentRule.ABOVE_MEAN))
        assert sel.indices[0][0] == (0,)
        flat = select_components(_spectrum([1.0, 1.0, 1.0]), DynamicsConfig(rule=ComponentRule.ABOVE_MEAN))
        assert flat.counts()[0, 0] == 0

    def test_invalid_n_components(self, periodic_tensor):
        with pytest.raises(ConfigError):
            select_components(analyze(periodic_tensor), DynamicsConfig(n_components=0))


class TestPeriodicProfile:
    def test_recovers_periodic_signal(self, periodic_tensor):
        profile = create_profile("periodic", periodic_tensor, DynamicsConfig(n_components=2))
        assert profile.kind == "periodic"
        np.testing.assert_allclose(profile.profile, periodic_tensor.values[:6], atol=1e-9)

    def test_phase_origin_is_split_start(self, periodic_tensor):
        shifted = periodic_tensor.with_values(periodic_tensor.values, start_index=5, split="train")
        profile = create_profile("periodic", shifted)
        aligned = profile.align_arrays(np.zeros((1, 2, 2, 1)), np.array([5 + 6 * 3]), 2)
        np.testing.assert_allclose(aligned[0], profile.profile[:2])
        assert profile.provenance == "train"

    def test_alignment_wraps_around(self, periodic_tensor):
        profile = create_profile("periodic", periodic_tensor)
        aligned = profile.align_arrays(np.zeros((2, 2, 1)), np.asarray(4), 4)
        np.testing.assert_allclose(aligned, profile.profile[[4, 5, 0, 1]])

    @pytest.mark.parametrize("start", [0, 3, 11, 100])
    def test_alignment_is_periodic_in_target_start(self, periodic_tensor, start):
        profile = create_profile("periodic", periodic_tensor)
        ctx = np.zeros((1, 2, 2, 1))
        base = profile.align_arrays(ctx, np.array([start]), 4)
        for j in (1, 2, 5):
            np.testing.assert_array_equal(profile.align_arrays(ctx, np.array([start + 6 * j]), 4), base)

    def test_window_alignment_repeats_every_period(self, periodic_tensor):
        profile = create_profile("periodic", periodic_tensor)
        windows = make_windows(periodic_tensor, H=2, M=3)
        for i in range(len(windows) - 6):
            np.testing.assert_array_equal(profile.align(windows[i]), profile.align(windows[i + 6]))

    def test_profile_ignores_validation_and_test(self, tiny_run):
        data = generate(tiny_run.data)
        n_train = split_dataset(data)[0].T
        values = data.values.copy()
        values[n_train:] += 5.0 * SeededRng(1, "later").uniform(values[n_train:].shape)
        prior = PriorConfig(lam=0.5, prior_kind=PriorKind.PERIODIC)
        profiles = [
            extract_dynamics(tiny_run, prepare(tiny_run, d), prior)
            for d in (data, data.with_values(values))
        ]
        np.testing.assert_array_equal(profiles[0].profile, profiles[1].profile)

    def test_period_longer_than_training(self, periodic_tensor):
        with pytest.raises(DataError):
            create_profile("periodic", periodic_tensor, DynamicsConfig(period=64))

    def test_unknown_kind(self, periodic_tensor):
        with pytest.raises(ConfigError):
            create_profile("seasonal", periodic_tensor)


class TestLocalProfile:
    def test_uses_last_context_step(self, periodic_tensor):
        window = make_windows(periodic_tensor, H=4, M=1)[3]
        aligned = LocalProfile("train").align(window, PredictionMode.ONE_STEP)
        np.testing.assert_array_equal(aligned, periodic_tensor.values[6:7])

    def test_rejects_multi_step(self, periodic_tensor):
        window = make_windows(periodic_tensor, H=4, M=2)[0]
        with pytest.raises(DataError):
            LocalProfile("train").align(window, "one_step")
        with pytest.raises(DataError):
            LocalProfile("train").align(window)


class TestSimilarity:
    def test_periodic_profile_matches_periodic_data(self, periodic_tensor):
        profile = create_profile("periodic", periodic_tensor, DynamicsConfig(n_components=2))
        report = similarity_report(profile, periodic_tensor)
        assert report.mean == pytest.approx(1.0, abs=1e-9)
        assert report.flattened == pytest.approx(1.0, abs=1e-9)

    def test_local_skips_first_step(self, periodic_tensor):
        report = similarity_report(LocalProfile("train"), periodic_tensor)
        assert report.kind == "local"
        assert 0.0 < report.mean <= 1.0

    def test_zero_series_are_skipped(self):
        values = np.zeros((12, 2, 1))
        values[:, 0, 0] = 1.0 + np.cos(2 * np.pi * np.arange(12) / 6)
        data = TrafficTensor(values, steps_per_period=6)
        report = similarity_report(create_profile("periodic", data), data)
        assert report.skipped == [(1, 0)]
        assert np.isnan(report.per_series[1, 0])
