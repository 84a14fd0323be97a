import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netrecon.errors import ParameterError
from netrecon.graph import gen_small_world
from netrecon.noise import (
    FULL_BAND,
    NoiseConfig,
    Signal,
    band_filter,
    gen_hf_noise,
    low_pass,
    noise_streams,
    psd,
    read_signal_csv,
    write_signal_csv,
)
from netrecon.plots import plot_noise_demo


def tone(f0, length=4096, amp=1.0):
    return Signal(amp * np.sin(2 * np.pi * f0 * np.arange(length)))


class TestNoiseConfig:
    @pytest.mark.parametrize("kwargs", [{"sigma2": 0}, {"band": (0.3, 0.6)}, {"band": (0.4, 0.3)},
                                        {"numtaps": 64}])
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            NoiseConfig(**kwargs)

    def test_full_band_is_white(self):
        assert NoiseConfig(band=FULL_BAND).is_white
        assert not NoiseConfig().is_white

    def test_too_narrow_band(self):
        with pytest.raises(ParameterError):
            band_filter((0.40, 0.42), 65)


class TestHfNoise:
    @pytest.mark.parametrize("seed", range(5))
    def test_variance_and_mean(self, seed):
        s = gen_hf_noise(1470, NoiseConfig(0.01, (0.35, 0.49), seed))
        assert abs(s.samples.var() - 0.01) <= 0.1 * 0.01
        assert abs(s.samples.mean()) < 3 * np.sqrt(0.01) / np.sqrt(1470)

    @pytest.mark.parametrize("seed", range(5))
    def test_band_mass(self, seed):
        s = gen_hf_noise(1470, NoiseConfig(0.01, (0.35, 0.49), seed))
        assert psd(s).band_fraction(0.3, 0.5) >= 0.95

    def test_deterministic(self):
        a = gen_hf_noise(2000, NoiseConfig(seed=4)).samples
        b = gen_hf_noise(2000, NoiseConfig(seed=4)).samples
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, gen_hf_noise(2000, NoiseConfig(seed=5)).samples)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1e-8, 10.0))
    def test_variance_scales_linearly(self, sigma2):
        s = gen_hf_noise(1000, NoiseConfig(sigma2, seed=1))
        assert s.samples.var() == pytest.approx(sigma2, rel=0.1)

    def test_streams_are_independent(self):
        x = noise_streams(4, 5000, NoiseConfig(1.0, FULL_BAND, 2))
        c = np.corrcoef(x)
        assert np.abs(c[np.triu_indices(4, 1)]).max() < 0.06

    def test_too_short(self):
        with pytest.raises(ParameterError):
            gen_hf_noise(10)


class TestLowPass:
    def test_constant_passes(self):
        y = low_pass(Signal(np.full(300, 2.5)))
        np.testing.assert_allclose(y.samples, 2.5, atol=1e-12)

    def test_delay_is_half_filter_length(self):
        assert low_pass(Signal(np.zeros(100)), numtaps=65).delay == 32

    def test_attenuates_hf_tone_20db(self):
        y = low_pass(tone(0.45))
        steady = y.samples[200:]
        gain = np.sqrt(2 * np.mean(steady ** 2))
        assert 20 * np.log10(gain) <= -20

    def test_passes_lf_tone(self):
        y = low_pass(tone(0.02))
        assert np.sqrt(2 * np.mean(y.samples[200:] ** 2)) == pytest.approx(1.0, rel=0.02)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
    def test_linear(self, a, b, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=200), rng.normal(size=200)
        lhs = low_pass(Signal(a * x + b * y)).samples
        rhs = a * low_pass(Signal(x)).samples + b * low_pass(Signal(y)).samples
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("cutoff", [0.0, 0.5, -0.1])
    def test_bad_cutoff(self, cutoff):
        with pytest.raises(ParameterError):
            low_pass(Signal(np.zeros(100)), cutoff)

    def test_recovers_consensus_signal(self, tmp_path):
        stats = plot_noise_demo(tmp_path, gen_small_world(24, 4, 0.1, 0))
        assert stats["recovery_rms_ratio"] < 0.10
        assert (tmp_path / "noise_demo.png").stat().st_size > 0


class TestPsd:
    @pytest.mark.parametrize("seed", range(3))
    def test_total_power_matches_variance(self, seed):
        x = np.random.default_rng(seed).normal(size=8192)
        assert psd(Signal(x)).total_power() == pytest.approx(x.var(), rel=0.15)

    def test_white_is_flat(self):
        x = np.random.default_rng(0).normal(size=1 << 16)
        p = psd(Signal(x)).power[1:-1]
        assert p.std() / p.mean() < 0.15

    def test_tone_peak(self):
        ps = psd(tone(0.125), 256)
        assert ps.freqs[np.argmax(ps.power)] == pytest.approx(0.125, abs=1 / 256)

    def test_short_signal(self):
        with pytest.raises(ParameterError):
            psd(Signal(np.zeros(100)), 256)


def test_signal_csv_round_trip(tmp_path):
    s = Signal(np.random.default_rng(0).normal(size=50), dt=0.1)
    write_signal_csv(s, tmp_path / "s.csv")
    back = read_signal_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.samples, s.samples)
    assert back.dt == pytest.approx(0.1)
