import math

import numpy as np
import pytest

from synclab.channel import (
    ChannelConfig,
    DmeSource,
    apply_awgn,
    apply_cfo,
    apply_dme,
    apply_multipath,
    apply_phase_noise,
    build_trial_stream,
    dme_pair_times,
    scenario_config,
    scenario_names,
    stream_to_csv,
)
from synclab.preamble import PhyParams


class TestConfig:
    def test_presets(self):
        assert set(scenario_names()) == {"awgn", "enr", "enr-dme", "tma"}
        enr = scenario_config("enr", snr_db=10.0, cfo=0.5)
        assert enr.tap_delays_us == (0.0, 0.3, 15.0)
        assert enr.tap_powers_db == (0.0, -10.0, -14.0)
        assert enr.rician_k_db == 15.0
        assert enr.doppler_max_hz == 1250.0
        assert enr.has_multipath and not enr.dme
        dme = scenario_config("ENR_DME")  # name normalization
        assert dme.scenario == "enr-dme"
        assert len(dme.dme) == 3
        tma = scenario_config("tma")
        assert tma.doppler_max_hz == 624.0
        assert tma.rician_k_db == 10.0
        assert max(tma.tap_delays_us) == 10.0
        awgn = scenario_config("awgn")
        assert not awgn.has_multipath

    def test_unknown_scenario(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            scenario_config("banana")

    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelConfig(snr_db=float("nan"))
        with pytest.raises(ValueError):
            ChannelConfig(cfo=2.0)
        with pytest.raises(ValueError):
            ChannelConfig(tap_delays_us=(0.0,), tap_powers_db=())
        with pytest.raises(ValueError):
            DmeSource(freq_offset_hz=0.0, power_dbm=-70.0, pulse_pair_rate=0.0)


class TestCfo:
    def test_zero_is_identity(self, params, rng):
        x = rng.standard_normal(100) + 1j * rng.standard_normal(100)
        y = apply_cfo(x, 0.0, params)
        assert np.array_equal(y, x)
        assert y is not x

    def test_quarter_spacing(self, params):
        # eps=1 advances the phase by 2 pi / N per sample, so a quarter
        # period in N/4 = 64 samples
        x = np.ones(100, dtype=complex)
        y = apply_cfo(x, 1.0, params)
        assert y[0] == 1.0
        assert y[64] == pytest.approx(1j, abs=1e-12)

    def test_multiplicative(self, params, rng):
        x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        y = apply_cfo(x, 0.9, params)
        np.testing.assert_allclose(
            y, x * apply_cfo(np.ones(50), 0.9, params), rtol=1e-12
        )


class TestAwgn:
    def test_noiseless_sentinel(self, rng):
        x = rng.standard_normal(64) + 0j
        y = apply_awgn(x, math.inf, 1.0, rng)
        assert np.array_equal(y, x)

    def test_variance(self):
        rng = np.random.default_rng(7)
        x = np.zeros(1_000_000, dtype=complex)
        y = apply_awgn(x, 10.0, 1.0, rng)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.1, rel=0.01)
        # both quadratures carry half the power
        assert np.mean(y.real**2) == pytest.approx(0.05, rel=0.02)

    def test_deterministic(self):
        x = np.ones(32, dtype=complex)
        a = apply_awgn(x, 5.0, 1.0, np.random.default_rng(9))
        b = apply_awgn(x, 5.0, 1.0, np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_rejects_bad_args(self, rng):
        x = np.ones(8, dtype=complex)
        with pytest.raises(ValueError):
            apply_awgn(x, 10.0, 0.0, rng)
        with pytest.raises(ValueError):
            apply_awgn(x, math.nan, 1.0, rng)


class TestMultipath:
    def test_requires_taps(self, params, rng):
        cfg = scenario_config("awgn")
        with pytest.raises(ValueError, match="multipath not applicable"):
            apply_multipath(np.ones(10, dtype=complex), cfg, params, rng)

    def test_pure_los(self, params, rng):
        # K = inf leaves only the static line of sight: a fixed rotation
        cfg = ChannelConfig(
            scenario="custom", tap_delays_us=(0.0,), tap_powers_db=(0.0,)
        )
        x = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        y = apply_multipath(x, cfg, params, rng)
        ratio = y / x
        np.testing.assert_allclose(np.abs(ratio), 1.0, rtol=1e-12)
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)

    def test_enr_tap_placement(self, params, rng):
        cfg = scenario_config("enr")
        x = np.zeros(64, dtype=complex)
        x[0] = 1.0
        y = apply_multipath(x, cfg, params, rng)
        # 0, 0.3 and 15 us at 2.5 MHz land on samples 0, 1 and 38
        nonzero = set(np.flatnonzero(np.abs(y) > 1e-12).tolist())
        assert nonzero == {0, 1, 38}

    def test_unit_mean_power(self, params):
        # averaged over fading realizations the channel neither amplifies
        # nor attenuates
        cfg = scenario_config("enr")
        n = 100_000
        gains = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
            y = apply_multipath(x, cfg, params, rng)
            gains.append(np.mean(np.abs(y) ** 2) / np.mean(np.abs(x) ** 2))
        assert np.mean(gains) == pytest.approx(1.0, abs=0.05)


class TestPhaseNoise:
    def test_off_is_identity(self, params, rng):
        x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        y = apply_phase_noise(x, 0.0, params, rng)
        assert np.array_equal(y, x)

    def test_pure_rotation(self, params, rng):
        x = rng.standard_normal(500) + 1j * rng.standard_normal(500)
        y = apply_phase_noise(x, 100.0, params, rng)
        np.testing.assert_allclose(np.abs(y), np.abs(x), rtol=1e-12)
        assert not np.allclose(y, x)


class TestDme:
    def test_pair_times(self):
        rng = np.random.default_rng(11)
        times = dme_pair_times(rng, 1.0, 3600.0)
        assert abs(len(times) - 3600) < 180  # ~3 sigma for Poisson(3600)
        assert np.all(np.diff(times) >= 0)
        assert times.min() >= 0.0 and times.max() < 1.0

    def test_no_sources_identity(self, params, rng):
        cfg = scenario_config("awgn")
        x = np.ones(100, dtype=complex)
        y = apply_dme(x, (), cfg, rng, params)
        assert np.array_equal(y, x)

    def test_rejects_low_sample_rate(self, rng):
        cfg = scenario_config("awgn")
        src = (DmeSource(freq_offset_hz=-0.5e6, power_dbm=-70.0),)
        with pytest.raises(ValueError, match="sample rate"):
            apply_dme(
                np.ones(10, dtype=complex), src, cfg, rng,
                PhyParams.for_oversampling(1),
            )

    def test_spectrum_centered_on_offset(self, params):
        rng = np.random.default_rng(21)
        cfg = scenario_config("awgn")
        src = (DmeSource(freq_offset_hz=-0.5e6, power_dbm=-75.0),)
        n = 1 << 17
        y = apply_dme(np.zeros(n, dtype=complex), src, cfg, rng, params)
        spec = np.abs(np.fft.fft(y)) ** 2
        freqs = np.fft.fftfreq(n, d=1.0 / params.sample_rate_hz)
        centroid = float(np.sum(freqs * spec) / np.sum(spec))
        assert centroid == pytest.approx(-0.5e6, abs=5e4)

    def test_average_power_mapping(self, params):
        # power_dbm equal to the signal reference means unit interference
        # to signal ratio in the long-run average
        rng = np.random.default_rng(22)
        cfg = scenario_config("awgn")  # signal_power_dbm = -75
        src = (DmeSource(freq_offset_hz=0.5e6, power_dbm=-75.0),)
        n = 1 << 17
        y = apply_dme(np.zeros(n, dtype=complex), src, cfg, rng, params)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, rel=0.2)

    def test_weaker_source_scales(self, params):
        rng = np.random.default_rng(23)
        cfg = scenario_config("awgn")
        src = (DmeSource(freq_offset_hz=0.5e6, power_dbm=-85.0),)
        n = 1 << 17
        y = apply_dme(np.zeros(n, dtype=complex), src, cfg, rng, params)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.1, rel=0.2)


class TestTrialStream:
    def test_noiseless_embeds_preamble(self, template, params, clean_trial):
        stream, sto = clean_trial()
        n_fft = params.fft_len
        assert 4 * n_fft <= sto <= 8 * n_fft
        assert np.array_equal(stream[sto : sto + 600], template.samples)
        np.testing.assert_array_equal(stream[:sto], 0.0)
        assert len(stream) - (sto + 600) >= 2 * n_fft

    def test_deterministic(self, template, params):
        cfg = scenario_config("enr-dme", snr_db=6.0, cfo=1.1)
        a, sto_a = build_trial_stream(template, cfg, params, 123)
        b, sto_b = build_trial_stream(template, cfg, params, 123)
        c, _ = build_trial_stream(template, cfg, params, 124)
        assert sto_a == sto_b
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_snr_calibration(self, template, params):
        # measure signal and noise power from the assembled stream itself
        cfg = scenario_config("awgn", snr_db=10.0)
        excesses = []
        for seed in range(100):
            stream, sto = build_trial_stream(template, cfg, params, seed)
            p_noise = np.mean(np.abs(stream[:sto]) ** 2)
            p_total = np.mean(np.abs(stream[sto : sto + 600]) ** 2)
            excesses.append((p_total - p_noise) / p_noise)
        measured_db = 10 * math.log10(np.mean(excesses))
        assert measured_db == pytest.approx(10.0, abs=0.2)

    def test_cfo_rotates_preamble(self, template, params, clean_trial):
        stream, sto = clean_trial(cfo=1.5)
        segment = stream[sto : sto + 600]
        expected = template.samples * np.exp(
            2j * np.pi * 1.5 * np.arange(sto, sto + 600) / params.fft_len
        )
        np.testing.assert_allclose(segment, expected, atol=1e-12)

    def test_stream_to_csv(self, tmp_path, clean_trial):
        stream, _ = clean_trial()
        path = tmp_path / "stream.csv"
        stream_to_csv(stream[:10], str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "re,im"
        assert len(lines) == 11
        re0, im0 = lines[1].split(",")
        assert float(re0) == stream[0].real
        assert float(im0) == stream[0].imag
