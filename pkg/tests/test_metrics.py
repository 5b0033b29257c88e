import numpy as np
import pytest

from synclab.channel import apply_cfo
from synclab.metrics import (
    MetricState,
    inst_products,
    metric_arrays,
    metrics_direct,
    metrics_recursive_step,
    xcr_reference,
)


def _wrap(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


class TestInstProducts:
    def test_handcrafted(self):
        window = np.array([1 + 1j, 0, 2 - 1j, 0, 3j])
        c1, c2, ee = inst_products(window)  # length 5 implies lag 2
        assert c1 == (1 - 1j) * (2 - 1j)
        assert c2 == (1 - 1j) * 3j
        assert ee == 2.0

    def test_explicit_lag(self):
        window = np.arange(1, 9, dtype=complex)
        c1, c2, ee = inst_products(window, lag=3)
        assert c1 == 1 * 4
        assert c2 == 1 * 7
        assert ee == 1.0

    def test_short_window_rejected(self):
        with pytest.raises(ValueError):
            inst_products(np.array([1.0, 2.0]), lag=1)
        with pytest.raises(ValueError):
            inst_products(np.array([1.0, 2.0, 3.0]), lag=0)


class TestMetricsDirect:
    def test_zero_stream(self, params, template):
        r = np.zeros(600, dtype=complex)
        snap = metrics_direct(r, 400, params, template)
        assert snap.ac1 == 0 and snap.ac2 == 0
        assert snap.ene == 0.0 and snap.xcr == 0.0
        assert not snap.detection

    def test_constant_stream(self, params, template):
        # unit samples: every window sum is just the window length, the
        # energy correlation is the tap mass
        r = np.ones(600, dtype=complex)
        win = 2 * params.part_len
        snap = metrics_direct(r, 500, params, template)
        assert snap.ac1 == pytest.approx(win)
        assert snap.ac2 == pytest.approx(win)
        assert snap.ene == pytest.approx(win)
        assert snap.xcr == pytest.approx(template.taps.sum())

    def test_insufficient_history(self, params, template):
        r = np.ones(600, dtype=complex)
        with pytest.raises(ValueError, match="insufficient history"):
            metrics_direct(r, 4 * params.part_len - 2, params, template)
        with pytest.raises(ValueError):
            metrics_direct(r, 600, params, template)

    def test_clean_preamble_plateau(self, params, template):
        # at the last sample of symbol 1 every product pairs identical
        # body samples, so all three window sums coincide
        n0 = template.alignment_index
        snap = metrics_direct(template.samples, n0, params, template)
        assert snap.ac1_mag == pytest.approx(snap.ene, rel=1e-12)
        assert snap.ac2_mag == pytest.approx(snap.ene, rel=1e-12)
        assert snap.detection

    @pytest.mark.parametrize("eps", [-1.9, -0.6, 0.7, 1.5])
    def test_cfo_phase_law(self, params, template, eps):
        r = apply_cfo(template.samples, eps, params)
        n0 = template.alignment_index
        snap = metrics_direct(r, n0, params, template)
        L, N = params.part_len, params.fft_len
        assert snap.ac1_angle == pytest.approx(
            _wrap(-2 * np.pi * eps * L / N), abs=1e-9
        )
        assert snap.ac2_angle == pytest.approx(
            _wrap(-2 * np.pi * eps * 2 * L / N), abs=1e-9
        )
        assert _wrap(snap.ac2_angle - 2 * snap.ac1_angle) == pytest.approx(
            0.0, abs=1e-9
        )
        assert snap.ac1_mag == pytest.approx(snap.ene, rel=1e-12)


class TestRouteEquivalence:
    def test_arrays_match_direct(self, params, template, rng):
        r = rng.standard_normal(800) + 1j * rng.standard_normal(800)
        arrays = metric_arrays(r, template, params)
        for n in rng.integers(4 * params.part_len - 1, 800, size=50):
            snap = metrics_direct(r, int(n), params, template)
            assert arrays.ac1[n] == pytest.approx(snap.ac1, abs=1e-9)
            assert arrays.ac2[n] == pytest.approx(snap.ac2, abs=1e-9)
            assert arrays.ene[n] == pytest.approx(snap.ene, abs=1e-9)
            assert arrays.xcr[n] == pytest.approx(snap.xcr, abs=1e-9)

    def test_recursive_matches_arrays_everywhere(self, params, template, rng):
        # includes the warm-up region where windows are partially filled
        r = rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000)
        arrays = metric_arrays(r, template, params)
        state = MetricState(params, template)
        for n, r_n in enumerate(r):
            snap = metrics_recursive_step(state, complex(r_n))
            assert snap.n == n
            assert snap.ac1 == pytest.approx(arrays.ac1[n], abs=1e-9)
            assert snap.ac2 == pytest.approx(arrays.ac2[n], abs=1e-9)
            assert snap.ene == pytest.approx(arrays.ene[n], abs=1e-9)
            assert snap.xcr == pytest.approx(arrays.xcr[n], abs=1e-9)

    def test_detection_condition_array(self, params, template):
        arrays = metric_arrays(template.samples, template, params)
        flags = arrays.detection_condition()
        assert flags[template.alignment_index]
        zero = metric_arrays(np.zeros(400, dtype=complex), template, params)
        assert not zero.detection_condition().any()


class TestXcr:
    def test_reference_values(self, template):
        depth = template.depth
        assert xcr_reference(np.zeros(depth), template) == 0.0
        assert xcr_reference(np.ones(depth), template) == pytest.approx(
            template.taps.sum()
        )
        with pytest.raises(ValueError, match="history"):
            xcr_reference(np.ones(depth - 1), template)

    def test_reference_matches_direct(self, params, template, rng):
        r = rng.standard_normal(700) + 1j * rng.standard_normal(700)
        n = 500
        lag = 2 * params.part_len
        hist = np.abs(
            np.conj(r[n - np.arange(template.depth)])
            * r[n - lag - np.arange(template.depth)]
        )
        snap = metrics_direct(r, n, params, template)
        assert xcr_reference(hist, template) == pytest.approx(snap.xcr, rel=1e-12)

    def test_cfo_insensitive(self, params, template):
        plain = metric_arrays(template.samples, template, params)
        rotated = metric_arrays(
            apply_cfo(template.samples, 1.5, params), template, params
        )
        np.testing.assert_allclose(rotated.xcr, plain.xcr, rtol=0, atol=1e-9)

    def test_peak_at_alignment(self, params, template):
        arrays = metric_arrays(template.samples, template, params)
        assert int(np.argmax(arrays.xcr)) == template.alignment_index
