import numpy as np
import pytest

from synclab.channel import apply_cfo
from synclab.preamble import (
    DEFAULT_TEMPLATE_SEED,
    PhyParams,
    PreambleTemplate,
    build_energy_template,
    generate_preamble,
)


def _shell(samples, sym2_start):
    return PreambleTemplate(
        samples=samples,
        sym1_start=0,
        sym2_start=sym2_start,
        taps=np.zeros(0),
        taps_int=np.zeros(0, dtype=np.int64),
        taps_half=np.zeros(0, dtype=np.int64),
        depth=0,
        nonzero_count=0,
        seed=0,
    )


class TestPhyParams:
    def test_defaults(self, params):
        assert params.part_len == 64
        assert params.fft_len == 256
        assert params.cp_len == 44
        assert params.sample_rate_hz == 2.5e6
        assert params.symbol_len == 300
        assert params.preamble_len == 600
        assert params.sto_fail_threshold == 4

    def test_for_oversampling(self):
        p = PhyParams.for_oversampling(2)
        assert p.part_len == 32
        assert p.fft_len == 128
        assert p.cp_len == 22
        assert p.win_len == 4
        assert p.sample_rate_hz == 1.25e6

    def test_cp_floor(self):
        with pytest.raises(ValueError):
            PhyParams(cp_len=7)


class TestGeneratePreamble:
    def test_total_length_and_power(self, template, params):
        assert len(template.samples) == 600
        assert np.mean(np.abs(template.samples) ** 2) == pytest.approx(1.0, rel=1e-12)

    def test_symbol1_period(self, template, params):
        L = params.part_len
        body = template.samples[params.cp_len : params.cp_len + params.fft_len]
        for k in range(1, 4):
            assert np.array_equal(body[:L], body[k * L : (k + 1) * L])

    def test_symbol2_period(self, template, params):
        start = template.sym2_start + params.cp_len
        body = template.samples[start : start + params.fft_len]
        assert np.array_equal(body[: 2 * params.part_len], body[2 * params.part_len :])

    def test_cyclic_prefix(self, template, params):
        # prefix equals the body tail exactly outside the taper ramp
        cp, win, n = params.cp_len, params.win_len, params.fft_len
        for start in (0, template.sym2_start):
            sym = template.samples[start : start + params.symbol_len]
            body = sym[cp:]
            assert np.array_equal(sym[win:cp], body[n - cp + win :])

    def test_deterministic(self, params):
        a = generate_preamble(params, 77)
        b = generate_preamble(params, 77)
        c = generate_preamble(params, 78)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_default_seed(self, template):
        assert template.seed == DEFAULT_TEMPLATE_SEED


class TestEnergyTemplate:
    def test_bit_plane_identity(self, template):
        assert np.array_equal(
            template.taps, template.taps_int + 0.5 * template.taps_half
        )
        assert set(np.unique(template.taps)) <= {0.0, 0.5, 1.0}

    def test_mass_bound(self, template):
        assert template.taps.sum() < 255

    def test_frozen_shape(self, template, params):
        # depth spans every m with both c2 factors inside the preamble
        assert template.depth == template.alignment_index + 1 - 2 * params.part_len
        assert template.depth == 172
        assert template.nonzero_count == 48

    def test_alignment_index(self, template):
        assert template.alignment_index == template.sym2_start - 1 == 299

    def test_aligned_peak_by_brute_force(self, template, params):
        # weighted |c2| sum over every possible offset peaks at the anchor
        p = template.samples
        lag = 2 * params.part_len
        depth = template.depth
        best_n, best = -1, -1.0
        for n in range(lag + depth - 1, len(p)):
            m = np.arange(depth)
            window = np.abs(np.conj(p[n - m]) * p[n - m - lag])
            v = float(window @ template.taps)
            if v > best:
                best_n, best = n, v
        assert best_n == template.alignment_index

    def test_cfo_insensitive(self, template, params):
        rotated = apply_cfo(template.samples, 1.7, params)
        shell = _shell(rotated, params.symbol_len)
        taps, _, _, depth = build_energy_template(shell, params)
        assert depth == template.depth
        assert np.array_equal(taps, template.taps)

    def test_empty_template_rejected(self, params):
        shell = _shell(np.zeros(600, dtype=np.complex128), params.symbol_len)
        with pytest.raises(ValueError, match="empty template"):
            build_energy_template(shell, params)

    def test_oversize_mass_rejected(self):
        # constant-envelope samples at eight-fold oversampling put every
        # tap at 1.0; the span is past 255 and must be refused
        big = PhyParams.for_oversampling(8)
        shell = _shell(
            np.ones(big.preamble_len, dtype=np.complex128), big.symbol_len
        )
        with pytest.raises(ValueError, match="mass"):
            build_energy_template(shell, big)
