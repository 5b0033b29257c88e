"""L-DACS1-style preamble synthesis and its quantized energy template.

The preamble is two OFDM symbols at the oversampled front-end rate:

* symbol 1 loads QPSK on every fourth base-grid subcarrier, so its body is
  four identical parts of length L,
* symbol 2 loads the even subcarriers, giving two identical parts of 2L.

Bodies are built by synthesizing one period and tiling it, so the repeats
are bit-identical, not merely close.  Each symbol carries a cyclic prefix;
a raised-cosine ramp tapers the first ``win_len`` samples of each prefix.

The energy template is the vector of instant-energy weights the correlator
matches against: products of template samples one symbol-2 repetition apart,
anchored at the last sample of symbol 1, peak-normalized and quantized to
{0, 0.5, 1} so the correlator needs no multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

# Default seed for the surrogate QPSK loading. The published preamble
# sequence is not reproduced here; any fixed seed gives an equivalent
# two-symbol structure.
DEFAULT_TEMPLATE_SEED = 0x1DAC51

_BASE_GRID = 64  # subcarriers of the non-oversampled system
_BASE_SPACING_HZ = 625_000.0 / _BASE_GRID  # 9.765625 kHz


@dataclass(frozen=True)
class PhyParams:
    """Front-end constants. All lengths are samples at the oversampled rate.

    Defaults describe the standard configuration: four-fold oversampling,
    44-sample cyclic prefix, 8-sample window ramp.
    """

    oversampling: int = 4
    cp_len: int = 44
    win_len: int = 8

    def __post_init__(self) -> None:
        if self.oversampling < 1:
            raise ValueError("oversampling factor must be at least 1")
        if self.cp_len < 11:
            raise ValueError("cp_len below 11 makes the fail threshold sub-sample")
        if not 0 <= self.win_len <= self.cp_len:
            raise ValueError("window ramp must fit inside the cyclic prefix")

    @classmethod
    def for_oversampling(cls, oversampling: int) -> "PhyParams":
        """Scale the default prefix and window lengths with the sample rate."""
        return cls(
            oversampling=oversampling,
            cp_len=11 * oversampling,
            win_len=2 * oversampling,
        )

    @property
    def part_len(self) -> int:
        """Length of one repeated part of symbol 1 (L)."""
        return 16 * self.oversampling

    @property
    def fft_len(self) -> int:
        """Oversampled FFT length (N = 4L)."""
        return 4 * self.part_len

    @property
    def sample_rate_hz(self) -> float:
        return self.oversampling * 625_000.0

    @property
    def subcarrier_spacing_hz(self) -> float:
        return _BASE_SPACING_HZ

    @property
    def symbol_len(self) -> int:
        return self.fft_len + self.cp_len

    @property
    def preamble_len(self) -> int:
        return 2 * self.symbol_len

    @property
    def sto_fail_threshold(self) -> float:
        """Timing errors at or above this many samples count as failures."""
        return self.cp_len / 11.0


@dataclass
class PreambleTemplate:
    """Reference preamble plus the quantized energy-correlator taps.

    ``taps[m] == taps_int[m] + taps_half[m] / 2`` and takes values in
    {0, 0.5, 1}.  Tap index m reaches backwards from ``alignment_index``,
    the last sample of symbol 1.
    """

    samples: np.ndarray
    sym1_start: int
    sym2_start: int
    taps: np.ndarray
    taps_int: np.ndarray
    taps_half: np.ndarray
    depth: int
    nonzero_count: int
    seed: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def alignment_index(self) -> int:
        """Template index the correlator peak corresponds to."""
        return self.sym2_start - 1

    def __len__(self) -> int:
        return len(self.samples)


def _qpsk_symbols(rng: np.random.Generator, count: int) -> np.ndarray:
    phases = (np.pi / 4.0) + (np.pi / 2.0) * rng.integers(0, 4, size=count)
    return np.exp(1j * phases)


def _periodic_body(
    rng: np.random.Generator, period_len: int, carrier_step_hz_slots: int
) -> np.ndarray:
    """One period of an OFDM body that uses every ``carrier_step``-th
    base-grid subcarrier (DC excluded), synthesized at the period's own FFT
    size so tiling reproduces it bit-exactly."""
    # Base-grid indices k with k % step == 0 condense to slots k // step of a
    # period_len-point FFT.
    slots_half = _BASE_GRID // (2 * carrier_step_hz_slots)
    slot_indices = [k for k in range(-slots_half, slots_half) if k != 0]
    spectrum = np.zeros(period_len, dtype=np.complex128)
    values = _qpsk_symbols(rng, len(slot_indices))
    for slot, value in zip(slot_indices, values):
        spectrum[slot % period_len] = value
    return np.fft.ifft(spectrum)


def _window_ramp(win_len: int) -> np.ndarray:
    i = np.arange(win_len)
    return 0.5 * (1.0 - np.cos(np.pi * (i + 1.0) / (win_len + 1.0)))


def _attach_prefix(body: np.ndarray, params: PhyParams) -> np.ndarray:
    symbol = np.concatenate([body[-params.cp_len:], body])
    if params.win_len:
        symbol[: params.win_len] *= _window_ramp(params.win_len)
    return symbol


def generate_preamble(
    params: Optional[PhyParams] = None, seed: int = DEFAULT_TEMPLATE_SEED
) -> PreambleTemplate:
    """Build the two-symbol preamble and its energy template.

    Deterministic in ``seed``; identical seeds give bit-identical templates.
    The returned samples have unit average power.
    """
    params = params or PhyParams()
    rng = np.random.default_rng(seed)

    period1 = _periodic_body(rng, params.part_len, carrier_step_hz_slots=4)
    body1 = np.tile(period1, 4)
    period2 = _periodic_body(rng, 2 * params.part_len, carrier_step_hz_slots=2)
    body2 = np.tile(period2, 2)

    sym1 = _attach_prefix(body1, params)
    sym2 = _attach_prefix(body2, params)
    samples = np.concatenate([sym1, sym2])
    samples *= 1.0 / np.sqrt(np.mean(np.abs(samples) ** 2))

    template = PreambleTemplate(
        samples=samples,
        sym1_start=0,
        sym2_start=params.symbol_len,
        taps=np.zeros(0),
        taps_int=np.zeros(0, dtype=np.int64),
        taps_half=np.zeros(0, dtype=np.int64),
        depth=0,
        nonzero_count=0,
        seed=seed,
    )
    taps, taps_int, taps_half, depth = build_energy_template(template, params)
    template.taps = taps
    template.taps_int = taps_int
    template.taps_half = taps_half
    template.depth = depth
    template.nonzero_count = int(np.count_nonzero(taps))
    return template


@lru_cache(maxsize=8)
def default_template(params: Optional[PhyParams] = None) -> PreambleTemplate:
    """The seeded template most callers share; built once per params."""
    return generate_preamble(params or PhyParams(), DEFAULT_TEMPLATE_SEED)


def build_energy_template(
    template: PreambleTemplate, params: PhyParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Quantized instant-energy weights for the multiplierless correlator.

    Weight m is |p*[n0-m] * p[n0-m-2L]| with n0 the last sample of symbol 1;
    the span covers every m for which both factors lie inside the preamble.
    Weights are normalized to a unit peak and quantized to the nearest of
    {0, 0.5, 1}, then split into the unit and half bit-planes.

    Returns ``(taps, taps_int, taps_half, depth)``.
    """
    p = template.samples
    if len(p) == 0 or not np.any(p):
        raise ValueError("empty template")
    lag = 2 * params.part_len
    n0 = template.sym2_start - 1
    depth = n0 + 1 - lag
    if depth <= 0:
        raise ValueError("template too short for the correlation lag")

    m = np.arange(depth)
    products = np.abs(np.conj(p[n0 - m]) * p[n0 - m - lag])
    peak = products.max()
    if peak == 0.0:
        raise ValueError("empty template")
    normalized = products / peak
    taps = np.where(normalized < 0.25, 0.0, np.where(normalized < 0.75, 0.5, 1.0))
    taps_int = (taps == 1.0).astype(np.int64)
    taps_half = (taps == 0.5).astype(np.int64)

    # The correlator output lives in an unsigned 8.f word; the tap mass
    # bounds its worst case.
    if float(taps.sum()) >= 255.0:
        raise ValueError("energy template mass too large for the correlator word")
    return taps, taps_int, taps_half, depth
