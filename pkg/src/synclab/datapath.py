"""Bit-exact fixed-point mirror of the synchronizer hardware.

The architecture: a shared received-sample buffer (two cascaded Delay-L
blocks), one complex multiply per instant product rounded to Q1.fa,
recursive three-input adders holding AC1/AC2/ENE in Q8.fa, CORDIC
rectangular-to-polar translation for |c2| (rounded to Q2.fx) and for the
metric magnitudes/angles, and a multiplierless energy correlator in
unsigned Q8.fx.  Everything here is integer arithmetic on raw Q-format
words, so identical input streams give bit-identical results on any
platform.

Two correlator circuits compute XCR:

* ``TransposeCorrelator``: per-tap stage registers holding running
  partial sums in (8 + fx)-bit words.
* ``DirectCorrelator``: a (2 + fx)-bit delay line feeding two gated adder
  planes, the half-weight plane's sum shifted right once.

Both produce identical words for every input; the direct form is what the
full pipeline (``run_datapath``) uses.  The per-sample ``DatapathState``
and the vectorized ``run_datapath`` are two routes to the same integers;
tests hold them to bit equality.

Rounding is to nearest, ties away from zero, at exactly three points:
products Q1.30 -> Q1.fa, CORDIC magnitude -> Q2.fx, and the input
quantizer itself.  Saturation counters record true range violations
(pre-round value outside the format); the harmless top-edge case where a
value inside the range rounds up to the first word past it is clamped
without counting, so conforming streams (|r| <= 1) report zero events.

``RX_BACKOFF`` is the receive scaling the Monte Carlo harness applies
before quantizing arbitrary-power streams into Q1.15.  5/16 keeps the
clean preamble's largest sample (2.568 at unit mean power) inside unit
range with about 1.9 dB to spare for channel gain wander, and costs two
shift-adds in hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_CORDIC_ITERATIONS,
    Q1_15,
    QFormat,
    cordic_polar_arrays,
    magnitude_format,
    magnitude_output_format,
    metric_format,
    product_format,
    quantize_array,
    round_shift,
    xcr_format,
)
from .preamble import PhyParams, PreambleTemplate, default_template

RX_BACKOFF = 0.3125


@dataclass(frozen=True)
class WordLengthConfig:
    """Fraction-bit budget: fa for products and metrics, fx for |c2| and XCR."""

    fa: int = 5
    fx: int = 4
    cordic_iterations: int = DEFAULT_CORDIC_ITERATIONS

    def __post_init__(self) -> None:
        if not 3 <= self.fa <= 15:
            raise ValueError("fa must be in [3, 15]")
        if not 2 <= self.fx <= 15:
            raise ValueError("fx must be in [2, 15]")

    @property
    def product_fmt(self) -> QFormat:
        return product_format(self.fa)

    @property
    def metric_fmt(self) -> QFormat:
        return metric_format(self.fa)

    @property
    def c2_mag_fmt(self) -> QFormat:
        return magnitude_format(self.fx)

    @property
    def xcr_fmt(self) -> QFormat:
        return xcr_format(self.fx)

    @property
    def metric_mag_fmt(self) -> QFormat:
        return magnitude_output_format(self.metric_fmt)


@dataclass
class SaturationCounters:
    """True range violations per stage; zero on conforming streams."""

    input_clip: int = 0
    products: int = 0
    metrics: int = 0
    c2_mag: int = 0
    xcr: int = 0

    def total(self) -> int:
        return self.input_clip + self.products + self.metrics + self.c2_mag + self.xcr


def _clamp_counting(
    rounded: np.ndarray, full: np.ndarray, full_one: int, fmt: QFormat
) -> tuple[np.ndarray, int]:
    """Clamp rounded raws into fmt; count only pre-round range violations.

    ``full_one`` is the raw representing 1.0 (or the max bound) at the
    pre-round scale, so |full| >= full_one means the value itself, not the
    rounding, left the range.
    """
    true_over = int(np.count_nonzero(np.abs(full) >= full_one))
    clipped = np.clip(rounded, fmt.min_raw, fmt.max_raw)
    return clipped, true_over


def _window_sum(x: np.ndarray, win: int) -> np.ndarray:
    """Sliding sum of the last ``win`` entries at each index (zeros before
    the start). Integer-exact, so it equals the recursive accumulator."""
    cs = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(x, dtype=np.int64)])
    lo = np.maximum(np.arange(len(x)) + 1 - win, 0)
    return cs[1:] - cs[lo]


@dataclass
class FixedMetricArrays:
    """Whole-stream fixed-point metrics as raw integer words."""

    cfg: WordLengthConfig
    ac1_re: np.ndarray
    ac1_im: np.ndarray
    ac2_re: np.ndarray
    ac2_im: np.ndarray
    ene: np.ndarray
    ac1_mag: np.ndarray
    ac2_mag: np.ndarray
    ac1_angle: np.ndarray
    ac2_angle: np.ndarray
    c2_mag: np.ndarray
    xcr: np.ndarray
    counters: SaturationCounters

    def __len__(self) -> int:
        return len(self.ene)

    def detection_condition(self) -> np.ndarray:
        """|AC1| + |AC2| > ENE, compared at the magnitude word's scale."""
        guard = self.cfg.metric_mag_fmt.fraction_bits - self.cfg.fa
        return (self.ac1_mag + self.ac2_mag) > (self.ene << guard)

    def ac1_values(self) -> np.ndarray:
        return (self.ac1_re + 1j * self.ac1_im) / self.cfg.metric_fmt.scale

    def ac2_values(self) -> np.ndarray:
        return (self.ac2_re + 1j * self.ac2_im) / self.cfg.metric_fmt.scale

    def ene_values(self) -> np.ndarray:
        return self.ene / self.cfg.metric_fmt.scale

    def xcr_values(self) -> np.ndarray:
        return self.xcr / self.cfg.xcr_fmt.scale


def quantize_stream(
    r: np.ndarray, counters: SaturationCounters | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Quantize a complex stream into Q1.15 raw I/Q words."""
    r = np.asarray(r, dtype=np.complex128)
    re_raw, clip_re = quantize_array(r.real, Q1_15)
    im_raw, clip_im = quantize_array(r.imag, Q1_15)
    if counters is not None:
        counters.input_clip += clip_re + clip_im
    return re_raw, im_raw


def _delayed_int(x: np.ndarray, delay: int) -> np.ndarray:
    out = np.zeros_like(x)
    if delay < len(x):
        out[delay:] = x[: len(x) - delay]
    return out


def run_datapath(
    r: np.ndarray,
    template: PreambleTemplate | None = None,
    params: PhyParams | None = None,
    cfg: WordLengthConfig | None = None,
) -> FixedMetricArrays:
    """Run the full fixed-point pipeline over a stream.

    The input is quantized to Q1.15; callers feeding arbitrary-power
    streams scale by RX_BACKOFF first.  Returns raw integer metric arrays
    bit-identical to stepping ``DatapathState`` sample by sample.
    """
    params = params or PhyParams()
    template = template or default_template(params)
    cfg = cfg or WordLengthConfig()
    l_len = params.part_len
    win = 2 * l_len
    counters = SaturationCounters()

    re_raw, im_raw = quantize_stream(r, counters)

    re_l, im_l = _delayed_int(re_raw, l_len), _delayed_int(im_raw, l_len)
    re_2l, im_2l = _delayed_int(re_raw, 2 * l_len), _delayed_int(im_raw, 2 * l_len)

    # conj(r_n) * r_{n-L}: Q1.15 x Q1.15 -> Q1.30, then round to Q1.fa
    shift = 30 - cfg.fa
    one_q30 = 1 << 30
    pf = cfg.product_fmt

    def _to_product(full: np.ndarray) -> np.ndarray:
        rounded = round_shift(full, shift)
        clipped, over = _clamp_counting(rounded, full, one_q30, pf)
        counters.products += over
        return clipped

    c1_re = _to_product(re_raw * re_l + im_raw * im_l)
    c1_im = _to_product(re_raw * im_l - im_raw * re_l)
    c2_re = _to_product(re_raw * re_2l + im_raw * im_2l)
    c2_im = _to_product(re_raw * im_2l - im_raw * re_2l)
    ee = _to_product(re_raw * re_raw + im_raw * im_raw)

    mf = cfg.metric_fmt
    ac1_re = _window_sum(c1_re, win)
    ac1_im = _window_sum(c1_im, win)
    ac2_re = _window_sum(c2_re, win)
    ac2_im = _window_sum(c2_im, win)
    ene = _window_sum(ee, win)
    for arr in (ac1_re, ac1_im, ac2_re, ac2_im, ene):
        counters.metrics += int(np.count_nonzero(np.abs(arr) > mf.max_raw))

    # |c2| via CORDIC, rounded from the guarded magnitude word to Q2.fx.
    # The peak search downstream is scale-invariant, so the translation
    # gain is left in; Q2 has the headroom for it (1.6468 * |c2| < 2).
    c2_mag_fine, _, fine_fmt = cordic_polar_arrays(
        c2_re, c2_im, pf, cfg.cordic_iterations, compensate_gain=False
    )
    mag_shift = fine_fmt.fraction_bits - cfg.fx
    c2_rounded = round_shift(c2_mag_fine, mag_shift)
    c2_mag, over = _clamp_counting(
        c2_rounded, c2_mag_fine, 2 << fine_fmt.fraction_bits, cfg.c2_mag_fmt
    )
    counters.c2_mag += over

    xcr = xcr_direct_array(c2_mag, template)
    counters.xcr += int(np.count_nonzero(xcr > cfg.xcr_fmt.max_raw))

    ac1_mag, ac1_angle, _ = cordic_polar_arrays(ac1_re, ac1_im, mf, cfg.cordic_iterations)
    ac2_mag, ac2_angle, _ = cordic_polar_arrays(ac2_re, ac2_im, mf, cfg.cordic_iterations)

    return FixedMetricArrays(
        cfg=cfg,
        ac1_re=ac1_re,
        ac1_im=ac1_im,
        ac2_re=ac2_re,
        ac2_im=ac2_im,
        ene=ene,
        ac1_mag=ac1_mag,
        ac2_mag=ac2_mag,
        ac1_angle=ac1_angle,
        ac2_angle=ac2_angle,
        c2_mag=c2_mag,
        xcr=xcr,
        counters=counters,
    )


def xcr_direct_array(c2_mag_raw: np.ndarray, template: PreambleTemplate) -> np.ndarray:
    """Direct-form correlation over a whole |c2| stream.

    One gated sum per bit-plane; the half-weight plane's sum is shifted
    right once (floor; operands are nonnegative).
    """
    x = np.asarray(c2_mag_raw, dtype=np.int64)
    n = len(x)
    ones_sum = np.convolve(x, template.taps_int)[:n].astype(np.int64)
    halves_sum = np.convolve(x, template.taps_half)[:n].astype(np.int64)
    return ones_sum + (halves_sum >> 1)


def xcr_transpose_array(
    c2_mag_raw: np.ndarray, template: PreambleTemplate
) -> np.ndarray:
    """Transpose-form correlation over a whole |c2| stream.

    Stage registers carry the partial sums at doubled scale (tap weight 1
    contributes x << 1, weight 0.5 contributes x), halved once at the
    output.  (2A + B) >> 1 = A + (B >> 1) exactly for nonnegative
    integers, so this matches the direct form bit for bit.
    """
    x = np.asarray(c2_mag_raw, dtype=np.int64)
    weights = 2 * template.taps_int + template.taps_half
    doubled = np.convolve(x, weights)[: len(x)].astype(np.int64)
    return doubled >> 1


class DirectCorrelator:
    """Sample-serial direct form: (2+fx)-bit delay line, two adder planes."""

    def __init__(self, template: PreambleTemplate) -> None:
        self._line = np.zeros(template.depth, dtype=np.int64)
        self._ones = template.taps_int
        self._halves = template.taps_half

    def step(self, x_raw: int) -> int:
        self._line[1:] = self._line[:-1]
        self._line[0] = x_raw
        ones = int(self._ones @ self._line)
        halves = int(self._halves @ self._line)
        return ones + (halves >> 1)


class TransposeCorrelator:
    """Sample-serial transpose form: per-tap running partial sums."""

    def __init__(self, template: PreambleTemplate) -> None:
        # doubled internal scale; weight per tap in {0, 1, 2}
        self._weights = (2 * template.taps_int + template.taps_half).astype(np.int64)
        self._stages = np.zeros(template.depth, dtype=np.int64)

    def step(self, x_raw: int) -> int:
        shifted = np.empty_like(self._stages)
        shifted[:-1] = self._stages[1:]
        shifted[-1] = 0
        self._stages = shifted + self._weights * x_raw
        return int(self._stages[0]) >> 1


def xcr_direct_batch(x: np.ndarray, template: PreambleTemplate) -> np.ndarray:
    """Direct form over a batch of streams, shape (streams, samples)."""
    x = np.asarray(x, dtype=np.int64)
    ones = np.zeros_like(x)
    halves = np.zeros_like(x)
    t = x.shape[1]
    for m in np.flatnonzero(template.taps_int):
        if m < t:
            ones[:, m:] += x[:, : t - m]
    for m in np.flatnonzero(template.taps_half):
        if m < t:
            halves[:, m:] += x[:, : t - m]
    return ones + (halves >> 1)


def xcr_transpose_batch(x: np.ndarray, template: PreambleTemplate) -> np.ndarray:
    """Transpose form over a batch of streams: the stage recurrence run
    across time, vectorized over streams."""
    x = np.asarray(x, dtype=np.int64)
    streams, t = x.shape
    weights = (2 * template.taps_int + template.taps_half).astype(np.int64)
    stages = np.zeros((streams, template.depth), dtype=np.int64)
    out = np.empty((streams, t), dtype=np.int64)
    for n in range(t):
        stages[:, :-1] = stages[:, 1:]
        stages[:, -1] = 0
        stages += np.outer(x[:, n], weights)
        out[:, n] = stages[:, 0] >> 1
    return out


@dataclass
class FixedSnapshot:
    """Fixed-point metric words at one sample index."""

    n: int
    cfg: WordLengthConfig
    ac1_re: int
    ac1_im: int
    ac2_re: int
    ac2_im: int
    ene_raw: int
    ac1_mag_raw: int
    ac2_mag_raw: int
    ac1_angle: float
    ac2_angle: float
    c2_mag_raw: int
    xcr_raw: int

    @property
    def ac1(self) -> complex:
        return complex(self.ac1_re, self.ac1_im) / self.cfg.metric_fmt.scale

    @property
    def ac2(self) -> complex:
        return complex(self.ac2_re, self.ac2_im) / self.cfg.metric_fmt.scale

    @property
    def ene(self) -> float:
        return self.ene_raw / self.cfg.metric_fmt.scale

    @property
    def xcr(self) -> float:
        return self.xcr_raw / self.cfg.xcr_fmt.scale

    @property
    def detection(self) -> bool:
        guard = self.cfg.metric_mag_fmt.fraction_bits - self.cfg.fa
        return (self.ac1_mag_raw + self.ac2_mag_raw) > (self.ene_raw << guard)


class DatapathState:
    """Sample-serial mirror of ``run_datapath``; same integers, one at a time.

    Holds the shared 4L receive buffer, 2L product lines, the recursive
    accumulators, and the |c2| correlator line.
    """

    def __init__(
        self,
        params: PhyParams | None = None,
        template: PreambleTemplate | None = None,
        cfg: WordLengthConfig | None = None,
    ) -> None:
        self.params = params or PhyParams()
        self.template = template or default_template(self.params)
        self.cfg = cfg or WordLengthConfig()
        l_len = self.params.part_len
        self._lag = l_len
        self._win = 2 * l_len
        self._rx_re = np.zeros(4 * l_len, dtype=np.int64)
        self._rx_im = np.zeros(4 * l_len, dtype=np.int64)
        self._c1_line = np.zeros((self._win, 2), dtype=np.int64)
        self._c2_line = np.zeros((self._win, 2), dtype=np.int64)
        self._ee_line = np.zeros(self._win, dtype=np.int64)
        self._mag_line = np.zeros(self.template.depth, dtype=np.int64)
        self._ac1 = [0, 0]
        self._ac2 = [0, 0]
        self._ene = 0
        self.counters = SaturationCounters()
        self._n = -1

    def _round_product(self, full: int) -> int:
        rounded = int(round_shift(full, 30 - self.cfg.fa))
        pf = self.cfg.product_fmt
        if abs(full) >= (1 << 30):
            self.counters.products += 1
        return min(max(rounded, pf.min_raw), pf.max_raw)

    def step(self, r_n: complex) -> FixedSnapshot:
        self._n += 1
        cfg = self.cfg
        re_arr, clip_re = quantize_array(np.array([np.real(r_n)]), Q1_15)
        im_arr, clip_im = quantize_array(np.array([np.imag(r_n)]), Q1_15)
        self.counters.input_clip += clip_re + clip_im
        re, im = int(re_arr[0]), int(im_arr[0])

        self._rx_re[1:] = self._rx_re[:-1]
        self._rx_im[1:] = self._rx_im[:-1]
        self._rx_re[0], self._rx_im[0] = re, im

        re_l, im_l = int(self._rx_re[self._lag]), int(self._rx_im[self._lag])
        re_2l, im_2l = int(self._rx_re[2 * self._lag]), int(self._rx_im[2 * self._lag])

        c1 = (self._round_product(re * re_l + im * im_l),
              self._round_product(re * im_l - im * re_l))
        c2 = (self._round_product(re * re_2l + im * im_2l),
              self._round_product(re * im_2l - im * re_2l))
        ee = self._round_product(re * re + im * im)

        # three-input adds: accumulator + newest - the product from 2L ago
        out1 = self._c1_line[-1]
        out2 = self._c2_line[-1]
        out_e = int(self._ee_line[-1])
        self._ac1[0] += c1[0] - int(out1[0])
        self._ac1[1] += c1[1] - int(out1[1])
        self._ac2[0] += c2[0] - int(out2[0])
        self._ac2[1] += c2[1] - int(out2[1])
        self._ene += ee - out_e

        for line, val in ((self._c1_line, c1), (self._c2_line, c2)):
            line[1:] = line[:-1]
            line[0] = val
        self._ee_line[1:] = self._ee_line[:-1]
        self._ee_line[0] = ee

        mf = cfg.metric_fmt
        for v in (self._ac1[0], self._ac1[1], self._ac2[0], self._ac2[1], self._ene):
            if abs(v) > mf.max_raw:
                self.counters.metrics += 1

        mag_fine, _, fine_fmt = cordic_polar_arrays(
            np.array([c2[0]], dtype=np.int64),
            np.array([c2[1]], dtype=np.int64),
            cfg.product_fmt,
            cfg.cordic_iterations,
            compensate_gain=False,
        )
        rounded = int(round_shift(int(mag_fine[0]), fine_fmt.fraction_bits - cfg.fx))
        if int(mag_fine[0]) >= (2 << fine_fmt.fraction_bits):
            self.counters.c2_mag += 1
        c2_mag = min(max(rounded, cfg.c2_mag_fmt.min_raw), cfg.c2_mag_fmt.max_raw)

        self._mag_line[1:] = self._mag_line[:-1]
        self._mag_line[0] = c2_mag
        ones = int(self.template.taps_int @ self._mag_line)
        halves = int(self.template.taps_half @ self._mag_line)
        xcr = ones + (halves >> 1)
        if xcr > cfg.xcr_fmt.max_raw:
            self.counters.xcr += 1

        mag1, ang1, _ = cordic_polar_arrays(
            np.array([self._ac1[0]], dtype=np.int64),
            np.array([self._ac1[1]], dtype=np.int64),
            mf, cfg.cordic_iterations,
        )
        mag2, ang2, _ = cordic_polar_arrays(
            np.array([self._ac2[0]], dtype=np.int64),
            np.array([self._ac2[1]], dtype=np.int64),
            mf, cfg.cordic_iterations,
        )

        return FixedSnapshot(
            n=self._n,
            cfg=cfg,
            ac1_re=self._ac1[0],
            ac1_im=self._ac1[1],
            ac2_re=self._ac2[0],
            ac2_im=self._ac2[1],
            ene_raw=self._ene,
            ac1_mag_raw=int(mag1[0]),
            ac2_mag_raw=int(mag2[0]),
            ac1_angle=float(ang1[0]),
            ac2_angle=float(ang2[0]),
            c2_mag_raw=c2_mag,
            xcr_raw=xcr,
        )


def datapath_step(state: DatapathState, r_n: complex) -> FixedSnapshot:
    """One fixed-point pipeline step; see DatapathState."""
    return state.step(r_n)


@dataclass(frozen=True)
class BitwidthReport:
    """Analytic storage accounting for the two correlator circuits."""

    depth: int
    fx: int
    direct_delay_word: int
    transpose_delay_word: int
    direct_delay_bits: int
    transpose_delay_bits: int
    adder_level_words: tuple[int, ...]

    def lines(self) -> list[str]:
        rows = [
            f"template depth D = {self.depth}",
            f"direct-form delay word: {self.direct_delay_word} bits",
            f"transpose-form delay word: {self.transpose_delay_word} bits",
            f"direct-form delay storage: {self.direct_delay_bits} bits",
            f"transpose-form delay storage: {self.transpose_delay_bits} bits",
        ]
        for level, wordw in enumerate(self.adder_level_words, start=1):
            rows.append(f"adder tree level {level}: {wordw}-bit words")
        return rows


def bitwidth_report(
    template: PreambleTemplate, cfg: WordLengthConfig
) -> BitwidthReport:
    """Word-growth accounting: direct-form delay words are 2+fx bits against
    the transpose form's 8+fx, and adder level ii uses 2+ii+fx bits."""
    depth = template.depth
    direct_word = 2 + cfg.fx
    transpose_word = 8 + cfg.fx
    levels = max(1, math.ceil(math.log2(max(depth, 2))))
    report = BitwidthReport(
        depth=depth,
        fx=cfg.fx,
        direct_delay_word=direct_word,
        transpose_delay_word=transpose_word,
        direct_delay_bits=depth * direct_word,
        transpose_delay_bits=depth * transpose_word,
        adder_level_words=tuple(2 + ii + cfg.fx for ii in range(1, levels + 1)),
    )
    if report.direct_delay_bits >= report.transpose_delay_bits:
        raise AssertionError("direct-form storage must undercut the transpose form")
    return report
