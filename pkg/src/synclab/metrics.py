"""Floating-point reference implementation of the correlation metrics.

For a received stream r[n], with L the repeated-part length of symbol 1:

* instant products   c1(m,n) = r*[n-m] r[n-m-L],  c2(m,n) = r*[n-m] r[n-m-2L],
  instant energy     ee(m,n) = |r[n-m]|^2
* windowed metrics   AC1/AC2/ENE sum the instant values over m = 0..2L-1
* energy correlator  XCR(n) = sum_m |c2(m,n)| a[m] over the template depth

Three evaluation routes cover the same definitions: ``metrics_direct``
(windowed sums written out, the oracle), ``MetricState`` (recursive
update, newest product in, the product from 2L samples ago out), and
``metric_arrays`` (vectorized over a whole stream, what the Monte Carlo
harness runs).  Indices before the start of the stream count as zeros, so
warm-up values are partially filled sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preamble import PhyParams, PreambleTemplate, default_template


@dataclass(frozen=True)
class MetricSnapshot:
    """Metric values at one sample index."""

    n: int
    ac1: complex
    ac2: complex
    ene: float
    xcr: float

    @property
    def ac1_mag(self) -> float:
        return abs(self.ac1)

    @property
    def ac2_mag(self) -> float:
        return abs(self.ac2)

    @property
    def ac1_angle(self) -> float:
        return float(np.angle(self.ac1))

    @property
    def ac2_angle(self) -> float:
        return float(np.angle(self.ac2))

    @property
    def detection(self) -> bool:
        """Autocorrelation plateau test: |AC1| + |AC2| > ENE."""
        return self.ac1_mag + self.ac2_mag > self.ene


def inst_products(
    window: np.ndarray, lag: int | None = None
) -> tuple[complex, complex, float]:
    """Instant products from a newest-first history window.

    ``window[0]`` is r[n], ``window[lag]`` is r[n-L], ``window[2*lag]`` is
    r[n-2L]; a window of length 2L+1 (or 4L) implies the lag.  Returns
    (c1, c2, ee).
    """
    if lag is None:
        lag = (len(window) - 1) // 2
    if lag < 1 or len(window) <= 2 * lag:
        raise ValueError("window must reach back two lags")
    newest = complex(window[0])
    c1 = newest.conjugate() * complex(window[lag])
    c2 = newest.conjugate() * complex(window[2 * lag])
    ee = newest.real * newest.real + newest.imag * newest.imag
    return c1, c2, ee


def _history(r: np.ndarray, n: int, depth: int) -> np.ndarray:
    """r[n], r[n-1], ... r[n-depth+1], zeros before the stream start."""
    idx = n - np.arange(depth)
    vals = np.where(idx >= 0, r[np.clip(idx, 0, None)], 0.0 + 0.0j)
    return vals


def metrics_direct(
    r: np.ndarray,
    n: int,
    params: PhyParams,
    template: PreambleTemplate | None = None,
) -> MetricSnapshot:
    """Windowed sums evaluated exactly as defined. Oracle for the recursive
    and vectorized routes.

    Requires n >= 4L - 1 so the AC2 window has full history.  Without an
    explicit template the default seeded one for these params is used.
    """
    template = template or default_template(params)
    l_len = params.part_len
    win = 2 * l_len
    if n < 4 * l_len - 1:
        raise ValueError(f"insufficient history: n={n} < {4 * l_len - 1}")
    if n >= len(r):
        raise ValueError("index beyond stream end")

    h = _history(r, n, 4 * l_len)
    c1 = np.conj(h[:win]) * h[l_len : l_len + win]
    c2 = np.conj(h[:win]) * h[2 * l_len : 2 * l_len + win]
    ee = h[:win].real ** 2 + h[:win].imag ** 2

    hist_c2 = np.abs(np.conj(_history(r, n, template.depth))
                     * _history(r, n - 2 * l_len, template.depth))
    xcr = float(np.dot(template.taps, hist_c2))
    return MetricSnapshot(
        n=n,
        ac1=complex(np.sum(c1)),
        ac2=complex(np.sum(c2)),
        ene=float(np.sum(ee)),
        xcr=xcr,
    )


class _Kahan:
    """Compensated accumulator so the recursive metrics do not drift."""

    __slots__ = ("total", "_comp")

    def __init__(self) -> None:
        self.total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        y = x - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


class MetricState:
    """Streaming recursive metric evaluator.

    Keeps the shared receive delay line (depth 4L), one product line per
    metric (depth 2L), and a |c2| history for the energy correlator.  Each
    ``step`` adds the newest instant product and retires the one from 2L
    samples ago, exactly the update the hardware accumulators perform.
    """

    def __init__(
        self, params: PhyParams, template: PreambleTemplate | None = None
    ) -> None:
        template = template or default_template(params)
        self._lag = params.part_len
        self._win = 2 * params.part_len
        self._rx = np.zeros(4 * params.part_len, dtype=np.complex128)
        self._c1_line = np.zeros(self._win, dtype=np.complex128)
        self._c2_line = np.zeros(self._win, dtype=np.complex128)
        self._ee_line = np.zeros(self._win, dtype=np.float64)
        self._c2_mag = np.zeros(template.depth, dtype=np.float64)
        self._taps = template.taps
        self._ac1_re = _Kahan()
        self._ac1_im = _Kahan()
        self._ac2_re = _Kahan()
        self._ac2_im = _Kahan()
        self._ene = _Kahan()
        self._n = -1

    def step(self, r_n: complex) -> MetricSnapshot:
        self._n += 1
        self._rx[1:] = self._rx[:-1]
        self._rx[0] = r_n

        c1, c2, ee = inst_products(self._rx, self._lag)

        out1 = complex(self._c1_line[-1])
        out2 = complex(self._c2_line[-1])
        out_e = float(self._ee_line[-1])
        for line, value in (
            (self._c1_line, c1),
            (self._c2_line, c2),
        ):
            line[1:] = line[:-1]
            line[0] = value
        self._ee_line[1:] = self._ee_line[:-1]
        self._ee_line[0] = ee

        self._ac1_re.add(c1.real)
        self._ac1_re.add(-out1.real)
        self._ac1_im.add(c1.imag)
        self._ac1_im.add(-out1.imag)
        self._ac2_re.add(c2.real)
        self._ac2_re.add(-out2.real)
        self._ac2_im.add(c2.imag)
        self._ac2_im.add(-out2.imag)
        self._ene.add(ee)
        self._ene.add(-out_e)

        self._c2_mag[1:] = self._c2_mag[:-1]
        self._c2_mag[0] = abs(c2)
        xcr = float(np.dot(self._taps, self._c2_mag))

        return MetricSnapshot(
            n=self._n,
            ac1=complex(self._ac1_re.total, self._ac1_im.total),
            ac2=complex(self._ac2_re.total, self._ac2_im.total),
            ene=self._ene.total,
            xcr=xcr,
        )


def metrics_recursive_step(state: MetricState, r_n: complex) -> MetricSnapshot:
    """One recursive update; equivalent to ``metrics_direct`` at the same index."""
    return state.step(r_n)


def xcr_reference(c2_mag_history: np.ndarray, template: PreambleTemplate) -> float:
    """Energy correlation as a plain weighted sum.

    ``c2_mag_history[0]`` is the newest |c2|; needs at least ``depth`` entries.
    """
    hist = np.asarray(c2_mag_history, dtype=np.float64)
    if len(hist) < template.depth:
        raise ValueError("history shorter than the template depth")
    return float(np.dot(template.taps, hist[: template.depth]))


def _delayed(r: np.ndarray, delay: int) -> np.ndarray:
    out = np.zeros_like(r)
    if delay < len(r):
        out[delay:] = r[: len(r) - delay]
    return out


@dataclass
class MetricArrays:
    """Whole-stream metric evaluation (the fast route for Monte Carlo runs)."""

    ac1: np.ndarray
    ac2: np.ndarray
    ene: np.ndarray
    xcr: np.ndarray

    def detection_condition(self) -> np.ndarray:
        return (np.abs(self.ac1) + np.abs(self.ac2)) > self.ene


def metric_arrays(
    r: np.ndarray, template: PreambleTemplate, params: PhyParams
) -> MetricArrays:
    """Evaluate every metric at every index of a stream.

    Same definitions as ``metrics_direct`` with zeros assumed before the
    stream start; windowed sums via convolution with a rectangular kernel.
    """
    r = np.asarray(r, dtype=np.complex128)
    l_len = params.part_len
    win = 2 * l_len
    n = len(r)

    c1 = np.conj(r) * _delayed(r, l_len)
    c2 = np.conj(r) * _delayed(r, 2 * l_len)
    ee = r.real ** 2 + r.imag ** 2

    kernel = np.ones(win)
    ac1 = np.convolve(c1, kernel)[:n]
    ac2 = np.convolve(c2, kernel)[:n]
    ene = np.convolve(ee, kernel)[:n]
    xcr = np.convolve(np.abs(c2), template.taps)[:n]
    return MetricArrays(ac1=ac1, ac2=ac2, ene=ene, xcr=xcr)
