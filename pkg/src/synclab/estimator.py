"""Preamble synchronization: detection, timing, and fractional CFO.

The flow over a received stream r[n]:

1. detect   — the plateau test |AC1(n)| + |AC2(n)| > ENE(n) must hold for
              m_consec consecutive samples.
2. timing   — n_hat = argmax of XCR over a delta-sample window from the
              detection index; the template-derived alignment offset
              converts the peak position into the preamble start estimate.
3. CFO      — phi1 = -angle(AC1) at the symbol-1 aligned instant,
              phi2 = -angle(AC2(t1) + AC2(t2)) combining both symbols;
              eps_hat = phi2/pi, shifted by +-2 when phi1 indicates the
              offset left the +-1 range that wraps phi2.

The same flow runs over the floating-point metrics (mode "float") or the
fixed-point datapath words (mode "fixed"); fixed mode scales the stream
by RX_BACKOFF before quantizing and takes magnitudes and angles from the
CORDIC outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .datapath import RX_BACKOFF, WordLengthConfig, run_datapath
from .metrics import metric_arrays
from .numerics import cordic_polar_arrays
from .preamble import PhyParams, PreambleTemplate, default_template

_HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class SyncConfig:
    """Detection/search knobs; defaults follow the 4x-oversampled system."""

    m_consec: int = 32  # 8 * oversampling
    delta: int = 224  # 56 * oversampling
    mode: str = "float"

    def __post_init__(self) -> None:
        if self.m_consec < 1:
            raise ValueError("m_consec must be >= 1")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.mode not in ("float", "fixed"):
            raise ValueError("mode must be 'float' or 'fixed'")

    @classmethod
    def for_params(cls, params: PhyParams, mode: str = "float") -> "SyncConfig":
        return cls(
            m_consec=8 * params.oversampling,
            delta=56 * params.oversampling,
            mode=mode,
        )


@dataclass(frozen=True)
class SyncResult:
    """Outcome of one synchronization run.

    ``cfo_hat_ac1`` and ``cfo_hat_ac2`` are the single-metric estimates
    (2*phi1/pi and the symbol-1 phi2/pi) kept for accuracy comparisons;
    ``last_sample_consumed`` is the largest stream index the decision
    depended on.
    """

    detected: bool
    detect_index: int = -1
    sto_hat: int = -1
    cfo_hat: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    cfo_hat_ac1: float = 0.0
    cfo_hat_ac2: float = 0.0
    last_sample_consumed: int = -1


def detect(condition: Sequence[bool], cfg: SyncConfig) -> Optional[int]:
    """First index at which the detection condition has held for exactly
    m_consec consecutive samples; the run counter resets on any miss."""
    count = 0
    for n, ok in enumerate(condition):
        if ok:
            count += 1
            if count == cfg.m_consec:
                return n
        else:
            count = 0
    return None


def _detect_array(condition: np.ndarray, cfg: SyncConfig) -> Optional[int]:
    """detect() vectorized: windowed all-true test over m_consec samples."""
    m = cfg.m_consec
    if len(condition) < m:
        return None
    runs = np.convolve(condition.astype(np.int64), np.ones(m, dtype=np.int64))[
        : len(condition)
    ]
    hits = np.flatnonzero(runs == m)
    return int(hits[0]) if len(hits) else None


def estimate_sto(
    xcr: np.ndarray, detect_index: int, cfg: SyncConfig
) -> int:
    """Index of the XCR maximum over the delta window starting at the
    detection index; ties resolve to the earliest index."""
    window = np.asarray(xcr)[detect_index : detect_index + cfg.delta]
    if len(window) == 0:
        return detect_index
    return detect_index + int(np.argmax(window))


def estimate_cfo(phi1: float, phi2: float) -> float:
    """Wide-range fractional CFO from the two metric angles.

    phi2/pi reads the offset modulo 2; phi1 (whose range covers +-2)
    selects the +-2 correction.  The result is folded into (-2, 2], and
    when the wrap leaves two admissible values the one nearer the coarse
    single-metric estimate 2*phi1/pi wins.
    """
    base = phi2 / np.pi
    if -_HALF_PI < phi1 < _HALF_PI:
        est = base
    elif phi1 >= _HALF_PI:
        est = base + 2.0
    else:
        est = base - 2.0

    coarse = 2.0 * phi1 / np.pi
    best = None
    for cand in (est, est - 2.0, est + 2.0):
        if -2.0 < cand <= 2.0:
            if best is None or abs(cand - coarse) < abs(best - coarse):
                best = cand
    return float(best)


def synchronize(
    stream: np.ndarray,
    template: PreambleTemplate | None = None,
    params: PhyParams | None = None,
    word_cfg: WordLengthConfig | None = None,
    sync_cfg: SyncConfig | None = None,
) -> SyncResult:
    """Run the full synchronization flow over one stream.

    The decision depends on no sample beyond max(detection window end,
    symbol-2 aligned instant); truncating the stream there reproduces the
    identical result.
    """
    stream = np.asarray(stream, dtype=np.complex128)
    params = params or PhyParams()
    template = template or default_template(params)
    sync_cfg = sync_cfg or SyncConfig.for_params(params)
    n_samples = len(stream)

    fixed = None
    if sync_cfg.mode == "fixed":
        word_cfg = word_cfg or WordLengthConfig()
        fixed = run_datapath(stream * RX_BACKOFF, template, params, word_cfg)
        condition = fixed.detection_condition()
        xcr = fixed.xcr
    else:
        arrays = metric_arrays(stream, template, params)
        condition = arrays.detection_condition()
        xcr = arrays.xcr

    detect_index = _detect_array(np.asarray(condition), sync_cfg)
    if detect_index is None:
        return SyncResult(detected=False, last_sample_consumed=n_samples - 1)

    peak = estimate_sto(xcr, detect_index, sync_cfg)
    sto_hat = peak - template.alignment_index

    t1 = sto_hat + params.cp_len + params.fft_len - 1
    t2 = t1 + params.symbol_len
    t1 = min(max(t1, 0), n_samples - 1)
    t2 = min(max(t2, 0), n_samples - 1)

    if fixed is not None:
        phi1 = -float(fixed.ac1_angle[t1])
        sum_re = np.array([fixed.ac2_re[t1] + fixed.ac2_re[t2]], dtype=np.int64)
        sum_im = np.array([fixed.ac2_im[t1] + fixed.ac2_im[t2]], dtype=np.int64)
        _, ang, _ = cordic_polar_arrays(
            sum_re, sum_im, word_cfg.metric_fmt, word_cfg.cordic_iterations
        )
        phi2 = -float(ang[0])
        phi2_sym1 = -float(fixed.ac2_angle[t1])
    else:
        phi1 = -float(np.angle(arrays.ac1[t1]))
        phi2 = -float(np.angle(arrays.ac2[t1] + arrays.ac2[t2]))
        phi2_sym1 = -float(np.angle(arrays.ac2[t1]))

    window_end = min(detect_index + sync_cfg.delta, n_samples) - 1
    return SyncResult(
        detected=True,
        detect_index=detect_index,
        sto_hat=sto_hat,
        cfo_hat=estimate_cfo(phi1, phi2),
        phi1=phi1,
        phi2=phi2,
        cfo_hat_ac1=2.0 * phi1 / np.pi,
        cfo_hat_ac2=phi2_sym1 / np.pi,
        last_sample_consumed=max(window_end, t2),
    )
